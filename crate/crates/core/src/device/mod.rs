//! Platforms, devices and their calibration data.

pub mod generate;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::GateKind;
use crate::error::{Error, Result};

/// Hardware vendor families. Each fixes a native gate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Ibm,
    Rigetti,
    Ionq,
    Oqc,
}

/// Single-qubit Euler chain used to express arbitrary 1q unitaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EulerBasis {
    /// rz · sx · rz · sx · rz
    ZSx,
    /// rz · rx · rz
    Zxz,
    /// rz · ry · rz
    Zyz,
}

impl EulerBasis {
    pub fn gates(self) -> &'static [GateKind] {
        match self {
            EulerBasis::ZSx => &[GateKind::Rz, GateKind::Sx, GateKind::X],
            EulerBasis::Zxz => &[GateKind::Rz, GateKind::Rx],
            EulerBasis::Zyz => &[GateKind::Rz, GateKind::Ry],
        }
    }
}

impl Platform {
    pub const ALL: [Platform; 4] = [
        Platform::Ibm,
        Platform::Rigetti,
        Platform::Ionq,
        Platform::Oqc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Platform::Ibm => "ibm",
            Platform::Rigetti => "rigetti",
            Platform::Ionq => "ionq",
            Platform::Oqc => "oqc",
        }
    }

    pub fn native_gates(self) -> &'static [GateKind] {
        use GateKind::*;
        match self {
            Platform::Ibm | Platform::Oqc => &[Rz, Sx, X, Cx],
            Platform::Rigetti => &[Rx, Rz, Cz],
            Platform::Ionq => &[Rx, Ry, Rz, Rxx],
        }
    }

    pub fn is_native(self, kind: GateKind) -> bool {
        self.native_gates().contains(&kind)
    }

    /// The platform's entangling gate.
    pub fn native_2q(self) -> GateKind {
        match self {
            Platform::Ibm | Platform::Oqc => GateKind::Cx,
            Platform::Rigetti => GateKind::Cz,
            Platform::Ionq => GateKind::Rxx,
        }
    }

    pub fn euler_basis(self) -> EulerBasis {
        match self {
            Platform::Ibm | Platform::Oqc => EulerBasis::ZSx,
            Platform::Rigetti => EulerBasis::Zxz,
            Platform::Ionq => EulerBasis::Zyz,
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Platform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Platform::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Device {
                device: String::new(),
                msg: format!("unknown platform `{s}`"),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    AllToAll,
    Edges(Vec<(usize, usize)>),
}

/// Per-gate fidelities. Edge keys are stored as `(min, max)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationData {
    pub one_q: BTreeMap<(usize, GateKind), f64>,
    pub two_q: BTreeMap<((usize, usize), GateKind), f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub name: String,
    pub platform: Platform,
    pub num_qubits: usize,
    pub coupling: Coupling,
    pub calibration: CalibrationData,
    adjacency: Vec<Vec<usize>>,
    distances: Vec<Vec<u32>>,
}

/// One-line description used by `devices list`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceSummary {
    pub name: String,
    pub platform: Platform,
    pub num_qubits: usize,
    /// `None` for all-to-all devices.
    pub num_edges: Option<usize>,
}

impl Device {
    /// Builds and validates a device.
    pub fn new(
        name: impl Into<String>,
        platform: Platform,
        num_qubits: usize,
        coupling: Coupling,
        calibration: CalibrationData,
    ) -> Result<Self> {
        let name = name.into();
        let err = |msg: String| Error::Device {
            device: name.clone(),
            msg,
        };
        if num_qubits == 0 {
            return Err(err("device has no qubits".into()));
        }
        let mut adjacency = vec![Vec::new(); num_qubits];
        let coupling = match coupling {
            Coupling::AllToAll => {
                for (a, adj) in adjacency.iter_mut().enumerate() {
                    adj.extend((0..num_qubits).filter(|&b| b != a));
                }
                Coupling::AllToAll
            }
            Coupling::Edges(edges) => {
                let mut set = BTreeSet::new();
                for &(a, b) in &edges {
                    if a >= num_qubits || b >= num_qubits || a == b {
                        return Err(err(format!("invalid coupling edge ({a}, {b})")));
                    }
                    set.insert((a.min(b), a.max(b)));
                }
                for &(a, b) in &set {
                    adjacency[a].push(b);
                    adjacency[b].push(a);
                }
                for adj in &mut adjacency {
                    adj.sort_unstable();
                }
                Coupling::Edges(set.into_iter().collect())
            }
        };
        let distances = bfs_all_pairs(&adjacency);
        if distances.iter().any(|row| row.contains(&u32::MAX)) {
            return Err(err("coupling graph is disconnected".into()));
        }
        let device = Self {
            name,
            platform,
            num_qubits,
            coupling,
            calibration,
            adjacency,
            distances,
        };
        device.validate_calibration()?;
        Ok(device)
    }

    fn validate_calibration(&self) -> Result<()> {
        let err = |msg: String| Error::Device {
            device: self.name.clone(),
            msg,
        };
        let cal = &self.calibration;
        for (&(q, kind), &f) in &cal.one_q {
            if !(f > 0.0 && f <= 1.0) {
                return Err(err(format!(
                    "fidelity {f} for {kind} on {q} outside (0, 1]"
                )));
            }
        }
        for (&((a, b), kind), &f) in &cal.two_q {
            if !(f > 0.0 && f <= 1.0) {
                return Err(err(format!(
                    "fidelity {f} for {kind} on {a}-{b} outside (0, 1]"
                )));
            }
        }
        for &kind in self.platform.native_gates() {
            if kind.arity() == 1 {
                for q in 0..self.num_qubits {
                    if !cal.one_q.contains_key(&(q, kind)) {
                        return Err(err(format!("missing calibration for {kind} on qubit {q}")));
                    }
                }
            } else {
                for (a, b) in self.edges() {
                    if !cal.two_q.contains_key(&((a, b), kind)) {
                        return Err(err(format!(
                            "missing calibration for {kind} on edge {a}-{b}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_all_to_all(&self) -> bool {
        matches!(self.coupling, Coupling::AllToAll)
    }

    /// Coupled pairs as `(min, max)`, ascending. All pairs for all-to-all.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        match &self.coupling {
            Coupling::Edges(e) => e.clone(),
            Coupling::AllToAll => (0..self.num_qubits)
                .flat_map(|a| (a + 1..self.num_qubits).map(move |b| (a, b)))
                .collect(),
        }
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    pub fn degree(&self, q: usize) -> usize {
        self.adjacency[q].len()
    }

    pub fn is_coupled(&self, a: usize, b: usize) -> bool {
        a != b && a < self.num_qubits && b < self.num_qubits && self.distances[a][b] == 1
    }

    pub fn distance(&self, a: usize, b: usize) -> u32 {
        self.distances[a][b]
    }

    /// Hop-count matrix.
    pub fn all_pairs_distance(&self) -> &[Vec<u32>] {
        &self.distances
    }

    /// One shortest path from `a` to `b`, inclusive, preferring low indices.
    pub fn shortest_path(&self, a: usize, b: usize) -> Vec<usize> {
        let mut path = vec![a];
        let mut cur = a;
        while cur != b {
            cur = *self.adjacency[cur]
                .iter()
                .find(|&&n| self.distances[n][b] + 1 == self.distances[cur][b])
                .expect("connected graph");
            path.push(cur);
        }
        path
    }

    pub fn fidelity_1q(&self, q: usize, kind: GateKind) -> Option<f64> {
        self.calibration.one_q.get(&(q, kind)).copied()
    }

    pub fn fidelity_2q(&self, a: usize, b: usize, kind: GateKind) -> Option<f64> {
        self.calibration
            .two_q
            .get(&((a.min(b), a.max(b)), kind))
            .copied()
    }

    pub fn summary(&self) -> DeviceSummary {
        DeviceSummary {
            name: self.name.clone(),
            platform: self.platform,
            num_qubits: self.num_qubits,
            num_edges: match &self.coupling {
                Coupling::AllToAll => None,
                Coupling::Edges(e) => Some(e.len()),
            },
        }
    }

    pub fn to_json(&self) -> String {
        let file = DeviceFile::from(self);
        let mut text = serde_json::to_string_pretty(&file).expect("device serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DeviceFile = serde_json::from_str(text)?;
        file.into_device()
    }
}

fn bfs_all_pairs(adjacency: &[Vec<usize>]) -> Vec<Vec<u32>> {
    let n = adjacency.len();
    (0..n)
        .map(|src| {
            let mut dist = vec![u32::MAX; n];
            dist[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                for &v in &adjacency[u] {
                    if dist[v] == u32::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            dist
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum CouplingField {
    Edges(Vec<[usize; 2]>),
    Tag(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationFile {
    one_q: BTreeMap<String, BTreeMap<String, f64>>,
    two_q: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceFile {
    name: String,
    platform: Platform,
    num_qubits: usize,
    coupling: CouplingField,
    native_gates: Vec<GateKind>,
    calibration: CalibrationFile,
}

impl From<&Device> for DeviceFile {
    fn from(d: &Device) -> Self {
        let mut one_q: BTreeMap<usize, BTreeMap<String, f64>> = BTreeMap::new();
        for (&(q, kind), &f) in &d.calibration.one_q {
            one_q.entry(q).or_default().insert(kind.name().into(), f);
        }
        let mut two_q: BTreeMap<(usize, usize), BTreeMap<String, f64>> = BTreeMap::new();
        for (&(e, kind), &f) in &d.calibration.two_q {
            two_q.entry(e).or_default().insert(kind.name().into(), f);
        }
        DeviceFile {
            name: d.name.clone(),
            platform: d.platform,
            num_qubits: d.num_qubits,
            coupling: match &d.coupling {
                Coupling::AllToAll => CouplingField::Tag("all".into()),
                Coupling::Edges(e) => {
                    CouplingField::Edges(e.iter().map(|&(a, b)| [a, b]).collect())
                }
            },
            native_gates: d.platform.native_gates().to_vec(),
            calibration: CalibrationFile {
                one_q: one_q.into_iter().map(|(q, m)| (q.to_string(), m)).collect(),
                two_q: two_q
                    .into_iter()
                    .map(|((a, b), m)| (format!("{a}-{b}"), m))
                    .collect(),
            },
        }
    }
}

impl DeviceFile {
    fn into_device(self) -> Result<Device> {
        let name = self.name.clone();
        let err = |msg: String| Error::Device {
            device: name.clone(),
            msg,
        };
        let coupling = match self.coupling {
            CouplingField::Tag(t) if t == "all" => Coupling::AllToAll,
            CouplingField::Tag(t) => return Err(err(format!("unknown coupling tag `{t}`"))),
            CouplingField::Edges(e) => {
                Coupling::Edges(e.into_iter().map(|[a, b]| (a, b)).collect())
            }
        };
        let declared: BTreeSet<GateKind> = self.native_gates.iter().copied().collect();
        let expected: BTreeSet<GateKind> = self.platform.native_gates().iter().copied().collect();
        if declared != expected {
            return Err(err(format!(
                "native gates {declared:?} do not match platform {} ({expected:?})",
                self.platform
            )));
        }
        let mut calibration = CalibrationData::default();
        for (q, gates) in self.calibration.one_q {
            let q: usize = q
                .parse()
                .map_err(|_| err(format!("invalid qubit key `{q}`")))?;
            for (g, f) in gates {
                calibration.one_q.insert((q, g.parse()?), f);
            }
        }
        for (edge, gates) in self.calibration.two_q {
            let parsed = edge
                .split_once('-')
                .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)));
            let Some((a, b)) = parsed else {
                return Err(err(format!("invalid edge key `{edge}`")));
            };
            if a >= b {
                return Err(err(format!("edge key `{edge}` must be in min-max order")));
            }
            for (g, f) in gates {
                calibration.two_q.insert(((a, b), g.parse()?), f);
            }
        }
        Device::new(
            self.name,
            self.platform,
            self.num_qubits,
            coupling,
            calibration,
        )
    }
}

pub fn load_device(path: impl AsRef<Path>) -> Result<Device> {
    let text = std::fs::read_to_string(path.as_ref())?;
    Device::from_json(&text)
}

/// Devices found in a directory, name-sorted, plus per-file failures.
#[derive(Debug, Default)]
pub struct Registry {
    pub devices: Vec<Device>,
    pub warnings: Vec<(PathBuf, Error)>,
}

impl Registry {
    pub fn get(&self, name: &str) -> Option<&Device> {
        self.devices.iter().find(|d| d.name == name)
    }

    pub fn summaries(&self) -> Vec<DeviceSummary> {
        self.devices.iter().map(Device::summary).collect()
    }
}

/// Loads every `*.json` file directly inside `dir`.
pub fn list_devices(dir: impl AsRef<Path>) -> Result<Registry> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut registry = Registry::default();
    for path in paths {
        match load_device(&path) {
            Ok(d) => registry.devices.push(d),
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                registry.warnings.push((path, e));
            }
        }
    }
    registry.devices.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(registry)
}

/// Directory holding the shipped device files.
pub fn default_registry_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/devices"))
}

/// Directory holding small reference devices that are not part of the
/// registry (e.g. `toy_line3`).
pub fn toy_device_dir() -> PathBuf {
    default_registry_dir().join("toy")
}

/// Looks a device up by name in the registry and the toy directory, or
/// loads it from a path.
pub fn resolve_device(name_or_path: &str, registry_dir: &Path) -> Result<Device> {
    let as_path = Path::new(name_or_path);
    if as_path.extension().is_some_and(|x| x == "json") && as_path.is_file() {
        return load_device(as_path);
    }
    for dir in [
        registry_dir.to_path_buf(),
        registry_dir.join("toy"),
        toy_device_dir(),
    ] {
        let candidate = dir.join(format!("{name_or_path}.json"));
        if candidate.is_file() {
            return load_device(candidate);
        }
    }
    Err(Error::Device {
        device: name_or_path.to_string(),
        msg: "no such device in the registry".into(),
    })
}
