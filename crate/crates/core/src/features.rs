//! Observation features and terminal rewards.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::device::Device;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "qubits,depth,prog_comm,crit_depth,ent_ratio,parallelism,liveness";

/// Scale applied to the qubit count before it reaches the policy.
pub const QUBIT_SCALE: f64 = 128.0;
/// Scale applied to the depth before it reaches the policy.
pub const DEPTH_SCALE: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub num_qubits: usize,
    pub depth: usize,
    pub program_communication: f64,
    pub critical_depth: f64,
    pub entanglement_ratio: f64,
    pub parallelism: f64,
    pub liveness: f64,
}

impl FeatureVector {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.num_qubits,
            self.depth,
            self.program_communication,
            self.critical_depth,
            self.entanglement_ratio,
            self.parallelism,
            self.liveness
        )
    }

    /// The seven entries as the policy sees them, all within [0, 1].
    pub fn scaled(&self) -> [f64; 7] {
        [
            (self.num_qubits as f64 / QUBIT_SCALE).min(1.0),
            (self.depth as f64 / DEPTH_SCALE).min(1.0),
            self.program_communication,
            self.critical_depth,
            self.entanglement_ratio,
            self.parallelism,
            self.liveness,
        ]
    }
}

/// Gate-count length and two-qubit count of the heaviest longest
/// dependency path: longest by gate count, most two-qubit gates on ties.
pub fn longest_path(c: &Circuit) -> (usize, usize) {
    let mut last: Vec<Option<usize>> = vec![None; c.num_qubits];
    let mut best: Vec<(usize, usize)> = Vec::with_capacity(c.gates.len());
    let mut overall = (0, 0);
    for g in &c.gates {
        let prev = g
            .qubits
            .iter()
            .filter_map(|&q| last[q].map(|i| best[i]))
            .max()
            .unwrap_or((0, 0));
        let here = (prev.0 + 1, prev.1 + usize::from(g.is_two_qubit()));
        for &q in &g.qubits {
            last[q] = Some(best.len());
        }
        best.push(here);
        overall = overall.max(here);
    }
    overall
}

/// Qubits the features are normalized by: the touched, placed or permuted
/// wires once a layout exists, the whole register otherwise.
fn feature_width(c: &Circuit) -> usize {
    if c.has_layout() {
        c.active_qubits().len()
    } else {
        c.num_qubits
    }
}

pub fn extract_features(c: &Circuit) -> FeatureVector {
    let n = feature_width(c);
    let depth = c.depth();
    let gates = c.len();
    let two_q = c.two_qubit_count();

    let graph = c.interaction_graph();
    let degree_sum: usize = 2 * graph.edges.len();
    let program_communication = if n < 2 {
        0.0
    } else {
        degree_sum as f64 / (n * (n - 1)) as f64
    };
    let entanglement_ratio = if gates == 0 {
        0.0
    } else {
        two_q as f64 / gates as f64
    };
    let critical_depth = if two_q == 0 {
        0.0
    } else {
        longest_path(c).1 as f64 / two_q as f64
    };
    let parallelism = if depth == 0 || n < 2 {
        0.0
    } else {
        ((gates as f64 / depth as f64 - 1.0) / (n - 1) as f64).clamp(0.0, 1.0)
    };
    let occupied: usize = c.gates.iter().map(|g| g.arity()).sum();
    let liveness = if depth == 0 || n == 0 {
        0.0
    } else {
        occupied as f64 / (n * depth) as f64
    };
    FeatureVector {
        num_qubits: n,
        depth,
        program_communication: program_communication.min(1.0),
        critical_depth,
        entanglement_ratio,
        parallelism,
        liveness: liveness.min(1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    Fidelity,
    CriticalDepth,
    Combination,
}

impl RewardKind {
    pub const ALL: [RewardKind; 3] = [
        RewardKind::Fidelity,
        RewardKind::CriticalDepth,
        RewardKind::Combination,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RewardKind::Fidelity => "fidelity",
            RewardKind::CriticalDepth => "critical_depth",
            RewardKind::Combination => "combination",
        }
    }

    pub fn evaluate(self, c: &Circuit, d: &Device) -> Result<f64> {
        match self {
            RewardKind::Fidelity => reward_fidelity(c, d),
            RewardKind::CriticalDepth => Ok(reward_critical_depth(c)),
            RewardKind::Combination => reward_combination(c, d),
        }
    }
}

impl fmt::Display for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RewardKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RewardKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidCircuit(format!("unknown reward `{s}`")))
    }
}

/// Product of the calibrated fidelities of every gate.
pub fn reward_fidelity(c: &Circuit, d: &Device) -> Result<f64> {
    let mut f = 1.0;
    for g in &c.gates {
        let entry = match *g.qubits.as_slice() {
            [q] if q < d.num_qubits => d.fidelity_1q(q, g.kind),
            [a, b] if d.is_coupled(a, b) => d.fidelity_2q(a, b, g.kind),
            _ => None,
        };
        f *= entry.ok_or_else(|| Error::NotExecutable {
            gate: g.kind.to_string(),
            qubits: g.qubits.clone(),
            device: d.name.clone(),
        })?;
    }
    Ok(f)
}

/// `1 − critical depth`.
pub fn reward_critical_depth(c: &Circuit) -> f64 {
    1.0 - extract_features(c).critical_depth
}

pub fn reward_combination(c: &Circuit, d: &Device) -> Result<f64> {
    Ok((reward_fidelity(c, d)? + reward_critical_depth(c)) / 2.0)
}
