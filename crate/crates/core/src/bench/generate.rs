use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{emit_qasm, Circuit, Gate, GateKind};
use crate::error::{Error, Result};

pub const MIN_QUBITS: usize = 2;
pub const MAX_QUBITS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ghz,
    Qft,
    Random,
    Ansatz,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Ghz, Family::Qft, Family::Random, Family::Ansatz];

    pub fn name(self) -> &'static str {
        match self {
            Family::Ghz => "ghz",
            Family::Qft => "qft",
            Family::Random => "random",
            Family::Ansatz => "ansatz",
        }
    }

    /// Layers for `random`, repetitions for `ansatz`.
    pub fn default_depth(self) -> usize {
        match self {
            Family::Random => 10,
            Family::Ansatz => 2,
            Family::Ghz | Family::Qft => 0,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidCircuit(format!("unknown benchmark family `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub family: Family,
    pub num_qubits: usize,
    pub seed: u64,
    pub depth: usize,
}

impl BenchmarkSpec {
    pub fn new(family: Family, num_qubits: usize, seed: u64) -> Self {
        BenchmarkSpec {
            family,
            num_qubits,
            seed,
            depth: family.default_depth(),
        }
    }

    pub fn name(&self) -> String {
        match self.family {
            Family::Ghz | Family::Qft => format!("{}_{}", self.family, self.num_qubits),
            Family::Random | Family::Ansatz => {
                format!(
                    "{}_{}_d{}_s{}",
                    self.family, self.num_qubits, self.depth, self.seed
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub name: String,
    pub family: Family,
    pub circuit: Circuit,
}

pub fn generate(spec: &BenchmarkSpec) -> Result<Benchmark> {
    let n = spec.num_qubits;
    if !(MIN_QUBITS..=MAX_QUBITS).contains(&n) {
        return Err(Error::InvalidCircuit(format!(
            "benchmark size {n} outside {MIN_QUBITS}..={MAX_QUBITS}"
        )));
    }
    let circuit = match spec.family {
        Family::Ghz => ghz(n),
        Family::Qft => qft(n),
        Family::Random => random_circuit(n, spec.depth, spec.seed),
        Family::Ansatz => ansatz(n, spec.depth, spec.seed),
    };
    Ok(Benchmark {
        name: spec.name(),
        family: spec.family,
        circuit,
    })
}

pub fn ghz(n: usize) -> Circuit {
    let mut gates = vec![Gate::one(GateKind::H, 0)];
    gates.extend((1..n).map(|q| Gate::cx(q - 1, q)));
    Circuit::from_gates(n, gates).expect("valid by construction")
}

/// Controlled phase `diag(1, 1, 1, e^{iθ})` up to global phase.
fn cphase(theta: f64, a: usize, b: usize) -> [Gate; 5] {
    [
        Gate::rot(GateKind::Rz, theta / 2.0, a),
        Gate::cx(a, b),
        Gate::rot(GateKind::Rz, -theta / 2.0, b),
        Gate::cx(a, b),
        Gate::rot(GateKind::Rz, theta / 2.0, b),
    ]
}

/// Textbook QFT with the most significant qubit (`n − 1`) handled first
/// and a closing bit reversal, so the unitary is the DFT on the integer
/// whose bit `q` is qubit `q`.
pub fn qft(n: usize) -> Circuit {
    let mut gates = Vec::new();
    for j in (0..n).rev() {
        gates.push(Gate::one(GateKind::H, j));
        for k in (0..j).rev() {
            gates.extend(cphase(PI / (1u64 << (j - k)) as f64, k, j));
        }
    }
    for i in 0..n / 2 {
        gates.push(Gate::two(GateKind::Swap, i, n - 1 - i));
    }
    Circuit::from_gates(n, gates).expect("valid by construction")
}

/// `layers` rounds of a random pairing; each pair gets a cx (random
/// direction) or two random single-qubit gates.
pub fn random_circuit(n: usize, layers: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32));
    let fixed = [
        GateKind::H,
        GateKind::X,
        GateKind::S,
        GateKind::T,
        GateKind::Sx,
    ];
    let mut gates = Vec::new();
    let one_q = |q: usize, rng: &mut ChaCha8Rng, gates: &mut Vec<Gate>| {
        if rng.gen_bool(0.3) {
            let kind = [GateKind::Rz, GateKind::Ry][rng.gen_range(0..2)];
            gates.push(Gate::rot(kind, rng.gen_range(-PI..PI), q));
        } else {
            gates.push(Gate::one(fixed[rng.gen_range(0..fixed.len())], q));
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..layers {
        order.shuffle(&mut rng);
        for pair in order.chunks(2) {
            match *pair {
                [a, b] if rng.gen_bool(0.5) => gates.push(Gate::cx(a, b)),
                [a, b] => {
                    one_q(a, &mut rng, &mut gates);
                    one_q(b, &mut rng, &mut gates);
                }
                [a] => one_q(a, &mut rng, &mut gates),
                _ => unreachable!("chunks of two"),
            }
        }
    }
    Circuit::from_gates(n, gates).expect("valid by construction")
}

/// Hardware-efficient ansatz: `reps` rounds of ry·rz on every qubit and a
/// linear cx chain, then a closing ry layer. Angles are seeded.
pub fn ansatz(n: usize, reps: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32) ^ 0xA115);
    let mut gates = Vec::new();
    for _ in 0..reps {
        for q in 0..n {
            gates.push(Gate::rot(GateKind::Ry, rng.gen_range(-PI..PI), q));
            gates.push(Gate::rot(GateKind::Rz, rng.gen_range(-PI..PI), q));
        }
        gates.extend((1..n).map(|q| Gate::cx(q - 1, q)));
    }
    for q in 0..n {
        gates.push(Gate::rot(GateKind::Ry, rng.gen_range(-PI..PI), q));
    }
    Circuit::from_gates(n, gates).expect("valid by construction")
}

/// Three qubits: two x on q2, h and rz(−π/2) on q1, then cx 0→1, 1→2, 0→2.
pub fn example_3q() -> Circuit {
    Circuit::from_gates(
        3,
        vec![
            Gate::one(GateKind::X, 2),
            Gate::one(GateKind::X, 2),
            Gate::one(GateKind::H, 1),
            Gate::rot(GateKind::Rz, -FRAC_PI_2, 1),
            Gate::cx(0, 1),
            Gate::cx(1, 2),
            Gate::cx(0, 2),
        ],
    )
    .expect("valid by construction")
}

/// Every family at every size in `sizes`.
pub fn suite(sizes: &[usize], seed: u64) -> Vec<BenchmarkSpec> {
    Family::ALL
        .into_iter()
        .flat_map(|f| sizes.iter().map(move |&n| BenchmarkSpec::new(f, n, seed)))
        .collect()
}

/// Four families, 2..=8 qubits.
pub fn default_suite(seed: u64) -> Vec<BenchmarkSpec> {
    suite(&(2..=8).collect::<Vec<_>>(), seed)
}

/// Twenty circuits: four families at 2, 3, 4, 6 and 8 qubits.
pub fn desk_suite(seed: u64) -> Vec<BenchmarkSpec> {
    suite(&[2, 3, 4, 6, 8], seed)
}

pub fn generate_all(specs: &[BenchmarkSpec]) -> Result<Vec<Benchmark>> {
    specs.iter().map(generate).collect()
}

/// Writes one `<name>.qasm` per spec and returns the paths in spec order.
pub fn write_suite(dir: impl AsRef<Path>, specs: &[BenchmarkSpec]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir.as_ref())?;
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        let b = generate(spec)?;
        let path = dir.as_ref().join(format!("{}.qasm", b.name));
        std::fs::write(&path, emit_qasm(&b.circuit))?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{parse_qasm, Matrix};
    use crate::sim::{equivalent, unitary_of_gates};
    use num_complex::Complex64;

    #[test]
    fn ghz_shape() {
        let c = ghz(4);
        assert_eq!(c.len(), 4);
        assert_eq!(c.two_qubit_count(), 3);
        assert_eq!(c.depth(), 4);
    }

    #[test]
    fn qft_matches_dft() {
        for n in 1..=5 {
            let dim = 1usize << n;
            let mut dft = Matrix::zeros(dim);
            for j in 0..dim {
                for k in 0..dim {
                    let angle = 2.0 * PI * (j * k) as f64 / dim as f64;
                    dft.set(
                        j,
                        k,
                        Complex64::from_polar(1.0 / (dim as f64).sqrt(), angle),
                    );
                }
            }
            let u = unitary_of_gates(n, &qft(n).gates);
            assert!(u.equal_up_to_phase(&dft, 1e-9), "n = {n}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = BenchmarkSpec {
            family: Family::Random,
            num_qubits: 5,
            seed: 7,
            depth: 20,
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let a = write_suite(dir.path().join("a"), &[spec]).unwrap();
        let b = write_suite(dir.path().join("b"), &[spec]).unwrap();
        assert_eq!(std::fs::read(&a[0]).unwrap(), std::fs::read(&b[0]).unwrap());
        let other = BenchmarkSpec { seed: 8, ..spec };
        assert_ne!(
            generate(&other).unwrap().circuit,
            generate(&spec).unwrap().circuit
        );
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let specs = suite(&[2, 3, 5], 1);
        for (path, spec) in write_suite(dir.path(), &specs).unwrap().iter().zip(&specs) {
            let parsed = parse_qasm(&std::fs::read_to_string(path).unwrap()).unwrap();
            let original = generate(spec).unwrap().circuit;
            assert!(
                equivalent(&original, &parsed, false, 1e-9).unwrap(),
                "{}",
                spec.name()
            );
        }
    }

    #[test]
    fn suites_and_bounds() {
        assert_eq!(default_suite(0).len(), 28);
        assert_eq!(desk_suite(0).len(), 20);
        assert!(generate(&BenchmarkSpec::new(Family::Ghz, 1, 0)).is_err());
        assert!(generate(&BenchmarkSpec::new(Family::Ghz, 21, 0)).is_err());
        for spec in default_suite(3) {
            let b = generate(&spec).unwrap();
            assert_eq!(b.circuit.num_qubits, spec.num_qubits);
            b.circuit.validate().unwrap();
        }
    }
}
