use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{Matrix, I, ONE, ZERO};
use crate::error::{Error, Result};

/// The closed gate vocabulary understood by every pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
    Sx,
    Rx,
    Ry,
    Rz,
    Cx,
    Cz,
    Swap,
    Rxx,
}

impl GateKind {
    pub const ALL: [GateKind; 16] = [
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::S,
        GateKind::Sdg,
        GateKind::T,
        GateKind::Tdg,
        GateKind::Sx,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Cx,
        GateKind::Cz,
        GateKind::Swap,
        GateKind::Rxx,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cx | GateKind::Cz | GateKind::Swap | GateKind::Rxx => 2,
            _ => 1,
        }
    }

    pub fn num_params(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Rxx => 1,
            _ => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::Sx => "sx",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Swap => "swap",
            GateKind::Rxx => "rxx",
        }
    }

    /// Gates diagonal in the computational basis (rz up to phase).
    pub fn is_z_rotation(self) -> bool {
        matches!(
            self,
            GateKind::Z | GateKind::S | GateKind::Sdg | GateKind::T | GateKind::Tdg | GateKind::Rz
        )
    }

    /// Gates that are rx rotations up to phase.
    pub fn is_x_rotation(self) -> bool {
        matches!(self, GateKind::X | GateKind::Sx | GateKind::Rx)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidGate(format!("unknown gate kind `{s}`")))
    }
}

/// A gate applied to concrete qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub params: Vec<f64>,
    pub qubits: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, params: Vec<f64>, qubits: Vec<usize>) -> Result<Self> {
        let gate = Self {
            kind,
            params,
            qubits,
        };
        gate.validate()?;
        Ok(gate)
    }

    pub fn one(kind: GateKind, q: usize) -> Self {
        debug_assert_eq!(kind.arity(), 1);
        debug_assert_eq!(kind.num_params(), 0);
        Self {
            kind,
            params: Vec::new(),
            qubits: vec![q],
        }
    }

    pub fn rot(kind: GateKind, angle: f64, q: usize) -> Self {
        debug_assert_eq!(kind.arity(), 1);
        debug_assert_eq!(kind.num_params(), 1);
        Self {
            kind,
            params: vec![angle],
            qubits: vec![q],
        }
    }

    pub fn two(kind: GateKind, a: usize, b: usize) -> Self {
        debug_assert_eq!(kind.arity(), 2);
        debug_assert_eq!(kind.num_params(), 0);
        Self {
            kind,
            params: Vec::new(),
            qubits: vec![a, b],
        }
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::two(GateKind::Cx, control, target)
    }

    pub fn rxx(angle: f64, a: usize, b: usize) -> Self {
        Self {
            kind: GateKind::Rxx,
            params: vec![angle],
            qubits: vec![a, b],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits.len() != self.kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{} expects {} qubits, got {}",
                self.kind,
                self.kind.arity(),
                self.qubits.len()
            )));
        }
        if self.params.len() != self.kind.num_params() {
            return Err(Error::InvalidGate(format!(
                "{} expects {} parameters, got {}",
                self.kind,
                self.kind.num_params(),
                self.params.len()
            )));
        }
        if self.qubits.len() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::InvalidGate(format!(
                "{} applied twice to qubit {}",
                self.kind, self.qubits[0]
            )));
        }
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits.len() == 2
    }

    pub fn acts_on(&self, q: usize) -> bool {
        self.qubits.contains(&q)
    }

    pub fn matrix(&self) -> Matrix {
        gate_matrix(self.kind, &self.params).expect("gate validated on construction")
    }

    /// Same gate acting on relabeled qubits.
    pub fn remapped(&self, map: impl Fn(usize) -> usize) -> Gate {
        Gate {
            kind: self.kind,
            params: self.params.clone(),
            qubits: self.qubits.iter().map(|&q| map(q)).collect(),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if !self.params.is_empty() {
            let p: Vec<String> = self.params.iter().map(|x| format!("{x:.6}")).collect();
            write!(f, "({})", p.join(","))?;
        }
        let q: Vec<String> = self.qubits.iter().map(|q| q.to_string()).collect();
        write!(f, " {}", q.join(","))
    }
}

/// Unitary of a gate kind. Two-qubit matrices use the first operand as the
/// least-significant bit, so `cx` is controlled on its first operand.
pub fn gate_matrix(kind: GateKind, params: &[f64]) -> Result<Matrix> {
    if params.len() != kind.num_params() {
        return Err(Error::InvalidGate(format!(
            "{kind} expects {} parameters, got {}",
            kind.num_params(),
            params.len()
        )));
    }
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let h = FRAC_1_SQRT_2;
    let m = match kind {
        GateKind::X => Matrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]),
        GateKind::Y => Matrix::from_rows(&[&[ZERO, -I], &[I, ZERO]]),
        GateKind::Z => Matrix::from_real(&[&[1.0, 0.0], &[0.0, -1.0]]),
        GateKind::H => Matrix::from_real(&[&[h, h], &[h, -h]]),
        GateKind::S => Matrix::diag(&[ONE, I]),
        GateKind::Sdg => Matrix::diag(&[ONE, -I]),
        GateKind::T => Matrix::diag(&[ONE, Complex64::from_polar(1.0, FRAC_PI_4)]),
        GateKind::Tdg => Matrix::diag(&[ONE, Complex64::from_polar(1.0, -FRAC_PI_4)]),
        GateKind::Sx => {
            Matrix::from_rows(&[&[c(0.5, 0.5), c(0.5, -0.5)], &[c(0.5, -0.5), c(0.5, 0.5)]])
        }
        GateKind::Rx => {
            let (s, co) = (params[0] / 2.0).sin_cos();
            Matrix::from_rows(&[&[c(co, 0.0), c(0.0, -s)], &[c(0.0, -s), c(co, 0.0)]])
        }
        GateKind::Ry => {
            let (s, co) = (params[0] / 2.0).sin_cos();
            Matrix::from_real(&[&[co, -s], &[s, co]])
        }
        GateKind::Rz => {
            let half = params[0] / 2.0;
            Matrix::diag(&[
                Complex64::from_polar(1.0, -half),
                Complex64::from_polar(1.0, half),
            ])
        }
        GateKind::Cx => Matrix::from_real(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
        ]),
        GateKind::Cz => Matrix::diag(&[ONE, ONE, ONE, -ONE]),
        GateKind::Swap => Matrix::from_real(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]),
        GateKind::Rxx => {
            let (s, co) = (params[0] / 2.0).sin_cos();
            let d = c(co, 0.0);
            let o = c(0.0, -s);
            Matrix::from_rows(&[
                &[d, ZERO, ZERO, o],
                &[ZERO, d, o, ZERO],
                &[ZERO, o, d, ZERO],
                &[o, ZERO, ZERO, d],
            ])
        }
    };
    Ok(m)
}

/// Normalizes an angle to (−π, π].
pub fn normalize_angle(theta: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut t = theta % TAU;
    if t <= -PI {
        t += TAU;
    } else if t > PI {
        t -= TAU;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn product(gates: &[Matrix]) -> Matrix {
        // circuit order: first element applied first
        gates
            .iter()
            .fold(Matrix::identity(gates[0].dim()), |acc, g| g * &acc)
    }

    #[test]
    fn pauli_x_definition() {
        let x = gate_matrix(GateKind::X, &[]).unwrap();
        assert_eq!(x, Matrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]));
    }

    #[test]
    fn all_kinds_unitary() {
        for kind in GateKind::ALL {
            let params: Vec<f64> = (0..kind.num_params()).map(|i| 0.37 + i as f64).collect();
            let m = gate_matrix(kind, &params).unwrap();
            assert_eq!(m.dim(), 1 << kind.arity());
            assert!(m.unitarity_error() <= 1e-12, "{kind} not unitary");
        }
    }

    #[test]
    fn wrong_parameter_count_rejected() {
        assert!(gate_matrix(GateKind::Rz, &[]).is_err());
        assert!(gate_matrix(GateKind::H, &[1.0]).is_err());
        assert!(Gate::new(GateKind::Cx, vec![], vec![1, 1]).is_err());
        assert!(Gate::new(GateKind::Cx, vec![], vec![1]).is_err());
    }

    #[test]
    fn rz_sx_rz_is_hadamard_up_to_phase() {
        let rz = gate_matrix(GateKind::Rz, &[FRAC_PI_2]).unwrap();
        let sx = gate_matrix(GateKind::Sx, &[]).unwrap();
        let h = gate_matrix(GateKind::H, &[]).unwrap();
        let m = product(&[rz.clone(), sx, rz]);
        assert!(m.equal_up_to_phase(&h, 1e-12));
    }

    #[test]
    fn swap_equals_three_cx() {
        let cx01 = gate_matrix(GateKind::Cx, &[]).unwrap();
        // cx with control on the second operand: conjugate by swap basis change
        let swap = gate_matrix(GateKind::Swap, &[]).unwrap();
        let cx10 = &(&swap * &cx01) * &swap;
        let m = product(&[cx01.clone(), cx10, cx01]);
        assert!(m.max_abs_diff(&swap) < 1e-15);
    }

    #[test]
    fn rz_convention() {
        let rz = gate_matrix(GateKind::Rz, &[PI]).unwrap();
        assert!((rz.get(0, 0) - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((rz.get(1, 1) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn angle_normalization() {
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(0.5) - 0.5).abs() < 1e-15);
        assert!((normalize_angle(2.0 * PI)).abs() < 1e-12);
    }
}
