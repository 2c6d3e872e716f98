//! Peephole optimizations. Every pass runs to its own fixpoint.

mod commute;
mod consolidate;

pub use commute::{
    check_commutation_table, commutation_table, commutative_cancel, commutes, CommutationFact,
};
pub use consolidate::consolidate_2q;

use crate::circuit::{normalize_angle, Circuit, Gate, GateKind};
use crate::device::Platform;
use crate::synthesis::{euler_1q, map_1q_runs, product_1q, ANGLE_EPS, GENERIC_BASIS};

/// Deviation from `e^{iφ}·I` below which a gate or run counts as identity.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptPass {
    Fuse1q,
    CancelCx,
    CommutativeCancel,
    InverseCancel,
    Consolidate2q,
    RemoveTrivial,
}

impl OptPass {
    pub const ALL: [OptPass; 6] = [
        OptPass::Fuse1q,
        OptPass::CancelCx,
        OptPass::CommutativeCancel,
        OptPass::InverseCancel,
        OptPass::Consolidate2q,
        OptPass::RemoveTrivial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptPass::Fuse1q => "fuse_1q",
            OptPass::CancelCx => "cancel_cx",
            OptPass::CommutativeCancel => "commutative_cancel",
            OptPass::InverseCancel => "inverse_cancel",
            OptPass::Consolidate2q => "consolidate_2q",
            OptPass::RemoveTrivial => "remove_trivial",
        }
    }

    /// Passes that never need a target basis.
    pub fn basis_agnostic(self) -> bool {
        !matches!(self, OptPass::Fuse1q | OptPass::Consolidate2q)
    }

    pub fn apply(self, c: &Circuit, platform: Option<Platform>) -> Circuit {
        match self {
            OptPass::Fuse1q => fuse_1q(c, platform),
            OptPass::CancelCx => cancel_cx(c),
            OptPass::CommutativeCancel => commutative_cancel(c),
            OptPass::InverseCancel => inverse_cancel(c),
            OptPass::Consolidate2q => consolidate_2q(c, platform),
            OptPass::RemoveTrivial => remove_trivial(c),
        }
    }
}

/// Multiplies out every single-qubit run and re-expresses it in the
/// platform's Euler basis (ZXZ without a platform). A run is replaced only
/// when the result is shorter, or equally long and native where the run
/// was not.
pub fn fuse_1q(c: &Circuit, platform: Option<Platform>) -> Circuit {
    let basis = platform.map_or(GENERIC_BASIS, Platform::euler_basis);
    let gates = map_1q_runs(c, |run, q| {
        let u = product_1q(run);
        if u.is_identity_up_to_phase(IDENTITY_TOL) {
            return Ok(Vec::new());
        }
        let seq = euler_1q(&u, basis, q)?;
        let gains_nativity = platform.is_some_and(|p| {
            !run.iter().all(|g| p.is_native(g.kind)) && seq.iter().all(|g| p.is_native(g.kind))
        });
        if seq.len() < run.len() || (seq.len() == run.len() && gains_nativity) {
            Ok(seq)
        } else {
            Ok(run.to_vec())
        }
    })
    .expect("gate products are unitary");
    c.with_gates(gates)
}

/// Removes gate pairs that sit directly on top of each other (nothing in
/// between on any shared qubit) and satisfy `pair`. Cancellations cascade,
/// so one sweep reaches the fixpoint.
fn cancel_adjacent(c: &Circuit, pair: impl Fn(&Gate, &Gate) -> bool) -> Circuit {
    let mut out: Vec<Option<Gate>> = Vec::with_capacity(c.gates.len());
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); c.num_qubits];
    for g in &c.gates {
        let top = stacks[g.qubits[0]].last().copied();
        let same_top = top.is_some() && g.qubits.iter().all(|&q| stacks[q].last().copied() == top);
        if let Some(i) = top.filter(|_| same_top) {
            let prev = out[i].as_ref().expect("stack holds live gates");
            if prev.arity() == g.arity() && pair(prev, g) {
                out[i] = None;
                for &q in &g.qubits {
                    stacks[q].pop();
                }
                continue;
            }
        }
        for &q in &g.qubits {
            stacks[q].push(out.len());
        }
        out.push(Some(g.clone()));
    }
    c.with_gates(out.into_iter().flatten().collect())
}

fn same_pair(a: &Gate, b: &Gate) -> bool {
    (a.qubits[0] == b.qubits[0] && a.qubits[1] == b.qubits[1])
        || (a.qubits[0] == b.qubits[1] && a.qubits[1] == b.qubits[0])
}

/// Cancels back-to-back identical cx (same orientation) and cz pairs.
pub fn cancel_cx(c: &Circuit) -> Circuit {
    cancel_adjacent(c, |a, b| match (a.kind, b.kind) {
        (GateKind::Cx, GateKind::Cx) => a.qubits == b.qubits,
        (GateKind::Cz, GateKind::Cz) => same_pair(a, b),
        _ => false,
    })
}

fn angles_cancel(a: f64, b: f64) -> bool {
    normalize_angle(a + b).abs() < ANGLE_EPS
}

/// True when `b` undoes `a` (up to global phase).
pub fn is_inverse_pair(a: &Gate, b: &Gate) -> bool {
    use GateKind::*;
    match (a.kind, b.kind) {
        (H, H) | (X, X) | (Y, Y) | (Z, Z) | (S, Sdg) | (Sdg, S) | (T, Tdg) | (Tdg, T) => true,
        (Cx, Cx) => a.qubits == b.qubits,
        (Cz, Cz) | (Swap, Swap) => same_pair(a, b),
        (Rx, Rx) | (Ry, Ry) | (Rz, Rz) => angles_cancel(a.params[0], b.params[0]),
        (Rxx, Rxx) => same_pair(a, b) && angles_cancel(a.params[0], b.params[0]),
        (Sx, Rx) => angles_cancel(std::f64::consts::FRAC_PI_2, b.params[0]),
        (Rx, Sx) => angles_cancel(a.params[0], std::f64::consts::FRAC_PI_2),
        _ => false,
    }
}

/// Cancels adjacent inverse pairs.
pub fn inverse_cancel(c: &Circuit) -> Circuit {
    cancel_adjacent(c, is_inverse_pair)
}

/// Drops gates that act as the identity up to global phase.
pub fn remove_trivial(c: &Circuit) -> Circuit {
    c.with_gates(
        c.gates
            .iter()
            .filter(|g| !g.matrix().is_identity_up_to_phase(IDENTITY_TOL))
            .cloned()
            .collect(),
    )
}
