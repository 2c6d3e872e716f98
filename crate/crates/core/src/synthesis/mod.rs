//! Translation to a platform's native gate set.
//!
//! Two-qubit gates are rewritten with a small rule table until only the
//! platform's entangling gate remains. Single-qubit runs that contain a
//! non-native gate are then multiplied out and re-expressed through
//! [`euler_1q`] in the platform's Euler basis.

pub mod euler;
mod rules;

pub use euler::{euler_1q, product_1q, zyz_angles, ANGLE_EPS};
pub use rules::{
    check_rule_table, rule_table, validate_rules, AngleExpr, RewriteRule, RuleCheck, TemplateGate,
};

use crate::circuit::{Circuit, Gate};
use crate::device::{EulerBasis, Platform};
use crate::error::Result;

/// Rewrites a non-native two-qubit gate into the platform's entangling gate
/// plus single-qubit gates (which may still be non-native).
pub fn lower_2q(gate: &Gate, platform: Platform) -> Vec<Gate> {
    if !gate.is_two_qubit() || platform.is_native(gate.kind) {
        return vec![gate.clone()];
    }
    let rule = rule_table()
        .iter()
        .find(|r| r.source == gate.kind && r.valid_on(platform))
        .unwrap_or_else(|| panic!("no rewrite rule for {} on {platform}", gate.kind));
    rule.instantiate(gate)
        .iter()
        .flat_map(|g| lower_2q(g, platform))
        .collect()
}

/// Rebuilds the gate list run by run: every maximal sequence of
/// single-qubit gates on one qubit is handed to `f`, and the returned gates
/// are emitted before the next multi-qubit gate on that qubit.
pub(crate) fn map_1q_runs(
    c: &Circuit,
    mut f: impl FnMut(&[Gate], usize) -> Result<Vec<Gate>>,
) -> Result<Vec<Gate>> {
    let mut pending: Vec<Vec<Gate>> = vec![Vec::new(); c.num_qubits];
    let mut out = Vec::with_capacity(c.gates.len());
    for g in &c.gates {
        if g.is_two_qubit() {
            for &q in &g.qubits {
                let run = std::mem::take(&mut pending[q]);
                if !run.is_empty() {
                    out.extend(f(&run, q)?);
                }
            }
            out.push(g.clone());
        } else {
            pending[g.qubits[0]].push(g.clone());
        }
    }
    for (q, run) in pending.into_iter().enumerate() {
        if !run.is_empty() {
            out.extend(f(&run, q)?);
        }
    }
    Ok(out)
}

/// Expresses every gate in `platform`'s native set.
pub fn synthesize(c: &Circuit, platform: Platform) -> Result<Circuit> {
    let lowered: Vec<Gate> = c.gates.iter().flat_map(|g| lower_2q(g, platform)).collect();
    let staged = c.with_gates(lowered);
    let basis = platform.euler_basis();
    let gates = map_1q_runs(&staged, |run, q| {
        if run.iter().all(|g| platform.is_native(g.kind)) {
            Ok(run.to_vec())
        } else {
            euler_1q(&product_1q(run), basis, q)
        }
    })?;
    let out = staged.with_gates(gates);
    debug_assert!(out.gates.iter().all(|g| platform.is_native(g.kind)));
    Ok(out)
}

/// Basis used for single-qubit resynthesis when no platform is known.
pub const GENERIC_BASIS: EulerBasis = EulerBasis::Zxz;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::fixtures::example3;
    use crate::circuit::GateKind;
    use crate::sim::equivalent;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn hadamard_on_ibm() {
        let c = Circuit::from_gates(1, vec![Gate::one(GateKind::H, 0)]).unwrap();
        let s = synthesize(&c, Platform::Ibm).unwrap();
        assert_eq!(
            s.gates,
            vec![
                Gate::rot(GateKind::Rz, FRAC_PI_2, 0),
                Gate::one(GateKind::Sx, 0),
                Gate::rot(GateKind::Rz, FRAC_PI_2, 0),
            ]
        );
    }

    #[test]
    fn swap_on_ibm_is_three_cx() {
        let c = Circuit::from_gates(2, vec![Gate::two(GateKind::Swap, 0, 1)]).unwrap();
        let s = synthesize(&c, Platform::Ibm).unwrap();
        assert_eq!(
            s.gates,
            vec![Gate::cx(0, 1), Gate::cx(1, 0), Gate::cx(0, 1)]
        );
    }

    #[test]
    fn cx_on_every_platform() {
        let c = Circuit::from_gates(2, vec![Gate::cx(0, 1)]).unwrap();
        for p in Platform::ALL {
            let s = synthesize(&c, p).unwrap();
            assert!(
                s.gates.iter().all(|g| p.is_native(g.kind)),
                "{p}: {:?}",
                s.gates
            );
            assert!(equivalent(&c, &s, false, 1e-9).unwrap(), "{p}");
        }
    }

    #[test]
    fn example3_everywhere() {
        for p in Platform::ALL {
            let s = synthesize(&example3(), p).unwrap();
            assert!(s.gates.iter().all(|g| p.is_native(g.kind)));
            assert!(equivalent(&example3(), &s, false, 1e-9).unwrap());
        }
    }

    #[test]
    fn native_circuits_do_not_grow() {
        for p in Platform::ALL {
            let once = synthesize(&example3(), p).unwrap();
            let twice = synthesize(&once, p).unwrap();
            assert!(twice.len() <= once.len());
        }
    }
}
