use std::f64::consts::FRAC_PI_2;
use std::sync::LazyLock;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::device::Platform;
use crate::error::{Error, Result};
use crate::sim::unitary_of;

/// Angle of a template gate, possibly depending on the source gate's angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleExpr {
    Const(f64),
    /// `scale · θ_source`
    Param(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateGate {
    pub kind: GateKind,
    pub angle: Option<AngleExpr>,
    /// Indices into the source gate's operands.
    pub operands: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewriteRule {
    pub name: &'static str,
    pub source: GateKind,
    pub target: Vec<TemplateGate>,
    pub validity: &'static [Platform],
}

impl RewriteRule {
    pub fn valid_on(&self, p: Platform) -> bool {
        self.validity.contains(&p)
    }

    pub fn instantiate(&self, gate: &Gate) -> Vec<Gate> {
        debug_assert_eq!(gate.kind, self.source);
        self.target
            .iter()
            .map(|t| Gate {
                kind: t.kind,
                params: t
                    .angle
                    .map(|a| match a {
                        AngleExpr::Const(v) => v,
                        AngleExpr::Param(s) => s * gate.params[0],
                    })
                    .into_iter()
                    .collect(),
                qubits: t.operands.iter().map(|&i| gate.qubits[i]).collect(),
            })
            .collect()
    }
}

fn t(kind: GateKind, operands: &[usize]) -> TemplateGate {
    TemplateGate {
        kind,
        angle: None,
        operands: operands.to_vec(),
    }
}

fn ta(kind: GateKind, angle: AngleExpr, operands: &[usize]) -> TemplateGate {
    TemplateGate {
        kind,
        angle: Some(angle),
        operands: operands.to_vec(),
    }
}

const ALL: &[Platform] = &[
    Platform::Ibm,
    Platform::Rigetti,
    Platform::Ionq,
    Platform::Oqc,
];
const CX_NOT_NATIVE: &[Platform] = &[Platform::Rigetti, Platform::Ionq];
const CZ_NOT_NATIVE: &[Platform] = &[Platform::Ibm, Platform::Ionq, Platform::Oqc];
const RXX_NOT_NATIVE: &[Platform] = &[Platform::Ibm, Platform::Rigetti, Platform::Oqc];

fn build_table() -> Vec<RewriteRule> {
    use AngleExpr::{Const, Param};
    use GateKind::*;
    let mut rules = vec![
        RewriteRule {
            name: "swap_to_cx",
            source: Swap,
            target: vec![t(Cx, &[0, 1]), t(Cx, &[1, 0]), t(Cx, &[0, 1])],
            validity: ALL,
        },
        RewriteRule {
            name: "cz_to_cx",
            source: Cz,
            target: vec![t(H, &[1]), t(Cx, &[0, 1]), t(H, &[1])],
            validity: CZ_NOT_NATIVE,
        },
        RewriteRule {
            name: "rxx_to_cx",
            source: Rxx,
            target: vec![
                t(H, &[0]),
                t(H, &[1]),
                t(Cx, &[0, 1]),
                ta(Rz, Param(1.0), &[1]),
                t(Cx, &[0, 1]),
                t(H, &[0]),
                t(H, &[1]),
            ],
            validity: RXX_NOT_NATIVE,
        },
    ];
    rules.push(RewriteRule {
        name: "cx_to_cz",
        source: Cx,
        target: vec![t(H, &[1]), t(Cz, &[0, 1]), t(H, &[1])],
        validity: &[Platform::Rigetti],
    });
    rules.push(RewriteRule {
        name: "cx_to_rxx",
        source: Cx,
        target: vec![
            ta(Ry, Const(FRAC_PI_2), &[0]),
            ta(Rxx, Const(FRAC_PI_2), &[0, 1]),
            ta(Rx, Const(-FRAC_PI_2), &[0]),
            ta(Rx, Const(-FRAC_PI_2), &[1]),
            ta(Ry, Const(-FRAC_PI_2), &[0]),
        ],
        validity: &[Platform::Ionq],
    });
    debug_assert!(rules
        .iter()
        .filter(|r| r.source == Cx)
        .all(|r| r.validity.iter().all(|p| CX_NOT_NATIVE.contains(p))));
    rules
}

/// Outcome of checking one rule against the oracle.
#[derive(Debug, Clone)]
pub struct RuleCheck {
    pub name: &'static str,
    pub max_error: f64,
    pub passed: bool,
}

const CHECK_ANGLES: [f64; 3] = [0.731, -2.4, std::f64::consts::PI];

/// Compares every rule's template with its source gate on two qubits.
pub fn validate_rules(rules: &[RewriteRule]) -> Vec<RuleCheck> {
    rules
        .iter()
        .map(|rule| {
            let angles: Vec<Option<f64>> = if rule.source.num_params() == 1 {
                CHECK_ANGLES.iter().map(|&a| Some(a)).collect()
            } else {
                vec![None]
            };
            let mut worst: f64 = 0.0;
            for angle in angles {
                let source = Gate {
                    kind: rule.source,
                    params: angle.into_iter().collect(),
                    qubits: vec![0, 1],
                };
                let lhs =
                    unitary_of(&Circuit::from_gates(2, vec![source.clone()]).unwrap()).unwrap();
                let rhs = unitary_of(&Circuit::from_gates(2, rule.instantiate(&source)).unwrap())
                    .unwrap();
                let err = match rhs.relative_phase(&lhs) {
                    Some(ph) => rhs.max_abs_diff(&lhs.scale(ph)),
                    None => f64::INFINITY,
                };
                worst = worst.max(err);
            }
            RuleCheck {
                name: rule.name,
                max_error: worst,
                passed: worst <= 1e-9,
            }
        })
        .collect()
}

static RULES: LazyLock<Vec<RewriteRule>> = LazyLock::new(|| {
    let rules = build_table();
    let failed: Vec<_> = validate_rules(&rules)
        .into_iter()
        .filter(|c| !c.passed)
        .collect();
    if !failed.is_empty() {
        panic!(
            "{}",
            Error::RuleValidation(format!("rewrite rules failed the oracle check: {failed:?}"))
        );
    }
    rules
});

/// The validated rule table. The first access checks every rule against
/// the oracle and panics on any mismatch.
pub fn rule_table() -> &'static [RewriteRule] {
    &RULES
}

/// Checks the shipped table, returning an error listing failures.
pub fn check_rule_table() -> Result<Vec<RuleCheck>> {
    let checks = validate_rules(&build_table());
    if checks.iter().all(|c| c.passed) {
        Ok(checks)
    } else {
        Err(Error::RuleValidation(format!("{checks:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_rule_passes_the_oracle() {
        let checks = check_rule_table().unwrap();
        assert_eq!(checks.len(), build_table().len());
    }

    #[test]
    fn broken_rule_is_caught() {
        let mut rules = build_table();
        rules[0].target.pop();
        let checks = validate_rules(&rules);
        assert!(!checks[0].passed);
    }

    #[test]
    fn every_non_native_2q_gate_has_a_path() {
        for p in Platform::ALL {
            for kind in GateKind::ALL.into_iter().filter(|k| k.arity() == 2) {
                let g = Gate {
                    kind,
                    params: vec![0.3; kind.num_params()],
                    qubits: vec![0, 1],
                };
                let lowered = crate::synthesis::lower_2q(&g, p);
                assert!(lowered
                    .iter()
                    .filter(|g| g.is_two_qubit())
                    .all(|g| g.kind == p.native_2q()));
            }
        }
    }
}
