//! Commutation-aware cancellation.
//!
//! Which gates may be moved past each other comes from a small whitelist
//! of facts. Each fact is checked against the simulator on every concrete
//! gate kind it covers before the table is first used.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use crate::circuit::{normalize_angle, Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::sim::unitary_of_gates;
use crate::synthesis::{RuleCheck, ANGLE_EPS};

/// A family of gates a fact applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateClass {
    /// rz, z, s, sdg, t, tdg
    ZLike,
    /// rx, x, sx
    XLike,
    Cx,
    Cz,
}

impl GateClass {
    fn contains(self, kind: GateKind) -> bool {
        match self {
            GateClass::ZLike => kind.is_z_rotation(),
            GateClass::XLike => kind.is_x_rotation(),
            GateClass::Cx => kind == GateKind::Cx,
            GateClass::Cz => kind == GateKind::Cz,
        }
    }

    fn members(self) -> Vec<GateKind> {
        GateKind::ALL
            .into_iter()
            .filter(|&k| self.contains(k))
            .collect()
    }

    fn symmetric(self) -> bool {
        self == GateClass::Cz
    }
}

/// "A gate of class `a` on template wires `a_wires` commutes with a gate
/// of class `b` on `b_wires`."
#[derive(Debug, Clone, PartialEq)]
pub struct CommutationFact {
    pub name: &'static str,
    pub a: (GateClass, &'static [usize]),
    pub b: (GateClass, &'static [usize]),
}

fn build_table() -> Vec<CommutationFact> {
    use GateClass::*;
    vec![
        CommutationFact {
            name: "z_through_cx_control",
            a: (ZLike, &[0]),
            b: (Cx, &[0, 1]),
        },
        CommutationFact {
            name: "x_through_cx_target",
            a: (XLike, &[1]),
            b: (Cx, &[0, 1]),
        },
        CommutationFact {
            name: "cx_shared_control",
            a: (Cx, &[0, 1]),
            b: (Cx, &[0, 2]),
        },
        CommutationFact {
            name: "cx_shared_target",
            a: (Cx, &[0, 2]),
            b: (Cx, &[1, 2]),
        },
        CommutationFact {
            name: "z_through_cz",
            a: (ZLike, &[0]),
            b: (Cz, &[0, 1]),
        },
        CommutationFact {
            name: "cz_shared_qubit",
            a: (Cz, &[0, 1]),
            b: (Cz, &[1, 2]),
        },
    ]
}

fn instance(kind: GateKind, wires: &[usize]) -> Gate {
    Gate {
        kind,
        params: vec![0.917; kind.num_params()],
        qubits: wires.to_vec(),
    }
}

/// Checks every fact on every member kind: `AB = BA` on three wires.
pub fn validate_facts(facts: &[CommutationFact]) -> Vec<RuleCheck> {
    facts
        .iter()
        .map(|f| {
            let mut worst: f64 = 0.0;
            for ka in f.a.0.members() {
                for kb in f.b.0.members() {
                    let (ga, gb) = (instance(ka, f.a.1), instance(kb, f.b.1));
                    let ab = unitary_of_gates(3, &[ga.clone(), gb.clone()]);
                    let ba = unitary_of_gates(3, &[gb, ga]);
                    worst = worst.max(ab.max_abs_diff(&ba));
                }
            }
            RuleCheck {
                name: f.name,
                max_error: worst,
                passed: worst <= 1e-9,
            }
        })
        .collect()
}

static FACTS: LazyLock<Vec<CommutationFact>> = LazyLock::new(|| {
    let facts = build_table();
    let failed: Vec<_> = validate_facts(&facts)
        .into_iter()
        .filter(|c| !c.passed)
        .collect();
    if !failed.is_empty() {
        panic!(
            "{}",
            Error::RuleValidation(format!(
                "commutation facts failed the oracle check: {failed:?}"
            ))
        );
    }
    facts
});

/// The validated whitelist. The first access checks it against the oracle.
pub fn commutation_table() -> &'static [CommutationFact] {
    &FACTS
}

pub fn check_commutation_table() -> Result<Vec<RuleCheck>> {
    let checks = validate_facts(&build_table());
    if checks.iter().all(|c| c.passed) {
        Ok(checks)
    } else {
        Err(Error::RuleValidation(format!("{checks:?}")))
    }
}

/// Binds template wires to the gate's qubits, extending `map`.
fn bind(
    g: &Gate,
    (class, wires): (GateClass, &[usize]),
    map: &mut [Option<usize>; 3],
    flip: bool,
) -> bool {
    if !class.contains(g.kind) {
        return false;
    }
    let qubits: Vec<usize> = if flip {
        g.qubits.iter().rev().copied().collect()
    } else {
        g.qubits.clone()
    };
    for (&w, &q) in wires.iter().zip(&qubits) {
        match map[w] {
            Some(existing) if existing != q => return false,
            Some(_) => {}
            None => {
                if map.contains(&Some(q)) {
                    return false;
                }
                map[w] = Some(q);
            }
        }
    }
    true
}

fn matches(fact: &CommutationFact, a: &Gate, b: &Gate) -> bool {
    let flips_a: &[bool] = if fact.a.0.symmetric() {
        &[false, true]
    } else {
        &[false]
    };
    let flips_b: &[bool] = if fact.b.0.symmetric() {
        &[false, true]
    } else {
        &[false]
    };
    for &fa in flips_a {
        for &fb in flips_b {
            let mut map = [None; 3];
            if bind(a, fact.a, &mut map, fa) && bind(b, fact.b, &mut map, fb) {
                // gates sharing a qubit the fact keeps apart must not overlap more
                let used: BTreeSet<usize> = fact.a.1.iter().chain(fact.b.1).copied().collect();
                let touched: BTreeSet<usize> = a.qubits.iter().chain(&b.qubits).copied().collect();
                if used.len() == touched.len() {
                    return true;
                }
            }
        }
    }
    false
}

/// True if the whitelist says `a` and `b` commute.
pub fn commutes(a: &Gate, b: &Gate) -> bool {
    if a.qubits.iter().all(|q| !b.acts_on(*q)) {
        return true;
    }
    commutation_table()
        .iter()
        .any(|f| matches(f, a, b) || matches(f, b, a))
}

fn z_angle(g: &Gate) -> Option<f64> {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
    Some(match g.kind {
        GateKind::Rz => g.params[0],
        GateKind::Z => PI,
        GateKind::S => FRAC_PI_2,
        GateKind::Sdg => -FRAC_PI_2,
        GateKind::T => FRAC_PI_4,
        GateKind::Tdg => -FRAC_PI_4,
        _ => return None,
    })
}

enum Merge {
    Cancel,
    Into(Gate),
}

/// What `a` followed by `b` (on the same qubits) collapses to, if anything.
fn merge(a: &Gate, b: &Gate) -> Option<Merge> {
    use GateKind::*;
    if a.qubits.len() != b.qubits.len() {
        return None;
    }
    let rotation = |kind: GateKind, angle: f64| {
        let angle = normalize_angle(angle);
        if angle.abs() < ANGLE_EPS {
            Merge::Cancel
        } else {
            Merge::Into(Gate {
                kind,
                params: vec![angle],
                qubits: b.qubits.clone(),
            })
        }
    };
    if a.is_two_qubit() {
        let same = a.qubits == b.qubits;
        let same_pair = same || (a.qubits[0] == b.qubits[1] && a.qubits[1] == b.qubits[0]);
        return match (a.kind, b.kind) {
            (Cx, Cx) if same => Some(Merge::Cancel),
            (Cz, Cz) if same_pair => Some(Merge::Cancel),
            (Rxx, Rxx) if same_pair => Some(rotation(Rxx, a.params[0] + b.params[0])),
            _ => None,
        };
    }
    if a.qubits != b.qubits {
        return None;
    }
    if let (Some(x), Some(y)) = (z_angle(a), z_angle(b)) {
        return Some(rotation(Rz, x + y));
    }
    match (a.kind, b.kind) {
        (X, X) => Some(Merge::Cancel),
        (Sx, Sx) => Some(Merge::Into(Gate::one(X, b.qubits[0]))),
        (Rx, Rx) | (Ry, Ry) => Some(rotation(a.kind, a.params[0] + b.params[0])),
        _ => None,
    }
}

/// One sweep: every gate slides forward through the gates it commutes with
/// until it either merges with a partner or meets a gate it cannot pass.
fn sweep(c: &Circuit) -> Option<Circuit> {
    let mut gates: Vec<Option<Gate>> = c.gates.iter().cloned().map(Some).collect();
    let mut on_qubit: Vec<Vec<usize>> = vec![Vec::new(); c.num_qubits];
    for (i, g) in c.gates.iter().enumerate() {
        for &q in &g.qubits {
            on_qubit[q].push(i);
        }
    }
    let mut changed = false;
    for i in 0..gates.len() {
        let Some(g) = gates[i].clone() else { continue };
        // later gates touching any of g's qubits, in order
        let later: BTreeSet<usize> = g
            .qubits
            .iter()
            .flat_map(|&q| on_qubit[q].iter().copied().filter(|&j| j > i))
            .collect();
        for j in later {
            let Some(h) = gates[j].clone() else { continue };
            match merge(&g, &h) {
                Some(Merge::Cancel) => {
                    gates[i] = None;
                    gates[j] = None;
                    changed = true;
                    break;
                }
                Some(Merge::Into(m)) => {
                    gates[i] = None;
                    gates[j] = Some(m);
                    changed = true;
                    break;
                }
                None if commutes(&g, &h) => continue,
                None => break,
            }
        }
    }
    changed.then(|| c.with_gates(gates.into_iter().flatten().collect()))
}

/// Cancels and merges gates exposed by the commutation whitelist, to
/// fixpoint.
pub fn commutative_cancel(c: &Circuit) -> Circuit {
    let mut cur = c.clone();
    while let Some(next) = sweep(&cur) {
        cur = next;
    }
    cur
}
