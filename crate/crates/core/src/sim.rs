//! Dense statevector simulator used as the correctness oracle.
//!
//! Qubit 0 is the least-significant bit of a basis-state index. Two-qubit
//! gate matrices are indexed the same way, with the first operand as the
//! low bit.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::circuit::matrix::{ONE, ZERO};
use crate::circuit::{Circuit, Gate, Matrix};
use crate::error::{Error, Result};

/// Largest register the dense oracle accepts.
pub const MAX_ORACLE_QUBITS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[index] = ONE;
        Self {
            num_qubits,
            amplitudes,
        }
    }

    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn apply(&mut self, gate: &Gate) {
        let m = gate.matrix();
        match *gate.qubits.as_slice() {
            [q] => self.apply_1q(&m, q),
            [a, b] => self.apply_2q(&m, a, b),
            _ => unreachable!("gates act on one or two qubits"),
        }
    }

    fn apply_1q(&mut self, m: &Matrix, q: usize) {
        let bit = 1usize << q;
        let (m00, m01, m10, m11) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
        for i in 0..self.amplitudes.len() {
            if i & bit != 0 {
                continue;
            }
            let j = i | bit;
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
            self.amplitudes[i] = m00 * a0 + m01 * a1;
            self.amplitudes[j] = m10 * a0 + m11 * a1;
        }
    }

    fn apply_2q(&mut self, m: &Matrix, a: usize, b: usize) {
        let (ba, bb) = (1usize << a, 1usize << b);
        for base in 0..self.amplitudes.len() {
            if base & (ba | bb) != 0 {
                continue;
            }
            let idx = [base, base | ba, base | bb, base | ba | bb];
            let v = idx.map(|i| self.amplitudes[i]);
            for (r, &target) in idx.iter().enumerate() {
                let mut acc = ZERO;
                for (c, &x) in v.iter().enumerate() {
                    acc += m.get(r, c) * x;
                }
                self.amplitudes[target] = acc;
            }
        }
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_ORACLE_QUBITS {
        return Err(Error::TooManyQubits {
            circuit: n,
            limit: MAX_ORACLE_QUBITS,
        });
    }
    Ok(())
}

/// Runs the circuit on an input state.
pub fn simulate(c: &Circuit, state: &mut Statevector) -> Result<()> {
    if state.num_qubits != c.num_qubits {
        return Err(Error::QubitMismatch(format!(
            "state has {} qubits, circuit {}",
            state.num_qubits, c.num_qubits
        )));
    }
    for g in &c.gates {
        state.apply(g);
    }
    Ok(())
}

/// Full unitary; column `k` is the circuit applied to basis state `k`.
pub fn unitary_of(c: &Circuit) -> Result<Matrix> {
    check_size(c.num_qubits)?;
    let dim = 1usize << c.num_qubits;
    let mut u = Matrix::zeros(dim);
    for k in 0..dim {
        let mut sv = Statevector::basis(c.num_qubits, k);
        simulate(c, &mut sv)?;
        u.set_column(k, &sv.amplitudes);
    }
    Ok(u)
}

/// Unitary of a gate list acting on `n` qubits.
pub fn unitary_of_gates(n: usize, gates: &[Gate]) -> Matrix {
    let c = Circuit {
        num_qubits: n,
        gates: gates.to_vec(),
        initial_layout: None,
        final_permutation: None,
    };
    unitary_of(&c).expect("small gate list")
}

/// Relabels basis index `k` so that the bit on wire `w` moves to wire `perm[w]`.
fn permute_index(k: usize, perm: &[usize]) -> usize {
    perm.iter()
        .enumerate()
        .filter(|(w, _)| k & (1 << w) != 0)
        .fold(0, |acc, (_, &p)| acc | (1 << p))
}

/// The comparison problem after both circuits are moved onto a shared
/// compact register.
struct Aligned {
    width: usize,
    /// Compact wires carrying `a`'s logical qubits.
    logical_wires: Vec<usize>,
    a: Vec<Gate>,
    b: Vec<Gate>,
    perm: Vec<usize>,
}

fn align(a: &Circuit, b: &Circuit, layout_aware: bool) -> Result<Aligned> {
    let wires = b.num_qubits.max(a.num_qubits);
    let layout: Vec<usize> = match (&b.initial_layout, layout_aware) {
        (Some(l), true) => {
            if l.len() != a.num_qubits {
                return Err(Error::QubitMismatch(format!(
                    "layout covers {} logical qubits, circuit has {}",
                    l.len(),
                    a.num_qubits
                )));
            }
            l.clone()
        }
        _ => (0..a.num_qubits).collect(),
    };
    let perm: Vec<usize> = match (&b.final_permutation, layout_aware) {
        (Some(p), true) => p.clone(),
        _ => (0..wires).collect(),
    };
    let mut perm = perm;
    perm.extend(perm.len()..wires);

    let mut used = vec![false; wires];
    for &p in &layout {
        used[p] = true;
    }
    for g in &b.gates {
        for &q in &g.qubits {
            used[q] = true;
        }
    }
    for (w, &p) in perm.iter().enumerate() {
        if w != p {
            used[w] = true;
            used[p] = true;
        }
    }
    // a's qubits beyond b's register must be idle, or the registers differ
    for g in &a.gates {
        for &q in &g.qubits {
            if layout[q] >= b.num_qubits {
                return Err(Error::QubitMismatch(format!(
                    "qubit {q} is active in the first circuit but absent from the second"
                )));
            }
        }
    }
    let active: Vec<usize> = (0..wires).filter(|&w| used[w]).collect();
    let mut compact = vec![usize::MAX; wires];
    for (i, &w) in active.iter().enumerate() {
        compact[w] = i;
    }
    Ok(Aligned {
        width: active.len(),
        logical_wires: layout.iter().map(|&p| compact[p]).collect(),
        a: a.gates
            .iter()
            .map(|g| g.remapped(|q| compact[layout[q]]))
            .collect(),
        b: b.gates.iter().map(|g| g.remapped(|q| compact[q])).collect(),
        perm: active.iter().map(|&w| compact[perm[w]]).collect(),
    })
}

/// Oracle equivalence of two circuits up to global phase.
///
/// With `layout_aware`, `b`'s logical qubit `l` is read from physical wire
/// `initial_layout[l]` and its output permutation is undone before
/// comparison. Idle wires on either side are padding.
pub fn equivalent(a: &Circuit, b: &Circuit, layout_aware: bool, tol: f64) -> Result<bool> {
    check_size(a.num_qubits.min(a.logical_width()))?;
    let al = align(a, b, layout_aware)?;
    if al.width <= MAX_ORACLE_QUBITS {
        Ok(dense_equivalent(&al, tol))
    } else {
        check_size(al.logical_wires.len())?;
        Ok(sparse_equivalent(&al, tol))
    }
}

fn dense_equivalent(al: &Aligned, tol: f64) -> bool {
    let n = al.width;
    let ua = unitary_of_gates(n, &al.a);
    let ub = unitary_of_gates(n, &al.b);
    // expected = P · U_a
    let dim = 1usize << n;
    let mut expected = Matrix::zeros(dim);
    for r in 0..dim {
        let pr = permute_index(r, &al.perm);
        for c in 0..dim {
            expected.set(pr, c, ua.get(r, c));
        }
    }
    let Some(phase) = ub.relative_phase(&expected) else {
        return false;
    };
    ub.max_abs_diff(&expected.scale(phase)) <= tol
}

type Sparse = HashMap<u128, Complex64>;

fn sparse_apply(state: &Sparse, gate: &Gate) -> Sparse {
    let m = gate.matrix();
    let mut out: Sparse = HashMap::with_capacity(state.len() * 2);
    let bits: Vec<u128> = gate.qubits.iter().map(|&q| 1u128 << q).collect();
    let mask: u128 = bits.iter().fold(0, |a, b| a | b);
    let dim = 1usize << bits.len();
    for (&idx, &amp) in state {
        let col = bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| idx & b != 0)
            .fold(0usize, |acc, (i, _)| acc | (1 << i));
        let base = idx & !mask;
        for row in 0..dim {
            let coeff = m.get(row, col);
            if coeff == ZERO {
                continue;
            }
            let target = bits
                .iter()
                .enumerate()
                .filter(|(i, _)| row & (1 << i) != 0)
                .fold(base, |acc, (_, &b)| acc | b);
            *out.entry(target).or_insert(ZERO) += coeff * amp;
        }
    }
    out.retain(|_, a| a.norm_sqr() > 1e-30);
    out
}

/// Checks `b|x,0⟩ = e^{iφ}·P·(a|x⟩ ⊗ |0⟩)` for every logical basis input,
/// with one shared phase. Used when routing spreads the circuit over more
/// wires than the dense oracle can hold.
fn sparse_equivalent(al: &Aligned, tol: f64) -> bool {
    let n_logical = al.logical_wires.len();
    let mut phase: Option<Complex64> = None;
    for x in 0..(1usize << n_logical) {
        let input: u128 = al
            .logical_wires
            .iter()
            .enumerate()
            .filter(|(i, _)| x & (1 << i) != 0)
            .fold(0, |acc, (_, &w)| acc | (1u128 << w));
        let mut sa: Sparse = HashMap::from([(input, ONE)]);
        for g in &al.a {
            sa = sparse_apply(&sa, g);
        }
        let sa: Sparse = sa
            .into_iter()
            .map(|(k, v)| {
                let moved = (0..al.width)
                    .filter(|&w| k & (1u128 << w) != 0)
                    .fold(0u128, |acc, w| acc | (1u128 << al.perm[w]));
                (moved, v)
            })
            .collect();
        let mut sb: Sparse = HashMap::from([(input, ONE)]);
        for g in &al.b {
            sb = sparse_apply(&sb, g);
        }
        if phase.is_none() {
            let (&k, &v) = sa
                .iter()
                .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()).then(y.0.cmp(x.0)))
                .expect("normalized state");
            let w = sb.get(&k).copied().unwrap_or(ZERO);
            if w.norm() < 1e-12 {
                return false;
            }
            let r = w / v;
            phase = Some(r / r.norm());
        }
        let ph = phase.expect("set above");
        let keys: std::collections::BTreeSet<u128> = sa.keys().chain(sb.keys()).copied().collect();
        for k in keys {
            let va = sa.get(&k).copied().unwrap_or(ZERO) * ph;
            let vb = sb.get(&k).copied().unwrap_or(ZERO);
            if (va - vb).norm() > tol {
                return false;
            }
        }
    }
    true
}
