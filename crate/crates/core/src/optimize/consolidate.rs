//! Two-qubit block consolidation.

use num_complex::Complex64;

use super::IDENTITY_TOL;
use crate::circuit::{Circuit, Gate, Matrix};
use crate::device::{EulerBasis, Platform};
use crate::sim::unitary_of_gates;
use crate::synthesis::{euler_1q, GENERIC_BASIS};

struct Block {
    pair: (usize, usize),
    gates: Vec<usize>,
    open: bool,
}

/// Greedy maximal blocks: a block on `(a, b)` absorbs every following gate
/// on `a` or `b` until another two-qubit gate touches one of them.
fn collect_blocks(c: &Circuit) -> (Vec<Block>, Vec<Option<usize>>) {
    let mut blocks: Vec<Block> = Vec::new();
    let mut current: Vec<Option<usize>> = vec![None; c.num_qubits];
    let mut owner = vec![None; c.gates.len()];
    for (i, g) in c.gates.iter().enumerate() {
        if g.is_two_qubit() {
            let (a, b) = (g.qubits[0], g.qubits[1]);
            let pair = (a.min(b), a.max(b));
            match (current[a], current[b]) {
                (Some(x), Some(y)) if x == y && blocks[x].pair == pair => {
                    blocks[x].gates.push(i);
                    owner[i] = Some(x);
                    continue;
                }
                _ => {}
            }
            for q in [a, b] {
                if let Some(k) = current[q] {
                    blocks[k].open = false;
                    let (p, r) = blocks[k].pair;
                    current[p] = None;
                    current[r] = None;
                }
            }
            blocks.push(Block {
                pair,
                gates: vec![i],
                open: true,
            });
            let k = blocks.len() - 1;
            current[a] = Some(k);
            current[b] = Some(k);
            owner[i] = Some(k);
        } else if let Some(k) = current[g.qubits[0]].filter(|&k| blocks[k].open) {
            blocks[k].gates.push(i);
            owner[i] = Some(k);
        }
    }
    (blocks, owner)
}

/// Splits `u` (wire 0 low) as `B ⊗ A` with `A` on wire 0, if it is a
/// product. Both factors are rescaled to unitaries.
fn split_product(u: &Matrix) -> Option<(Matrix, Matrix)> {
    // realignment R[(rb,cb),(ra,ca)] = U[(rb,ra),(cb,ca)] is rank one iff U is a product
    let entry = |rb: usize, cb: usize, ra: usize, ca: usize| u.get(2 * rb + ra, 2 * cb + ca);
    let mut best = (0, 0, 0, 0);
    let mut mag = 0.0;
    for rb in 0..2 {
        for cb in 0..2 {
            for ra in 0..2 {
                for ca in 0..2 {
                    let m = entry(rb, cb, ra, ca).norm();
                    if m > mag {
                        mag = m;
                        best = (rb, cb, ra, ca);
                    }
                }
            }
        }
    }
    let (rb0, cb0, ra0, ca0) = best;
    let pivot = entry(rb0, cb0, ra0, ca0);
    let mut a = Matrix::zeros(2);
    let mut b = Matrix::zeros(2);
    for r in 0..2 {
        for c in 0..2 {
            a.set(r, c, entry(rb0, cb0, r, c) / pivot);
            b.set(r, c, entry(r, c, ra0, ca0));
        }
    }
    let normalize = |m: Matrix| {
        let det = m.det2();
        if det.norm() < 1e-12 {
            return None;
        }
        Some(m.scale(Complex64::new(1.0 / det.norm().sqrt(), 0.0)))
    };
    let (a, b) = (normalize(a)?, normalize(b)?);
    if a.unitarity_error() > 1e-9 || b.unitarity_error() > 1e-9 {
        return None;
    }
    b.kron(&a).equal_up_to_phase(u, 1e-9).then_some((a, b))
}

fn local_gates(a: &Matrix, b: &Matrix, basis: EulerBasis) -> Vec<Gate> {
    let mut out = euler_1q(a, basis, 0).expect("unitary factor");
    out.extend(euler_1q(b, basis, 1).expect("unitary factor"));
    out
}

/// Cheapest replacement on wires 0/1 for a block unitary `u`: nothing,
/// local gates, or one cx with local gates on one side.
fn resynthesize(u: &Matrix, basis: EulerBasis) -> Option<Vec<Gate>> {
    if u.is_identity_up_to_phase(IDENTITY_TOL) {
        return Some(Vec::new());
    }
    if let Some((a, b)) = split_product(u) {
        return Some(local_gates(&a, &b, basis));
    }
    let mut options: Vec<Vec<Gate>> = Vec::new();
    for cx in [Gate::cx(0, 1), Gate::cx(1, 0)] {
        let m = unitary_of_gates(2, std::slice::from_ref(&cx));
        // u = L·cx  →  cx first, then the local layer
        if let Some((a, b)) = split_product(&(u * &m)) {
            let mut seq = vec![cx.clone()];
            seq.extend(local_gates(&a, &b, basis));
            options.push(seq);
        }
        // u = cx·L  →  local layer first
        if let Some((a, b)) = split_product(&(&m * u)) {
            let mut seq = local_gates(&a, &b, basis);
            seq.push(cx);
            options.push(seq);
        }
    }
    options.into_iter().min_by_key(Vec::len)
}

/// Replaces two-qubit blocks whose unitary needs fewer two-qubit gates
/// than the block spends: identity blocks vanish, product blocks become
/// local gates, and blocks equal to a single cx up to local gates on one
/// side shrink to that form. The new form must also not be longer.
/// Single-qubit gates are emitted in the platform basis (ZXZ without one);
/// the entangler is always a cx.
pub fn consolidate_2q(c: &Circuit, platform: Option<Platform>) -> Circuit {
    let basis = platform.map_or(GENERIC_BASIS, Platform::euler_basis);
    let mut cur = c.clone();
    // each round strictly lowers the two-qubit count, so this terminates
    while let Some(next) = consolidate_once(&cur, basis) {
        cur = next;
    }
    cur
}

fn consolidate_once(c: &Circuit, basis: EulerBasis) -> Option<Circuit> {
    let (blocks, owner) = collect_blocks(c);
    let mut replacement: Vec<Option<Vec<Gate>>> = vec![None; blocks.len()];
    for (k, block) in blocks.iter().enumerate() {
        let two_q = block
            .gates
            .iter()
            .filter(|&&i| c.gates[i].is_two_qubit())
            .count();
        if two_q == 0 {
            continue;
        }
        let (p, q) = block.pair;
        let local = |x: usize| if x == p { 0 } else { 1 };
        let gates: Vec<Gate> = block
            .gates
            .iter()
            .map(|&i| c.gates[i].remapped(local))
            .collect();
        let u = unitary_of_gates(2, &gates);
        if let Some(seq) = resynthesize(&u, basis) {
            let seq_2q = seq.iter().filter(|g| g.is_two_qubit()).count();
            if seq_2q < two_q && seq.len() <= gates.len() {
                debug_assert!(unitary_of_gates(2, &seq).equal_up_to_phase(&u, 1e-9));
                let back = |x: usize| if x == 0 { p } else { q };
                replacement[k] = Some(seq.iter().map(|g| g.remapped(back)).collect());
            }
        }
    }
    if replacement.iter().all(Option::is_none) {
        return None;
    }
    let mut out = Vec::with_capacity(c.gates.len());
    for (i, g) in c.gates.iter().enumerate() {
        match owner[i] {
            Some(k) if replacement[k].is_some() => {
                // emit the block where its last gate stood
                if *blocks[k].gates.last().expect("nonempty block") == i {
                    out.extend(replacement[k].take().expect("checked above"));
                }
            }
            _ => out.push(g.clone()),
        }
    }
    Some(c.with_gates(out))
}
