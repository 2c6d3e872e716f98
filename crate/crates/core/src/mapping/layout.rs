use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::routing::{sabre_swap_count, SABRE_LAYOUT_ROUNDS};
use crate::circuit::{Circuit, Gate};
use crate::device::Device;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayoutMethod {
    Trivial,
    Dense,
    Sabre,
}

impl LayoutMethod {
    pub const ALL: [LayoutMethod; 3] = [
        LayoutMethod::Trivial,
        LayoutMethod::Dense,
        LayoutMethod::Sabre,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayoutMethod::Trivial => "trivial",
            LayoutMethod::Dense => "dense",
            LayoutMethod::Sabre => "sabre",
        }
    }

    pub fn apply(self, c: &Circuit, d: &Device, seed: u64) -> Result<Circuit> {
        match self {
            LayoutMethod::Trivial => layout_trivial(c, d),
            LayoutMethod::Dense => layout_dense(c, d),
            LayoutMethod::Sabre => layout_sabre(c, d, seed),
        }
    }
}

fn check(c: &Circuit, d: &Device) -> Result<()> {
    if c.has_layout() {
        return Err(Error::LayoutPresent);
    }
    if c.num_qubits > d.num_qubits {
        return Err(Error::CircuitTooLarge {
            circuit: c.num_qubits,
            device: d.name.clone(),
            device_qubits: d.num_qubits,
        });
    }
    Ok(())
}

/// Moves `c` onto physical qubits according to `layout` (logical → physical).
pub(crate) fn apply_layout(c: &Circuit, d: &Device, layout: Vec<usize>) -> Circuit {
    debug_assert_eq!(layout.len(), c.num_qubits);
    Circuit {
        num_qubits: d.num_qubits,
        gates: c.gates.iter().map(|g| g.remapped(|q| layout[q])).collect(),
        initial_layout: Some(layout),
        final_permutation: None,
    }
}

/// Logical qubit `l` on physical qubit `l`.
pub fn layout_trivial(c: &Circuit, d: &Device) -> Result<Circuit> {
    check(c, d)?;
    Ok(apply_layout(c, d, (0..c.num_qubits).collect()))
}

/// Grows a connected region from the highest-degree physical qubit, always
/// adding the highest-degree neighbour (lowest index on ties). Logical
/// qubits, ordered by interaction weight, fill it in selection order.
pub fn layout_dense(c: &Circuit, d: &Device) -> Result<Circuit> {
    check(c, d)?;
    let n = c.num_qubits;
    let mut region: Vec<usize> = Vec::with_capacity(n);
    let mut chosen = vec![false; d.num_qubits];
    if n > 0 {
        let start = (0..d.num_qubits)
            .max_by_key(|&q| (d.degree(q), std::cmp::Reverse(q)))
            .expect("device has qubits");
        region.push(start);
        chosen[start] = true;
    }
    while region.len() < n {
        let frontier: BTreeSet<usize> = region
            .iter()
            .flat_map(|&q| d.neighbors(q).iter().copied())
            .filter(|&q| !chosen[q])
            .collect();
        let next = frontier
            .into_iter()
            .max_by_key(|&q| (d.degree(q), std::cmp::Reverse(q)))
            .expect("connected device");
        region.push(next);
        chosen[next] = true;
    }

    let graph = c.interaction_graph();
    let mut logical: Vec<usize> = (0..n).collect();
    logical.sort_by_key(|&l| (std::cmp::Reverse(graph.weighted_degree(l)), l));
    let mut layout = vec![0; n];
    for (slot, &l) in logical.iter().enumerate() {
        layout[l] = region[slot];
    }
    Ok(apply_layout(c, d, layout))
}

/// Seeded random connected region, shuffled, as the starting layout.
fn random_start(n: usize, d: &Device, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut region = vec![rng.gen_range(0..d.num_qubits)];
    let mut chosen = vec![false; d.num_qubits];
    chosen[region[0]] = true;
    while region.len() < n {
        let frontier: Vec<usize> = region
            .iter()
            .flat_map(|&q| d.neighbors(q).iter().copied())
            .filter(|&q| !chosen[q])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let next = frontier[rng.gen_range(0..frontier.len())];
        region.push(next);
        chosen[next] = true;
    }
    region.shuffle(rng);
    region
}

/// Reverse-traversal layout search: from a seeded random start, alternate
/// forward and backward SABRE routing passes, each one's final placement
/// seeding the next. The starting layout of the cheapest forward pass wins.
pub fn layout_sabre(c: &Circuit, d: &Device, seed: u64) -> Result<Circuit> {
    check(c, d)?;
    let n = c.num_qubits;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if n == 0 {
        return Ok(apply_layout(c, d, Vec::new()));
    }
    let reversed: Vec<Gate> = c.gates.iter().rev().cloned().collect();
    let mut layout = random_start(n, d, &mut rng);
    let mut best: Option<(usize, Vec<usize>)> = None;
    for _ in 0..SABRE_LAYOUT_ROUNDS {
        let (swaps, after) = sabre_swap_count(&c.gates, d, &layout, rng.gen());
        if best.as_ref().is_none_or(|(s, _)| swaps < *s) {
            best = Some((swaps, layout.clone()));
        }
        let (_, back) = sabre_swap_count(&reversed, d, &after, rng.gen());
        layout = back;
    }
    let (swaps, _) = sabre_swap_count(&c.gates, d, &layout, rng.gen());
    if best.as_ref().is_none_or(|(s, _)| swaps < *s) {
        best = Some((swaps, layout));
    }
    Ok(apply_layout(c, d, best.expect("at least one round").1))
}
