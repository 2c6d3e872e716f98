//! Circuit intermediate representation.
//!
//! A [`Circuit`] is the single value every pass consumes and produces. Before
//! a layout is chosen its qubit indices are logical. A layout pass rewrites
//! the gates onto physical qubit indices, widens the register to the device
//! size and records the logical→physical assignment in `initial_layout`.
//! Routing then records where the state that started on each physical wire
//! ends up in `final_permutation`.

mod gate;
pub mod matrix;
pub mod qasm;

use std::collections::BTreeMap;

pub use gate::{gate_matrix, normalize_angle, Gate, GateKind};
pub use matrix::Matrix;
pub use qasm::{emit_qasm, parse_qasm};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
    /// Logical qubit `l` is placed on physical qubit `initial_layout[l]`.
    pub initial_layout: Option<Vec<usize>>,
    /// The state that started on wire `w` ends on wire `final_permutation[w]`.
    pub final_permutation: Option<Vec<usize>>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            ..Default::default()
        }
    }

    pub fn from_gates(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let c = Self {
            num_qubits,
            gates,
            initial_layout: None,
            final_permutation: None,
        };
        c.validate()?;
        Ok(c)
    }

    /// Appends a gate, checking operand ranges.
    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate()?;
        for &q in &gate.qubits {
            if q >= self.num_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    size: self.num_qubits,
                });
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Copies the register and layout metadata with a new gate list.
    pub fn with_gates(&self, gates: Vec<Gate>) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates,
            initial_layout: self.initial_layout.clone(),
            final_permutation: self.final_permutation.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.gates {
            g.validate()?;
            for &q in &g.qubits {
                if q >= self.num_qubits {
                    return Err(Error::QubitOutOfRange {
                        index: q,
                        size: self.num_qubits,
                    });
                }
            }
        }
        if let Some(layout) = &self.initial_layout {
            let mut seen = vec![false; self.num_qubits];
            for &p in layout {
                if p >= self.num_qubits || std::mem::replace(&mut seen[p], true) {
                    return Err(Error::InvalidCircuit(format!(
                        "initial layout {layout:?} is not injective into {} qubits",
                        self.num_qubits
                    )));
                }
            }
        }
        if let Some(perm) = &self.final_permutation {
            if perm.len() != self.num_qubits || !is_permutation(perm) {
                return Err(Error::InvalidCircuit(format!(
                    "final permutation is not a bijection on {} qubits",
                    self.num_qubits
                )));
            }
        }
        Ok(())
    }

    pub fn has_layout(&self) -> bool {
        self.initial_layout.is_some()
    }

    /// Number of logical qubits the circuit was written for.
    pub fn logical_width(&self) -> usize {
        self.initial_layout
            .as_ref()
            .map_or(self.num_qubits, |l| l.len())
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    pub fn count_kind(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    /// Qubits touched by a gate or named by the layout, ascending.
    pub fn active_qubits(&self) -> Vec<usize> {
        let mut used = vec![false; self.num_qubits];
        for g in &self.gates {
            for &q in &g.qubits {
                used[q] = true;
            }
        }
        if let Some(layout) = &self.initial_layout {
            for &p in layout {
                used[p] = true;
            }
        }
        if let Some(perm) = &self.final_permutation {
            for (w, &p) in perm.iter().enumerate() {
                if w != p {
                    used[w] = true;
                    used[p] = true;
                }
            }
        }
        (0..self.num_qubits).filter(|&q| used[q]).collect()
    }

    /// Greedy layer index (0-based) of every gate: one past the highest
    /// layer already occupied on any of its qubits.
    pub fn layer_indices(&self) -> Vec<usize> {
        let mut front = vec![0usize; self.num_qubits];
        self.gates
            .iter()
            .map(|g| {
                let layer = g.qubits.iter().map(|&q| front[q]).max().unwrap_or(0);
                for &q in &g.qubits {
                    front[q] = layer + 1;
                }
                layer
            })
            .collect()
    }

    pub fn depth(&self) -> usize {
        self.layer_indices()
            .into_iter()
            .map(|l| l + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn interaction_graph(&self) -> InteractionGraph {
        let mut edges = BTreeMap::new();
        for g in self.gates.iter().filter(|g| g.is_two_qubit()) {
            let (a, b) = (g.qubits[0], g.qubits[1]);
            *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
        InteractionGraph {
            num_qubits: self.num_qubits,
            edges,
        }
    }

    /// For every gate and each of its operands, the index of the next gate
    /// acting on that operand.
    pub fn successors(&self) -> Vec<Vec<Option<usize>>> {
        let mut next_on = vec![None; self.num_qubits];
        let mut succ = vec![Vec::new(); self.gates.len()];
        for (i, g) in self.gates.iter().enumerate().rev() {
            succ[i] = g.qubits.iter().map(|&q| next_on[q]).collect();
            for &q in &g.qubits {
                next_on[q] = Some(i);
            }
        }
        succ
    }

    /// For every gate and each of its operands, the index of the previous
    /// gate acting on that operand.
    pub fn predecessors(&self) -> Vec<Vec<Option<usize>>> {
        let mut last_on = vec![None; self.num_qubits];
        self.gates
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let preds = g.qubits.iter().map(|&q| last_on[q]).collect();
                for &q in &g.qubits {
                    last_on[q] = Some(i);
                }
                preds
            })
            .collect()
    }
}

pub(crate) fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    perm.iter()
        .all(|&p| p < perm.len() && !std::mem::replace(&mut seen[p], true))
}

/// Two-qubit interaction counts between qubit pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionGraph {
    pub num_qubits: usize,
    /// `(min, max)` pair → number of two-qubit gates on that pair.
    pub edges: BTreeMap<(usize, usize), usize>,
}

impl InteractionGraph {
    /// Number of distinct interaction partners of `q`.
    pub fn degree(&self, q: usize) -> usize {
        self.edges
            .keys()
            .filter(|&&(a, b)| a == q || b == q)
            .count()
    }

    /// Sum of interaction multiplicities incident to `q`.
    pub fn weighted_degree(&self, q: usize) -> usize {
        self.edges
            .iter()
            .filter(|(&(a, b), _)| a == q || b == q)
            .map(|(_, &m)| m)
            .sum()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.edges.values().sum()
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn depth_examples() {
        assert_eq!(Circuit::new(3).depth(), 0);
        // two 1q layers, then three cx that each depend on the previous one
        assert_eq!(example3().depth(), 5);
        let parallel =
            Circuit::from_gates(5, (0..5).map(|q| Gate::one(GateKind::X, q)).collect()).unwrap();
        assert_eq!(parallel.depth(), 1);
        assert_eq!(ghz(4).depth(), 4);
    }

    #[test]
    fn interaction_graph_examples() {
        let c = Circuit::from_gates(2, vec![Gate::one(GateKind::H, 0)]).unwrap();
        assert!(c.interaction_graph().edges.is_empty());

        let g = example3().interaction_graph();
        let expected: BTreeMap<_, _> = [((0, 1), 1), ((1, 2), 1), ((0, 2), 1)]
            .into_iter()
            .collect();
        assert_eq!(g.edges, expected);

        let g = ghz(6).interaction_graph();
        assert_eq!(g.edges.len(), 5);
        assert!(g.edges.keys().all(|&(a, b)| b == a + 1));
    }

    #[test]
    fn push_rejects_out_of_range() {
        let mut c = Circuit::new(2);
        assert!(matches!(
            c.push(Gate::cx(0, 2)),
            Err(Error::QubitOutOfRange { index: 2, size: 2 })
        ));
    }

    #[test]
    fn layout_must_be_injective() {
        let mut c = Circuit::new(3);
        c.initial_layout = Some(vec![0, 0]);
        assert!(c.validate().is_err());
        c.initial_layout = Some(vec![2, 0]);
        assert!(c.validate().is_ok());
        c.final_permutation = Some(vec![0, 1, 1]);
        assert!(c.validate().is_err());
    }
}
