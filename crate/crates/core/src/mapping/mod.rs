//! Layout and routing.
//!
//! Layout passes place logical qubits on physical ones: the gate list is
//! rewritten onto physical indices and the register widened to the device.
//! Routing passes then insert swaps (or bridges) until every two-qubit gate
//! acts on a coupled pair. Swaps are emitted already lowered to the device
//! platform's native gates.

mod layout;
mod routing;

pub use layout::{layout_dense, layout_sabre, layout_trivial, LayoutMethod};
pub use routing::{
    route, route_basic, route_sabre, route_stochastic, route_tket_style, RouteMethod, Routed,
    STOCHASTIC_TRIALS,
};

use crate::circuit::Circuit;
use crate::device::Device;

/// True iff every two-qubit gate acts on a coupled pair of `d`.
pub fn respects_coupling(c: &Circuit, d: &Device) -> bool {
    c.num_qubits <= d.num_qubits
        && c.gates
            .iter()
            .filter(|g| g.is_two_qubit())
            .all(|g| d.is_coupled(g.qubits[0], g.qubits[1]))
}
