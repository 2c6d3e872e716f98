//! Fixtures shared by the criterion benchmarks.

use qcompile::bench::{generate, BenchmarkSpec, Family};
use qcompile::device::{default_registry_dir, resolve_device};
use qcompile::mapping::layout_trivial;
use qcompile::synthesis::synthesize;
use qcompile::{Circuit, Device};

/// A shipped device by name. Panics if it is missing, which only happens
/// in a broken checkout.
pub fn device(name: &str) -> Device {
    resolve_device(name, &default_registry_dir()).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn circuit(family: Family, n: usize) -> Circuit {
    generate(&BenchmarkSpec::new(family, n, 0))
        .expect("size in range")
        .circuit
}

/// `circuit(family, n)` lowered to the device's gate set, before layout.
pub fn synthesized(family: Family, n: usize, d: &Device) -> Circuit {
    synthesize(&circuit(family, n), d.platform).expect("generator gates are supported")
}

/// Synthesized and placed on the first `n` physical qubits, ready for routing.
pub fn placed(family: Family, n: usize, d: &Device) -> Circuit {
    layout_trivial(&synthesized(family, n, d), d).expect("fits the device")
}
