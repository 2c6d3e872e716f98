//! Randomized checks of the optimization passes against the simulator.

use std::f64::consts::PI;

use proptest::prelude::*;
use qcompile::optimize::OptPass;
use qcompile::sim::equivalent;
use qcompile::{Circuit, Gate, GateKind, Platform};

const FIXED_1Q: [GateKind; 9] = [
    GateKind::X,
    GateKind::Y,
    GateKind::Z,
    GateKind::H,
    GateKind::S,
    GateKind::Sdg,
    GateKind::T,
    GateKind::Tdg,
    GateKind::Sx,
];
const ROT_1Q: [GateKind; 3] = [GateKind::Rx, GateKind::Ry, GateKind::Rz];
const FIXED_2Q: [GateKind; 3] = [GateKind::Cx, GateKind::Cz, GateKind::Swap];

fn gate(n: usize) -> impl Strategy<Value = Gate> {
    // Quarter-turn angles make cancellations likely; the rest are generic.
    let angle = prop_oneof![(-4i32..=4).prop_map(|k| f64::from(k) * PI / 2.0), -PI..PI];
    prop_oneof![
        (prop::sample::select(FIXED_1Q.to_vec()), 0..n).prop_map(|(k, q)| Gate::one(k, q)),
        (prop::sample::select(ROT_1Q.to_vec()), angle, 0..n)
            .prop_map(|(k, a, q)| Gate::rot(k, a, q)),
        (prop::sample::select(FIXED_2Q.to_vec()), 0..n, 1..n)
            .prop_map(move |(k, a, off)| Gate::two(k, a, (a + off) % n)),
    ]
}

fn circuit() -> impl Strategy<Value = Circuit> {
    (2usize..=4).prop_flat_map(|n| {
        prop::collection::vec(gate(n), 0..24).prop_map(move |g| Circuit::from_gates(n, g).unwrap())
    })
}

fn platform() -> impl Strategy<Value = Option<Platform>> {
    prop_oneof![
        Just(None),
        Just(Some(Platform::Ibm)),
        Just(Some(Platform::Rigetti)),
        Just(Some(Platform::Ionq)),
        Just(Some(Platform::Oqc)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn passes_preserve_the_unitary(c in circuit(), p in platform()) {
        for pass in OptPass::ALL {
            let out = pass.apply(&c, p);
            prop_assert!(equivalent(&c, &out, false, 1e-9).unwrap(), "{} broke {:?}", pass.name(), c);
        }
    }

    #[test]
    fn passes_reach_a_fixpoint(c in circuit(), p in platform()) {
        for pass in OptPass::ALL {
            let once = pass.apply(&c, p);
            prop_assert_eq!(&pass.apply(&once, p), &once, "{} is not idempotent", pass.name());
        }
    }

    #[test]
    fn cancellations_never_add_gates(c in circuit()) {
        for pass in [OptPass::CancelCx, OptPass::CommutativeCancel, OptPass::InverseCancel, OptPass::RemoveTrivial] {
            prop_assert!(pass.apply(&c, None).len() <= c.len(), "{}", pass.name());
        }
    }
}
