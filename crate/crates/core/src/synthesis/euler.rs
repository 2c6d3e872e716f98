//! Single-qubit Euler decompositions.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::circuit::{normalize_angle, Gate, GateKind, Matrix};
use crate::device::EulerBasis;
use crate::error::{Error, Result};

/// Rotations smaller than this are dropped.
pub const ANGLE_EPS: f64 = 1e-10;

/// `U = e^{iα}·Rz(φ)·Ry(θ)·Rz(λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZyzAngles {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
}

pub fn zyz_angles(u: &Matrix) -> Result<ZyzAngles> {
    assert_eq!(u.dim(), 2, "single-qubit matrix expected");
    let err = u.unitarity_error();
    if err > 1e-10 {
        return Err(Error::NonUnitary(err));
    }
    // project onto SU(2)
    let det = u.det2();
    let v = u.scale(Complex64::from_polar(1.0, -det.arg() / 2.0));
    let (a, b) = (v.get(0, 0), v.get(1, 0));
    let theta = 2.0 * b.norm().atan2(a.norm());
    let sum = if a.norm() > 1e-14 {
        -2.0 * a.arg()
    } else {
        0.0
    };
    let diff = if b.norm() > 1e-14 { 2.0 * b.arg() } else { 0.0 };
    Ok(ZyzAngles {
        theta,
        phi: (sum + diff) / 2.0,
        lambda: (sum - diff) / 2.0,
    })
}

fn push_rot(out: &mut Vec<Gate>, kind: GateKind, angle: f64, q: usize) {
    let a = normalize_angle(angle);
    if a.abs() > ANGLE_EPS && (a.abs() - 2.0 * PI).abs() > ANGLE_EPS {
        out.push(Gate::rot(kind, a, q));
    }
}

fn near(x: f64, target: f64) -> bool {
    normalize_angle(x - target).abs() < ANGLE_EPS
}

fn sequence(angles: ZyzAngles, basis: EulerBasis, q: usize) -> Vec<Gate> {
    let ZyzAngles { theta, phi, lambda } = angles;
    let mut out = Vec::new();
    if theta.abs() < ANGLE_EPS {
        push_rot(&mut out, GateKind::Rz, phi + lambda, q);
        return out;
    }
    if near(theta, PI) {
        // Rz(φ)·Ry(π)·Rz(λ) = Rz(φ − λ)·Ry(π), and Ry(π) = Rz(π)·X = Rz(π)·Rx(π)
        // up to phase: two gates at most.
        match basis {
            EulerBasis::Zyz => {
                out.push(Gate::rot(GateKind::Ry, PI, q));
                push_rot(&mut out, GateKind::Rz, phi - lambda, q);
            }
            EulerBasis::Zxz => {
                out.push(Gate::rot(GateKind::Rx, PI, q));
                push_rot(&mut out, GateKind::Rz, phi - lambda + PI, q);
            }
            EulerBasis::ZSx => {
                out.push(Gate::one(GateKind::X, q));
                push_rot(&mut out, GateKind::Rz, phi - lambda + PI, q);
            }
        }
        return out;
    }
    match basis {
        EulerBasis::Zyz => {
            push_rot(&mut out, GateKind::Rz, lambda, q);
            push_rot(&mut out, GateKind::Ry, theta, q);
            push_rot(&mut out, GateKind::Rz, phi, q);
        }
        EulerBasis::Zxz => {
            push_rot(&mut out, GateKind::Rz, lambda - FRAC_PI_2, q);
            push_rot(&mut out, GateKind::Rx, theta, q);
            push_rot(&mut out, GateKind::Rz, phi + FRAC_PI_2, q);
        }
        EulerBasis::ZSx => {
            if near(theta, FRAC_PI_2) {
                push_rot(&mut out, GateKind::Rz, lambda - FRAC_PI_2, q);
                out.push(Gate::one(GateKind::Sx, q));
                push_rot(&mut out, GateKind::Rz, phi + FRAC_PI_2, q);
            } else {
                push_rot(&mut out, GateKind::Rz, lambda, q);
                out.push(Gate::one(GateKind::Sx, q));
                push_rot(&mut out, GateKind::Rz, theta + PI, q);
                out.push(Gate::one(GateKind::Sx, q));
                push_rot(&mut out, GateKind::Rz, phi + PI, q);
            }
        }
    }
    out
}

/// Product of a single-qubit gate list in circuit order.
pub fn product_1q(gates: &[Gate]) -> Matrix {
    gates
        .iter()
        .fold(Matrix::identity(2), |acc, g| &g.matrix() * &acc)
}

/// Expresses `u` in the given basis on qubit `q` (at most five gates).
/// The identity maps to an empty sequence.
pub fn euler_1q(u: &Matrix, basis: EulerBasis, q: usize) -> Result<Vec<Gate>> {
    let angles = zyz_angles(u)?;
    let seq = sequence(angles, basis, q);
    debug_assert!(
        product_1q(&seq).equal_up_to_phase(u, 1e-9),
        "euler reconstruction failed for {basis:?}: {angles:?}"
    );
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const BASES: [EulerBasis; 3] = [EulerBasis::ZSx, EulerBasis::Zxz, EulerBasis::Zyz];

    /// Haar-random 2×2 unitary from a normalized complex Gaussian QR.
    fn haar(rng: &mut ChaCha8Rng) -> Matrix {
        let mut g = || {
            // Box–Muller
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
        };
        let a = Complex64::new(g(), g());
        let b = Complex64::new(g(), g());
        let c = Complex64::new(g(), g());
        let d = Complex64::new(g(), g());
        // Gram–Schmidt on columns (a, b), (c, d)
        let n1 = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (a, b) = (a / n1, b / n1);
        let proj = a.conj() * c + b.conj() * d;
        let (c, d) = (c - proj * a, d - proj * b);
        let n2 = (c.norm_sqr() + d.norm_sqr()).sqrt();
        Matrix::from_rows(&[&[a, c / n2], &[b, d / n2]])
    }

    #[test]
    fn identity_is_empty() {
        for basis in BASES {
            assert!(euler_1q(&Matrix::identity(2), basis, 0).unwrap().is_empty());
        }
    }

    #[test]
    fn hadamard_in_ibm_basis() {
        let h = Gate::one(GateKind::H, 0).matrix();
        let seq = euler_1q(&h, EulerBasis::ZSx, 0).unwrap();
        assert_eq!(
            seq,
            vec![
                Gate::rot(GateKind::Rz, FRAC_PI_2, 0),
                Gate::one(GateKind::Sx, 0),
                Gate::rot(GateKind::Rz, FRAC_PI_2, 0),
            ]
        );
    }

    #[test]
    fn haar_random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for _ in 0..1000 {
            let u = haar(&mut rng);
            for basis in BASES {
                let seq = euler_1q(&u, basis, 0).unwrap();
                assert!(seq.len() <= 5);
                assert!(seq.iter().all(|g| basis.gates().contains(&g.kind)));
                let err = {
                    let p = product_1q(&seq);
                    let ph = p.relative_phase(&u).unwrap();
                    p.max_abs_diff(&u.scale(ph))
                };
                assert!(err < 1e-9, "{basis:?} error {err}");
            }
        }
    }

    #[test]
    fn half_turns_take_two_gates() {
        let x = Gate::one(GateKind::X, 0).matrix();
        assert_eq!(
            euler_1q(&x, EulerBasis::ZSx, 0).unwrap(),
            vec![Gate::one(GateKind::X, 0)]
        );
        let y = Gate::one(GateKind::Y, 0).matrix();
        for basis in BASES {
            assert!(euler_1q(&y, basis, 0).unwrap().len() <= 2, "{basis:?}");
        }
        // [ry(-π), y, x] is X up to phase
        let run = [
            Gate::rot(GateKind::Ry, -PI, 0),
            Gate::one(GateKind::Y, 0),
            Gate::one(GateKind::X, 0),
        ];
        assert_eq!(
            euler_1q(&product_1q(&run), EulerBasis::ZSx, 0)
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn special_angles() {
        for kind in [
            GateKind::X,
            GateKind::Y,
            GateKind::Z,
            GateKind::S,
            GateKind::T,
            GateKind::Sx,
        ] {
            let u = Gate::one(kind, 0).matrix();
            for basis in BASES {
                let seq = euler_1q(&u, basis, 0).unwrap();
                assert!(
                    product_1q(&seq).equal_up_to_phase(&u, 1e-9),
                    "{kind} in {basis:?}"
                );
                assert!(seq.len() <= 3, "{kind} in {basis:?}: {seq:?}");
            }
        }
    }

    #[test]
    fn non_unitary_rejected() {
        let m = Matrix::from_real(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(
            euler_1q(&m, EulerBasis::Zxz, 0),
            Err(Error::NonUnitary(_))
        ));
    }
}
