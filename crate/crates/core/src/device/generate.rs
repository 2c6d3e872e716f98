//! Generators for the shipped device files.
//!
//! Topologies approximate the published hardware; calibration values are
//! synthetic, drawn from a fixed seed so the committed files can be
//! regenerated bit-for-bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CalibrationData, Coupling, Device, Platform};
use crate::error::Result;

pub const CALIBRATION_SEED: u64 = 20_221_024;

const ONE_Q_RANGE: (f64, f64) = (0.9990, 0.9999);
const TWO_Q_RANGE: (f64, f64) = (0.985, 0.995);

/// 27-qubit Falcon coupling map.
pub fn montreal_edges() -> Vec<(usize, usize)> {
    vec![
        (0, 1),
        (1, 2),
        (1, 4),
        (2, 3),
        (3, 5),
        (4, 7),
        (5, 8),
        (6, 7),
        (7, 10),
        (8, 9),
        (8, 11),
        (10, 12),
        (11, 14),
        (12, 13),
        (12, 15),
        (13, 14),
        (14, 16),
        (15, 18),
        (16, 19),
        (17, 18),
        (18, 21),
        (19, 20),
        (19, 22),
        (21, 23),
        (22, 25),
        (23, 24),
        (24, 25),
        (25, 26),
    ]
}

/// 127-qubit heavy-hex lattice: seven rows (14, 15, 15, 15, 15, 15, 14
/// qubits) joined by four bridge qubits between consecutive rows.
pub fn washington_edges() -> Vec<(usize, usize)> {
    let row_len = [14usize, 15, 15, 15, 15, 15, 14];
    let mut starts = Vec::new();
    let mut bridge_starts = Vec::new();
    let mut next = 0;
    for (r, &len) in row_len.iter().enumerate() {
        starts.push(next);
        next += len;
        if r + 1 < row_len.len() {
            bridge_starts.push(next);
            next += 4;
        }
    }
    debug_assert_eq!(next, 127);

    let mut edges = Vec::new();
    for (r, &len) in row_len.iter().enumerate() {
        for i in 0..len - 1 {
            edges.push((starts[r] + i, starts[r] + i + 1));
        }
    }
    for r in 0..row_len.len() - 1 {
        // bridges alternate between columns 0,4,8,12 and 2,6,10,14
        let upper_offset = if r % 2 == 0 { 0 } else { 2 };
        let lower_offset = match r {
            0 => 0,
            5 => 1,
            _ if r % 2 == 0 => 0,
            _ => 2,
        };
        for k in 0..4 {
            let bridge = bridge_starts[r] + k;
            edges.push((starts[r] + upper_offset + 4 * k, bridge));
            edges.push((bridge, starts[r + 1] + lower_offset + 4 * k));
        }
    }
    edges
}

/// 80 qubits: two rows of five octagons. Octagon sides: 0-1 top, 2-3
/// right, 4-5 bottom, 6-7 left.
pub fn aspen_edges() -> Vec<(usize, usize)> {
    let q = |oct: usize, j: usize| 8 * oct + j;
    let mut edges = Vec::new();
    for oct in 0..10 {
        for j in 0..8 {
            edges.push((q(oct, j), q(oct, (j + 1) % 8)));
        }
    }
    for row in 0..2 {
        for col in 0..4 {
            let (a, b) = (row * 5 + col, row * 5 + col + 1);
            edges.push((q(a, 2), q(b, 7)));
            edges.push((q(a, 3), q(b, 6)));
        }
    }
    for col in 0..5 {
        let (a, b) = (col, 5 + col);
        edges.push((q(a, 5), q(b, 0)));
        edges.push((q(a, 4), q(b, 1)));
    }
    edges
}

pub fn ring_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

pub fn line_edges(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|i| (i - 1, i)).collect()
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    // six decimals keeps the JSON files readable
    (rng.gen_range(lo..hi) * 1e6).round() / 1e6
}

/// Synthetic calibration for every native gate of the platform.
pub fn synthetic_calibration(
    platform: Platform,
    num_qubits: usize,
    coupling: &Coupling,
    seed: u64,
) -> CalibrationData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cal = CalibrationData::default();
    for q in 0..num_qubits {
        for &kind in platform.native_gates().iter().filter(|k| k.arity() == 1) {
            cal.one_q.insert((q, kind), draw(&mut rng, ONE_Q_RANGE));
        }
    }
    let edges: Vec<(usize, usize)> = match coupling {
        Coupling::AllToAll => (0..num_qubits)
            .flat_map(|a| (a + 1..num_qubits).map(move |b| (a, b)))
            .collect(),
        Coupling::Edges(e) => {
            let mut e: Vec<_> = e.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
            e.sort_unstable();
            e.dedup();
            e
        }
    };
    let kind = platform.native_2q();
    for e in edges {
        cal.two_q.insert((e, kind), draw(&mut rng, TWO_Q_RANGE));
    }
    cal
}

fn build(
    name: &str,
    platform: Platform,
    n: usize,
    coupling: Coupling,
    seed: u64,
) -> Result<Device> {
    let cal = synthetic_calibration(platform, n, &coupling, seed);
    Device::new(name, platform, n, coupling, cal)
}

/// The five registry devices, name-sorted.
pub fn shipped_devices(seed: u64) -> Result<Vec<Device>> {
    Ok(vec![
        build(
            "aspen_m2",
            Platform::Rigetti,
            80,
            Coupling::Edges(aspen_edges()),
            seed,
        )?,
        build(
            "ibmq_montreal",
            Platform::Ibm,
            27,
            Coupling::Edges(montreal_edges()),
            seed + 1,
        )?,
        build(
            "ibmq_washington",
            Platform::Ibm,
            127,
            Coupling::Edges(washington_edges()),
            seed + 2,
        )?,
        build(
            "ionq_harmony",
            Platform::Ionq,
            11,
            Coupling::AllToAll,
            seed + 3,
        )?,
        build(
            "oqc_lucy",
            Platform::Oqc,
            8,
            Coupling::Edges(ring_edges(8)),
            seed + 4,
        )?,
    ])
}

/// Three-qubit IBM-style line Q0–Q1–Q2.
pub fn toy_line3(seed: u64) -> Result<Device> {
    build(
        "toy_line3",
        Platform::Ibm,
        3,
        Coupling::Edges(line_edges(3)),
        seed + 5,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{default_registry_dir, load_device, toy_device_dir};

    #[test]
    fn committed_files_match_generator() {
        for d in shipped_devices(CALIBRATION_SEED).unwrap() {
            let on_disk =
                load_device(default_registry_dir().join(format!("{}.json", d.name))).unwrap();
            assert_eq!(on_disk, d, "{} drifted from its generator", d.name);
        }
        let toy = toy_line3(CALIBRATION_SEED).unwrap();
        assert_eq!(
            load_device(toy_device_dir().join("toy_line3.json")).unwrap(),
            toy
        );
    }

    #[test]
    fn topology_sizes() {
        assert_eq!(montreal_edges().len(), 28);
        let w = washington_edges();
        assert_eq!(w.len(), 144);
        assert!(w.iter().all(|&(a, b)| a < 127 && b < 127));
        assert_eq!(aspen_edges().len(), 80 + 16 + 10);
    }

    #[test]
    fn heavy_hex_degrees_at_most_three() {
        let d = build(
            "w",
            Platform::Ibm,
            127,
            Coupling::Edges(washington_edges()),
            1,
        )
        .unwrap();
        assert!((0..127).all(|q| d.degree(q) <= 3 && d.degree(q) >= 1));
    }

    #[test]
    fn calibration_ranges() {
        for d in shipped_devices(CALIBRATION_SEED).unwrap() {
            assert!(d
                .calibration
                .one_q
                .values()
                .all(|&f| (0.9990..=0.9999).contains(&f)));
            assert!(d
                .calibration
                .two_q
                .values()
                .all(|&f| (0.985..=0.995).contains(&f)));
        }
    }
}

#[cfg(test)]
mod bootstrap {
    #[test]
    #[ignore]
    fn write_files() {
        use super::*;
        let dir = crate::device::default_registry_dir();
        for d in shipped_devices(CALIBRATION_SEED).unwrap() {
            std::fs::write(dir.join(format!("{}.json", d.name)), d.to_json()).unwrap();
        }
        let toy = toy_line3(CALIBRATION_SEED).unwrap();
        std::fs::write(dir.join("toy").join("toy_line3.json"), toy.to_json()).unwrap();
    }
}
