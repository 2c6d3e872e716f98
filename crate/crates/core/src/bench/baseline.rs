use std::fmt;
use std::str::FromStr;

use crate::circuit::Circuit;
use crate::device::Device;
use crate::env::{connectivity_ok, native_ok};
use crate::error::{Error, Result};
use crate::features::RewardKind;
use crate::mapping::{layout_dense, layout_sabre, route, RouteMethod};
use crate::optimize::{cancel_cx, commutative_cancel, consolidate_2q, fuse_1q, remove_trivial};
use crate::synthesis::synthesize;

/// Fixed reference pass sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Baseline {
    /// synthesize, sabre layout, sabre routing, 1q fusion, commutative
    /// cancellation, cx cancellation.
    A,
    /// 2q consolidation, synthesize, dense layout, lookahead routing,
    /// trivial-gate removal, 1q fusion.
    B,
}

impl Baseline {
    pub const ALL: [Baseline; 2] = [Baseline::A, Baseline::B];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::A => "baseline-A",
            Baseline::B => "baseline-B",
        }
    }

    pub fn passes(self) -> [&'static str; 6] {
        match self {
            Baseline::A => [
                "synthesize",
                "layout:sabre",
                "route:sabre",
                "opt:fuse_1q",
                "opt:commutative_cancel",
                "opt:cancel_cx",
            ],
            Baseline::B => [
                "opt:consolidate_2q",
                "synthesize",
                "layout:dense",
                "route:tket",
                "opt:remove_trivial",
                "opt:fuse_1q",
            ],
        }
    }

    fn pipeline(self, c: &Circuit, d: &Device, seed: u64) -> Result<Circuit> {
        let p = Some(d.platform);
        Ok(match self {
            Baseline::A => {
                let c = synthesize(c, d.platform)?;
                let c = layout_sabre(&c, d, seed)?;
                let c = route(&c, d, RouteMethod::Sabre, seed)?.circuit;
                let c = fuse_1q(&c, p);
                cancel_cx(&commutative_cancel(&c))
            }
            Baseline::B => {
                let c = consolidate_2q(c, p);
                let c = synthesize(&c, d.platform)?;
                let c = layout_dense(&c, d)?;
                let c = route(&c, d, RouteMethod::Tket, seed)?.circuit;
                fuse_1q(&remove_trivial(&c), p)
            }
        })
    }

    /// Runs the sequence and checks that the result is executable on `d`.
    pub fn run(self, c: &Circuit, d: &Device, seed: u64) -> Result<Circuit> {
        let out = self.pipeline(c, d, seed)?;
        if !native_ok(&out, d.platform) || !connectivity_ok(&out, d) {
            return Err(Error::Pipeline {
                pipeline: self.name().into(),
                msg: format!("result is not executable on {}", d.name),
            });
        }
        Ok(out)
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s) || b.name()[9..].eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Pipeline {
                pipeline: s.into(),
                msg: "unknown baseline (expected baseline-A or baseline-B)".into(),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub circuit: Circuit,
    /// Indexed like [`RewardKind::ALL`].
    pub rewards: [f64; 3],
}

pub fn evaluate_all(c: &Circuit, d: &Device) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (slot, kind) in out.iter_mut().zip(RewardKind::ALL) {
        *slot = kind.evaluate(c, d)?;
    }
    Ok(out)
}

pub fn run_baseline(b: Baseline, c: &Circuit, d: &Device, seed: u64) -> Result<BaselineResult> {
    let circuit = b.run(c, d, seed)?;
    let rewards = evaluate_all(&circuit, d)?;
    Ok(BaselineResult { circuit, rewards })
}
