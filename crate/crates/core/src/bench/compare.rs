use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::baseline::{evaluate_all, Baseline};
use super::generate::{Benchmark, Family};
use crate::agent::{compile_with_policy, PolicyModel};
use crate::env::Env;
use crate::error::{Error, Result};
use crate::features::RewardKind;

/// Something that turns a circuit into an executable one.
#[derive(Debug, Clone, Copy)]
pub enum Compiler<'a> {
    Baseline(Baseline),
    Model(&'a PolicyModel),
}

#[derive(Debug, Clone)]
pub struct Comparator<'a> {
    pub name: String,
    pub compiler: Compiler<'a>,
}

impl<'a> Comparator<'a> {
    pub fn baseline(b: Baseline) -> Self {
        Comparator {
            name: b.name().into(),
            compiler: Compiler::Baseline(b),
        }
    }
}

/// Scores on every metric, indexed like [`RewardKind::ALL`]. A policy
/// episode that hits the step cap scores 0 everywhere.
pub fn score(compiler: Compiler<'_>, b: &Benchmark, env: &Env, seed: u64) -> Result<[f64; 3]> {
    let d = env.fixed_device().ok_or_else(|| {
        Error::Model("comparison needs an environment with a fixed device".into())
    })?;
    match compiler {
        Compiler::Baseline(base) => evaluate_all(&base.run(&b.circuit, d, seed)?, d),
        Compiler::Model(m) => {
            let mut env = env.clone();
            env.cfg.reward = m.reward;
            let out = compile_with_policy(m, &env, &b.circuit, true, seed)?;
            if out.finished {
                evaluate_all(&out.circuit, d)
            } else {
                Ok([0.0; 3])
            }
        }
    }
}

fn score_suite(
    compiler: Compiler<'_>,
    suite: &[Benchmark],
    env: &Env,
    seed: u64,
) -> Result<Vec<[f64; 3]>> {
    suite
        .par_iter()
        .map(|b| {
            score(compiler, b, env, seed).map_err(|e| match e {
                Error::Pipeline { pipeline, msg } => Error::Pipeline {
                    pipeline,
                    msg: format!("{}: {msg}", b.name),
                },
                other => other,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub circuit: String,
    pub family: Family,
    pub qubits: usize,
    pub baseline: String,
    pub metric: RewardKind,
    pub model_reward: f64,
    pub baseline_reward: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<Row>,
    /// (comparator, family, metric) → mean diff.
    pub family_means: BTreeMap<(String, Family, RewardKind), f64>,
    /// Trained-for rows × evaluated-on columns, mean reward; `None` where
    /// no model was trained for that metric.
    pub table: [Option<[f64; 3]>; 3],
    /// (comparator, metric) → percentage of circuits where the model wins.
    pub win_rates: BTreeMap<(String, RewardKind), f64>,
}

fn metric_index(k: RewardKind) -> usize {
    RewardKind::ALL
        .iter()
        .position(|&x| x == k)
        .expect("listed")
}

/// Model trained for metric M against every comparator on metric M, plus
/// the cross-metric table of the models themselves.
pub fn compare(
    models: &[PolicyModel],
    comparators: &[Comparator<'_>],
    suite: &[Benchmark],
    env: &Env,
    seed: u64,
) -> Result<Report> {
    for m in models {
        m.check_actions(env)?;
    }
    let mut by_metric: [Option<&PolicyModel>; 3] = [None; 3];
    for m in models {
        let slot = &mut by_metric[metric_index(m.reward)];
        if slot.is_some() {
            return Err(Error::Model(format!("two models trained for {}", m.reward)));
        }
        *slot = Some(m);
    }
    if suite.is_empty() {
        return Err(Error::Model("empty benchmark suite".into()));
    }

    let mut model_scores: [Option<Vec<[f64; 3]>>; 3] = [None, None, None];
    let mut table = [None; 3];
    for (i, m) in by_metric.iter().enumerate() {
        if let Some(m) = m {
            let scores = score_suite(Compiler::Model(m), suite, env, seed)?;
            let mut mean = [0.0; 3];
            for s in &scores {
                for k in 0..3 {
                    mean[k] += s[k] / suite.len() as f64;
                }
            }
            table[i] = Some(mean);
            model_scores[i] = Some(scores);
        }
    }

    let mut rows = Vec::new();
    let mut family_sums: BTreeMap<(String, Family, RewardKind), (f64, usize)> = BTreeMap::new();
    let mut wins: BTreeMap<(String, RewardKind), (usize, usize)> = BTreeMap::new();
    for comp in comparators {
        let theirs = score_suite(comp.compiler, suite, env, seed)?;
        for (j, b) in suite.iter().enumerate() {
            for (k, metric) in RewardKind::ALL.into_iter().enumerate() {
                let Some(ours) = &model_scores[k] else {
                    continue;
                };
                let (model_reward, baseline_reward) = (ours[j][k], theirs[j][k]);
                let diff = model_reward - baseline_reward;
                rows.push(Row {
                    circuit: b.name.clone(),
                    family: b.family,
                    qubits: b.circuit.num_qubits,
                    baseline: comp.name.clone(),
                    metric,
                    model_reward,
                    baseline_reward,
                    diff,
                });
                let e = family_sums
                    .entry((comp.name.clone(), b.family, metric))
                    .or_default();
                e.0 += diff;
                e.1 += 1;
                let w = wins.entry((comp.name.clone(), metric)).or_default();
                w.0 += usize::from(diff > 0.0);
                w.1 += 1;
            }
        }
    }
    Ok(Report {
        rows,
        family_means: family_sums
            .into_iter()
            .map(|(k, (s, n))| (k, s / n as f64))
            .collect(),
        table,
        win_rates: wins
            .into_iter()
            .map(|(k, (w, n))| (k, 100.0 * w as f64 / n as f64))
            .collect(),
    })
}

pub const CSV_HEADER: &str =
    "circuit,family,qubits,baseline,metric,model_reward,baseline_reward,diff";

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.6},{:.6}",
                r.circuit,
                r.family,
                r.qubits,
                r.baseline,
                r.metric,
                r.model_reward,
                r.baseline_reward,
                r.diff
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Cross-metric mean reward (rows: trained for, columns: evaluated on)"
        );
        let _ = write!(out, "{:<16}", "");
        for k in RewardKind::ALL {
            let _ = write!(out, "{:>16}", k.name());
        }
        out.push('\n');
        for (i, row) in self.table.iter().enumerate() {
            let Some(row) = row else { continue };
            let _ = write!(out, "{:<16}", RewardKind::ALL[i].name());
            for v in row {
                let _ = write!(out, "{v:>16.4}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "\nWin rate of the matching model");
        for ((comp, metric), rate) in &self.win_rates {
            let _ = writeln!(out, "  vs {comp:<12} on {:<16} {rate:6.1}%", metric.name());
        }
        let _ = writeln!(out, "\nMean reward difference per family");
        for ((comp, family, metric), mean) in &self.family_means {
            let _ = writeln!(
                out,
                "  vs {comp:<12} {:<8} {:<16} {mean:+.4}",
                family.name(),
                metric.name()
            );
        }
        out
    }

    /// Whether each diagonal cell is strictly the largest in its column.
    pub fn diagonal_dominant(&self) -> Option<bool> {
        let rows: Vec<[f64; 3]> = self.table.iter().copied().collect::<Option<_>>()?;
        Some((0..3).all(|c| (0..3).all(|r| r == c || rows[c][c] > rows[r][c])))
    }
}
