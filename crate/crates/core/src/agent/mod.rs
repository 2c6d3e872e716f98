//! PPO agent over the compilation environment.

mod model;
mod ppo;

pub use model::{masked_softmax, Forward, Network, Shape, DEFAULT_HIDDEN};
pub use ppo::{
    gae, loss_and_grad, normalize, ppo_update, Adam, LossTerms, TrainConfig, Transition,
};

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::env::{Env, EnvState, OBS_DIM};
use crate::error::{Error, Result};
use crate::features::{RewardKind, DEPTH_SCALE, QUBIT_SCALE};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyModel {
    pub net: Network,
    pub actions: Vec<String>,
    pub reward: RewardKind,
    pub train_config: TrainConfig,
    pub seed: u64,
}

impl PolicyModel {
    pub fn new(actions: Vec<String>, reward: RewardKind, train_config: TrainConfig) -> PolicyModel {
        let shape = Shape {
            obs_dim: OBS_DIM,
            hidden: train_config.hidden,
            actions: actions.len(),
        };
        PolicyModel {
            net: Network::init(shape, train_config.seed),
            actions,
            reward,
            seed: train_config.seed,
            train_config,
        }
    }

    pub fn check_actions(&self, env: &Env) -> Result<()> {
        let current = env.action_names();
        if current != self.actions {
            let first = current
                .iter()
                .zip(&self.actions)
                .position(|(a, b)| a != b)
                .unwrap_or(current.len().min(self.actions.len()));
            return Err(Error::ActionMismatch(format!(
                "model has {} actions, environment has {}; first difference at id {first}",
                self.actions.len(),
                current.len()
            )));
        }
        Ok(())
    }
}

/// Action probabilities (exactly zero where masked) and the value estimate.
pub fn policy_forward(m: &PolicyModel, obs: &[f64], mask: &[bool]) -> Result<(Vec<f64>, f64)> {
    let f = m.net.forward(obs, mask)?;
    Ok((f.probs, f.value))
}

fn sample(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Highest probability, lowest id on ties.
fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub rollout: usize,
    pub timesteps: usize,
    pub episodes: usize,
    pub mean_episode_reward: Option<f64>,
    pub mean_episode_length: Option<f64>,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub entries: Vec<LogEntry>,
}

impl TrainLog {
    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("log entries serialize") + "\n")
            .collect()
    }
}

fn pick_circuit<'a>(circuits: &'a [Circuit], rng: &mut ChaCha8Rng) -> &'a Circuit {
    &circuits[rng.gen_range(0..circuits.len())]
}

/// PPO training; circuits are drawn uniformly per episode.
pub fn train(
    circuits: &[Circuit],
    env: &Env,
    cfg: &TrainConfig,
) -> Result<(PolicyModel, TrainLog)> {
    cfg.validate()?;
    if circuits.is_empty() {
        return Err(Error::Model("training needs at least one circuit".into()));
    }
    let mut model = PolicyModel::new(env.action_names(), env.cfg.reward, cfg.clone());
    let mut opt = Adam::new(model.net.params.len(), cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x005E_ED0F_7A41);
    let mut log = TrainLog::default();

    let (mut state, mut obs) = env.reset(pick_circuit(circuits, &mut rng))?;
    let (mut ep_reward, mut ep_len) = (0.0, 0usize);
    let mut timesteps = 0;
    while timesteps < cfg.total_timesteps {
        let horizon = cfg.rollout_horizon.min(cfg.total_timesteps - timesteps);
        let mut batch = Vec::with_capacity(horizon);
        let (mut finished, mut reward_sum, mut len_sum) = (0usize, 0.0, 0usize);
        for _ in 0..horizon {
            let mask = env.action_mask(&state);
            let f = model.net.forward(&obs, &mask)?;
            let action = sample(&f.probs, &mut rng);
            let out = env.step(&mut state, action)?;
            ep_reward += out.reward;
            ep_len += 1;
            batch.push(Transition {
                obs: std::mem::take(&mut obs),
                action,
                log_prob: f.log_probs[action],
                value: f.value,
                reward: out.reward,
                done: out.done,
                mask,
            });
            if out.done {
                finished += 1;
                reward_sum += ep_reward;
                len_sum += ep_len;
                (ep_reward, ep_len) = (0.0, 0);
                (state, obs) = env.reset(pick_circuit(circuits, &mut rng))?;
            } else {
                obs = out.observation;
            }
        }
        timesteps += horizon;
        let last_value = model.net.forward(&obs, &env.action_mask(&state))?.value;
        let (_, mean) = ppo_update(&mut model.net, &mut opt, &batch, last_value, cfg, &mut rng)?;
        let entry = LogEntry {
            rollout: log.entries.len(),
            timesteps,
            episodes: finished,
            mean_episode_reward: (finished > 0).then(|| reward_sum / finished as f64),
            mean_episode_length: (finished > 0).then(|| len_sum as f64 / finished as f64),
            policy_loss: mean.policy,
            value_loss: mean.value,
            entropy: mean.entropy,
            clip_fraction: mean.clip_fraction,
        };
        log::info!(
            "rollout {} t={} episodes={} reward={:?}",
            entry.rollout,
            entry.timesteps,
            entry.episodes,
            entry.mean_episode_reward
        );
        log.entries.push(entry);
    }
    Ok((model, log))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompileOutcome {
    pub circuit: Circuit,
    pub trace: Vec<String>,
    pub reward: f64,
    /// False when the step cap ended the episode.
    pub finished: bool,
}

fn run_episode(
    env: &Env,
    c: &Circuit,
    mut choose: impl FnMut(&[f64], &[bool]) -> Result<usize>,
) -> Result<CompileOutcome> {
    let (mut state, mut obs): (EnvState, Vec<f64>) = env.reset(c)?;
    let names = env.action_names();
    let mut trace = Vec::new();
    loop {
        let mask = env.action_mask(&state);
        let a = choose(&obs, &mask)?;
        trace.push(names[a].clone());
        let out = env.step(&mut state, a)?;
        if out.done {
            let finished = names[a] == "finish";
            return Ok(CompileOutcome {
                circuit: state.circuit,
                trace,
                reward: out.reward,
                finished,
            });
        }
        obs = out.observation;
    }
}

/// Rolls the policy out on `c`: argmax when `greedy`, otherwise sampled
/// with a generator seeded by `seed`.
pub fn compile_with_policy(
    m: &PolicyModel,
    env: &Env,
    c: &Circuit,
    greedy: bool,
    seed: u64,
) -> Result<CompileOutcome> {
    m.check_actions(env)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_episode(env, c, |obs, mask| {
        let (probs, _) = policy_forward(m, obs, mask)?;
        Ok(if greedy {
            argmax(&probs)
        } else {
            sample(&probs, &mut rng)
        })
    })
}

/// Uniform choice among legal actions.
pub fn compile_random(env: &Env, c: &Circuit, rng: &mut ChaCha8Rng) -> Result<CompileOutcome> {
    run_episode(env, c, |_, mask| {
        let legal: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        if legal.is_empty() {
            return Err(Error::NoLegalAction);
        }
        Ok(legal[rng.gen_range(0..legal.len())])
    })
}

/// Mean terminal reward of greedy rollouts over `circuits`.
pub fn greedy_mean_reward(m: &PolicyModel, env: &Env, circuits: &[Circuit]) -> Result<f64> {
    let mut total = 0.0;
    for c in circuits {
        total += compile_with_policy(m, env, c, true, 0)?.reward;
    }
    Ok(total / circuits.len() as f64)
}

/// Mean terminal reward of the uniform random policy, `episodes` rollouts
/// per circuit.
pub fn random_mean_reward(
    env: &Env,
    circuits: &[Circuit],
    episodes: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for c in circuits {
        for _ in 0..episodes {
            total += compile_random(env, c, &mut rng)?.reward;
        }
    }
    Ok(total / (circuits.len() * episodes) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerFile {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Scaling {
    qubits: f64,
    depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    reward: RewardKind,
    obs_dim: usize,
    actions: Vec<String>,
    layers: Vec<LayerFile>,
    scaling: Scaling,
    train_config: TrainConfig,
    seed: u64,
}

pub fn model_to_json(m: &PolicyModel) -> String {
    let blocks = m.net.shape.blocks();
    let layers = (0..4)
        .map(|l| {
            let (rows, cols) = blocks[2 * l];
            let w = m.net.block(2 * l);
            LayerFile {
                w: (0..rows)
                    .map(|r| w[r * cols..(r + 1) * cols].to_vec())
                    .collect(),
                b: m.net.block(2 * l + 1).to_vec(),
            }
        })
        .collect();
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        reward: m.reward,
        obs_dim: m.net.shape.obs_dim,
        actions: m.actions.clone(),
        layers,
        scaling: Scaling {
            qubits: QUBIT_SCALE,
            depth: DEPTH_SCALE,
        },
        train_config: m.train_config.clone(),
        seed: m.seed,
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<PolicyModel> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64);
    if version != Some(u64::from(FORMAT_VERSION)) {
        return Err(Error::Model(format!(
            "unsupported model format version {version:?}, expected {FORMAT_VERSION}"
        )));
    }
    let file: ModelFile = serde_json::from_value(value)?;
    if file.obs_dim != OBS_DIM {
        return Err(Error::Model(format!(
            "observation size {} != {OBS_DIM}",
            file.obs_dim
        )));
    }
    if file.scaling.qubits != QUBIT_SCALE || file.scaling.depth != DEPTH_SCALE {
        return Err(Error::Model(
            "observation scaling differs from this build".into(),
        ));
    }
    if file.layers.len() != 4 {
        return Err(Error::Model(format!(
            "expected 4 layers, found {}",
            file.layers.len()
        )));
    }
    let shape = Shape {
        obs_dim: file.obs_dim,
        hidden: file.layers[0].b.len(),
        actions: file.actions.len(),
    };
    let mut params = Vec::with_capacity(shape.num_params());
    for (l, layer) in file.layers.iter().enumerate() {
        let (rows, cols) = shape.blocks()[2 * l];
        if layer.w.len() != rows || layer.w.iter().any(|r| r.len() != cols) || layer.b.len() != rows
        {
            return Err(Error::Model(format!(
                "layer {l} has the wrong shape for {} actions",
                shape.actions
            )));
        }
        params.extend(layer.w.iter().flatten());
        params.extend(&layer.b);
    }
    Ok(PolicyModel {
        net: Network { shape, params },
        actions: file.actions,
        reward: file.reward,
        train_config: file.train_config,
        seed: file.seed,
    })
}

pub fn save_model(m: &PolicyModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_json(m) + "\n")?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<PolicyModel> {
    model_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::fixtures::example3;
    use crate::env::{connectivity_ok, native_ok, EnvConfig};
    use crate::sim::equivalent;

    fn fixed(device: &str, reward: RewardKind) -> Env {
        Env::new(EnvConfig {
            reward,
            fixed_device: Some(device.into()),
            ..EnvConfig::default()
        })
        .unwrap()
    }

    fn small_cfg(total: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            total_timesteps: total,
            rollout_horizon: 256,
            hidden: 16,
            seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn save_load_round_trip() {
        let env = fixed("ibmq_montreal", RewardKind::Fidelity);
        let m = PolicyModel::new(env.action_names(), RewardKind::Fidelity, small_cfg(10, 3));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&m, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, m);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mask = vec![true; m.actions.len()];
        for _ in 0..100 {
            let obs: Vec<f64> = (0..OBS_DIM).map(|_| rng.gen()).collect();
            assert_eq!(
                policy_forward(&m, &obs, &mask).unwrap(),
                policy_forward(&back, &obs, &mask).unwrap()
            );
        }
    }

    #[test]
    fn load_rejects_tampering() {
        let env = fixed("ibmq_montreal", RewardKind::Fidelity);
        let m = PolicyModel::new(env.action_names(), RewardKind::Fidelity, small_cfg(10, 3));
        let text = model_to_json(&m);

        let renamed = text.replace("opt:cancel_cx", "opt:cancel_cz");
        let loaded = model_from_json(&renamed).unwrap();
        assert!(matches!(
            loaded.check_actions(&env),
            Err(Error::ActionMismatch(_))
        ));

        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["actions"].as_array_mut().unwrap().pop();
        assert!(matches!(
            model_from_json(&value.to_string()),
            Err(Error::Model(_))
        ));

        let old = text.replace("\"format_version\": 1", "\"format_version\": 0");
        assert!(matches!(model_from_json(&old), Err(Error::Model(_))));

        // a model saved before the catalog grew: one action and its logits short
        let mut shorter = m.clone();
        shorter.actions.pop();
        let cut = PolicyModel {
            net: Network::init(
                Shape {
                    actions: shorter.actions.len(),
                    ..m.net.shape
                },
                0,
            ),
            ..shorter
        };
        let back = model_from_json(&model_to_json(&cut)).unwrap();
        assert!(matches!(
            compile_with_policy(&back, &env, &example3(), true, 0),
            Err(Error::ActionMismatch(_))
        ));
    }

    #[test]
    fn greedy_prefers_lowest_id_on_ties() {
        assert_eq!(argmax(&[0.0, 0.5, 0.5]), 1);
        assert_eq!(argmax(&[0.25; 4]), 0);
    }

    #[test]
    fn empty_circuit_training_learns_to_finish() {
        let env = fixed("ibmq_montreal", RewardKind::Fidelity);
        let cfg = TrainConfig {
            total_timesteps: 2000,
            rollout_horizon: 256,
            seed: 1,
            ..TrainConfig::default()
        };
        let (m, log) = train(&[Circuit::new(2)], &env, &cfg).unwrap();
        assert_eq!(log.entries.last().unwrap().timesteps, 2000);
        let out = compile_with_policy(&m, &env, &Circuit::new(2), true, 0).unwrap();
        assert_eq!(out.reward, 1.0);
        assert_eq!(out.trace.last().map(String::as_str), Some("finish"));
    }

    #[test]
    fn training_is_deterministic() {
        let env = fixed("toy_line3", RewardKind::Combination);
        let circuits = [example3(), Circuit::new(3)];
        let (a, la) = train(&circuits, &env, &small_cfg(600, 9)).unwrap();
        let (b, lb) = train(&circuits, &env, &small_cfg(600, 9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(la.to_jsonl(), lb.to_jsonl());
        assert_eq!(model_to_json(&a), model_to_json(&b));
    }

    #[test]
    fn compiled_example3_is_executable_and_equivalent() {
        let env = fixed("toy_line3", RewardKind::Fidelity);
        let (m, _) = train(&[example3()], &env, &small_cfg(512, 2)).unwrap();
        let d = env.fixed_device().unwrap();
        for greedy in [true, false] {
            for seed in 0..5 {
                let out = compile_with_policy(&m, &env, &example3(), greedy, seed).unwrap();
                if out.finished {
                    assert!(
                        native_ok(&out.circuit, d.platform) && connectivity_ok(&out.circuit, d)
                    );
                    assert!(equivalent(&example3(), &out.circuit, true, 1e-9).unwrap());
                }
            }
        }
        let a = compile_with_policy(&m, &env, &example3(), true, 0).unwrap();
        let b = compile_with_policy(&m, &env, &example3(), true, 1).unwrap();
        assert_eq!(a.trace, b.trace);
    }
}
