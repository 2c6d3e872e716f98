use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::Network;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub total_timesteps: usize,
    pub rollout_horizon: usize,
    pub minibatch: usize,
    pub epochs: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub learning_rate: f64,
    pub hidden: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            total_timesteps: 100_000,
            rollout_horizon: 2048,
            minibatch: 64,
            epochs: 10,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            learning_rate: 3e-4,
            hidden: super::model::DEFAULT_HIDDEN,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            self.total_timesteps,
            self.rollout_horizon,
            self.minibatch,
            self.epochs,
            self.hidden,
        ];
        let rates = [self.gamma, self.gae_lambda, self.learning_rate];
        if counts.contains(&0)
            || rates
                .iter()
                .any(|&r| r.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::Model(
                "training sizes and rates must be positive".into(),
            ));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return Err(Error::Model("clip_eps must lie in (0, 1)".into()));
        }
        if self.gamma > 1.0
            || self.gae_lambda > 1.0
            || self.entropy_coef < 0.0
            || self.value_coef < 0.0
        {
            return Err(Error::Model(
                "gamma and gae_lambda must be ≤ 1, coefficients ≥ 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
    pub mask: Vec<bool>,
}

/// GAE advantages and returns; `last_value` bootstraps a trailing
/// unfinished episode.
pub fn gae(batch: &[Transition], last_value: f64, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = batch.len();
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    let mut next_value = last_value;
    for t in (0..n).rev() {
        let live = if batch[t].done { 0.0 } else { 1.0 };
        let delta = batch[t].reward + gamma * next_value * live - batch[t].value;
        running = delta + gamma * lambda * live * running;
        adv[t] = running;
        next_value = batch[t].value;
    }
    let returns = adv.iter().zip(batch).map(|(a, t)| a + t.value).collect();
    (adv, returns)
}

pub fn normalize(xs: &mut [f64]) {
    if xs.is_empty() {
        return;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for x in xs {
        *x = (*x - mean) / (std + 1e-8);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
    pub clip_fraction: f64,
}

/// Mean PPO loss over `idx` and its gradient (written into `grad`).
pub fn loss_and_grad(
    net: &Network,
    batch: &[Transition],
    advantages: &[f64],
    returns: &[f64],
    idx: &[usize],
    cfg: &TrainConfig,
    grad: &mut [f64],
) -> Result<LossTerms> {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let m = idx.len() as f64;
    let mut terms = LossTerms::default();
    let mut dlogits = vec![0.0; net.shape.actions];
    for &i in idx {
        let t = &batch[i];
        let f = net.forward(&t.obs, &t.mask)?;
        let a = advantages[i];
        let ratio = (f.log_probs[t.action] - t.log_prob).exp();
        let clipped = ratio.clamp(1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
        let unclipped_active = ratio * a <= clipped * a;
        terms.policy -= (ratio * a).min(clipped * a);
        if !unclipped_active {
            terms.clip_fraction += 1.0;
        }
        let entropy: f64 = (0..f.probs.len())
            .filter(|&j| t.mask[j])
            .map(|j| -f.probs[j] * f.log_probs[j])
            .sum();
        terms.entropy += entropy;
        let err = f.value - returns[i];
        terms.value += err * err;

        // d(-r·A)/dlogp = -r·A, and dlogp_a/dz_j = δ_aj − p_j
        let dlogp = if unclipped_active { -ratio * a } else { 0.0 };
        for j in 0..dlogits.len() {
            dlogits[j] = if t.mask[j] {
                let pol = dlogp * (f64::from(u8::from(j == t.action)) - f.probs[j]);
                let ent = cfg.entropy_coef * f.probs[j] * (f.log_probs[j] + entropy);
                (pol + ent) / m
            } else {
                0.0
            };
        }
        let dvalue = 2.0 * cfg.value_coef * err / m;
        net.backward(&t.obs, &f, &dlogits, dvalue, grad);
    }
    terms.policy /= m;
    terms.value /= m;
    terms.entropy /= m;
    terms.clip_fraction /= m;
    terms.total = terms.policy + cfg.value_coef * terms.value - cfg.entropy_coef * terms.entropy;
    if !terms.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteLoss(format!("{terms:?}")));
    }
    Ok(terms)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    pub lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(n: usize, lr: f64) -> Adam {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// One PPO update: `cfg.epochs` passes over shuffled minibatches. Returns
/// the loss terms of the first minibatch and the mean over all of them.
pub fn ppo_update(
    net: &mut Network,
    opt: &mut Adam,
    batch: &[Transition],
    last_value: f64,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(LossTerms, LossTerms)> {
    let (mut adv, returns) = gae(batch, last_value, cfg.gamma, cfg.gae_lambda);
    normalize(&mut adv);
    let mut grad = vec![0.0; net.params.len()];
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut first = None;
    let mut sum = LossTerms::default();
    let mut count = 0.0;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.minibatch) {
            let terms = loss_and_grad(net, batch, &adv, &returns, chunk, cfg, &mut grad)?;
            first.get_or_insert(terms);
            sum.policy += terms.policy;
            sum.value += terms.value;
            sum.entropy += terms.entropy;
            sum.total += terms.total;
            sum.clip_fraction += terms.clip_fraction;
            count += 1.0;
            opt.step(&mut net.params, &grad);
        }
    }
    let mean = LossTerms {
        policy: sum.policy / count,
        value: sum.value / count,
        entropy: sum.entropy / count,
        total: sum.total / count,
        clip_fraction: sum.clip_fraction / count,
    };
    Ok((first.expect("nonempty batch"), mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::model::Shape;
    use rand::{Rng, SeedableRng};

    fn transition(reward: f64, value: f64, done: bool) -> Transition {
        Transition {
            obs: vec![],
            action: 0,
            log_prob: 0.0,
            value,
            reward,
            done,
            mask: vec![],
        }
    }

    #[test]
    fn gae_matches_discounted_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (gamma, lambda) = (0.99, 0.95);
        for _ in 0..100 {
            let n = rng.gen_range(1..12);
            let batch: Vec<Transition> = (0..n)
                .map(|_| {
                    transition(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_bool(0.3),
                    )
                })
                .collect();
            let last = rng.gen_range(-1.0..1.0);
            let (adv, ret) = gae(&batch, last, gamma, lambda);
            for t in 0..n {
                // A_t = Σ_k (γλ)^k δ_{t+k} up to the end of the episode
                let mut expected = 0.0;
                let mut scale = 1.0;
                for k in t..n {
                    let next = if batch[k].done {
                        0.0
                    } else if k + 1 < n {
                        batch[k + 1].value
                    } else {
                        last
                    };
                    expected += scale * (batch[k].reward + gamma * next - batch[k].value);
                    if batch[k].done {
                        break;
                    }
                    scale *= gamma * lambda;
                }
                assert!((adv[t] - expected).abs() < 1e-12);
                assert!((ret[t] - adv[t] - batch[t].value).abs() < 1e-15);
            }
        }
    }

    fn random_batch(
        net: &Network,
        rng: &mut ChaCha8Rng,
        n: usize,
        ratio_noise: f64,
    ) -> Vec<Transition> {
        let s = net.shape;
        (0..n)
            .map(|i| {
                let obs: Vec<f64> = (0..s.obs_dim).map(|_| rng.gen_range(0.0..1.0)).collect();
                let mut mask: Vec<bool> = (0..s.actions).map(|_| rng.gen_bool(0.6)).collect();
                let action = (0..s.actions).find(|&a| mask[a]).unwrap_or_else(|| {
                    mask[0] = true;
                    0
                });
                let f = net.forward(&obs, &mask).unwrap();
                let noise = if ratio_noise > 0.0 {
                    rng.gen_range(-ratio_noise..ratio_noise)
                } else {
                    0.0
                };
                Transition {
                    log_prob: f.log_probs[action] + noise,
                    value: f.value,
                    reward: if i % 2 == 0 {
                        rng.gen_range(0.0..1.0)
                    } else {
                        0.0
                    },
                    done: i == n - 1 || rng.gen_bool(0.3),
                    obs,
                    action,
                    mask,
                }
            })
            .collect()
    }

    fn loss_only(
        net: &Network,
        b: &[Transition],
        adv: &[f64],
        ret: &[f64],
        cfg: &TrainConfig,
    ) -> f64 {
        let mut scratch = vec![0.0; net.params.len()];
        let idx: Vec<usize> = (0..b.len()).collect();
        loss_and_grad(net, b, adv, ret, &idx, cfg, &mut scratch)
            .unwrap()
            .total
    }

    /// Analytic vs central differences on every parameter; batches are
    /// redrawn until no ratio sits within 1e-3 of a clip kink.
    #[test]
    fn gradient_matches_finite_differences() {
        let cfg = TrainConfig::default();
        let shape = Shape {
            obs_dim: 12,
            hidden: 16,
            actions: 24,
        };
        let h = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst: f64 = 0.0;
        for init in 0..20 {
            let mut net = Network::init(shape, init);
            for p in &mut net.params {
                *p += rng.gen_range(-0.5..0.5);
            }
            let batch = loop {
                let b = random_batch(&net, &mut rng, 5, 0.4);
                let near_kink = b.iter().any(|t| {
                    let f = net.forward(&t.obs, &t.mask).unwrap();
                    let r = (f.log_probs[t.action] - t.log_prob).exp();
                    (r - 1.0 - cfg.clip_eps).abs() < 1e-3 || (r - 1.0 + cfg.clip_eps).abs() < 1e-3
                });
                if !near_kink {
                    break b;
                }
            };
            let (mut adv, ret) = gae(&batch, 0.0, cfg.gamma, cfg.gae_lambda);
            normalize(&mut adv);
            let idx: Vec<usize> = (0..batch.len()).collect();
            let mut grad = vec![0.0; net.params.len()];
            loss_and_grad(&net, &batch, &adv, &ret, &idx, &cfg, &mut grad).unwrap();
            for k in 0..net.params.len() {
                let orig = net.params[k];
                net.params[k] = orig + h;
                let up = loss_only(&net, &batch, &adv, &ret, &cfg);
                net.params[k] = orig - h;
                let down = loss_only(&net, &batch, &adv, &ret, &cfg);
                net.params[k] = orig;
                let numeric = (up - down) / (2.0 * h);
                let rel = (grad[k] - numeric).abs() / grad[k].abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn ratio_one_gives_minus_mean_advantage() {
        let cfg = TrainConfig::default();
        let shape = Shape {
            obs_dim: 12,
            hidden: 8,
            actions: 6,
        };
        let net = Network::init(shape, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch = random_batch(&net, &mut rng, 9, 0.0);
        let adv: Vec<f64> = (0..9).map(|i| i as f64 - 3.0).collect();
        let ret = vec![0.0; 9];
        let idx: Vec<usize> = (0..9).collect();
        let mut grad = vec![0.0; net.params.len()];
        let terms = loss_and_grad(&net, &batch, &adv, &ret, &idx, &cfg, &mut grad).unwrap();
        let mean = adv.iter().sum::<f64>() / 9.0;
        assert!((terms.policy + mean).abs() < 1e-12);
        assert_eq!(terms.clip_fraction, 0.0);
    }

    #[test]
    fn first_minibatch_of_update_has_unit_ratios() {
        let cfg = TrainConfig {
            minibatch: 64,
            epochs: 2,
            ..TrainConfig::default()
        };
        let shape = Shape {
            obs_dim: 12,
            hidden: 8,
            actions: 6,
        };
        let mut net = Network::init(shape, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let batch = random_batch(&net, &mut rng, 40, 0.0);
        let mut opt = Adam::new(net.params.len(), cfg.learning_rate);
        let (first, _) = ppo_update(&mut net, &mut opt, &batch, 0.0, &cfg, &mut rng).unwrap();
        // normalized advantages have mean ~0, so the unclipped loss is ~0
        assert!(first.policy.abs() < 1e-9);
        assert_eq!(first.clip_fraction, 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            clip_eps: 1.5,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            minibatch: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
