use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_HIDDEN: usize = 64;

/// Offsets of the eight parameter blocks inside the flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub obs_dim: usize,
    pub hidden: usize,
    pub actions: usize,
}

impl Shape {
    /// `(rows, cols)` of each block in storage order: policy hidden weights
    /// and bias, policy head weights and bias, then the same for the value
    /// network. Biases have one column.
    pub fn blocks(&self) -> [(usize, usize); 8] {
        let (d, h, a) = (self.obs_dim, self.hidden, self.actions);
        [
            (h, d),
            (h, 1),
            (a, h),
            (a, 1),
            (h, d),
            (h, 1),
            (1, h),
            (1, 1),
        ]
    }

    pub fn offsets(&self) -> [usize; 9] {
        let mut out = [0; 9];
        for (i, (r, c)) in self.blocks().into_iter().enumerate() {
            out[i + 1] = out[i] + r * c;
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.offsets()[8]
    }
}

/// Policy and value networks, each one tanh hidden layer, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub shape: Shape,
    pub params: Vec<f64>,
}

/// Intermediate values of one forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct Forward {
    pub policy_hidden: Vec<f64>,
    pub value_hidden: Vec<f64>,
    pub probs: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub value: f64,
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let cols = x.len();
    b.iter()
        .enumerate()
        .map(|(r, &bias)| {
            bias + w[r * cols..(r + 1) * cols]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .collect()
}

/// Softmax restricted to `mask`; masked entries get probability 0 and
/// log-probability −∞.
pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Result<(Vec<f64>, Vec<f64>)> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&z, _)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::NoLegalAction);
    }
    let norm: f64 = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&z, _)| (z - max).exp())
        .sum();
    let log_norm = max + norm.ln();
    let mut probs = vec![0.0; logits.len()];
    let mut logp = vec![f64::NEG_INFINITY; logits.len()];
    for i in 0..logits.len() {
        if mask[i] {
            logp[i] = logits[i] - log_norm;
            probs[i] = logp[i].exp();
        }
    }
    Ok((probs, logp))
}

impl Network {
    pub fn zeros(shape: Shape) -> Network {
        Network {
            shape,
            params: vec![0.0; shape.num_params()],
        }
    }

    /// Uniform fan-in scaled weights; the policy head starts 100× smaller
    /// so the first policy is close to uniform over legal actions.
    pub fn init(shape: Shape, seed: u64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Network::zeros(shape);
        let off = shape.offsets();
        let gains = [1.0, 0.0, 0.01, 0.0, 1.0, 0.0, 1.0, 0.0];
        for (k, (_, cols)) in shape.blocks().into_iter().enumerate() {
            let bound = gains[k] / (cols as f64).sqrt();
            if bound == 0.0 {
                continue;
            }
            for p in &mut net.params[off[k]..off[k + 1]] {
                *p = rng.gen_range(-bound..bound);
            }
        }
        net
    }

    pub fn block(&self, k: usize) -> &[f64] {
        let off = self.shape.offsets();
        &self.params[off[k]..off[k + 1]]
    }

    pub fn forward(&self, obs: &[f64], mask: &[bool]) -> Result<Forward> {
        if obs.len() != self.shape.obs_dim || mask.len() != self.shape.actions {
            return Err(Error::Model(format!(
                "input sizes {}/{} do not match network {}/{}",
                obs.len(),
                mask.len(),
                self.shape.obs_dim,
                self.shape.actions
            )));
        }
        let policy_hidden: Vec<f64> = affine(self.block(0), self.block(1), obs)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let logits = affine(self.block(2), self.block(3), &policy_hidden);
        let (probs, log_probs) = masked_softmax(&logits, mask)?;
        let value_hidden: Vec<f64> = affine(self.block(4), self.block(5), obs)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let value = affine(self.block(6), self.block(7), &value_hidden)[0];
        Ok(Forward {
            policy_hidden,
            value_hidden,
            probs,
            log_probs,
            value,
        })
    }

    /// Accumulates into `grad` the gradient of a loss whose derivatives are
    /// `dlogits` (w.r.t. the policy logits) and `dvalue` (w.r.t. the value).
    pub fn backward(
        &self,
        obs: &[f64],
        fwd: &Forward,
        dlogits: &[f64],
        dvalue: f64,
        grad: &mut [f64],
    ) {
        let Shape {
            obs_dim: d,
            hidden: h,
            ..
        } = self.shape;
        let off = self.shape.offsets();
        let w2 = self.block(2);
        let mut dhidden = vec![0.0; h];
        for (a, &g) in dlogits.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad[off[3] + a] += g;
            for j in 0..h {
                grad[off[2] + a * h + j] += g * fwd.policy_hidden[j];
                dhidden[j] += g * w2[a * h + j];
            }
        }
        for j in 0..h {
            let dz = dhidden[j] * (1.0 - fwd.policy_hidden[j] * fwd.policy_hidden[j]);
            grad[off[1] + j] += dz;
            for i in 0..d {
                grad[off[0] + j * d + i] += dz * obs[i];
            }
        }

        let wv = self.block(6);
        grad[off[7]] += dvalue;
        for j in 0..h {
            grad[off[6] + j] += dvalue * fwd.value_hidden[j];
            let dz = dvalue * wv[j] * (1.0 - fwd.value_hidden[j] * fwd.value_hidden[j]);
            grad[off[5] + j] += dz;
            for i in 0..d {
                grad[off[4] + j * d + i] += dz * obs[i];
            }
        }
    }
}
