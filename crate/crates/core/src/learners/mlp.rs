//! One-hidden-layer perceptron with logistic units, trained by full-batch
//! gradient descent on the mean cross-entropy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LearnerError;
use crate::dataset::LabeledDataset;

pub const HIDDEN_RANGE: std::ops::RangeInclusive<usize> = 2..=6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
}

impl MlpParams {
    pub fn new(hidden: usize) -> Self {
        MlpParams {
            hidden,
            epochs: 2000,
            lr: 0.5,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// log(1 + e^z) without overflow
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Weights are stored row-major: `w1[h * input_dim + i]` connects input `i`
/// to hidden unit `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub input_dim: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases.
    pub fn random(input_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l1 = (6.0 / (input_dim + hidden) as f64).sqrt();
        let l2 = (6.0 / (hidden + 1) as f64).sqrt();
        MlpModel {
            input_dim,
            hidden,
            w1: (0..input_dim * hidden).map(|_| rng.random_range(-l1..l1)).collect(),
            b1: vec![0.0; hidden],
            w2: (0..hidden).map(|_| rng.random_range(-l2..l2)).collect(),
            b2: 0.0,
        }
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    /// Flat parameter vector `[w1, b1, w2, b2]`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        p.extend(&self.w1);
        p.extend(&self.b1);
        p.extend(&self.w2);
        p.push(self.b2);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let (a, rest) = p.split_at(self.w1.len());
        let (b, rest) = rest.split_at(self.hidden);
        let (c, rest) = rest.split_at(self.hidden);
        self.w1.copy_from_slice(a);
        self.b1.copy_from_slice(b);
        self.w2.copy_from_slice(c);
        self.b2 = rest[0];
    }

    fn hidden_activations(&self, x: &[f64], out: &mut [f64]) {
        for (h, slot) in out.iter_mut().enumerate() {
            let row = &self.w1[h * self.input_dim..(h + 1) * self.input_dim];
            let z: f64 = self.b1[h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            *slot = sigmoid(z);
        }
    }

    /// Output pre-activation (log-odds of `Dangerous`).
    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut a = vec![0.0; self.hidden];
        self.hidden_activations(x, &mut a);
        self.b2 + a.iter().zip(&self.w2).map(|(a, w)| a * w).sum::<f64>()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Mean cross-entropy over the dataset.
    pub fn loss(&self, ds: &LabeledDataset) -> f64 {
        let targets = ds.targets();
        ds.x()
            .iter()
            .zip(&targets)
            .map(|(x, t)| {
                let z = self.logit(x);
                softplus(z) - t * z
            })
            .sum::<f64>()
            / ds.len() as f64
    }

    /// Gradient of [`MlpModel::loss`] in the layout of [`MlpModel::params`].
    pub fn loss_gradient(&self, ds: &LabeledDataset) -> Vec<f64> {
        let (d, h) = (self.input_dim, self.hidden);
        let mut g = vec![0.0; self.param_count()];
        let (gw1, rest) = g.split_at_mut(d * h);
        let (gb1, rest) = rest.split_at_mut(h);
        let (gw2, gb2) = rest.split_at_mut(h);
        let mut a = vec![0.0; h];
        let targets = ds.targets();
        for (x, t) in ds.x().iter().zip(&targets) {
            self.hidden_activations(x, &mut a);
            let z = self.b2 + a.iter().zip(&self.w2).map(|(a, w)| a * w).sum::<f64>();
            let delta_out = sigmoid(z) - t;
            gb2[0] += delta_out;
            for k in 0..h {
                gw2[k] += delta_out * a[k];
                let delta_h = delta_out * self.w2[k] * a[k] * (1.0 - a[k]);
                gb1[k] += delta_h;
                for (gw, v) in gw1[k * d..(k + 1) * d].iter_mut().zip(x) {
                    *gw += delta_h * v;
                }
            }
        }
        let n = ds.len() as f64;
        g.iter_mut().for_each(|v| *v /= n);
        g
    }
}

pub fn train_mlp(ds: &LabeledDataset, params: &MlpParams, seed: u64) -> Result<MlpModel, LearnerError> {
    if !HIDDEN_RANGE.contains(&params.hidden) {
        return Err(LearnerError::BadParameter(format!(
            "hidden neurons must lie in 2..=6, got {}",
            params.hidden
        )));
    }
    if !(params.lr.is_finite() && params.lr > 0.0) {
        return Err(LearnerError::BadParameter("lr must be positive".into()));
    }
    let mut model = MlpModel::random(ds.dim(), params.hidden, seed);
    let mut p = model.params();
    for _ in 0..params.epochs {
        let g = model.loss_gradient(ds);
        for (pi, gi) in p.iter_mut().zip(&g) {
            *pi -= params.lr * gi;
        }
        model.set_params(&p);
    }
    if model.params().iter().any(|v| !v.is_finite()) {
        return Err(LearnerError::NonFinite("mlp weights diverged".into()));
    }
    Ok(model)
}
