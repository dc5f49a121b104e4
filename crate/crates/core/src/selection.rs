//! Neighborhood component feature selection.
//!
//! Learns one nonnegative weight per feature by maximizing a leave-one-out
//! stochastic nearest-neighbor score with an L2 penalty:
//!
//! ```text
//! xi(w)  = (1/n) sum_i p_i - lambda * sum_r w_r^2
//! p_i    = sum_{j != i, y_j = y_i} p_ij
//! p_ij   = exp(-d_ij / sigma) / sum_{k != i} exp(-d_ik / sigma)
//! d_ij   = sum_r w_r^2 |x_ir - x_jr|
//! ```
//!
//! The gradient is
//!
//! ```text
//! dxi/dw_r = 2 w_r [ (1/(sigma n)) sum_i ( p_i sum_j p_ij |x_ir - x_jr|
//!                                         - sum_{j: y_j = y_i} p_ij |x_ir - x_jr| )
//!                    - lambda ]
//! ```
//!
//! Fitting is plain gradient ascent with step halving: a step is only
//! accepted when the objective does not decrease, so the recorded trace is
//! nondecreasing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LabeledDataset;

/// Weights strictly above this are selected.
pub const DEFAULT_THRESHOLD: f64 = 0.1;

const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectionError {
    #[error("weight vector has {got} entries, dataset has {expected} features")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("invalid hyperparameter: {0}")]
    BadParameter(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcaParams {
    /// Penalty weight; `None` means `1 / n`.
    pub lambda: Option<f64>,
    pub sigma: f64,
    /// Initial ascent step.
    pub lr: f64,
    pub max_iters: usize,
    /// Stop once an accepted step improves the objective by less than
    /// `tol * max(1, |xi|)`.
    pub tol: f64,
}

impl Default for NcaParams {
    fn default() -> Self {
        NcaParams {
            lambda: None,
            sigma: 1.0,
            lr: 1.0,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

impl NcaParams {
    pub fn lambda_for(&self, n: usize) -> f64 {
        self.lambda.unwrap_or(1.0 / n as f64)
    }

    fn validate(&self) -> Result<(), SelectionError> {
        let bad = |what: &str| Err(SelectionError::BadParameter(what.to_string()));
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return bad("sigma must be positive");
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad("lr must be positive");
        }
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l >= 0.0) {
                return bad("lambda must be nonnegative");
            }
        }
        Ok(())
    }
}

/// Learned feature weights with the per-iteration objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeights {
    pub weights: Vec<f64>,
    pub objective_trace: Vec<f64>,
    /// False when `max_iters` ran out before the tolerance was met.
    pub converged: bool,
}

/// Objective value at `w`.
pub fn objective(ds: &LabeledDataset, w: &[f64], sigma: f64, lambda: f64) -> f64 {
    evaluate(ds, w, sigma, lambda, false).0
}

/// Objective value and its gradient at `w`.
pub fn objective_and_gradient(ds: &LabeledDataset, w: &[f64], sigma: f64, lambda: f64) -> (f64, Vec<f64>) {
    evaluate(ds, w, sigma, lambda, true)
}

fn evaluate(ds: &LabeledDataset, w: &[f64], sigma: f64, lambda: f64, with_grad: bool) -> (f64, Vec<f64>) {
    let n = ds.len();
    let dim = ds.dim();
    let x = ds.x();
    let w2: Vec<f64> = w.iter().map(|v| v * v).collect();

    let mut dist = vec![0.0; n];
    let mut prob = vec![0.0; n];
    let mut acc = vec![0.0; dim];
    let mut all_sum = vec![0.0; dim];
    let mut same_sum = vec![0.0; dim];
    let mut p_total = 0.0;

    for i in 0..n {
        let xi = &x[i];
        let mut dmin = f64::INFINITY;
        for j in 0..n {
            if j == i {
                continue;
            }
            let d: f64 = xi.iter().zip(&x[j]).zip(&w2).map(|((a, b), c)| c * (a - b).abs()).sum();
            dist[j] = d;
            dmin = dmin.min(d);
        }
        // shift by the smallest distance so the largest kernel value is 1
        let mut norm = 0.0;
        for j in 0..n {
            if j != i {
                prob[j] = (-(dist[j] - dmin) / sigma).exp();
                norm += prob[j];
            }
        }
        let mut p_i = 0.0;
        for (j, pj) in prob.iter_mut().enumerate() {
            if j != i {
                *pj /= norm;
                if ds.labels()[j] == ds.labels()[i] {
                    p_i += *pj;
                }
            }
        }
        p_total += p_i;

        if with_grad {
            all_sum.iter_mut().for_each(|v| *v = 0.0);
            same_sum.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let same = ds.labels()[j] == ds.labels()[i];
                for r in 0..dim {
                    let term = prob[j] * (xi[r] - x[j][r]).abs();
                    all_sum[r] += term;
                    if same {
                        same_sum[r] += term;
                    }
                }
            }
            for r in 0..dim {
                acc[r] += p_i * all_sum[r] - same_sum[r];
            }
        }
    }

    let penalty: f64 = lambda * w2.iter().sum::<f64>();
    let value = p_total / n as f64 - penalty;
    let grad = if with_grad {
        (0..dim)
            .map(|r| 2.0 * w[r] * (acc[r] / (sigma * n as f64) - lambda))
            .collect()
    } else {
        Vec::new()
    };
    (value, grad)
}

/// Fit feature weights by projected gradient ascent from `1/sqrt(d)`.
pub fn nca_fit(ds: &LabeledDataset, params: &NcaParams) -> Result<FeatureWeights, SelectionError> {
    params.validate()?;
    let dim = ds.dim();
    let lambda = params.lambda_for(ds.len());
    let sigma = params.sigma;

    let mut w = vec![1.0 / (dim as f64).sqrt(); dim];
    let (mut value, mut grad) = objective_and_gradient(ds, &w, sigma, lambda);
    let mut trace = vec![value];
    let mut step = params.lr;
    let mut converged = false;

    'outer: for _ in 0..params.max_iters {
        loop {
            let candidate: Vec<f64> = w.iter().zip(&grad).map(|(wi, g)| (wi + step * g).max(0.0)).collect();
            let (cand_value, cand_grad) = objective_and_gradient(ds, &candidate, sigma, lambda);
            if cand_value >= value {
                let gain = cand_value - value;
                w = candidate;
                value = cand_value;
                grad = cand_grad;
                trace.push(value);
                step *= 1.01;
                if gain < params.tol * value.abs().max(1.0) {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            step *= 0.5;
            if step < MIN_STEP {
                // no ascent direction left at this resolution
                converged = true;
                break 'outer;
            }
        }
    }
    if !converged {
        log::warn!("feature selection stopped after {} iterations without meeting tol", params.max_iters);
    }
    Ok(FeatureWeights {
        weights: w,
        objective_trace: trace,
        converged,
    })
}

/// Largest relative gap between the analytic gradient and a central
/// difference with step `h`, each component scaled by `max(1, |analytic|)`.
pub fn gradient_check(
    ds: &LabeledDataset,
    w: &[f64],
    sigma: f64,
    lambda: f64,
    h: f64,
) -> Result<f64, SelectionError> {
    if w.len() != ds.dim() {
        return Err(SelectionError::DimensionMismatch {
            got: w.len(),
            expected: ds.dim(),
        });
    }
    let (_, grad) = objective_and_gradient(ds, w, sigma, lambda);
    let mut worst: f64 = 0.0;
    let mut probe = w.to_vec();
    for r in 0..w.len() {
        probe[r] = w[r] + h;
        let up = objective(ds, &probe, sigma, lambda);
        probe[r] = w[r] - h;
        let down = objective(ds, &probe, sigma, lambda);
        probe[r] = w[r];
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((grad[r] - fd).abs() / grad[r].abs().max(1.0));
    }
    Ok(worst)
}

/// 1-based component numbers whose weight is strictly above `threshold`,
/// ascending.
pub fn select(fw: &FeatureWeights, threshold: f64) -> Vec<usize> {
    fw.weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > threshold)
        .map(|(i, _)| i + 1)
        .collect()
}

/// Like [`select`], but an empty selection falls back to every component.
/// The flag reports whether the fallback was taken.
pub fn select_or_all(fw: &FeatureWeights, threshold: f64) -> (Vec<usize>, bool) {
    let chosen = select(fw, threshold);
    if chosen.is_empty() {
        log::warn!("no feature weight exceeds {threshold}; keeping all {} features", fw.weights.len());
        ((1..=fw.weights.len()).collect(), true)
    } else {
        (chosen, false)
    }
}

/// Exported weights document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsReport {
    pub weights: Vec<f64>,
    /// 1-based component numbers actually used downstream.
    pub selected: Vec<usize>,
    pub objective_trace: Vec<f64>,
    pub threshold: f64,
    pub converged: bool,
    pub fallback_to_all: bool,
}

impl WeightsReport {
    pub fn new(fw: &FeatureWeights, threshold: f64) -> Self {
        let (selected, fallback_to_all) = select_or_all(fw, threshold);
        WeightsReport {
            weights: fw.weights.clone(),
            selected,
            objective_trace: fw.objective_trace.clone(),
            threshold,
            converged: fw.converged,
            fallback_to_all,
        }
    }

    /// Selected columns as 0-based indices.
    pub fn columns(&self) -> Vec<usize> {
        self.selected.iter().map(|c| c - 1).collect()
    }
}
