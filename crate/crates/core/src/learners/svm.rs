//! C-SVM trained by sequential minimal optimization.
//!
//! Solves the dual
//!
//! ```text
//! max  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//! s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0
//! ```
//!
//! two coordinates at a time, picking the pair with second-order working
//! set selection, until the maximal KKT violation drops below `tol`.

use serde::{Deserialize, Serialize};

use super::kmeans::sq_dist;
use super::LearnerError;
use crate::dataset::LabeledDataset;

const TAU: f64 = 1e-12;

/// Kernel as configured; `Gaussian { gamma: None }` resolves to
/// `1 / feature count` at training time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Gaussian { gamma: Option<f64> },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Gaussian { gamma: None }
    }
}

impl KernelSpec {
    pub fn resolve(self, dim: usize) -> Kernel {
        match self {
            KernelSpec::Linear => Kernel::Linear,
            KernelSpec::Gaussian { gamma } => Kernel::Gaussian {
                gamma: gamma.unwrap_or(1.0 / dim as f64),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    /// `exp(-gamma * |x - z|^2)`
    Gaussian { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Gaussian { gamma } => (-gamma * sq_dist(a, b)).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: KernelSpec,
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            kernel: KernelSpec::default(),
            c: 1.0,
            tol: 1e-3,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// Dual coefficients of the support vectors, each in `(0, C]`.
    pub alpha: Vec<f64>,
    /// `+1` for `Dangerous`, `-1` for `Safe`.
    pub signs: Vec<f64>,
    pub bias: f64,
    /// Dual objective at the returned point.
    pub dual_objective: f64,
    /// Maximal KKT violation at the returned point.
    pub kkt_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SvmModel {
    /// Signed distance-like decision value; positive means `Dangerous`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias
            + self
                .support_vectors
                .iter()
                .zip(self.alpha.iter().zip(&self.signs))
                .map(|(sv, (a, y))| a * y * self.kernel.eval(sv, x))
                .sum::<f64>()
    }
}

pub fn train_svm(ds: &LabeledDataset, params: &SvmParams) -> Result<SvmModel, LearnerError> {
    if !(params.c.is_finite() && params.c > 0.0) {
        return Err(LearnerError::BadParameter("C must be positive".into()));
    }
    if !(params.tol.is_finite() && params.tol > 0.0) {
        return Err(LearnerError::BadParameter("tol must be positive".into()));
    }
    let kernel = params.kernel.resolve(ds.dim());
    let x = ds.x();
    let n = x.len();
    let c = params.c;
    let y: Vec<f64> = (0..n).map(|i| if ds.is_positive(i) { 1.0 } else { -1.0 }).collect();

    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&x[i], &x[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let kij = |i: usize, j: usize| k[i * n + j];

    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a'Qa - e'a, with Q_ij = y_i y_j K_ij
    let mut grad = vec![-1.0; n];
    let up = |a: f64, yi: f64| if yi > 0.0 { a < c } else { a > 0.0 };
    let low = |a: f64, yi: f64| if yi > 0.0 { a > 0.0 } else { a < c };

    let mut iterations = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;
    while iterations < params.max_iter {
        // i: maximal violator in the "up" set
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if up(alpha[t], y[t]) && -y[t] * grad[t] >= g_max {
                g_max = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let mut g_min = f64::INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..n {
                if !low(alpha[t], y[t]) {
                    continue;
                }
                let v = -y[t] * grad[t];
                g_min = g_min.min(v);
                let b = g_max - v;
                if b > 0.0 {
                    let mut a = kij(i, i) + kij(t, t) - 2.0 * kij(i, t);
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let gain = -(b * b) / a;
                    if gain <= best {
                        best = gain;
                        j_sel = Some(t);
                    }
                }
            }
        }
        gap = g_max - g_min;
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            converged = true;
            break;
        };
        if gap < params.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * kij(i, j);
        if y[i] != y[j] {
            let mut quad = kij(i, i) + kij(j, j) + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = kij(i, i) + kij(j, j) - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * kij(t, i) * di + y[j] * kij(t, j) * dj);
        }
    }
    if !converged {
        log::warn!("SMO hit {} iterations with KKT gap {gap:.3e}", params.max_iter);
    }

    // offset from free vectors, else the midpoint of the feasible interval
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_count += 1;
        }
    }
    let rho = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        (ub + lb) / 2.0
    };

    let dual_objective = -0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();

    let support: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    Ok(SvmModel {
        kernel,
        c,
        support_vectors: support.iter().map(|&t| x[t].clone()).collect(),
        alpha: support.iter().map(|&t| alpha[t]).collect(),
        signs: support.iter().map(|&t| y[t]).collect(),
        bias: -rho,
        dual_objective,
        kkt_gap: gap,
        iterations,
        converged,
    })
}
