//! Radial-basis-function network: Gaussian hidden units centered by
//! per-class k-means, linear output fitted by ridge least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, sq_dist};
use super::LearnerError;
use crate::dataset::LabeledDataset;

/// Ridge penalty on the output weights (the bias is not penalized).
pub const RIDGE: f64 = 1e-6;

const KMEANS_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfModel {
    pub centers: Vec<Vec<f64>>,
    pub widths: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl RbfModel {
    fn activations(&self, x: &[f64]) -> Vec<f64> {
        self.centers
            .iter()
            .zip(&self.widths)
            .map(|(c, s)| (-sq_dist(x, c) / (2.0 * s * s)).exp())
            .collect()
    }

    /// Linear output; targets were 1 for `Dangerous` and 0 for `Safe`.
    pub fn output(&self, x: &[f64]) -> f64 {
        self.bias + self.activations(x).iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>()
    }
}

/// Each center's width is its distance to the nearest other center. If
/// that distance is zero, the mean of the positive widths is used instead
/// (or 1 when every center coincides).
fn nearest_center_widths(centers: &[Vec<f64>]) -> Vec<f64> {
    let raw: Vec<f64> = centers
        .iter()
        .enumerate()
        .map(|(i, c)| {
            centers
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, o)| sq_dist(c, o).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let positive: Vec<f64> = raw.iter().copied().filter(|w| w.is_finite() && *w > 0.0).collect();
    let fallback = if positive.is_empty() {
        1.0
    } else {
        positive.iter().sum::<f64>() / positive.len() as f64
    };
    raw.into_iter()
        .map(|w| if w.is_finite() && w > 0.0 { w } else { fallback })
        .collect()
}

/// Train with `k` hidden units, `k / 2` per class.
pub fn train_rbf(ds: &LabeledDataset, k: usize, seed: u64) -> Result<RbfModel, LearnerError> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(LearnerError::BadParameter(format!("RBF unit count must be even and >= 2, got {k}")));
    }
    let per_class = k / 2;
    let mut centers = Vec::with_capacity(k);
    for (offset, positive) in [false, true].into_iter().enumerate() {
        let rows = ds.class_rows(positive);
        if rows.len() < per_class {
            return Err(LearnerError::DegenerateDataset(format!(
                "class has {} points, {per_class} centers requested",
                rows.len()
            )));
        }
        centers.extend(kmeans(&rows, per_class, seed.wrapping_add(offset as u64), KMEANS_ITERS)?);
    }
    let widths = nearest_center_widths(&centers);
    let mut model = RbfModel {
        centers,
        widths,
        weights: vec![0.0; k],
        bias: 0.0,
    };

    let n = ds.len();
    let mut design = DMatrix::<f64>::zeros(n, k + 1);
    for (r, x) in ds.x().iter().enumerate() {
        for (c, a) in model.activations(x).into_iter().enumerate() {
            design[(r, c)] = a;
        }
        design[(r, k)] = 1.0;
    }
    let targets = DVector::from_vec(ds.targets());
    let mut normal = design.transpose() * &design;
    for c in 0..k {
        normal[(c, c)] += RIDGE;
    }
    let rhs = design.transpose() * targets;
    let solution = match normal.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => normal
            .lu()
            .solve(&rhs)
            .ok_or_else(|| LearnerError::NonFinite("singular RBF normal equations".into()))?,
    };
    model.weights = solution.iter().take(k).copied().collect();
    model.bias = solution[k];
    if model.weights.iter().chain([&model.bias]).any(|v| !v.is_finite()) {
        return Err(LearnerError::NonFinite("RBF output weights".into()));
    }
    Ok(model)
}
