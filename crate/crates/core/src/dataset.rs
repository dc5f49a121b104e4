//! Standardized, labeled feature matrices consumed by selection and the
//! learners.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureTable;
use crate::sensor::Label;

/// Floor for the scale used when standardizing a constant column.
pub const MIN_SCALE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("dataset needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("dataset holds a single class")]
    SingleClass,
    #[error("row {0} is unlabeled")]
    Unlabeled(usize),
    #[error("row {row} has {got} features, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("row {0} holds a non-finite feature")]
    NonFinite(usize),
    #[error("dataset has no feature columns")]
    NoColumns,
}

/// Per-column affine map `(x - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    /// Column means and sample standard deviations (floored at [`MIN_SCALE`]).
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let n = rows.len() as f64;
        let dim = rows.first().map_or(0, Vec::len);
        let mean: Vec<f64> = (0..dim).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n).collect();
        let scale = (0..dim)
            .map(|c| {
                let ss: f64 = rows.iter().map(|r| (r[c] - mean[c]).powi(2)).sum();
                let sd = if rows.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
                sd.max(MIN_SCALE)
            })
            .collect();
        Standardization { mean, scale }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn invert(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(z, (m, s))| z * s + m)
            .collect()
    }
}

/// Standardized rows with safe/dangerous labels. Both classes are present
/// and every row is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    x: Vec<Vec<f64>>,
    y: Vec<Label>,
    standardization: Standardization,
}

impl LabeledDataset {
    /// Standardize `raw` with its own column statistics.
    pub fn new(raw: &[Vec<f64>], labels: &[Label]) -> Result<Self, DatasetError> {
        Self::check(raw, labels)?;
        let standardization = Standardization::fit(raw);
        let x = raw.iter().map(|r| standardization.apply(r)).collect();
        Ok(LabeledDataset {
            x,
            y: labels.to_vec(),
            standardization,
        })
    }

    /// Rows used as-is, with an identity standardization. For callers
    /// that already standardized, and for tests on hand-built geometry.
    pub fn from_standardized(x: Vec<Vec<f64>>, labels: &[Label]) -> Result<Self, DatasetError> {
        Self::check(&x, labels)?;
        let dim = x[0].len();
        Ok(LabeledDataset {
            x,
            y: labels.to_vec(),
            standardization: Standardization {
                mean: vec![0.0; dim],
                scale: vec![1.0; dim],
            },
        })
    }

    pub fn from_table(table: &FeatureTable) -> Result<Self, DatasetError> {
        Self::new(&table.matrix(), &table.labels())
    }

    fn check(raw: &[Vec<f64>], labels: &[Label]) -> Result<(), DatasetError> {
        if raw.len() < 2 || raw.len() != labels.len() {
            return Err(DatasetError::TooFewRows(raw.len().min(labels.len())));
        }
        let dim = raw[0].len();
        if dim == 0 {
            return Err(DatasetError::NoColumns);
        }
        for (i, (row, label)) in raw.iter().zip(labels).enumerate() {
            if row.len() != dim {
                return Err(DatasetError::Ragged {
                    row: i,
                    got: row.len(),
                    expected: dim,
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite(i));
            }
            if *label == Label::Unlabeled {
                return Err(DatasetError::Unlabeled(i));
            }
        }
        let positives = labels.iter().filter(|l| l.is_positive()).count();
        if positives == 0 || positives == labels.len() {
            return Err(DatasetError::SingleClass);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn labels(&self) -> &[Label] {
        &self.y
    }

    pub fn is_positive(&self, i: usize) -> bool {
        self.y[i].is_positive()
    }

    /// Targets in {0, 1}, 1 for `Dangerous`.
    pub fn targets(&self) -> Vec<f64> {
        self.y.iter().map(|l| if l.is_positive() { 1.0 } else { 0.0 }).collect()
    }

    pub fn standardization(&self) -> &Standardization {
        &self.standardization
    }

    /// Rows (standardized) belonging to one class.
    pub fn class_rows(&self, positive: bool) -> Vec<Vec<f64>> {
        self.x
            .iter()
            .zip(&self.y)
            .filter(|(_, l)| l.is_positive() == positive)
            .map(|(r, _)| r.clone())
            .collect()
    }
}
