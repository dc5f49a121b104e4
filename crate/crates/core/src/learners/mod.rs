//! Binary safe/dangerous classifiers and their evaluation protocol.
//!
//! All models train on standardized features. [`FittedClassifier`] bundles
//! a model with the standardization fitted on its training rows so that it
//! can score raw feature vectors.

pub mod evaluate;
pub mod kmeans;
pub mod metrics;
pub mod mlp;
pub mod rbf;
pub mod svm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetError, LabeledDataset, Standardization};

pub use evaluate::{evaluate, MetricsReport, RepeatOutcome, SplitPlan};
pub use kmeans::kmeans;
pub use metrics::{auc, auc_fraction, Confusion};
pub use mlp::{train_mlp, MlpModel, MlpParams};
pub use rbf::{train_rbf, RbfModel};
pub use svm::{train_svm, Kernel, KernelSpec, SvmModel, SvmParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),
    #[error("{points} points cannot form {k} clusters")]
    TooFewPoints { points: usize, k: usize },
    #[error("invalid hyperparameter: {0}")]
    BadParameter(String),
    #[error("non-finite result: {0}")]
    NonFinite(String),
    #[error("repeat {repeat}: no split with both classes on each side after {attempts} draws")]
    DegenerateSplit { repeat: usize, attempts: usize },
}

impl From<DatasetError> for LearnerError {
    fn from(e: DatasetError) -> Self {
        LearnerError::DegenerateDataset(e.to_string())
    }
}

/// Classifier family plus hyperparameters; one row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum ModelSpec {
    Mlp {
        hidden: usize,
        #[serde(default = "default_epochs")]
        epochs: usize,
        #[serde(default = "default_mlp_lr")]
        lr: f64,
    },
    Rbf {
        /// Total hidden units; half are centered on each class.
        centers: usize,
    },
    Svm {
        #[serde(default)]
        kernel: KernelSpec,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_svm_tol")]
        tol: f64,
        #[serde(default = "default_svm_iters")]
        max_iter: usize,
    },
}

fn default_epochs() -> usize {
    2000
}
fn default_mlp_lr() -> f64 {
    0.5
}
fn default_c() -> f64 {
    1.0
}
fn default_svm_tol() -> f64 {
    1e-3
}
fn default_svm_iters() -> usize {
    100_000
}

impl ModelSpec {
    pub fn mlp(hidden: usize) -> Self {
        ModelSpec::Mlp {
            hidden,
            epochs: default_epochs(),
            lr: default_mlp_lr(),
        }
    }

    pub fn rbf(centers: usize) -> Self {
        ModelSpec::Rbf { centers }
    }

    pub fn svm(kernel: KernelSpec, c: f64) -> Self {
        ModelSpec::Svm {
            kernel,
            c,
            tol: default_svm_tol(),
            max_iter: default_svm_iters(),
        }
    }

    pub fn algorithm(&self) -> &'static str {
        match self {
            ModelSpec::Mlp { .. } => "MLP",
            ModelSpec::Rbf { .. } => "RBF",
            ModelSpec::Svm { .. } => "SVM",
        }
    }

    /// First column of a results table.
    pub fn row_label(&self) -> String {
        match self {
            ModelSpec::Mlp { hidden, .. } => hidden.to_string(),
            ModelSpec::Rbf { centers } => {
                let per = centers / 2;
                let noun = if per == 1 { "neuron" } else { "neurons" };
                format!("{centers} ({} {noun} for each class)", number_word(per))
            }
            ModelSpec::Svm { kernel, c, .. } => match kernel {
                KernelSpec::Linear => format!("linear, C={c}"),
                KernelSpec::Gaussian { gamma: Some(g) } => format!("gaussian g={g}, C={c}"),
                KernelSpec::Gaussian { gamma: None } => format!("gaussian g=1/d, C={c}"),
            },
        }
    }

    pub fn fit(&self, ds: &LabeledDataset, seed: u64) -> Result<TrainedModel, LearnerError> {
        match *self {
            ModelSpec::Mlp { hidden, epochs, lr } => {
                train_mlp(ds, &MlpParams { hidden, epochs, lr }, seed).map(TrainedModel::Mlp)
            }
            ModelSpec::Rbf { centers } => train_rbf(ds, centers, seed).map(TrainedModel::Rbf),
            ModelSpec::Svm {
                kernel,
                c,
                tol,
                max_iter,
            } => train_svm(
                ds,
                &SvmParams {
                    kernel,
                    c,
                    tol,
                    max_iter,
                },
            )
            .map(TrainedModel::Svm),
        }
    }
}

fn number_word(n: usize) -> String {
    match n {
        1 => "one".into(),
        2 => "two".into(),
        3 => "three".into(),
        4 => "four".into(),
        5 => "five".into(),
        _ => n.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum TrainedModel {
    Mlp(MlpModel),
    Rbf(RbfModel),
    Svm(SvmModel),
}

impl TrainedModel {
    /// Score increasing in the likelihood of `Dangerous`, on standardized
    /// input: the MLP logit, the RBF output, or the SVM decision value.
    pub fn decision(&self, x: &[f64]) -> f64 {
        match self {
            TrainedModel::Mlp(m) => m.logit(x),
            TrainedModel::Rbf(m) => m.output(x),
            TrainedModel::Svm(m) => m.decision(x),
        }
    }

    /// Decision value at which the positive-class score equals 0.5.
    pub fn cutoff(&self) -> f64 {
        match self {
            TrainedModel::Rbf(_) => 0.5,
            TrainedModel::Mlp(_) | TrainedModel::Svm(_) => 0.0,
        }
    }

    /// False only for an SVM that ran out of iterations.
    pub fn converged(&self) -> bool {
        match self {
            TrainedModel::Svm(m) => m.converged,
            _ => true,
        }
    }
}

/// A trained model with the standardization of its training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedClassifier {
    pub spec: ModelSpec,
    pub standardization: Standardization,
    pub model: TrainedModel,
}

impl FittedClassifier {
    pub fn fit(spec: &ModelSpec, ds: &LabeledDataset, seed: u64) -> Result<Self, LearnerError> {
        Ok(FittedClassifier {
            spec: spec.clone(),
            standardization: ds.standardization().clone(),
            model: spec.fit(ds, seed)?,
        })
    }

    pub fn decision(&self, raw: &[f64]) -> f64 {
        self.model.decision(&self.standardization.apply(raw))
    }

    pub fn predict_dangerous(&self, raw: &[f64]) -> bool {
        self.decision(raw) >= self.model.cutoff()
    }
}
