//! Repeated random train/test evaluation.

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{auc, Confusion};
use super::{FittedClassifier, LearnerError, ModelSpec};
use crate::dataset::LabeledDataset;
use crate::sensor::Label;

/// Re-draws allowed per repeat before giving up on the split.
pub const MAX_SPLIT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_fraction: f64,
    pub repeats: usize,
    pub master_seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan {
            train_fraction: 0.7,
            repeats: 100,
            master_seed: 1,
        }
    }
}

impl SplitPlan {
    pub fn train_size(&self, n: usize) -> usize {
        ((self.train_fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1))
    }

    /// Random stream of repeat `r`: independent of every other repeat.
    pub fn repeat_rng(&self, r: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(r as u64);
        rng
    }

    /// Draw the train/test index split of repeat `r`. The second value is
    /// the number of draws rejected because a side missed a class.
    pub fn split(
        &self,
        labels: &[Label],
        r: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Vec<usize>, Vec<usize>, usize), LearnerError> {
        let n = labels.len();
        let n_train = self.train_size(n);
        let has_both = |idx: &[usize]| {
            let pos = idx.iter().filter(|&&i| labels[i].is_positive()).count();
            pos > 0 && pos < idx.len()
        };
        let mut order: Vec<usize> = (0..n).collect();
        for attempt in 0..MAX_SPLIT_ATTEMPTS {
            order.shuffle(rng);
            let (train, test) = order.split_at(n_train);
            if has_both(train) && has_both(test) {
                let mut train = train.to_vec();
                let mut test = test.to_vec();
                train.sort_unstable();
                test.sort_unstable();
                return Ok((train, test, attempt));
            }
            log::info!("repeat {r}: split {attempt} lacks a class on one side, re-drawing");
        }
        Err(LearnerError::DegenerateSplit {
            repeat: r,
            attempts: MAX_SPLIT_ATTEMPTS,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatOutcome {
    pub repeat: usize,
    pub tpr: f64,
    pub precision: f64,
    pub auc: f64,
    pub confusion: Confusion,
    pub redraws: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: ModelSpec,
    pub row_label: String,
    pub tpr: f64,
    pub precision: f64,
    pub auc: f64,
    pub redraws: usize,
    pub nonconverged: usize,
    pub per_repeat: Vec<RepeatOutcome>,
}

/// Train on `train_fraction` of the rows and score the rest, `repeats`
/// times. Standardization is refitted on every training split.
pub fn evaluate(
    raw: &[Vec<f64>],
    labels: &[Label],
    spec: &ModelSpec,
    plan: &SplitPlan,
) -> Result<MetricsReport, LearnerError> {
    // validates shape, labels and class balance once up front
    LabeledDataset::new(raw, labels)?;
    if plan.repeats == 0 {
        return Err(LearnerError::BadParameter("repeats must be positive".into()));
    }
    if !(plan.train_fraction > 0.0 && plan.train_fraction < 1.0) {
        return Err(LearnerError::BadParameter("train fraction must lie in (0, 1)".into()));
    }

    let mut per_repeat = Vec::with_capacity(plan.repeats);
    for r in 0..plan.repeats {
        let mut rng = plan.repeat_rng(r);
        let (train, test, redraws) = plan.split(labels, r, &mut rng)?;
        let model_seed = rng.next_u64();

        let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<Label>) {
            (idx.iter().map(|&i| raw[i].clone()).collect(), idx.iter().map(|&i| labels[i]).collect())
        };
        let (train_x, train_y) = pick(&train);
        let ds = LabeledDataset::new(&train_x, &train_y)?;
        let fitted = FittedClassifier::fit(spec, &ds, model_seed)?;

        let scores: Vec<f64> = test.iter().map(|&i| fitted.decision(&raw[i])).collect();
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(LearnerError::NonFinite(format!("repeat {r}: test score")));
        }
        let cutoff = fitted.model.cutoff();
        let predicted: Vec<bool> = scores.iter().map(|s| *s >= cutoff).collect();
        let actual: Vec<bool> = test.iter().map(|&i| labels[i].is_positive()).collect();
        let confusion = Confusion::from_predictions(&predicted, &actual);
        let auc = auc(&scores, &actual).expect("split guarantees both classes");
        per_repeat.push(RepeatOutcome {
            repeat: r,
            tpr: confusion.tpr(),
            precision: confusion.precision(),
            auc,
            confusion,
            redraws,
            converged: fitted.model.converged(),
        });
    }

    let mean = |f: fn(&RepeatOutcome) -> f64| per_repeat.iter().map(f).sum::<f64>() / per_repeat.len() as f64;
    Ok(MetricsReport {
        model: spec.clone(),
        row_label: spec.row_label(),
        tpr: mean(|o| o.tpr),
        precision: mean(|o| o.precision),
        auc: mean(|o| o.auc),
        redraws: per_repeat.iter().map(|o| o.redraws).sum(),
        nonconverged: per_repeat.iter().filter(|o| !o.converged).count(),
        per_repeat,
    })
}
