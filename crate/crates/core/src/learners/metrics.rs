//! Confusion counts and the rank-statistic AUC.

use serde::{Deserialize, Serialize};

/// Binary confusion counts with `Dangerous` as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(predicted: &[bool], actual: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// TP / (TP + FN); zero when there are no positives.
    pub fn tpr(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// TP / (TP + FP); zero when nothing was predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// AUC as an exact fraction `(2U, 2PN)` where `U` is the Mann-Whitney
/// statistic of the positive scores with ties counted as one half.
///
/// Returns `None` when either class is absent.
pub fn auc_fraction(scores: &[f64], positive: &[bool]) -> Option<(u128, u128)> {
    let n_pos = positive.iter().filter(|p| **p).count() as u128;
    let n_neg = positive.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // twice the rank sum of the positives; tied groups share the mid-rank
    let mut twice_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let twice_mid_rank = (start + 1 + end) as u128;
        let pos_in_group = order[start..end].iter().filter(|&&i| positive[i]).count() as u128;
        twice_rank_sum += twice_mid_rank * pos_in_group;
        start = end;
    }
    let twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    Some((twice_u, 2 * n_pos * n_neg))
}

/// Area under the ROC curve; `None` when either class is absent.
pub fn auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    auc_fraction(scores, positive).map(|(num, den)| num as f64 / den as f64)
}
