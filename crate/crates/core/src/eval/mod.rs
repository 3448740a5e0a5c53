//! Cross-validation folds, confusion matrices, balanced accuracy and ROC.

mod experiment;

pub use experiment::{run_experiment, ClassRoc, ExperimentReport, Task};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::svm::SvmError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("cannot split {n} samples into {k} folds")]
    TooFewSamples { n: usize, k: usize },
    #[error("label index {0} is outside the class list")]
    LabelOutsideClassList(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("class `{0}` has no samples")]
    EmptyClassRow(String),
    #[error("scores need both positive and negative samples")]
    SingleClass,
    #[error("feature rows ({0}) do not match corpus quotes ({1})")]
    FeatureCount(usize, usize),
    #[error(transparent)]
    Svm(#[from] SvmError),
}

/// Disjoint test folds covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
    pub stratified: bool,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn n(&self) -> usize {
        self.folds.iter().map(Vec::len).sum()
    }

    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// All indices outside `fold`, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(f, _)| f != fold)
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        idx.sort_unstable();
        idx
    }
}

/// Seeded k-fold split, stratified when labels are supplied.
///
/// Indices are shuffled (within each class when stratifying), laid end to
/// end class by class, and dealt round-robin, so fold sizes and per-class
/// counts each differ by at most one.
pub fn kfold(n: usize, k: usize, labels: Option<&[usize]>, seed: u64) -> Result<FoldPlan, EvalError> {
    if k < 2 || k > n {
        return Err(EvalError::TooFewSamples { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: Vec<usize> = match labels {
        Some(labels) => {
            if labels.len() != n {
                return Err(EvalError::LengthMismatch(labels.len(), n));
            }
            let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
            let mut members = vec![Vec::new(); n_classes];
            for (i, &l) in labels.iter().enumerate() {
                members[l].push(i);
            }
            members
                .into_iter()
                .flat_map(|mut m| {
                    m.shuffle(&mut rng);
                    m
                })
                .collect()
        }
        None => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            all
        }
    };
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, i) in order.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan {
        folds,
        seed,
        stratified: labels.is_some(),
    })
}

/// Counts with rows = actual class and columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Row-normalised proportions; empty rows stay all-zero.
    pub fn proportions(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let total: usize = row.iter().sum();
                row.iter()
                    .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                    .collect()
            })
            .collect()
    }

    pub fn recall(&self, class: usize) -> Option<f64> {
        let row = &self.counts[class];
        let total: usize = row.iter().sum();
        (total > 0).then(|| row[class] as f64 / total as f64)
    }

    pub fn accuracy(&self) -> f64 {
        let correct: usize = (0..self.classes.len()).map(|i| self.counts[i][i]).sum();
        correct as f64 / self.total() as f64
    }
}

pub fn confusion(actual: &[usize], predicted: &[usize], classes: &[String]) -> Result<ConfusionMatrix, EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch(actual.len(), predicted.len()));
    }
    let k = classes.len();
    let mut counts = vec![vec![0usize; k]; k];
    for (&a, &p) in actual.iter().zip(predicted) {
        if a >= k {
            return Err(EvalError::LabelOutsideClassList(a));
        }
        if p >= k {
            return Err(EvalError::LabelOutsideClassList(p));
        }
        counts[a][p] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

/// Mean per-class recall.
pub fn balanced_accuracy(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    let mut sum = 0.0;
    for (i, name) in cm.classes.iter().enumerate() {
        sum += cm.recall(i).ok_or_else(|| EvalError::EmptyClassRow(name.clone()))?;
    }
    Ok(sum / cm.classes.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Scores `>= threshold` are called positive; the first point uses +inf.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

/// ROC curve over every distinct score; tied scores form a single step.
pub fn roc(scores: &[f64], positive: &[bool]) -> Result<RocCurve, EvalError> {
    if scores.len() != positive.len() {
        return Err(EvalError::LengthMismatch(scores.len(), positive.len()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    Ok(RocCurve { points })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}
