use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{calibrate, check_rows, train_binary, BinaryParams, Kernel, Platt, SvmError, SvmModel};
use crate::eval::kfold;
use crate::reduce::Projection;

/// How per-class box constraints are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeighting {
    #[default]
    Uniform,
    /// `total / (classes * class_count)` per class.
    Balanced,
}

/// Per-class weights over `n_classes` classes; absent classes get weight 0.
pub fn class_weights(labels: &[usize], n_classes: usize, weighting: ClassWeighting) -> Vec<f64> {
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count() as f64;
    counts
        .iter()
        .map(|&c| match (weighting, c) {
            (_, 0) => 0.0,
            (ClassWeighting::Uniform, _) => 1.0,
            (ClassWeighting::Balanced, c) => labels.len() as f64 / (present * c as f64),
        })
        .collect()
}

/// Row indices after up-sampling every class to the majority count.
///
/// Output keeps every original index once, in order, followed by draws with
/// replacement for each minority class in ascending class order.
pub fn upsample_indices(labels: &[usize], seed: u64) -> Vec<usize> {
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let target = members.iter().map(Vec::len).max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<usize> = (0..labels.len()).collect();
    for m in members.iter().filter(|m| !m.is_empty()) {
        for _ in m.len()..target {
            out.push(m[rng.random_range(0..m.len())]);
        }
    }
    out
}

pub fn upsample(x: &[Vec<f64>], y: &[usize], seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let idx = upsample_indices(y, seed);
    (idx.iter().map(|&i| x[i].clone()).collect(), idx.iter().map(|&i| y[i]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub c: f64,
    pub kernel: Kernel,
    pub weighting: ClassWeighting,
    /// Up-sample minority classes before each fit.
    pub upsample: bool,
    /// Internal folds producing out-of-fold scores for calibration.
    pub calibration_folds: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl TrainParams {
    pub fn new(c: f64, kernel: Kernel) -> Self {
        TrainParams {
            c,
            kernel,
            weighting: ClassWeighting::Uniform,
            upsample: false,
            calibration_folds: 3,
            seed: 0,
            tolerance: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

/// One-vs-rest ensemble with calibrated per-class probabilities. With two
/// classes a single model separates class 1 (positive) from class 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    /// Class names, ordered by severity: later classes win ties.
    pub classes: Vec<String>,
    pub models: Vec<SvmModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocessing: Option<Projection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_kind: Option<String>,
}

impl Classifier {
    fn prepare<'a>(&self, x: &'a [f64]) -> Result<std::borrow::Cow<'a, [f64]>, SvmError> {
        Ok(match &self.preprocessing {
            Some(p) => std::borrow::Cow::Owned(p.project(x)?),
            None => std::borrow::Cow::Borrowed(x),
        })
    }

    /// Raw decision scores, one per model.
    pub fn decision_scores(&self, x: &[f64]) -> Result<Vec<f64>, SvmError> {
        let x = self.prepare(x)?;
        self.models.iter().map(|m| m.decision(&x)).collect()
    }

    /// Normalised class probabilities.
    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>, SvmError> {
        let scores = self.decision_scores(x)?;
        let prob = |m: &SvmModel, s: f64| {
            m.calibration
                .unwrap_or(Platt { a: -1.0, b: 0.0 })
                .probability(s)
                .clamp(1e-12, 1.0 - 1e-12)
        };
        if self.classes.len() == 2 {
            let p1 = prob(&self.models[0], scores[0]);
            return Ok(vec![1.0 - p1, p1]);
        }
        let raw: Vec<f64> = self.models.iter().zip(&scores).map(|(m, &s)| prob(m, s)).collect();
        let total: f64 = raw.iter().sum();
        Ok(raw.into_iter().map(|p| p / total).collect())
    }

    /// Argmax class index; ties go to the later (more severe) class.
    pub fn predict(&self, x: &[f64]) -> Result<usize, SvmError> {
        Ok(argmax_severity(&self.probabilities(x)?))
    }
}

pub(crate) fn argmax_severity(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v >= p[best] {
            best = i;
        }
    }
    best
}

/// Binary sub-problems as (positive class, ±1 targets) pairs.
fn binary_targets(y: &[usize], n_classes: usize) -> Vec<Vec<f64>> {
    let positives: Vec<usize> = if n_classes == 2 { vec![1] } else { (0..n_classes).collect() };
    positives
        .into_iter()
        .map(|k| y.iter().map(|&l| if l == k { 1.0 } else { -1.0 }).collect())
        .collect()
}

fn fit_models(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &TrainParams, seed: u64) -> Result<Vec<SvmModel>, SvmError> {
    let (xs, ys);
    let (x, y) = if params.upsample {
        (xs, ys) = upsample(x, y, seed);
        (xs.as_slice(), ys.as_slice())
    } else {
        (x, y)
    };
    binary_targets(y, n_classes)
        .iter()
        .map(|t| {
            let labels: Vec<usize> = t.iter().map(|&v| usize::from(v > 0.0)).collect();
            let w = class_weights(&labels, 2, params.weighting);
            let bp = BinaryParams {
                c: params.c,
                kernel: params.kernel,
                class_weights: [w[0], w[1]],
                tolerance: params.tolerance,
                max_iter: params.max_iter,
            };
            train_binary(x, t, &bp)
        })
        .collect()
}

/// Trains the ensemble and fits each model's sigmoid on out-of-fold scores
/// from an internal stratified split of the training data.
pub fn train_multiclass(
    x: &[Vec<f64>],
    y: &[usize],
    classes: &[String],
    params: &TrainParams,
) -> Result<Classifier, SvmError> {
    let n_classes = classes.len();
    if n_classes < 2 {
        return Err(SvmError::SingleClass);
    }
    if x.len() != y.len() {
        return Err(SvmError::InvalidParameter(format!("{} rows but {} labels", x.len(), y.len())));
    }
    check_rows(x)?;
    if let Some(&bad) = y.iter().find(|&&l| l >= n_classes) {
        return Err(SvmError::InvalidParameter(format!("label index {bad} out of range")));
    }
    let mut counts = vec![0usize; n_classes];
    for &l in y {
        counts[l] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(SvmError::SingleClass);
    }
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(SvmError::MissingClass(classes[k].clone()));
    }

    let mut models = fit_models(x, y, n_classes, params, params.seed)?;
    let targets = binary_targets(y, n_classes);
    let scores = out_of_fold_scores(x, y, n_classes, params)?.unwrap_or_else(|| {
        models
            .iter()
            .map(|m| x.iter().map(|r| m.decision(r).expect("checked dimension")).collect())
            .collect()
    });
    // With up-sampling on, the sigmoid is fitted on a class-balanced
    // resample of the scores so the probabilities do not reinstate the
    // class imbalance the training step removed.
    let rows: Vec<usize> = if params.upsample {
        upsample_indices(y, params.seed ^ 0xca1b)
    } else {
        (0..y.len()).collect()
    };
    for ((m, s), t) in models.iter_mut().zip(&scores).zip(&targets) {
        let s: Vec<f64> = rows.iter().map(|&i| s[i]).collect();
        let pos: Vec<bool> = rows.iter().map(|&i| t[i] > 0.0).collect();
        m.calibration = Some(calibrate(&s, &pos).unwrap_or(Platt { a: -1.0, b: 0.0 }));
    }
    Ok(Classifier {
        classes: classes.to_vec(),
        models,
        preprocessing: None,
        feature_kind: None,
    })
}

/// `None` when some class is too small to appear in every internal fold.
fn out_of_fold_scores(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    params: &TrainParams,
) -> Result<Option<Vec<Vec<f64>>>, SvmError> {
    let k = params.calibration_folds;
    let mut counts = vec![0usize; n_classes];
    for &l in y {
        counts[l] += 1;
    }
    if k < 2 || counts.iter().any(|&c| c < k) {
        return Ok(None);
    }
    let plan = kfold(x.len(), k, Some(y), params.seed ^ 0x5eed_ca1b).expect("k <= n");
    let n_models = if n_classes == 2 { 1 } else { n_classes };
    let mut scores = vec![vec![0.0; x.len()]; n_models];
    for f in 0..k {
        let train = plan.train_indices(f);
        let xt: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let yt: Vec<usize> = train.iter().map(|&i| y[i]).collect();
        let models = fit_models(&xt, &yt, n_classes, params, params.seed.wrapping_add(f as u64 + 1))?;
        for &i in plan.test_indices(f) {
            for (m, s) in models.iter().zip(scores.iter_mut()) {
                s[i] = m.decision(&x[i])?;
            }
        }
    }
    Ok(Some(scores))
}
