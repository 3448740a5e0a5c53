use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train_multiclass, ClassWeighting, Kernel, SvmError, TrainParams};
use crate::eval::{auc, balanced_accuracy, confusion, kfold, roc, FoldPlan};
use crate::reduce::fit_pca;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    BalancedAccuracy,
    Accuracy,
    /// Positive-class AUC for two classes, macro one-vs-rest otherwise.
    Auc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub c_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    pub kernels: Vec<KernelKind>,
    /// `None` keeps every input dimension.
    pub pca_components: Vec<Option<usize>>,
    pub folds: usize,
    pub stratified: bool,
    pub metric: Metric,
    pub upsample: bool,
    pub weighting: ClassWeighting,
    pub calibration_folds: usize,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            c_values: vec![0.1, 1.0, 10.0, 100.0],
            gamma_values: (-7..=-1).step_by(2).map(|e| 2f64.powi(e)).collect(),
            kernels: vec![KernelKind::Linear, KernelKind::Rbf],
            pca_components: vec![Some(32), None],
            folds: 10,
            stratified: true,
            metric: Metric::BalancedAccuracy,
            upsample: true,
            weighting: ClassWeighting::Uniform,
            calibration_folds: 3,
            seed: 0,
        }
    }
}

impl GridSpec {
    /// A grid holding exactly one configuration.
    pub fn single(config: GridConfig) -> Self {
        GridSpec {
            c_values: vec![config.c],
            gamma_values: config.gamma.into_iter().collect(),
            kernels: vec![config.kernel],
            pca_components: vec![config.pca],
            ..GridSpec::default()
        }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        let bad = |m: &str| Err(SvmError::InvalidParameter(m.into()));
        if self.folds < 2 {
            return bad("fold count must be at least 2");
        }
        if self.c_values.is_empty() || self.kernels.is_empty() || self.pca_components.is_empty() {
            return bad("grid has an empty axis");
        }
        if self.kernels.contains(&KernelKind::Rbf) && self.gamma_values.is_empty() {
            return bad("RBF kernel needs at least one gamma");
        }
        if self.c_values.iter().chain(&self.gamma_values).any(|&v| !(v > 0.0 && v.is_finite())) {
            return bad("C and gamma candidates must be positive");
        }
        if self.pca_components.contains(&Some(0)) {
            return bad("PCA component counts must be positive");
        }
        Ok(())
    }

    /// Every configuration in a fixed order; linear kernels ignore gamma.
    pub fn configs(&self) -> Vec<GridConfig> {
        let mut out = Vec::new();
        for &kernel in &self.kernels {
            let gammas: Vec<Option<f64>> = match kernel {
                KernelKind::Linear => vec![None],
                KernelKind::Rbf => self.gamma_values.iter().copied().map(Some).collect(),
            };
            for &pca in &self.pca_components {
                for &c in &self.c_values {
                    for &gamma in &gammas {
                        out.push(GridConfig { kernel, c, gamma, pca });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub kernel: KernelKind,
    pub c: f64,
    pub gamma: Option<f64>,
    pub pca: Option<usize>,
}

impl GridConfig {
    pub fn kernel(&self) -> Kernel {
        match self.kernel {
            KernelKind::Linear => Kernel::Linear,
            KernelKind::Rbf => Kernel::Rbf {
                gamma: self.gamma.unwrap_or(1.0),
            },
        }
    }

    /// Preference among equal scores: smaller C, smaller gamma, fewer PCA components.
    fn preference(&self, other: &GridConfig) -> Ordering {
        self.c
            .total_cmp(&other.c)
            .then(self.gamma.unwrap_or(0.0).total_cmp(&other.gamma.unwrap_or(0.0)))
            .then(self.pca.unwrap_or(usize::MAX).cmp(&other.pca.unwrap_or(usize::MAX)))
    }
}

/// Pooled out-of-fold results for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfFold {
    pub predictions: Vec<usize>,
    pub probabilities: Vec<Vec<f64>>,
    pub fold_of: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub config: GridConfig,
    pub metric: Option<f64>,
    pub error: Option<String>,
    #[serde(skip)]
    pub out_of_fold: Option<OutOfFold>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    pub best: usize,
    pub folds: FoldPlan,
}

impl GridResult {
    pub fn best_cell(&self) -> &GridCell {
        &self.cells[self.best]
    }
}

/// Cross-validates every configuration on the same folds and keeps the best.
pub fn grid_search(spec: &GridSpec, x: &[Vec<f64>], y: &[usize], classes: &[String]) -> Result<GridResult, SvmError> {
    spec.validate()?;
    if x.len() != y.len() {
        return Err(SvmError::InvalidParameter(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let plan = kfold(x.len(), spec.folds, spec.stratified.then_some(y), spec.seed)
        .map_err(|e| SvmError::InvalidParameter(e.to_string()))?;

    let cells: Vec<GridCell> = spec
        .configs()
        .into_par_iter()
        .map(|config| match cross_validate(&config, spec, &plan, x, y, classes) {
            Ok(oof) => match score(spec.metric, y, &oof, classes) {
                Ok(m) => GridCell {
                    config,
                    metric: Some(m),
                    error: None,
                    out_of_fold: Some(oof),
                },
                Err(e) => failed(config, e),
            },
            Err(e) => failed(config, e),
        })
        .collect();

    let best = cells
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.metric.map(|m| (i, m)))
        .reduce(|(bi, bm), (i, m)| {
            let better = m > bm + 1e-12
                || ((m - bm).abs() <= 1e-12 && cells[i].config.preference(&cells[bi].config) == Ordering::Less);
            if better {
                (i, m)
            } else {
                (bi, bm)
            }
        })
        .map(|(i, _)| i)
        .ok_or(SvmError::GridFailed)?;
    Ok(GridResult { cells, best, folds: plan })
}

fn failed(config: GridConfig, e: SvmError) -> GridCell {
    GridCell {
        config,
        metric: None,
        error: Some(e.to_string()),
        out_of_fold: None,
    }
}

fn cross_validate(
    config: &GridConfig,
    spec: &GridSpec,
    plan: &FoldPlan,
    x: &[Vec<f64>],
    y: &[usize],
    classes: &[String],
) -> Result<OutOfFold, SvmError> {
    let per_fold: Vec<Vec<(usize, usize, Vec<f64>)>> = (0..plan.k())
        .into_par_iter()
        .map(|f| {
            let train = plan.train_indices(f);
            let mut xt: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
            let yt: Vec<usize> = train.iter().map(|&i| y[i]).collect();
            let projection = match config.pca {
                Some(k) => Some(fit_pca(&xt, k)?),
                None => None,
            };
            if let Some(p) = &projection {
                xt = p.project_all(&xt)?;
            }
            let params = TrainParams {
                c: config.c,
                kernel: config.kernel(),
                weighting: spec.weighting,
                upsample: spec.upsample,
                calibration_folds: spec.calibration_folds,
                seed: spec.seed.wrapping_add(f as u64),
                ..TrainParams::new(config.c, config.kernel())
            };
            let mut clf = train_multiclass(&xt, &yt, classes, &params)?;
            clf.preprocessing = projection;
            plan.test_indices(f)
                .iter()
                .map(|&i| {
                    let p = clf.probabilities(&x[i])?;
                    Ok((i, super::multiclass::argmax_severity(&p), p))
                })
                .collect()
        })
        .collect::<Result<_, SvmError>>()?;

    let n = x.len();
    let mut oof = OutOfFold {
        predictions: vec![0; n],
        probabilities: vec![Vec::new(); n],
        fold_of: vec![0; n],
    };
    for (f, rows) in per_fold.into_iter().enumerate() {
        for (i, pred, p) in rows {
            oof.predictions[i] = pred;
            oof.probabilities[i] = p;
            oof.fold_of[i] = f;
        }
    }
    Ok(oof)
}

fn score(metric: Metric, y: &[usize], oof: &OutOfFold, classes: &[String]) -> Result<f64, SvmError> {
    let wrap = |e: crate::eval::EvalError| SvmError::InvalidParameter(e.to_string());
    match metric {
        Metric::BalancedAccuracy => {
            balanced_accuracy(&confusion(y, &oof.predictions, classes).map_err(wrap)?).map_err(wrap)
        }
        Metric::Accuracy => Ok(confusion(y, &oof.predictions, classes).map_err(wrap)?.accuracy()),
        Metric::Auc => {
            let targets: Vec<usize> = if classes.len() == 2 { vec![1] } else { (0..classes.len()).collect() };
            let mut total = 0.0;
            for &k in &targets {
                let s: Vec<f64> = oof.probabilities.iter().map(|p| p[k]).collect();
                let pos: Vec<bool> = y.iter().map(|&l| l == k).collect();
                total += auc(&roc(&s, &pos).map_err(wrap)?);
            }
            Ok(total / targets.len() as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (Vec<Vec<f64>>, Vec<usize>, Vec<String>) {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let side = if i % 2 == 0 { -3.0 } else { 3.0 };
                vec![side + (i as f64 * 0.37).sin() * 0.5, (i as f64 * 0.11).cos()]
            })
            .collect();
        let y = (0..40).map(|i| i % 2).collect();
        (x, y, vec!["neg".into(), "pos".into()])
    }

    fn cfg(c: f64) -> GridConfig {
        GridConfig {
            kernel: KernelKind::Linear,
            c,
            gamma: None,
            pca: None,
        }
    }

    #[test]
    fn single_config_is_returned() {
        let (x, y, classes) = separable();
        let spec = GridSpec {
            folds: 4,
            ..GridSpec::single(cfg(1.0))
        };
        let r = grid_search(&spec, &x, &y, &classes).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.best_cell().config, cfg(1.0));
    }

    #[test]
    fn tie_prefers_smaller_c() {
        let (x, y, classes) = separable();
        let spec = GridSpec {
            c_values: vec![10.0, 0.1],
            folds: 4,
            ..GridSpec::single(cfg(1.0))
        };
        let r = grid_search(&spec, &x, &y, &classes).unwrap();
        assert!(r.cells.iter().all(|c| c.metric == Some(1.0)));
        assert_eq!(r.best_cell().config.c, 0.1);
    }

    #[test]
    fn duplicate_configs_agree() {
        let (x, y, classes) = separable();
        let spec = GridSpec {
            c_values: vec![0.5, 0.5],
            kernels: vec![KernelKind::Rbf],
            gamma_values: vec![0.3],
            folds: 5,
            ..GridSpec::default()
        };
        let spec = GridSpec {
            pca_components: vec![None],
            ..spec
        };
        let r = grid_search(&spec, &x, &y, &classes).unwrap();
        assert_eq!(r.cells[0].metric, r.cells[1].metric);
        assert_eq!(r.cells[0].out_of_fold, r.cells[1].out_of_fold);
    }

    #[test]
    fn failing_cells_are_recorded() {
        let (x, y, classes) = separable();
        let spec = GridSpec {
            pca_components: vec![Some(5), None],
            folds: 4,
            ..GridSpec::single(cfg(1.0))
        };
        let r = grid_search(&spec, &x, &y, &classes).unwrap();
        assert!(r.cells[0].error.is_some() && r.cells[0].metric.is_none());
        assert_eq!(r.best_cell().config.pca, None);

        let all_bad = GridSpec {
            pca_components: vec![Some(5)],
            ..spec
        };
        assert_eq!(grid_search(&all_bad, &x, &y, &classes), Err(SvmError::GridFailed));
    }

    #[test]
    fn preference_order() {
        let a = GridConfig { kernel: KernelKind::Rbf, c: 1.0, gamma: Some(0.5), pca: Some(8) };
        let b = GridConfig { gamma: Some(0.25), ..a };
        let c = GridConfig { pca: None, ..a };
        assert_eq!(b.preference(&a), Ordering::Less);
        assert_eq!(a.preference(&c), Ordering::Less);
        assert_eq!(cfg(0.5).preference(&a), Ordering::Less);
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec { folds: 1, ..GridSpec::default() }.validate().is_err());
        assert!(GridSpec { c_values: vec![-1.0], ..GridSpec::default() }.validate().is_err());
        assert!(GridSpec::default().validate().is_ok());
        assert_eq!(GridSpec::default().configs().len(), 2 * 4 + 2 * 4 * 4);
    }
}
