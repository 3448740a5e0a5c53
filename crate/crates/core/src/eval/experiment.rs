use serde::{Deserialize, Serialize};

use super::{auc, balanced_accuracy, confusion, roc, ConfusionMatrix, EvalError, RocCurve};
use crate::corpus::{Corpus, Label};
use crate::svm::{grid_search, GridConfig, GridResult, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// c / e / t
    #[default]
    Threeway,
    /// t against c and e together
    DetectTerrorist,
    /// e against c, with t quotes removed
    DetectExtremist,
}

impl Task {
    pub fn class_names(self) -> Vec<String> {
        let names: &[&str] = match self {
            Task::Threeway => &["c", "e", "t"],
            Task::DetectTerrorist => &["c+e", "t"],
            Task::DetectExtremist => &["c", "e"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    /// Class index of a statement label, or `None` if the task excludes it.
    pub fn class_of(self, label: Label) -> Option<usize> {
        match (self, label) {
            (Task::Threeway, l) => Some(l.index()),
            (Task::DetectTerrorist, Label::Terrorist) => Some(1),
            (Task::DetectTerrorist, _) => Some(0),
            (Task::DetectExtremist, Label::Terrorist) => None,
            (Task::DetectExtremist, Label::Extremist) => Some(1),
            (Task::DetectExtremist, Label::Centrist) => Some(0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Threeway => "threeway",
            Task::DetectTerrorist => "detect_terrorist",
            Task::DetectExtremist => "detect_extremist",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Task::Threeway, Task::DetectTerrorist, Task::DetectExtremist]
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRoc {
    pub class: String,
    pub curve: RocCurve,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub task: Task,
    pub classes: Vec<String>,
    /// Quote ids that entered cross-validation, in corpus order.
    pub ids: Vec<String>,
    pub actual: Vec<usize>,
    pub predicted: Vec<usize>,
    pub probabilities: Vec<Vec<f64>>,
    /// Quotes left out, per statement label code ("unlabelled" for missing labels).
    pub excluded: Vec<(String, usize)>,
    pub grid: GridResult,
    pub best: GridConfig,
    pub confusion: ConfusionMatrix,
    pub balanced_accuracy: f64,
    /// One curve for binary tasks (positive class); one per class otherwise.
    pub rocs: Vec<ClassRoc>,
}

impl ExperimentReport {
    pub fn roc_for(&self, class: &str) -> Option<&ClassRoc> {
        self.rocs.iter().find(|r| r.class == class)
    }
}

/// Cross-validated grid search for one task; the report describes the
/// winning configuration's pooled out-of-fold predictions.
pub fn run_experiment(
    corpus: &Corpus,
    features: &[Vec<f64>],
    task: Task,
    grid: &GridSpec,
    seed: u64,
) -> Result<ExperimentReport, EvalError> {
    if features.len() != corpus.len() {
        return Err(EvalError::FeatureCount(features.len(), corpus.len()));
    }
    let mut ids = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut excluded = [0usize; 4];
    for (q, f) in corpus.quotes().iter().zip(features) {
        match q.label {
            None => excluded[3] += 1,
            Some(l) => match task.class_of(l) {
                Some(k) => {
                    ids.push(q.id.clone());
                    x.push(f.clone());
                    y.push(k);
                }
                None => excluded[l.index()] += 1,
            },
        }
    }
    let excluded = Label::ALL
        .iter()
        .map(|l| l.code().to_string())
        .chain(["unlabelled".to_string()])
        .zip(excluded)
        .filter(|&(_, n)| n > 0)
        .collect();

    let classes = task.class_names();
    let spec = GridSpec { seed, ..grid.clone() };
    let result = grid_search(&spec, &x, &y, &classes)?;
    let best = result.best_cell();
    let oof = best.out_of_fold.clone().expect("best cell succeeded");
    let cm = confusion(&y, &oof.predictions, &classes)?;
    let ba = balanced_accuracy(&cm)?;

    let positives: Vec<usize> = if classes.len() == 2 { vec![1] } else { (0..classes.len()).collect() };
    let mut rocs = Vec::new();
    for k in positives {
        let s: Vec<f64> = oof.probabilities.iter().map(|p| p[k]).collect();
        let pos: Vec<bool> = y.iter().map(|&l| l == k).collect();
        let curve = roc(&s, &pos)?;
        rocs.push(ClassRoc {
            class: classes[k].clone(),
            auc: auc(&curve),
            curve,
        });
    }

    Ok(ExperimentReport {
        task,
        best: best.config,
        classes,
        ids,
        actual: y,
        predicted: oof.predictions,
        probabilities: oof.probabilities,
        excluded,
        grid: result,
        confusion: cm,
        balanced_accuracy: ba,
        rocs,
    })
}
