//! C-SVC training by sequential minimal optimisation, Platt calibration,
//! one-vs-rest multiclass ensembles and grid search.

mod calibrate;
mod grid;
mod multiclass;
mod smo;

pub use calibrate::{calibrate, Platt};
pub use grid::{grid_search, GridCell, GridConfig, GridResult, GridSpec, KernelKind, Metric, OutOfFold};
pub use multiclass::{class_weights, train_multiclass, upsample, upsample_indices, Classifier, ClassWeighting, TrainParams};
pub use smo::{solve_dual, train_binary, BinaryParams, DualSolution, SvmModel};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reduce::ReduceError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvmError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("class `{0}` has no training samples")]
    MissingClass(String),
    #[error("feature matrix contains a non-finite value")]
    NonFiniteFeature,
    #[error("expected dimension {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("decision scores are constant; cannot calibrate")]
    DegenerateCalibration,
    #[error("every grid configuration failed")]
    GridFailed,
    #[error(transparent)]
    Reduce(#[from] ReduceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        match *self {
            Kernel::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(SvmError::InvalidParameter(format!("RBF gamma must be positive, got {gamma}")))
            }
            _ => Ok(()),
        }
    }
}

fn check_rows(x: &[Vec<f64>]) -> Result<usize, SvmError> {
    let d = x.first().map_or(0, Vec::len);
    if let Some(r) = x.iter().find(|r| r.len() != d) {
        return Err(SvmError::DimensionMismatch {
            expected: d,
            found: r.len(),
        });
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(SvmError::NonFiniteFeature);
    }
    Ok(d)
}
