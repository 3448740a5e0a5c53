use chrono::NaiveDate;
use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::{TrackPoint, TrackerError};
use crate::corpus::Label;
use crate::svm::{train_multiclass, ClassWeighting, Classifier, Kernel, TrainParams};

/// Linear c/e/t classifier over the projected plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionClassifier {
    pub classifier: Classifier,
}

impl RegionClassifier {
    pub fn probabilities(&self, p: &Vector2<f64>) -> Result<[f64; 3], TrackerError> {
        let v = self.classifier.probabilities(&[p[0], p[1]])?;
        Ok([v[0], v[1], v[2]])
    }

    pub fn p_terrorist(&self, p: &Vector2<f64>) -> Result<f64, TrackerError> {
        Ok(self.probabilities(p)?[Label::Terrorist.index()])
    }

    /// Argmax region; ties go to the more severe class.
    pub fn region(&self, p: &Vector2<f64>) -> Result<Label, TrackerError> {
        let k = self.classifier.predict(&[p[0], p[1]])?;
        Ok(Label::ALL[k])
    }
}

/// Fits the region classifier on all projected points with balanced class
/// weights and calibrated one-vs-rest probabilities.
pub fn fit_region_classifier(
    points: &[Vector2<f64>],
    labels: &[Label],
    seed: u64,
) -> Result<RegionClassifier, TrackerError> {
    if points.len() != labels.len() {
        return Err(TrackerError::LengthMismatch(points.len(), labels.len()));
    }
    let x: Vec<Vec<f64>> = points.iter().map(|p| vec![p[0], p[1]]).collect();
    let y: Vec<usize> = labels.iter().map(|l| l.index()).collect();
    let classes: Vec<String> = Label::ALL.iter().map(|l| l.code().to_string()).collect();
    let params = TrainParams {
        weighting: ClassWeighting::Balanced,
        seed,
        ..TrainParams::new(1.0, Kernel::Linear)
    };
    Ok(RegionClassifier {
        classifier: train_multiclass(&x, &y, &classes, &params)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub date: NaiveDate,
    pub p_terrorist: f64,
    pub fired: bool,
}

/// `p(t)` at each posterior position; fires when it exceeds `threshold`.
pub fn alert(
    trajectory: &[TrackPoint],
    regions: &RegionClassifier,
    threshold: f64,
) -> Result<Vec<Alert>, TrackerError> {
    trajectory
        .iter()
        .map(|t| {
            let p = regions.p_terrorist(&t.state.position())?;
            Ok(Alert {
                date: t.state.date,
                p_terrorist: p,
                fired: p > threshold,
            })
        })
        .collect()
}
