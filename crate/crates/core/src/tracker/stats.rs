use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::TrackerError;
use crate::corpus::{Corpus, Label};

/// 2-D Gaussian summary of one group of projected quotes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassGaussian {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
    pub count: usize,
}

impl ClassGaussian {
    pub fn mean(&self) -> Vector2<f64> {
        Vector2::from(self.mean)
    }

    pub fn cov(&self) -> Matrix2<f64> {
        Matrix2::new(self.cov[0][0], self.cov[0][1], self.cov[1][0], self.cov[1][1])
    }

    pub fn new(mean: Vector2<f64>, cov: Matrix2<f64>, count: usize) -> Self {
        ClassGaussian {
            mean: [mean[0], mean[1]],
            cov: [[cov[(0, 0)], cov[(0, 1)]], [cov[(1, 0)], cov[(1, 1)]]],
            count,
        }
    }

    /// Sample mean and (n-1)-normalised covariance plus a small ridge.
    fn fit(points: &[Vector2<f64>]) -> Self {
        let n = points.len() as f64;
        let mean = points.iter().sum::<Vector2<f64>>() / n;
        let mut cov = points
            .iter()
            .map(|p| (p - mean) * (p - mean).transpose())
            .sum::<Matrix2<f64>>()
            / (n - 1.0);
        let trace = cov.trace();
        let ridge = if trace > 0.0 { 1e-6 * trace / 2.0 } else { 1e-6 };
        cov += Matrix2::identity() * ridge;
        Self::new(mean, cov, points.len())
    }

    /// Placeholder for a class with no members and zero prior.
    fn empty() -> Self {
        Self::new(Vector2::zeros(), Matrix2::identity(), 0)
    }

    fn log_density(&self, z: &Vector2<f64>) -> f64 {
        let cov = self.cov();
        let d = z - self.mean();
        let inv = cov.try_inverse().expect("covariance is positive definite");
        -0.5 * (d.dot(&(inv * d)) + cov.determinant().ln()) - (2.0 * std::f64::consts::PI).ln()
    }
}

/// Class-conditional statistics in the projected plane.
///
/// `x[s]` groups quotes by statement label, `z[k]` by the author's type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub x: [ClassGaussian; 3],
    pub z: [ClassGaussian; 3],
    /// Share of authors of each type.
    pub prior: [f64; 3],
    /// Empirical share of statement labels `[s][k]` among quotes by type-`k` authors.
    pub statement_given_person: [[f64; 3]; 3],
}

impl ClassStats {
    /// Identical zero-mean classes with covariance `cov` and a flat prior.
    pub fn uniform(cov: Matrix2<f64>) -> Self {
        let g = ClassGaussian::new(Vector2::zeros(), cov, 0);
        ClassStats {
            x: [g; 3],
            z: [g; 3],
            prior: [1.0 / 3.0; 3],
            statement_given_person: [[1.0 / 3.0; 3]; 3],
        }
    }
}

/// Fits per-class Gaussians to projected quotes.
///
/// Groups with zero members are allowed only when the matching person type
/// has zero prior mass; any populated group needs at least two members.
pub fn fit_class_stats(corpus: &Corpus, projected: &[Vector2<f64>]) -> Result<ClassStats, TrackerError> {
    if projected.len() != corpus.len() {
        return Err(TrackerError::LengthMismatch(projected.len(), corpus.len()));
    }
    let mut by_statement: [Vec<Vector2<f64>>; 3] = Default::default();
    let mut by_person: [Vec<Vector2<f64>>; 3] = Default::default();
    let mut joint = [[0usize; 3]; 3];
    for (q, p) in corpus.quotes().iter().zip(projected) {
        let s = q.label.ok_or_else(|| TrackerError::MissingLabel(q.id.clone()))?;
        let k = q
            .author_type
            .ok_or_else(|| TrackerError::MissingAuthorType(q.author.clone()))?;
        by_statement[s.index()].push(*p);
        by_person[k.index()].push(*p);
        joint[s.index()][k.index()] += 1;
    }

    let mut authors = [0usize; 3];
    for a in corpus.authors() {
        let first = corpus.author_quotes(a)[0];
        let k = first.author_type.ok_or_else(|| TrackerError::MissingAuthorType(a.to_string()))?;
        authors[k.index()] += 1;
    }
    let n_authors: usize = authors.iter().sum();
    let prior = authors.map(|c| if n_authors == 0 { 0.0 } else { c as f64 / n_authors as f64 });

    let fit_group = |grouping: &'static str, k: usize, pts: &[Vector2<f64>]| match pts.len() {
        0 if prior[k] == 0.0 => Ok(ClassGaussian::empty()),
        n if n < 2 => Err(TrackerError::GroupTooSmall {
            grouping,
            class: Label::ALL[k].code().to_string(),
            count: n,
        }),
        _ => Ok(ClassGaussian::fit(pts)),
    };
    let mut x = [ClassGaussian::empty(); 3];
    let mut z = [ClassGaussian::empty(); 3];
    for k in 0..3 {
        x[k] = fit_group("statement", k, &by_statement[k])?;
        z[k] = fit_group("person", k, &by_person[k])?;
    }

    let mut statement_given_person = [[0.0; 3]; 3];
    for k in 0..3 {
        let col: usize = (0..3).map(|s| joint[s][k]).sum();
        if col > 0 {
            for s in 0..3 {
                statement_given_person[s][k] = joint[s][k] as f64 / col as f64;
            }
        }
    }
    Ok(ClassStats {
        x,
        z,
        prior,
        statement_given_person,
    })
}

/// Measurement covariance at `z`: the moment-matched covariance of the
/// statement-class mixture weighted by the person-type posterior at `z`.
pub fn measurement_noise(z: &Vector2<f64>, stats: &ClassStats) -> Matrix2<f64> {
    let weights = mixture_weights(z, stats);
    let mean: Vector2<f64> = (0..3).map(|k| stats.x[k].mean() * weights[k]).sum();
    let r: Matrix2<f64> = (0..3)
        .filter(|&k| weights[k] > 0.0)
        .map(|k| {
            let d = stats.x[k].mean() - mean;
            (stats.x[k].cov() + d * d.transpose()) * weights[k]
        })
        .sum();
    (r + r.transpose()) * 0.5
}

/// Normalised `p(k) N(z | mu_z^k, Sigma_z^k)`, computed in log space.
pub(crate) fn mixture_weights(z: &Vector2<f64>, stats: &ClassStats) -> [f64; 3] {
    let logs: Vec<f64> = (0..3)
        .map(|k| {
            if stats.prior[k] > 0.0 {
                stats.prior[k].ln() + stats.z[k].log_density(z)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w = [0.0; 3];
    for k in 0..3 {
        w[k] = (logs[k] - max).exp();
    }
    let total: f64 = w.iter().sum();
    w.map(|v| v / total)
}
