//! PCA and LDA linear projections.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReduceError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("all samples share one class")]
    SingleClass,
    #[error("cannot extract {requested} components (at most {max})")]
    InvalidComponents { requested: usize, max: usize },
    #[error("expected dimension {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{0} labels for {1} samples")]
    LabelCount(usize, usize),
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("within-class scatter is not positive definite after regularisation")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionKind {
    Pca,
    Lda,
}

/// A fitted linear map `x -> basis^T (x - mean)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ProjectionDoc", try_from = "ProjectionDoc")]
pub struct Projection {
    pub kind: ProjectionKind,
    pub mean: Vec<f64>,
    /// One length-d vector per output dimension.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// Set when some returned eigenvalue is below 1e-12.
    pub rank_deficient: bool,
}

/// On-disk layout: basis stored row-major as d rows of k entries.
#[derive(Serialize, Deserialize)]
struct ProjectionDoc {
    kind: ProjectionKind,
    mean: Vec<f64>,
    basis: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
}

impl From<Projection> for ProjectionDoc {
    fn from(p: Projection) -> Self {
        let d = p.mean.len();
        let basis = (0..d).map(|i| p.components.iter().map(|c| c[i]).collect()).collect();
        ProjectionDoc {
            kind: p.kind,
            mean: p.mean,
            basis,
            eigenvalues: p.eigenvalues,
        }
    }
}

impl TryFrom<ProjectionDoc> for Projection {
    type Error = String;

    fn try_from(doc: ProjectionDoc) -> Result<Self, String> {
        let d = doc.mean.len();
        let k = doc.eigenvalues.len();
        if doc.basis.len() != d || doc.basis.iter().any(|r| r.len() != k) {
            return Err(format!("basis must be {d} rows of {k} entries"));
        }
        let components = (0..k).map(|j| doc.basis.iter().map(|r| r[j]).collect()).collect();
        Ok(Projection {
            kind: doc.kind,
            rank_deficient: doc.eigenvalues.iter().any(|&e| e < RANK_EPS),
            mean: doc.mean,
            components,
            eigenvalues: doc.eigenvalues,
        })
    }
}

const RANK_EPS: f64 = 1e-12;

impl Projection {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    /// d x k matrix whose columns are the components.
    pub fn basis(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.input_dim(), self.output_dim(), |i, j| self.components[j][i])
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, ReduceError> {
        if x.len() != self.mean.len() {
            return Err(ReduceError::DimensionMismatch {
                expected: self.mean.len(),
                found: x.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(x).zip(&self.mean).map(|((w, v), m)| w * (v - m)).sum())
            .collect())
    }

    pub fn project_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ReduceError> {
        rows.iter().map(|r| self.project(r)).collect()
    }

    /// `mean + basis * y`; the inverse of `project` on the span of an orthonormal basis.
    pub fn reconstruct(&self, y: &[f64]) -> Result<Vec<f64>, ReduceError> {
        if y.len() != self.output_dim() {
            return Err(ReduceError::DimensionMismatch {
                expected: self.output_dim(),
                found: y.len(),
            });
        }
        let mut x = self.mean.clone();
        for (c, &w) in self.components.iter().zip(y) {
            x.iter_mut().zip(c).for_each(|(xi, ci)| *xi += w * ci);
        }
        Ok(x)
    }
}

fn data_matrix(x: &[Vec<f64>]) -> Result<DMatrix<f64>, ReduceError> {
    let n = x.len();
    let d = x.first().map_or(0, Vec::len);
    if let Some(bad) = x.iter().find(|r| r.len() != d) {
        return Err(ReduceError::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ReduceError::NonFinite);
    }
    Ok(DMatrix::from_fn(n, d, |i, j| x[i][j]))
}

fn column_mean(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

/// Flips `v` so that its largest-magnitude entry is positive.
fn fix_sign(v: &mut [f64]) {
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Top-`k` principal components via SVD of the centred data.
pub fn fit_pca(x: &[Vec<f64>], k: usize) -> Result<Projection, ReduceError> {
    let n = x.len();
    if n < 2 {
        return Err(ReduceError::TooFewSamples(n));
    }
    let m = data_matrix(x)?;
    let d = m.ncols();
    let max = (n - 1).min(d);
    if k == 0 || k > max {
        return Err(ReduceError::InvalidComponents { requested: k, max });
    }
    let mean = column_mean(&m);
    let mut centred = m;
    for mut row in centred.row_iter_mut() {
        row -= mean.transpose();
    }
    let svd = SVD::new(centred, false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut components = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let s = svd.singular_values[i];
        let mut c: Vec<f64> = v_t.row(i).iter().copied().collect();
        fix_sign(&mut c);
        components.push(c);
        eigenvalues.push(s * s / (n - 1) as f64);
    }
    Ok(Projection {
        kind: ProjectionKind::Pca,
        rank_deficient: eigenvalues.iter().any(|&e| e < RANK_EPS),
        mean: mean.iter().copied().collect(),
        components,
        eigenvalues,
    })
}

/// Fisher discriminant directions for integer class labels.
///
/// Solves `S_b w = lambda (S_w + ridge) w` with ridge `1e-6 trace(S_w)/d`.
/// Directions are scaled so the pooled within-class covariance of the
/// projected data is the identity.
pub fn fit_lda(x: &[Vec<f64>], labels: &[usize], k: usize) -> Result<Projection, ReduceError> {
    let n = x.len();
    if labels.len() != n {
        return Err(ReduceError::LabelCount(labels.len(), n));
    }
    if n < 2 {
        return Err(ReduceError::TooFewSamples(n));
    }
    let m = data_matrix(x)?;
    let d = m.ncols();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    let classes = groups.len();
    if classes < 2 {
        return Err(ReduceError::SingleClass);
    }
    let max = (classes - 1).min(d);
    if k == 0 || k > max {
        return Err(ReduceError::InvalidComponents { requested: k, max });
    }

    let mean = column_mean(&m);
    let mut within = DMatrix::<f64>::zeros(d, d);
    let mut between = DMatrix::<f64>::zeros(d, d);
    for idx in groups.values() {
        let mut class_mean = DVector::<f64>::zeros(d);
        for &i in idx {
            class_mean += m.row(i).transpose();
        }
        class_mean /= idx.len() as f64;
        for &i in idx {
            let dev = m.row(i).transpose() - &class_mean;
            within.ger(1.0, &dev, &dev, 1.0);
        }
        let off = &class_mean - &mean;
        between.ger(idx.len() as f64, &off, &off, 1.0);
    }
    let dof = n.saturating_sub(classes).max(1) as f64;
    within /= dof;
    between /= dof;
    let trace = within.trace();
    let ridge = if trace > 0.0 { 1e-6 * trace / d as f64 } else { 1e-6 };
    for i in 0..d {
        within[(i, i)] += ridge;
    }
    within = (&within + within.transpose()) * 0.5;

    let chol = within.cholesky().ok_or(ReduceError::Singular)?;
    let l = chol.l();
    // M = L^-1 B L^-T
    let l_inv_b = l.solve_lower_triangular(&between).ok_or(ReduceError::Singular)?;
    let mt = l.solve_lower_triangular(&l_inv_b.transpose()).ok_or(ReduceError::Singular)?;
    let whitened = (&mt + mt.transpose()) * 0.5;
    let eig = SymmetricEigen::new(whitened);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let lt = l.transpose();
    let mut components = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let v = eig.eigenvectors.column(i).into_owned();
        let w = lt.solve_upper_triangular(&v).ok_or(ReduceError::Singular)?;
        let mut c: Vec<f64> = w.iter().copied().collect();
        fix_sign(&mut c);
        components.push(c);
        eigenvalues.push(eig.eigenvalues[i].max(0.0));
    }
    Ok(Projection {
        kind: ProjectionKind::Lda,
        rank_deficient: eigenvalues.iter().any(|&e| e < RANK_EPS),
        mean: mean.iter().copied().collect(),
        components,
        eigenvalues,
    })
}
