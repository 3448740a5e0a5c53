//! Synthetic corpora drawn from the person-type / statement-type model.

use chrono::{Duration, NaiveDate};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Label, Quote};
use crate::featurize::EmbeddingMatrix;

/// Statement-type probabilities given person type, indexed `[s][k]`.
pub const DEFAULT_STATEMENT_GIVEN_PERSON: [[f64; 3]; 3] = [
    [0.993, 0.584, 0.220],
    [0.007, 0.409, 0.532],
    [0.0, 0.007, 0.248],
];

pub const DEFAULT_PERSON_PRIOR: [f64; 3] = [0.813, 0.083, 0.104];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: Vec<f64>,
    /// Row-major, `mean.len()` rows.
    pub cov: Vec<Vec<f64>>,
}

impl Gaussian {
    pub fn isotropic(mean: Vec<f64>, variance: f64) -> Self {
        let d = mean.len();
        let cov = (0..d)
            .map(|i| (0..d).map(|j| if i == j { variance } else { 0.0 }).collect())
            .collect();
        Gaussian { mean, cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn cov_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.cov[i][j])
    }

    /// Lower Cholesky factor, or `None` if not symmetric positive definite.
    pub fn cholesky_factor(&self) -> Option<DMatrix<f64>> {
        let d = self.dim();
        if self.cov.len() != d || self.cov.iter().any(|r| r.len() != d) {
            return None;
        }
        let m = self.cov_matrix();
        if (&m - m.transpose()).amax() > 1e-9 {
            return None;
        }
        m.cholesky().map(|c| c.l())
    }

    /// Draws one sample using a precomputed Cholesky factor.
    pub fn sample_with<R: Rng>(&self, chol: &DMatrix<f64>, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = chol * z;
        self.mean.iter().zip(x.iter()).map(|(m, v)| m + v).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    /// p(s|k), indexed `[s][k]`; each column sums to one.
    pub statement_given_person: [[f64; 3]; 3],
    pub person_prior: [f64; 3],
    /// Statement-type Gaussians in (c, e, t) order.
    pub classes: [Gaussian; 3],
    pub persons_per_type: [usize; 3],
    pub quotes_per_person: usize,
    pub seed: u64,
    pub start_date: NaiveDate,
    pub spacing_days: u32,
    pub words_per_quote: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig::separated(16, 5.0, [10, 10, 10], 20, 0)
    }
}

impl SyntheticConfig {
    /// Unit-variance isotropic classes whose means are pairwise `separation` apart.
    pub fn separated(
        dim: usize,
        separation: f64,
        persons_per_type: [usize; 3],
        quotes_per_person: usize,
        seed: u64,
    ) -> Self {
        assert!(dim >= 3, "three orthogonal class means need dim >= 3");
        let offset = separation / std::f64::consts::SQRT_2;
        let classes = [0, 1, 2].map(|k| {
            let mut mean = vec![0.0; dim];
            mean[k] = offset;
            Gaussian::isotropic(mean, 1.0)
        });
        SyntheticConfig {
            statement_given_person: DEFAULT_STATEMENT_GIVEN_PERSON,
            person_prior: DEFAULT_PERSON_PRIOR,
            classes,
            persons_per_type,
            quotes_per_person,
            seed,
            start_date: NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date"),
            spacing_days: 30,
            words_per_quote: 10,
        }
    }

    /// Each person only makes statements of their own type.
    pub fn with_identity_statements(mut self) -> Self {
        self.statement_given_person = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        self
    }

    pub fn dim(&self) -> usize {
        self.classes[0].dim()
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: String| Err(CorpusError::InvalidConfig(m));
        for k in 0..3 {
            let col: f64 = (0..3).map(|s| self.statement_given_person[s][k]).sum();
            if (col - 1.0).abs() > 1e-9 {
                return bad(format!("column {k} of p(s|k) sums to {col}"));
            }
        }
        if self.statement_given_person.iter().flatten().any(|&p| !(0.0..=1.0).contains(&p)) {
            return bad("p(s|k) entries must lie in [0, 1]".into());
        }
        let prior: f64 = self.person_prior.iter().sum();
        if (prior - 1.0).abs() > 1e-9 || self.person_prior.iter().any(|&p| p < 0.0) {
            return bad(format!("p(k) sums to {prior}"));
        }
        let d = self.dim();
        if d == 0 {
            return bad("class dimension must be positive".into());
        }
        for (k, g) in self.classes.iter().enumerate() {
            if g.dim() != d {
                return bad(format!("class {k} has dimension {} instead of {d}", g.dim()));
            }
            if g.mean.iter().any(|v| !v.is_finite()) {
                return bad(format!("class {k} mean is not finite"));
            }
            if g.cholesky_factor().is_none() {
                return bad(format!("class {k} covariance is not symmetric positive definite"));
            }
        }
        if self.words_per_quote == 0 {
            return bad("words_per_quote must be positive".into());
        }
        Ok(())
    }
}

const SHARED_WORDS: [&str; 6] = ["people", "today", "must", "our", "world", "time"];
const STOP_WORDS: [&str; 4] = ["the", "of", "and", "is"];
const CLASS_WORDS: [[&str; 10]; 3] = [
    [
        "economy", "schools", "health", "jobs", "budget", "community", "vote", "reform", "trade",
        "families",
    ],
    [
        "enemy", "betrayal", "purity", "resist", "uprising", "invaders", "corrupt", "awaken",
        "traitors", "elite",
    ],
    [
        "attack", "strike", "martyr", "weapons", "destroy", "operation", "fighters", "target",
        "revenge", "blood",
    ],
];

/// Draws a labelled corpus and matching embeddings.
///
/// Persons are generated type by type; for a person of type `k` each quote's
/// statement type `s` is drawn from column `k` of p(s|k) and its vector from
/// the class-`s` Gaussian.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<(Corpus, EmbeddingMatrix), CorpusError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let factors: Vec<DMatrix<f64>> = cfg
        .classes
        .iter()
        .map(|g| g.cholesky_factor().expect("validated"))
        .collect();

    let mut quotes = Vec::new();
    let mut vectors = Vec::new();
    for person_type in Label::ALL {
        let k = person_type.index();
        for p in 0..cfg.persons_per_type[k] {
            let author = format!("{}_person_{p:03}", person_type.name());
            for j in 0..cfg.quotes_per_person {
                let s = sample_statement(&cfg.statement_given_person, k, &mut rng);
                let vector = cfg.classes[s.index()].sample_with(&factors[s.index()], &mut rng);
                let id = format!("q{:06}", quotes.len());
                let text = synth_text(s, cfg.words_per_quote, &mut rng);
                let date = cfg.start_date + Duration::days(i64::from(cfg.spacing_days) * j as i64);
                vectors.push((id.clone(), vector));
                quotes.push(Quote {
                    id,
                    author: author.clone(),
                    author_type: Some(person_type),
                    text,
                    date,
                    label: Some(s),
                    source: Some("synthetic".into()),
                });
            }
        }
    }
    let corpus = Corpus::new(quotes)?;
    let embeddings =
        EmbeddingMatrix::from_pairs(vectors).map_err(|e| CorpusError::InvalidConfig(e.to_string()))?;
    Ok((corpus, embeddings))
}

fn sample_statement<R: Rng>(p: &[[f64; 3]; 3], k: usize, rng: &mut R) -> Label {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (row, label) in p.iter().zip(Label::ALL) {
        acc += row[k];
        if u < acc && row[k] > 0.0 {
            return label;
        }
    }
    // rounding slack lands on the last type with nonzero mass
    (0..3)
        .rev()
        .find(|&s| p[s][k] > 0.0)
        .map(|s| Label::ALL[s])
        .expect("column sums to one")
}

fn synth_text<R: Rng>(label: Label, words: usize, rng: &mut R) -> String {
    let vocab = &CLASS_WORDS[label.index()];
    let tokens: Vec<&str> = (0..words)
        .map(|_| {
            let u: f64 = rng.random();
            if u < 0.7 {
                vocab[rng.random_range(0..vocab.len())]
            } else if u < 0.85 {
                SHARED_WORDS[rng.random_range(0..SHARED_WORDS.len())]
            } else {
                STOP_WORDS[rng.random_range(0..STOP_WORDS.len())]
            }
        })
        .collect();
    tokens.join(" ")
}
