//! Per-author Kalman tracking of projected statement vectors.
//!
//! The state is `[x1, x1', x2, x2']` (position and velocity along each of two
//! projected axes, velocity in units per year). Each quote is a measurement of
//! the position whose noise covariance depends on where the quote lands, via
//! moment-matched reduction of the class-conditional mixture.

mod region;
mod stats;

use chrono::NaiveDate;
use nalgebra::{Matrix2, Matrix2x4, Matrix4, SymmetricEigen, Vector2, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Quote;
use crate::reduce::{Projection, ReduceError};
use crate::svm::SvmError;

pub use region::{alert, fit_region_classifier, Alert, RegionClassifier};
pub use stats::{fit_class_stats, measurement_noise, ClassGaussian, ClassStats};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackerError {
    #[error("author {0} has no author_type")]
    MissingAuthorType(String),
    #[error("quote {0} has no statement label")]
    MissingLabel(String),
    #[error("{grouping} group {class} has {count} samples; need at least 2")]
    GroupTooSmall {
        grouping: &'static str,
        class: String,
        count: usize,
    },
    #[error("time step {0} is negative")]
    NegativeTimeStep(f64),
    #[error("innovation covariance is not invertible")]
    SingularInnovation,
    #[error("invalid tracker configuration: {0}")]
    InvalidConfig(String),
    #[error("no quotes to track")]
    EmptyTrack,
    #[error("quotes are not in date order at position {0}")]
    Unsorted(usize),
    #[error("{0} projected points for {1} quotes")]
    LengthMismatch(usize, usize),
    #[error("projection must have 2 output dimensions, has {0}")]
    ProjectionDim(usize),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Svm(#[from] SvmError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackState {
    pub x: Vector4<f64>,
    pub p: Matrix4<f64>,
    pub date: NaiveDate,
}

impl TrackState {
    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x[0], self.x[2])
    }

    pub fn position_cov(&self) -> Matrix2<f64> {
        h() * self.p * h().transpose()
    }

    /// Symmetric within `1e-9` and no eigenvalue below `-1e-9` (relative).
    pub fn is_valid(&self) -> bool {
        let asym = (self.p - self.p.transpose()).abs().max();
        let scale = self.p.abs().max().max(1.0);
        if asym > 1e-9 * scale {
            return false;
        }
        let sym = (self.p + self.p.transpose()) * 0.5;
        SymmetricEigen::new(sym).eigenvalues.min() >= -1e-9 * scale
    }
}

/// Nearly-constant-velocity dynamics, independent per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionModel {
    pub sigma2: f64,
}

impl MotionModel {
    pub fn f(&self, dt: f64) -> Matrix4<f64> {
        let mut f = Matrix4::identity();
        f[(0, 1)] = dt;
        f[(2, 3)] = dt;
        f
    }

    pub fn q(&self, dt: f64) -> Matrix4<f64> {
        let (a, b, c) = (dt.powi(3) / 3.0, dt.powi(2) / 2.0, dt);
        let mut q = Matrix4::zeros();
        for o in [0, 2] {
            q[(o, o)] = a;
            q[(o, o + 1)] = b;
            q[(o + 1, o)] = b;
            q[(o + 1, o + 1)] = c;
        }
        q * self.sigma2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub sigma2: f64,
    pub position_var: f64,
    pub velocity_var: f64,
    pub threshold: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            sigma2: 0.1,
            position_var: 16.0,
            velocity_var: 0.09,
            threshold: 0.5,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), TrackerError> {
        let bad = |m: &str| Err(TrackerError::InvalidConfig(m.into()));
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return bad("sigma2 must be finite and non-negative");
        }
        if !(self.position_var > 0.0 && self.velocity_var > 0.0)
            || !self.position_var.is_finite()
            || !self.velocity_var.is_finite()
        {
            return bad("prior variances must be positive");
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad("threshold must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn model(&self) -> MotionModel {
        MotionModel { sigma2: self.sigma2 }
    }

    pub fn initial_state(&self, date: NaiveDate) -> TrackState {
        TrackState {
            x: Vector4::zeros(),
            p: Matrix4::from_diagonal(&Vector4::new(
                self.position_var,
                self.velocity_var,
                self.position_var,
                self.velocity_var,
            )),
            date,
        }
    }
}

fn h() -> Matrix2x4<f64> {
    Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0)
}

fn symmetrize(p: Matrix4<f64>) -> Matrix4<f64> {
    (p + p.transpose()) * 0.5
}

/// Gap between two dates in years of 365.25 days.
pub fn years_between(from: NaiveDate, to: NaiveDate) -> f64 {
    (to - from).num_days() as f64 / 365.25
}

/// Propagates the state `dt` years forward; the date is left untouched.
pub fn predict(state: &TrackState, dt: f64, model: &MotionModel) -> Result<TrackState, TrackerError> {
    if dt < 0.0 || dt.is_nan() {
        return Err(TrackerError::NegativeTimeStep(dt));
    }
    let f = model.f(dt);
    Ok(TrackState {
        x: f * state.x,
        p: symmetrize(f * state.p * f.transpose() + model.q(dt)),
        date: state.date,
    })
}

/// Kalman measurement update with the Joseph-form covariance.
pub fn update(state: &TrackState, z: &Vector2<f64>, r: &Matrix2<f64>) -> Result<TrackState, TrackerError> {
    let h = h();
    let s = h * state.p * h.transpose() + r;
    let s_inv = s
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(TrackerError::SingularInnovation)?;
    let k = state.p * h.transpose() * s_inv;
    let i_kh = Matrix4::identity() - k * h;
    Ok(TrackState {
        x: state.x + k * (z - h * state.x),
        p: symmetrize(i_kh * state.p * i_kh.transpose() + k * r * k.transpose()),
        date: state.date,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub id: String,
    pub state: TrackState,
    pub z: Vector2<f64>,
    pub r: Matrix2<f64>,
}

/// Filters a dated measurement sequence starting from the configured prior
/// at the first date.
pub fn track(
    measurements: &[(String, NaiveDate, Vector2<f64>)],
    stats: &ClassStats,
    cfg: &TrackerConfig,
) -> Result<Vec<TrackPoint>, TrackerError> {
    cfg.validate()?;
    let Some((_, first, _)) = measurements.first() else {
        return Err(TrackerError::EmptyTrack);
    };
    let model = cfg.model();
    let mut state = cfg.initial_state(*first);
    let mut out = Vec::with_capacity(measurements.len());
    for (i, (id, date, z)) in measurements.iter().enumerate() {
        if *date < state.date {
            return Err(TrackerError::Unsorted(i));
        }
        state = predict(&state, years_between(state.date, *date), &model)?;
        state.date = *date;
        let r = measurement_noise(z, stats);
        state = update(&state, z, &r)?;
        out.push(TrackPoint {
            id: id.clone(),
            state: state.clone(),
            z: *z,
            r,
        });
    }
    Ok(out)
}

/// Projects one author's quotes (date order, ties by id) and filters them.
pub fn track_author(
    quotes: &[&Quote],
    vectors: &[Vec<f64>],
    projection: &Projection,
    stats: &ClassStats,
    cfg: &TrackerConfig,
) -> Result<Vec<TrackPoint>, TrackerError> {
    if quotes.len() != vectors.len() {
        return Err(TrackerError::LengthMismatch(vectors.len(), quotes.len()));
    }
    if projection.output_dim() != 2 {
        return Err(TrackerError::ProjectionDim(projection.output_dim()));
    }
    for (i, w) in quotes.windows(2).enumerate() {
        if (w[0].date, &w[0].id) > (w[1].date, &w[1].id) {
            return Err(TrackerError::Unsorted(i + 1));
        }
    }
    let measurements = quotes
        .iter()
        .zip(vectors)
        .map(|(q, v)| {
            let y = projection.project(v)?;
            Ok((q.id.clone(), q.date, Vector2::new(y[0], y[1])))
        })
        .collect::<Result<Vec<_>, TrackerError>>()?;
    track(&measurements, stats, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn date(days: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2000, 1, 1).unwrap() + chrono::Duration::days(days)
    }

    fn state(x: [f64; 4], p: Matrix4<f64>) -> TrackState {
        TrackState {
            x: Vector4::from(x),
            p,
            date: date(0),
        }
    }

    #[test]
    fn q_block_for_unit_step() {
        let q = MotionModel { sigma2: 0.1 }.q(1.0);
        let want = [[1.0 / 30.0, 1.0 / 20.0], [1.0 / 20.0, 1.0 / 10.0]];
        for o in [0, 2] {
            for i in 0..2 {
                for j in 0..2 {
                    assert!((q[(o + i, o + j)] - want[i][j]).abs() < 1e-12);
                }
            }
        }
        assert_eq!(q[(0, 2)], 0.0);
        assert_eq!(q[(1, 3)], 0.0);
    }

    #[test]
    fn zero_step_is_identity() {
        let m = MotionModel { sigma2: 0.1 };
        assert_eq!(m.f(0.0), Matrix4::identity());
        assert_eq!(m.q(0.0), Matrix4::zeros());
        let s = TrackerConfig::default().initial_state(date(0));
        assert_eq!(predict(&s, 0.0, &m).unwrap(), s);
    }

    #[test]
    fn constant_velocity_prediction() {
        let s = state([0.0, 1.0, 0.0, -1.0], Matrix4::identity());
        let p = predict(&s, 2.0, &MotionModel { sigma2: 0.1 }).unwrap();
        assert_eq!(p.x, Vector4::new(2.0, 1.0, -2.0, -1.0));
        assert_eq!(
            predict(&s, -0.1, &MotionModel { sigma2: 0.1 }),
            Err(TrackerError::NegativeTimeStep(-0.1))
        );
    }

    #[test]
    fn scalar_update() {
        let s = state([0.0; 4], Matrix4::identity());
        let u = update(&s, &Vector2::new(2.0, 2.0), &Matrix2::identity()).unwrap();
        assert!((u.x[0] - 1.0).abs() < 1e-12 && (u.x[2] - 1.0).abs() < 1e-12);
        assert!((u.p[(0, 0)] - 0.5).abs() < 1e-12 && (u.p[(2, 2)] - 0.5).abs() < 1e-12);
        // velocity uncorrelated with position, so it is untouched
        assert_eq!(u.x[1], 0.0);
        assert_eq!(u.p[(1, 1)], 1.0);
    }

    #[test]
    fn uninformative_measurement() {
        let s = TrackerConfig::default().initial_state(date(0));
        let u = update(&s, &Vector2::new(50.0, -50.0), &(Matrix2::identity() * 1e12)).unwrap();
        assert!((u.x - s.x).abs().max() < 1e-6);
        assert!((u.p - s.p).abs().max() < 1e-6);
    }

    #[test]
    fn dominant_measurement() {
        let mut p = Matrix4::identity();
        p[(0, 0)] = 1e6;
        p[(2, 2)] = 1e6;
        let u = update(&state([0.0; 4], p), &Vector2::new(3.0, -7.0), &(Matrix2::identity() * 1e-6)).unwrap();
        assert!((u.position() - Vector2::new(3.0, -7.0)).abs().max() < 1e-3);
    }

    #[test]
    fn singular_innovation() {
        let s = state([0.0; 4], Matrix4::zeros());
        assert_eq!(
            update(&s, &Vector2::zeros(), &Matrix2::zeros()),
            Err(TrackerError::SingularInnovation)
        );
    }

    #[test]
    fn config_validation() {
        assert!(TrackerConfig::default().validate().is_ok());
        for cfg in [
            TrackerConfig { threshold: 1.0, ..Default::default() },
            TrackerConfig { threshold: 0.0, ..Default::default() },
            TrackerConfig { position_var: 0.0, ..Default::default() },
            TrackerConfig { sigma2: -1.0, ..Default::default() },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn covariance_stays_valid_over_random_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = MotionModel { sigma2: 0.1 };
        let mut s = TrackerConfig::default().initial_state(date(0));
        for _ in 0..20_000 {
            if rng.random_bool(0.5) {
                s = predict(&s, rng.random_range(0.0..3.0), &model).unwrap();
            } else {
                let a: f64 = rng.random_range(0.01..5.0);
                let c: f64 = rng.random_range(0.01..5.0);
                let b = rng.random_range(-0.9..0.9) * (a * c).sqrt();
                let r = Matrix2::new(a, b, b, c);
                let z = Vector2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
                s = update(&s, &z, &r).unwrap();
            }
            assert!(s.is_valid());
        }
    }

    proptest! {
        #[test]
        fn update_never_increases_position_variance(
            pv in 0.01f64..100.0, vv in 0.01f64..10.0, dt in 0.0f64..5.0,
            a in 0.01f64..10.0, c in 0.01f64..10.0, rho in -0.95f64..0.95,
            z1 in -10.0f64..10.0, z2 in -10.0f64..10.0,
        ) {
            let cfg = TrackerConfig { position_var: pv, velocity_var: vv, ..Default::default() };
            let s = predict(&cfg.initial_state(date(0)), dt, &cfg.model()).unwrap();
            let b = rho * (a * c).sqrt();
            let u = update(&s, &Vector2::new(z1, z2), &Matrix2::new(a, b, b, c)).unwrap();
            prop_assert!(u.p[(0, 0)] <= s.p[(0, 0)] + 1e-12);
            prop_assert!(u.p[(2, 2)] <= s.p[(2, 2)] + 1e-12);
            prop_assert!(u.is_valid());
        }
    }

    #[test]
    fn same_day_quotes_use_zero_step() {
        let stats = ClassStats::uniform(Matrix2::identity());
        let m = vec![
            ("a".to_string(), date(0), Vector2::new(1.0, 1.0)),
            ("b".to_string(), date(0), Vector2::new(1.0, 1.0)),
        ];
        let cfg = TrackerConfig::default();
        let t = track(&m, &stats, &cfg).unwrap();
        let s0 = cfg.initial_state(date(0));
        let u1 = update(&s0, &m[0].2, &Matrix2::identity()).unwrap();
        let u2 = update(&u1, &m[1].2, &Matrix2::identity()).unwrap();
        assert!((t[1].state.p - u2.p).abs().max() < 1e-12);
        assert!((t[1].state.x - u2.x).abs().max() < 1e-12);
    }

    #[test]
    fn constant_measurements_converge_monotonically() {
        let stats = ClassStats::uniform(Matrix2::identity() * 0.5);
        let cfg = TrackerConfig { sigma2: 0.0, ..Default::default() };
        let target = Vector2::new(2.0, -1.0);
        let m: Vec<_> = (0..30).map(|i| (format!("q{i}"), date(0), target)).collect();
        let t = track(&m, &stats, &cfg).unwrap();
        let mut prev_err = target.norm();
        let mut prev_var = f64::INFINITY;
        for p in &t {
            let err = (p.state.position() - target).norm();
            assert!(err <= prev_err + 1e-12);
            assert!(p.state.p[(0, 0)] <= prev_var + 1e-12);
            prev_err = err;
            prev_var = p.state.p[(0, 0)];
        }
        assert!(prev_err < 0.05);
    }

    #[test]
    fn empty_and_unsorted_inputs() {
        let stats = ClassStats::uniform(Matrix2::identity());
        let cfg = TrackerConfig::default();
        assert_eq!(track(&[], &stats, &cfg), Err(TrackerError::EmptyTrack));
        let m = vec![
            ("a".to_string(), date(5), Vector2::zeros()),
            ("b".to_string(), date(1), Vector2::zeros()),
        ];
        assert_eq!(track(&m, &stats, &cfg), Err(TrackerError::Unsorted(1)));
    }
}
