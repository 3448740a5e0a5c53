use serde::{Deserialize, Serialize};

use super::SvmError;

/// Sigmoid map `p = 1 / (1 + exp(a * s + b))` from decision score to
/// positive-class probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Platt {
    pub a: f64,
    pub b: f64,
}

impl Platt {
    pub fn probability(&self, score: f64) -> f64 {
        let f = self.a * score + self.b;
        // written so exp never overflows
        if f >= 0.0 {
            let e = (-f).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + f.exp())
        }
    }
}

/// Fits Platt scaling by regularised maximum likelihood (Newton's method
/// with backtracking, targets smoothed by the class priors).
pub fn calibrate(scores: &[f64], positive: &[bool]) -> Result<Platt, SvmError> {
    if scores.len() != positive.len() {
        return Err(SvmError::InvalidParameter(format!(
            "{} scores but {} labels",
            scores.len(),
            positive.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(SvmError::NonFiniteFeature);
    }
    let n_pos = positive.iter().filter(|&&p| p).count() as f64;
    let n_neg = positive.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(SvmError::SingleClass);
    }
    let (lo, hi) = scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &s| (l.min(s), h.max(s)));
    if hi - lo <= 0.0 {
        return Err(SvmError::DegenerateCalibration);
    }

    let hi_target = (n_pos + 1.0) / (n_pos + 2.0);
    let lo_target = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = positive.iter().map(|&p| if p { hi_target } else { lo_target }).collect();

    const MAX_ITER: usize = 100;
    const MIN_STEP: f64 = 1e-10;
    const SIGMA: f64 = 1e-12;
    const EPS: f64 = 1e-5;

    let objective = |a: f64, b: f64| -> f64 {
        scores
            .iter()
            .zip(&targets)
            .map(|(&s, &t)| {
                let f = s * a + b;
                if f >= 0.0 {
                    t * f + (-f).exp().ln_1p()
                } else {
                    (t - 1.0) * f + f.exp().ln_1p()
                }
            })
            .sum()
    };

    let mut a = 0.0;
    let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
    let mut fval = objective(a, b);
    for _ in 0..MAX_ITER {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (SIGMA, SIGMA, 0.0, 0.0, 0.0);
        for (&s, &t) in scores.iter().zip(&targets) {
            let f = s * a + b;
            let (p, q) = if f >= 0.0 {
                let e = (-f).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = f.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += s * s * d2;
            h22 += d2;
            h21 += s * d2;
            let d1 = t - p;
            g1 += s * d1;
            g2 += d1;
        }
        if g1.abs() < EPS && g2.abs() < EPS {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < MIN_STEP {
            break;
        }
    }
    Ok(Platt { a, b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_scores_classified_by_half() {
        let scores = [-3.0, -2.0, -1.5, 1.0, 2.0, 4.0];
        let pos = [false, false, false, true, true, true];
        let p = calibrate(&scores, &pos).unwrap();
        assert!(p.a < 0.0);
        for (&s, &y) in scores.iter().zip(&pos) {
            assert_eq!(p.probability(s) > 0.5, y);
        }
    }

    #[test]
    fn constant_scores_rejected() {
        assert_eq!(calibrate(&[0.3; 4], &[true, false, true, false]), Err(SvmError::DegenerateCalibration));
        assert_eq!(calibrate(&[0.3, 0.4], &[true, true]), Err(SvmError::SingleClass));
    }

    #[test]
    fn symmetric_scores_give_half_at_zero() {
        let scores = [-2.0, -0.5, -1.0, 2.0, 0.5, 1.0, 0.3, -0.3];
        let pos = [false, true, false, true, false, true, false, true];
        let p = calibrate(&scores, &pos).unwrap();
        assert!((p.probability(0.0) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn monotone_in_score() {
        let scores: Vec<f64> = (0..20).map(|i| i as f64 / 4.0 - 2.0).collect();
        let pos: Vec<bool> = (0..20).map(|i| i % 3 != 0 && i > 6).collect();
        let p = calibrate(&scores, &pos).unwrap();
        let probs: Vec<f64> = scores.iter().map(|&s| p.probability(s)).collect();
        assert!(probs.windows(2).all(|w| w[1] >= w[0]));
        assert!(Platt { a: -1e6, b: 0.0 }.probability(1e6) <= 1.0);
        assert!(Platt { a: 1e6, b: 0.0 }.probability(1e6) >= 0.0);
    }
}
