use std::collections::VecDeque;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::{check_rows, Kernel, Platt, SvmError};

const TAU: f64 = 1e-12;
const CACHE_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryParams {
    pub c: f64,
    pub kernel: Kernel,
    /// Box-constraint multipliers for the (negative, positive) class.
    pub class_weights: [f64; 2],
    /// Stop once the maximal KKT violation drops below this.
    pub tolerance: f64,
    /// Cap on pair updates.
    pub max_iter: usize,
}

impl BinaryParams {
    pub fn new(c: f64, kernel: Kernel) -> Self {
        BinaryParams {
            c,
            kernel,
            class_weights: [1.0, 1.0],
            tolerance: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

/// Raw solver output over all training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Per-sample box bound `C * weight(class)`.
    pub upper: Vec<f64>,
    pub bias: f64,
    /// Dual objective `sum(alpha) - 1/2 alpha^T Q alpha` at the solution.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// A trained binary classifier `f(x) = sum_i coef_i K(sv_i, x) + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Platt>,
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64, SvmError> {
        if x.len() != self.dim {
            return Err(SvmError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, &c)| c * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias)
    }

    /// Calibrated probability of the positive class, if calibrated.
    pub fn probability(&self, x: &[f64]) -> Result<Option<f64>, SvmError> {
        let s = self.decision(x)?;
        Ok(self.calibration.map(|p| p.probability(s)))
    }
}

/// Kernel rows `Q_i[j] = y_i y_j K(x_i, x_j)`, computed lazily with FIFO eviction.
struct QMatrix<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    kernel: Kernel,
    diag: Vec<f64>,
    rows: Vec<Option<Rc<Vec<f64>>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> QMatrix<'a> {
    fn new(x: &'a [Vec<f64>], y: &'a [f64], kernel: Kernel) -> Self {
        let n = x.len();
        let diag = x.iter().map(|r| kernel.eval(r, r)).collect();
        QMatrix {
            x,
            y,
            kernel,
            diag,
            rows: vec![None; n],
            order: VecDeque::new(),
            capacity: (CACHE_BYTES / (8 * n.max(1))).max(2),
        }
    }

    fn row(&mut self, i: usize) -> Rc<Vec<f64>> {
        if let Some(r) = &self.rows[i] {
            return Rc::clone(r);
        }
        if self.order.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.rows[old] = None;
            }
        }
        let xi = &self.x[i];
        let yi = self.y[i];
        let r: Vec<f64> = self
            .x
            .iter()
            .zip(self.y)
            .map(|(xj, &yj)| yi * yj * self.kernel.eval(xi, xj))
            .collect();
        let r = Rc::new(r);
        self.rows[i] = Some(Rc::clone(&r));
        self.order.push_back(i);
        r
    }
}

fn validate(x: &[Vec<f64>], y: &[f64], params: &BinaryParams) -> Result<usize, SvmError> {
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(SvmError::InvalidParameter(format!("C must be positive, got {}", params.c)));
    }
    if params.class_weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(SvmError::InvalidParameter("class weights must be positive".into()));
    }
    params.kernel.validate()?;
    if x.len() != y.len() {
        return Err(SvmError::InvalidParameter(format!("{} rows but {} labels", x.len(), y.len())));
    }
    if let Some(v) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(SvmError::InvalidParameter(format!("labels must be -1 or +1, got {v}")));
    }
    let d = check_rows(x)?;
    let has_pos = y.iter().any(|&v| v > 0.0);
    let has_neg = y.iter().any(|&v| v < 0.0);
    if !(has_pos && has_neg) {
        return Err(SvmError::SingleClass);
    }
    Ok(d)
}

/// Solves the soft-margin dual with maximal-violating-pair SMO.
pub fn solve_dual(x: &[Vec<f64>], y: &[f64], params: &BinaryParams) -> Result<DualSolution, SvmError> {
    validate(x, y, params)?;
    let n = x.len();
    let upper: Vec<f64> = y
        .iter()
        .map(|&yi| params.c * params.class_weights[usize::from(yi > 0.0)])
        .collect();
    let mut q = QMatrix::new(x, y, params.kernel);
    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a^T Q a - e^T a
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iter {
        let Some((i, j)) = select_pair(y, &alpha, &upper, &grad, params.tolerance) else {
            converged = true;
            break;
        };
        iterations += 1;
        let qi = q.row(i);
        let qj = q.row(j);
        let (ci, cj) = (upper[i], upper[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);

        if y[i] != y[j] {
            let quad = (q.diag[i] + q.diag[j] + 2.0 * qi[j]).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let quad = (q.diag[i] + q.diag[j] - 2.0 * qi[j]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for k in 0..n {
            grad[k] += qi[k] * di + qj[k] * dj;
        }
    }

    let bias = -rho(y, &alpha, &upper, &grad);
    let objective = alpha.iter().zip(&grad).map(|(a, g)| 0.5 * a * (1.0 - g)).sum();
    Ok(DualSolution {
        alpha,
        upper,
        bias,
        objective,
        iterations,
        converged,
    })
}

fn in_up(yi: f64, a: f64, c: f64) -> bool {
    (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0)
}

fn in_low(yi: f64, a: f64, c: f64) -> bool {
    (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c)
}

/// Maximal violating pair, or `None` once the violation is within `eps`.
fn select_pair(y: &[f64], alpha: &[f64], upper: &[f64], grad: &[f64], eps: f64) -> Option<(usize, usize)> {
    let mut gmax = f64::NEG_INFINITY;
    let mut gmin = f64::INFINITY;
    let (mut i, mut j) = (usize::MAX, usize::MAX);
    for t in 0..y.len() {
        let v = -y[t] * grad[t];
        if in_up(y[t], alpha[t], upper[t]) && v > gmax {
            gmax = v;
            i = t;
        }
        if in_low(y[t], alpha[t], upper[t]) && v < gmin {
            gmin = v;
            j = t;
        }
    }
    if i == usize::MAX || j == usize::MAX || gmax - gmin < eps {
        None
    } else {
        Some((i, j))
    }
}

fn rho(y: &[f64], alpha: &[f64], upper: &[f64], grad: &[f64]) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..y.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= upper[t] {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Trains a binary C-SVC on labels in {-1, +1}.
pub fn train_binary(x: &[Vec<f64>], y: &[f64], params: &BinaryParams) -> Result<SvmModel, SvmError> {
    let sol = solve_dual(x, y, params)?;
    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for ((row, &a), &yi) in x.iter().zip(&sol.alpha).zip(y) {
        if a > 0.0 {
            support_vectors.push(row.clone());
            dual_coef.push(a * yi);
        }
    }
    Ok(SvmModel {
        kernel: params.kernel,
        support_vectors,
        dual_coef,
        bias: sol.bias,
        dim: x[0].len(),
        calibration: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kkt_violation(x: &[Vec<f64>], y: &[f64], kernel: Kernel, sol: &DualSolution) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..x.len() {
            let f: f64 = (0..x.len())
                .map(|j| sol.alpha[j] * y[j] * kernel.eval(&x[j], &x[i]))
                .sum::<f64>()
                + sol.bias;
            let m = y[i] * f;
            let v = if sol.alpha[i] <= 0.0 {
                (1.0 - m).max(0.0)
            } else if sol.alpha[i] >= sol.upper[i] {
                (m - 1.0).max(0.0)
            } else {
                (m - 1.0).abs()
            };
            worst = worst.max(v);
        }
        worst
    }

    #[test]
    fn two_point_max_margin() {
        let x = vec![vec![-1.0, 0.0], vec![1.0, 0.0]];
        let y = vec![-1.0, 1.0];
        let m = train_binary(&x, &y, &BinaryParams::new(10.0, Kernel::Linear)).unwrap();
        assert!(m.decision(&[0.0, 0.0]).unwrap().abs() < 1e-6);
        assert!((m.decision(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-3);
        assert!((m.decision(&[-1.0, 0.0]).unwrap() + 1.0).abs() < 1e-3);
        // f(x) = x1: w = (1, 0)
        assert!((m.decision(&[2.5, 7.0]).unwrap() - 2.5).abs() < 1e-6);
        assert_eq!(
            m.decision(&[1.0]),
            Err(SvmError::DimensionMismatch { expected: 2, found: 1 })
        );
    }

    #[test]
    fn identical_point_with_both_labels() {
        let x = vec![vec![0.3, -0.7], vec![0.3, -0.7]];
        let y = vec![1.0, -1.0];
        for kernel in [Kernel::Linear, Kernel::Rbf { gamma: 0.5 }] {
            let m = train_binary(&x, &y, &BinaryParams::new(1.0, kernel)).unwrap();
            assert!(m.decision(&x[0]).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn xor_with_rbf() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let y = vec![-1.0, -1.0, 1.0, 1.0];
        let m = train_binary(&x, &y, &BinaryParams::new(10.0, Kernel::Rbf { gamma: 1.0 })).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!(m.decision(xi).unwrap() * yi > 0.0);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let x = vec![vec![0.0], vec![1.0]];
        assert_eq!(
            train_binary(&x, &[1.0, 1.0], &BinaryParams::new(1.0, Kernel::Linear)),
            Err(SvmError::SingleClass)
        );
        assert_eq!(
            train_binary(&[vec![f64::NAN], vec![1.0]], &[1.0, -1.0], &BinaryParams::new(1.0, Kernel::Linear)),
            Err(SvmError::NonFiniteFeature)
        );
        assert!(train_binary(&x, &[1.0, -1.0], &BinaryParams::new(0.0, Kernel::Linear)).is_err());
        assert!(train_binary(&x, &[1.0, -1.0], &BinaryParams::new(1.0, Kernel::Rbf { gamma: 0.0 })).is_err());
        assert!(train_binary(&x, &[1.0, 0.0], &BinaryParams::new(1.0, Kernel::Linear)).is_err());
    }

    #[test]
    fn class_weights_scale_box() {
        let x = vec![vec![0.0], vec![0.1], vec![1.0]];
        let y = vec![-1.0, 1.0, 1.0];
        let mut p = BinaryParams::new(2.0, Kernel::Linear);
        p.class_weights = [3.0, 0.5];
        let sol = solve_dual(&x, &y, &p).unwrap();
        assert_eq!(sol.upper, [6.0, 1.0, 1.0]);
        for (a, c) in sol.alpha.iter().zip(&sol.upper) {
            assert!(*a >= 0.0 && a <= c);
        }
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let y: Vec<f64> = (0..40).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let mut p = BinaryParams::new(100.0, Kernel::Rbf { gamma: 5.0 });
        p.max_iter = 3;
        let sol = solve_dual(&x, &y, &p).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 3);
    }

    fn random_problem(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = (0..n).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
        let mut y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        y.shuffle(&mut rng);
        (x, y)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn solutions_are_feasible_and_satisfy_kkt(seed in 0u64..10_000, n in 2usize..30, c in 0.05f64..20.0, rbf in any::<bool>()) {
            let (x, y) = random_problem(seed, n);
            let kernel = if rbf { Kernel::Rbf { gamma: 0.7 } } else { Kernel::Linear };
            let sol = solve_dual(&x, &y, &BinaryParams::new(c, kernel)).unwrap();
            prop_assert!(sol.converged);
            for (a, u) in sol.alpha.iter().zip(&sol.upper) {
                prop_assert!(*a >= 0.0 && *a <= *u);
            }
            let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
            prop_assert!(balance.abs() <= 1e-6);
            prop_assert!(kkt_violation(&x, &y, kernel, &sol) <= 1e-3 + 1e-9);
        }

        #[test]
        fn decision_invariant_under_row_permutation(seed in 0u64..10_000, n in 4usize..20) {
            let (x, y) = random_problem(seed, n);
            let params = BinaryParams::new(1.0, Kernel::Rbf { gamma: 0.5 });
            let mut p = params.clone();
            p.tolerance = 1e-10;
            let m = train_binary(&x, &y, &p).unwrap();
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed + 1));
            let xs: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
            let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
            let ms = train_binary(&xs, &ys, &p).unwrap();
            for probe in &x {
                prop_assert!((m.decision(probe).unwrap() - ms.decision(probe).unwrap()).abs() < 1e-8);
            }
        }

        #[test]
        fn constant_zero_feature_leaves_rbf_scores(seed in 0u64..10_000, n in 3usize..15) {
            let (x, y) = random_problem(seed, n);
            let params = BinaryParams::new(2.0, Kernel::Rbf { gamma: 0.3 });
            let m = train_binary(&x, &y, &params).unwrap();
            let padded: Vec<Vec<f64>> = x.iter().map(|r| { let mut r = r.clone(); r.push(0.0); r }).collect();
            let mp = train_binary(&padded, &y, &params).unwrap();
            for (r, rp) in x.iter().zip(&padded) {
                prop_assert_eq!(m.decision(r).unwrap(), mp.decision(rp).unwrap());
            }
        }
    }
}
