//! Test-only reference implementations, written independently of the
//! library code they check.

#![allow(dead_code, clippy::needless_range_loop)]

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
/// eigenvalues in descending order with matching unit eigenvectors.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k][i]).collect()).collect();
    (values, vectors)
}

/// Sample covariance with the n-1 denominator.
pub fn covariance(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len() as f64;
    let d = x[0].len();
    let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| x.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1.0))
                .collect()
        })
        .collect()
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn pair_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !positive[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if positive[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// `Q_ij = y_i y_j K_ij`.
pub fn signed_gram(k: &[Vec<f64>], y: &[f64]) -> Vec<Vec<f64>> {
    (0..y.len()).map(|i| (0..y.len()).map(|j| y[i] * y[j] * k[i][j]).collect()).collect()
}

pub fn dual_objective(q: &[Vec<f64>], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * q[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Dense solve with partial pivoting; `None` when (numerically) singular.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Exact maximum of the SVM dual for small problems: every assignment of
/// each variable to {lower bound, upper bound, free} is tried, the free
/// block solved from the stationarity and equality conditions, and the best
/// feasible point kept.
pub fn exact_dual(q: &[Vec<f64>], y: &[f64], upper: &[f64]) -> (f64, Vec<f64>) {
    let n = y.len();
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let mut alpha: Vec<f64> = (0..n).map(|i| if state[i] == 1 { upper[i] } else { 0.0 }).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        if free.is_empty() {
            let eq: f64 = (0..n).map(|i| y[i] * alpha[i]).sum();
            if eq.abs() > 1e-9 {
                continue;
            }
        } else {
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut b = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (cc, &j) in free.iter().enumerate() {
                    a[r][cc] = q[i][j];
                }
                a[r][m] = y[i];
                b[r] = 1.0 - (0..n).filter(|j| state[*j] == 1).map(|j| q[i][j] * upper[j]).sum::<f64>();
                a[m][r] = y[i];
            }
            b[m] = -(0..n).filter(|j| state[*j] == 1).map(|j| y[j] * upper[j]).sum::<f64>();
            let Some(sol) = solve(a, b) else { continue };
            if free.iter().enumerate().any(|(r, &i)| sol[r] < -1e-12 || sol[r] > upper[i] + 1e-12) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r].clamp(0.0, upper[i]);
            }
        }
        let obj = dual_objective(q, &alpha);
        if obj > best.0 {
            best = (obj, alpha);
        }
    }
    best
}

/// Best dual objective over a lattice of step `upper/steps` for the first
/// n-1 variables, the last one fixed by the equality constraint. The best
/// lattice point is then polished by repeated local searches on lattices ten
/// times finer, so the result approaches the true maximum from below.
pub fn grid_dual(q: &[Vec<f64>], y: &[f64], upper: &[f64], steps: usize) -> f64 {
    let n = y.len();
    let lo = vec![0.0; n - 1];
    let width: Vec<f64> = upper[..n - 1].to_vec();
    let (mut best, mut centre) = lattice_search(q, y, upper, &lo, &width, steps);
    let mut h: Vec<f64> = width.iter().map(|w| w / steps as f64).collect();
    for _ in 0..6 {
        h.iter_mut().for_each(|v| *v /= 10.0);
        let lo: Vec<f64> = centre.iter().zip(&h).map(|(c, s)| c - 20.0 * s).collect();
        let width: Vec<f64> = h.iter().map(|s| 40.0 * s).collect();
        let (b, c) = lattice_search(q, y, upper, &lo, &width, 40);
        if b > best {
            best = b;
            centre = c;
        }
    }
    best
}

fn lattice_search(q: &[Vec<f64>], y: &[f64], upper: &[f64], lo: &[f64], width: &[f64], steps: usize) -> (f64, Vec<f64>) {
    let n = y.len();
    let mut best = (f64::NEG_INFINITY, lo.to_vec());
    let mut idx = vec![0usize; n - 1];
    let mut alpha = vec![0.0; n];
    loop {
        let mut inside = true;
        for i in 0..n - 1 {
            alpha[i] = lo[i] + width[i] * idx[i] as f64 / steps as f64;
            if alpha[i] < -1e-12 || alpha[i] > upper[i] + 1e-12 {
                inside = false;
            }
            alpha[i] = alpha[i].clamp(0.0, upper[i]);
        }
        let partial: f64 = (0..n - 1).map(|i| y[i] * alpha[i]).sum();
        let last = -partial * y[n - 1];
        if inside && (-1e-12..=upper[n - 1] + 1e-12).contains(&last) {
            alpha[n - 1] = last.clamp(0.0, upper[n - 1]);
            let obj = dual_objective(q, &alpha);
            if obj > best.0 {
                best = (obj, alpha[..n - 1].to_vec());
            }
        }
        let mut k = 0;
        loop {
            if k == n - 1 {
                return best;
            }
            idx[k] += 1;
            if idx[k] <= steps {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Largest KKT violation of `alpha` with bias `b` for the decision values
/// `f_i = sum_j alpha_j y_j K_ij + b`.
pub fn kkt_violation(k: &[Vec<f64>], y: &[f64], alpha: &[f64], upper: &[f64], b: f64) -> f64 {
    let n = y.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let f: f64 = (0..n).map(|j| alpha[j] * y[j] * k[i][j]).sum::<f64>() + b;
        let m = y[i] * f - 1.0;
        let v = if alpha[i] <= 0.0 {
            (-m).max(0.0)
        } else if alpha[i] >= upper[i] {
            m.max(0.0)
        } else {
            m.abs()
        };
        worst = worst.max(v);
    }
    worst
}
