//! Lawson-Hanson active-set non-negative least squares.

use crate::geometry::{Matrix, Vector};

/// `argmin |A x - b|` over `x >= 0`. Returns the solution and residual norm.
pub fn nnls(a: &Matrix, b: &Vector) -> (Vector, f64) {
    let (m, n) = a.shape();
    let mut x = Vector::zeros(n);
    let mut passive = vec![false; n];
    let anorm = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = 10.0 * f64::EPSILON * anorm * m.max(n) as f64;

    let max_outer = 3 * n + 10;
    for _ in 0..max_outer {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(t) = candidate else { break };
        if w[t] <= tol {
            break;
        }
        passive[t] = true;

        loop {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let s_p = least_squares(a, &idx, b);
            let Some(s_p) = s_p else {
                // rank-deficient passive set: back the newest column out
                passive[t] = false;
                break;
            };
            if s_p.iter().all(|&v| v > tol) {
                x.fill(0.0);
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = s_p[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &j) in idx.iter().enumerate() {
                if s_p[k] <= tol {
                    let denom = x[j] - s_p[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[j] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (s_p[k] - x[j]);
            }
            for &j in &idx {
                if x[j] <= tol {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    let res = (a * &x - b).norm();
    (x, res)
}

/// Least squares on the columns `idx` via Householder QR.
fn least_squares(a: &Matrix, idx: &[usize], b: &Vector) -> Option<Vector> {
    let cols: Vec<Vector> = idx.iter().map(|&j| a.column(j).into_owned()).collect();
    let sub = Matrix::from_columns(&cols);
    if sub.nrows() < sub.ncols() {
        return None;
    }
    let qr = sub.qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r.diagonal().iter().any(|v| v.abs() <= 1e-12 * scale.max(1e-300)) {
        return None;
    }
    let qtb = qr.q().transpose() * b;
    r.solve_upper_triangular(&qtb)
}
