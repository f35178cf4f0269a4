//! Maximal-volume inscribed ellipsoid by log-barrier path following.
//!
//! Variables are the center `c` and the upper triangle of the symmetric
//! shape `A`. Each facet contributes `-log((b_i - <a_i, c>)^2 - |A a_i|^2)`
//! and the objective enters as `-t log det A`.

use nalgebra::Cholesky;

use super::polish::polish;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::geometry::{check_body, Ellipsoid, HPolytope, Matrix, Vector};

const GROWTH: f64 = 10.0;
const CENTERED: f64 = 1e-10;
/// Squared Newton decrement below which damping is unnecessary.
const QUADRATIC: f64 = 1.0 / 16.0;

struct Barrier<'a> {
    d: usize,
    p: &'a HPolytope,
    /// `(row, col)` of each shape coordinate, `row <= col`.
    basis: Vec<(usize, usize)>,
}

impl<'a> Barrier<'a> {
    fn new(p: &'a HPolytope) -> Self {
        let d = p.dim;
        let basis = (0..d).flat_map(|j| (j..d).map(move |l| (j, l))).collect();
        Self { d, p, basis }
    }

    fn nvars(&self) -> usize {
        self.d + self.basis.len()
    }

    fn shape(&self, z: &Vector) -> Matrix {
        let mut a = Matrix::zeros(self.d, self.d);
        for (k, &(j, l)) in self.basis.iter().enumerate() {
            a[(j, l)] = z[self.d + k];
            a[(l, j)] = z[self.d + k];
        }
        a
    }

    fn pack(&self, c: &Vector, a: &Matrix) -> Vector {
        let mut z = Vector::zeros(self.nvars());
        z.rows_mut(0, self.d).copy_from(c);
        for (k, &(j, l)) in self.basis.iter().enumerate() {
            z[self.d + k] = a[(j, l)];
        }
        z
    }

    /// Columns `E_k a` of the Jacobian of `A a` in the shape coordinates.
    fn jacobian(&self, a: &Vector) -> Matrix {
        let mut g = Matrix::zeros(self.d, self.basis.len());
        for (k, &(j, l)) in self.basis.iter().enumerate() {
            if j == l {
                g[(j, k)] = a[j];
            } else {
                g[(j, k)] = a[l];
                g[(l, k)] = a[j];
            }
        }
        g
    }

    fn value(&self, z: &Vector, t: f64) -> Option<f64> {
        let c = z.rows(0, self.d).into_owned();
        let a = self.shape(z);
        let chol = Cholesky::new(a.clone())?;
        let logdet = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        let mut phi = -t * logdet;
        for h in &self.p.halfspaces {
            let s = h.b - h.a.dot(&c);
            let y = &a * &h.a;
            let f = s * s - y.norm_squared();
            if s <= 0.0 || f <= 0.0 {
                return None;
            }
            phi -= f.ln();
        }
        phi.is_finite().then_some(phi)
    }

    fn derivatives(&self, z: &Vector, t: f64) -> Option<(Vector, Matrix)> {
        let d = self.d;
        let n = self.nvars();
        let c = z.rows(0, d).into_owned();
        let a = self.shape(z);
        let w = a.clone().try_inverse()?;
        let mut grad = Vector::zeros(n);
        let mut hess = Matrix::zeros(n, n);

        // -t log det A
        let dirs: Vec<Matrix> = self
            .basis
            .iter()
            .map(|&(j, l)| {
                let mut e = Matrix::zeros(d, d);
                e[(j, l)] = 1.0;
                e[(l, j)] = 1.0;
                &w * e
            })
            .collect();
        for k in 0..self.basis.len() {
            grad[d + k] = -t * dirs[k].trace();
            for l in k..self.basis.len() {
                let v = t * (&dirs[k] * &dirs[l]).trace();
                hess[(d + k, d + l)] = v;
                hess[(d + l, d + k)] = v;
            }
        }

        for h in &self.p.halfspaces {
            let s = h.b - h.a.dot(&c);
            let y = &a * &h.a;
            let f = s * s - y.norm_squared();
            let g = self.jacobian(&h.a);
            let mut df = Vector::zeros(n);
            df.rows_mut(0, d).copy_from(&(&h.a * (-2.0 * s)));
            df.rows_mut(d, self.basis.len())
                .copy_from(&(g.transpose() * &y * -2.0));
            grad -= &df / f;
            hess += &df * df.transpose() / (f * f);
            // -(hessian of f)/f
            let aat = &h.a * h.a.transpose();
            let mut block = hess.view_mut((0, 0), (d, d));
            block -= aat * (2.0 / f);
            let gtg = g.transpose() * &g;
            let mut block = hess.view_mut((d, d), (self.basis.len(), self.basis.len()));
            block += gtg * (2.0 / f);
        }
        Some((grad, hess))
    }
}

fn newton_direction(grad: &Vector, hess: &Matrix) -> Option<Vector> {
    let n = grad.len();
    let scale = hess.diagonal().amax().max(1.0);
    let mut reg = 0.0;
    for _ in 0..8 {
        let h = hess + Matrix::identity(n, n) * (reg * scale);
        if let Some(ch) = Cholesky::new(h) {
            let dir = -ch.solve(grad);
            if dir.iter().all(|x| x.is_finite()) {
                return Some(dir);
            }
        }
        reg = if reg == 0.0 { 1e-14 } else { reg * 100.0 };
    }
    None
}

/// Maximal-volume ellipsoid contained in `p`, as `{A y + c : |y| <= 1}`.
pub fn inscribed_ellipsoid(p: &HPolytope, tol: &Tolerances) -> Result<Ellipsoid> {
    let (center, radius) = check_body(p)?;
    let bar = Barrier::new(p);
    let m = p.len() as f64;
    let mut z = bar.pack(&center, &(Matrix::identity(p.dim, p.dim) * (0.5 * radius)));
    let mut t = 1.0;
    let mut steps = 0usize;

    loop {
        // centering
        let mut last_dec = f64::INFINITY;
        loop {
            if steps >= tol.max_newton {
                return Err(Error::NoConvergence { iterations: steps });
            }
            let (grad, hess) = bar
                .derivatives(&z, t)
                .ok_or(Error::NoConvergence { iterations: steps })?;
            let Some(dir) = newton_direction(&grad, &hess) else {
                return Err(Error::NoConvergence { iterations: steps });
            };
            steps += 1;
            let dec = -grad.dot(&dir);
            if dec / 2.0 <= CENTERED {
                break;
            }
            if dec < QUADRATIC {
                // full steps converge quadratically here; only feasibility matters
                let mut alpha = 1.0;
                while bar.value(&(&z + &dir * alpha), t).is_none() {
                    alpha *= 0.5;
                }
                z += &dir * alpha;
                if dec >= last_dec {
                    // rounding floor reached
                    break;
                }
                last_dec = dec;
                continue;
            }
            last_dec = f64::INFINITY;
            let phi0 = bar.value(&z, t).expect("iterate stays interior");
            let mut alpha = 1.0;
            loop {
                let trial = &z + &dir * alpha;
                if let Some(phi) = bar.value(&trial, t) {
                    if phi <= phi0 - 0.01 * alpha * dec {
                        z = trial;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-14 {
                    return Err(Error::NoConvergence { iterations: steps });
                }
            }
        }
        if 2.0 * m / t <= tol.solver_gap {
            break;
        }
        t *= GROWTH;
    }

    let c = z.rows(0, p.dim).into_owned();
    let a = bar.shape(&z);
    let (c, a) = refine(p, c, a);
    for (index, h) in p.halfspaces.iter().enumerate() {
        let width = (&a * &h.a).norm();
        let excess = h.a.dot(&c) + width - h.b;
        // relative to the ellipsoid's own width along the normal
        if excess > tol.feasibility * h.b.abs().max(width).max(1.0) {
            return Err(Error::EllipsoidInfeasible { index, excess });
        }
    }
    Ellipsoid::new(c, a)
}

/// Applies the active-set refinement when it succeeds; otherwise keeps the barrier solution.
fn refine(p: &HPolytope, c: Vector, a: Matrix) -> (Vector, Matrix) {
    let Ok(normalized) = p
        .halfspaces
        .iter()
        .map(|h| h.pull_back(&a, &c))
        .collect::<Result<Vec<_>>>()
    else {
        return (c, a);
    };
    let Some((dc, s)) = polish(&normalized) else {
        return (c, a);
    };
    // {a s y + a dc + c} has symmetric shape sqrt(a s s a) = (a s) q^T
    let m = &a * &s;
    let Some(q) = polar_factor(&m) else {
        return (c, a);
    };
    let shape = &m * q.transpose();
    (&a * dc + c, (&shape + shape.transpose()) * 0.5)
}

/// Orthogonal factor `q` of `m = p q` by scaled Newton iteration, which keeps
/// the accuracy that forming `m m^T` would square away.
fn polar_factor(m: &Matrix) -> Option<Matrix> {
    let mut x = m.clone();
    for _ in 0..100 {
        let inv_t = x.clone().try_inverse()?.transpose();
        let g = (inv_t.norm() / x.norm()).sqrt();
        let next = (&x * g + inv_t / g) * 0.5;
        let delta = (&next - &x).norm();
        x = next;
        if delta <= 1e-14 * x.norm() {
            return Some(x);
        }
    }
    None
}
