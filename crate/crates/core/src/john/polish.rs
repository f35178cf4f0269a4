//! Active-set refinement of a barrier solution.
//!
//! The barrier keeps every facet strictly slack. Facets that touch the optimal
//! ellipsoid with a zero multiplier only close in like the square root of the
//! duality gap, which leaves the whole ellipsoid off by about `1e-5`. Here the
//! nearly tight facets are made exactly tight and the optimality system is
//! solved by Levenberg-Marquardt in coordinates where the barrier ellipsoid is
//! the unit ball. Facets whose multiplier turns negative are released.

use nalgebra::Cholesky;

use super::nnls;
use crate::geometry::{HalfSpace, Matrix, Vector};

/// Facets with normalized slack below this start out tight.
const ACTIVE_SLACK: f64 = 1e-3;
const MAX_ITER: usize = 100;
/// Infinity-norm of the optimality residual that counts as solved.
const SOLVED: f64 = 1e-12;
/// Largest stationarity residual accepted for non-negative multipliers.
const DUAL_RESIDUAL: f64 = 1e-9;

struct System<'a> {
    d: usize,
    u: Vec<&'a Vector>,
    beta: Vec<f64>,
    basis: Vec<(usize, usize)>,
}

impl System<'_> {
    fn nshape(&self) -> usize {
        self.basis.len()
    }

    fn nvars(&self) -> usize {
        self.d + self.nshape() + self.u.len()
    }

    fn unpack(&self, z: &Vector) -> (Vector, Matrix, Vector) {
        let d = self.d;
        let c = z.rows(0, d).into_owned();
        let mut s = Matrix::zeros(d, d);
        for (k, &(j, l)) in self.basis.iter().enumerate() {
            s[(j, l)] = z[d + k];
            s[(l, j)] = z[d + k];
        }
        let lambda = z.rows(d + self.nshape(), self.u.len()).into_owned();
        (c, s, lambda)
    }

    fn sym_dir(&self, k: usize) -> Matrix {
        let (j, l) = self.basis[k];
        let mut e = Matrix::zeros(self.d, self.d);
        e[(j, l)] = 1.0;
        e[(l, j)] = 1.0;
        e
    }

    /// `sym(y u^T) / |y|` with `y = S u`.
    fn facet_term(y: &Vector, u: &Vector) -> Matrix {
        (y * u.transpose() + u * y.transpose()) / (2.0 * y.norm())
    }

    /// Residual and Jacobian of the optimality system. Rows: `d` for
    /// `sum l_i u_i`, one per shape coordinate for `S^-1 - sum l_i H_i`,
    /// one per tight facet.
    fn eval(&self, z: &Vector) -> Option<(Vector, Matrix)> {
        let (d, ns) = (self.d, self.nshape());
        let n = self.nvars();
        let (c, s, lambda) = self.unpack(z);
        let sinv = Cholesky::new(s.clone())?.inverse();
        let mut f = Vector::zeros(n);
        let mut jac = Matrix::zeros(n, n);

        let dirs: Vec<Matrix> = (0..ns).map(|q| self.sym_dir(q)).collect();
        let mut stat = sinv.clone();
        for (i, u) in self.u.iter().enumerate() {
            let y = &s * *u;
            let ny = y.norm();
            if ny <= 0.0 {
                return None;
            }
            let h = Self::facet_term(&y, u);
            stat -= &h * lambda[i];
            for r in 0..d {
                f[r] += lambda[i] * u[r];
                jac[(r, d + ns + i)] = u[r];
            }
            let row = d + ns + i;
            f[row] = ny + u.dot(&c) - self.beta[i];
            for r in 0..d {
                jac[(row, r)] = u[r];
            }
            for (q, e) in dirs.iter().enumerate() {
                let dy = e * *u;
                let dn = y.dot(&dy) / ny;
                jac[(row, d + q)] = dn;
                // derivative of -l_i H_i along E_q
                let dh = (&dy * u.transpose() + *u * dy.transpose()) / (2.0 * ny) - &h * (dn / ny);
                for (p, &(a, b)) in self.basis.iter().enumerate() {
                    jac[(d + p, d + q)] -= lambda[i] * dh[(a, b)];
                }
            }
            for (p, &(a, b)) in self.basis.iter().enumerate() {
                jac[(d + p, d + ns + i)] = -h[(a, b)];
            }
        }
        for (p, &(a, b)) in self.basis.iter().enumerate() {
            f[d + p] = stat[(a, b)];
            for (q, e) in dirs.iter().enumerate() {
                // d S^-1 = -S^-1 E S^-1
                jac[(d + p, d + q)] -= (&sinv * e * &sinv)[(a, b)];
            }
        }
        Some((f, jac))
    }

    fn solve(&self, mut z: Vector) -> Option<Vector> {
        let n = self.nvars();
        let (mut f, mut jac) = self.eval(&z)?;
        let mut cost = f.norm_squared();
        let jtj = jac.transpose() * &jac;
        let mut mu = 1e-3 * jtj.diagonal().amax().max(1e-12);
        for _ in 0..MAX_ITER {
            if f.amax() <= SOLVED {
                return Some(z);
            }
            let jtj = jac.transpose() * &jac;
            let g = jac.transpose() * &f;
            let step = Cholesky::new(jtj + Matrix::identity(n, n) * mu)?.solve(&g);
            let trial = &z - step;
            match self.eval(&trial) {
                Some((ft, jt)) if ft.norm_squared() < cost => {
                    z = trial;
                    cost = ft.norm_squared();
                    f = ft;
                    jac = jt;
                    mu = (mu / 3.0).max(1e-15);
                }
                _ => {
                    mu *= 4.0;
                    if mu > 1e12 {
                        break;
                    }
                }
            }
        }
        (f.amax() <= SOLVED).then_some(z)
    }
}

/// Refined `(center, shape)` in the coordinates where the barrier solution is
/// the unit ball, or `None` when refinement does not produce a certified optimum.
pub(super) fn polish(normalized: &[HalfSpace]) -> Option<(Vector, Matrix)> {
    let d = normalized.first()?.dim();
    let mut active: Vec<usize> = (0..normalized.len())
        .filter(|&i| normalized[i].b - 1.0 <= ACTIVE_SLACK)
        .collect();
    let basis: Vec<(usize, usize)> = (0..d).flat_map(|j| (j..d).map(move |l| (j, l))).collect();

    while active.len() > d {
        let sys = System {
            d,
            u: active.iter().map(|&i| &normalized[i].a).collect(),
            beta: active.iter().map(|&i| normalized[i].b).collect(),
            basis: basis.clone(),
        };
        // start at the unit ball with least-squares multipliers
        let mut z = Vector::zeros(sys.nvars());
        for (k, &(j, l)) in basis.iter().enumerate() {
            if j == l {
                z[d + k] = 1.0;
            }
        }
        let (a0, b0) = stationarity(&sys.u, &Matrix::identity(d, d), &basis)?;
        let lambda0 = nnls(&a0, &b0).0;
        z.rows_mut(d + basis.len(), active.len()).copy_from(&lambda0);

        let z = sys.solve(z)?;
        let (c, s, lambda) = sys.unpack(&z);
        let feasible = normalized
            .iter()
            .all(|h| (&s * &h.a).norm() + h.a.dot(&c) <= h.b + 1e-12);
        let logdet = Cholesky::new(s.clone())?.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        let (a1, b1) = stationarity(&sys.u, &s, &basis)?;
        let dual = nnls(&a1, &b1).1;
        if feasible && logdet >= -1e-12 && dual <= DUAL_RESIDUAL {
            return Some((c, s));
        }
        // release the facet with the most negative multiplier
        let (worst, &value) = lambda
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))?;
        if value >= 0.0 {
            return None;
        }
        active.remove(worst);
    }
    None
}

/// Stationarity `sum l_i u_i = 0`, `sum l_i H_i = S^-1` as a linear system in `l`.
fn stationarity(points: &[&Vector], s: &Matrix, basis: &[(usize, usize)]) -> Option<(Matrix, Vector)> {
    let d = s.nrows();
    let sinv = Cholesky::new(s.clone())?.inverse();
    let mut a = Matrix::zeros(d + basis.len(), points.len());
    let mut b = Vector::zeros(d + basis.len());
    for (i, u) in points.iter().enumerate() {
        let h = System::facet_term(&(s * *u), u);
        for r in 0..d {
            a[(r, i)] = u[r];
        }
        for (p, &(j, l)) in basis.iter().enumerate() {
            a[(d + p, i)] = h[(j, l)];
        }
    }
    for (p, &(j, l)) in basis.iter().enumerate() {
        b[d + p] = sinv[(j, l)];
    }
    Some((a, b))
}
