use serde::{Deserialize, Serialize};

use super::{check_dim, factorial, serde_la, Matrix, Simplex, Vector};
use crate::error::{Error, Result};

const SPD_FLOOR: f64 = 1e-12;
const CENTER_TOL: f64 = 1e-10;

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    // kappa_d = kappa_{d-2} * 2 pi / d
    let (mut k, start) = if d.is_multiple_of(2) { (1.0, 2) } else { (2.0, 3) };
    let mut n = start;
    while n <= d {
        k *= 2.0 * std::f64::consts::PI / n as f64;
        n += 2;
    }
    k
}

/// Symmetric square root of a symmetric positive semidefinite matrix.
pub fn sym_sqrt(m: &Matrix) -> Matrix {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let d = m.nrows();
    let mut out = Matrix::zeros(d, d);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        let q = eig.eigenvectors.column(i);
        out += q * q.transpose() * l.max(0.0).sqrt();
    }
    out
}

/// `center + shape(B)` with `shape` symmetric positive definite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    #[serde(with = "serde_la::vector")]
    pub center: Vector,
    #[serde(with = "serde_la::matrix")]
    pub shape: Matrix,
}

impl Ellipsoid {
    pub fn new(center: Vector, shape: Matrix) -> Result<Self> {
        let d = center.len();
        check_dim(d)?;
        if shape.nrows() != d || shape.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: shape.nrows(),
            });
        }
        if center.iter().chain(shape.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = shape.amax().max(1.0);
        if (&shape - shape.transpose()).amax() > 1e-10 * scale {
            return Err(Error::NotPositiveDefinite);
        }
        let shape = (&shape + shape.transpose()) * 0.5;
        let min_eig = shape
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v));
        if min_eig <= SPD_FLOOR {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Ellipsoid { center, shape })
    }

    pub fn unit_ball(d: usize) -> Self {
        Ellipsoid {
            center: Vector::zeros(d),
            shape: Matrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.shape.determinant().abs()
    }

    /// `max over x in E of <dir, x>`.
    pub fn support(&self, dir: &Vector) -> f64 {
        self.center.dot(dir) + (&self.shape * dir).norm()
    }

    /// Minkowski gauge `|A^{-1}(x - c)|`; at most 1 exactly on E.
    pub fn gauge(&self, x: &Vector) -> f64 {
        let rel = x - &self.center;
        match self.shape.clone().cholesky() {
            Some(ch) => ch.solve(&rel).norm(),
            None => f64::INFINITY,
        }
    }

    /// `A A^T`, invariant under the orthogonal ambiguity of the shape.
    pub fn gram(&self) -> Matrix {
        &self.shape * self.shape.transpose()
    }

    /// Image under `x -> m x + t`; the shape is re-symmetrized.
    pub fn affine_image(&self, m: &Matrix, t: &Vector) -> Result<Ellipsoid> {
        let center = m * &self.center + t;
        let g = m * self.gram() * m.transpose();
        Ellipsoid::new(center, sym_sqrt(&g))
    }

    /// Homothety with fixed point `fixed` and the given ratio.
    pub fn contract(&self, fixed: &Vector, ratio: f64) -> Ellipsoid {
        Ellipsoid {
            center: fixed + (&self.center - fixed) * ratio,
            shape: &self.shape * ratio,
        }
    }
}

pub fn ellipsoid_volume(e: &Ellipsoid) -> f64 {
    e.volume()
}

/// Polar body `{y : <x, y> <= 1 for x in E}` of an origin-centered ellipsoid.
pub fn ellipsoid_polar(e: &Ellipsoid) -> Result<Ellipsoid> {
    let n = e.center.norm();
    if n > CENTER_TOL {
        return Err(Error::NotCentered { norm: n });
    }
    let inv = e
        .shape
        .clone()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite)?
        .transpose();
    let inv = (&inv + inv.transpose()) * 0.5;
    Ellipsoid::new(Vector::zeros(e.dim()), inv)
}

/// `d + 1` unit vectors summing to the origin (regular simplex, circumradius 1).
pub fn regular_simplex(d: usize) -> Vec<Vector> {
    // Helmert basis of the hyperplane sum(x) = 0 in R^{d+1}
    let helmert = Matrix::from_fn(d + 1, d, |r, c| {
        let k = (c + 1) as f64;
        let norm = (k * (k + 1.0)).sqrt();
        if r <= c {
            1.0 / norm
        } else if r == c + 1 {
            -k / norm
        } else {
            0.0
        }
    });
    let scale = ((d + 1) as f64 / d as f64).sqrt();
    (0..=d)
        .map(|i| {
            let mut e = Vector::from_element(d + 1, -1.0 / (d + 1) as f64);
            e[i] += 1.0;
            helmert.transpose() * e * scale
        })
        .collect()
}

/// `vol(E) / vol(S)` for the largest ellipsoid `E` in any d-simplex `S`.
pub fn simplex_inellipsoid_ratio(d: usize) -> f64 {
    let df = d as f64;
    factorial(d) * unit_ball_volume(d) / (df.powf(df / 2.0) * (df + 1.0).powf((df + 1.0) / 2.0))
}

/// Affine image of the insphere (radius `1/d`) of the regular simplex.
pub fn max_ellipsoid_in_simplex(s: &Simplex) -> Result<Ellipsoid> {
    let d = s.dim();
    let reference = regular_simplex(d);
    let ref_edges = Matrix::from_fn(d, d, |r, c| reference[c + 1][r] - reference[0][r]);
    let inv = ref_edges.try_inverse().ok_or(Error::DegenerateSimplex)?;
    let map = s.edge_matrix() * inv;
    if map.determinant().abs() <= 1e-14 {
        return Err(Error::DegenerateSimplex);
    }
    let shape = sym_sqrt(&(&map * map.transpose())) / d as f64;
    Ellipsoid::new(s.centroid(), shape).map_err(|_| Error::DegenerateSimplex)
}
