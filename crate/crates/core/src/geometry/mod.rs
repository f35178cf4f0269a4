//! Small-dimension linear algebra and exact polytope primitives.

mod ellipsoid;
pub mod lp;
pub mod serde_la;
mod vertices;
mod volume;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::{Tolerances, MAX_DIM, MAX_FACETS};
use crate::error::{Error, Result};

pub use ellipsoid::{
    ellipsoid_polar, ellipsoid_volume, max_ellipsoid_in_simplex, regular_simplex,
    simplex_inellipsoid_ratio, sym_sqrt, unit_ball_volume, Ellipsoid,
};
pub use lp::{lp_solve, LinearProgram, LpOutcome, LpSolution, Relation};
pub use vertices::{
    check_bounded, chebyshev_ball, hull_distance, in_hull, vertex_enumeration, vertex_incidence,
    VertexIncidence,
};
pub(crate) use vertices::check_body;
pub use volume::{volume_from_incidence, volume_h, volume_v};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub(crate) const ZERO_NORM: f64 = 1e-14;

pub fn factorial(d: usize) -> f64 {
    (1..=d).map(|k| k as f64).product()
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    if d > MAX_DIM {
        return Err(Error::CapExceeded {
            what: "dimension",
            value: d,
            cap: MAX_DIM,
        });
    }
    Ok(())
}

/// `{x : <a, x> <= b}` with `|a| = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    #[serde(with = "serde_la::vector")]
    pub a: Vector,
    pub b: f64,
}

pub fn normalize_halfspace(a: Vector, b: f64) -> Result<HalfSpace> {
    if !b.is_finite() || a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = a.norm();
    if n <= ZERO_NORM {
        return Err(Error::ZeroNormal);
    }
    Ok(HalfSpace { a: a / n, b: b / n })
}

impl HalfSpace {
    pub fn new(a: Vector, b: f64) -> Result<Self> {
        normalize_halfspace(a, b)
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Signed violation `<a, x> - b`.
    pub fn excess(&self, x: &Vector) -> f64 {
        self.a.dot(x) - self.b
    }

    /// Preimage description under `x = m y + t`: the set of `y` with `m y + t` inside.
    pub fn pull_back(&self, m: &Matrix, t: &Vector) -> Result<HalfSpace> {
        normalize_halfspace(m.transpose() * &self.a, self.b - self.a.dot(t))
    }
}

/// Intersection of finitely many half-spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPolytope {
    pub dim: usize,
    pub halfspaces: Vec<HalfSpace>,
}

impl HPolytope {
    /// Validates dimensions and caps. Half-spaces must already be normalized.
    pub fn new(dim: usize, halfspaces: Vec<HalfSpace>) -> Result<Self> {
        check_dim(dim)?;
        if halfspaces.len() > MAX_FACETS {
            return Err(Error::CapExceeded {
                what: "half-spaces",
                value: halfspaces.len(),
                cap: MAX_FACETS,
            });
        }
        for h in &halfspaces {
            if h.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: h.dim(),
                });
            }
            if (h.a.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::ZeroNormal);
            }
        }
        Ok(HPolytope { dim, halfspaces })
    }

    /// Builds from raw `(a, b)` rows, normalizing each.
    pub fn from_rows(dim: usize, rows: impl IntoIterator<Item = (Vec<f64>, f64)>) -> Result<Self> {
        let mut hs = Vec::new();
        for (a, b) in rows {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.len(),
                });
            }
            hs.push(normalize_halfspace(Vector::from_vec(a), b)?);
        }
        Self::new(dim, hs)
    }

    /// The cube `[-r, r]^d`.
    pub fn cube(dim: usize, r: f64) -> Result<Self> {
        let rows = (0..dim).flat_map(|i| {
            let mut plus = vec![0.0; dim];
            plus[i] = 1.0;
            let mut minus = vec![0.0; dim];
            minus[i] = -1.0;
            [(plus, r), (minus, r)]
        });
        Self::from_rows(dim, rows)
    }

    pub fn len(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.halfspaces.is_empty()
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.excess(x) <= tol)
    }

    pub fn subfamily(&self, indices: &[usize]) -> HPolytope {
        HPolytope {
            dim: self.dim,
            halfspaces: indices.iter().map(|&i| self.halfspaces[i].clone()).collect(),
        }
    }

    /// Image under the invertible affine map `x -> m x + t`.
    pub fn affine_image(&self, m: &Matrix, t: &Vector) -> Result<HPolytope> {
        let inv = m
            .clone()
            .try_inverse()
            .ok_or(Error::Degenerate)?;
        // y = m x + t  <=>  x = inv (y - t)
        let shift = -(&inv * t);
        let hs = self
            .halfspaces
            .iter()
            .map(|h| h.pull_back(&inv, &shift))
            .collect::<Result<Vec<_>>>()?;
        HPolytope::new(self.dim, hs)
    }

    pub fn vertices(&self, tol: &Tolerances) -> Result<VPolytope> {
        vertex_enumeration(self, tol)
    }

    pub fn volume(&self, tol: &Tolerances) -> Result<f64> {
        volume_h(self, tol)
    }
}

/// Convex hull of finitely many extreme points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VPolytope {
    pub dim: usize,
    #[serde(with = "serde_la::vectors")]
    pub vertices: Vec<Vector>,
}

impl VPolytope {
    /// Deduplicates and drops points lying in the hull of the others.
    pub fn new(dim: usize, points: Vec<Vector>, tol: &Tolerances) -> Result<Self> {
        check_dim(dim)?;
        let mut unique: Vec<Vector> = Vec::with_capacity(points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
            if !unique.iter().any(|q| (q - &p).norm() <= tol.dedupe) {
                unique.push(p);
            }
        }
        let mut keep = vec![true; unique.len()];
        for i in 0..unique.len() {
            let others: Vec<Vector> = unique
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i && keep[j])
                .map(|(_, q)| q.clone())
                .collect();
            if !others.is_empty() && hull_distance(&others, &unique[i]) <= tol.dedupe {
                keep[i] = false;
            }
        }
        let vertices = unique
            .into_iter()
            .zip(keep)
            .filter_map(|(p, k)| k.then_some(p))
            .collect();
        Ok(VPolytope { dim, vertices })
    }

    pub fn volume(&self, tol: &Tolerances) -> Result<f64> {
        volume_v(self, tol)
    }
}

/// `conv{v_0, ..., v_d}` with affinely independent vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simplex {
    #[serde(with = "serde_la::vectors")]
    vertices: Vec<Vector>,
}

impl Simplex {
    pub fn new(vertices: Vec<Vector>) -> Result<Self> {
        let d = vertices.len().saturating_sub(1);
        check_dim(d)?;
        if vertices.iter().any(|v| v.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: vertices.iter().map(|v| v.len()).find(|&l| l != d).unwrap_or(d),
            });
        }
        let s = Simplex { vertices };
        if s.edge_matrix().determinant().abs() <= 1e-12 {
            return Err(Error::DegenerateSimplex);
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    /// Columns `v_i - v_0` for `i = 1..=d`.
    pub fn edge_matrix(&self) -> Matrix {
        let d = self.vertices.len() - 1;
        let v0 = &self.vertices[0];
        Matrix::from_fn(d, d, |r, c| self.vertices[c + 1][r] - v0[r])
    }

    pub fn volume(&self) -> f64 {
        self.edge_matrix().determinant().abs() / factorial(self.dim())
    }

    pub fn centroid(&self) -> Vector {
        let n = self.vertices.len() as f64;
        self.vertices.iter().fold(Vector::zeros(self.dim()), |acc, v| acc + v) / n
    }

    /// Outward facet half-spaces; facet `j` is opposite vertex `j`.
    pub fn facets(&self) -> Vec<HalfSpace> {
        let d = self.dim();
        (0..=d)
            .map(|j| {
                let others: Vec<&Vector> = self
                    .vertices
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, v)| v)
                    .collect();
                let normal = hyperplane_normal(&others);
                let b = normal.dot(others[0]);
                let (a, b) = if normal.dot(&self.vertices[j]) > b {
                    (-normal, -b)
                } else {
                    (normal, b)
                };
                HalfSpace { a, b }
            })
            .collect()
    }
}

/// Unit normal of the hyperplane through `d` affinely independent points of R^d.
pub(crate) fn hyperplane_normal(points: &[&Vector]) -> Vector {
    let d = points[0].len();
    if d == 1 {
        return Vector::from_element(1, 1.0);
    }
    let p0 = points[0];
    let mut gram = Matrix::zeros(d, d);
    for p in &points[1..] {
        let e = *p - p0;
        gram += &e * e.transpose();
    }
    let eig = gram.symmetric_eigen();
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    let n = eig.eigenvectors.column(imin).into_owned();
    let norm = n.norm();
    n / norm
}

/// Orthonormal basis of `span{p - p0}` as matrix columns.
pub(crate) fn affine_basis(points: &[&Vector], rank_tol: f64) -> Matrix {
    let d = points[0].len();
    let p0 = points[0];
    let edges: Vec<Vector> = points[1..].iter().map(|p| *p - p0).collect();
    let scale = edges.iter().fold(1.0f64, |m, e| m.max(e.amax()));
    let cols = orthonormal_span(edges, rank_tol * scale);
    if cols.is_empty() {
        Matrix::zeros(d, 0)
    } else {
        Matrix::from_columns(&cols)
    }
}

/// Modified Gram-Schmidt with column pivoting and one re-orthogonalization
/// pass; stops when every remaining residual is at most `tol`.
pub(crate) fn orthonormal_span(mut vs: Vec<Vector>, tol: f64) -> Vec<Vector> {
    let mut basis: Vec<Vector> = Vec::new();
    while !vs.is_empty() {
        let (best, norm) = vs
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if norm <= tol {
            break;
        }
        let mut q = vs.swap_remove(best);
        for b in &basis {
            let c = b.dot(&q);
            q -= b * c;
        }
        let n = q.norm();
        if n <= tol {
            continue;
        }
        q /= n;
        for v in vs.iter_mut() {
            let c = q.dot(v);
            *v -= &q * c;
        }
        basis.push(q);
    }
    basis
}

/// Polar `{y : <x_j, y> <= 1}` of a point set, one half-space per point.
pub fn polar_of_points(points: &[Vector]) -> Result<HPolytope> {
    let d = points.first().map(|p| p.len()).ok_or(Error::DimensionMismatch {
        expected: 1,
        found: 0,
    })?;
    let hs = points
        .iter()
        .enumerate()
        .map(|(i, x)| {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
            if x.norm() <= ZERO_NORM {
                return Err(Error::ZeroPoint { index: i });
            }
            normalize_halfspace(x.clone(), 1.0)
        })
        .collect::<Result<Vec<_>>>()?;
    HPolytope::new(d, hs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn normalize_examples() {
        let h = normalize_halfspace(v(&[2.0, 0.0]), 4.0).unwrap();
        assert_eq!(h.a, v(&[1.0, 0.0]));
        assert_eq!(h.b, 2.0);
        let h = normalize_halfspace(v(&[0.0, 1.0]), 1.0).unwrap();
        assert_eq!(h.a, v(&[0.0, 1.0]));
        assert_eq!(h.b, 1.0);
        let h = normalize_halfspace(v(&[3.0, 4.0]), 10.0).unwrap();
        assert!((h.a - v(&[0.6, 0.8])).norm() < 1e-15);
        assert!((h.b - 2.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_rejects_zero_and_nan() {
        assert!(matches!(
            normalize_halfspace(v(&[0.0, 1e-15]), 1.0),
            Err(Error::ZeroNormal)
        ));
        assert!(matches!(
            normalize_halfspace(v(&[f64::NAN, 1.0]), 1.0),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn caps_enforced() {
        assert!(matches!(
            HPolytope::cube(9, 1.0),
            Err(Error::CapExceeded { what: "dimension", .. })
        ));
        let rows = (0..65).map(|_| (vec![1.0, 0.0], 1.0));
        assert!(matches!(
            HPolytope::from_rows(2, rows),
            Err(Error::CapExceeded { what: "half-spaces", .. })
        ));
    }

    #[test]
    fn polar_of_cross_polytope_is_cube() {
        let pts = vec![v(&[1.0, 0.0]), v(&[-1.0, 0.0]), v(&[0.0, 1.0]), v(&[0.0, -1.0])];
        let p = polar_of_points(&pts).unwrap();
        assert_eq!(p, HPolytope::cube(2, 1.0).unwrap());
    }

    #[test]
    fn polar_rejects_origin() {
        let pts = vec![v(&[1.0, 0.0]), v(&[0.0, 0.0])];
        assert!(matches!(polar_of_points(&pts), Err(Error::ZeroPoint { index: 1 })));
    }

    #[test]
    fn simplex_facets_point_outward() {
        let s = Simplex::new(vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        let c = s.centroid();
        for h in s.facets() {
            assert!(h.excess(&c) < 0.0);
        }
        assert!((s.volume() - 0.5).abs() < 1e-15);
        assert!(matches!(
            Simplex::new(vec![v(&[0.0, 0.0]), v(&[1.0, 1.0]), v(&[2.0, 2.0])]),
            Err(Error::DegenerateSimplex)
        ));
    }

    #[test]
    fn affine_image_of_cube() {
        let cube = HPolytope::cube(2, 1.0).unwrap();
        let m = Matrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 3.0]);
        let t = v(&[1.0, -1.0]);
        let img = cube.affine_image(&m, &t).unwrap();
        assert!(img.contains(&v(&[4.0, 2.0]), 1e-12));
        assert!(!img.contains(&v(&[4.1, 0.0]), 1e-12));
    }
}
