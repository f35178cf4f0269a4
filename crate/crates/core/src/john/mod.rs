//! John position: the maximal inscribed ellipsoid, the normalization that
//! turns it into the unit ball, and the decomposition of the identity
//! carried by the contact points.

mod nnls;
mod polish;
mod solver;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use nnls::nnls;
pub use solver::inscribed_ellipsoid;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::geometry::{HPolytope, Matrix, Vector, serde_la};

/// Points `w_i` on the unit sphere with weights `c_i > 0` such that
/// `sum c_i w_i = 0` and `sum c_i w_i w_i^T = I`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactDecomposition {
    #[serde(with = "serde_la::vectors")]
    pub points: Vec<Vector>,
    pub weights: Vec<f64>,
    /// Index of the half-space (or input point) each contact came from.
    pub sources: Vec<usize>,
}

/// Residuals of a decomposition, as reported by [`verify_decomposition`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResiduals {
    pub barycenter_norm: f64,
    pub identity_max_entry: f64,
    pub trace_error: f64,
    pub min_weight: f64,
    pub max_norm_error: f64,
}

impl DecompositionResiduals {
    /// Largest of the three equation residuals.
    pub fn max_residual(&self) -> f64 {
        self.barycenter_norm
            .max(self.identity_max_entry)
            .max(self.trace_error)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol && self.min_weight > 0.0 && self.max_norm_error <= 1e-8
    }
}

impl ContactDecomposition {
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keeps the points whose weight exceeds `drop`.
    pub fn from_weights(points: &[Vector], weights: &[f64], sources: &[usize], drop: f64) -> Self {
        let keep: Vec<usize> = (0..points.len()).filter(|&i| weights[i] > drop).collect();
        ContactDecomposition {
            points: keep.iter().map(|&i| points[i].clone()).collect(),
            weights: keep.iter().map(|&i| weights[i]).collect(),
            sources: keep.iter().map(|&i| sources[i]).collect(),
        }
    }

    /// `sum c_i w_i w_i^T`.
    pub fn frame_operator(&self) -> Matrix {
        let d = self.dim();
        self.points
            .iter()
            .zip(&self.weights)
            .fold(Matrix::zeros(d, d), |acc, (w, &c)| acc + w * w.transpose() * c)
    }

    pub fn barycenter(&self) -> Vector {
        let d = self.dim();
        self.points
            .iter()
            .zip(&self.weights)
            .fold(Vector::zeros(d), |acc, (w, &c)| acc + w * c)
    }
}

pub fn verify_decomposition(dec: &ContactDecomposition) -> DecompositionResiduals {
    let d = dec.dim();
    DecompositionResiduals {
        barycenter_norm: dec.barycenter().norm(),
        identity_max_entry: (dec.frame_operator() - Matrix::identity(d, d)).amax(),
        trace_error: (dec.weights.iter().sum::<f64>() - d as f64).abs(),
        min_weight: dec.weights.iter().copied().fold(f64::INFINITY, f64::min),
        max_norm_error: dec
            .points
            .iter()
            .map(|w| (w.norm() - 1.0).abs())
            .fold(0.0, f64::max),
    }
}

/// Linear system of the decomposition: one row per upper-triangular entry of
/// the frame operator (off-diagonals scaled by sqrt 2, so the residual norm is
/// the Frobenius norm), then `d` barycenter rows when `balanced`.
fn decomposition_system(points: &[Vector], balanced: bool) -> (Matrix, Vector) {
    let d = points[0].len();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|j| (j..d).map(move |l| (j, l))).collect();
    let rows = pairs.len() + if balanced { d } else { 0 };
    let mut a = Matrix::zeros(rows, points.len());
    let mut b = Vector::zeros(rows);
    for (r, &(j, l)) in pairs.iter().enumerate() {
        let s = if j == l { 1.0 } else { std::f64::consts::SQRT_2 };
        for (k, w) in points.iter().enumerate() {
            a[(r, k)] = s * w[j] * w[l];
        }
        if j == l {
            b[r] = 1.0;
        }
    }
    if balanced {
        for j in 0..d {
            for (k, w) in points.iter().enumerate() {
                a[(pairs.len() + j, k)] = w[j];
            }
        }
    }
    (a, b)
}

/// Non-negative weights realizing the decomposition, one per input point.
/// Weights at or below the drop tolerance come back as exact zeros.
pub fn john_weights(points: &[Vector], tol: &Tolerances) -> Result<Vec<f64>> {
    let Some(first) = points.first() else {
        return Err(Error::TooFewContacts { found: 0, needed: 2 });
    };
    let d = first.len();
    if points.len() < d + 1 {
        return Err(Error::TooFewContacts {
            found: points.len(),
            needed: d + 1,
        });
    }
    let (a, b) = decomposition_system(points, true);
    let (x, _) = nnls(&a, &b);
    let weights: Vec<f64> = x
        .iter()
        .map(|&c| if c > tol.weight_drop { c } else { 0.0 })
        .collect();
    let idx: Vec<usize> = (0..points.len()).collect();
    let dec = ContactDecomposition::from_weights(points, &weights, &idx, 0.0);
    let residual = verify_decomposition(&dec).max_residual();
    if !(residual <= tol.decomposition) {
        return Err(Error::NoDecomposition { residual });
    }
    Ok(weights)
}

/// Indices of half-spaces tangent to the unit ball, `b_i <= 1 + tol`.
pub fn contact_indices(p: &HPolytope, tol: f64) -> Vec<usize> {
    p.halfspaces
        .iter()
        .enumerate()
        .filter(|(_, h)| h.b <= 1.0 + tol)
        .map(|(i, _)| i)
        .collect()
}

/// Unit normals of the tangent half-spaces; these are the touching points.
pub fn contact_points(p: &HPolytope, tol: f64) -> Result<Vec<Vector>> {
    let idx = contact_indices(p, tol);
    if idx.len() < p.dim + 1 {
        return Err(Error::TooFewContacts {
            found: idx.len(),
            needed: p.dim + 1,
        });
    }
    Ok(idx.into_iter().map(|i| p.halfspaces[i].a.clone()).collect())
}

/// Affine map `x -> matrix x + shift`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    #[serde(with = "serde_la::matrix")]
    pub matrix: Matrix,
    #[serde(with = "serde_la::vector")]
    pub shift: Vector,
}

impl AffineMap {
    pub fn identity(d: usize) -> Self {
        AffineMap {
            matrix: Matrix::identity(d, d),
            shift: Vector::zeros(d),
        }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.matrix * x + &self.shift
    }

    pub fn det(&self) -> f64 {
        self.matrix.determinant()
    }
}

/// A polytope in John position together with the map back to the input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizedInstance {
    pub original: HPolytope,
    /// Carries normalized coordinates to original ones.
    pub map: AffineMap,
    pub normalized: HPolytope,
    pub decomposition: ContactDecomposition,
    /// All half-spaces within the contact tolerance, before weight pruning.
    pub contacts: Vec<usize>,
}

impl NormalizedInstance {
    /// Forward image of the normalized half-spaces, renormalized.
    pub fn mapped_back(&self) -> Result<HPolytope> {
        self.normalized.affine_image(&self.map.matrix, &self.map.shift)
    }
}

/// Moves `p` into John position and extracts the decomposition of the identity.
pub fn normalize_position(p: &HPolytope, tol: &Tolerances) -> Result<NormalizedInstance> {
    let e = inscribed_ellipsoid(p, tol)?;
    let map = AffineMap {
        matrix: e.shape.clone(),
        shift: e.center.clone(),
    };
    let hs = p
        .halfspaces
        .iter()
        .map(|h| h.pull_back(&map.matrix, &map.shift))
        .collect::<Result<Vec<_>>>()?;
    let normalized = HPolytope::new(p.dim, hs)?;
    let contacts = contact_indices(&normalized, tol.contact);
    if contacts.len() < p.dim + 1 {
        return Err(Error::TooFewContacts {
            found: contacts.len(),
            needed: p.dim + 1,
        });
    }
    let points: Vec<Vector> = contacts
        .iter()
        .map(|&i| normalized.halfspaces[i].a.clone())
        .collect();
    let weights = john_weights(&points, tol)?;
    let decomposition = ContactDecomposition::from_weights(&points, &weights, &contacts, 0.0);
    Ok(NormalizedInstance {
        original: p.clone(),
        map,
        normalized,
        decomposition,
        contacts,
    })
}

/// Random decomposition of the identity from `m` Gaussian directions.
/// With `balanced = false` the barycenter condition is dropped and the result
/// is required to be visibly off-center.
pub fn random_decomposition<R: Rng + ?Sized>(
    d: usize,
    m: usize,
    balanced: bool,
    rng: &mut R,
) -> Result<ContactDecomposition> {
    const ATTEMPTS: usize = 1000;
    for _ in 0..ATTEMPTS {
        let points: Vec<Vector> = (0..m)
            .map(|_| {
                let g = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                let n = g.norm();
                g / n
            })
            .collect();
        if points.iter().any(|p| !p.iter().all(|x| x.is_finite())) {
            continue;
        }
        let (a, b) = decomposition_system(&points, balanced);
        let (x, res) = nnls(&a, &b);
        if res > 1e-10 {
            continue;
        }
        let idx: Vec<usize> = (0..m).collect();
        let dec = ContactDecomposition::from_weights(&points, x.as_slice(), &idx, 1e-10);
        let r = verify_decomposition(&dec);
        let center_ok = if balanced {
            r.barycenter_norm <= 1e-10
        } else {
            r.barycenter_norm >= 1e-3
        };
        if r.identity_max_entry <= 1e-10 && center_ok {
            return Ok(dec);
        }
    }
    Err(Error::RetryCapExceeded { attempts: ATTEMPTS })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::regular_simplex;
    use crate::geometry::polar_of_points;
    use crate::geometry::hull_distance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::harness::random_warp;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest, ProptestConfig};
    fn unit(d: usize, i: usize, s: f64) -> Vector {
        let mut v = Vector::zeros(d);
        v[i] = s;
        v
    }

    fn cross(d: usize) -> Vec<Vector> {
        (0..d).flat_map(|i| [unit(d, i, 1.0), unit(d, i, -1.0)]).collect()
    }

    fn random_polytope(d: usize, m: usize, rng: &mut ChaCha8Rng) -> HPolytope {
        let mut rows: Vec<(Vec<f64>, f64)> = (0..m)
            .map(|_| {
                let a: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                (a, rng.random_range(0.5..2.0))
            })
            .collect();
        for i in 0..d {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            rows.push((e.clone(), 3.0));
            e[i] = -1.0;
            rows.push((e, 3.0));
        }
        HPolytope::from_rows(d, rows).unwrap()
    }

    #[test]
    fn cross_polytope_weights_are_half() {
        let tol = Tolerances::default();
        for d in 1..=5 {
            let w = john_weights(&cross(d), &tol).unwrap();
            assert!(w.iter().all(|&c| (c - 0.5).abs() < 1e-12), "{w:?}");
        }
    }

    #[test]
    fn regular_simplex_weights() {
        let tol = Tolerances::default();
        for d in 2..=6 {
            let pts: Vec<Vector> = regular_simplex(d).into_iter().map(|v| v.normalize()).collect();
            // oracle: sum of w w^T over the simplex is (d+1)/d I
            let frame = pts.iter().fold(Matrix::zeros(d, d), |acc, w| acc + w * w.transpose());
            assert!((frame - Matrix::identity(d, d) * ((d + 1) as f64 / d as f64)).amax() < 1e-12);
            let w = john_weights(&pts, &tol).unwrap();
            let want = d as f64 / (d + 1) as f64;
            assert!(w.iter().all(|&c| (c - want).abs() < 1e-10), "{w:?}");
        }
    }

    #[test]
    fn weights_reject_non_decomposition() {
        let tol = Tolerances::default();
        let pts = vec![unit(2, 0, 1.0), unit(2, 1, 1.0), Vector::from_row_slice(&[0.6, 0.8])];
        assert!(matches!(john_weights(&pts, &tol), Err(Error::NoDecomposition { .. })));
        assert!(matches!(
            john_weights(&pts[..2], &tol),
            Err(Error::TooFewContacts { found: 2, needed: 3 })
        ));
    }

    #[test]
    fn verify_detects_perturbation() {
        let mut dec = ContactDecomposition {
            points: cross(3),
            weights: vec![0.5; 6],
            sources: (0..6).collect(),
        };
        let r = verify_decomposition(&dec);
        assert!(r.max_residual() < 1e-15 && r.min_weight == 0.5 && r.max_norm_error == 0.0);
        dec.weights[0] += 1e-3;
        let r = verify_decomposition(&dec);
        assert!((r.identity_max_entry - 1e-3).abs() < 1e-12);
        assert!(!r.passes(1e-6));
    }

    #[test]
    fn generator_gives_exact_decompositions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 2..=6 {
            let m = d * (d + 3);
            for balanced in [true, false] {
                let dec = random_decomposition(d, m, balanced, &mut rng).unwrap();
                let r = verify_decomposition(&dec);
                assert!(r.identity_max_entry <= 1e-10);
                assert!(r.trace_error <= 1e-9);
                if balanced {
                    assert!(r.barycenter_norm <= 1e-10);
                } else {
                    assert!(r.barycenter_norm >= 1e-3);
                }
            }
        }
    }

    #[test]
    fn cube_contacts_and_scaling() {
        let tol = Tolerances::default();
        let cube = HPolytope::cube(2, 1.0).unwrap();
        let pts = contact_points(&cube, tol.contact).unwrap();
        assert_eq!(pts.len(), 4);
        let n = normalize_position(&cube, &tol).unwrap();
        assert!((&n.map.matrix - Matrix::identity(2, 2)).amax() < 1e-8);
        assert!(n.map.shift.amax() < 1e-8);

        let big = HPolytope::cube(3, 3.0).unwrap();
        let n = normalize_position(&big, &tol).unwrap();
        assert!((&n.map.matrix - Matrix::identity(3, 3) * 3.0).amax() < 1e-7);
        assert_eq!(n.decomposition.len(), 6);
    }

    #[test]
    fn equilateral_triangle_contacts() {
        let tol = Tolerances::default();
        let rows = (0..3).map(|k| {
            let t = std::f64::consts::TAU * k as f64 / 3.0 + 0.4;
            (vec![t.cos(), t.sin()], 1.0)
        });
        let p = HPolytope::from_rows(2, rows).unwrap();
        let pts = contact_points(&p, tol.contact).unwrap();
        assert_eq!(pts.len(), 3);
        let n = normalize_position(&p, &tol).unwrap();
        for w in &n.decomposition.weights {
            assert!((w - 2.0 / 3.0).abs() < 1e-6);
        }
    }

    fn check_instance(n: &NormalizedInstance, tol: &Tolerances) {
        let d = n.original.dim;
        assert!(n.map.det().abs() > 1e-12);
        for h in &n.normalized.halfspaces {
            assert!(h.b >= 1.0 - 1e-8, "offset {}", h.b);
        }
        for &i in &n.contacts {
            let h = &n.normalized.halfspaces[i];
            assert!(h.b <= 1.0 + 1e-7);
            // the normal itself is the touching point
            assert!((h.a.dot(&h.a) - h.b).abs() <= 1e-7);
        }
        let r = verify_decomposition(&n.decomposition);
        assert!(r.passes(tol.decomposition), "{r:?}");

        // round trip back to the input
        let back = n.mapped_back().unwrap();
        for (g, h) in back.halfspaces.iter().zip(&n.original.halfspaces) {
            assert!((&g.a - &h.a).amax() < 1e-8 && (g.b - h.b).abs() < 1e-8);
        }

        // polar of the contacts lies in dB
        let polar = polar_of_points(&n.decomposition.points).unwrap();
        for v in polar.vertices(tol).unwrap().vertices {
            assert!(v.norm() <= d as f64 + 1e-6, "{}", v.norm());
        }
        // B/d inside the contact hull: every unit direction has support >= 1/d
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let u = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
            assert!(hull_distance(&n.decomposition.points, &(u / d as f64)) <= 1e-6);
        }
    }

    #[test]
    fn random_instances_satisfy_invariants() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for d in 2..=4 {
            for _ in 0..4 {
                let p = random_polytope(d, 2 * d + 2, &mut rng);
                let n = normalize_position(&p, &tol).unwrap();
                check_instance(&n, &tol);
            }
        }
    }

    #[test]
    fn solution_is_locally_maximal() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in 2..=3 {
            let p = random_polytope(d, 2 * d + 1, &mut rng);
            let e = inscribed_ellipsoid(&p, &tol).unwrap();
            let fits = |c: &Vector, a: &Matrix| {
                p.halfspaces
                    .iter()
                    .all(|h| h.a.dot(c) + (a * &h.a).norm() <= h.b + 1e-12)
            };
            assert!(fits(&e.center, &(&e.shape / (1.0 + 1e-6))));
            let det0 = e.shape.determinant();
            for _ in 0..d {
                let u = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
                let grow = Matrix::identity(d, d) + &u * u.transpose() * 1e-6;
                let a = &grow * &e.shape * &grow;
                assert!(!fits(&e.center, &a) || a.determinant() < det0);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn john_position_is_affine_invariant(d in 2usize..=4, seed in any::<u64>(), warp in any::<u64>()) {
            let tol = Tolerances::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_polytope(d, 2 * d + 2, &mut rng);
            let t = random_warp(d, warp);
            let q = p.affine_image(&t.matrix, &t.shift).unwrap();
            let (np, nq) = (normalize_position(&p, &tol).unwrap(), normalize_position(&q, &tol).unwrap());
            check_instance(&nq, &tol);
            prop_assert_eq!(&np.contacts, &nq.contacts);
            for (a, b) in np.normalized.halfspaces.iter().zip(&nq.normalized.halfspaces) {
                prop_assert!((a.b - b.b).abs() <= 1e-6 * a.b.max(1.0), "{} vs {}", a.b, b.b);
            }
        }
    }
}
