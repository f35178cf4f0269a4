//! Selection of at most `2d` half-spaces whose intersection has volume within
//! `explicit_bound(d)` of the whole family, with a re-checkable certificate.
//!
//! Pipeline, all in John position: greedy basis `v_1..v_d`, simplex
//! `S1 = conv{o, v_i}` and its inellipsoid `E1` centered at `u`, the point `w`
//! where the ray from `o` along `-u` leaves the contact hull, a reduction of
//! `w` to at most `d` contacts, and the contraction of `E1` about `w` onto an
//! origin-centered `E2`. The selected half-spaces are the ones touching the
//! unit ball at the reduced contacts and at the `v_i`.

mod dr;
mod pivovarov;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use dr::{dr_select, trace_pick, triangular_frame, DrBasis, DrSlacks};
pub use pivovarov::{
    exact_moments, pivovarov_basis, pivovarov_moments, pivovarov_sample, pivovarov_threshold,
    Moments, RandomSimplex,
};

use crate::bounds::explicit_bound;
use crate::config::Tolerances;
use crate::error::{Error, Result, Stage};
use crate::geometry::{
    orthonormal_span, max_ellipsoid_in_simplex, serde_la, Ellipsoid, HPolytope, HalfSpace,
    LinearProgram, LpOutcome, Matrix, Relation, Simplex, Vector,
};
use crate::john::{normalize_position, NormalizedInstance};

/// Below this norm the inellipsoid center counts as the origin.
const CENTER_EPS: f64 = 1e-10;
/// Convex coefficients at or below this are treated as zero.
const COEFF_EPS: f64 = 1e-12;
/// Points closer than this are the same member of `X`.
const MERGE_EPS: f64 = 1e-9;
/// Sampling budget of the randomized selector.
const PIVOVAROV_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    /// Deterministic Dvoretzky-Rogers greedy basis.
    #[default]
    Dr,
    /// Random contacts drawn with probability `c_i / d`, resampled until the
    /// simplex volume reaches the greedy guarantee.
    Pivovarov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SelectOptions {
    pub selector: Selector,
    /// Seed for the randomized selector; ignored by the greedy one.
    pub seed: u64,
}

/// `S1`, its inellipsoid and the inellipsoid center.
#[derive(Debug, Clone)]
pub struct SimplexStage {
    pub simplex: Simplex,
    pub e1: Ellipsoid,
    pub u: Vector,
}

/// Exit point of a ray from the origin through a point hull.
#[derive(Debug, Clone)]
pub struct RayHit {
    pub t: f64,
    pub w: Vector,
    /// Convex coefficients over the hull points, a basic solution.
    pub coeffs: Vec<f64>,
}

/// Indices into the decomposition points and positive convex coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaratheodorySet {
    pub indices: Vec<usize>,
    pub coeffs: Vec<f64>,
}

/// Full transcript of one selection run, enough to re-verify every step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub version: String,
    pub selector: Selector,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub dim: usize,
    pub instance: NormalizedInstance,
    pub basis: DrBasis,
    #[serde(with = "serde_la::vectors")]
    pub s1: Vec<Vector>,
    pub s1_volume: f64,
    pub e1: Ellipsoid,
    #[serde(with = "serde_la::vector")]
    pub u: Vector,
    #[serde(with = "serde_la::vector")]
    pub direction: Vector,
    #[serde(with = "serde_la::vector")]
    pub w: Vector,
    pub caratheodory: CaratheodorySet,
    pub lambda: f64,
    pub e2: Ellipsoid,
    #[serde(with = "serde_la::vectors")]
    pub x: Vec<Vector>,
    /// Decomposition index of each member of `x`.
    pub x_sources: Vec<usize>,
    /// Indices into the input family, aligned with `x`.
    pub g: Vec<usize>,
    /// The selected half-spaces in input coordinates.
    pub g_halfspaces: Vec<HalfSpace>,
    pub volume_f: f64,
    pub volume_g: f64,
    pub ratio: f64,
    pub bound: f64,
}

/// `S1 = conv{o, v_1..v_d}` with its maximal inscribed ellipsoid.
pub fn build_s1(basis: &DrBasis) -> Result<SimplexStage> {
    let d = basis.dim();
    let mut vertices = vec![Vector::zeros(d)];
    vertices.extend(basis.v.iter().cloned());
    let simplex = Simplex::new(vertices)?;
    let e1 = max_ellipsoid_in_simplex(&simplex)?;
    let u = e1.center.clone();
    Ok(SimplexStage { simplex, e1, u })
}

/// Largest `t` with `t * dir` in `conv(points)`, by LP over `(mu, t)`.
pub fn ray_hit_boundary(points: &[Vector], dir: &Vector) -> Result<RayHit> {
    let d = dir.len();
    let n = points.len();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut lp = LinearProgram::maximize(c);
    lp.set_all_nonneg();
    for r in 0..d {
        let mut row: Vec<f64> = points.iter().map(|p| p[r]).collect();
        row.push(-dir[r]);
        lp.add(row, Relation::Eq, 0.0);
    }
    let mut row = vec![1.0; n];
    row.push(0.0);
    lp.add(row, Relation::Eq, 1.0);
    match lp.solve() {
        LpOutcome::Optimal(sol) => {
            let t = sol.x[n];
            let coeffs: Vec<f64> = sol.x[..n]
                .iter()
                .map(|&m| if m > COEFF_EPS { m } else { 0.0 })
                .collect();
            Ok(RayHit {
                t,
                w: dir * t,
                coeffs,
            })
        }
        LpOutcome::Infeasible => Err(Error::Infeasible),
        LpOutcome::Unbounded => Err(Error::Unbounded),
        LpOutcome::Stalled => Err(Error::NoConvergence { iterations: 0 }),
    }
}

/// Rewrites `w = sum coeffs_j vertices_j` using at most `d` vertices.
pub fn caratheodory_reduce(
    w: &Vector,
    vertices: &[Vector],
    coeffs: &[f64],
) -> Result<CaratheodorySet> {
    let d = w.len();
    let mut support: Vec<usize> = (0..vertices.len()).filter(|&j| coeffs[j] > COEFF_EPS).collect();
    let mut mu: Vec<f64> = coeffs.to_vec();
    while support.len() > d {
        let s = support.len();
        // homogeneous system [v_j; 1] alpha = 0
        let m = Matrix::from_fn(d + 1, s, |r, c| if r < d { vertices[support[c]][r] } else { 1.0 });
        let scale = m.amax().max(1.0);
        let alpha = null_vector(&m, 1e-9 * scale).ok_or(Error::ReductionFailed { support: s })?;
        if (&m * &alpha).amax() > 1e-8 * scale {
            return Err(Error::ReductionFailed { support: s });
        }
        let alpha = if alpha.iter().any(|&a| a > 0.0) { alpha } else { -alpha };
        // largest step keeping every coefficient non-negative
        let (drop, theta) = (0..s)
            .filter(|&i| alpha[i] > 0.0)
            .map(|i| (i, mu[support[i]] / alpha[i]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(Error::ReductionFailed { support: s })?;
        for i in 0..s {
            mu[support[i]] -= theta * alpha[i];
        }
        mu[support[drop]] = 0.0;
        support.retain(|&j| mu[j] > COEFF_EPS);
    }
    let total: f64 = support.iter().map(|&j| mu[j]).sum();
    Ok(CaratheodorySet {
        coeffs: support.iter().map(|&j| mu[j] / total).collect(),
        indices: support,
    })
}

/// Unit vector in the kernel of `m`, from the complement of its row space.
fn null_vector(m: &Matrix, rank_tol: f64) -> Option<Vector> {
    let s = m.ncols();
    let rows: Vec<Vector> = (0..m.nrows()).map(|r| m.row(r).transpose()).collect();
    let span = orthonormal_span(rows, rank_tol);
    if span.len() >= s {
        return None;
    }
    (0..s)
        .map(|j| {
            let mut e = Vector::zeros(s);
            e[j] = 1.0;
            for _ in 0..2 {
                for q in &span {
                    e -= q * q.dot(&e);
                }
            }
            e
        })
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .map(|e| e.normalize())
}

/// Homothety of `E1` about `w` with ratio `|w| / (|u| + |w|)`, which carries
/// the center `u` to the origin when `w` lies on the ray along `-u`.
pub fn contract_e1(e1: &Ellipsoid, u: &Vector, w: &Vector) -> Result<(Ellipsoid, f64)> {
    let un = u.norm();
    if un <= CENTER_EPS {
        return Ok((e1.clone(), 1.0));
    }
    let wn = w.norm();
    if wn == 0.0 || (w / wn + u / un).amax() > 1e-8 {
        return Err(Error::Misaligned);
    }
    let lambda = wn / (un + wn);
    let e2 = e1.contract(w, lambda);
    if e2.center.norm() > CENTER_EPS {
        return Err(Error::Misaligned);
    }
    Ok((e2, lambda))
}

/// Runs the whole pipeline with the greedy selector.
pub fn select(f: &HPolytope, tol: &Tolerances) -> Result<Certificate> {
    select_with(f, &SelectOptions::default(), tol)
}

pub fn select_with(f: &HPolytope, opts: &SelectOptions, tol: &Tolerances) -> Result<Certificate> {
    let d = f.dim;
    let instance = normalize_position(f, tol).map_err(|e| e.at(Stage::Normalize))?;
    let dec = &instance.decomposition;

    let basis = match opts.selector {
        Selector::Dr => dr_select(dec),
        Selector::Pivovarov => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            pivovarov_basis(dec, &mut rng, PIVOVAROV_ATTEMPTS)
        }
    }
    .map_err(|e| e.at(Stage::DrSelect))?;

    let stage = build_s1(&basis).map_err(|e| e.at(Stage::BuildS1))?;
    let s1_volume = stage.simplex.volume();
    let floor = pivovarov_threshold(d);
    if s1_volume < floor - tol.bound {
        return Err(Error::NumericalBreakdown {
            step: d,
            value: s1_volume,
            required: floor,
        }
        .at(Stage::BuildS1));
    }

    let u = stage.u.clone();
    let direction = if u.norm() > CENTER_EPS {
        -&u / u.norm()
    } else {
        basis.z[d - 1].clone()
    };
    let hit = ray_hit_boundary(&dec.points, &direction).map_err(|e| e.at(Stage::RayHit))?;
    let caratheodory = caratheodory_reduce(&hit.w, &dec.points, &hit.coeffs)
        .map_err(|e| e.at(Stage::Caratheodory))?;
    let (e2, lambda) = contract_e1(&stage.e1, &u, &hit.w).map_err(|e| e.at(Stage::Contract))?;

    // X = reduced contacts followed by the basis contacts, duplicates merged
    let mut x: Vec<Vector> = Vec::new();
    let mut x_sources: Vec<usize> = Vec::new();
    for &i in caratheodory.indices.iter().chain(&basis.sources) {
        let p = &dec.points[i];
        if !x_sources.contains(&i) && !x.iter().any(|q| (q - p).amax() <= MERGE_EPS) {
            x.push(p.clone());
            x_sources.push(i);
        }
    }
    if x.len() > 2 * d {
        return Err(Error::SubfamilyTooLarge {
            size: x.len(),
            limit: 2 * d,
        }
        .at(Stage::Assemble));
    }
    let g: Vec<usize> = x_sources.iter().map(|&i| dec.sources[i]).collect();
    let g_halfspaces = g.iter().map(|&i| f.halfspaces[i].clone()).collect();

    let volume_f = instance
        .normalized
        .volume(tol)
        .map_err(|e| e.at(Stage::Assemble))?;
    let volume_g = instance
        .normalized
        .subfamily(&g)
        .volume(tol)
        .map_err(|e| e.at(Stage::Assemble))?;

    Ok(Certificate {
        version: crate::VERSION.to_string(),
        selector: opts.selector,
        seed: opts.seed,
        tolerances: *tol,
        dim: d,
        s1: stage.simplex.vertices().to_vec(),
        s1_volume,
        e1: stage.e1,
        u,
        direction,
        w: hit.w,
        caratheodory,
        lambda,
        e2,
        x,
        x_sources,
        g,
        g_halfspaces,
        ratio: volume_g / volume_f,
        volume_f,
        volume_g,
        bound: explicit_bound(d),
        basis,
        instance,
    })
}

/// `(vol(S1) * d!, prod <v_i, z_i>)`; the two agree by triangularity.
pub fn simplex_volume_identity(basis: &DrBasis) -> (f64, f64) {
    let det = Matrix::from_columns(&basis.v).determinant().abs();
    (det, basis.diagonal().iter().product())
}
