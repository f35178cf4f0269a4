use std::collections::HashMap;

use itertools::Itertools;
use nalgebra::linalg::LU;

use super::lp::{LinearProgram, LpOutcome, Relation};
use super::{orthonormal_span, HPolytope, Matrix, VPolytope, Vector};
use crate::config::Tolerances;
use crate::error::{Error, Result};

/// Inner-ball radius below which a polytope counts as lower-dimensional.
const DEGENERATE_RADIUS: f64 = 1e-10;
/// Pivot size below which a d-subset of facets has no unique intersection point.
const SINGULAR_DET: f64 = 1e-10;
/// Rank and sign threshold for unit normals and edge directions.
const RAY_TOL: f64 = 1e-9;

/// Vertices together with the facets tight at each of them.
#[derive(Debug, Clone)]
pub struct VertexIncidence {
    pub points: Vec<Vector>,
    /// Sorted facet indices per vertex.
    pub tight: Vec<Vec<usize>>,
}

fn axis_lp(p: &HPolytope, axis: usize, sign: f64) -> LpOutcome {
    let mut c = vec![0.0; p.dim];
    c[axis] = sign;
    let mut lp = LinearProgram::maximize(c);
    for h in &p.halfspaces {
        lp.add(h.a.iter().copied().collect(), Relation::Le, h.b);
    }
    lp.solve()
}

/// Errors with `Empty` or `Unbounded` unless every `±e_i` LP has a finite optimum.
pub fn check_bounded(p: &HPolytope) -> Result<()> {
    for axis in 0..p.dim {
        for sign in [1.0, -1.0] {
            match axis_lp(p, axis, sign) {
                LpOutcome::Optimal(_) => {}
                LpOutcome::Infeasible => return Err(Error::Empty),
                LpOutcome::Unbounded => return Err(Error::Unbounded),
                LpOutcome::Stalled => return Err(Error::NoConvergence { iterations: 0 }),
            }
        }
    }
    Ok(())
}

/// Largest inscribed ball `(center, radius)`; the polytope must be bounded.
pub fn chebyshev_ball(p: &HPolytope) -> Result<(Vector, f64)> {
    let d = p.dim;
    let mut c = vec![0.0; d + 1];
    c[d] = 1.0;
    let mut lp = LinearProgram::maximize(c);
    lp.set_nonneg(d);
    for h in &p.halfspaces {
        let mut row: Vec<f64> = h.a.iter().copied().collect();
        row.push(1.0);
        lp.add(row, Relation::Le, h.b);
    }
    match lp.solve() {
        LpOutcome::Optimal(sol) => {
            let center = Vector::from_iterator(d, sol.x[..d].iter().copied());
            Ok((center, sol.x[d]))
        }
        LpOutcome::Infeasible => Err(Error::Empty),
        LpOutcome::Unbounded => Err(Error::Unbounded),
        LpOutcome::Stalled => Err(Error::NoConvergence { iterations: 0 }),
    }
}

/// Bounded, non-empty and full-dimensional, or the matching error.
pub(crate) fn check_body(p: &HPolytope) -> Result<(Vector, f64)> {
    check_bounded(p)?;
    let (center, r) = chebyshev_ball(p)?;
    if r < DEGENERATE_RADIUS {
        return Err(Error::Degenerate);
    }
    Ok((center, r))
}

fn incidence_tol(tol: &Tolerances, b: f64) -> f64 {
    tol.incidence * b.abs().max(1.0)
}

/// Vertices by walking the edge graph from one vertex found by ray shooting.
/// At each vertex the edge directions are the extreme rays of the cone cut
/// out by its tight facets; the next vertex along an edge comes from a ratio
/// test. Vertices are keyed by tight set and merged when within `dedupe`.
pub fn vertex_incidence(p: &HPolytope, tol: &Tolerances) -> Result<VertexIncidence> {
    let (center, _) = check_body(p)?;
    let first = first_vertex(p, center, tol).ok_or(Error::NoConvergence { iterations: 0 })?;
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut points = vec![first.0];
    let mut tight = vec![first.1.clone()];
    index.insert(first.1, 0);
    let mut stack = vec![0usize];
    while let Some(k) = stack.pop() {
        let x = points[k].clone();
        for ray in edge_rays(p, &tight[k]) {
            let Some(next) = ratio_test(p, &x, &ray, &tight[k]) else {
                continue;
            };
            let Some((y, t)) = settle(p, next, tol) else {
                continue;
            };
            if !index.contains_key(&t) {
                index.insert(t.clone(), points.len());
                stack.push(points.len());
                points.push(y);
                tight.push(t);
            }
        }
    }
    Ok(merge_close(points, tight, tol))
}

/// Facets within the incidence tolerance at `x`, sorted.
fn tight_set(p: &HPolytope, x: &Vector, tol: &Tolerances) -> Vec<usize> {
    p.halfspaces
        .iter()
        .enumerate()
        .filter(|(_, h)| h.excess(x).abs() <= incidence_tol(tol, h.b))
        .map(|(i, _)| i)
        .collect()
}

/// Snaps a boundary point onto the vertex of its tight facets; `None` unless
/// those facets pin down a single point.
fn settle(p: &HPolytope, x: Vector, tol: &Tolerances) -> Option<(Vector, Vec<usize>)> {
    let t = tight_set(p, &x, tol);
    let d = p.dim;
    if t.len() < d {
        return None;
    }
    let a = Matrix::from_fn(t.len(), d, |r, c| p.halfspaces[t[r]].a[c]);
    let b = Vector::from_iterator(t.len(), t.iter().map(|&i| p.halfspaces[i].b));
    let normal = a.transpose() * &a;
    let lu = LU::new(normal.clone());
    let pivot_min = (0..d).map(|i| lu.u()[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if pivot_min < SINGULAR_DET {
        return None;
    }
    let y = lu.solve(&(a.transpose() * b))?;
    let ok = p
        .halfspaces
        .iter()
        .all(|h| h.excess(&y) <= incidence_tol(tol, h.b));
    Some(if ok { (y, t) } else { (x, t) })
}

/// Shoots rays from the interior point, adding tight facets until they span.
fn first_vertex(p: &HPolytope, mut x: Vector, tol: &Tolerances) -> Option<(Vector, Vec<usize>)> {
    let d = p.dim;
    let mut t: Vec<usize> = Vec::new();
    for _ in 0..=p.len() {
        let normals: Vec<Vector> = t.iter().map(|&i| p.halfspaces[i].a.clone()).collect();
        let span = orthonormal_span(normals, RAY_TOL);
        if span.len() == d {
            return settle(p, x, tol);
        }
        let dir = complement_direction(&span, d)?;
        let hit = ratio_test(p, &x, &dir, &t).or_else(|| ratio_test(p, &x, &-&dir, &t))?;
        x = hit;
        t = tight_set(p, &x, tol);
    }
    None
}

/// Unit vector orthogonal to the orthonormal `span`, from the best-placed axis.
fn complement_direction(span: &[Vector], d: usize) -> Option<Vector> {
    let residual = |k: usize| {
        let mut e = Vector::zeros(d);
        e[k] = 1.0;
        for _ in 0..2 {
            for q in span {
                let c = q.dot(&e);
                e -= q * c;
            }
        }
        e
    };
    let best = (0..d).map(residual).max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
    let n = best.norm();
    (n > RAY_TOL).then(|| best / n)
}

/// Extreme rays of `{y : <a_i, y> <= 0, i in tight}`: null directions of
/// rank `d - 1` subsets that stay inside the cone.
fn edge_rays(p: &HPolytope, tight: &[usize]) -> Vec<Vector> {
    let d = p.dim;
    if d == 1 {
        return vec![Vector::from_element(1, 1.0), Vector::from_element(1, -1.0)];
    }
    let mut rays: Vec<Vector> = Vec::new();
    for subset in tight.iter().copied().combinations(d - 1) {
        let normals: Vec<Vector> = subset.iter().map(|&i| p.halfspaces[i].a.clone()).collect();
        let span = orthonormal_span(normals, RAY_TOL);
        if span.len() != d - 1 {
            continue;
        }
        let Some(y) = complement_direction(&span, d) else {
            continue;
        };
        for y in [y.clone(), -y] {
            let inside = tight.iter().all(|&i| p.halfspaces[i].a.dot(&y) <= RAY_TOL);
            if inside && !rays.iter().any(|r| (r - &y).amax() <= RAY_TOL) {
                rays.push(y);
            }
        }
    }
    rays
}

/// First boundary point along `x + s dir`, `s > 0`, ignoring the facets in `skip`.
fn ratio_test(p: &HPolytope, x: &Vector, dir: &Vector, skip: &[usize]) -> Option<Vector> {
    let mut best = f64::INFINITY;
    for (i, h) in p.halfspaces.iter().enumerate() {
        let rate = h.a.dot(dir);
        if rate > RAY_TOL && skip.binary_search(&i).is_err() {
            best = best.min((h.b - h.a.dot(x)).max(0.0) / rate);
        }
    }
    best.is_finite().then(|| x + dir * best)
}

/// Merges vertices closer than `dedupe`, uniting their tight sets.
fn merge_close(points: Vec<Vector>, tight: Vec<Vec<usize>>, tol: &Tolerances) -> VertexIncidence {
    let scale = points.iter().fold(1.0f64, |m, x| m.max(x.amax()));
    let eps = tol.dedupe * scale;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i][0].total_cmp(&points[j][0]));
    let mut out_points: Vec<Vector> = Vec::new();
    let mut out_tight: Vec<Vec<usize>> = Vec::new();
    // indices into the output, sorted by first coordinate
    let mut window: Vec<usize> = Vec::new();
    for i in order {
        let x = &points[i];
        window.retain(|&k| x[0] - out_points[k][0] <= eps);
        if let Some(&k) = window.iter().find(|&&k| (&out_points[k] - x).norm() <= eps) {
            let mut t = out_tight[k].clone();
            t.extend(&tight[i]);
            t.sort_unstable();
            t.dedup();
            out_tight[k] = t;
        } else {
            window.push(out_points.len());
            out_points.push(x.clone());
            out_tight.push(tight[i].clone());
        }
    }
    VertexIncidence {
        points: out_points,
        tight: out_tight,
    }
}

/// Brute force over all d-subsets of facets; the reference for the walk.
#[cfg(test)]
pub(crate) fn vertex_incidence_brute(p: &HPolytope, tol: &Tolerances) -> Result<VertexIncidence> {
    check_body(p)?;
    let d = p.dim;
    let mut points: Vec<Vector> = Vec::new();
    for subset in (0..p.len()).combinations(d) {
        let m = Matrix::from_fn(d, d, |r, c| p.halfspaces[subset[r]].a[c]);
        let rhs = Vector::from_iterator(d, subset.iter().map(|&i| p.halfspaces[i].b));
        let lu = LU::new(m);
        let pivot_min = (0..d)
            .map(|i| lu.u()[(i, i)].abs())
            .fold(f64::INFINITY, f64::min);
        if pivot_min < SINGULAR_DET {
            continue;
        }
        let Some(x) = lu.solve(&rhs) else { continue };
        if !p
            .halfspaces
            .iter()
            .all(|h| h.excess(&x) <= incidence_tol(tol, h.b))
        {
            continue;
        }
        let scale = x.amax().max(1.0);
        if !points
            .iter()
            .any(|q| (q - &x).norm() <= tol.dedupe * scale)
        {
            points.push(x);
        }
    }
    let tight = points
        .iter()
        .map(|x| {
            p.halfspaces
                .iter()
                .enumerate()
                .filter(|(_, h)| h.excess(x).abs() <= incidence_tol(tol, h.b))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    Ok(VertexIncidence { points, tight })
}

pub fn vertex_enumeration(p: &HPolytope, tol: &Tolerances) -> Result<VPolytope> {
    let inc = vertex_incidence(p, tol)?;
    Ok(VPolytope {
        dim: p.dim,
        vertices: inc.points,
    })
}

/// L1 distance from `target` to `conv(points)`, by LP.
pub fn hull_distance(points: &[Vector], target: &Vector) -> f64 {
    let d = target.len();
    let n = points.len();
    // variables: mu (n), e_plus (d), e_minus (d)
    let mut c = vec![0.0; n];
    c.extend(std::iter::repeat_n(1.0, 2 * d));
    let mut lp = LinearProgram::minimize(c);
    lp.set_all_nonneg();
    for r in 0..d {
        let mut row: Vec<f64> = points.iter().map(|p| p[r]).collect();
        row.extend((0..d).map(|k| if k == r { 1.0 } else { 0.0 }));
        row.extend((0..d).map(|k| if k == r { -1.0 } else { 0.0 }));
        lp.add(row, Relation::Eq, target[r]);
    }
    let mut row = vec![1.0; n];
    row.extend(std::iter::repeat_n(0.0, 2 * d));
    lp.add(row, Relation::Eq, 1.0);
    match lp.solve() {
        LpOutcome::Optimal(sol) => -sol.value,
        _ => f64::INFINITY,
    }
}

pub fn in_hull(points: &[Vector], target: &Vector, tol: f64) -> bool {
    hull_distance(points, target) <= tol
}
