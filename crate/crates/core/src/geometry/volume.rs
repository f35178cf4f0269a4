//! Exact volume by recursive pyramid decomposition over the face lattice.
//!
//! A k-face with apex `c` (its vertex centroid) has volume
//! `sum over (k-1)-subfaces F of dist(c, aff F) * vol(F) / k`.
//! Faces are identified by their vertex sets, read off the vertex/facet
//! incidence, and memoized so shared subfaces are measured once.

use std::collections::{HashMap, HashSet};

use itertools::Itertools;

use super::vertices::{check_body, vertex_incidence};
use super::{affine_basis, hyperplane_normal, HPolytope, HalfSpace, VPolytope, Vector};
use crate::config::Tolerances;
use crate::error::{Error, Result};

const RANK_TOL: f64 = 1e-9;

struct FaceWalker<'a> {
    points: &'a [Vector],
    tight: &'a [Vec<usize>],
    memo: HashMap<Vec<usize>, f64>,
}

impl FaceWalker<'_> {
    fn face_volume(&mut self, ids: &[usize], k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if let Some(&v) = self.memo.get(ids) {
            return v;
        }
        let vol = if k == 1 {
            // an edge: its length is the diameter of its vertex set
            ids.iter()
                .tuple_combinations()
                .map(|(&i, &j)| (&self.points[i] - &self.points[j]).norm())
                .fold(0.0, f64::max)
        } else {
            let apex = ids
                .iter()
                .fold(Vector::zeros(self.points[0].len()), |acc, &i| acc + &self.points[i])
                / ids.len() as f64;
            let facets: HashSet<usize> = ids.iter().flat_map(|&i| self.tight[i].iter().copied()).collect();
            let mut seen: HashSet<Vec<usize>> = HashSet::new();
            let mut total = 0.0;
            for f in facets.into_iter().sorted() {
                let sub: Vec<usize> = ids
                    .iter()
                    .copied()
                    .filter(|&i| self.tight[i].binary_search(&f).is_ok())
                    .collect();
                if sub.len() < k || sub.len() == ids.len() || seen.contains(&sub) {
                    continue;
                }
                let pts: Vec<&Vector> = sub.iter().map(|&i| &self.points[i]).collect();
                let basis = affine_basis(&pts, RANK_TOL);
                if basis.ncols() != k - 1 {
                    continue;
                }
                let offset = pts[0] - &apex;
                let along = &basis * (basis.transpose() * &offset);
                let dist = (offset - along).norm();
                let sub_vol = self.face_volume(&sub, k - 1);
                total += dist * sub_vol / k as f64;
                seen.insert(sub);
            }
            total
        };
        self.memo.insert(ids.to_vec(), vol);
        vol
    }
}

/// Volume of a full-dimensional polytope given its vertices and, per vertex,
/// the sorted indices of the facets through it.
pub fn volume_from_incidence(dim: usize, points: &[Vector], tight: &[Vec<usize>]) -> f64 {
    let mut walker = FaceWalker {
        points,
        tight,
        memo: HashMap::new(),
    };
    let all: Vec<usize> = (0..points.len()).collect();
    walker.face_volume(&all, dim)
}

pub fn volume_h(p: &HPolytope, tol: &Tolerances) -> Result<f64> {
    let inc = vertex_incidence(p, tol)?;
    Ok(volume_from_incidence(p.dim, &inc.points, &inc.tight))
}

/// Facets of `conv(points)` by brute force over d-subsets, each with the
/// sorted indices of the points on it. Facets are keyed by incident point
/// set and refitted through all of those points.
pub(crate) fn hull_facets(
    points: &[Vector],
    tol: &Tolerances,
) -> Result<Vec<(HalfSpace, Vec<usize>)>> {
    let d = points[0].len();
    let scale = points.iter().fold(1.0f64, |m, p| m.max(p.amax()));
    let eps = tol.incidence * scale;
    let mut facets: Vec<(HalfSpace, Vec<usize>)> = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    for subset in (0..points.len()).combinations(d) {
        let pts: Vec<&Vector> = subset.iter().map(|&i| &points[i]).collect();
        if d > 1 && affine_basis(&pts, RANK_TOL).ncols() != d - 1 {
            continue;
        }
        let n = hyperplane_normal(&pts);
        let b = n.dot(pts[0]);
        let above = points.iter().any(|p| n.dot(p) > b + eps);
        let below = points.iter().any(|p| n.dot(p) < b - eps);
        let sign = match (above, below) {
            (false, true) => 1.0,
            (true, false) => -1.0,
            _ => continue,
        };
        // refit through every point found on the plane until the set settles
        let mut a = n * sign;
        let mut b = b * sign;
        let mut incident: Vec<usize> = Vec::new();
        for _ in 0..3 {
            let next: Vec<usize> = (0..points.len())
                .filter(|&i| (a.dot(&points[i]) - b).abs() <= eps)
                .collect();
            if next == incident {
                break;
            }
            incident = next;
            let on: Vec<&Vector> = incident.iter().map(|&i| &points[i]).collect();
            let refit = hyperplane_normal(&on);
            a = if refit.dot(&a) < 0.0 { -refit } else { refit };
            b = on.iter().map(|p| a.dot(p)).sum::<f64>() / on.len() as f64;
        }
        if points.iter().any(|p| a.dot(p) > b + eps) || !seen.insert(incident.clone()) {
            continue;
        }
        // a facet's point set is never a proper subset of another facet's
        if let Some(slot) = facets.iter().position(|(_, other)| is_subset(other, &incident)) {
            facets[slot] = (HalfSpace { a, b }, incident);
        } else if !facets.iter().any(|(_, other)| is_subset(&incident, other)) {
            facets.push((HalfSpace { a, b }, incident));
        }
    }
    if facets.len() < d + 1 {
        return Err(Error::Degenerate);
    }
    Ok(facets)
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    small.iter().all(|i| big.binary_search(i).is_ok())
}

pub fn volume_v(v: &VPolytope, tol: &Tolerances) -> Result<f64> {
    if v.vertices.len() < v.dim + 1 {
        return Err(Error::Degenerate);
    }
    let facets = hull_facets(&v.vertices, tol)?;
    let mut tight = vec![Vec::new(); v.vertices.len()];
    for (f, (_, incident)) in facets.iter().enumerate() {
        for &i in incident {
            tight[i].push(f);
        }
    }
    let h = HPolytope::new(v.dim, facets.into_iter().map(|(h, _)| h).collect())?;
    check_body(&h)?;
    Ok(volume_from_incidence(v.dim, &v.vertices, &tight))
}
