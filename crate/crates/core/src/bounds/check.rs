//! Re-verification of a certificate from its stored data alone.
//!
//! Every check recomputes its quantities with geometry primitives; nothing
//! derived by the producer is trusted beyond the witness being tested.

use serde::{Deserialize, Serialize};

use super::explicit_bound;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::geometry::{
    factorial, hull_distance, max_ellipsoid_in_simplex, polar_of_points, unit_ball_volume,
    HPolytope, Matrix, Simplex, Vector,
};
use crate::john::verify_decomposition;
use crate::selection::{pivovarov_threshold, Certificate, Selector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    /// Margin by which the inequality holds; negative when violated.
    pub slack: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub dim: usize,
    pub selector: Selector,
    pub tolerances: Tolerances,
    pub checks: Vec<CheckItem>,
    pub passed: bool,
}

impl CheckReport {
    pub fn get(&self, name: &str) -> Option<&CheckItem> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// Collects the slack of several sub-inequalities under one check name.
struct Group {
    name: &'static str,
    slack: f64,
    worst: String,
    error: Option<String>,
}

impl Group {
    fn new(name: &'static str) -> Self {
        Group {
            name,
            slack: f64::INFINITY,
            worst: String::new(),
            error: None,
        }
    }

    /// Records `value <= limit`.
    fn le(&mut self, what: &str, value: f64, limit: f64) {
        let s = limit - value;
        let s = if s.is_nan() { f64::NEG_INFINITY } else { s };
        if s < self.slack {
            self.slack = s;
            self.worst = format!("{what}: {value:.6e} <= {limit:.6e}");
        }
    }

    fn ge(&mut self, what: &str, value: f64, limit: f64) {
        let s = value - limit;
        let s = if s.is_nan() { f64::NEG_INFINITY } else { s };
        if s < self.slack {
            self.slack = s;
            self.worst = format!("{what}: {value:.6e} >= {limit:.6e}");
        }
    }

    fn fail(&mut self, why: impl Into<String>) {
        if self.error.is_none() {
            self.error = Some(why.into());
        }
    }

    fn finish(self) -> CheckItem {
        match self.error {
            Some(e) => CheckItem {
                name: self.name.into(),
                passed: false,
                slack: f64::MIN,
                detail: e,
            },
            None => CheckItem {
                name: self.name.into(),
                passed: self.slack >= 0.0,
                // JSON has no infinities
                slack: self.slack.clamp(f64::MIN, f64::MAX),
                detail: self.worst,
            },
        }
    }
}

fn skipped(name: &str, why: &str) -> CheckItem {
    CheckItem {
        name: name.into(),
        passed: true,
        slack: 0.0,
        detail: format!("skipped: {why}"),
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn malformed(what: impl Into<String>) -> Error {
    Error::MalformedCertificate(what.into())
}

/// Shape and index consistency; anything failing here is not checkable at all.
fn validate(c: &Certificate) -> Result<()> {
    let d = c.dim;
    let inst = &c.instance;
    let dec = &inst.decomposition;
    let vec_ok = |v: &Vector| v.len() == d && v.iter().all(|x| x.is_finite());
    if d == 0 || inst.original.dim != d || inst.normalized.dim != d {
        return Err(malformed("dimension fields disagree"));
    }
    if inst.normalized.len() != inst.original.len() {
        return Err(malformed("normalized family has a different size"));
    }
    if inst.map.matrix.shape() != (d, d) || !vec_ok(&inst.map.shift) {
        return Err(malformed("affine map has the wrong shape"));
    }
    if dec.points.len() != dec.weights.len() || dec.points.len() != dec.sources.len() {
        return Err(malformed("decomposition arrays differ in length"));
    }
    if dec.points.iter().any(|p| !vec_ok(p))
        || dec.sources.iter().any(|&s| s >= inst.original.len())
    {
        return Err(malformed("decomposition point or source out of range"));
    }
    let b = &c.basis;
    if b.z.len() != d || b.v.len() != d || b.sources.len() != d {
        return Err(malformed("basis must have d entries"));
    }
    if b.z.iter().chain(&b.v).any(|p| !vec_ok(p)) || b.sources.iter().any(|&s| s >= dec.len()) {
        return Err(malformed("basis vector or source out of range"));
    }
    if c.s1.len() != d + 1 || c.s1.iter().any(|p| !vec_ok(p)) {
        return Err(malformed("S1 must have d + 1 vertices"));
    }
    for e in [&c.e1, &c.e2] {
        if !vec_ok(&e.center) || e.shape.shape() != (d, d) {
            return Err(malformed("ellipsoid has the wrong shape"));
        }
    }
    if !vec_ok(&c.u) || !vec_ok(&c.direction) || !vec_ok(&c.w) {
        return Err(malformed("u, direction or w has the wrong length"));
    }
    let cs = &c.caratheodory;
    if cs.indices.len() != cs.coeffs.len() || cs.indices.iter().any(|&i| i >= dec.len()) {
        return Err(malformed("reduction indices out of range"));
    }
    if c.x.len() != c.x_sources.len()
        || c.x.len() != c.g.len()
        || c.x.len() != c.g_halfspaces.len()
        || c.x.iter().any(|p| !vec_ok(p))
    {
        return Err(malformed("X, its sources and G differ in length"));
    }
    if c.x_sources.iter().any(|&i| i >= dec.len()) || c.g.iter().any(|&i| i >= inst.original.len()) {
        return Err(malformed("X or G index out of range"));
    }
    if c.g_halfspaces.iter().any(|h| h.a.len() != d) {
        return Err(malformed("G half-space of the wrong dimension"));
    }
    Ok(())
}

/// Re-checks every inequality of the construction. Structural problems are
/// errors; failed inequalities are reported item by item.
pub fn check_certificate(c: &Certificate, tol: &Tolerances) -> Result<CheckReport> {
    validate(c)?;
    let d = c.dim;
    let df = d as f64;
    let inst = &c.instance;
    let dec = &inst.decomposition;
    let mut checks = Vec::new();

    // normalized family recomputed from the input and the stored map
    let renormalized: Option<HPolytope> = inst
        .original
        .halfspaces
        .iter()
        .map(|h| h.pull_back(&inst.map.matrix, &inst.map.shift).ok())
        .collect::<Option<Vec<_>>>()
        .and_then(|hs| HPolytope::new(d, hs).ok());

    // decomposition of the identity
    let mut g = Group::new("decomposition");
    let r = verify_decomposition(dec);
    g.le("barycenter norm", r.barycenter_norm, tol.decomposition);
    g.le("identity max entry", r.identity_max_entry, tol.decomposition);
    g.le("weight sum - d", r.trace_error, tol.decomposition);
    g.ge("min weight", r.min_weight, f64::MIN_POSITIVE);
    g.le("unit norm error", r.max_norm_error, tol.feasibility);
    checks.push(g.finish());

    // John position and contacts
    let mut g = Group::new("contacts");
    g.ge("|det map|", inst.map.det().abs(), 1e-12);
    match &renormalized {
        None => g.fail("stored map does not carry the input to a valid family"),
        Some(p) => {
            for (i, (h, s)) in p.halfspaces.iter().zip(&inst.normalized.halfspaces).enumerate() {
                g.le(&format!("normalized half-space {i} drift"), (&h.a - &s.a).amax().max((h.b - s.b).abs()), tol.feasibility);
                g.ge(&format!("offset {i} (ball inside)"), h.b, 1.0 - tol.feasibility);
            }
            for (k, (w, &src)) in dec.points.iter().zip(&dec.sources).enumerate() {
                let h = &p.halfspaces[src];
                g.le(&format!("contact {k} normal"), (&h.a - w).amax(), tol.feasibility);
                g.le(&format!("contact {k} offset"), h.b, 1.0 + tol.contact);
            }
        }
    }
    checks.push(g.finish());

    // inellipsoid of S1
    let mut g = Group::new("s1_inellipsoid");
    g.le("S1 apex", c.s1[0].amax(), 0.0);
    for (i, v) in c.basis.v.iter().enumerate() {
        g.le(&format!("S1 vertex {}", i + 1), (&c.s1[i + 1] - v).amax(), 0.0);
    }
    let fresh_e1 = Simplex::new(c.s1.clone()).and_then(|s| max_ellipsoid_in_simplex(&s));
    match &fresh_e1 {
        Err(e) => g.fail(format!("S1 rejected: {e}")),
        Ok(e1) => {
            g.le("E1 center", (&e1.center - &c.e1.center).amax(), tol.containment);
            g.le("E1 shape", (e1.gram() - c.e1.gram()).amax(), tol.containment);
            g.le("u = E1 center", (&c.u - &e1.center).amax(), tol.containment);
        }
    }
    // later steps build on the recomputed inellipsoid, not the stored one
    let e1 = fresh_e1.unwrap_or_else(|_| c.e1.clone());
    checks.push(g.finish());

    // greedy basis
    if c.selector == Selector::Pivovarov {
        checks.push(skipped("greedy_basis", "randomized selector carries no greedy bounds"));
    } else {
        let mut g = Group::new("greedy_basis");
        let s = c.basis.slacks();
        g.le("orthonormality", s.orthonormality, tol.bound);
        g.le("triangularity", s.triangularity, tol.feasibility);
        g.ge("lower bound slack", s.lower, -tol.bound);
        g.ge("upper bound slack", s.upper, -tol.bound);
        for (i, (v, &src)) in c.basis.v.iter().zip(&c.basis.sources).enumerate() {
            g.le(&format!("v_{} is a contact", i + 1), (v - &dec.points[src]).amax(), 0.0);
        }
        checks.push(g.finish());
    }

    // exit point of the ray
    let mut g = Group::new("w_norm");
    let wn = c.w.norm();
    g.ge("|w|", wn, 1.0 / df - tol.feasibility);
    let un = c.u.norm();
    if un > 1e-10 {
        g.le("direction = -u/|u|", (&c.direction + &c.u / un).amax(), tol.feasibility);
    }
    g.le("|direction| - 1", (c.direction.norm() - 1.0).abs(), tol.feasibility);
    g.le("w on ray", (&c.w - &c.direction * c.w.dot(&c.direction)).amax(), tol.feasibility);
    g.le("w in contact hull", hull_distance(&dec.points, &c.w), tol.feasibility);
    let beyond = &c.w * (1.0 + 1e-6);
    g.ge("(1 + 1e-6) w outside hull", hull_distance(&dec.points, &beyond), f64::MIN_POSITIVE);
    checks.push(g.finish());

    // reduction of w
    let mut g = Group::new("caratheodory");
    let cs = &c.caratheodory;
    g.le("support size", cs.indices.len() as f64, df);
    g.ge("min coefficient", cs.coeffs.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
    g.le("coefficient sum - 1", (cs.coeffs.iter().sum::<f64>() - 1.0).abs(), tol.feasibility);
    let back = cs
        .indices
        .iter()
        .zip(&cs.coeffs)
        .fold(Vector::zeros(d), |acc, (&i, &m)| acc + &dec.points[i] * m);
    g.le("reconstruction of w", (back - &c.w).amax(), tol.feasibility);
    checks.push(g.finish());

    // contraction
    let mut g = Group::new("contraction");
    let lambda = if un > 1e-10 { wn / (un + wn) } else { 1.0 };
    g.le("lambda formula", (c.lambda - lambda).abs(), tol.bound);
    g.ge("lambda", c.lambda, 1.0 / (df + 1.0) - tol.bound);
    let e2 = e1.contract(&c.w, lambda);
    g.le("E2 center", (&e2.center - &c.e2.center).amax(), tol.containment);
    g.le("E2 shape", (&e2.shape - &c.e2.shape).amax(), tol.containment);
    g.le("E2 centered", c.e2.center.norm(), tol.containment);
    checks.push(g.finish());

    // E2 in S2 in conv X
    let mut g = Group::new("containment");
    let mut s2 = vec![if un > 1e-10 { c.w.clone() } else { Vector::zeros(d) }];
    s2.extend(c.basis.v.iter().cloned());
    match Simplex::new(s2) {
        Err(e) => g.fail(format!("S2 rejected: {e}")),
        Ok(s2) => {
            for (j, h) in s2.facets().iter().enumerate() {
                g.le(&format!("E2 support on S2 facet {j}"), c.e2.support(&h.a), h.b + tol.containment);
            }
        }
    }
    g.le("w in conv X", hull_distance(&c.x, &c.w), tol.containment);
    for (i, v) in c.basis.v.iter().enumerate() {
        let gap = c.x.iter().map(|x| (x - v).amax()).fold(f64::INFINITY, f64::min);
        g.le(&format!("v_{} in X", i + 1), gap, tol.containment);
    }
    checks.push(g.finish());

    // X* inside the polar of E2
    let mut g = Group::new("polar_containment");
    let polar = polar_of_points(&c.x).and_then(|p| Ok((p.vertices(tol)?, p)));
    let mut volume_x_polar = f64::NAN;
    match &polar {
        Err(e) => g.fail(format!("X* rejected: {e}")),
        Ok((verts, p)) => {
            for (j, y) in verts.vertices.iter().enumerate() {
                g.le(&format!("E2 support at X* vertex {j}"), c.e2.support(y), 1.0 + tol.containment);
            }
            match p.volume(tol) {
                Ok(v) => volume_x_polar = v,
                Err(e) => g.fail(format!("vol(X*) failed: {e}")),
            }
        }
    }
    checks.push(g.finish());

    // simplex volume
    let mut g = Group::new("simplex_volume");
    let v_mat = Matrix::from_columns(&c.basis.v);
    let det = v_mat.determinant().abs();
    let vol_s1 = det / factorial(d);
    g.ge("vol(S1)", vol_s1, pivovarov_threshold(d) - tol.bound);
    g.le("stored vol(S1)", rel_gap(vol_s1, c.s1_volume), tol.bound);
    let prod: f64 = c.basis.diagonal().iter().product();
    g.le("vol(S1) d! = prod <v_i, z_i>", rel_gap(det, prod), tol.bound);
    checks.push(g.finish());

    // volumes from scratch
    let vol_f = renormalized
        .as_ref()
        .ok_or_else(|| "no valid normalized family".to_string())
        .and_then(|p| p.volume(tol).map_err(|e| e.to_string()));
    let vol_g = renormalized
        .as_ref()
        .ok_or_else(|| "no valid normalized family".to_string())
        .and_then(|p| p.subfamily(&c.g).volume(tol).map_err(|e| e.to_string()));

    // chain of estimates
    let mut g = Group::new("volume_chain");
    let bound = explicit_bound(d);
    match &vol_f {
        Err(e) => g.fail(format!("vol(F) failed: {e}")),
        Ok(vf) => {
            let kappa = unit_ball_volume(d);
            let e2_polar = kappa / c.e2.volume();
            let via_lambda = (df + 1.0).powi(d as i32) * kappa / e1.volume();
            let closed = df.powf(df / 2.0) * (df + 1.0).powf((3.0 * df + 1.0) / 2.0) / (factorial(d) * vol_s1);
            let rel = 1.0 + tol.containment;
            g.le("vol(X*)/vol(F) vs vol(E2*)/vol(B)", volume_x_polar / vf, e2_polar * rel);
            g.le("vol(B)/vol(E2) vs (d+1)^d vol(B)/vol(E1)", e2_polar, via_lambda * rel);
            g.le("(d+1)^d vol(B)/vol(E1) vs closed form", via_lambda, closed * rel);
            g.le("closed form vs bound", closed, bound * (1.0 + tol.bound));
        }
    }
    checks.push(g.finish());

    // final ratio
    let mut g = Group::new("ratio_bound");
    match (&vol_f, &vol_g) {
        (Ok(vf), Ok(vg)) => {
            let ratio = vg / vf;
            g.le("vol(G)/vol(F)", ratio, bound * (1.0 + tol.bound));
            g.le("stored ratio", rel_gap(ratio, c.ratio), tol.containment);
            g.le("stored bound", rel_gap(bound, c.bound), tol.bound);
        }
        (Err(e), _) | (_, Err(e)) => g.fail(format!("volume failed: {e}")),
    }
    checks.push(g.finish());

    // |X| <= 2d
    let mut g = Group::new("card_x");
    g.le("|X|", c.x.len() as f64, 2.0 * df);
    let mut expected: Vec<usize> = Vec::new();
    for &i in cs.indices.iter().chain(&c.basis.sources) {
        if !expected.contains(&i) {
            expected.push(i);
        }
    }
    for (k, (x, &src)) in c.x.iter().zip(&c.x_sources).enumerate() {
        g.le(&format!("x_{k} is its contact"), (x - &dec.points[src]).amax(), 0.0);
    }
    for i in &expected {
        let present = c.x_sources.contains(i)
            || c.x.iter().any(|x| (x - &dec.points[*i]).amax() <= 1e-9);
        g.ge(&format!("contact {i} kept in X"), if present { 1.0 } else { 0.0 }, 1.0);
    }
    for (a, &i) in c.x_sources.iter().enumerate() {
        if c.x_sources[..a].contains(&i) {
            g.fail(format!("contact {i} appears twice in X"));
        }
    }
    checks.push(g.finish());

    // G is a subfamily of F
    let mut g = Group::new("g_subset_f");
    for (k, ((h, &i), &src)) in c.g_halfspaces.iter().zip(&c.g).zip(&c.x_sources).enumerate() {
        let f = &inst.original.halfspaces[i];
        g.le(&format!("G member {k} equals F member {i}"), (&h.a - &f.a).amax().max((h.b - f.b).abs()), 0.0);
        g.le(&format!("G member {k} source"), (dec.sources[src] != i) as u8 as f64, 0.0);
        if let Some(p) = &renormalized {
            let n = &p.halfspaces[i];
            g.le(&format!("G member {k} supports B at x_{k}"), (&n.a - &c.x[k]).amax(), tol.feasibility);
            g.le(&format!("G member {k} tangent"), n.b, 1.0 + tol.contact);
        }
    }
    checks.push(g.finish());

    let passed = checks.iter().all(|c| c.passed);
    Ok(CheckReport {
        dim: d,
        selector: c.selector,
        tolerances: *tol,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::{select, select_with, SelectOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_instance(d: usize, m: usize, seed: u64) -> HPolytope {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let rows: Vec<(Vec<f64>, f64)> = (0..m)
                .map(|_| {
                    let a = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    (a, rng.random_range(0.8..1.2))
                })
                .collect();
            let p = HPolytope::from_rows(d, rows).unwrap();
            if crate::geometry::check_bounded(&p).is_ok() {
                return p;
            }
        }
    }

    fn base() -> Certificate {
        select(&random_instance(3, 8, 77), &Tolerances::default()).unwrap()
    }

    fn failing(c: &Certificate) -> Vec<String> {
        let r = check_certificate(c, &Tolerances::default().checker()).unwrap();
        r.failures().into_iter().map(String::from).collect()
    }

    #[test]
    fn honest_certificates_pass() {
        let tol = Tolerances::default();
        for d in 1..=4 {
            let cert = select(&HPolytope::cube(d, 1.0).unwrap(), &tol).unwrap();
            let r = check_certificate(&cert, &tol.checker()).unwrap();
            assert!(r.passed, "{:?}", r.failures());
            assert_eq!(r.checks.len(), 14);
        }
        for seed in 0..6 {
            let d = 2 + seed as usize % 3;
            let cert = select(&random_instance(d, 2 * d + 1, seed), &tol).unwrap();
            let r = check_certificate(&cert, &tol.checker()).unwrap();
            assert!(r.passed, "{:?}", r.failures());
        }
    }

    #[test]
    fn randomized_selector_skips_greedy_bounds() {
        let tol = Tolerances::default();
        let opts = SelectOptions { selector: Selector::Pivovarov, seed: 3 };
        let cert = select_with(&random_instance(3, 8, 5), &opts, &tol).unwrap();
        let r = check_certificate(&cert, &tol.checker()).unwrap();
        assert!(r.passed, "{:?}", r.failures());
        assert!(r.get("greedy_basis").unwrap().detail.starts_with("skipped"));
    }

    /// Each single-witness corruption flips exactly its own check.
    #[test]
    fn single_field_faults_are_isolated() {
        let d = 3.0;
        let cases: Vec<(&str, Box<dyn Fn(&mut Certificate)>)> = vec![
            ("contraction", Box::new(move |c| c.lambda = 1.0 / (d + 2.0))),
            ("decomposition", Box::new(|c| c.instance.decomposition.weights[0] += 1e-3)),
            ("ratio_bound", Box::new(|c| c.ratio *= 1.01)),
            ("ratio_bound", Box::new(|c| c.bound *= 2.0)),
            ("simplex_volume", Box::new(|c| c.s1_volume *= 1.01)),
            ("g_subset_f", Box::new(|c| c.g_halfspaces[0].b += 1e-3)),
            ("caratheodory", Box::new(|c| c.caratheodory.coeffs[0] += 1e-3)),
            ("contacts", Box::new(|c| c.instance.normalized.halfspaces[0].b += 1e-3)),
            ("s1_inellipsoid", Box::new(|c| c.e1.center[0] += 1e-3)),
        ];
        for (expect, corrupt) in cases {
            let mut c = base();
            corrupt(&mut c);
            assert_eq!(failing(&c), vec![expect.to_string()]);
        }
    }

    /// Shared witnesses flip at least their own check.
    #[test]
    fn shared_field_faults_are_detected() {
        let cases: Vec<(&str, Box<dyn Fn(&mut Certificate)>)> = vec![
            ("contraction", Box::new(|c| c.e2.shape *= 1.5)),
            ("containment", Box::new(|c| c.e2.shape *= 1.5)),
            ("polar_containment", Box::new(|c| c.e2.shape *= 5.0)),
            ("greedy_basis", Box::new(|c| c.basis.z.swap(0, 1))),
            ("w_norm", Box::new(|c| c.w *= 0.5)),
            ("card_x", Box::new(|c| {
                let extra = c.instance.decomposition.len() - 1;
                c.x.push(c.instance.decomposition.points[extra].clone());
                c.x_sources.push(extra);
                c.g.push(c.instance.decomposition.sources[extra]);
                c.g_halfspaces.push(c.instance.original.halfspaces[c.instance.decomposition.sources[extra]].clone());
                while c.x.len() <= 6 {
                    c.x.push(c.x[0].clone());
                    c.x_sources.push(c.x_sources[0]);
                    c.g.push(c.g[0]);
                    c.g_halfspaces.push(c.g_halfspaces[0].clone());
                }
            })),
        ];
        for (expect, corrupt) in cases {
            let mut c = base();
            corrupt(&mut c);
            let f = failing(&c);
            assert!(f.iter().any(|n| n == expect), "{expect} not in {f:?}");
        }
    }

    #[test]
    fn structural_damage_is_an_error() {
        let mut c = base();
        c.basis.v.pop();
        assert!(matches!(
            check_certificate(&c, &Tolerances::default()),
            Err(Error::MalformedCertificate(_))
        ));
        let mut c = base();
        c.g[0] = 999;
        assert!(matches!(
            check_certificate(&c, &Tolerances::default()),
            Err(Error::MalformedCertificate(_))
        ));
    }
}
