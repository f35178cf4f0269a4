//! Acceptance suite. Runs with `harness = false` so the per-criterion lines
//! are always printed; the process exits non-zero if any criterion fails.

// negated comparisons below count NaN as a violation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::{E, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use helly_core::bounds::{check_certificate, explicit_bound, theorem_constant_scan};
use helly_core::geometry::{
    hull_distance, max_ellipsoid_in_simplex, polar_of_points, HPolytope, Matrix, Simplex, Vector,
};
use helly_core::harness::{gen_affine_warp, gen_cube, gen_tangent_random, oracle_min_subfamily};
use helly_core::john::{inscribed_ellipsoid, normalize_position, random_decomposition, ContactDecomposition};
use helly_core::selection::{dr_select, exact_moments, pivovarov_moments, select, Certificate};
use helly_core::Tolerances;

/// Outcome of one criterion: pass flag and a one-line summary.
struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            passed,
            detail: detail.into(),
        }
    }
}

/// Tracks the worst value of a quantity that must stay on one side of a limit.
struct Worst {
    value: f64,
    bad: usize,
}

impl Worst {
    fn new() -> Self {
        Worst {
            value: f64::NAN,
            bad: 0,
        }
    }

    /// Records `x` that must be `<= limit`.
    fn at_most(&mut self, x: f64, limit: f64) {
        if !(x <= limit) {
            self.bad += 1;
        }
        if self.value.is_nan() || x > self.value || x.is_nan() {
            self.value = x;
        }
    }

    /// Records `x` that must be `>= limit`.
    fn at_least(&mut self, x: f64, limit: f64) {
        if !(x >= limit) {
            self.bad += 1;
        }
        if self.value.is_nan() || x < self.value || x.is_nan() {
            self.value = x;
        }
    }
}

fn ln_factorial(d: usize) -> f64 {
    (1..=d).map(|k| (k as f64).ln()).sum()
}

fn factorial(d: usize) -> f64 {
    (1..=d).map(|k| k as f64).product()
}

/// `d^d (d+1)^((3d+1)/2) / sqrt(d!)`, evaluated directly.
fn bound_direct(d: usize) -> f64 {
    let df = d as f64;
    df.powi(d as i32) * (df + 1.0).powf((3.0 * df + 1.0) / 2.0) / factorial(d).sqrt()
}

/// Unit ball volume by the two-step recursion `k_d = 2 pi / d * k_(d-2)`.
fn ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * ball_volume(d - 2),
    }
}

/// `d! k_d / (d^(d/2) (d+1)^((d+1)/2))`.
fn inellipsoid_ratio(d: usize) -> f64 {
    let df = d as f64;
    factorial(d) * ball_volume(d) / (df.powf(df / 2.0) * (df + 1.0).powf((df + 1.0) / 2.0))
}

fn gaussian(d: usize, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn unit(d: usize, rng: &mut ChaCha8Rng) -> Vector {
    gaussian(d, rng).normalize()
}

fn det_volume(vertices: &[Vector]) -> f64 {
    let d = vertices.len() - 1;
    let edges: Vec<Vector> = vertices[1..].iter().map(|v| v - &vertices[0]).collect();
    Matrix::from_columns(&edges).determinant().abs() / factorial(d)
}

/// One pipeline run from criterion 1, kept for the per-run criteria.
struct Run {
    d: usize,
    m: usize,
    seed: u64,
    warped: bool,
    f: HPolytope,
    cert: Certificate,
    checker_passed: bool,
    failures: Vec<String>,
}

const RUNS_PER_DIM: usize = 200;

fn pipeline_runs() -> (Vec<Run>, Vec<String>, Duration) {
    let start = Instant::now();
    let mut tasks = Vec::new();
    for d in 2..=4usize {
        let sizes: Vec<usize> = (d + 2..=3 * d).collect();
        for i in 0..RUNS_PER_DIM {
            tasks.push((d, sizes[i % sizes.len()], i as u64, i % 2 == 1));
        }
    }
    let tol = Tolerances::default();
    let results: Vec<Result<Run, String>> = tasks
        .par_iter()
        .map(|&(d, m, seed, warped)| {
            let label = format!("d={d} m={m} seed={seed} warped={warped}");
            let mut doc = gen_tangent_random(d, m, seed).map_err(|e| format!("{label}: {e}"))?;
            if warped {
                doc = gen_affine_warp(&doc, seed.rotate_left(32)).map_err(|e| format!("{label}: {e}"))?;
            }
            let f = doc.to_polytope().map_err(|e| format!("{label}: {e}"))?;
            let cert = select(&f, &tol).map_err(|e| format!("{label}: select: {e}"))?;
            let report = check_certificate(&cert, &cert.tolerances.checker())
                .map_err(|e| format!("{label}: check: {e}"))?;
            Ok(Run {
                d,
                m,
                seed,
                warped,
                f,
                checker_passed: report.passed,
                failures: report.failures().iter().map(|s| s.to_string()).collect(),
                cert,
            })
        })
        .collect();
    let mut runs = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(run) => runs.push(run),
            Err(e) => errors.push(e),
        }
    }
    (runs, errors, start.elapsed())
}

fn criterion_1(runs: &[Run], errors: &[String], elapsed: Duration) -> Verdict {
    let mut bad = errors.to_vec();
    let mut worst = 0.0f64;
    for r in runs {
        let c = &r.cert;
        let d = r.d;
        let label = format!("d={d} m={} seed={} warped={}", r.m, r.seed, r.warped);
        let mut distinct = c.g.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if c.g.len() > 2 * d || distinct.len() != c.g.len() {
            bad.push(format!("{label}: |G| = {}", c.g.len()));
        }
        let subset = c.g.iter().zip(&c.g_halfspaces).all(|(&i, h)| {
            i < r.f.len() && (&r.f.halfspaces[i].a - &h.a).amax() == 0.0 && r.f.halfspaces[i].b == h.b
        });
        if !subset {
            bad.push(format!("{label}: G not a subfamily of F"));
        }
        let rel = c.ratio / bound_direct(d);
        worst = worst.max(rel);
        if !(c.ratio <= bound_direct(d)) {
            bad.push(format!("{label}: ratio {} above bound", c.ratio));
        }
        if !r.checker_passed {
            bad.push(format!("{label}: checker failed {:?}", r.failures));
        }
    }
    let limit = Duration::from_secs(300);
    if elapsed > limit {
        bad.push(format!("runtime {elapsed:?} above {limit:?}"));
    }
    let expected = 3 * RUNS_PER_DIM;
    if runs.len() + errors.len() != expected {
        bad.push(format!("{} runs, expected {expected}", runs.len() + errors.len()));
    }
    Verdict::new(
        bad.is_empty(),
        format!(
            "{} runs in {:.1}s, max ratio/bound {:.3e}, {} problems{}",
            runs.len(),
            elapsed.as_secs_f64(),
            worst,
            bad.len(),
            bad.first().map(|b| format!(" (first: {b})")).unwrap_or_default()
        ),
    )
}

/// Barycenter norm, identity max-entry and trace error, computed here.
fn residuals(dec: &ContactDecomposition) -> [f64; 3] {
    let d = dec.dim();
    let mut bary = Vector::zeros(d);
    let mut frame = Matrix::zeros(d, d);
    let mut total = 0.0;
    for (w, &c) in dec.points.iter().zip(&dec.weights) {
        bary += w * c;
        frame += w * w.transpose() * c;
        total += c;
    }
    [
        bary.norm(),
        (frame - Matrix::identity(d, d)).amax(),
        (total - d as f64).abs(),
    ]
}

fn criterion_2(runs: &[Run]) -> Verdict {
    let mut w = Worst::new();
    for r in runs {
        let res = residuals(&r.cert.instance.decomposition);
        w.at_most(res.into_iter().fold(0.0, f64::max), 1e-6);
    }
    Verdict::new(
        w.bad == 0 && !runs.is_empty(),
        format!("max decomposition residual {:.3e} over {} instances", w.value, runs.len()),
    )
}

fn criterion_3() -> Verdict {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut closed = Worst::new();
    let mut solver = Worst::new();
    let mut errors = 0;
    let mut count = 0;
    while count < 50 {
        let d = 2 + count % 3;
        let vertices: Vec<Vector> = (0..=d).map(|_| gaussian(d, &mut rng)).collect();
        let vol = det_volume(&vertices);
        if vol < 1e-3 {
            continue;
        }
        count += 1;
        let expected = inellipsoid_ratio(d);
        let s = match Simplex::new(vertices) {
            Ok(s) => s,
            Err(_) => {
                errors += 1;
                continue;
            }
        };
        match max_ellipsoid_in_simplex(&s) {
            Ok(e) => closed.at_most((e.volume() / vol / expected - 1.0).abs(), 1e-6),
            Err(_) => errors += 1,
        }
        let solved = HPolytope::new(d, s.facets()).and_then(|p| inscribed_ellipsoid(&p, &tol));
        match solved {
            Ok(e) => solver.at_most((e.volume() / vol / expected - 1.0).abs(), 1e-6),
            Err(_) => errors += 1,
        }
    }
    let d2 = inellipsoid_ratio(2);
    let d2_ok = (d2 - PI / (3.0 * 3f64.sqrt())).abs() < 1e-15 && (d2 - 0.604600).abs() < 5e-7;
    Verdict::new(
        closed.bad == 0 && solver.bad == 0 && errors == 0 && d2_ok,
        format!(
            "50 simplices: closed-form rel err {:.3e}, solver rel err {:.3e}, d=2 ratio {d2:.6}",
            closed.value, solver.value
        ),
    )
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut lower = [Worst::new(), Worst::new()];
    let mut tri = [Worst::new(), Worst::new()];
    let mut counts = [0usize; 2];
    let mut errors = 0;
    for trial in 0..400 {
        let d = 2 + trial % 5;
        let balanced = trial % 2 == 0;
        let k = usize::from(!balanced);
        let dec = match random_decomposition(d, d * (d + 3), balanced, &mut rng) {
            Ok(dec) => dec,
            Err(_) => {
                errors += 1;
                continue;
            }
        };
        let basis = match dr_select(&dec) {
            Ok(b) => b,
            Err(_) => {
                errors += 1;
                continue;
            }
        };
        counts[k] += 1;
        for i in 0..d {
            let target = (((d - i) as f64) / d as f64).sqrt();
            lower[k].at_least(basis.v[i].dot(&basis.z[i]) - target, -1e-9);
            for z in &basis.z[i + 1..] {
                tri[k].at_most(basis.v[i].dot(z).abs(), 1e-8);
            }
        }
    }
    let ok = errors == 0
        && counts.iter().all(|&c| c >= 200)
        && lower.iter().chain(&tri).all(|w| w.bad == 0);
    Verdict::new(
        ok,
        format!(
            "balanced {} / unbalanced {}: min slack {:.3e} / {:.3e}, off-span {:.3e} / {:.3e}, {errors} errors",
            counts[0], counts[1], lower[0].value, lower[1].value, tri[0].value, tri[1].value
        ),
    )
}

fn criterion_5(runs: &[Run]) -> Verdict {
    let mut lambda = Worst::new();
    let mut w = Worst::new();
    for r in runs {
        let d = r.d as f64;
        lambda.at_least(r.cert.lambda - 1.0 / (d + 1.0), -1e-9);
        w.at_least(r.cert.w.norm() - 1.0 / d, -1e-8);
    }
    Verdict::new(
        lambda.bad == 0 && w.bad == 0 && !runs.is_empty(),
        format!(
            "min lambda - 1/(d+1) {:.3e}, min |w| - 1/d {:.3e}",
            lambda.value, w.value
        ),
    )
}

fn criterion_6(runs: &[Run]) -> Verdict {
    const TOL: f64 = 1e-8;
    let tol = Tolerances::default();
    let mut e2_in_s2 = Worst::new();
    let mut s2_in_x = Worst::new();
    let mut g_is_polar = Worst::new();
    let mut polar_in_e2 = Worst::new();
    let mut errors = 0;
    for r in runs {
        let c = &r.cert;
        let d = r.d;
        let apex = if c.u.norm() > 1e-10 { c.w.clone() } else { Vector::zeros(d) };
        let mut s2 = vec![apex.clone()];
        s2.extend(c.basis.v.iter().cloned());
        match Simplex::new(s2) {
            Ok(s2) => {
                for h in s2.facets() {
                    e2_in_s2.at_most(c.e2.support(&h.a) - h.b, TOL);
                }
            }
            Err(_) => errors += 1,
        }
        s2_in_x.at_most(hull_distance(&c.x, &apex), TOL);
        for v in &c.basis.v {
            s2_in_x.at_most(hull_distance(&c.x, v), TOL);
        }
        // the selected half-spaces in John position are exactly {<x, y> <= 1}
        for (&gi, x) in c.g.iter().zip(&c.x) {
            let h = &c.instance.normalized.halfspaces[gi];
            g_is_polar.at_most((&h.a / h.b - x).amax(), TOL);
        }
        match polar_of_points(&c.x).and_then(|p| p.vertices(&tol)) {
            Ok(verts) => {
                for y in &verts.vertices {
                    polar_in_e2.at_most(c.e2.support(y) - 1.0, TOL);
                }
            }
            Err(_) => errors += 1,
        }
    }
    let ok = errors == 0 && [&e2_in_s2, &s2_in_x, &g_is_polar, &polar_in_e2].iter().all(|w| w.bad == 0);
    Verdict::new(
        ok,
        format!(
            "worst excess: E2 in S2 {:.3e}, S2 in conv X {:.3e}, G vs X* {:.3e}, X* in E2* {:.3e}, {errors} errors",
            e2_in_s2.value, s2_in_x.value, g_is_polar.value, polar_in_e2.value
        ),
    )
}

fn criterion_7(runs: &[Run]) -> Verdict {
    let mut threshold = Worst::new();
    let mut identity = Worst::new();
    for r in runs {
        let d = r.d;
        let df = d as f64;
        let mut vertices = vec![Vector::zeros(d)];
        vertices.extend(r.cert.basis.v.iter().cloned());
        let vol = det_volume(&vertices);
        let target = 1.0 / (factorial(d).sqrt() * df.powf(df / 2.0));
        threshold.at_least(vol - target, -1e-9);
        let product: f64 = r.cert.basis.v.iter().zip(&r.cert.basis.z).map(|(v, z)| v.dot(z)).product();
        identity.at_most((vol * factorial(d) / product - 1.0).abs(), 1e-9);
    }
    Verdict::new(
        threshold.bad == 0 && identity.bad == 0 && !runs.is_empty(),
        format!(
            "min vol(S1) - threshold {:.3e}, max product identity rel err {:.3e}",
            threshold.value, identity.value
        ),
    )
}

fn criterion_8() -> Verdict {
    let scan = theorem_constant_scan(50);
    let logs: Vec<f64> = (1..=50usize)
        .map(|d| {
            let df = d as f64;
            df * df.ln() + (3.0 * df + 1.0) / 2.0 * (df + 1.0).ln()
                - 0.5 * ln_factorial(d)
                - df
                - 2.0 * df * df.ln()
        })
        .collect();
    let argmax = logs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i + 1)
        .unwrap();
    let monotone = logs[1..].windows(2).all(|w| w[1] <= w[0]);
    let four_over_e = 4.0 / E;
    let ok = scan.argmax == 1
        && argmax == 1
        && (scan.constant - four_over_e).abs() < 1e-12
        && (logs[0].exp() - four_over_e).abs() < 1e-12
        && scan.non_increasing
        && monotone
        && (explicit_bound(2) - bound_direct(2)).abs() < 1e-10;
    Verdict::new(
        ok,
        format!(
            "max at d={} with constant {:.6} (4/e = {four_over_e:.6}), non-increasing from d=2: {monotone}",
            scan.argmax, scan.constant
        ),
    )
}

fn criterion_9() -> Verdict {
    let tol = Tolerances::default();
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    for d in [2usize, 3] {
        let cube = match gen_cube(d).and_then(|doc| doc.to_polytope()) {
            Ok(c) => c,
            Err(e) => return Verdict::new(false, format!("cube d={d}: {e}")),
        };
        match oracle_min_subfamily(&cube, 2 * d - 1, &tol) {
            Ok(r) => {
                ok &= r.bounded == 0 && r.best.is_none();
                notes.push(format!("d={d}: {} subfamilies, {} bounded", r.examined, r.bounded));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("d={d}: {e}"));
            }
        }
        match oracle_min_subfamily(&cube, 2 * d, &tol) {
            Ok(r) => ok &= r.best.as_ref().map(|b| b.len()) == Some(2 * d),
            Err(_) => ok = false,
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed <= Duration::from_secs(10);
    Verdict::new(ok, format!("{} in {:.2}s", notes.join(", "), elapsed.as_secs_f64()))
}

fn criterion_10() -> Verdict {
    let tol = Tolerances::default();
    let dec = match gen_cube(2)
        .and_then(|doc| doc.to_polytope())
        .and_then(|p| normalize_position(&p, &tol))
    {
        Ok(n) => n.decomposition,
        Err(e) => return Verdict::new(false, format!("cube normalization: {e}")),
    };
    let m = pivovarov_moments(&dec, 100_000, 10);
    let exact = exact_moments(&dec).ok();
    let mean_exact = 0.25;
    let rms_exact = 1.0 / (2.0 * 2f64.sqrt());
    let claimed = 1.0 / (factorial(2).sqrt() * 2.0);
    let enumerated_ok = exact.is_some_and(|(e1, e2)| {
        (e1 - mean_exact).abs() < 1e-12 && (e2.sqrt() - rms_exact).abs() < 1e-12
    });
    let mean_ok = (m.mean_volume - mean_exact).abs() <= 3.0 * m.se_volume;
    let rms_ok = (m.rms_volume - rms_exact).abs() <= 3.0 * m.se_rms;
    Verdict::new(
        enumerated_ok && mean_ok && rms_ok,
        format!(
            "E[vol] = {:.6} +- {:.1e} (exact 0.25), sqrt(E[vol^2]) = {:.6} +- {:.1e} (exact {rms_exact:.6}), claimed lower bound {claimed:.6}: E[vol] falls below it, the root mean square meets it",
            m.mean_volume, m.se_volume, m.rms_volume, m.se_rms
        ),
    )
}

fn criterion_11() -> Verdict {
    let tol = Tolerances::default();
    let bound = bound_direct(2);
    let results: Vec<Result<(f64, f64), String>> = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let m = 4 + (seed as usize) % 5;
            let f = gen_tangent_random(2, m, 1000 + seed)
                .and_then(|doc| doc.to_polytope())
                .map_err(|e| e.to_string())?;
            let cert = select(&f, &tol).map_err(|e| e.to_string())?;
            let oracle = oracle_min_subfamily(&f, 4, &tol).map_err(|e| e.to_string())?;
            let ratio = oracle.ratio.ok_or("oracle found no bounded subfamily")?;
            Ok((cert.ratio, ratio))
        })
        .collect();
    let mut errors = 0;
    let mut order = Worst::new();
    let mut worst_oracle = Worst::new();
    for r in results {
        match r {
            Ok((selected, oracle)) => {
                order.at_least(selected / oracle - 1.0, -1e-9);
                worst_oracle.at_most(oracle, bound);
            }
            Err(_) => errors += 1,
        }
    }
    Verdict::new(
        errors == 0 && order.bad == 0 && worst_oracle.bad == 0,
        format!(
            "50 instances: min select/oracle - 1 = {:.3e}, max oracle ratio {:.4} <= {bound:.4}, {errors} errors",
            order.value, worst_oracle.value
        ),
    )
}

fn criterion_12(runs: &[Run]) -> Verdict {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut decs: Vec<ContactDecomposition> =
        runs.iter().map(|r| r.cert.instance.decomposition.clone()).collect();
    for trial in 0..50 {
        let d = 2 + trial % 5;
        if let Ok(dec) = random_decomposition(d, d * (d + 3), true, &mut rng) {
            decs.push(dec);
        }
    }
    let results: Vec<Result<(f64, f64), String>> = decs
        .par_iter()
        .enumerate()
        .map(|(k, dec)| {
            let d = dec.dim();
            let verts = polar_of_points(&dec.points)
                .and_then(|p| p.vertices(&tol))
                .map_err(|e| e.to_string())?;
            let max_norm = verts.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
            let min_support = (0..1000)
                .map(|_| {
                    let u = unit(d, &mut rng);
                    dec.points.iter().map(|w| w.dot(&u)).fold(f64::NEG_INFINITY, f64::max)
                })
                .fold(f64::INFINITY, f64::min);
            Ok((max_norm - d as f64, min_support - 1.0 / d as f64))
        })
        .collect();
    let mut norms = Worst::new();
    let mut support = Worst::new();
    let mut errors = 0;
    for r in results {
        match r {
            Ok((n, s)) => {
                norms.at_most(n, 1e-6);
                support.at_least(s, -1e-6);
            }
            Err(_) => errors += 1,
        }
    }
    Verdict::new(
        errors == 0 && norms.bad == 0 && support.bad == 0,
        format!(
            "{} decompositions: max vertex norm - d {:.3e}, min support - 1/d {:.3e}, {errors} errors",
            decs.len(),
            norms.value,
            support.value
        ),
    )
}

fn main() -> ExitCode {
    let (runs, errors, elapsed) = pipeline_runs();
    let verdicts = [
        criterion_1(&runs, &errors, elapsed),
        criterion_2(&runs),
        criterion_3(),
        criterion_4(),
        criterion_5(&runs),
        criterion_6(&runs),
        criterion_7(&runs),
        criterion_8(),
        criterion_9(),
        criterion_10(),
        criterion_11(),
        criterion_12(&runs),
    ];
    let mut failed = 0;
    for (i, v) in verdicts.iter().enumerate() {
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2}: {tag}  {}", i + 1, v.detail);
        failed += usize::from(!v.passed);
    }
    println!("acceptance: {} of {} criteria passed", verdicts.len() - failed, verdicts.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
