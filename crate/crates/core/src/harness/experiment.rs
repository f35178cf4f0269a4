use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gen_affine_warp, gen_tangent_random, oracle_min_subfamily};
use crate::bounds::{check_certificate, explicit_bound};
use crate::config::{Tolerances, MAX_ORACLE_FACETS};
use crate::error::{Error, Result};
use crate::selection::{select_with, SelectOptions, Selector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    /// Tangent half-spaces of the unit ball.
    #[default]
    Tangent,
    /// Tangent instance pushed through a random affine warp.
    Warped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    pub facets: Vec<usize>,
    /// Seeds per `(d, m)` cell: `seed, seed + 1, ...`.
    pub trials: usize,
    pub seed: u64,
    pub generator: Generator,
    pub selector: Selector,
    pub tolerances: Tolerances,
    /// Run the exhaustive oracle where the caps allow it.
    pub oracle: bool,
}

impl ExperimentConfig {
    pub fn new(dims: Vec<usize>, facets: Vec<usize>, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            dims,
            facets,
            trials,
            seed,
            generator: Generator::default(),
            selector: Selector::default(),
            tolerances: Tolerances::default(),
            oracle: false,
        }
    }
}

/// One trial of the selection pipeline. Numeric fields are empty when the
/// pipeline failed before producing them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub d: usize,
    pub m: usize,
    pub seed: u64,
    pub generator: Generator,
    pub selector: Selector,
    /// `ok`, `check_failed` or `error`.
    pub status: String,
    pub g_size: Option<usize>,
    pub volume_f: Option<f64>,
    pub volume_g: Option<f64>,
    pub ratio: Option<f64>,
    pub explicit_bound: f64,
    pub lambda: Option<f64>,
    pub s1_volume: Option<f64>,
    /// `min_i <v_i, z_i> - sqrt((d - i + 1)/d)`.
    pub min_basis_slack: Option<f64>,
    pub oracle_ratio: Option<f64>,
    pub wall_ms: f64,
    pub message: String,
}

impl ExperimentRow {
    fn empty(d: usize, m: usize, seed: u64, cfg: &ExperimentConfig) -> Self {
        ExperimentRow {
            d,
            m,
            seed,
            generator: cfg.generator,
            selector: cfg.selector,
            status: "error".into(),
            g_size: None,
            volume_f: None,
            volume_g: None,
            ratio: None,
            explicit_bound: explicit_bound(d),
            lambda: None,
            s1_volume: None,
            min_basis_slack: None,
            oracle_ratio: None,
            wall_ms: 0.0,
            message: String::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Generates the instance for `(d, m, seed)`, selects, and re-checks the certificate.
pub fn run_trial(d: usize, m: usize, seed: u64, cfg: &ExperimentConfig) -> ExperimentRow {
    let start = Instant::now();
    let mut row = ExperimentRow::empty(d, m, seed, cfg);
    if let Err(e) = fill_row(&mut row, cfg) {
        row.status = "error".into();
        row.message = e.to_string();
    }
    row.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    row
}

fn fill_row(row: &mut ExperimentRow, cfg: &ExperimentConfig) -> Result<()> {
    let (d, m, seed) = (row.d, row.m, row.seed);
    let mut doc = gen_tangent_random(d, m, seed)?;
    if cfg.generator == Generator::Warped {
        doc = gen_affine_warp(&doc, seed.rotate_left(32))?;
    }
    let f = doc.to_polytope()?;
    let opts = SelectOptions {
        selector: cfg.selector,
        seed,
    };
    let cert = select_with(&f, &opts, &cfg.tolerances)?;
    row.g_size = Some(cert.g.len());
    row.volume_f = Some(cert.volume_f);
    row.volume_g = Some(cert.volume_g);
    row.ratio = Some(cert.ratio);
    row.lambda = Some(cert.lambda);
    row.s1_volume = Some(cert.s1_volume);
    row.min_basis_slack = Some(cert.basis.slacks().lower);
    if cfg.oracle && d <= 3 && m <= MAX_ORACLE_FACETS {
        row.oracle_ratio = oracle_min_subfamily(&f, 2 * d, &cfg.tolerances)?.ratio;
    }
    let report = check_certificate(&cert, &cfg.tolerances.checker())?;
    if report.passed {
        row.status = "ok".into();
    } else {
        row.status = "check_failed".into();
        row.message = report.failures().join(";");
    }
    Ok(())
}

/// Runs every `(d, m, seed)` cell in parallel; rows come back sorted by `(d, m, seed)`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    for &d in &cfg.dims {
        for &m in &cfg.facets {
            if m < d + 1 {
                return Err(Error::MalformedInput(format!(
                    "m = {m} is below d + 1 = {}",
                    d + 1
                )));
            }
        }
    }
    let mut tasks = Vec::new();
    for &d in &cfg.dims {
        for &m in &cfg.facets {
            for i in 0..cfg.trials as u64 {
                tasks.push((d, m, cfg.seed.wrapping_add(i)));
            }
        }
    }
    let mut rows: Vec<ExperimentRow> = tasks
        .par_iter()
        .map(|&(d, m, seed)| run_trial(d, m, seed, cfg))
        .collect();
    rows.sort_by_key(|r| (r.d, r.m, r.seed));
    Ok(rows)
}

/// CSV with a header row.
pub fn write_csv<W: Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
