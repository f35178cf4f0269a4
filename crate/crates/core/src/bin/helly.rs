//! `helly` command-line tool.
//!
//! Exit codes: 0 success, 1 a certificate check failed, 2 malformed input or
//! a cap was exceeded, 3 numeric failure.

use std::fs::File;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use helly_core::bounds::{check_certificate, theorem_constant_scan, BoundReport, CheckReport};
use helly_core::harness::{
    gen_affine_warp, gen_cube, gen_tangent_random, oracle_min_subfamily, read_json,
    run_experiment, write_csv, write_json, ExperimentConfig, Generator, InstanceDocument,
};
use helly_core::john::{normalize_position, ContactDecomposition};
use helly_core::selection::{
    exact_moments, pivovarov_moments, select_with, Certificate, Moments, SelectOptions, Selector,
};
use helly_core::{Error, Tolerances};

#[derive(Parser)]
#[command(name = "helly", version, about = "Quantitative Helly selection for half-space families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select at most 2d half-spaces and write a certificate.
    Select(SelectArgs),
    /// Re-check a certificate; exit 1 if any check fails.
    Verify(VerifyArgs),
    /// Generate an instance document.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Run the pipeline over a (d, m, seed) grid and write a CSV table.
    Experiment(ExperimentArgs),
    /// Moments of the random contact simplex volume.
    Pivovarov(PivovarovArgs),
    /// Print the explicit volume-ratio bound.
    Bound {
        #[arg(long)]
        d: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectorArg {
    Dr,
    Pivovarov,
}

impl From<SelectorArg> for Selector {
    fn from(s: SelectorArg) -> Self {
        match s {
            SelectorArg::Dr => Selector::Dr,
            SelectorArg::Pivovarov => Selector::Pivovarov,
        }
    }
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dr")]
    selector: SelectorArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiply every tolerance by this factor.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    /// Also run the exhaustive subfamily search and report its ratio on stderr.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra factor on the checker tolerances recorded in the certificate.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Subcommand)]
enum GenKind {
    /// The 2d facets of the cube [-1, 1]^d.
    Cube {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// m random tangent half-spaces of the unit ball.
    Tangent {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random affine image of an existing instance.
    Warp {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// Dimensions, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    d: Vec<usize>,
    /// Family sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Push each instance through a random affine map first.
    #[arg(long)]
    warp: bool,
    #[arg(long, value_enum, default_value = "dr")]
    selector: SelectorArg,
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    /// Add the exhaustive oracle ratio where d <= 3 and m <= 12.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PivovarovArgs {
    /// Instance to normalize; defaults to the cube of dimension --d.
    #[arg(long = "in", conflicts_with = "d")]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct PivovarovReport {
    dim: usize,
    contacts: usize,
    seed: u64,
    moments: Moments,
    /// Exact `E[vol]` when all draws can be enumerated.
    exact_mean_volume: Option<f64>,
    exact_mean_volume_sq: Option<f64>,
    /// Whether the Monte Carlo means lie within three standard errors of the exact values.
    mean_within_3se: Option<bool>,
    rms_within_3se: Option<bool>,
}

/// Failure with the exit code to report.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_input_error() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn tolerances(scale: f64) -> Result<Tolerances, Failure> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Failure {
            code: 2,
            message: format!("--tol-scale must be positive, got {scale}"),
        });
    }
    Ok(Tolerances::default().scaled(scale))
}

fn load_instance(path: &Path) -> Result<InstanceDocument, Failure> {
    let doc: InstanceDocument = read_json(path)?;
    doc.validate()?;
    Ok(doc)
}

fn cmd_select(a: SelectArgs) -> CmdResult {
    let tol = tolerances(a.tol_scale)?;
    let f = load_instance(&a.input)?.to_polytope()?;
    let opts = SelectOptions {
        selector: a.selector.into(),
        seed: a.seed,
    };
    let cert = select_with(&f, &opts, &tol)?;
    write_json(a.out.as_deref(), &cert)?;
    eprintln!(
        "selected {} of {} half-spaces, ratio {:.6e} <= bound {:.6e}",
        cert.g.len(),
        f.len(),
        cert.ratio,
        cert.bound
    );
    if a.oracle {
        let r = oracle_min_subfamily(&f, 2 * f.dim, &tol)?;
        match r.ratio {
            Some(best) => eprintln!("oracle: best ratio {best:.6e} over {} subfamilies", r.examined),
            None => eprintln!("oracle: no bounded subfamily of size <= {}", r.k),
        }
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    if !(a.tol_scale.is_finite() && a.tol_scale > 0.0) {
        return Err(Failure {
            code: 2,
            message: format!("--tol-scale must be positive, got {}", a.tol_scale),
        });
    }
    let cert: Certificate = read_json(&a.input)?;
    let tol = cert.tolerances.checker().scaled(a.tol_scale);
    let report: CheckReport = check_certificate(&cert, &tol)?;
    write_json(a.out.as_deref(), &report)?;
    if report.passed {
        eprintln!("all {} checks passed", report.checks.len());
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!("failed checks: {}", report.failures().join(", ")),
        })
    }
}

fn cmd_gen(kind: GenKind) -> CmdResult {
    let (doc, out) = match kind {
        GenKind::Cube { d, out } => (gen_cube(d)?, out),
        GenKind::Tangent { d, m, seed, out } => (gen_tangent_random(d, m, seed)?, out),
        GenKind::Warp { input, seed, out } => (gen_affine_warp(&load_instance(&input)?, seed)?, out),
    };
    write_json(out.as_deref(), &doc)?;
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> CmdResult {
    let mut cfg = ExperimentConfig::new(a.d, a.m, a.trials, a.seed);
    cfg.generator = if a.warp { Generator::Warped } else { Generator::Tangent };
    cfg.selector = a.selector.into();
    cfg.tolerances = tolerances(a.tol_scale)?;
    cfg.oracle = a.oracle;
    let rows = run_experiment(&cfg)?;
    match a.out.as_deref() {
        Some(p) if p.as_os_str() != "-" => write_csv(&rows, File::create(p).map_err(Error::from)?)?,
        _ => write_csv(&rows, io::stdout().lock())?,
    }
    let ok = rows.iter().filter(|r| r.is_ok()).count();
    let failed = rows.iter().filter(|r| r.status == "check_failed").count();
    eprintln!("{ok} of {} rows ok", rows.len());
    if failed > 0 {
        return Err(Failure {
            code: 1,
            message: format!("{failed} rows failed the certificate check"),
        });
    }
    if ok < rows.len() {
        return Err(Failure {
            code: 3,
            message: format!("{} rows hit a numeric failure", rows.len() - ok),
        });
    }
    Ok(())
}

fn decomposition_for(a: &PivovarovArgs, tol: &Tolerances) -> Result<ContactDecomposition, Failure> {
    let doc = match &a.input {
        Some(p) => load_instance(p)?,
        None => gen_cube(a.d)?,
    };
    Ok(normalize_position(&doc.to_polytope()?, tol)?.decomposition)
}

fn cmd_pivovarov(a: PivovarovArgs) -> CmdResult {
    let tol = tolerances(a.tol_scale)?;
    let dec = decomposition_for(&a, &tol)?;
    let moments = pivovarov_moments(&dec, a.trials, a.seed);
    let exact = exact_moments(&dec).ok();
    let report = PivovarovReport {
        dim: dec.dim(),
        contacts: dec.len(),
        seed: a.seed,
        moments,
        exact_mean_volume: exact.map(|e| e.0),
        exact_mean_volume_sq: exact.map(|e| e.1),
        mean_within_3se: exact.map(|e| (moments.mean_volume - e.0).abs() <= 3.0 * moments.se_volume),
        rms_within_3se: exact.map(|e| (moments.rms_volume - e.1.sqrt()).abs() <= 3.0 * moments.se_rms),
    };
    write_json(a.out.as_deref(), &report)?;
    Ok(())
}

fn cmd_bound(d: usize) -> CmdResult {
    if d == 0 {
        return Err(Failure {
            code: 2,
            message: "--d must be positive".into(),
        });
    }
    #[derive(Serialize)]
    struct Out {
        bound: BoundReport,
        constant_scan: helly_core::bounds::ConstantScan,
    }
    let out = Out {
        bound: BoundReport::new(d),
        constant_scan: theorem_constant_scan(50),
    };
    write_json(None, &out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Select(a) => cmd_select(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Gen { kind } => cmd_gen(kind),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Pivovarov(a) => cmd_pivovarov(a),
        Command::Bound { d } => cmd_bound(d),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
