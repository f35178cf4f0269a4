use std::fmt;

use thiserror::Error;

/// Pipeline stage names, used to tag errors raised inside `select`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Normalize,
    DrSelect,
    BuildS1,
    RayHit,
    Caratheodory,
    Contract,
    Assemble,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Normalize => "normalize_position",
            Stage::DrSelect => "dr_select",
            Stage::BuildS1 => "build_s1",
            Stage::RayHit => "ray_hit_boundary",
            Stage::Caratheodory => "caratheodory_reduce",
            Stage::Contract => "contract_e1",
            Stage::Assemble => "assemble_subfamily",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("half-space normal has zero length")]
    ZeroNormal,
    #[error("point {index} is the origin; its polar constraint is vacuous")]
    ZeroPoint { index: usize },
    #[error("non-finite number in input")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{what} = {value} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("polytope is empty")]
    Empty,
    #[error("polytope is not full-dimensional")]
    Degenerate,
    #[error("simplex is degenerate")]
    DegenerateSimplex,
    #[error("ellipsoid is not centered at the origin (|c| = {norm:e})")]
    NotCentered { norm: f64 },
    #[error("ellipsoid shape is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("inscribed ellipsoid solver did not converge after {iterations} Newton steps")]
    NoConvergence { iterations: usize },
    #[error("computed ellipsoid overshoots half-space {index} by {excess:e}")]
    EllipsoidInfeasible { index: usize, excess: f64 },
    #[error("found {found} contact points, need at least {needed}")]
    TooFewContacts { found: usize, needed: usize },
    #[error("contact points admit no decomposition of the identity (residual {residual:e})")]
    NoDecomposition { residual: f64 },
    #[error("greedy step {step}: |Tw|^2 = {value} below required {required}")]
    NumericalBreakdown {
        step: usize,
        value: f64,
        required: f64,
    },
    #[error("no affine dependence among {support} supported vertices")]
    ReductionFailed { support: usize },
    #[error("boundary point is not antipodal to the inellipsoid center")]
    Misaligned,
    #[error("selected set has {size} points, more than 2d = {limit}")]
    SubfamilyTooLarge { size: usize, limit: usize },
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("random generation gave up after {attempts} attempts")]
    RetryCapExceeded { attempts: usize },
    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at(self, stage: Stage) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, with stage wrappers stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by the shape of the input rather than by numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self.root(),
            Error::ZeroNormal
                | Error::ZeroPoint { .. }
                | Error::NonFinite
                | Error::DimensionMismatch { .. }
                | Error::CapExceeded { .. }
                | Error::MalformedCertificate(_)
                | Error::MalformedInput(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
