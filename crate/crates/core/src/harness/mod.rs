//! Instance documents, generators, the exhaustive subfamily oracle and the
//! experiment runner behind the `helly` binary.

mod experiment;
mod generators;
mod oracle;

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use experiment::{
    run_experiment, run_trial, write_csv, ExperimentConfig, ExperimentRow, Generator,
};
pub use generators::{gen_affine_warp, gen_cube, gen_tangent_random, random_warp, warp_with};
pub use oracle::{oracle_min_subfamily, OracleResult};

use crate::error::{Error, Result};
use crate::geometry::{HPolytope, HalfSpace, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaceRecord {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Serialized family `{x : <a_i, x> <= b_i}`. Rows are stored as given, not normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub dim: usize,
    pub halfspaces: Vec<HalfSpaceRecord>,
    #[serde(default)]
    pub meta: InstanceMeta,
}

impl InstanceDocument {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::MalformedInput("dim must be positive".into()));
        }
        for (i, h) in self.halfspaces.iter().enumerate() {
            if h.a.len() != self.dim {
                return Err(Error::MalformedInput(format!(
                    "half-space {i} has {} coefficients, expected {}",
                    h.a.len(),
                    self.dim
                )));
            }
            if !h.b.is_finite() || h.a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(())
    }

    /// Validated polytope with normalized rows.
    pub fn to_polytope(&self) -> Result<HPolytope> {
        self.validate()?;
        HPolytope::from_rows(self.dim, self.halfspaces.iter().map(|h| (h.a.clone(), h.b)))
    }

    pub fn from_polytope(p: &HPolytope, meta: InstanceMeta) -> Self {
        InstanceDocument {
            dim: p.dim,
            halfspaces: p.halfspaces.iter().map(HalfSpaceRecord::from).collect(),
            meta,
        }
    }
}

impl From<&HalfSpace> for HalfSpaceRecord {
    fn from(h: &HalfSpace) -> Self {
        HalfSpaceRecord {
            a: h.a.iter().copied().collect(),
            b: h.b,
        }
    }
}

impl HalfSpaceRecord {
    pub fn normal(&self) -> Vector {
        Vector::from_row_slice(&self.a)
    }
}

/// Parses a JSON document from `path`, or from stdin when `path` is `-`.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(path)?
    };
    Ok(serde_json::from_str(&text)?)
}

/// Pretty JSON to `path`, or to stdout when `path` is `None` or `-`.
pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) if p.as_os_str() != "-" => fs::write(p, text)?,
        _ => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
