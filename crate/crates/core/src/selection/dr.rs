//! Dvoretzky-Rogers greedy selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{serde_la, Matrix, Vector};
use crate::john::ContactDecomposition;

/// Slack allowed on the trace claim before a pick counts as a breakdown.
const CLAIM_SLACK: f64 = 1e-6;

/// Orthonormal `z_1..z_d` and contacts `v_1..v_d` with `v_i` in
/// `span{z_1..z_i}` and `<v_i, z_i> >= sqrt((d - i + 1)/d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrBasis {
    #[serde(with = "serde_la::vectors")]
    pub z: Vec<Vector>,
    #[serde(with = "serde_la::vectors")]
    pub v: Vec<Vector>,
    /// Index into the decomposition of each `v_i`.
    pub sources: Vec<usize>,
}

/// Measured slacks of the basis conditions; all should be non-negative up to tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrSlacks {
    /// `max |<z_i, z_j> - delta_ij|`.
    pub orthonormality: f64,
    /// Largest component of some `v_i` outside `span{z_1..z_i}`.
    pub triangularity: f64,
    /// `min_i <v_i, z_i> - sqrt((d - i + 1)/d)`.
    pub lower: f64,
    /// `min_i 1 - <v_i, z_i>`.
    pub upper: f64,
}

impl DrBasis {
    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// `<v_i, z_i>` for each `i`.
    pub fn diagonal(&self) -> Vec<f64> {
        self.v.iter().zip(&self.z).map(|(v, z)| v.dot(z)).collect()
    }

    pub fn slacks(&self) -> DrSlacks {
        let d = self.dim();
        let mut orthonormality: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                orthonormality = orthonormality.max((self.z[i].dot(&self.z[j]) - target).abs());
            }
        }
        let mut triangularity: f64 = 0.0;
        for (i, v) in self.v.iter().enumerate() {
            for z in &self.z[i + 1..] {
                triangularity = triangularity.max(v.dot(z).abs());
            }
        }
        let diag = self.diagonal();
        let lower = diag
            .iter()
            .enumerate()
            .map(|(i, &p)| p - (((d - i) as f64) / d as f64).sqrt())
            .fold(f64::INFINITY, f64::min);
        let upper = diag.iter().map(|&p| 1.0 - p).fold(f64::INFINITY, f64::min);
        DrSlacks {
            orthonormality,
            triangularity,
            lower,
            upper,
        }
    }
}

/// Index maximizing `<w_l, T w_l>` and the attained value; the first maximum wins.
pub fn trace_pick(t: &Matrix, dec: &ContactDecomposition) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, w) in dec.points.iter().enumerate() {
        let value = w.dot(&(t * w));
        if value > best.1 {
            best = (i, value);
        }
    }
    best
}

/// Greedy construction starting from `z_1 = v_1 = w_1`.
pub fn dr_select(dec: &ContactDecomposition) -> Result<DrBasis> {
    let d = dec.dim();
    if dec.is_empty() {
        return Err(Error::TooFewContacts { found: 0, needed: 1 });
    }
    let first = dec.points[0].clone();
    let mut z = vec![first.normalize()];
    let mut v = vec![first];
    let mut sources = vec![0];
    for k in 1..d {
        let proj = complement_projection(&z, d);
        let (l, value) = trace_pick(&proj, dec);
        let required = (d - k) as f64 / d as f64;
        if value < required - CLAIM_SLACK {
            return Err(Error::NumericalBreakdown {
                step: k + 1,
                value,
                required,
            });
        }
        let w = &dec.points[l];
        // project twice to keep the new direction orthogonal to working precision
        let once = &proj * w;
        let twice = &proj * &once;
        z.push(twice.normalize());
        v.push(w.clone());
        sources.push(l);
    }
    Ok(DrBasis { z, v, sources })
}

/// Orthogonal projection onto the complement of `span(zs)`.
pub(crate) fn complement_projection(zs: &[Vector], d: usize) -> Matrix {
    zs.iter()
        .fold(Matrix::identity(d, d), |acc, z| acc - z * z.transpose())
}

/// Gram-Schmidt frame of arbitrary independent vectors, signs chosen so the
/// diagonal `<v_i, z_i>` is positive. Used for bases not produced greedily.
pub fn triangular_frame(v: &[Vector]) -> Result<Vec<Vector>> {
    let d = v.len();
    let mut z: Vec<Vector> = Vec::with_capacity(d);
    for x in v {
        let proj = complement_projection(&z, d);
        let r = &proj * (&proj * x);
        let n = r.norm();
        if n <= 1e-12 {
            return Err(Error::DegenerateSimplex);
        }
        z.push(r / n);
    }
    Ok(z)
}
