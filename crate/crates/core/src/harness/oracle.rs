use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::config::{Tolerances, MAX_ORACLE_FACETS};
use crate::error::{Error, Result};
use crate::geometry::{check_bounded, HPolytope};

/// Largest dimension the exhaustive search accepts.
const ORACLE_MAX_DIM: usize = 3;

/// Outcome of the exhaustive search over subfamilies of size at most `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub k: usize,
    /// Subfamilies enumerated.
    pub examined: usize,
    /// Subfamilies with bounded intersection.
    pub bounded: usize,
    /// Indices of a minimum-volume bounded subfamily, if any exists.
    pub best: Option<Vec<usize>>,
    pub best_volume: Option<f64>,
    pub volume_f: f64,
    /// `best_volume / volume_f`.
    pub ratio: Option<f64>,
}

/// Enumerates every subfamily of at most `k` half-spaces and keeps the bounded
/// one of least volume. Ties keep the first subfamily in lexicographic order.
pub fn oracle_min_subfamily(p: &HPolytope, k: usize, tol: &Tolerances) -> Result<OracleResult> {
    let (d, m) = (p.dim, p.len());
    if d > ORACLE_MAX_DIM {
        return Err(Error::CapExceeded {
            what: "oracle dimension",
            value: d,
            cap: ORACLE_MAX_DIM,
        });
    }
    if m > MAX_ORACLE_FACETS {
        return Err(Error::CapExceeded {
            what: "oracle half-spaces",
            value: m,
            cap: MAX_ORACLE_FACETS,
        });
    }
    if k > 2 * d {
        return Err(Error::CapExceeded {
            what: "oracle subfamily size",
            value: k,
            cap: 2 * d,
        });
    }
    let volume_f = p.volume(tol)?;
    let mut examined = 0;
    let mut bounded = 0;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for size in 1..=k.min(m) {
        for idx in (0..m).combinations(size) {
            examined += 1;
            // fewer than d + 1 half-spaces never bound a region
            if size <= d {
                continue;
            }
            let sub = p.subfamily(&idx);
            match check_bounded(&sub) {
                Ok(()) => {}
                Err(Error::Unbounded) => continue,
                Err(e) => return Err(e),
            }
            bounded += 1;
            let v = sub.volume(tol)?;
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((idx, v));
            }
        }
    }
    let (best, best_volume) = match best {
        Some((i, v)) => (Some(i), Some(v)),
        None => (None, None),
    };
    Ok(OracleResult {
        k,
        examined,
        bounded,
        best,
        best_volume,
        volume_f,
        ratio: best_volume.map(|v| v / volume_f),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::explicit_bound;
    use crate::harness::gen_tangent_random;
    use crate::selection::select;

    #[test]
    fn square_needs_all_four() {
        let tol = Tolerances::default();
        let sq = HPolytope::cube(2, 1.0).unwrap();
        let r = oracle_min_subfamily(&sq, 4, &tol).unwrap();
        assert_eq!(r.best, Some(vec![0, 1, 2, 3]));
        assert!((r.best_volume.unwrap() - 4.0).abs() < 1e-12);
        assert!((r.ratio.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.bounded, 1);
        let r3 = oracle_min_subfamily(&sq, 3, &tol).unwrap();
        assert_eq!(r3.best, None);
        assert_eq!(r3.bounded, 0);
        assert_eq!(r3.examined, 4 + 6 + 4);
    }

    #[test]
    fn random_polygons_against_select() {
        let tol = Tolerances::default();
        for seed in 0..10 {
            let p = gen_tangent_random(2, 8, seed).unwrap().to_polytope().unwrap();
            let c = select(&p, &tol).unwrap();
            let r = oracle_min_subfamily(&p, 4, &tol).unwrap();
            let best = r.ratio.unwrap();
            assert!(c.ratio >= best * (1.0 - 1e-9), "seed {seed}: {} < {best}", c.ratio);
            assert!(best <= explicit_bound(2));
        }
    }

    #[test]
    fn caps() {
        let tol = Tolerances::default();
        assert!(oracle_min_subfamily(&HPolytope::cube(4, 1.0).unwrap(), 4, &tol).is_err());
        assert!(oracle_min_subfamily(&HPolytope::cube(2, 1.0).unwrap(), 5, &tol).is_err());
        let many = gen_tangent_random(2, 13, 0).unwrap().to_polytope().unwrap();
        assert!(oracle_min_subfamily(&many, 4, &tol).unwrap_err().is_input_error());
    }
}
