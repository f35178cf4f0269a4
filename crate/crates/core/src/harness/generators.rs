use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{InstanceDocument, InstanceMeta};
use crate::config::{MAX_DIM, MAX_FACETS};
use crate::error::{Error, Result};
use crate::geometry::{check_bounded, HPolytope, Matrix, Vector};
use crate::john::AffineMap;

const RETRY_CAP: usize = 1000;
/// Singular values of a warp lie in `[1/WARP_SPREAD, WARP_SPREAD]`.
const WARP_SPREAD: f64 = 10.0;

fn check_caps(d: usize, m: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::CapExceeded {
            what: "dimension",
            value: d,
            cap: MAX_DIM,
        });
    }
    if m > MAX_FACETS {
        return Err(Error::CapExceeded {
            what: "half-spaces",
            value: m,
            cap: MAX_FACETS,
        });
    }
    Ok(())
}

/// The `2d` facets `±x_i <= 1` of the cube.
pub fn gen_cube(d: usize) -> Result<InstanceDocument> {
    check_caps(d, 2 * d)?;
    let p = HPolytope::cube(d, 1.0)?;
    Ok(InstanceDocument::from_polytope(
        &p,
        InstanceMeta {
            generator: Some("cube".into()),
            seed: None,
        },
    ))
}

fn unit_normal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vector {
    loop {
        let g = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = g.norm();
        if n > 1e-8 {
            return g / n;
        }
    }
}

/// `m` tangent half-spaces `<a_i, x> <= 1` of the unit ball with uniform
/// normals, resampled until the intersection is bounded.
pub fn gen_tangent_random(d: usize, m: usize, seed: u64) -> Result<InstanceDocument> {
    check_caps(d, m)?;
    if m < d + 1 {
        return Err(Error::MalformedInput(format!(
            "need at least d + 1 = {} half-spaces, got {m}",
            d + 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RETRY_CAP {
        let rows = (0..m).map(|_| (unit_normal(d, &mut rng).as_slice().to_vec(), 1.0));
        let p = HPolytope::from_rows(d, rows)?;
        match check_bounded(&p) {
            Ok(()) => {
                return Ok(InstanceDocument::from_polytope(
                    &p,
                    InstanceMeta {
                        generator: Some("tangent".into()),
                        seed: Some(seed),
                    },
                ))
            }
            Err(Error::Unbounded) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetryCapExceeded {
        attempts: RETRY_CAP,
    })
}

fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal))
        .qr()
        .q()
}

/// `Q1 diag(s) Q2` with log-uniform `s` (condition number at most 100) and a
/// standard normal shift.
pub fn random_warp(d: usize, seed: u64) -> AffineMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q1 = random_orthogonal(d, &mut rng);
    let q2 = random_orthogonal(d, &mut rng);
    let spread = WARP_SPREAD.ln();
    let s = Vector::from_fn(d, |_, _| rng.random_range(-spread..=spread).exp());
    let shift = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    AffineMap {
        matrix: q1 * Matrix::from_diagonal(&s) * q2,
        shift,
    }
}

/// Image of the instance under `map`, rows renormalized.
pub fn warp_with(doc: &InstanceDocument, map: &AffineMap) -> Result<InstanceDocument> {
    let p = doc.to_polytope()?.affine_image(&map.matrix, &map.shift)?;
    Ok(InstanceDocument::from_polytope(&p, doc.meta.clone()))
}

pub fn gen_affine_warp(doc: &InstanceDocument, seed: u64) -> Result<InstanceDocument> {
    let mut out = warp_with(doc, &random_warp(doc.dim, seed))?;
    let base = doc.meta.generator.as_deref().unwrap_or("instance");
    out.meta.generator = Some(format!("warp({base})"));
    Ok(out)
}
