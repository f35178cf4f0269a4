//! Random simplices from a decomposition: contacts drawn i.i.d. with
//! probability `c_i / d`.

use itertools::Itertools;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dr::{triangular_frame, DrBasis};
use crate::error::{Error, Result};
use crate::geometry::{factorial, Matrix, Vector};
use crate::john::ContactDecomposition;

/// `1 / (sqrt(d!) d^(d/2))`, the greedy lower bound on `vol(S1)`.
pub fn pivovarov_threshold(d: usize) -> f64 {
    let df = d as f64;
    1.0 / (factorial(d).sqrt() * df.powf(df / 2.0))
}

/// `conv{o, w_{i_1}, ..., w_{i_d}}`; repeated or dependent draws give volume 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSimplex {
    pub indices: Vec<usize>,
    pub vertices: Vec<Vector>,
    pub volume: f64,
}

fn simplex_volume(points: &[Vector]) -> f64 {
    let d = points.len();
    Matrix::from_columns(points).determinant().abs() / factorial(d)
}

fn sampler(dec: &ContactDecomposition) -> WeightedIndex<f64> {
    WeightedIndex::new(dec.weights.iter().map(|c| c.max(0.0))).expect("positive weights")
}

pub fn pivovarov_sample<R: Rng + ?Sized>(dec: &ContactDecomposition, rng: &mut R) -> RandomSimplex {
    let d = dec.dim();
    let dist = sampler(dec);
    draw(dec, &dist, d, rng)
}

fn draw<R: Rng + ?Sized>(
    dec: &ContactDecomposition,
    dist: &WeightedIndex<f64>,
    d: usize,
    rng: &mut R,
) -> RandomSimplex {
    let indices: Vec<usize> = (0..d).map(|_| dist.sample(rng)).collect();
    let picked: Vec<Vector> = indices.iter().map(|&i| dec.points[i].clone()).collect();
    let volume = simplex_volume(&picked);
    let mut vertices = vec![Vector::zeros(d)];
    vertices.extend(picked);
    RandomSimplex {
        indices,
        vertices,
        volume,
    }
}

/// Monte Carlo moments of the random simplex volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub trials: usize,
    pub mean_volume: f64,
    pub se_volume: f64,
    pub mean_volume_sq: f64,
    pub se_volume_sq: f64,
    /// `sqrt(mean_volume_sq)` with its delta-method standard error.
    pub rms_volume: f64,
    pub se_rms: f64,
    /// `pivovarov_threshold(d)`.
    pub target: f64,
}

pub fn pivovarov_moments(dec: &ContactDecomposition, trials: usize, seed: u64) -> Moments {
    let d = dec.dim();
    let dist = sampler(dec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vols: Vec<f64> = (0..trials.max(1))
        .map(|_| draw(dec, &dist, d, &mut rng).volume)
        .collect();
    let n = vols.len() as f64;
    let mean = |xs: &mut dyn Iterator<Item = f64>| xs.sum::<f64>() / n;
    let m1 = mean(&mut vols.iter().copied());
    let m2 = mean(&mut vols.iter().map(|v| v * v));
    let var1 = mean(&mut vols.iter().map(|v| (v - m1).powi(2)));
    let var2 = mean(&mut vols.iter().map(|v| (v * v - m2).powi(2)));
    let se1 = (var1 / n).sqrt();
    let se2 = (var2 / n).sqrt();
    let rms = m2.sqrt();
    Moments {
        trials: vols.len(),
        mean_volume: m1,
        se_volume: se1,
        mean_volume_sq: m2,
        se_volume_sq: se2,
        rms_volume: rms,
        se_rms: if rms > 0.0 { se2 / (2.0 * rms) } else { 0.0 },
        target: pivovarov_threshold(d),
    }
}

/// Exact `(E[vol], E[vol^2])` by enumerating all `m^d` ordered draws.
pub fn exact_moments(dec: &ContactDecomposition) -> Result<(f64, f64)> {
    let d = dec.dim();
    let m = dec.len();
    let outcomes = (m as f64).powi(d as i32);
    if outcomes > 1e7 {
        return Err(Error::CapExceeded {
            what: "enumerated draws",
            value: outcomes as usize,
            cap: 10_000_000,
        });
    }
    let probs: Vec<f64> = dec.weights.iter().map(|c| c / d as f64).collect();
    let (mut e1, mut e2) = (0.0, 0.0);
    for draw in (0..d).map(|_| 0..m).multi_cartesian_product() {
        let p: f64 = draw.iter().map(|&i| probs[i]).product();
        let pts: Vec<Vector> = draw.iter().map(|&i| dec.points[i].clone()).collect();
        let v = simplex_volume(&pts);
        e1 += p * v;
        e2 += p * v * v;
    }
    Ok((e1, e2))
}

/// Resamples until the simplex volume reaches `pivovarov_threshold(d)`, then
/// frames the draw with a Gram-Schmidt basis.
pub fn pivovarov_basis<R: Rng + ?Sized>(
    dec: &ContactDecomposition,
    rng: &mut R,
    attempts: usize,
) -> Result<DrBasis> {
    let d = dec.dim();
    let dist = sampler(dec);
    let floor = pivovarov_threshold(d);
    for _ in 0..attempts {
        let s = draw(dec, &dist, d, rng);
        if s.volume >= floor {
            let v = s.vertices[1..].to_vec();
            let z = triangular_frame(&v)?;
            return Ok(DrBasis {
                z,
                v,
                sources: s.indices,
            });
        }
    }
    Err(Error::RetryCapExceeded { attempts })
}
