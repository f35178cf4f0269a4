//! The explicit volume-ratio constant and the independent certificate checker.

mod check;

use serde::{Deserialize, Serialize};

pub use check::{check_certificate, CheckItem, CheckReport};

/// `ln d!` as a sum of logarithms; exact to rounding for every `d` used here.
pub fn ln_factorial(d: usize) -> f64 {
    (2..=d).map(|k| (k as f64).ln()).sum()
}

/// `ln(d^d (d+1)^((3d+1)/2) / sqrt(d!))`.
pub fn ln_explicit_bound(d: usize) -> f64 {
    let df = d as f64;
    df * df.ln() + (3.0 * df + 1.0) / 2.0 * (df + 1.0).ln() - 0.5 * ln_factorial(d)
}

/// `d^d (d+1)^((3d+1)/2) / sqrt(d!)`, evaluated in log space.
pub fn explicit_bound(d: usize) -> f64 {
    ln_explicit_bound(d).exp()
}

/// `ln(e^d d^(2d))`.
pub fn ln_theorem_form(d: usize) -> f64 {
    let df = d as f64;
    df + 2.0 * df * df.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub d: usize,
    pub explicit_bound: f64,
    pub ln_explicit_bound: f64,
    /// `explicit_bound / (e^d d^(2d))`.
    pub theorem_form_ratio: f64,
    pub ln_theorem_form_ratio: f64,
}

impl BoundReport {
    pub fn new(d: usize) -> Self {
        let ln_b = ln_explicit_bound(d);
        let ln_r = ln_b - ln_theorem_form(d);
        BoundReport {
            d,
            explicit_bound: ln_b.exp(),
            ln_explicit_bound: ln_b,
            theorem_form_ratio: ln_r.exp(),
            ln_theorem_form_ratio: ln_r,
        }
    }
}

/// Smallest constant `C` with `explicit_bound(d) <= C e^d d^(2d)` on `1..=d_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantScan {
    pub d_max: usize,
    pub constant: f64,
    pub argmax: usize,
    /// The ratio never increases from `d = 2` on.
    pub non_increasing: bool,
}

pub fn theorem_constant_scan(d_max: usize) -> ConstantScan {
    let logs: Vec<f64> = (1..=d_max.max(1))
        .map(|d| BoundReport::new(d).ln_theorem_form_ratio)
        .collect();
    let (argmax, &best) = logs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty range");
    let non_increasing = logs.iter().skip(1).zip(logs.iter().skip(2)).all(|(a, b)| b <= a);
    ConstantScan {
        d_max,
        constant: best.exp(),
        argmax: argmax + 1,
        non_increasing,
    }
}
