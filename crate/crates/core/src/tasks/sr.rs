//! Symbolic regression of a bacterial growth law.
//!
//! Ground truth (never shown in prompts):
//! `rate = 0.9 * b * (1 - b / 12) * s / (s + 1.5)`, logistic growth in the
//! density `b` with Monod-type limitation by the substrate `s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::rng::SplitMix64;

pub const GROUND_TRUTH: &str = "0.9 * b * (1 - b / 12) * s / (s + 1.5)";
pub const VARIABLES: [&str; 2] = ["b", "s"];
pub const DEFAULT_ROWS: usize = 64;
pub const MIN_ROWS: usize = 10;

pub fn ground_truth(b: f64, s: f64) -> f64 {
    0.9 * b * (1.0 - b / 12.0) * s / (s + 1.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrDataset {
    pub variable_names: Vec<String>,
    /// Inputs are positional, aligned with `variable_names`.
    pub rows: Vec<(Vec<f64>, f64)>,
}

impl SrDataset {
    pub fn new(variable_names: Vec<String>, rows: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::contract("dataset has no rows"));
        }
        for (x, y) in &rows {
            if x.len() != variable_names.len() {
                return Err(Error::contract("row width differs from variable count"));
            }
            if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::contract("dataset values must be finite"));
            }
        }
        Ok(Self { variable_names, rows })
    }
}

/// `rows` samples of the ground truth, zero noise.
pub fn generate(seed: u64, rows: usize) -> Result<SrDataset> {
    if rows < MIN_ROWS {
        return Err(Error::Config(format!("sr_growth needs at least {MIN_ROWS} rows, got {rows}")));
    }
    let mut rng = SplitMix64::new(seed);
    let data = (0..rows)
        .map(|_| {
            let b = 0.5 + 11.5 * rng.next_f64();
            let s = 5.0 * rng.next_f64();
            (vec![b, s], ground_truth(b, s))
        })
        .collect();
    SrDataset::new(VARIABLES.iter().map(|v| v.to_string()).collect(), data)
}

/// Root-mean-square error of `predict` over the dataset.
pub fn evaluate<E>(
    data: &SrDataset,
    mut predict: impl FnMut(&[f64]) -> std::result::Result<f64, E>,
) -> std::result::Result<f64, E> {
    let mut sq = 0.0;
    for (x, y) in &data.rows {
        let r = predict(x)? - y;
        sq += r * r;
    }
    Ok((sq / data.rows.len() as f64).sqrt())
}
