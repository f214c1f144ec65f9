//! Fitness vectors and the comparisons every search method relies on.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One or more finite objective values, all minimized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FitnessVector(Vec<f64>);

impl FitnessVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::contract("fitness vector must hold at least one objective"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::contract(format!("non-finite objective value {bad}")));
        }
        Ok(Self(values))
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Self::new(vec![value])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Value of the first objective.
    pub fn primary(&self) -> f64 {
        self.0[0]
    }

    /// Appends another objective.
    pub fn with_objective(mut self, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::contract(format!("non-finite objective value {value}")));
        }
        self.0.push(value);
        Ok(self)
    }
}

impl TryFrom<Vec<f64>> for FitnessVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<FitnessVector> for Vec<f64> {
    fn from(f: FitnessVector) -> Self {
        f.0
    }
}

impl fmt::Display for FitnessVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Orders two optional single-objective fitness values, best first.
///
/// An absent fitness (invalid candidate) ranks worse than any present one.
pub fn compare_scalar(a: Option<&FitnessVector>, b: Option<&FitnessVector>) -> Result<Ordering> {
    for f in [a, b].into_iter().flatten() {
        if f.len() != 1 {
            return Err(Error::contract(format!(
                "scalar comparison needs one objective, got {}",
                f.len()
            )));
        }
    }
    Ok(match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some(x), Some(y)) => x.primary().total_cmp(&y.primary()),
    })
}

/// Pareto dominance under minimization.
pub fn dominates(a: &FitnessVector, b: &FitnessVector) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::contract(format!(
            "dominance between vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(dominates_slice(a.values(), b.values()))
}

pub(crate) fn dominates_slice(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}
