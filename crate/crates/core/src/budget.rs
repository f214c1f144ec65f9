use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling budget of a run. `max_samples` counts sampler invocations,
/// whether or not the drawn candidate turns out valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    pub max_samples: u64,
    pub max_generations: Option<u64>,
    pub eval_timeout_s: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_samples: 2000,
            max_generations: None,
            eval_timeout_s: 50.0,
        }
    }
}

impl Budget {
    pub fn new(max_samples: u64, max_generations: Option<u64>, eval_timeout_s: f64) -> Result<Self> {
        let b = Self {
            max_samples,
            max_generations,
            eval_timeout_s,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_samples < 1 {
            return Err(Error::Config("budget.max_samples must be at least 1".into()));
        }
        if !(self.eval_timeout_s > 0.0 && self.eval_timeout_s.is_finite()) {
            return Err(Error::Config("budget.eval_timeout_s must be positive".into()));
        }
        Ok(())
    }

    pub fn remaining(&self, samples_used: u64) -> u64 {
        self.max_samples.saturating_sub(samples_used)
    }

    pub fn eval_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.eval_timeout_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remaining_clamps() {
        let b = Budget::default();
        assert_eq!(b.remaining(0), 2000);
        let b = Budget::new(20, Some(10), 50.0).unwrap();
        assert_eq!(b.remaining(20), 0);
        let b = Budget::new(5, None, 1.0).unwrap();
        assert_eq!(b.remaining(9), 0);
    }

    #[test]
    fn validation() {
        assert!(Budget::new(0, None, 1.0).is_err());
        assert!(Budget::new(1, None, 0.0).is_err());
        assert!(Budget::new(1, None, f64::NAN).is_err());
    }
}
