use serde::{Deserialize, Serialize};

use crate::fitness::FitnessVector;

/// Classification of one candidate's evaluation. Exactly one per candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EvalStatus {
    Valid,
    Timeout,
    RuntimeError,
    ParseError,
    SampleError,
}

impl EvalStatus {
    pub const ALL: [EvalStatus; 5] = [
        EvalStatus::Valid,
        EvalStatus::Timeout,
        EvalStatus::RuntimeError,
        EvalStatus::ParseError,
        EvalStatus::SampleError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EvalStatus::Valid => "Valid",
            EvalStatus::Timeout => "Timeout",
            EvalStatus::RuntimeError => "RuntimeError",
            EvalStatus::ParseError => "ParseError",
            EvalStatus::SampleError => "SampleError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub status: EvalStatus,
    pub fitness: Option<FitnessVector>,
    pub wall_time_s: f64,
    pub diagnostics: String,
}

/// Diagnostics are cut to this many bytes.
pub const MAX_DIAGNOSTICS: usize = 4096;

impl EvalOutcome {
    pub fn valid(fitness: FitnessVector, wall_time_s: f64) -> Self {
        Self {
            status: EvalStatus::Valid,
            fitness: Some(fitness),
            wall_time_s,
            diagnostics: String::new(),
        }
    }

    pub fn failed(status: EvalStatus, wall_time_s: f64, diagnostics: impl Into<String>) -> Self {
        debug_assert_ne!(status, EvalStatus::Valid);
        Self {
            status,
            fitness: None,
            wall_time_s,
            diagnostics: truncate(diagnostics.into(), MAX_DIAGNOSTICS),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.status == EvalStatus::Valid
    }
}

pub(crate) fn truncate(mut s: String, max: usize) -> String {
    if s.len() > max {
        let mut cut = max;
        while !s.is_char_boundary(cut) {
            cut -= 1;
        }
        s.truncate(cut);
    }
    s
}

/// One sampled (or seeded) algorithm and what became of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: u64,
    pub code: String,
    pub idea: Option<String>,
    pub parent_ids: Vec<u64>,
    /// Position in draw order; `None` for the template seed, which is
    /// evaluated without a sampler call.
    pub sample_index: Option<u64>,
    pub operator: String,
    pub outcome: EvalOutcome,
    pub normalized_hash: String,
}

impl Candidate {
    pub fn fitness(&self) -> Option<&FitnessVector> {
        self.outcome.fitness.as_ref()
    }

    pub fn is_valid(&self) -> bool {
        self.outcome.is_valid()
    }
}
