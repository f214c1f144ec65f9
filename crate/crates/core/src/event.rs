//! Run event records. One JSON object per line is the canonical log format.

use serde::{Deserialize, Serialize};

use crate::candidate::EvalStatus;
use crate::fitness::FitnessVector;
use crate::llm::Prompt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEvent {
    pub seq: u64,
    /// Seconds since run start.
    pub ts: f64,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventBody {
    SampleDrawn(SampleDrawn),
    EvalFinished(EvalFinished),
    NewBest(NewBest),
    GenerationEnd(GenerationEnd),
    RunEnd(RunEnd),
    Error(ErrorEvent),
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::SampleDrawn(_) => "SampleDrawn",
            EventBody::EvalFinished(_) => "EvalFinished",
            EventBody::NewBest(_) => "NewBest",
            EventBody::GenerationEnd(_) => "GenerationEnd",
            EventBody::RunEnd(_) => "RunEnd",
            EventBody::Error(_) => "Error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDrawn {
    pub sample_index: u64,
    pub candidate_id: u64,
    pub operator: String,
    pub parent_ids: Vec<u64>,
    pub prompt: Prompt,
    /// Raw sampler output, absent when the draw failed.
    pub response: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalFinished {
    pub candidate_id: u64,
    pub sample_index: Option<u64>,
    pub operator: String,
    pub parent_ids: Vec<u64>,
    pub status: EvalStatus,
    pub fitness: Option<FitnessVector>,
    pub wall_time_s: f64,
    pub diagnostics: String,
    pub code: String,
    pub idea: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewBest {
    pub candidate_id: u64,
    pub sample_index: Option<u64>,
    pub fitness: FitnessVector,
    pub code: String,
    /// Size of the non-dominated archive after the update (1 for scalar runs).
    pub archive_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationEnd {
    pub generation: u64,
    pub samples_used: u64,
    pub population_size: usize,
    pub best_fitness: Option<FitnessVector>,
    /// Non-dominated archive fitnesses (multi-objective runs only).
    pub archive: Vec<FitnessVector>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    BudgetExhausted,
    MaxGenerations,
    Stopped,
    SamplerUnavailable,
    Error,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::BudgetExhausted => "budget_exhausted",
            StopReason::MaxGenerations => "max_generations",
            StopReason::Stopped => "stopped",
            StopReason::SamplerUnavailable => "sampler_unavailable",
            StopReason::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEnd {
    pub reason: StopReason,
    pub samples_used: u64,
    pub generations: u64,
    pub wall_time_s: f64,
    /// Method-specific state snapshot at the end of the run.
    pub state: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEvent {
    pub message: String,
}

impl RunEvent {
    /// Copy with every timing field zeroed, for golden comparisons.
    pub fn canonical(&self) -> RunEvent {
        let mut ev = self.clone();
        ev.ts = 0.0;
        match &mut ev.body {
            EventBody::EvalFinished(e) => e.wall_time_s = 0.0,
            EventBody::RunEnd(e) => e.wall_time_s = 0.0,
            _ => {}
        }
        ev
    }

    pub fn to_json_line(&self) -> String {
        // RunEvent contains only string-keyed maps and finite numbers
        serde_json::to_string(self).expect("run event serializes")
    }
}

/// Canonical JSON-lines rendering of an event sequence.
pub fn canonical_jsonl(events: &[RunEvent]) -> String {
    let mut out = String::new();
    for ev in events {
        out.push_str(&ev.canonical().to_json_line());
        out.push('\n');
    }
    out
}
