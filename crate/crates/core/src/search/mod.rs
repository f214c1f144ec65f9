//! Search methods over a shared coordinator loop.
//!
//! Every method is a [`Strategy`]: it proposes one generation of prompts,
//! then absorbs the evaluated offspring. The coordinator owns budgets,
//! sampling, evaluation, event sequencing and best-so-far tracking.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::candidate::Candidate;
use crate::error::{Error, Result};
use crate::event::StopReason;
use crate::fitness::FitnessVector;
use crate::llm::Prompt;
use crate::tasks::Task;

mod coordinator;
mod eoh;
mod funsearch;
mod moead;
pub mod moo;
mod population;
pub mod prompts;
mod trajectory;

pub use coordinator::run;
pub use funsearch::{island_reset, Island};
pub use moo::{crowding_distance, fast_nondominated_sort, moead_weights, nsga2_select, tchebycheff, Decomposition};
pub use population::{
    eoh_survivor_selection, rank_probabilities, scalar_order, select_ranks, Archive, ArchiveEntry, Population,
};
pub use trajectory::{sa_accept, tabu_admissible};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RandomSampling,
    #[serde(alias = "1+1_eps", alias = "one_plus_one")]
    OnePlusOneEps,
    Sa,
    Tabu,
    Ils,
    Vns,
    Eoh,
    #[serde(alias = "fun_search")]
    Funsearch,
    #[serde(alias = "meoh", alias = "nsga2")]
    MoeohNsga2,
    Moead,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::RandomSampling,
        Method::OnePlusOneEps,
        Method::Sa,
        Method::Tabu,
        Method::Ils,
        Method::Vns,
        Method::Eoh,
        Method::Funsearch,
        Method::MoeohNsga2,
        Method::Moead,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::RandomSampling => "random_sampling",
            Method::OnePlusOneEps => "one_plus_one_eps",
            Method::Sa => "sa",
            Method::Tabu => "tabu",
            Method::Ils => "ils",
            Method::Vns => "vns",
            Method::Eoh => "eoh",
            Method::Funsearch => "funsearch",
            Method::MoeohNsga2 => "moeoh_nsga2",
            Method::Moead => "moead",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Method::RandomSampling => "Random sampling",
            Method::OnePlusOneEps => "(1+1)-EPS hill climbing",
            Method::Sa => "Simulated annealing",
            Method::Tabu => "Tabu search",
            Method::Ils => "Iterated local search",
            Method::Vns => "Variable neighbourhood search",
            Method::Eoh => "Evolution of heuristics",
            Method::Funsearch => "FunSearch island model",
            Method::MoeohNsga2 => "Multi-objective EoH with NSGA-II survival",
            Method::Moead => "MOEA/D decomposition",
        }
    }

    /// Objectives the method optimizes: the task score, plus code
    /// complexity for the multi-objective methods.
    pub fn objective_count(self) -> usize {
        match self {
            Method::MoeohNsga2 | Method::Moead => 2,
            _ => 1,
        }
    }

    pub fn names() -> Vec<&'static str> {
        Method::ALL.iter().map(|m| m.as_str()).collect()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.trim().to_ascii_lowercase())).map_err(|_| {
            Error::Config(format!("unknown method `{s}`; valid methods: {}", Method::names().join(", ")))
        })
    }
}

/// Method choice plus every tunable. Unset fields take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodConfig {
    pub method: Method,
    pub pop_size: usize,
    pub num_islands: usize,
    pub samples_per_prompt: usize,
    /// Per-island archive size.
    pub island_capacity: usize,
    /// Samples between island resets; `None` means a quarter of the budget.
    pub reset_period: Option<u64>,
    pub sa_t0: f64,
    pub sa_alpha: f64,
    pub tabu_len: usize,
    pub ils_stall: usize,
    pub vns_levels: usize,
    pub moead_neighbors: usize,
    pub rng_seed: u64,
    pub num_samplers: usize,
    pub num_evaluators: usize,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            method: Method::Eoh,
            pop_size: 10,
            num_islands: 10,
            samples_per_prompt: 4,
            island_capacity: 10,
            reset_period: None,
            sa_t0: 1.0,
            sa_alpha: 0.95,
            tabu_len: 10,
            ils_stall: 5,
            vns_levels: 3,
            moead_neighbors: 3,
            rng_seed: 0,
            num_samplers: 1,
            num_evaluators: 1,
        }
    }
}

impl MethodConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    /// Checks every field; the error names the offending key.
    pub fn validate(&self) -> std::result::Result<(), (String, String)> {
        let bad = |field: &str, msg: &str| Err((field.to_string(), msg.to_string()));
        let positive = [
            ("pop_size", self.pop_size),
            ("num_islands", self.num_islands),
            ("samples_per_prompt", self.samples_per_prompt),
            ("island_capacity", self.island_capacity),
            ("tabu_len", self.tabu_len),
            ("ils_stall", self.ils_stall),
            ("vns_levels", self.vns_levels),
            ("moead_neighbors", self.moead_neighbors),
            ("num_samplers", self.num_samplers),
            ("num_evaluators", self.num_evaluators),
        ];
        for (field, v) in positive {
            if v < 1 {
                return bad(field, "must be at least 1");
            }
        }
        if !(self.sa_t0 >= 0.0 && self.sa_t0.is_finite()) {
            return bad("sa_t0", "must be a finite non-negative number");
        }
        if !(self.sa_alpha > 0.0 && self.sa_alpha < 1.0) {
            return bad("sa_alpha", "must lie strictly between 0 and 1");
        }
        if self.reset_period == Some(0) {
            return bad("reset_period", "must be at least 1");
        }
        if self.method == Method::Moead && self.pop_size < 2 {
            return bad("pop_size", "MOEA/D needs at least 2 subproblems");
        }
        Ok(())
    }
}

/// Cooperative stop request shared between a run and its controller.
#[derive(Debug, Clone, Default)]
pub struct StopSignal(Arc<AtomicBool>);

impl StopSignal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stop(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_stopped(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestCandidate {
    pub candidate_id: u64,
    pub sample_index: Option<u64>,
    pub code: String,
    pub fitness: FitnessVector,
}

/// What a finished run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub reason: StopReason,
    pub samples_used: u64,
    pub generations: u64,
    pub wall_time_s: f64,
    /// Lowest scalar fitness; for two objectives, the archive entry with
    /// the lowest first objective.
    pub best: Option<BestCandidate>,
    /// Non-dominated set (multi-objective runs only).
    pub pareto: Vec<BestCandidate>,
    /// Outcome counts over sampled candidates; sums to `samples_used`.
    pub status_counts: BTreeMap<String, u64>,
    pub state: serde_json::Value,
}

/// One prompt the strategy wants answered.
#[derive(Debug, Clone)]
pub(crate) struct Proposal {
    pub prompt: Prompt,
    pub operator: String,
    pub parent_ids: Vec<u64>,
    /// Function name the response should define, when it differs from the
    /// template's.
    pub target: Option<String>,
}

impl Proposal {
    pub fn new(prompt: Prompt, parents: &[&Candidate]) -> Self {
        let operator = prompt.metadata.get("operator").cloned().unwrap_or_default();
        let target = prompt.metadata.get("target").cloned();
        Self {
            prompt,
            operator,
            parent_ids: parents.iter().map(|c| c.id).collect(),
            target,
        }
    }

    fn with_subproblem(mut self, i: usize) -> Self {
        self.prompt.metadata.insert("subproblem".into(), i.to_string());
        self
    }
}

/// Read/write view of the run handed to strategies.
pub(crate) struct Ctx<'a> {
    pub task: &'a Task,
    pub cfg: &'a MethodConfig,
    pub rng: &'a mut ChaCha8Rng,
    pub samples_used: u64,
    /// Global best (scalar runs).
    pub best: Option<&'a Candidate>,
}

pub(crate) trait Strategy {
    /// Receives the evaluated template when it is valid.
    fn seed(&mut self, seed: &Candidate, ctx: &mut Ctx<'_>);
    /// Prompts for the next generation; never empty.
    fn propose(&mut self, ctx: &mut Ctx<'_>) -> Vec<Proposal>;
    /// Offspring of the generation in draw order, valid or not.
    fn absorb(&mut self, offspring: &[Candidate], ctx: &mut Ctx<'_>);
    fn population_size(&self) -> usize;
    fn snapshot(&self) -> serde_json::Value;
}

pub(crate) fn make_strategy(cfg: &MethodConfig, budget: &Budget) -> Result<Box<dyn Strategy + Send>> {
    Ok(match cfg.method {
        Method::RandomSampling => Box::new(trajectory::RandomSampling::new(cfg)),
        Method::OnePlusOneEps => Box::new(trajectory::OnePlusOne::new(cfg)),
        Method::Sa => Box::new(trajectory::Annealing::new(cfg)),
        Method::Tabu => Box::new(trajectory::Tabu::new(cfg)),
        Method::Ils => Box::new(trajectory::IteratedLocal::new(cfg)),
        Method::Vns => Box::new(trajectory::Vns::new(cfg)),
        Method::Eoh => Box::new(eoh::Eoh::new(cfg, false)),
        Method::MoeohNsga2 => Box::new(eoh::Eoh::new(cfg, true)),
        Method::Funsearch => Box::new(funsearch::FunSearch::new(cfg, budget)),
        Method::Moead => Box::new(moead::Moead::new(cfg)?),
    })
}

#[cfg(test)]
pub(crate) mod tests_support {
    use crate::candidate::{Candidate, EvalOutcome, EvalStatus};
    use crate::codekit::code_hash;
    use crate::fitness::FitnessVector;

    pub fn candidate(id: u64, code: &str, fitness: Option<f64>) -> Candidate {
        let outcome = match fitness {
            Some(f) => EvalOutcome::valid(FitnessVector::scalar(f).unwrap(), 0.0),
            None => EvalOutcome::failed(EvalStatus::RuntimeError, 0.0, "x"),
        };
        Candidate {
            id,
            code: code.to_string(),
            idea: None,
            parent_ids: vec![],
            sample_index: Some(id),
            operator: "test".into(),
            outcome,
            normalized_hash: code_hash(code),
        }
    }

    pub fn candidate_mo(id: u64, code: &str, f: &[f64]) -> Candidate {
        let mut c = candidate(id, code, Some(f[0]));
        c.outcome.fitness = Some(FitnessVector::new(f.to_vec()).unwrap());
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_roundtrip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.as_str()));
        }
        assert_eq!("EoH".parse::<Method>().unwrap(), Method::Eoh);
        let err = "eohx".parse::<Method>().unwrap_err().to_string();
        assert!(err.contains("random_sampling") && err.contains("moead"));
    }

    #[test]
    fn config_defaults_and_validation() {
        let c: MethodConfig = serde_json::from_str(r#"{"method":"funsearch"}"#).unwrap();
        assert_eq!((c.num_islands, c.samples_per_prompt, c.pop_size), (10, 4, 10));
        assert!(c.validate().is_ok());
        let bad = MethodConfig {
            sa_alpha: 1.0,
            ..MethodConfig::default()
        };
        assert_eq!(bad.validate().unwrap_err().0, "sa_alpha");
        assert!(serde_json::from_str::<MethodConfig>(r#"{"popsize":3}"#).is_err());
    }
}
