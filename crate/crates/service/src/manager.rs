//! Background runs hosted by the HTTP service.

use std::collections::BTreeMap;
use std::panic::AssertUnwindSafe;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use algoforge::event::NewBest;
use algoforge::profiler::{Profiler, SharedLog};
use algoforge::search::{BestCandidate, RunSummary, StopSignal};
use algoforge::{EventBody, RunEvent, StopReason};
use log::{info, warn};
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::run::{execute, generate_run_id, run_dir};

pub const DEFAULT_MAX_RUNS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RunState {
    Pending,
    Running,
    Stopped,
    Finished,
    Failed,
}

impl RunState {
    pub fn is_terminal(self) -> bool {
        matches!(self, RunState::Stopped | RunState::Finished | RunState::Failed)
    }

    /// Terminal state for a run that returned normally.
    fn from_reason(reason: StopReason) -> Self {
        match reason {
            StopReason::BudgetExhausted | StopReason::MaxGenerations => RunState::Finished,
            StopReason::Stopped => RunState::Stopped,
            StopReason::SamplerUnavailable | StopReason::Error => RunState::Failed,
        }
    }
}

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    InvalidConfig(ConfigError),
    #[error("run `{0}` not found")]
    NotFound(String),
    #[error("run `{0}` already exists")]
    Conflict(String),
    #[error("{active} runs are active; the limit is {cap}")]
    TooManyRuns { active: usize, cap: usize },
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Internal(String),
}

impl From<ConfigError> for ApiError {
    fn from(e: ConfigError) -> Self {
        ApiError::InvalidConfig(e)
    }
}

/// Point-in-time view of a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunHandle {
    pub run_id: String,
    pub state: RunState,
    pub method: String,
    pub task: String,
    pub samples_used: u64,
    pub max_samples: u64,
    pub generations: u64,
    /// Number of events recorded so far; the last seq is `events - 1`.
    pub events: usize,
    pub best: Option<BestCandidate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<StopReason>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub log_dir: PathBuf,
}

/// Best candidate and, once finished, the non-dominated set.
#[derive(Debug, Clone, Serialize)]
pub struct BestView {
    pub run_id: String,
    pub best: Option<BestCandidate>,
    pub pareto: Vec<BestCandidate>,
}

#[derive(Debug, Default)]
struct Progress {
    samples_used: u64,
    generations: u64,
    best: Option<NewBest>,
}

/// Updates [`Progress`] as events arrive so status reads stay O(1).
struct ProgressTap(Arc<Mutex<Progress>>);

impl Profiler for ProgressTap {
    fn record(&mut self, event: &RunEvent) -> algoforge::Result<()> {
        let mut p = self.0.lock().unwrap();
        match &event.body {
            EventBody::SampleDrawn(s) => p.samples_used = s.sample_index + 1,
            EventBody::NewBest(b) => p.best = Some(b.clone()),
            EventBody::GenerationEnd(g) => p.generations = g.generation + 1,
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug)]
struct Status {
    state: RunState,
    reason: Option<StopReason>,
    error: Option<String>,
}

struct Entry {
    id: String,
    method: String,
    task: String,
    max_samples: u64,
    dir: PathBuf,
    status: Mutex<Status>,
    progress: Arc<Mutex<Progress>>,
    log: SharedLog,
    stop: StopSignal,
}

impl Entry {
    fn handle(&self) -> RunHandle {
        let status = self.status.lock().unwrap();
        let progress = self.progress.lock().unwrap();
        let summary = self.log.summary();
        RunHandle {
            run_id: self.id.clone(),
            state: status.state,
            method: self.method.clone(),
            task: self.task.clone(),
            samples_used: summary.as_ref().map_or(progress.samples_used, |s| s.samples_used),
            max_samples: self.max_samples,
            generations: summary.as_ref().map_or(progress.generations, |s| s.generations),
            events: self.log.len(),
            best: match summary {
                Some(s) => s.best,
                None => progress.best.as_ref().map(|b| BestCandidate {
                    candidate_id: b.candidate_id,
                    sample_index: b.sample_index,
                    code: b.code.clone(),
                    fitness: b.fitness.clone(),
                }),
            },
            reason: status.reason,
            error: status.error.clone(),
            log_dir: self.dir.clone(),
        }
    }

    fn finish(&self, outcome: Result<RunSummary, String>) {
        let mut status = self.status.lock().unwrap();
        match outcome {
            Ok(summary) => {
                status.state = RunState::from_reason(summary.reason);
                status.reason = Some(summary.reason);
            }
            Err(e) => {
                status.state = RunState::Failed;
                status.reason = Some(StopReason::Error);
                status.error = Some(e);
            }
        }
        info!("run {} ended: {:?}", self.id, status.state);
    }
}

/// Hosts concurrent runs, each on its own thread.
pub struct RunManager {
    cap: usize,
    runs: Mutex<BTreeMap<String, Arc<Entry>>>,
}

impl RunManager {
    pub fn new(cap: usize) -> Self {
        Self {
            cap: cap.max(1),
            runs: Mutex::new(BTreeMap::new()),
        }
    }

    /// Validates and launches a run; returns immediately.
    pub fn start(&self, mut config: RunConfig) -> Result<RunHandle, ApiError> {
        let resolved = config.resolve()?;
        let mut runs = self.runs.lock().unwrap();
        let active = runs
            .values()
            .filter(|e| !e.status.lock().unwrap().state.is_terminal())
            .count();
        if active >= self.cap {
            return Err(ApiError::TooManyRuns { active, cap: self.cap });
        }
        let id = match &config.run_id {
            Some(id) if runs.contains_key(id) => return Err(ApiError::Conflict(id.clone())),
            Some(id) => id.clone(),
            None => loop {
                let id = generate_run_id();
                if !runs.contains_key(&id) {
                    break id;
                }
            },
        };
        config.run_id = Some(id.clone());
        let dir = run_dir(&config, &id);
        let entry = Arc::new(Entry {
            id: id.clone(),
            method: config.method.method.as_str().to_string(),
            task: config.task.id.clone(),
            max_samples: resolved.budget.max_samples,
            dir: dir.clone(),
            status: Mutex::new(Status {
                state: RunState::Pending,
                reason: None,
                error: None,
            }),
            progress: Arc::default(),
            log: SharedLog::new(),
            stop: StopSignal::new(),
        });
        runs.insert(id.clone(), entry.clone());
        drop(runs);

        let worker = entry.clone();
        let spawned = std::thread::Builder::new().name(format!("run-{id}")).spawn(move || {
            worker.status.lock().unwrap().state = RunState::Running;
            let extra: Vec<Box<dyn Profiler>> =
                vec![Box::new(worker.log.profiler()), Box::new(ProgressTap(worker.progress.clone()))];
            let outcome = std::panic::catch_unwind(AssertUnwindSafe(|| {
                execute(&config, &resolved, &worker.dir, extra, &worker.stop)
            }));
            let outcome = match outcome {
                Ok(Ok(summary)) => Ok(summary),
                Ok(Err(e)) => Err(e.to_string()),
                Err(_) => Err("run thread panicked".to_string()),
            };
            if let Err(e) = &outcome {
                warn!("run {} failed: {e}", worker.id);
            }
            worker.finish(outcome);
        });
        if let Err(e) = spawned {
            entry.finish(Err(format!("cannot start run thread: {e}")));
            return Err(ApiError::Internal(e.to_string()));
        }
        Ok(entry.handle())
    }

    fn entry(&self, id: &str) -> Result<Arc<Entry>, ApiError> {
        self.runs
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(id.to_string()))
    }

    pub fn get(&self, id: &str) -> Result<RunHandle, ApiError> {
        Ok(self.entry(id)?.handle())
    }

    pub fn list(&self) -> Vec<RunHandle> {
        let entries: Vec<_> = self.runs.lock().unwrap().values().cloned().collect();
        entries.iter().map(|e| e.handle()).collect()
    }

    /// Asks a run to stop. A no-op for runs that already ended.
    pub fn stop(&self, id: &str) -> Result<RunHandle, ApiError> {
        let entry = self.entry(id)?;
        if !entry.status.lock().unwrap().state.is_terminal() {
            entry.stop.stop();
        }
        Ok(entry.handle())
    }

    /// Stops every active run, used on shutdown.
    pub fn stop_all(&self) {
        for e in self.runs.lock().unwrap().values() {
            e.stop.stop();
        }
    }

    pub fn events(&self, id: &str, since: i64) -> Result<Vec<RunEvent>, ApiError> {
        Ok(self.entry(id)?.log.since(since))
    }

    pub fn best(&self, id: &str) -> Result<BestView, ApiError> {
        let entry = self.entry(id)?;
        let pareto = entry.log.summary().map(|s| s.pareto).unwrap_or_default();
        Ok(BestView {
            run_id: entry.id.clone(),
            best: entry.handle().best,
            pareto,
        })
    }
}
