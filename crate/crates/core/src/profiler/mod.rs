//! Run logging and log analysis.
//!
//! A run directory holds `config.json` (written at start), `events.jsonl`
//! (one [`RunEvent`] per line, appended as they happen) and `summary.json`
//! (written once the run has ended). Everything else, convergence series
//! and summaries, is recomputed from the events file.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::{EventBody, RunEvent};
use crate::fitness::compare_scalar;
use crate::search::{Archive, BestCandidate, RunSummary};

mod convergence;

pub use convergence::{aggregate, aggregate_csv, convergence, AggregatePoint, Convergence, ConvergencePoint};

pub const EVENTS_FILE: &str = "events.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.json";
pub const CONVERGENCE_FILE: &str = "convergence.csv";

/// Sink for the events of one run, in order.
pub trait Profiler: Send {
    /// Must not return before the event is stored.
    fn record(&mut self, event: &RunEvent) -> Result<()>;

    fn finish(&mut self, _summary: &RunSummary) -> Result<()> {
        Ok(())
    }
}

/// Enforces the log contract: gapless sequence numbers from 0 and nothing
/// after `RunEnd`.
#[derive(Debug, Clone, Default)]
pub struct EventOrder {
    next: u64,
    ended: bool,
}

impl EventOrder {
    pub fn check(&mut self, event: &RunEvent) -> Result<()> {
        if self.ended {
            return Err(Error::contract(format!("event {} recorded after RunEnd", event.seq)));
        }
        if event.seq != self.next {
            return Err(Error::contract(format!(
                "event seq {} out of order, expected {}",
                event.seq, self.next
            )));
        }
        self.next += 1;
        self.ended = matches!(event.body, EventBody::RunEnd(_));
        Ok(())
    }
}

/// Writes a run directory.
#[derive(Debug)]
pub struct JsonlProfiler {
    dir: PathBuf,
    events: File,
    order: EventOrder,
}

impl JsonlProfiler {
    /// Creates `dir` if needed, writes `config.json`, and starts a fresh
    /// events file.
    pub fn create(dir: impl AsRef<Path>, config: &impl Serialize) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        fs::write(dir.join(CONFIG_FILE), serde_json::to_string_pretty(config)? + "\n")?;
        let _ = fs::remove_file(dir.join(SUMMARY_FILE));
        let events = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(dir.join(EVENTS_FILE))?;
        Ok(Self {
            dir,
            events,
            order: EventOrder::default(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl Profiler for JsonlProfiler {
    fn record(&mut self, event: &RunEvent) -> Result<()> {
        self.order.check(event)?;
        let mut line = event.to_json_line();
        line.push('\n');
        self.events.write_all(line.as_bytes())?;
        self.events.flush()?;
        Ok(())
    }

    fn finish(&mut self, summary: &RunSummary) -> Result<()> {
        self.events.sync_data()?;
        write_summary(&self.dir, summary)
    }
}

pub fn write_summary(dir: &Path, summary: &RunSummary) -> Result<()> {
    fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(())
}

/// Shared, growable view of a run's events; cheap to clone and safe to
/// read while the run appends.
#[derive(Debug, Clone, Default)]
pub struct SharedLog {
    events: Arc<Mutex<Vec<RunEvent>>>,
    summary: Arc<Mutex<Option<RunSummary>>>,
}

impl SharedLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Events with `seq > since` (all of them for a negative cursor).
    pub fn since(&self, since: i64) -> Vec<RunEvent> {
        let events = self.events.lock().unwrap();
        let start = usize::try_from(since + 1).unwrap_or(0).min(events.len());
        events[start..].to_vec()
    }

    pub fn len(&self) -> usize {
        self.events.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<RunEvent> {
        self.events.lock().unwrap().clone()
    }

    pub fn summary(&self) -> Option<RunSummary> {
        self.summary.lock().unwrap().clone()
    }

    pub fn profiler(&self) -> MemoryProfiler {
        MemoryProfiler {
            log: self.clone(),
            order: EventOrder::default(),
        }
    }
}

/// Keeps events in memory, behind a [`SharedLog`].
#[derive(Debug)]
pub struct MemoryProfiler {
    log: SharedLog,
    order: EventOrder,
}

impl MemoryProfiler {
    pub fn new() -> Self {
        SharedLog::new().profiler()
    }

    pub fn log(&self) -> &SharedLog {
        &self.log
    }

    pub fn events(&self) -> Vec<RunEvent> {
        self.log.snapshot()
    }
}

impl Default for MemoryProfiler {
    fn default() -> Self {
        Self::new()
    }
}

impl Profiler for MemoryProfiler {
    fn record(&mut self, event: &RunEvent) -> Result<()> {
        self.order.check(event)?;
        self.log.events.lock().unwrap().push(event.clone());
        Ok(())
    }

    fn finish(&mut self, summary: &RunSummary) -> Result<()> {
        *self.log.summary.lock().unwrap() = Some(summary.clone());
        Ok(())
    }
}

/// Forwards every call to each inner profiler in turn.
pub struct Tee(pub Vec<Box<dyn Profiler>>);

impl Profiler for Tee {
    fn record(&mut self, event: &RunEvent) -> Result<()> {
        self.0.iter_mut().try_for_each(|p| p.record(event))
    }

    fn finish(&mut self, summary: &RunSummary) -> Result<()> {
        self.0.iter_mut().try_for_each(|p| p.finish(summary))
    }
}

/// Parses an events file; a bad line is reported by its 1-based number.
pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<RunEvent>> {
    let reader = BufReader::new(File::open(path.as_ref())?);
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ev: RunEvent = serde_json::from_str(&line).map_err(|e| Error::CorruptLog {
            line: i + 1,
            message: e.to_string(),
        })?;
        events.push(ev);
    }
    Ok(events)
}

/// Events of a run directory (or of an events file given directly).
pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<RunEvent>> {
    let path = path.as_ref();
    if path.is_dir() {
        read_events(path.join(EVENTS_FILE))
    } else {
        read_events(path)
    }
}

/// Rebuilds the run summary from its events alone.
pub fn summarize(events: &[RunEvent]) -> Result<RunSummary> {
    let end = events
        .iter()
        .find_map(|e| match &e.body {
            EventBody::RunEnd(end) => Some(end),
            _ => None,
        })
        .ok_or(Error::RunIncomplete)?;
    let mut best: Option<BestCandidate> = None;
    let mut archive = Archive::new();
    let mut codes: BTreeMap<u64, BestCandidate> = BTreeMap::new();
    let mut multi = false;
    let mut status_counts = BTreeMap::new();
    for ev in events {
        let EventBody::EvalFinished(f) = &ev.body else { continue };
        if f.sample_index.is_some() {
            *status_counts.entry(f.status.as_str().to_string()).or_insert(0) += 1;
        }
        let Some(fit) = &f.fitness else { continue };
        let entry = BestCandidate {
            candidate_id: f.candidate_id,
            sample_index: f.sample_index,
            code: f.code.clone(),
            fitness: fit.clone(),
        };
        if fit.len() > 1 {
            multi = true;
            if archive.offer(f.candidate_id, fit) {
                codes.insert(f.candidate_id, entry);
            }
        } else if compare_scalar(Some(fit), best.as_ref().map(|b| &b.fitness))? == Ordering::Less {
            best = Some(entry);
        }
    }
    let pareto: Vec<BestCandidate> = if multi {
        archive
            .entries()
            .iter()
            .map(|e| codes[&e.candidate_id].clone())
            .collect()
    } else {
        Vec::new()
    };
    if multi {
        best = pareto
            .iter()
            .min_by(|a, b| {
                a.fitness.values()[0]
                    .total_cmp(&b.fitness.values()[0])
                    .then(a.candidate_id.cmp(&b.candidate_id))
            })
            .cloned();
    }
    Ok(RunSummary {
        reason: end.reason,
        samples_used: end.samples_used,
        generations: end.generations,
        wall_time_s: end.wall_time_s,
        best,
        pareto,
        status_counts,
        state: end.state.clone(),
    })
}
