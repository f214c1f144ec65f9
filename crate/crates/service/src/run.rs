//! Executing one configured run. Shared by the CLI and the HTTP API so that
//! both produce the same run directory.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use algoforge::profiler::{JsonlProfiler, Profiler, Tee};
use algoforge::search::{run, RunSummary, StopSignal};

use crate::config::{Resolved, RunConfig};

static COUNTER: AtomicU64 = AtomicU64::new(0);

/// `run-<unix seconds>-<pid>-<n>`; unique within a process and unlikely to
/// collide across processes.
pub fn generate_run_id() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    format!("run-{secs}-{}-{n}", std::process::id())
}

pub fn run_dir(config: &RunConfig, run_id: &str) -> PathBuf {
    config.profiler.log_dir.join(run_id)
}

/// Runs to completion, writing `config.json`, `events.jsonl` and
/// `summary.json` under `dir`. `extra` receives the same events.
pub fn execute(
    config: &RunConfig,
    resolved: &Resolved,
    dir: &Path,
    extra: Vec<Box<dyn Profiler>>,
    stop: &StopSignal,
) -> algoforge::Result<RunSummary> {
    let jsonl = JsonlProfiler::create(dir, &config.redacted())?;
    let mut sinks: Vec<Box<dyn Profiler>> = vec![Box::new(jsonl)];
    sinks.extend(extra);
    let mut profiler = Tee(sinks);
    run(
        &resolved.method,
        &resolved.task,
        resolved.sampler.as_ref(),
        &resolved.budget,
        &mut profiler,
        stop,
    )
}
