//! External worker protocol and process supervision.
//!
//! A worker is any program that reads one JSON request line on stdin and
//! answers with one JSON response line on stdout:
//!
//! ```text
//! -> {"task_id":"obp","candidate_code":"def priority(...): ...","instance_seed":0,"instance_count":8}
//! <- {"status":"ok","scores":[0.0412],"detail":""}
//! ```
//!
//! `status` is `"ok"`, `"error"` or `"parse_error"`; on `"ok"`, `scores` holds the task's
//! primary objective (finite). Workers regenerate instances from the seed
//! and count themselves.

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Cap on captured stderr.
pub const MAX_STDERR: usize = 64 * 1024;
const MAX_RESPONSE_LINE: u64 = 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerRequest {
    pub task_id: String,
    pub candidate_code: String,
    pub instance_seed: u64,
    pub instance_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerResponse {
    pub status: String,
    #[serde(default)]
    pub scores: Vec<f64>,
    #[serde(default)]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SuperviseError {
    Spawn(String),
    Timeout { stderr: String },
    Crashed { code: Option<i32>, stderr: String },
    Malformed { line: String, stderr: String },
}

impl std::fmt::Display for SuperviseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SuperviseError::Spawn(e) => write!(f, "failed to spawn worker: {e}"),
            SuperviseError::Timeout { .. } => write!(f, "worker killed at deadline"),
            SuperviseError::Crashed { code, stderr } => {
                write!(f, "worker exited with status {code:?}")?;
                if !stderr.is_empty() {
                    write!(f, ": {stderr}")?;
                }
                Ok(())
            }
            SuperviseError::Malformed { line, .. } => write!(f, "malformed response: {line:?}"),
        }
    }
}

impl std::error::Error for SuperviseError {}

#[cfg(unix)]
fn configure(cmd: &mut Command) {
    use std::os::unix::process::CommandExt;
    cmd.process_group(0);
}

#[cfg(not(unix))]
fn configure(_cmd: &mut Command) {}

#[cfg(unix)]
fn kill_tree(child: &mut Child) {
    // the worker leads its own process group; take down everything in it
    let pgid = child.id() as libc::pid_t;
    unsafe {
        libc::killpg(pgid, libc::SIGKILL);
    }
    let _ = child.kill();
}

#[cfg(not(unix))]
fn kill_tree(child: &mut Child) {
    let _ = child.kill();
}

fn read_capped(mut r: impl Read, cap: usize) -> String {
    let mut kept = Vec::new();
    let mut buf = [0u8; 8192];
    loop {
        match r.read(&mut buf) {
            Ok(0) | Err(_) => break,
            Ok(n) => {
                let room = cap.saturating_sub(kept.len());
                kept.extend_from_slice(&buf[..n.min(room)]);
            }
        }
    }
    String::from_utf8_lossy(&kept).into_owned()
}

/// Runs `argv`, sends `request`, and waits at most `deadline` for the
/// response line and process exit. On deadline the whole process group is
/// killed.
pub fn supervise(
    argv: &[String],
    request: &WorkerRequest,
    deadline: Duration,
) -> Result<WorkerResponse, SuperviseError> {
    let (program, args) = argv
        .split_first()
        .ok_or_else(|| SuperviseError::Spawn("empty worker command".into()))?;
    let mut cmd = Command::new(program);
    cmd.args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    configure(&mut cmd);
    let mut child = cmd.spawn().map_err(|e| SuperviseError::Spawn(format!("{program}: {e}")))?;

    let stderr = child.stderr.take().expect("stderr piped");
    let stderr_thread = thread::spawn(move || read_capped(stderr, MAX_STDERR));

    let stdout = child.stdout.take().expect("stdout piped");
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut line = String::new();
        let got = BufReader::new(stdout.take(MAX_RESPONSE_LINE)).read_line(&mut line);
        let _ = tx.send(got.map(|_| line));
    });

    let mut stdin = child.stdin.take().expect("stdin piped");
    let mut payload = serde_json::to_string(request).expect("request serializes");
    payload.push('\n');
    // a worker that exits without reading is reported through its exit status
    let _ = stdin.write_all(payload.as_bytes()).and_then(|_| stdin.flush());
    drop(stdin);

    let line = match rx.recv_timeout(deadline) {
        Ok(Ok(line)) => line,
        Ok(Err(_)) => String::new(),
        Err(mpsc::RecvTimeoutError::Timeout) => {
            kill_tree(&mut child);
            let _ = child.wait();
            let stderr = stderr_thread.join().unwrap_or_default();
            return Err(SuperviseError::Timeout { stderr });
        }
        Err(mpsc::RecvTimeoutError::Disconnected) => String::new(),
    };

    // reap; a worker lingering after its answer is killed
    let status = wait_briefly(&mut child, Duration::from_millis(500));
    let stderr = stderr_thread.join().unwrap_or_default();

    if line.trim().is_empty() {
        return Err(SuperviseError::Crashed {
            code: status.and_then(|s| s.code()),
            stderr,
        });
    }
    let response: WorkerResponse = match serde_json::from_str(line.trim()) {
        Ok(r) => r,
        Err(_) => {
            return Err(SuperviseError::Malformed {
                line: crate::candidate::truncate(line.trim().to_string(), 200),
                stderr,
            })
        }
    };
    if let Some(st) = status {
        if !st.success() && response.status == "ok" {
            return Err(SuperviseError::Crashed { code: st.code(), stderr });
        }
    }
    Ok(response)
}

fn wait_briefly(child: &mut Child, grace: Duration) -> Option<std::process::ExitStatus> {
    let step = Duration::from_millis(5);
    let mut waited = Duration::ZERO;
    loop {
        match child.try_wait() {
            Ok(Some(s)) => return Some(s),
            Ok(None) if waited < grace => {
                thread::sleep(step);
                waited += step;
            }
            _ => {
                kill_tree(child);
                return child.wait().ok();
            }
        }
    }
}
