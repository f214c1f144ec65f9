#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use algoforge::RunEvent;
use algoforge_service::RunConfig;
use serde_json::Value;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_algoforge")
}

/// The example EoH/OBP config, with its log directory moved under `log_dir`.
pub fn example_config(name: &str, log_dir: &std::path::Path) -> RunConfig {
    let mut c = RunConfig::load(&repo_root().join("configs").join(name)).unwrap();
    c.profiler.log_dir = log_dir.to_path_buf();
    c
}

/// `algoforge serve` on an ephemeral port, killed on drop.
pub struct Server {
    child: Child,
    pub base: String,
}

impl Server {
    pub fn start(max_runs: usize) -> Self {
        let mut child = Command::new(bin())
            .args(["serve", "--port", "0", "--max-runs", &max_runs.to_string()])
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn server");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let base = line.trim().strip_prefix("listening on ").expect("listening line").to_string();
        Self { child, base }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub fn client() -> reqwest::blocking::Client {
    reqwest::blocking::Client::builder().timeout(Duration::from_secs(30)).build().unwrap()
}

pub fn get_json(url: &str) -> (u16, Value) {
    let r = client().get(url).send().unwrap();
    let status = r.status().as_u16();
    (status, r.json().unwrap())
}

pub fn post_json(url: &str, body: &Value) -> (u16, Value) {
    let r = client().post(url).json(body).send().unwrap();
    let status = r.status().as_u16();
    (status, r.json().unwrap())
}

pub fn is_terminal(state: &str) -> bool {
    matches!(state, "Stopped" | "Finished" | "Failed")
}

/// Polls the run until it reaches a terminal state.
pub fn wait_terminal(server: &Server, id: &str, timeout: Duration) -> Value {
    let deadline = Instant::now() + timeout;
    loop {
        let (_, h) = get_json(&server.url(&format!("/runs/{id}")));
        if is_terminal(h["state"].as_str().unwrap()) {
            return h;
        }
        assert!(Instant::now() < deadline, "run {id} still {} after {timeout:?}", h["state"]);
        std::thread::sleep(Duration::from_millis(50));
    }
}

/// Reads the whole log through the `since` cursor, in pages as they appear.
pub fn poll_events(server: &Server, id: &str, timeout: Duration) -> Vec<RunEvent> {
    let deadline = Instant::now() + timeout;
    let mut events: Vec<RunEvent> = Vec::new();
    loop {
        let since = events.last().map_or(-1, |e| e.seq as i64);
        let (status, page) = get_json(&server.url(&format!("/runs/{id}/events?since={since}")));
        assert_eq!(status, 200);
        let page: Vec<RunEvent> = serde_json::from_value(page).unwrap();
        let ended = page.iter().any(|e| e.body.kind() == "RunEnd");
        events.extend(page);
        if ended {
            return events;
        }
        assert!(Instant::now() < deadline, "no RunEnd after {timeout:?}");
        std::thread::sleep(Duration::from_millis(20));
    }
}

/// Accepts connections and never answers them.
pub fn hanging_endpoint() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = format!("http://{}", listener.local_addr().unwrap());
    std::thread::spawn(move || {
        let mut held = Vec::new();
        for stream in listener.incoming().flatten() {
            held.push(stream);
        }
    });
    addr
}
