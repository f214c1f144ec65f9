mod common;

use std::time::{Duration, Instant};

use algoforge::event::canonical_jsonl;
use algoforge::profiler::read_log;
use common::*;
use serde_json::{json, Value};

fn mock_body(dir: &std::path::Path, max_samples: u64) -> Value {
    let mut c = example_config("eoh_obp.toml", dir);
    c.run_id = None;
    c.budget.max_samples = max_samples;
    serde_json::to_value(c).unwrap()
}

#[test]
fn registries() {
    let server = Server::start(4);
    let (s, tasks) = get_json(&server.url("/tasks"));
    assert_eq!(s, 200);
    let ids: Vec<&str> = tasks.as_array().unwrap().iter().map(|t| t["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["obp", "tsp_construct", "sr_growth"]);
    assert!(tasks[0]["template"].as_str().unwrap().contains("def priority"));
    let (_, methods) = get_json(&server.url("/methods"));
    assert_eq!(methods.as_array().unwrap().len(), 10);
    let (s, err) = get_json(&server.url("/nope"));
    assert_eq!(s, 404);
    assert_eq!(err["code"], "not_found");
}

#[test]
fn lifecycle_and_cursor_replay() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(4);
    let (s, h) = post_json(&server.url("/runs"), &mock_body(dir.path(), 12));
    assert_eq!(s, 201, "{h}");
    assert!(["Pending", "Running", "Finished"].contains(&h["state"].as_str().unwrap()));
    let id = h["run_id"].as_str().unwrap().to_string();

    let polled = poll_events(&server, &id, Duration::from_secs(30));
    let end = wait_terminal(&server, &id, Duration::from_secs(30));
    assert_eq!(end["state"], "Finished");
    assert_eq!(end["samples_used"], 12);
    assert!(end["best"]["code"].as_str().unwrap().contains("def priority"));

    let on_disk = read_log(dir.path().join(&id)).unwrap();
    assert_eq!(polled, on_disk);
    assert_eq!(canonical_jsonl(&polled), canonical_jsonl(&on_disk));

    let last = polled.last().unwrap().seq;
    let (_, tail) = get_json(&server.url(&format!("/runs/{id}/events?since={last}")));
    assert_eq!(tail, json!([]));
    let (s, _) = get_json(&server.url(&format!("/runs/{id}/events?since=abc")));
    assert_eq!(s, 400);

    let (_, best) = get_json(&server.url(&format!("/runs/{id}/best")));
    assert_eq!(best["best"], end["best"]);

    // stopping a finished run changes nothing
    let (s, again) = post_json(&server.url(&format!("/runs/{id}/stop")), &json!({}));
    assert_eq!(s, 200);
    assert_eq!(again["state"], "Finished");

    let (s, _) = get_json(&server.url("/runs/missing"));
    assert_eq!(s, 404);
    let (s, _) = post_json(&server.url("/runs/missing/stop"), &json!({}));
    assert_eq!(s, 404);
}

#[test]
fn invalid_configs_are_rejected_with_fields() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(4);
    let mut body = mock_body(dir.path(), 5);
    body["method"]["method"] = json!("eohx");
    let (s, e) = post_json(&server.url("/runs"), &body);
    assert_eq!(s, 400);
    assert_eq!(e["code"], "invalid_config");
    assert_eq!(e["field"], "method.method");
    assert!(e["message"].as_str().unwrap().contains("moeoh_nsga2"));

    let mut body = mock_body(dir.path(), 5);
    body["llm"] = json!({"kind": "http", "host": "http://127.0.0.1:9", "model": "m"});
    if algoforge::llm::API_KEY_ENV.iter().all(|v| std::env::var(v).is_err()) {
        let (s, e) = post_json(&server.url("/runs"), &body);
        assert_eq!(s, 400);
        assert!(e["message"].as_str().unwrap().contains("api_key"), "{e}");
    }

    let r = client().post(server.url("/runs")).body("{not json").send().unwrap();
    assert_eq!(r.status().as_u16(), 400);
    let e: Value = r.json().unwrap();
    assert_eq!(e["code"], "invalid_config");
}

#[test]
fn run_cap_and_stop() {
    let server = Server::start(1);
    let dir = tempfile::tempdir().unwrap();
    let hang = hanging_endpoint();
    let mut body = mock_body(dir.path(), 5);
    body["llm"] = json!({"kind": "http", "host": hang, "model": "m", "api_key": "k", "request_timeout_s": 2.0, "max_retries": 0});
    let (s, h) = post_json(&server.url("/runs"), &body);
    assert_eq!(s, 201);
    let id = h["run_id"].as_str().unwrap().to_string();

    let (s, e) = post_json(&server.url("/runs"), &mock_body(dir.path(), 5));
    assert_eq!(s, 429);
    assert_eq!(e["code"], "too_many_runs");

    let t = Instant::now();
    let (s, _) = post_json(&server.url(&format!("/runs/{id}/stop")), &json!({}));
    assert_eq!(s, 200);
    let end = wait_terminal(&server, &id, Duration::from_secs(10));
    assert_eq!(end["state"], "Stopped", "{end}");
    assert!(t.elapsed() < Duration::from_secs(5));
    let summary = std::fs::read_to_string(dir.path().join(&id).join("summary.json")).unwrap();
    assert!(summary.contains("\"stopped\""));
    let config = std::fs::read_to_string(dir.path().join(&id).join("config.json")).unwrap();
    assert!(!config.contains("\"api_key\": \"k\""));

    // the slot is free again
    let (s, _) = post_json(&server.url("/runs"), &mock_body(dir.path(), 3));
    assert_eq!(s, 201);
}

#[test]
fn stop_during_a_long_evaluation() {
    let server = Server::start(2);
    let dir = tempfile::tempdir().unwrap();
    let looping = algoforge::llm::fenced_response("spin", "def priority(item, bins):\n    while True:\n        pass");
    let body = json!({
        "llm": {"kind": "mock", "responses": [looping]},
        "method": {"method": "random_sampling"},
        "task": {"id": "obp", "worker": "python", "timeout_s": 3.0, "instance_count": 2},
        "budget": {"max_samples": 50},
        "profiler": {"log_dir": dir.path()},
    });
    let (s, h) = post_json(&server.url("/runs"), &body);
    assert_eq!(s, 201, "{h}");
    let id = h["run_id"].as_str().unwrap().to_string();
    std::thread::sleep(Duration::from_millis(500));
    let t = Instant::now();
    post_json(&server.url(&format!("/runs/{id}/stop")), &json!({}));
    let end = wait_terminal(&server, &id, Duration::from_secs(10));
    assert_eq!(end["state"], "Stopped");
    // one evaluation timeout plus the kill grace
    assert!(t.elapsed() <= Duration::from_secs(3 + 2), "{:?}", t.elapsed());
    assert!(end["samples_used"].as_u64().unwrap() < 50);
}
