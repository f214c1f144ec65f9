use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use algoforge::llm::{draw_batch, HttpSampler, Prompt, Sampler, SamplerConfig};

struct Reply {
    status: u16,
    body: String,
    delay: Duration,
}

impl Reply {
    fn ok(content: &str) -> Self {
        let body = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]});
        Self { status: 200, body: body.to_string(), delay: Duration::ZERO }
    }

    fn status(status: u16) -> Self {
        Self { status, body: "{}".into(), delay: Duration::ZERO }
    }
}

#[derive(Default)]
struct Seen {
    requests: Vec<(String, String)>,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
}

/// Serves canned replies; `respond` receives the zero-based request number.
fn serve(respond: impl Fn(usize) -> Reply + Send + Sync + 'static) -> (String, Arc<Mutex<Seen>>, Arc<Seen>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = format!("http://{}", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Seen::default()));
    let gauge = Arc::new(Seen::default());
    let respond = Arc::new(respond);
    let (s2, g2) = (seen.clone(), gauge.clone());
    std::thread::spawn(move || {
        let counter = Arc::new(AtomicUsize::new(0));
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            let (seen, gauge, respond, counter) = (s2.clone(), g2.clone(), respond.clone(), counter.clone());
            std::thread::spawn(move || handle(stream, &seen, &gauge, &*respond, &counter));
        }
    });
    (addr, seen, gauge)
}

fn handle(stream: TcpStream, seen: &Mutex<Seen>, gauge: &Seen, respond: &dyn Fn(usize) -> Reply, counter: &AtomicUsize) {
    let now = gauge.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    gauge.peak.fetch_max(now, Ordering::SeqCst);
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut headers = String::new();
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
            break;
        }
        if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
            length = v.trim().parse().unwrap_or(0);
        }
        headers.push_str(&line);
    }
    let mut body = vec![0u8; length];
    let _ = reader.read_exact(&mut body);
    seen.lock().unwrap().requests.push((headers, String::from_utf8_lossy(&body).into_owned()));
    let reply = respond(counter.fetch_add(1, Ordering::SeqCst));
    std::thread::sleep(reply.delay);
    let mut out = stream;
    let _ = write!(
        out,
        "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.status,
        reply.body.len(),
        reply.body
    );
    gauge.in_flight.fetch_sub(1, Ordering::SeqCst);
}

fn config(host: &str, retries: u32, timeout_s: f64) -> SamplerConfig {
    let mut c = SamplerConfig::new(host, "sk-test-key", "test-model");
    c.max_retries = retries;
    c.request_timeout_s = timeout_s;
    c
}

#[test]
fn successful_completion() {
    let (host, seen, _) = serve(|_| Reply::ok("idea\n```python\ndef f(x):\n    return x\n```"));
    let sampler = HttpSampler::new(config(&host, 0, 5.0)).unwrap();
    let text = sampler.draw_sample(&Prompt::new("sys", "user text")).unwrap();
    assert!(text.contains("def f(x)"));
    let seen = seen.lock().unwrap();
    let (headers, body) = &seen.requests[0];
    assert!(headers.starts_with("POST /v1/chat/completions"));
    assert!(headers.to_ascii_lowercase().contains("authorization: bearer sk-test-key"));
    let body: serde_json::Value = serde_json::from_str(body).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][1]["content"], "user text");
}

#[test]
fn server_errors_exhaust_retries() {
    let (host, seen, _) = serve(|_| Reply::status(500));
    let sampler = HttpSampler::new(config(&host, 1, 5.0)).unwrap();
    let err = sampler.draw_sample(&Prompt::new("", "u")).unwrap_err();
    assert!(err.message.contains("500"), "{err}");
    assert_eq!(seen.lock().unwrap().requests.len(), 2);
}

#[test]
fn retry_recovers() {
    let (host, _, _) = serve(|n| if n == 0 { Reply::status(503) } else { Reply::ok("fine") });
    let sampler = HttpSampler::new(config(&host, 1, 5.0)).unwrap();
    assert_eq!(sampler.draw_sample(&Prompt::new("", "u")).unwrap(), "fine");
}

#[test]
fn slow_endpoint_times_out() {
    let (host, _, _) = serve(|_| Reply { delay: Duration::from_secs(4), ..Reply::ok("late") });
    let sampler = HttpSampler::new(config(&host, 0, 0.5)).unwrap();
    let t = Instant::now();
    let err = sampler.draw_sample(&Prompt::new("", "u")).unwrap_err();
    assert!(err.message.contains("timed out"), "{err}");
    assert!(t.elapsed() < Duration::from_secs(3));
}

#[test]
fn malformed_bodies_are_sample_errors() {
    let (host, _, _) = serve(|n| match n {
        0 => Reply { status: 200, body: "not json".into(), delay: Duration::ZERO },
        _ => Reply { status: 200, body: r#"{"choices": []}"#.into(), delay: Duration::ZERO },
    });
    let sampler = HttpSampler::new(config(&host, 0, 5.0)).unwrap();
    assert!(sampler.draw_sample(&Prompt::new("", "u")).unwrap_err().message.contains("malformed"));
    assert!(sampler.draw_sample(&Prompt::new("", "u")).unwrap_err().message.contains("no content"));
}

#[test]
fn in_flight_requests_are_bounded() {
    let (host, _, gauge) = serve(|_| Reply { delay: Duration::from_millis(150), ..Reply::ok("x") });
    let sampler = HttpSampler::new(config(&host, 0, 5.0)).unwrap();
    let prompts: Vec<Prompt> = (0..9).map(|i| Prompt::new("", format!("p{i}"))).collect();
    let results = draw_batch(&sampler, &prompts, 3);
    assert!(results.iter().all(|r| r.is_ok()));
    let peak = gauge.peak.load(Ordering::SeqCst);
    assert!((2..=3).contains(&peak), "peak {peak}");
}

#[test]
fn unreachable_endpoint() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let sampler = HttpSampler::new(config(&format!("http://127.0.0.1:{port}"), 0, 2.0)).unwrap();
    assert!(sampler.draw_sample(&Prompt::new("", "u")).is_err());
}
