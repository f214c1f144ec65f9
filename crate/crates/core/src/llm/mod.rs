//! Samplers: where candidate text comes from.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::parallel::parallel_map;

#[cfg(feature = "http")]
mod http;
mod mock;

#[cfg(feature = "http")]
pub use http::HttpSampler;
pub use mock::{fenced_response, MockSampler};

/// Environment variables consulted, in order, when no API key is configured.
pub const API_KEY_ENV: [&str; 2] = ["ALGOFORGE_API_KEY", "OPENAI_API_KEY"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub system: String,
    pub user: String,
    /// Method name, operator tag, parent ids and the like; carried to logs.
    pub metadata: BTreeMap<String, String>,
}

impl Prompt {
    pub fn new(system: impl Into<String>, user: impl Into<String>) -> Self {
        Self {
            system: system.into(),
            user: user.into(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }
}

/// A failed draw. Never carries partial text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleError {
    pub message: String,
}

impl SampleError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

impl fmt::Display for SampleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for SampleError {}

pub trait Sampler: Send + Sync {
    fn draw_sample(&self, prompt: &Prompt) -> Result<String, SampleError>;
}

impl<S: Sampler + ?Sized> Sampler for std::sync::Arc<S> {
    fn draw_sample(&self, prompt: &Prompt) -> Result<String, SampleError> {
        (**self).draw_sample(prompt)
    }
}

impl<S: Sampler + ?Sized> Sampler for Box<S> {
    fn draw_sample(&self, prompt: &Prompt) -> Result<String, SampleError> {
        (**self).draw_sample(prompt)
    }
}

/// Draws one sample per prompt with at most `parallelism` draws in flight.
/// Results are aligned with `prompts`; one failure does not affect others.
pub fn draw_batch(
    sampler: &dyn Sampler,
    prompts: &[Prompt],
    parallelism: usize,
) -> Vec<Result<String, SampleError>> {
    parallel_map(prompts, parallelism, |p| sampler.draw_sample(p))
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub host: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub api_key: String,
    pub model: String,
    #[serde(default = "default_request_timeout")]
    pub request_timeout_s: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub temperature: Option<f64>,
}

fn default_request_timeout() -> f64 {
    20.0
}

fn default_retries() -> u32 {
    2
}

impl SamplerConfig {
    pub fn new(host: impl Into<String>, api_key: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            host: host.into(),
            api_key: api_key.into(),
            model: model.into(),
            request_timeout_s: default_request_timeout(),
            max_retries: default_retries(),
            temperature: None,
        }
    }

    /// Configured key, else the first non-empty key environment variable.
    pub fn resolved_api_key(&self) -> Option<String> {
        if !self.api_key.is_empty() {
            return Some(self.api_key.clone());
        }
        API_KEY_ENV
            .iter()
            .filter_map(|var| std::env::var(var).ok())
            .find(|k| !k.is_empty())
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.host.trim().is_empty() {
            return Err("llm.host must not be empty".into());
        }
        if self.model.trim().is_empty() {
            return Err("llm.model must not be empty".into());
        }
        if !(self.request_timeout_s > 0.0 && self.request_timeout_s.is_finite()) {
            return Err("llm.request_timeout_s must be positive".into());
        }
        if self.resolved_api_key().is_none() {
            return Err(format!(
                "llm.api_key is empty and none of {} is set",
                API_KEY_ENV.join(", ")
            ));
        }
        Ok(())
    }

    /// Chat-completions endpoint derived from `host`.
    pub fn endpoint(&self) -> String {
        let host = self.host.trim().trim_end_matches('/');
        let base = if host.contains("://") {
            host.to_string()
        } else {
            format!("https://{host}")
        };
        if base.ends_with("/chat/completions") {
            return base;
        }
        let has_path = base
            .split_once("://")
            .map(|(_, rest)| rest.contains('/'))
            .unwrap_or(false);
        if has_path {
            format!("{base}/chat/completions")
        } else {
            format!("{base}/v1/chat/completions")
        }
    }
}

impl fmt::Debug for SamplerConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SamplerConfig")
            .field("host", &self.host)
            .field("api_key", &redact(&self.api_key))
            .field("model", &self.model)
            .field("request_timeout_s", &self.request_timeout_s)
            .field("max_retries", &self.max_retries)
            .field("temperature", &self.temperature)
            .finish()
    }
}

impl fmt::Display for SamplerConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ {} (key: {})", self.model, self.host, redact(&self.api_key))
    }
}

pub(crate) fn redact(key: &str) -> &'static str {
    if key.is_empty() {
        "<unset>"
    } else {
        "<redacted>"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::time::Duration;

    #[test]
    fn endpoint_forms() {
        let mut c = SamplerConfig::new("api.example.com", "k", "m");
        assert_eq!(c.endpoint(), "https://api.example.com/v1/chat/completions");
        c.host = "http://127.0.0.1:8080/v1/".into();
        assert_eq!(c.endpoint(), "http://127.0.0.1:8080/v1/chat/completions");
        c.host = "http://h/x/chat/completions".into();
        assert_eq!(c.endpoint(), "http://h/x/chat/completions");
    }

    #[test]
    fn display_hides_key() {
        let c = SamplerConfig::new("h", "sk-secret", "m");
        assert!(!c.to_string().contains("sk-secret"));
        assert!(!format!("{c:?}").contains("sk-secret"));
    }

    struct Counting {
        live: AtomicUsize,
        peak: AtomicUsize,
    }

    impl Sampler for Counting {
        fn draw_sample(&self, prompt: &Prompt) -> Result<String, SampleError> {
            let now = self.live.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(10));
            self.live.fetch_sub(1, Ordering::SeqCst);
            if prompt.user == "fail" {
                Err(SampleError::new("endpoint failure"))
            } else {
                Ok(prompt.user.to_uppercase())
            }
        }
    }

    #[test]
    fn batch_alignment_and_bound() {
        let s = Counting {
            live: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        };
        let prompts: Vec<Prompt> = ["a", "fail", "c"].iter().map(|u| Prompt::new("", *u)).collect();
        let out = draw_batch(&s, &prompts, 4);
        assert_eq!(out[0].as_deref(), Ok("A"));
        assert!(out[1].is_err());
        assert_eq!(out[2].as_deref(), Ok("C"));

        let many: Vec<Prompt> = (0..16).map(|i| Prompt::new("", i.to_string())).collect();
        let out = draw_batch(&s, &many, 4);
        assert_eq!(out.len(), 16);
        assert!(s.peak.load(Ordering::SeqCst) <= 4);
    }

    #[test]
    fn funsearch_sized_batch() {
        let mock = MockSampler::new(vec!["x".into()]).unwrap();
        let prompts = vec![Prompt::new("s", "u"); 4];
        assert_eq!(draw_batch(&mock, &prompts, 4).len(), 4);
    }
}
