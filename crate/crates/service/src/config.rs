//! Run configuration. The same schema is read from TOML files by the CLI
//! and from JSON bodies by the HTTP API.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use algoforge::llm::{HttpSampler, MockSampler, Sampler, SamplerConfig};
use algoforge::sandbox::python_worker_argv;
use algoforge::search::{Method, MethodConfig};
use algoforge::tasks::{task_ids, Task};
use algoforge::Budget;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A configuration problem, optionally pinned to a dotted field path.
#[derive(Debug, Clone, Error, Serialize)]
pub struct ConfigError {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "{field}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            field: None,
            message: message.into(),
        }
    }

    pub fn at(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: Some(field.into()),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Assigned when absent. Names the run directory under `profiler.log_dir`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_id: Option<String>,
    pub llm: LlmConfig,
    #[serde(default)]
    pub method: MethodConfig,
    pub task: TaskConfig,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub profiler: ProfilerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LlmConfig {
    Mock(MockConfig),
    Http(SamplerConfig),
}

/// Scripted responses, inline or from a JSON file holding an array of
/// strings. Inline responses come first when both are given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub responses: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_count: Option<usize>,
    /// Overrides `budget.eval_timeout_s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worker: Option<WorkerSpec>,
}

/// `"python"` for the bundled worker, or an explicit argv.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WorkerSpec {
    Named(String),
    Argv(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfilerConfig {
    pub log_dir: PathBuf,
}

impl Default for ProfilerConfig {
    fn default() -> Self {
        Self {
            log_dir: PathBuf::from("runs"),
        }
    }
}

/// Everything a run needs, built and checked from a [`RunConfig`].
pub struct Resolved {
    pub task: Task,
    pub method: MethodConfig,
    pub budget: Budget,
    pub sampler: Box<dyn Sampler>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value = toml::from_str(text).map_err(|e| ConfigError::new(e.message().to_string()))?;
        Self::from_value(value)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, ConfigError> {
        let value: serde_json::Value =
            serde_json::from_slice(bytes).map_err(|e| ConfigError::new(format!("invalid JSON: {e}")))?;
        Self::from_value(value)
    }

    /// Reads a TOML file; a relative mock script path is taken relative to
    /// the file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        if let LlmConfig::Mock(MockConfig { script: Some(script), .. }) = &mut config.llm {
            if script.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                *script = base.join(&*script);
            }
        }
        Ok(config)
    }

    fn from_value(value: serde_json::Value) -> Result<Self, ConfigError> {
        precheck(&value)?;
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let message = e.into_inner().to_string();
            if path == "." {
                ConfigError::new(message)
            } else {
                ConfigError::at(path, message)
            }
        })
    }

    /// Copy safe to persist or return from the API.
    pub fn redacted(&self) -> Self {
        let mut c = self.clone();
        if let LlmConfig::Http(h) = &mut c.llm {
            if !h.api_key.is_empty() {
                h.api_key = "***".into();
            }
        }
        c
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        if let Some(id) = &self.run_id {
            check_run_id(id)?;
        }
        self.method
            .validate()
            .map_err(|(field, msg)| ConfigError::at(format!("method.{field}"), msg))?;
        let mut budget = self.budget.clone();
        if let Some(t) = self.task.timeout_s {
            budget.eval_timeout_s = t;
        }
        budget.validate().map_err(|e| ConfigError::at("budget", strip(e)))?;
        if self.task.timeout_s.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
            return Err(ConfigError::at("task.timeout_s", "must be positive"));
        }

        let mut task = Task::builtin(&self.task.id).map_err(|e| ConfigError::at("task.id", strip(e)))?;
        if self.task.instance_seed.is_some() || self.task.instance_count.is_some() {
            let seed = self.task.instance_seed.unwrap_or(task.instance_seed);
            let count = self.task.instance_count.unwrap_or(task.instance_count);
            task = task
                .with_instances(seed, count)
                .map_err(|e| ConfigError::at("task.instance_count", strip(e)))?;
        }
        if let Some(worker) = &self.task.worker {
            let argv = match worker {
                WorkerSpec::Named(name) if name == "python" => python_worker_argv(),
                WorkerSpec::Named(name) => {
                    return Err(ConfigError::at(
                        "task.worker",
                        format!("unknown worker `{name}`; use \"python\" or an argv list"),
                    ))
                }
                WorkerSpec::Argv(argv) => argv.clone(),
            };
            task = task.with_worker(argv).map_err(|e| ConfigError::at("task.worker", strip(e)))?;
        }

        let sampler: Box<dyn Sampler> = match &self.llm {
            LlmConfig::Mock(m) => Box::new(mock_sampler(m)?),
            LlmConfig::Http(h) => {
                h.validate().map_err(|msg| ConfigError::at("llm", msg))?;
                Box::new(HttpSampler::new(h.clone()).map_err(|e| ConfigError::at("llm", strip(e)))?)
            }
        };
        Ok(Resolved {
            task,
            method: self.method.clone(),
            budget,
            sampler,
        })
    }
}

/// Catches unknown method and task names early so the error lists the
/// valid choices.
fn precheck(value: &serde_json::Value) -> Result<(), ConfigError> {
    if let Some(name) = value.pointer("/method/method").and_then(|v| v.as_str()) {
        Method::from_str(name).map_err(|_| {
            ConfigError::at(
                "method.method",
                format!("unknown method `{name}`; valid methods: {}", Method::names().join(", ")),
            )
        })?;
    }
    if let Some(id) = value.pointer("/task/id").and_then(|v| v.as_str()) {
        if !task_ids().contains(&id) {
            return Err(ConfigError::at(
                "task.id",
                format!("unknown task `{id}`; valid tasks: {}", task_ids().join(", ")),
            ));
        }
    }
    Ok(())
}

fn mock_sampler(m: &MockConfig) -> Result<MockSampler, ConfigError> {
    let mut script = m.responses.clone();
    if let Some(path) = &m.script {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::at("llm.script", format!("cannot read {}: {e}", path.display())))?;
        let more: Vec<String> = serde_json::from_str(&text).map_err(|e| {
            ConfigError::at(
                "llm.script",
                format!("{} is not a JSON array of strings: {e}", path.display()),
            )
        })?;
        script.extend(more);
    }
    MockSampler::new(script).map_err(|e| ConfigError::at("llm.responses", strip(e)))
}

fn strip(e: algoforge::Error) -> String {
    match e {
        algoforge::Error::Config(m) => m,
        other => other.to_string(),
    }
}

/// Run ids become directory names.
pub fn check_run_id(id: &str) -> Result<(), ConfigError> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(ConfigError::at(
            "run_id",
            "must be 1-128 characters of [A-Za-z0-9._-] and not start with '.'",
        ))
    }
}
