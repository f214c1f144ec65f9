use std::time::Duration;

use log::debug;
use serde::{Deserialize, Serialize};

use super::{redact, Prompt, SampleError, Sampler, SamplerConfig};
use crate::error::{Error, Result};

/// Pause between attempts.
pub const RETRY_BACKOFF: Duration = Duration::from_secs(1);

/// OpenAI-compatible chat-completion client.
pub struct HttpSampler {
    config: SamplerConfig,
    api_key: String,
    endpoint: String,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature: Option<f64>,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

impl HttpSampler {
    pub fn new(config: SamplerConfig) -> Result<Self> {
        config.validate().map_err(Error::Config)?;
        let api_key = config.resolved_api_key().unwrap_or_default();
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.request_timeout_s))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        if config.temperature.is_none() {
            debug!("no temperature configured for {}; using endpoint default", config.model);
        }
        Ok(Self {
            endpoint: config.endpoint(),
            api_key,
            config,
            client,
        })
    }

    fn attempt(&self, prompt: &Prompt) -> std::result::Result<String, String> {
        let mut messages = Vec::with_capacity(2);
        if !prompt.system.is_empty() {
            messages.push(ChatMessage {
                role: "system",
                content: &prompt.system,
            });
        }
        messages.push(ChatMessage {
            role: "user",
            content: &prompt.user,
        });
        let body = ChatRequest {
            model: &self.config.model,
            messages,
            temperature: self.config.temperature,
        };
        debug!(
            "POST {} model={} key={} body={}",
            self.endpoint,
            self.config.model,
            redact(&self.api_key),
            serde_json::to_string(&body).unwrap_or_default()
        );
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    format!("request timed out after {}s", self.config.request_timeout_s)
                } else {
                    format!("request failed: {e}")
                }
            })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| format!("reading response: {e}"))?;
        debug!("response status={status} body={text}");
        if !status.is_success() {
            return Err(format!("endpoint returned HTTP {}", status.as_u16()));
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| format!("malformed completion body: {e}"))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| "completion has no content".to_string())
    }
}

impl Sampler for HttpSampler {
    fn draw_sample(&self, prompt: &Prompt) -> std::result::Result<String, SampleError> {
        let attempts = self.config.max_retries + 1;
        let mut last = String::new();
        for n in 0..attempts {
            if n > 0 {
                std::thread::sleep(RETRY_BACKOFF);
            }
            match self.attempt(prompt) {
                Ok(text) => return Ok(text),
                Err(e) => {
                    debug!("attempt {}/{attempts} failed: {e}", n + 1);
                    last = e;
                }
            }
        }
        Err(SampleError::new(format!("{last} (after {attempts} attempt(s))")))
    }
}
