use std::sync::atomic::{AtomicUsize, Ordering};

use super::{Prompt, SampleError, Sampler};
use crate::error::{Error, Result};

/// Returns scripted responses in order, cycling when exhausted. The cursor
/// is atomic, so concurrent draws never duplicate a position.
#[derive(Debug)]
pub struct MockSampler {
    script: Vec<String>,
    cursor: AtomicUsize,
}

impl MockSampler {
    pub fn new(script: Vec<String>) -> Result<Self> {
        if script.is_empty() {
            return Err(Error::Config("mock sampler script is empty".into()));
        }
        Ok(Self {
            script,
            cursor: AtomicUsize::new(0),
        })
    }

    pub fn draws(&self) -> usize {
        self.cursor.load(Ordering::SeqCst)
    }
}

/// A response in the shape the prompts ask for: an idea in braces, then
/// the code in a fenced block.
pub fn fenced_response(idea: &str, code: &str) -> String {
    format!("{{{idea}}}\n\n```python\n{}\n```\n", code.trim_end())
}

impl Sampler for MockSampler {
    fn draw_sample(&self, _prompt: &Prompt) -> std::result::Result<String, SampleError> {
        let i = self.cursor.fetch_add(1, Ordering::SeqCst);
        Ok(self.script[i % self.script.len()].clone())
    }
}
