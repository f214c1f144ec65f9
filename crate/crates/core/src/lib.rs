//! Algorithm search driven by a language-model sampler.
//!
//! A run repeatedly builds prompts from the current search state, draws
//! candidate programs from a [`llm::Sampler`], evaluates them in the
//! [`sandbox`] against a [`tasks::Task`], and feeds the outcomes back into
//! one of the [`search`] methods. Every step is recorded as a
//! [`event::RunEvent`] by a [`profiler::Profiler`].
//!
//! All objectives are minimized.

pub mod budget;
pub mod candidate;
pub mod codekit;
pub mod error;
pub mod event;
pub mod fitness;
pub mod llm;
mod parallel;
pub mod profiler;
pub mod sandbox;
pub mod search;
pub mod tasks;

pub use budget::Budget;
pub use candidate::{Candidate, EvalOutcome, EvalStatus};
pub use error::{Error, Result};
pub use event::{EventBody, RunEvent, StopReason};
pub use fitness::{compare_scalar, dominates, FitnessVector};
