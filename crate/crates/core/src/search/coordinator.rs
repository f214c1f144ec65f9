//! The generation loop shared by every method.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::population::Archive;
use super::{make_strategy, BestCandidate, Ctx, MethodConfig, Proposal, RunSummary, StopSignal};
use crate::budget::Budget;
use crate::candidate::{Candidate, EvalOutcome, EvalStatus};
use crate::codekit::template::rename_function;
use crate::codekit::{code_hash, extract_candidate, extract_idea};
use crate::error::{Error, Result};
use crate::event::{
    ErrorEvent, EvalFinished, EventBody, GenerationEnd, NewBest, RunEnd, RunEvent, SampleDrawn, StopReason,
};
use crate::fitness::compare_scalar;
use crate::llm::{draw_batch, Sampler};
use crate::parallel::parallel_map;
use crate::profiler::Profiler;
use crate::sandbox;
use crate::tasks::Task;

struct Log<'p> {
    profiler: &'p mut dyn Profiler,
    seq: u64,
    started: Instant,
}

impl Log<'_> {
    fn emit(&mut self, body: EventBody) -> Result<()> {
        let ev = RunEvent {
            seq: self.seq,
            ts: self.started.elapsed().as_secs_f64(),
            body,
        };
        self.seq += 1;
        self.profiler.record(&ev)
    }
}

/// Best-so-far bookkeeping: scalar best, or the non-dominated archive.
struct Tracker {
    multi: bool,
    best: Option<Candidate>,
    archive: Archive,
}

impl Tracker {
    /// Returns the NewBest payload when `c` improves the record.
    fn offer(&mut self, c: &Candidate) -> Option<NewBest> {
        let f = c.fitness()?;
        let improved = if self.multi {
            self.archive.offer(c.id, f)
        } else {
            let better = compare_scalar(Some(f), self.best.as_ref().and_then(|b| b.fitness()))
                .map(|o| o == Ordering::Less)
                .unwrap_or(false);
            if better {
                self.best = Some(c.clone());
                self.archive = Archive::new();
                self.archive.offer(c.id, f);
            }
            better
        };
        improved.then(|| NewBest {
            candidate_id: c.id,
            sample_index: c.sample_index,
            fitness: f.clone(),
            code: c.code.clone(),
            archive_size: self.archive.len(),
        })
    }
}

fn finished_event(c: &Candidate) -> EventBody {
    EventBody::EvalFinished(EvalFinished {
        candidate_id: c.id,
        sample_index: c.sample_index,
        operator: c.operator.clone(),
        parent_ids: c.parent_ids.clone(),
        status: c.outcome.status,
        fitness: c.outcome.fitness.clone(),
        wall_time_s: c.outcome.wall_time_s,
        diagnostics: c.outcome.diagnostics.clone(),
        code: c.code.clone(),
        idea: c.idea.clone(),
    })
}

/// Extraction result for one response: code to evaluate, or the outcome
/// that already decides the candidate.
fn extract(task: &Task, proposal: &Proposal, response: &str) -> std::result::Result<String, String> {
    let name = &task.template.function_name;
    match &proposal.target {
        Some(target) if target != name => {
            let mut t = task.template.clone();
            t.function_name = target.clone();
            extract_candidate(response, &t)
                .map(|code| rename_function(&code, target, name))
                .map_err(|e| e.to_string())
        }
        _ => extract_candidate(response, &task.template).map_err(|e| e.to_string()),
    }
}

/// Runs `method` on `task` until the budget is spent, the generation cap
/// is hit, `stop` is raised, or the sampler fails for a whole generation.
///
/// Events go to `profiler` in order; exactly one `RunEnd` is emitted.
/// Multi-objective methods run the task with the complexity objective
/// appended.
pub fn run(
    method: &MethodConfig,
    task: &Task,
    sampler: &dyn Sampler,
    budget: &Budget,
    profiler: &mut dyn Profiler,
    stop: &StopSignal,
) -> Result<RunSummary> {
    budget.validate()?;
    method
        .validate()
        .map_err(|(field, msg)| Error::Config(format!("method.{field}: {msg}")))?;
    let task = task.clone().with_objective_count(method.method.objective_count())?;
    let mut strategy = make_strategy(method, budget)?;
    let mut rng = ChaCha8Rng::seed_from_u64(method.rng_seed);
    let timeout = budget.eval_timeout();
    let mut log = Log {
        profiler,
        seq: 0,
        started: Instant::now(),
    };
    let mut tracker = Tracker {
        multi: method.method.objective_count() > 1,
        best: None,
        archive: Archive::new(),
    };
    let mut history: Vec<Candidate> = Vec::new();
    let mut samples_used = 0u64;
    let mut generations = 0u64;

    let outcome = (|| -> Result<StopReason> {
        // the template is evaluated once without a sampler call
        let code = task.template.source.clone();
        let seed = Candidate {
            id: 0,
            outcome: sandbox::evaluate(&code, &task, timeout),
            normalized_hash: code_hash(&code),
            code,
            idea: None,
            parent_ids: Vec::new(),
            sample_index: None,
            operator: "template".into(),
        };
        log.emit(finished_event(&seed))?;
        if let Some(nb) = tracker.offer(&seed) {
            log.emit(EventBody::NewBest(nb))?;
        }
        if seed.is_valid() {
            let mut ctx = Ctx {
                task: &task,
                cfg: method,
                rng: &mut rng,
                samples_used,
                best: tracker.best.as_ref(),
            };
            strategy.seed(&seed, &mut ctx);
        }
        history.push(seed);

        loop {
            if budget.remaining(samples_used) == 0 {
                return Ok(StopReason::BudgetExhausted);
            }
            if budget.max_generations.is_some_and(|g| generations >= g) {
                return Ok(StopReason::MaxGenerations);
            }
            if stop.is_stopped() {
                return Ok(StopReason::Stopped);
            }
            let best_before = tracker.best.clone();
            let mut proposals = {
                let mut ctx = Ctx {
                    task: &task,
                    cfg: method,
                    rng: &mut rng,
                    samples_used,
                    best: best_before.as_ref(),
                };
                strategy.propose(&mut ctx)
            };
            let remaining = budget.remaining(samples_used);
            proposals.truncate(usize::try_from(remaining).unwrap_or(usize::MAX));
            if proposals.is_empty() {
                return Err(Error::contract("strategy proposed no prompts"));
            }

            let mut offspring: Vec<Candidate> = Vec::new();
            let mut failed_draws = 0usize;
            let mut last_failure = String::new();
            for chunk in proposals.chunks(method.num_samplers) {
                if stop.is_stopped() {
                    break;
                }
                let prompts: Vec<_> = chunk.iter().map(|p| p.prompt.clone()).collect();
                let responses = draw_batch(sampler, &prompts, method.num_samplers);
                let first_id = history.len() as u64 + offspring.len() as u64;
                let mut drafts = Vec::with_capacity(chunk.len());
                for (k, (proposal, response)) in chunk.iter().zip(responses).enumerate() {
                    let id = first_id + k as u64;
                    let sample_index = samples_used;
                    samples_used += 1;
                    let (text, error) = match &response {
                        Ok(t) => (Some(t.clone()), None),
                        Err(e) => (None, Some(e.message.clone())),
                    };
                    log.emit(EventBody::SampleDrawn(SampleDrawn {
                        sample_index,
                        candidate_id: id,
                        operator: proposal.operator.clone(),
                        parent_ids: proposal.parent_ids.clone(),
                        prompt: proposal.prompt.clone(),
                        response: text,
                        error,
                    }))?;
                    let (code, idea, decided) = match response {
                        Err(e) => {
                            failed_draws += 1;
                            last_failure = e.message.clone();
                            (String::new(), None, Some(EvalOutcome::failed(EvalStatus::SampleError, 0.0, e.message)))
                        }
                        Ok(text) => {
                            let idea = extract_idea(&text);
                            match extract(&task, proposal, &text) {
                                Ok(code) => (code, idea, None),
                                Err(msg) => (String::new(), idea, Some(EvalOutcome::failed(EvalStatus::ParseError, 0.0, msg))),
                            }
                        }
                    };
                    drafts.push((id, sample_index, proposal, code, idea, decided));
                }
                let pending: Vec<&str> = drafts
                    .iter()
                    .filter(|d| d.5.is_none())
                    .map(|d| d.3.as_str())
                    .collect();
                let mut results = parallel_map(&pending, method.num_evaluators, |code| {
                    sandbox::evaluate(code, &task, timeout)
                })
                .into_iter();
                for (id, sample_index, proposal, code, idea, decided) in drafts {
                    let outcome = decided.unwrap_or_else(|| results.next().expect("one result per pending code"));
                    let c = Candidate {
                        id,
                        normalized_hash: code_hash(&code),
                        code,
                        idea,
                        parent_ids: proposal.parent_ids.clone(),
                        sample_index: Some(sample_index),
                        operator: proposal.operator.clone(),
                        outcome,
                    };
                    log.emit(finished_event(&c))?;
                    if let Some(nb) = tracker.offer(&c) {
                        log.emit(EventBody::NewBest(nb))?;
                    }
                    offspring.push(c);
                }
            }
            if offspring.is_empty() {
                // stopped before the first draw of this generation
                continue;
            }
            {
                let mut ctx = Ctx {
                    task: &task,
                    cfg: method,
                    rng: &mut rng,
                    samples_used,
                    best: best_before.as_ref(),
                };
                strategy.absorb(&offspring, &mut ctx);
            }
            let drawn = offspring.len();
            history.extend(offspring);
            generations += 1;
            log.emit(EventBody::GenerationEnd(GenerationEnd {
                generation: generations - 1,
                samples_used,
                population_size: strategy.population_size(),
                best_fitness: tracker.best.as_ref().and_then(|b| b.fitness().cloned()),
                archive: if tracker.multi { tracker.archive.fitnesses() } else { Vec::new() },
            }))?;
            // a stop requested meanwhile takes precedence over the failures
            if failed_draws == drawn && !stop.is_stopped() {
                log.emit(EventBody::Error(ErrorEvent {
                    message: format!(
                        "sampler unavailable: all {drawn} draw(s) of generation {} failed; last error: {last_failure}",
                        generations - 1
                    ),
                }))?;
                return Ok(StopReason::SamplerUnavailable);
            }
        }
    })();

    let wall_time_s = log.started.elapsed().as_secs_f64();
    let state = json!({
        "method": method.method.as_str(),
        "population_size": strategy.population_size(),
        "strategy": strategy.snapshot(),
    });
    let reason = match outcome {
        Ok(reason) => reason,
        Err(e) => {
            // best effort: the profiler itself may be what failed
            let _ = log.emit(EventBody::Error(ErrorEvent { message: e.to_string() }));
            let _ = log.emit(EventBody::RunEnd(RunEnd {
                reason: StopReason::Error,
                samples_used,
                generations,
                wall_time_s,
                state,
            }));
            return Err(e);
        }
    };
    log.emit(EventBody::RunEnd(RunEnd {
        reason,
        samples_used,
        generations,
        wall_time_s,
        state: state.clone(),
    }))?;

    let as_best = |c: &Candidate| BestCandidate {
        candidate_id: c.id,
        sample_index: c.sample_index,
        code: c.code.clone(),
        fitness: c.fitness().expect("valid").clone(),
    };
    let pareto: Vec<BestCandidate> = if tracker.multi {
        tracker
            .archive
            .entries()
            .iter()
            .map(|e| as_best(&history[e.candidate_id as usize]))
            .collect()
    } else {
        Vec::new()
    };
    let best = if tracker.multi {
        pareto
            .iter()
            .min_by(|a, b| {
                a.fitness.values()[0]
                    .total_cmp(&b.fitness.values()[0])
                    .then(a.candidate_id.cmp(&b.candidate_id))
            })
            .cloned()
    } else {
        tracker.best.as_ref().map(as_best)
    };
    let mut status_counts = BTreeMap::new();
    for c in history.iter().filter(|c| c.sample_index.is_some()) {
        *status_counts.entry(c.outcome.status.as_str().to_string()).or_insert(0) += 1;
    }
    let summary = RunSummary {
        reason,
        samples_used,
        generations,
        wall_time_s,
        best,
        pareto,
        status_counts,
        state,
    };
    log.profiler.finish(&summary)?;
    Ok(summary)
}
