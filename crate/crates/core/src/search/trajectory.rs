//! Single-trajectory methods. Every move is a prompt built around the
//! current algorithm; they differ in which prompt is sent and in when the
//! answer replaces the current algorithm.

use std::cmp::Ordering;
use std::collections::VecDeque;

use rand::Rng;
use serde_json::json;

use super::population::scalar_order;
use super::{prompts, Ctx, MethodConfig, Proposal, Strategy};
use crate::candidate::Candidate;
use crate::fitness::{compare_scalar, FitnessVector};

/// Metropolis acceptance: improvements always pass; a worsening `delta`
/// passes when `u < exp(-delta / temperature)`. A frozen system
/// (temperature 0) accepts no worsening move.
pub fn sa_accept(delta: f64, temperature: f64, u: f64) -> bool {
    if delta <= 0.0 {
        return true;
    }
    if temperature <= 0.0 {
        return false;
    }
    u < (-delta / temperature).exp()
}

/// A candidate is admissible unless its hash is tabu; a tabu candidate is
/// still admissible when it beats the global best (aspiration).
pub fn tabu_admissible(
    hash: &str,
    fitness: Option<&FitnessVector>,
    tabu_list: &VecDeque<String>,
    global_best: Option<&FitnessVector>,
) -> bool {
    if !tabu_list.iter().any(|h| h == hash) {
        return true;
    }
    fitness.is_some() && compare_scalar(fitness, global_best).map(|o| o == Ordering::Less).unwrap_or(false)
}

fn improves(a: &Candidate, b: Option<&Candidate>) -> bool {
    compare_scalar(a.fitness(), b.and_then(|c| c.fitness())).map(|o| o == Ordering::Less).unwrap_or(false)
}

fn best_valid(offspring: &[Candidate]) -> Option<&Candidate> {
    offspring.iter().filter(|c| c.is_valid()).min_by(|a, b| scalar_order(a, b))
}

fn describe(c: &Option<Candidate>) -> serde_json::Value {
    match c {
        Some(c) => json!({"id": c.id, "fitness": c.fitness()}),
        None => serde_json::Value::Null,
    }
}

/// `num_samplers` prompts per step, each built by `make` from the current
/// algorithm, or template-only prompts while there is none.
fn step(
    ctx: &Ctx<'_>,
    current: &Option<Candidate>,
    make: impl Fn(&Candidate) -> crate::llm::Prompt,
) -> Vec<Proposal> {
    (0..ctx.cfg.num_samplers)
        .map(|_| match current {
            Some(c) => Proposal::new(make(c), &[c]),
            None => Proposal::new(prompts::sample(ctx.task), &[]),
        })
        .collect()
}

pub(crate) struct RandomSampling {
    batch: usize,
}

impl RandomSampling {
    pub fn new(cfg: &MethodConfig) -> Self {
        Self {
            batch: cfg.num_samplers,
        }
    }
}

impl Strategy for RandomSampling {
    fn seed(&mut self, _seed: &Candidate, _ctx: &mut Ctx<'_>) {}

    fn propose(&mut self, ctx: &mut Ctx<'_>) -> Vec<Proposal> {
        (0..self.batch).map(|_| Proposal::new(prompts::sample(ctx.task), &[])).collect()
    }

    fn absorb(&mut self, _offspring: &[Candidate], _ctx: &mut Ctx<'_>) {}

    fn population_size(&self) -> usize {
        0
    }

    fn snapshot(&self) -> serde_json::Value {
        json!({})
    }
}

/// Keeps one algorithm and replaces it only by a strictly better one.
pub(crate) struct OnePlusOne {
    current: Option<Candidate>,
}

impl OnePlusOne {
    pub fn new(_cfg: &MethodConfig) -> Self {
        Self { current: None }
    }
}

impl Strategy for OnePlusOne {
    fn seed(&mut self, seed: &Candidate, _ctx: &mut Ctx<'_>) {
        self.current = Some(seed.clone());
    }

    fn propose(&mut self, ctx: &mut Ctx<'_>) -> Vec<Proposal> {
        step(ctx, &self.current, |c| prompts::modify(ctx.task, c))
    }

    fn absorb(&mut self, offspring: &[Candidate], _ctx: &mut Ctx<'_>) {
        if let Some(b) = best_valid(offspring) {
            if improves(b, self.current.as_ref()) {
                self.current = Some(b.clone());
            }
        }
    }

    fn population_size(&self) -> usize {
        usize::from(self.current.is_some())
    }

    fn snapshot(&self) -> serde_json::Value {
        json!({"current": describe(&self.current)})
    }
}

/// Cooling happens every this many samples.
pub const SA_COOLING_INTERVAL: u64 = 10;

pub(crate) struct Annealing {
    current: Option<Candidate>,
    temperature: f64,
    alpha: f64,
    seen: u64,
    accepted_worse: u64,
}

impl Annealing {
    pub fn new(cfg: &MethodConfig) -> Self {
        Self {
            current: None,
            temperature: cfg.sa_t0,
            alpha: cfg.sa_alpha,
            seen: 0,
            accepted_worse: 0,
        }
    }
}

impl Strategy for Annealing {
    fn seed(&mut self, seed: &Candidate, _ctx: &mut Ctx<'_>) {
        self.current = Some(seed.clone());
    }

    fn propose(&mut self, ctx: &mut Ctx<'_>) -> Vec<Proposal> {
        step(ctx, &self.current, |c| prompts::modify(ctx.task, c))
    }

    fn absorb(&mut self, offspring: &[Candidate], ctx: &mut Ctx<'_>) {
        for c in offspring {
            self.seen += 1;
            if c.is_valid() {
                let u: f64 = ctx.rng.gen();
                match &self.current {
                    None => self.current = Some(c.clone()),
                    Some(cur) => {
                        let (new, old) = (c.fitness().unwrap().primary(), cur.fitness().unwrap().primary());
                        // relative change, so the temperature is scale free
                        let delta = (new - old) / old.abs().max(1e-12);
                        if sa_accept(delta, self.temperature, u) {
                            if delta > 0.0 {
                                self.accepted_worse += 1;
                            }
                            self.current = Some(c.clone());
                        }
                    }
                }
            }
            if self.seen.is_multiple_of(SA_COOLING_INTERVAL) {
                self.temperature *= self.alpha;
            }
        }
    }

    fn population_size(&self) -> usize {
        usize::from(self.current.is_some())
    }

    fn snapshot(&self) -> serde_json::Value {
        json!({
            "current": describe(&self.current),
            "temperature": self.temperature,
            "accepted_worse": self.accepted_worse,
        })
    }
}

pub(crate) struct Tabu {
    current: Option<Candidate>,
    tabu: VecDeque<String>,
    len: usize,
}

impl Tabu {
    pub fn new(cfg: &MethodConfig) -> Self {
        Self {
            current: None,
            tabu: VecDeque::new(),
            len: cfg.tabu_len,
        }
    }

    fn visit(&mut self, c: &Candidate) {
        self.current = Some(c.clone());
        self.tabu.push_back(c.normalized_hash.clone());
        while self.tabu.len() > self.len {
            self.tabu.pop_front();
        }
    }
}

impl Strategy for Tabu {
    fn seed(&mut self, seed: &Candidate, _ctx: &mut Ctx<'_>) {
        self.visit(seed);
    }

    fn propose(&mut self, ctx: &mut Ctx<'_>) -> Vec<Proposal> {
        step(ctx, &self.current, |c| prompts::modify(ctx.task, c))
    }

    /// Moves to the best admissible neighbour, even when it is worse.
    fn absorb(&mut self, offspring: &[Candidate], ctx: &mut Ctx<'_>) {
        let global = ctx.best.and_then(|c| c.fitness());
        let pick = offspring
            .iter()
            .filter(|c| c.is_valid() && tabu_admissible(&c.normalized_hash, c.fitness(), &self.tabu, global))
            .min_by(|a, b| scalar_order(a, b))
            .cloned();
        if let Some(c) = pick {
            self.visit(&c);
        }
    }

    fn population_size(&self) -> usize {
        usize::from(self.current.is_some())
    }

    fn snapshot(&self) -> serde_json::Value {
        json!({"current": describe(&self.current), "tabu": self.tabu})
    }
}

pub(crate) struct IteratedLocal {
    current: Option<Candidate>,
    stall: usize,
    limit: usize,
    perturbing: bool,
    perturbations: u64,
}

impl IteratedLocal {
    pub fn new(cfg: &MethodConfig) -> Self {
        Self {
            current: None,
            stall: 0,
            limit: cfg.ils_stall,
            perturbing: false,
            perturbations: 0,
        }
    }
}

impl Strategy for IteratedLocal {
    fn seed(&mut self, seed: &Candidate, _ctx: &mut Ctx<'_>) {
        self.current = Some(seed.clone());
    }

    fn propose(&mut self, ctx: &mut Ctx<'_>) -> Vec<Proposal> {
        self.perturbing = self.current.is_some() && self.stall >= self.limit;
        if self.perturbing {
            step(ctx, &self.current, |c| prompts::perturb(ctx.task, c))
        } else {
            step(ctx, &self.current, |c| prompts::modify(ctx.task, c))
        }
    }

    /// Local steps accept strict improvements; after `ils_stall`
    /// non-improving steps a perturbation restarts from its outcome.
    fn absorb(&mut self, offspring: &[Candidate], _ctx: &mut Ctx<'_>) {
        let best = best_valid(offspring);
        if self.perturbing {
            self.perturbations += 1;
            self.stall = 0;
            if let Some(b) = best {
                self.current = Some(b.clone());
            }
            return;
        }
        match best {
            Some(b) if improves(b, self.current.as_ref()) => {
                self.current = Some(b.clone());
                self.stall = 0;
            }
            _ => self.stall += 1,
        }
    }

    fn population_size(&self) -> usize {
        usize::from(self.current.is_some())
    }

    fn snapshot(&self) -> serde_json::Value {
        json!({"current": describe(&self.current), "stall": self.stall, "perturbations": self.perturbations})
    }
}

pub(crate) struct Vns {
    current: Option<Candidate>,
    level: usize,
    levels: usize,
}

impl Vns {
    pub fn new(cfg: &MethodConfig) -> Self {
        Self {
            current: None,
            level: 1,
            levels: cfg.vns_levels,
        }
    }
}

impl Strategy for Vns {
    fn seed(&mut self, seed: &Candidate, _ctx: &mut Ctx<'_>) {
        self.current = Some(seed.clone());
    }

    fn propose(&mut self, ctx: &mut Ctx<'_>) -> Vec<Proposal> {
        let (level, levels) = (self.level, self.levels);
        step(ctx, &self.current, |c| prompts::vns(ctx.task, c, level, levels))
    }

    /// Improvement returns to the first neighbourhood; failure moves to the
    /// next, wrapping after the last.
    fn absorb(&mut self, offspring: &[Candidate], _ctx: &mut Ctx<'_>) {
        match best_valid(offspring) {
            Some(b) if improves(b, self.current.as_ref()) => {
                self.current = Some(b.clone());
                self.level = 1;
            }
            _ => self.level = self.level % self.levels + 1,
        }
    }

    fn population_size(&self) -> usize {
        usize::from(self.current.is_some())
    }

    fn snapshot(&self) -> serde_json::Value {
        json!({"current": describe(&self.current), "level": self.level})
    }
}
