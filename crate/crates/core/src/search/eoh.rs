//! Evolution of heuristics: a population of (idea, code) pairs bred with
//! four prompt operators. The multi-objective variant keeps the same
//! operators and swaps survivor selection for NSGA-II.

use serde_json::json;

use super::moo::nsga2_select;
use super::population::{eoh_survivor_selection, select_ranks, unique_valid};
use super::prompts::{self, EohOperator};
use super::{Ctx, MethodConfig, Proposal, Strategy};
use crate::candidate::Candidate;

pub(crate) struct Eoh {
    multi: bool,
    capacity: usize,
    /// Best first: scalar order, or (front, crowding) order when multi.
    population: Vec<Candidate>,
    initialized: bool,
}

impl Eoh {
    pub fn new(cfg: &MethodConfig, multi: bool) -> Self {
        Self {
            multi,
            capacity: cfg.pop_size,
            population: Vec::new(),
            initialized: false,
        }
    }

    #[cfg(test)]
    pub fn population(&self) -> &[Candidate] {
        &self.population
    }
}

impl Strategy for Eoh {
    fn seed(&mut self, seed: &Candidate, _ctx: &mut Ctx<'_>) {
        self.population = vec![seed.clone()];
    }

    /// Initialization fills the population with template-only prompts;
    /// afterwards each generation applies e1, e2, m1 and m2 once.
    fn propose(&mut self, ctx: &mut Ctx<'_>) -> Vec<Proposal> {
        if !self.initialized || self.population.is_empty() {
            self.initialized = true;
            let n = self.capacity.saturating_sub(self.population.len()).max(1);
            return (0..n)
                .map(|_| Proposal::new(prompts::eoh(ctx.task, EohOperator::I1, &[]), &[]))
                .collect();
        }
        EohOperator::CYCLE
            .iter()
            .map(|&op| {
                let ranks = select_ranks(ctx.rng, self.population.len(), op.parent_count());
                let parents: Vec<&Candidate> = ranks.iter().map(|&r| &self.population[r]).collect();
                Proposal::new(prompts::eoh(ctx.task, op, &parents), &parents)
            })
            .collect()
    }

    fn absorb(&mut self, offspring: &[Candidate], _ctx: &mut Ctx<'_>) {
        if !self.multi {
            self.population = eoh_survivor_selection(&self.population, offspring, self.capacity);
            return;
        }
        let pool = unique_valid(&self.population, offspring);
        let points: Vec<_> = pool.iter().map(|c| c.fitness().expect("valid").clone()).collect();
        let keep = nsga2_select(&points, self.capacity).expect("objective counts agree within a run");
        self.population = keep.into_iter().map(|i| pool[i].clone()).collect();
    }

    fn population_size(&self) -> usize {
        self.population.len()
    }

    fn snapshot(&self) -> serde_json::Value {
        json!({
            "population": self.population.iter().map(|c| json!({"id": c.id, "fitness": c.fitness()})).collect::<Vec<_>>(),
        })
    }
}
