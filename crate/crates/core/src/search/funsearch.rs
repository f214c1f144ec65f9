//! FunSearch-style island model. Each island keeps its own top programs;
//! prompts show an island's best two as successive versions, and the worse
//! half of the islands is periodically wiped and reseeded.

use rand::Rng;
use serde_json::json;

use super::population::{eoh_survivor_selection, scalar_order};
use super::{prompts, Ctx, MethodConfig, Proposal, Strategy};
use crate::budget::Budget;
use crate::candidate::Candidate;

/// Programs shown per prompt.
pub const PROGRAMS_PER_PROMPT: usize = 2;

#[derive(Debug, Clone)]
pub struct Island {
    pub id: usize,
    /// Best first, unique normalized hashes.
    pub members: Vec<Candidate>,
    /// Generations since the island's best last improved.
    pub staleness: u64,
}

impl Island {
    pub fn new(id: usize) -> Self {
        Self {
            id,
            members: Vec::new(),
            staleness: 0,
        }
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.members.first()
    }

    /// The best `k` programs, worse first and best last.
    pub fn prompt_programs(&self, k: usize) -> Vec<&Candidate> {
        let mut shown: Vec<&Candidate> = self.members.iter().take(k).collect();
        shown.reverse();
        shown
    }
}

/// Empties the worse half of `islands` (ranked by island best, empty
/// islands last, ties to the lower id) and reseeds each with a copy of
/// the best program of a uniformly chosen surviving island. Returns the
/// reset island ids. Fewer than two islands: nothing happens.
pub fn island_reset(islands: &mut [Island], rng: &mut impl Rng) -> Vec<usize> {
    let n = islands.len();
    if n < 2 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| match (islands[a].best(), islands[b].best()) {
        (Some(x), Some(y)) => scalar_order(x, y).then(a.cmp(&b)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.cmp(&b),
    });
    let keep = n - n / 2;
    let (survivors, losers) = order.split_at(keep);
    let mut reset = Vec::with_capacity(losers.len());
    for &i in losers {
        let donor = survivors[rng.gen_range(0..survivors.len())];
        let seed: Vec<Candidate> = islands[donor].best().cloned().into_iter().collect();
        islands[i].members = seed;
        islands[i].staleness = 0;
        reset.push(islands[i].id);
    }
    reset.sort_unstable();
    reset
}

pub(crate) struct FunSearch {
    islands: Vec<Island>,
    capacity: usize,
    samples_per_prompt: usize,
    period: u64,
    next_reset: u64,
    active: usize,
    resets: u64,
}

impl FunSearch {
    pub fn new(cfg: &MethodConfig, budget: &Budget) -> Self {
        let period = cfg.reset_period.unwrap_or((budget.max_samples / 4).max(1));
        Self {
            islands: (0..cfg.num_islands).map(Island::new).collect(),
            capacity: cfg.island_capacity,
            samples_per_prompt: cfg.samples_per_prompt,
            period,
            next_reset: period,
            active: 0,
            resets: 0,
        }
    }
}

impl Strategy for FunSearch {
    fn seed(&mut self, seed: &Candidate, _ctx: &mut Ctx<'_>) {
        for island in &mut self.islands {
            island.members = vec![seed.clone()];
        }
    }

    /// One island per generation, chosen uniformly; its prompt is sent
    /// `samples_per_prompt` times.
    fn propose(&mut self, ctx: &mut Ctx<'_>) -> Vec<Proposal> {
        self.active = ctx.rng.gen_range(0..self.islands.len());
        let island = &self.islands[self.active];
        let shown = island.prompt_programs(PROGRAMS_PER_PROMPT);
        let prompt = if shown.is_empty() {
            prompts::sample(ctx.task)
        } else {
            prompts::funsearch(ctx.task, &shown)
        }
        .with_meta("island", self.active.to_string());
        (0..self.samples_per_prompt)
            .map(|_| Proposal::new(prompt.clone(), &shown))
            .collect()
    }

    fn absorb(&mut self, offspring: &[Candidate], ctx: &mut Ctx<'_>) {
        let island = &mut self.islands[self.active];
        let before = island.best().map(|c| c.id);
        island.members = eoh_survivor_selection(&island.members, offspring, self.capacity);
        if island.best().map(|c| c.id) == before {
            island.staleness += 1;
        } else {
            island.staleness = 0;
        }
        if ctx.samples_used >= self.next_reset {
            island_reset(&mut self.islands, ctx.rng);
            self.resets += 1;
            while self.next_reset <= ctx.samples_used {
                self.next_reset += self.period;
            }
        }
    }

    fn population_size(&self) -> usize {
        self.islands.iter().map(|i| i.members.len()).sum()
    }

    fn snapshot(&self) -> serde_json::Value {
        json!({
            "islands": self.islands.iter().map(|i| json!({
                "id": i.id,
                "best": i.best().map(|c| json!({"id": c.id, "fitness": c.fitness()})),
                "size": i.members.len(),
                "staleness": i.staleness,
            })).collect::<Vec<_>>(),
            "resets": self.resets,
            "reset_period": self.period,
        })
    }
}
