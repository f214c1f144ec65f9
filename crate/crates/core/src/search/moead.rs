//! MOEA/D over prompts: one incumbent per weight vector, parents drawn
//! from the neighbourhood, offspring offered to neighbouring subproblems.

use rand::seq::index::sample;
use serde_json::json;

use super::moo::Decomposition;
use super::prompts::{self, EohOperator};
use super::{Ctx, MethodConfig, Proposal, Strategy};
use crate::candidate::Candidate;
use crate::error::Result;

pub(crate) struct Moead {
    dec: Decomposition,
    incumbents: Vec<Option<Candidate>>,
    /// Subproblem each proposal of the current generation was bred for.
    pending: Vec<usize>,
    replacements: u64,
}

impl Moead {
    pub fn new(cfg: &MethodConfig) -> Result<Self> {
        let dec = Decomposition::new(cfg.pop_size, cfg.moead_neighbors)?;
        Ok(Self {
            incumbents: vec![None; dec.weights.len()],
            dec,
            pending: Vec::new(),
            replacements: 0,
        })
    }
}

impl Strategy for Moead {
    fn seed(&mut self, seed: &Candidate, _ctx: &mut Ctx<'_>) {
        self.dec.observe(seed.fitness().expect("valid seed").values());
        for slot in &mut self.incumbents {
            *slot = Some(seed.clone());
        }
    }

    /// One prompt per subproblem; operators cycle e1, e2, m1, m2.
    fn propose(&mut self, ctx: &mut Ctx<'_>) -> Vec<Proposal> {
        self.pending.clear();
        let mut out = Vec::with_capacity(self.incumbents.len());
        for i in 0..self.incumbents.len() {
            let pool: Vec<&Candidate> = self.dec.neighbors[i]
                .iter()
                .filter_map(|&j| self.incumbents[j].as_ref())
                .collect();
            let op = EohOperator::CYCLE[i % EohOperator::CYCLE.len()];
            let proposal = if pool.is_empty() {
                Proposal::new(prompts::eoh(ctx.task, EohOperator::I1, &[]), &[])
            } else {
                let k = op.parent_count().min(pool.len());
                let parents: Vec<&Candidate> = sample(ctx.rng, pool.len(), k).into_iter().map(|p| pool[p]).collect();
                Proposal::new(prompts::eoh(ctx.task, op, &parents), &parents)
            };
            out.push(proposal.with_subproblem(i));
            self.pending.push(i);
        }
        out
    }

    fn absorb(&mut self, offspring: &[Candidate], _ctx: &mut Ctx<'_>) {
        for (c, &i) in offspring.iter().zip(&self.pending) {
            let Some(f) = c.fitness() else { continue };
            let current: Vec<Option<Vec<f64>>> = self
                .incumbents
                .iter()
                .map(|s| s.as_ref().and_then(|c| c.fitness()).map(|f| f.values().to_vec()))
                .collect();
            let replaced = self.dec.update(i, f.values(), &current).expect("two objectives");
            for j in replaced {
                self.incumbents[j] = Some(c.clone());
                self.replacements += 1;
            }
        }
    }

    fn population_size(&self) -> usize {
        self.incumbents.iter().filter(|s| s.is_some()).count()
    }

    fn snapshot(&self) -> serde_json::Value {
        json!({
            "z_star": self.dec.z_star,
            "subproblems": self.incumbents.iter().zip(&self.dec.weights).map(|(s, w)| json!({
                "weights": w,
                "incumbent": s.as_ref().map(|c| json!({"id": c.id, "fitness": c.fitness()})),
            })).collect::<Vec<_>>(),
            "replacements": self.replacements,
        })
    }
}
