//! Populations of valid candidates, survivor selection, parent selection,
//! and the global non-dominated archive.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::Rng;
use serde::Serialize;

use crate::candidate::Candidate;
use crate::error::Result;
use crate::fitness::{compare_scalar, dominates_slice, FitnessVector};

/// Scalar order used everywhere: fitness ascending, then lower id.
pub fn scalar_order(a: &Candidate, b: &Candidate) -> Ordering {
    compare_scalar(a.fitness(), b.fitness())
        .unwrap_or(Ordering::Equal)
        .then(a.id.cmp(&b.id))
}

/// A bounded set of valid candidates with unique normalized hashes.
#[derive(Debug, Clone, Default)]
pub struct Population {
    pub members: Vec<Candidate>,
    pub capacity: usize,
}

impl Population {
    pub fn new(capacity: usize) -> Self {
        Self {
            members: Vec::new(),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.members.iter().min_by(|a, b| scalar_order(a, b))
    }

    pub fn ids(&self) -> Vec<u64> {
        self.members.iter().map(|c| c.id).collect()
    }

    /// Scalar survivor selection; members stay sorted best first.
    pub fn survive(&mut self, offspring: &[Candidate]) {
        self.members = eoh_survivor_selection(&self.members, offspring, self.capacity);
    }
}

/// Union of `population` and valid `offspring`, deduplicated by normalized
/// hash (the earlier entry stays), sorted best first and cut to `capacity`.
pub fn eoh_survivor_selection(population: &[Candidate], offspring: &[Candidate], capacity: usize) -> Vec<Candidate> {
    let mut out = unique_valid(population, offspring);
    out.sort_by(scalar_order);
    out.truncate(capacity);
    out
}

pub(crate) fn unique_valid(population: &[Candidate], offspring: &[Candidate]) -> Vec<Candidate> {
    let mut seen = HashSet::new();
    population
        .iter()
        .chain(offspring)
        .filter(|c| c.is_valid() && seen.insert(c.normalized_hash.clone()))
        .cloned()
        .collect()
}

/// Selection probabilities proportional to `1 / (rank + 1)` for ranks
/// `0..n` (rank 0 is the best).
pub fn rank_probabilities(n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|r| 1.0 / (r as f64 + 1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

/// Draws up to `k` distinct ranks from `0..n` by rank-proportional
/// roulette. With `n < k` every rank is returned.
pub fn select_ranks(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    let mut probs = rank_probabilities(n);
    let mut picked = Vec::new();
    while picked.len() < k.min(n) {
        let total: f64 = probs.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        let mut choice = None;
        for (i, p) in probs.iter().enumerate() {
            if *p <= 0.0 {
                continue;
            }
            choice = Some(i);
            if u < *p {
                break;
            }
            u -= p;
        }
        let i = choice.expect("a rank with positive weight remains");
        probs[i] = 0.0;
        picked.push(i);
    }
    picked
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchiveEntry {
    pub candidate_id: u64,
    pub fitness: FitnessVector,
}

/// Mutually non-dominated set of every valid fitness seen, one entry per
/// distinct fitness vector (the earliest candidate keeps it).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Archive {
    entries: Vec<ArchiveEntry>,
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns true when the point entered the archive.
    pub fn offer(&mut self, candidate_id: u64, fitness: &FitnessVector) -> bool {
        let f = fitness.values();
        if self
            .entries
            .iter()
            .any(|e| e.fitness.values() == f || dominates_slice(e.fitness.values(), f))
        {
            return false;
        }
        self.entries.retain(|e| !dominates_slice(f, e.fitness.values()));
        self.entries.push(ArchiveEntry {
            candidate_id,
            fitness: fitness.clone(),
        });
        true
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn fitnesses(&self) -> Vec<FitnessVector> {
        self.entries.iter().map(|e| e.fitness.clone()).collect()
    }

    /// True when no entry dominates another.
    pub fn is_mutually_nondominated(points: &[FitnessVector]) -> Result<bool> {
        for a in points {
            for b in points {
                if crate::fitness::dominates(a, b)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}
