//! Online bin packing with a learned priority function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::rng::SplitMix64;

pub const DEFAULT_CAPACITY: u32 = 100;
pub const DEFAULT_ITEMS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObpInstance {
    pub capacity: u32,
    pub item_sizes: Vec<u32>,
}

impl ObpInstance {
    pub fn new(capacity: u32, item_sizes: Vec<u32>) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::contract("bin capacity must be positive"));
        }
        if item_sizes.is_empty() {
            return Err(Error::contract("bin packing instance needs at least one item"));
        }
        if let Some(bad) = item_sizes.iter().find(|&&s| s == 0 || s > capacity) {
            return Err(Error::contract(format!("item size {bad} outside [1, {capacity}]")));
        }
        Ok(Self { capacity, item_sizes })
    }

    /// `ceil(sum of sizes / capacity)`.
    pub fn lower_bound(&self) -> u64 {
        let total: u64 = self.item_sizes.iter().map(|&s| u64::from(s)).sum();
        total.div_ceil(u64::from(self.capacity))
    }
}

pub fn generate(seed: u64, count: usize) -> Vec<ObpInstance> {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|_| ObpInstance {
            capacity: DEFAULT_CAPACITY,
            item_sizes: (0..DEFAULT_ITEMS)
                .map(|_| rng.next_in(1, u64::from(DEFAULT_CAPACITY)) as u32)
                .collect(),
        })
        .collect()
}

/// Places every item online. `priority(item, remaining)` scores each
/// feasible open bin; the highest score wins, ties go to the earliest
/// opened bin. Returns the bin index of every item.
pub fn assign<E>(
    instance: &ObpInstance,
    mut priority: impl FnMut(f64, f64) -> std::result::Result<f64, E>,
) -> std::result::Result<Vec<usize>, E> {
    let mut bins: Vec<u32> = Vec::new();
    let mut placed = Vec::with_capacity(instance.item_sizes.len());
    for &item in &instance.item_sizes {
        let mut best: Option<(usize, f64)> = None;
        for (i, &rem) in bins.iter().enumerate() {
            if rem < item {
                continue;
            }
            let score = priority(f64::from(item), f64::from(rem))?;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((i, score));
            }
        }
        let i = match best {
            Some((i, _)) => {
                bins[i] -= item;
                i
            }
            None => {
                bins.push(instance.capacity - item);
                bins.len() - 1
            }
        };
        placed.push(i);
    }
    Ok(placed)
}

/// Like [`assign`], but returns the remaining capacity of every bin used.
pub fn pack<E>(
    instance: &ObpInstance,
    priority: impl FnMut(f64, f64) -> std::result::Result<f64, E>,
) -> std::result::Result<Vec<u32>, E> {
    let placed = assign(instance, priority)?;
    let mut bins: Vec<u32> = Vec::new();
    for (&bin, &item) in placed.iter().zip(&instance.item_sizes) {
        if bin == bins.len() {
            bins.push(instance.capacity);
        }
        bins[bin] -= item;
    }
    Ok(bins)
}

/// Excess-bins ratio of one packing: `bins / lower_bound - 1`.
pub fn instance_score(instance: &ObpInstance, bins_used: usize) -> f64 {
    bins_used as f64 / instance.lower_bound() as f64 - 1.0
}

/// Mean excess-bins ratio over `instances`.
pub fn evaluate<E>(
    instances: &[ObpInstance],
    mut priority: impl FnMut(f64, f64) -> std::result::Result<f64, E>,
    mut between: impl FnMut() -> std::result::Result<(), E>,
) -> std::result::Result<f64, E> {
    let mut total = 0.0;
    for inst in instances {
        between()?;
        let bins = pack(inst, &mut priority)?;
        total += instance_score(inst, bins.len());
    }
    Ok(total / instances.len() as f64)
}
