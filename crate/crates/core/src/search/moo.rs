//! Multi-objective building blocks: non-dominated sorting, crowding
//! distance, NSGA-II survival, and the decomposition algebra of MOEA/D.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::fitness::{dominates_slice, FitnessVector};

/// Replacement for zero weights in the Tchebycheff aggregation.
pub const ZERO_WEIGHT: f64 = 1e-6;
/// Incumbents an offspring may replace in one update.
pub const MAX_REPLACEMENTS: usize = 2;

fn check_lengths(points: &[FitnessVector]) -> Result<()> {
    if let Some(first) = points.first() {
        if let Some(bad) = points.iter().find(|p| p.len() != first.len()) {
            return Err(Error::contract(format!(
                "objective count mismatch: {} vs {}",
                first.len(),
                bad.len()
            )));
        }
    }
    Ok(())
}

/// Partitions `points` into Pareto fronts. Front 0 is the non-dominated
/// set; each front lists indices in ascending order.
pub fn fast_nondominated_sort(points: &[FitnessVector]) -> Result<Vec<Vec<usize>>> {
    check_lengths(points)?;
    let values: Vec<&[f64]> = points.iter().map(|p| p.values()).collect();
    Ok(sort_slices(&values))
}

pub(crate) fn sort_slices(values: &[&[f64]]) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominating: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates_slice(values[i], values[j]) {
                dominating[i].push(j);
                dominated_by[j] += 1;
            } else if dominates_slice(values[j], values[i]) {
                dominating[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominating[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of every point in one front. Boundary points of each
/// objective get infinity; an objective with zero range adds nothing.
pub fn crowding_distance(front: &[FitnessVector]) -> Vec<f64> {
    let values: Vec<&[f64]> = front.iter().map(|p| p.values()).collect();
    crowding_slices(&values)
}

pub(crate) fn crowding_slices(front: &[&[f64]]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n == 0 {
        return dist;
    }
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = front[0].len();
    for k in 0..m {
        let col: Vec<f64> = front.iter().map(|p| p[k]).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
        let lo = col[order[0]];
        let hi = col[order[n - 1]];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            dist[order[w]] += (col[order[w + 1]] - col[order[w - 1]]) / range;
        }
    }
    dist
}

/// NSGA-II environmental selection: fills `capacity` slots front by front
/// and cuts the last front by descending crowding distance (ties to the
/// lower index). Returns the survivors ordered by rank, then crowding
/// distance descending, then index.
pub fn nsga2_select(points: &[FitnessVector], capacity: usize) -> Result<Vec<usize>> {
    let fronts = fast_nondominated_sort(points)?;
    let mut chosen = Vec::with_capacity(capacity.min(points.len()));
    for front in fronts {
        if chosen.len() >= capacity {
            break;
        }
        let members: Vec<&[f64]> = front.iter().map(|&i| points[i].values()).collect();
        let dist = crowding_slices(&members);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| {
            dist[b]
                .partial_cmp(&dist[a])
                .unwrap_or(Ordering::Equal)
                .then(front[a].cmp(&front[b]))
        });
        for pos in order {
            if chosen.len() == capacity {
                break;
            }
            chosen.push(front[pos]);
        }
    }
    Ok(chosen)
}

/// Evenly spaced weight vectors `(i/H, 1 - i/H)` for `i = 0..=H`.
pub fn moead_weights(m: usize, h: usize) -> Result<Vec<Vec<f64>>> {
    if m != 2 {
        return Err(Error::Unsupported(format!(
            "weight lattices are implemented for 2 objectives, got {m}"
        )));
    }
    if h < 1 {
        return Err(Error::Config("weight lattice needs H >= 1".into()));
    }
    Ok((0..=h)
        .map(|i| {
            let a = i as f64 / h as f64;
            vec![a, 1.0 - a]
        })
        .collect())
}

/// `max_i w_i * |f_i - z_i|`, with zero weights replaced by [`ZERO_WEIGHT`].
pub fn tchebycheff(f: &[f64], weights: &[f64], z_star: &[f64]) -> Result<f64> {
    if f.len() != weights.len() || f.len() != z_star.len() {
        return Err(Error::contract(format!(
            "length mismatch: f {}, weights {}, z* {}",
            f.len(),
            weights.len(),
            z_star.len()
        )));
    }
    Ok(f.iter()
        .zip(weights)
        .zip(z_star)
        .map(|((fi, wi), zi)| {
            let w = if *wi == 0.0 { ZERO_WEIGHT } else { *wi };
            w * (fi - zi).abs()
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// The `t` nearest weight vectors of every weight vector (itself included),
/// by Euclidean distance with ties to the lower index.
pub fn neighborhoods(weights: &[Vec<f64>], t: usize) -> Vec<Vec<usize>> {
    let t = t.clamp(1, weights.len().max(1));
    weights
        .iter()
        .map(|w| {
            let mut order: Vec<(f64, usize)> = weights
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let d: f64 = w.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d.sqrt(), j)
                })
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            order.into_iter().take(t).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Subproblem bookkeeping for MOEA/D: weights, neighborhoods and the ideal
/// point.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub weights: Vec<Vec<f64>>,
    pub neighbors: Vec<Vec<usize>>,
    pub z_star: Option<Vec<f64>>,
}

impl Decomposition {
    pub fn new(subproblems: usize, neighbors: usize) -> Result<Self> {
        if subproblems < 2 {
            return Err(Error::Config("decomposition needs at least 2 subproblems".into()));
        }
        let weights = moead_weights(2, subproblems - 1)?;
        let neighbors = neighborhoods(&weights, neighbors);
        Ok(Self {
            weights,
            neighbors,
            z_star: None,
        })
    }

    /// Moves the ideal point to the componentwise minimum seen so far.
    pub fn observe(&mut self, f: &[f64]) {
        match &mut self.z_star {
            Some(z) => {
                for (zi, fi) in z.iter_mut().zip(f) {
                    *zi = zi.min(*fi);
                }
            }
            None => self.z_star = Some(f.to_vec()),
        }
    }

    /// Offers offspring `f`, bred for subproblem `i`, to the neighbors of
    /// `i`. A neighbor's incumbent is replaced when the offspring's
    /// Tchebycheff value is strictly smaller (an empty slot is always
    /// filled), at most [`MAX_REPLACEMENTS`] times. Returns the replaced
    /// subproblem indices; the caller installs the offspring there.
    pub fn update(&mut self, i: usize, f: &[f64], incumbents: &[Option<Vec<f64>>]) -> Result<Vec<usize>> {
        self.observe(f);
        let z = self.z_star.clone().expect("observed");
        let mut replaced = Vec::new();
        for &j in &self.neighbors[i] {
            if replaced.len() == MAX_REPLACEMENTS {
                break;
            }
            let better = match &incumbents[j] {
                None => true,
                Some(inc) => tchebycheff(f, &self.weights[j], &z)? < tchebycheff(inc, &self.weights[j], &z)?,
            };
            if better {
                replaced.push(j);
            }
        }
        Ok(replaced)
    }
}
