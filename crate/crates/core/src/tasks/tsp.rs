//! Constructive TSP: a learned score picks the next city.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::rng::SplitMix64;

pub const DEFAULT_CITIES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspInstance {
    pub coords: Vec<(f64, f64)>,
    pub distances: Vec<Vec<f64>>,
}

/// Arguments passed to the scoring function for one unvisited city.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepFeatures {
    pub distance: f64,
    pub to_start: f64,
    pub remaining: f64,
    pub mean_distance: f64,
}

impl StepFeatures {
    pub fn as_args(&self) -> [f64; 4] {
        [self.distance, self.to_start, self.remaining, self.mean_distance]
    }
}

impl TspInstance {
    pub fn new(coords: Vec<(f64, f64)>) -> Result<Self> {
        if coords.len() < 3 {
            return Err(Error::contract("TSP instance needs at least 3 cities"));
        }
        if coords.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::contract("TSP coordinates must be finite"));
        }
        let distances = coords
            .iter()
            .map(|a| coords.iter().map(|b| (a.0 - b.0).hypot(a.1 - b.1)).collect())
            .collect();
        Ok(Self { coords, distances })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Length of the closed tour visiting `order` and returning to its start.
    pub fn tour_length(&self, order: &[usize]) -> f64 {
        let n = order.len();
        (0..n).map(|i| self.distances[order[i]][order[(i + 1) % n]]).sum()
    }
}

pub fn generate(seed: u64, count: usize) -> Vec<TspInstance> {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|_| {
            let coords = (0..DEFAULT_CITIES)
                .map(|_| {
                    let x = rng.next_f64();
                    let y = rng.next_f64();
                    (x, y)
                })
                .collect();
            TspInstance::new(coords).expect("generated instance is valid")
        })
        .collect()
}

/// Builds a tour from city 0, always moving to the highest-scoring
/// unvisited city (ties to the lowest index).
pub fn construct<E>(
    inst: &TspInstance,
    mut score: impl FnMut(StepFeatures) -> std::result::Result<f64, E>,
) -> std::result::Result<Vec<usize>, E> {
    let n = inst.len();
    let mut visited = vec![false; n];
    visited[0] = true;
    let mut tour = Vec::with_capacity(n);
    tour.push(0);
    let mut current = 0;
    for step in 1..n {
        let remaining = n - step;
        let row = &inst.distances[current];
        let mean = (0..n).filter(|&j| !visited[j]).map(|j| row[j]).sum::<f64>() / remaining as f64;
        let mut best: Option<(usize, f64)> = None;
        for j in (0..n).filter(|&j| !visited[j]) {
            let s = score(StepFeatures {
                distance: row[j],
                to_start: inst.distances[j][0],
                remaining: remaining as f64,
                mean_distance: mean,
            })?;
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((j, s));
            }
        }
        let (next, _) = best.expect("an unvisited city remains");
        visited[next] = true;
        tour.push(next);
        current = next;
    }
    Ok(tour)
}

/// Mean closed-tour length over `instances`.
pub fn evaluate<E>(
    instances: &[TspInstance],
    mut score: impl FnMut(StepFeatures) -> std::result::Result<f64, E>,
    mut between: impl FnMut() -> std::result::Result<(), E>,
) -> std::result::Result<f64, E> {
    let mut total = 0.0;
    for inst in instances {
        between()?;
        let tour = construct(inst, &mut score)?;
        debug_assert!(is_permutation(&tour, inst.len()));
        total += inst.tour_length(&tour);
    }
    Ok(total / instances.len() as f64)
}

pub(crate) fn is_permutation(tour: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    tour.len() == n
        && tour.iter().all(|&c| c < n && !std::mem::replace(&mut seen[c], true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn nearest(f: StepFeatures) -> std::result::Result<f64, Infallible> {
        Ok(-f.distance)
    }

    #[test]
    fn unit_square() {
        let inst = TspInstance::new(vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]).unwrap();
        let tour = construct(&inst, nearest).unwrap();
        assert_eq!(tour, vec![0, 1, 2, 3]);
        assert_eq!(inst.tour_length(&tour), 4.0);
    }

    #[test]
    fn collinear_any_priority() {
        let inst = TspInstance::new(vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]).unwrap();
        for f in [nearest as fn(_) -> _, |f: StepFeatures| Ok(f.distance), |_| Ok(1.0)] {
            let tour = construct(&inst, f).unwrap();
            assert_eq!(inst.tour_length(&tour), 4.0);
        }
    }

    #[test]
    fn distances_symmetric() {
        for inst in generate(5, 2) {
            assert_eq!(inst.len(), DEFAULT_CITIES);
            for i in 0..inst.len() {
                assert_eq!(inst.distances[i][i], 0.0);
                for j in 0..inst.len() {
                    assert_eq!(inst.distances[i][j], inst.distances[j][i]);
                    let (a, b) = (inst.coords[i], inst.coords[j]);
                    let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
                    assert!((inst.distances[i][j] - d).abs() < 1e-9);
                }
                assert!(inst.coords[i].0 >= 0.0 && inst.coords[i].0 < 1.0);
            }
        }
    }

    #[test]
    fn too_small() {
        assert!(TspInstance::new(vec![(0.0, 0.0), (1.0, 1.0)]).is_err());
    }
}
