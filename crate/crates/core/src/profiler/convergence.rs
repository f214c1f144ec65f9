//! Best-so-far series and their aggregation across runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::event::{EventBody, RunEvent};
use crate::fitness::FitnessVector;
use crate::search::Archive;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub sample_index: u64,
    /// Running minimum of the first objective; `None` until a sampled
    /// candidate is valid.
    pub best_fitness: Option<f64>,
    /// Per-objective running minima (multi-objective runs only).
    pub objectives: Vec<Option<f64>>,
    /// Size of the non-dominated set of sampled candidates (multi-objective
    /// runs only).
    pub archive_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convergence {
    pub objective_count: usize,
    pub points: Vec<ConvergencePoint>,
}

/// One point per drawn sample. Only sampled candidates count; the template
/// evaluation that precedes sampling does not.
pub fn convergence(events: &[RunEvent]) -> Convergence {
    let mut fitness: BTreeMap<u64, FitnessVector> = BTreeMap::new();
    let mut drawn = Vec::new();
    for ev in events {
        match &ev.body {
            EventBody::SampleDrawn(s) => drawn.push(s.sample_index),
            EventBody::EvalFinished(f) => {
                if let (Some(i), Some(fit)) = (f.sample_index, &f.fitness) {
                    fitness.insert(i, fit.clone());
                }
            }
            _ => {}
        }
    }
    let m = fitness.values().next().map(|f| f.len()).unwrap_or(1);
    let mut mins: Vec<Option<f64>> = vec![None; m];
    let mut archive = Archive::new();
    let points = drawn
        .into_iter()
        .map(|i| {
            if let Some(f) = fitness.get(&i) {
                for (slot, v) in mins.iter_mut().zip(f.values()) {
                    *slot = Some(slot.map_or(*v, |s| s.min(*v)));
                }
                if m > 1 {
                    archive.offer(i, f);
                }
            }
            ConvergencePoint {
                sample_index: i,
                best_fitness: mins[0],
                objectives: if m > 1 { mins.clone() } else { Vec::new() },
                archive_size: (m > 1).then(|| archive.len()),
            }
        })
        .collect();
    Convergence {
        objective_count: m,
        points,
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

impl Convergence {
    /// `sample_index,best_fitness` plus `objective_k` columns and
    /// `archive_size` for multi-objective runs; absent values are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample_index,best_fitness");
        if self.objective_count > 1 {
            for k in 1..=self.objective_count {
                let _ = write!(out, ",objective_{k}");
            }
            out.push_str(",archive_size");
        }
        out.push('\n');
        for p in &self.points {
            let _ = write!(out, "{},{}", p.sample_index, cell(p.best_fitness));
            if self.objective_count > 1 {
                for v in &p.objectives {
                    let _ = write!(out, ",{}", cell(*v));
                }
                let _ = write!(out, ",{}", p.archive_size.unwrap_or(0));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregatePoint {
    pub sample_index: u64,
    /// Runs with a defined best at this index.
    pub runs: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation; needs two runs.
    pub std: Option<f64>,
}

/// Per-index mean and standard deviation of `best_fitness` across runs.
pub fn aggregate(series: &[Convergence]) -> Vec<AggregatePoint> {
    let mut by_index: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for s in series {
        for p in &s.points {
            let e = by_index.entry(p.sample_index).or_default();
            if let Some(v) = p.best_fitness {
                e.push(v);
            }
        }
    }
    by_index
        .into_iter()
        .map(|(sample_index, vals)| {
            let n = vals.len();
            let mean = (n > 0).then(|| vals.iter().sum::<f64>() / n as f64);
            let std = mean.filter(|_| n > 1).map(|m| {
                let ss: f64 = vals.iter().map(|v| (v - m) * (v - m)).sum();
                (ss / (n as f64 - 1.0)).sqrt()
            });
            AggregatePoint {
                sample_index,
                runs: n,
                mean,
                std,
            }
        })
        .collect()
}

pub fn aggregate_csv(points: &[AggregatePoint]) -> String {
    let mut out = String::from("sample_index,runs,mean,std\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{}", p.sample_index, p.runs, cell(p.mean), cell(p.std));
    }
    out
}
