//! Browser bindings for three pieces of the engine: the protected
//! expression language, online bin packing with a priority function, and
//! non-dominated sorting. Every export takes plain values and returns a
//! JSON string; errors come back as `{"error": "..."}`.

use algoforge::codekit::{parse_expression, DslProgram, NodeBudget};
use algoforge::fitness::FitnessVector;
use algoforge::search::{crowding_distance, fast_nondominated_sort};
use algoforge::tasks::obp::{self, ObpInstance};
use algoforge::tasks::rng::SplitMix64;
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::wasm_bindgen;

/// Per-call node-visit allowance; keeps the page responsive.
const NODE_BUDGET: u64 = 5_000_000;
const MAX_CURVE_POINTS: usize = 2000;
const MAX_ITEMS: usize = 2000;

fn respond<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| json!({ "error": e.to_string() }).to_string()),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

#[derive(Serialize)]
struct Curve {
    canonical: String,
    nodes: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

fn curve(expr: &str, lo: f64, hi: f64, points: usize) -> Result<Curve, String> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err("range must satisfy lo < hi".into());
    }
    let n = points.clamp(2, MAX_CURVE_POINTS);
    let ast = parse_expression(expr, &["x"]).map_err(|e| e.to_string())?;
    let mut budget = NodeBudget::new(NODE_BUDGET);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let y = ast
            .eval_slots(&[x], &mut budget)
            .map_err(|_| "node budget exhausted".to_string())?;
        xs.push(x);
        ys.push(y);
    }
    Ok(Curve {
        canonical: ast.to_string(),
        nodes: ast.root.node_count(),
        xs,
        ys,
    })
}

/// Samples `expr` (variable `x`) at `points` evenly spaced values in
/// `[lo, hi]`.
#[wasm_bindgen]
pub fn expression_curve(expr: &str, lo: f64, hi: f64, points: usize) -> String {
    respond(curve(expr, lo, hi, points))
}

#[derive(Serialize)]
struct Packing {
    capacity: u32,
    lower_bound: u64,
    /// Item sizes per bin, in placement order.
    bins: Vec<Vec<u32>>,
    score: f64,
    baseline_bins: usize,
    baseline_score: f64,
}

fn compile_priority(source: &str) -> Result<DslProgram, String> {
    let params = ["item", "bins"];
    let program = if source.trim_start().starts_with("def ") {
        DslProgram::from_function(source, &params)
    } else {
        DslProgram::from_expression(source, &params)
    };
    program.map_err(|e| e.to_string())
}

fn packing(source: &str, seed: u64, items: usize, capacity: u32) -> Result<Packing, String> {
    if !(2..=1000).contains(&capacity) {
        return Err("capacity must be between 2 and 1000".into());
    }
    let items = items.clamp(1, MAX_ITEMS);
    let program = compile_priority(source)?;
    let mut rng = SplitMix64::new(seed);
    let sizes = (0..items)
        .map(|_| rng.next_in(1, u64::from(capacity)) as u32)
        .collect();
    let inst = ObpInstance::new(capacity, sizes).map_err(|e| e.to_string())?;

    let mut budget = NodeBudget::new(NODE_BUDGET);
    let placed = obp::assign(&inst, |item, rem| program.eval(&[item, rem], &mut budget))
        .map_err(|_| "node budget exhausted".to_string())?;
    let mut bins: Vec<Vec<u32>> = Vec::new();
    for (&b, &size) in placed.iter().zip(&inst.item_sizes) {
        if b == bins.len() {
            bins.push(Vec::new());
        }
        bins[b].push(size);
    }
    let best_fit = obp::pack(&inst, |item, rem| Ok::<f64, ()>(item - rem)).expect("infallible");
    Ok(Packing {
        capacity,
        lower_bound: inst.lower_bound(),
        score: obp::instance_score(&inst, bins.len()),
        bins,
        baseline_bins: best_fit.len(),
        baseline_score: obp::instance_score(&inst, best_fit.len()),
    })
}

/// Packs `items` random items (sizes uniform in `[1, capacity]`, drawn
/// from `seed`) online with the given priority, either a bare expression
/// over `item` and `bins` or a full `def priority(item, bins):` function.
/// Best fit is reported alongside for comparison.
#[wasm_bindgen]
pub fn pack_items(priority: &str, seed: u64, items: usize, capacity: u32) -> String {
    respond(packing(priority, seed, items, capacity))
}

#[derive(Serialize)]
struct Fronts {
    /// Point indices per front, best front first.
    fronts: Vec<Vec<usize>>,
    /// Front rank of every point.
    rank: Vec<usize>,
    /// Crowding distance within its front; `null` stands for infinity.
    crowding: Vec<Option<f64>>,
}

fn fronts(points_json: &str) -> Result<Fronts, String> {
    let raw: Vec<Vec<f64>> = serde_json::from_str(points_json).map_err(|e| format!("expected [[f1, f2], ...]: {e}"))?;
    if raw.is_empty() {
        return Err("no points".into());
    }
    let points: Vec<FitnessVector> = raw
        .into_iter()
        .map(FitnessVector::new)
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let fronts = fast_nondominated_sort(&points).map_err(|e| e.to_string())?;
    let mut rank = vec![0; points.len()];
    let mut crowding = vec![None; points.len()];
    for (r, front) in fronts.iter().enumerate() {
        let members: Vec<FitnessVector> = front.iter().map(|&i| points[i].clone()).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&members)) {
            rank[i] = r;
            crowding[i] = d.is_finite().then_some(d);
        }
    }
    Ok(Fronts { fronts, rank, crowding })
}

/// Non-dominated fronts (all objectives minimized) of a JSON array of
/// objective vectors.
#[wasm_bindgen]
pub fn pareto_fronts(points_json: &str) -> String {
    respond(fronts(points_json))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> serde_json::Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn curve_samples_and_reports_errors() {
        let v = parse(&expression_curve("x ^ 2", -1.0, 1.0, 3));
        assert_eq!(v["ys"], json!([1.0, 0.0, 1.0]));
        assert_eq!(v["canonical"], "x ^ 2.0");
        let v = parse(&expression_curve("1 / x", -1.0, 1.0, 3));
        assert_eq!(v["ys"][1], 1.0);
        assert!(parse(&expression_curve("y + 1", 0.0, 1.0, 5))["error"].is_string());
        assert!(parse(&expression_curve("x", 1.0, 0.0, 5))["error"].is_string());
    }

    #[test]
    fn packing_matches_best_fit_baseline() {
        let v = parse(&pack_items("-(bins - item)", 3, 200, 100));
        assert_eq!(v["bins"].as_array().unwrap().len(), v["baseline_bins"].as_u64().unwrap() as usize);
        let total: u64 = v["bins"]
            .as_array()
            .unwrap()
            .iter()
            .map(|b| {
                let s: u64 = b.as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).sum();
                assert!(s <= 100);
                s
            })
            .sum();
        assert!(total > 0);
        let f = parse(&pack_items("def priority(item, bins):\n    return bins\n", 3, 200, 100));
        assert!(f["score"].as_f64().unwrap() >= v["score"].as_f64().unwrap());
        assert!(parse(&pack_items("item +", 0, 10, 100))["error"].is_string());
    }

    #[test]
    fn fronts_rank_points() {
        let v = parse(&pareto_fronts("[[1,4],[2,2],[4,1],[3,3],[5,5]]"));
        assert_eq!(v["fronts"], json!([[0, 1, 2], [3], [4]]));
        assert_eq!(v["rank"], json!([0, 0, 0, 1, 2]));
        assert!(v["crowding"][0].is_null());
        assert!(v["crowding"][1].as_f64().unwrap() > 0.0);
        assert!(parse(&pareto_fronts("[[1,2],[1]]"))["error"].is_string());
        assert!(parse(&pareto_fronts("nope"))["error"].is_string());
    }
}
