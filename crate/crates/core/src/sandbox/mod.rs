//! Time-bounded candidate evaluation.
//!
//! Candidates that compile to the expression language run in-process under
//! a cooperative deadline (checked between instances) and a node-visit
//! budget. Everything else goes to the task's external worker, which is
//! killed outright at the deadline. Every candidate maps to exactly one
//! [`EvalStatus`].

use std::time::{Duration, Instant};

use crate::candidate::{EvalOutcome, EvalStatus};
use crate::codekit::DslProgram;
use crate::tasks::{EvalLimits, Task, TaskFailure, NODE_BUDGET};

mod worker;

pub use worker::{supervise, SuperviseError, WorkerRequest, WorkerResponse, MAX_STDERR};

/// Slack between the deadline and the wall-time bound callers may assume.
pub const GRACE: Duration = Duration::from_secs(2);

/// Bundled Python worker for full-language candidates of the built-in tasks.
pub const PYTHON_WORKER: &str = include_str!("../../workers/python_worker.py");

/// Argv running the bundled Python worker.
pub fn python_worker_argv() -> Vec<String> {
    vec![
        "python3".to_string(),
        "-I".to_string(),
        "-c".to_string(),
        PYTHON_WORKER.to_string(),
    ]
}

pub fn evaluate(code: &str, task: &Task, timeout: Duration) -> EvalOutcome {
    let started = Instant::now();
    let elapsed = || started.elapsed().as_secs_f64();
    let params = task.param_names();
    let compiled = DslProgram::from_function(code, &params);
    let primary = match (compiled, &task.worker) {
        (Ok(program), _) => {
            let mut limits = EvalLimits::new(Some(started + timeout), NODE_BUDGET);
            match task.evaluate_program(&program, &mut limits) {
                Ok(score) => score,
                Err(TaskFailure::Timeout(why)) => {
                    return EvalOutcome::failed(EvalStatus::Timeout, elapsed(), why)
                }
                Err(TaskFailure::Runtime(why)) => {
                    return EvalOutcome::failed(EvalStatus::RuntimeError, elapsed(), why)
                }
            }
        }
        (Err(_), Some(argv)) => {
            let req = WorkerRequest {
                task_id: task.id.clone(),
                candidate_code: code.to_string(),
                instance_seed: task.instance_seed,
                instance_count: task.instance_count,
            };
            match supervise(argv, &req, timeout) {
                Ok(resp) => match classify_response(resp) {
                    Ok(score) => score,
                    Err((status, why)) => return EvalOutcome::failed(status, elapsed(), why),
                },
                Err(SuperviseError::Timeout { .. }) => {
                    return EvalOutcome::failed(
                        EvalStatus::Timeout,
                        elapsed(),
                        format!("killed after {:.3}s", timeout.as_secs_f64()),
                    )
                }
                Err(e @ SuperviseError::Malformed { .. }) => {
                    return EvalOutcome::failed(EvalStatus::RuntimeError, elapsed(), format!("malformed response: {e}"))
                }
                Err(e) => return EvalOutcome::failed(EvalStatus::RuntimeError, elapsed(), e.to_string()),
            }
        }
        (Err(e), None) => return EvalOutcome::failed(EvalStatus::ParseError, elapsed(), e.to_string()),
    };
    match task.finish_fitness(primary, code) {
        Ok(f) => EvalOutcome::valid(f, elapsed()),
        Err(e) => EvalOutcome::failed(EvalStatus::RuntimeError, elapsed(), e.to_string()),
    }
}

fn classify_response(resp: WorkerResponse) -> Result<f64, (EvalStatus, String)> {
    match resp.status.as_str() {
        "ok" => match resp.scores.as_slice() {
            [s] if s.is_finite() => Ok(*s),
            other => Err((
                EvalStatus::RuntimeError,
                format!("malformed response: expected one finite score, got {other:?}"),
            )),
        },
        "parse_error" => Err((EvalStatus::ParseError, resp.detail)),
        "error" => Err((EvalStatus::RuntimeError, resp.detail)),
        other => Err((EvalStatus::RuntimeError, format!("malformed response: unknown status `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dsl_candidate_valid() {
        let task = Task::builtin("obp").unwrap();
        let code = "def priority(item, bins):\n    return -(bins - item)\n";
        let out = evaluate(code, &task, Duration::from_secs(50));
        assert_eq!(out.status, EvalStatus::Valid, "{}", out.diagnostics);
        let f = out.fitness.unwrap();
        assert!(f.primary() >= 0.0 && f.primary().is_finite());
    }

    #[test]
    fn non_dsl_without_worker_is_parse_error() {
        let task = Task::builtin("obp").unwrap();
        let code = "def priority(item, bins):\n    while True:\n        pass\n";
        let out = evaluate(code, &task, Duration::from_secs(1));
        assert_eq!(out.status, EvalStatus::ParseError);
        assert!(out.fitness.is_none());
    }

    #[test]
    fn two_objectives() {
        let task = Task::builtin("sr_growth").unwrap().with_objective_count(2).unwrap();
        let out = evaluate("def growth_rate(b, s):\n    return b * s\n", &task, Duration::from_secs(5));
        assert_eq!(out.fitness.unwrap().values()[1], 3.0);
    }

    #[test]
    fn response_classification() {
        let ok = |scores: Vec<f64>| WorkerResponse { status: "ok".into(), scores, detail: String::new() };
        assert_eq!(classify_response(ok(vec![0.5])), Ok(0.5));
        assert!(classify_response(ok(vec![])).is_err());
        assert!(classify_response(ok(vec![f64::NAN])).is_err());
        let err = WorkerResponse { status: "error".into(), scores: vec![], detail: "boom".into() };
        assert_eq!(classify_response(err), Err((EvalStatus::RuntimeError, "boom".into())));
    }
}
