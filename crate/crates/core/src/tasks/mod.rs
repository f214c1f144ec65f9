//! Algorithm-design tasks: what a candidate must implement and how it is
//! scored.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::codekit::{parse_template, token_count, BudgetExhausted, DslProgram, NodeBudget, TemplateProgram};
use crate::error::{Error, Result};
use crate::fitness::FitnessVector;

pub mod obp;
pub mod rng;
pub mod sr;
pub mod tsp;

pub use obp::ObpInstance;
pub use sr::SrDataset;
pub use tsp::TspInstance;

/// Node visits allowed per candidate evaluation on the in-process path.
pub const NODE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TaskKind {
    Obp,
    TspConstruct,
    SrGrowth,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskInfo {
    pub id: &'static str,
    pub kind: TaskKind,
    pub title: &'static str,
    pub objective: &'static str,
    pub default_instance_count: usize,
    pub default_timeout_s: f64,
    pub template: &'static str,
}

const REGISTRY: [TaskInfo; 3] = [
    TaskInfo {
        id: "obp",
        kind: TaskKind::Obp,
        title: "Online bin packing priority function",
        objective: "mean of bins_used / ceil(total_size / capacity) - 1",
        default_instance_count: 8,
        default_timeout_s: 50.0,
        template: include_str!("../../templates/obp.py"),
    },
    TaskInfo {
        id: "tsp_construct",
        kind: TaskKind::TspConstruct,
        title: "Constructive TSP next-city selection",
        objective: "mean closed tour length",
        default_instance_count: 8,
        default_timeout_s: 50.0,
        template: include_str!("../../templates/tsp_construct.py"),
    },
    TaskInfo {
        id: "sr_growth",
        kind: TaskKind::SrGrowth,
        title: "Bacterial growth law discovery",
        objective: "root-mean-square error over the measurements",
        default_instance_count: sr::DEFAULT_ROWS,
        default_timeout_s: 50.0,
        template: include_str!("../../templates/sr_growth.py"),
    },
];

pub fn registry() -> &'static [TaskInfo] {
    &REGISTRY
}

pub fn task_ids() -> Vec<&'static str> {
    REGISTRY.iter().map(|t| t.id).collect()
}

fn info(task_id: &str) -> Result<&'static TaskInfo> {
    REGISTRY.iter().find(|t| t.id == task_id).ok_or_else(|| {
        Error::Config(format!(
            "unknown task `{task_id}`; valid tasks: {}",
            task_ids().join(", ")
        ))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instances {
    Obp(Vec<ObpInstance>),
    Tsp(Vec<TspInstance>),
    Sr(SrDataset),
}

/// Deterministic instances for a registered task. For `sr_growth` the
/// count is the number of dataset rows.
pub fn generate_instances(task_id: &str, seed: u64, count: usize) -> Result<Instances> {
    if count < 1 {
        return Err(Error::Config("instance count must be at least 1".into()));
    }
    Ok(match info(task_id)?.kind {
        TaskKind::Obp => Instances::Obp(obp::generate(seed, count)),
        TaskKind::TspConstruct => Instances::Tsp(tsp::generate(seed, count)),
        TaskKind::SrGrowth => Instances::Sr(sr::generate(seed, count)?),
    })
}

/// Why an in-process evaluation stopped early.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskFailure {
    Timeout(String),
    Runtime(String),
}

/// Cooperative limits for in-process evaluation.
#[derive(Debug, Clone)]
pub struct EvalLimits {
    pub deadline: Option<Instant>,
    pub budget: NodeBudget,
}

impl EvalLimits {
    pub fn new(deadline: Option<Instant>, node_budget: u64) -> Self {
        Self {
            deadline,
            budget: NodeBudget::new(node_budget),
        }
    }

    pub fn unlimited() -> Self {
        Self::new(None, u64::MAX)
    }

    fn check_deadline(&self) -> std::result::Result<(), TaskFailure> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(TaskFailure::Timeout("deadline reached".into())),
            _ => Ok(()),
        }
    }
}

fn exhausted(_: BudgetExhausted) -> TaskFailure {
    TaskFailure::Timeout(format!("node budget of {NODE_BUDGET} visits exhausted"))
}

/// A registered task with its instances materialized. Immutable and cheap
/// to clone.
#[derive(Debug, Clone)]
pub struct Task {
    pub id: String,
    pub kind: TaskKind,
    pub template: TemplateProgram,
    /// 1, or 2 when the complexity objective is appended.
    pub objective_count: usize,
    pub instance_seed: u64,
    pub instance_count: usize,
    pub default_timeout_s: f64,
    /// External worker argv for candidates outside the expression language.
    pub worker: Option<Vec<String>>,
    instances: Arc<Instances>,
}

impl Task {
    pub fn builtin(task_id: &str) -> Result<Self> {
        let info = info(task_id)?;
        Self::build(info, 0, info.default_instance_count)
    }

    fn build(info: &TaskInfo, seed: u64, count: usize) -> Result<Self> {
        let template = parse_template(info.template)?;
        Ok(Self {
            id: info.id.to_string(),
            kind: info.kind,
            template,
            objective_count: 1,
            instance_seed: seed,
            instance_count: count,
            default_timeout_s: info.default_timeout_s,
            worker: None,
            instances: Arc::new(generate_instances(info.id, seed, count)?),
        })
    }

    pub fn with_instances(self, seed: u64, count: usize) -> Result<Self> {
        let worker = self.worker.clone();
        let m = self.objective_count;
        let mut t = Self::build(info(&self.id)?, seed, count)?;
        t.worker = worker;
        t.objective_count = m;
        Ok(t)
    }

    pub fn with_objective_count(mut self, m: usize) -> Result<Self> {
        if !(1..=2).contains(&m) {
            return Err(Error::Config(format!("objective count must be 1 or 2, got {m}")));
        }
        self.objective_count = m;
        Ok(self)
    }

    pub fn with_worker(mut self, argv: Vec<String>) -> Result<Self> {
        if argv.is_empty() {
            return Err(Error::Config("worker command is empty".into()));
        }
        self.worker = Some(argv);
        Ok(self)
    }

    pub fn instances(&self) -> &Instances {
        &self.instances
    }

    pub fn param_names(&self) -> Vec<&str> {
        self.template.param_names()
    }

    /// Problem statement used at the top of every prompt.
    pub fn description(&self) -> String {
        let what = match self.kind {
            TaskKind::Obp => {
                "Design a priority function for online bin packing. Items arrive one by one and are placed \
                 immediately into the open bin with the highest priority among those with enough room; a new \
                 bin opens only when none fits. The aim is to minimize the number of bins used."
            }
            TaskKind::TspConstruct => {
                "Design a scoring function for constructing a travelling salesman tour. Starting from city 0, \
                 the tour repeatedly moves to the unvisited city with the highest score and finally returns to \
                 city 0. The aim is to minimize the total tour length."
            }
            TaskKind::SrGrowth => {
                "Discover the law that governs the growth rate of a bacterial population from measurements. \
                 The aim is to minimize the root-mean-square error between predicted and measured rates."
            }
        };
        format!(
            "{what} Write the function body using arithmetic on the parameters (+, -, *, /, **), the functions \
             abs, sqrt, log, exp, sin, cos, min and max, and simple assignments followed by a single return."
        )
    }

    /// Scores a compiled candidate on the primary objective.
    pub fn evaluate_program(&self, program: &DslProgram, limits: &mut EvalLimits) -> std::result::Result<f64, TaskFailure> {
        if program.arity() != self.template.params.len() {
            return Err(TaskFailure::Runtime(format!(
                "candidate takes {} argument(s), task supplies {}",
                program.arity(),
                self.template.params.len()
            )));
        }
        let deadline = limits.deadline;
        let check = move || match deadline {
            Some(d) if Instant::now() >= d => Err(TaskFailure::Timeout("deadline reached".into())),
            _ => Ok(()),
        };
        let budget = &mut limits.budget;
        let score = match &*self.instances {
            Instances::Obp(list) => obp::evaluate(
                list,
                |item, rem| program.eval(&[item, rem], budget).map_err(exhausted),
                check,
            ),
            Instances::Tsp(list) => tsp::evaluate(
                list,
                |f| program.eval(&f.as_args(), budget).map_err(exhausted),
                check,
            ),
            Instances::Sr(data) => {
                check()?;
                sr::evaluate(data, |x| program.eval(x, budget).map_err(exhausted))
            }
        }?;
        limits.check_deadline()?;
        if !score.is_finite() {
            return Err(TaskFailure::Runtime(format!("non-finite score {score}")));
        }
        Ok(score)
    }

    /// Appends the complexity objective when the task runs with two.
    pub fn finish_fitness(&self, primary: f64, code: &str) -> Result<FitnessVector> {
        let f = FitnessVector::scalar(primary)?;
        if self.objective_count == 2 {
            f.with_objective(complexity_objective(code, &self.param_names()))
        } else {
            Ok(f)
        }
    }
}

/// Size of a candidate: expression node count when it compiles to the
/// expression language, token count of the normalized code otherwise.
pub fn complexity_objective(code: &str, params: &[&str]) -> f64 {
    if let Ok(p) = DslProgram::from_function(code, params) {
        return p.node_count() as f64;
    }
    if let Ok(p) = DslProgram::from_expression(code, params) {
        return p.node_count() as f64;
    }
    token_count(code) as f64
}
