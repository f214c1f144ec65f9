//! Prompt construction. Wording lives in versioned text files so that a
//! benchmark's prompts are fixed artifacts.

use crate::candidate::Candidate;
use crate::codekit::template::rename_function;
use crate::llm::Prompt;
use crate::tasks::Task;

pub const PROMPT_VERSION: &str = "v1";

const SYSTEM: &str = include_str!("../../prompts/v1/system.txt");
const SAMPLE: &str = include_str!("../../prompts/v1/sample.txt");
const MODIFY: &str = include_str!("../../prompts/v1/modify.txt");
const PERTURB: &str = include_str!("../../prompts/v1/perturb.txt");
const VNS: &str = include_str!("../../prompts/v1/vns.txt");
const VNS_STRENGTH: &str = include_str!("../../prompts/v1/vns_strength.txt");
const EOH_I1: &str = include_str!("../../prompts/v1/eoh_i1.txt");
const EOH_E1: &str = include_str!("../../prompts/v1/eoh_e1.txt");
const EOH_E2: &str = include_str!("../../prompts/v1/eoh_e2.txt");
const EOH_M1: &str = include_str!("../../prompts/v1/eoh_m1.txt");
const EOH_M2: &str = include_str!("../../prompts/v1/eoh_m2.txt");
const FUNSEARCH: &str = include_str!("../../prompts/v1/funsearch.txt");
const PARENT: &str = include_str!("../../prompts/v1/parent.txt");

/// Replaces `{key}` placeholders in one pass; text substituted in is never
/// rescanned.
fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'scan: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        for (key, value) in vars {
            if after.starts_with(key) && after[key.len()..].starts_with('}') {
                out.push_str(value);
                rest = &after[key.len() + 1..];
                continue 'scan;
            }
        }
        out.push('{');
        rest = after;
    }
    out.push_str(rest);
    out
}

fn render_parents(parents: &[&Candidate]) -> String {
    let blocks: Vec<String> = parents
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let n = (i + 1).to_string();
            let fitness = c.fitness().map(|f| f.to_string()).unwrap_or_else(|| "n/a".into());
            let idea = c.idea.clone().unwrap_or_else(|| "(none given)".into());
            fill(PARENT, &[("n", &n), ("fitness", &fitness), ("idea", &idea), ("code", &c.code)])
        })
        .collect();
    blocks.join("\n")
}

fn build(task: &Task, body: &str, operator: &str, parents: &[&Candidate], extra: &[(&str, &str)]) -> Prompt {
    let description = task.description();
    let template = task.template.assemble();
    let rendered = render_parents(parents);
    let mut vars: Vec<(&str, &str)> = vec![
        ("task", &description),
        ("template", &template),
        ("parents", &rendered),
    ];
    vars.extend_from_slice(extra);
    let ids: Vec<String> = parents.iter().map(|c| c.id.to_string()).collect();
    Prompt::new(SYSTEM.trim_end(), fill(body, &vars).trim_end())
        .with_meta("operator", operator)
        .with_meta("parent_ids", ids.join(","))
        .with_meta("prompt_version", PROMPT_VERSION)
        .with_meta("task", task.id.clone())
}

/// Template-only prompt.
pub fn sample(task: &Task) -> Prompt {
    build(task, SAMPLE, "sample", &[], &[])
}

pub fn modify(task: &Task, current: &Candidate) -> Prompt {
    build(task, MODIFY, "modify", &[current], &[])
}

pub fn perturb(task: &Task, current: &Candidate) -> Prompt {
    build(task, PERTURB, "perturb", &[current], &[])
}

/// Rewrite prompt whose strength grows with `level` (1-based) out of
/// `levels`.
pub fn vns(task: &Task, current: &Candidate, level: usize, levels: usize) -> Prompt {
    let wordings: Vec<&str> = VNS_STRENGTH.lines().filter(|l| !l.trim().is_empty()).collect();
    let idx = ((level.max(1) - 1) * wordings.len()) / levels.max(1);
    let strength = wordings[idx.min(wordings.len() - 1)];
    let op = format!("vns_{level}");
    build(task, VNS, &op, &[current], &[("strength", strength)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EohOperator {
    I1,
    E1,
    E2,
    M1,
    M2,
}

impl EohOperator {
    /// Operators applied every generation after initialization.
    pub const CYCLE: [EohOperator; 4] = [EohOperator::E1, EohOperator::E2, EohOperator::M1, EohOperator::M2];

    pub fn tag(self) -> &'static str {
        match self {
            EohOperator::I1 => "i1",
            EohOperator::E1 => "e1",
            EohOperator::E2 => "e2",
            EohOperator::M1 => "m1",
            EohOperator::M2 => "m2",
        }
    }

    pub fn parent_count(self) -> usize {
        match self {
            EohOperator::I1 => 0,
            EohOperator::E1 | EohOperator::E2 => 2,
            EohOperator::M1 | EohOperator::M2 => 1,
        }
    }
}

pub fn eoh(task: &Task, op: EohOperator, parents: &[&Candidate]) -> Prompt {
    let body = match op {
        EohOperator::I1 => EOH_I1,
        EohOperator::E1 => EOH_E1,
        EohOperator::E2 => EOH_E2,
        EohOperator::M1 => EOH_M1,
        EohOperator::M2 => EOH_M2,
    };
    build(task, body, op.tag(), parents, &[])
}

/// Name the model is asked to write in a versioned prompt with `shown`
/// prior versions.
pub fn funsearch_target(task: &Task, shown: usize) -> String {
    format!("{}_v{shown}", task.template.function_name)
}

/// Lists `programs` (worse first, best last) as successive versions
/// `name_v0, name_v1, ...` and asks for the next one.
pub fn funsearch(task: &Task, programs: &[&Candidate]) -> Prompt {
    let name = &task.template.function_name;
    let mut versions = String::new();
    for (i, c) in programs.iter().enumerate() {
        let code = rename_function(&c.code, name, &format!("{name}_v{i}"));
        versions.push_str("```python\n");
        versions.push_str(code.trim_end());
        versions.push_str("\n```\n\n");
    }
    let target = funsearch_target(task, programs.len());
    let header = task.template.header_named(&target);
    let ids: Vec<String> = programs.iter().map(|c| c.id.to_string()).collect();
    let description = task.description();
    let user = fill(
        FUNSEARCH,
        &[("task", &description), ("versions", &versions), ("target", &target), ("header", &header)],
    );
    Prompt::new(SYSTEM.trim_end(), user.trim_end())
        .with_meta("operator", "versions")
        .with_meta("parent_ids", ids.join(","))
        .with_meta("prompt_version", PROMPT_VERSION)
        .with_meta("task", task.id.clone())
        .with_meta("target", target)
}
