//! Straight-line candidate functions compiled to expression programs.
//!
//! A function body qualifies when, after its docstring, it consists only of
//! assignments (`name = expr`, `name += expr`, optionally annotated) and a
//! final `return expr`. Anything else is left to an external worker.

use std::fmt;

use crate::codekit::expr::{eval_node, parse_node, write_node, BudgetExhausted, Node, NodeBudget};
use crate::codekit::normalize::strip_comment;
use crate::codekit::template::{find_docstring, scan_functions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DslProgram {
    /// Slot names: parameters first, then assigned locals.
    slots: Vec<String>,
    arity: usize,
    assignments: Vec<(usize, Node)>,
    ret: Node,
}

impl DslProgram {
    /// Compiles the first top-level function in `code`. The function must
    /// take exactly `params.len()` parameters; they are bound positionally.
    pub fn from_function(code: &str, params: &[&str]) -> Result<Self> {
        let lines: Vec<&str> = code.lines().collect();
        let funcs = scan_functions(&lines);
        let min_indent = funcs.iter().map(|f| f.indent).min();
        let func = funcs
            .iter()
            .find(|f| Some(f.indent) == min_indent)
            .ok_or_else(|| Error::Parse("no function definition".into()))?;
        if funcs.iter().any(|f| f.indent == func.indent && f.start != func.start) {
            return Err(Error::Parse("helper functions are not expressible".into()));
        }
        if func.params.len() != params.len() {
            return Err(Error::Parse(format!(
                "expected {} parameter(s), found {}",
                params.len(),
                func.params.len()
            )));
        }
        let body_from = match find_docstring(&lines, func.body_start, func.end) {
            Some((_, _, after)) => after,
            None => func.body_start,
        };
        // preamble lines other than imports cannot be honoured in-process
        for line in &lines[..func.start] {
            let t = strip_comment(line).trim();
            if !(t.is_empty() || t.starts_with("import ") || t.starts_with("from ")) {
                return Err(Error::Parse(format!("unsupported top-level statement `{t}`")));
            }
        }
        let names: Vec<String> = func.params.iter().map(|p| p.name.clone()).collect();
        Self::from_statements(&logical_lines(&lines[body_from..func.end]), names)
    }

    /// Compiles a bare expression over `params`.
    pub fn from_expression(expr: &str, params: &[&str]) -> Result<Self> {
        let slots: Vec<String> = params.iter().map(|s| s.to_string()).collect();
        let ret = parse_node(expr, &slots)?;
        Ok(Self {
            arity: slots.len(),
            slots,
            assignments: Vec::new(),
            ret,
        })
    }

    fn from_statements(stmts: &[String], params: Vec<String>) -> Result<Self> {
        let arity = params.len();
        let mut slots = params;
        let mut assignments = Vec::new();
        let mut ret = None;
        for stmt in stmts {
            if ret.is_some() {
                return Err(Error::Parse(format!("unreachable statement after return: `{stmt}`")));
            }
            if let Some(expr) = stmt.strip_prefix("return ").or_else(|| stmt.strip_prefix("return(").map(|_| &stmt[6..])) {
                ret = Some(parse_node(expr, &slots)?);
                continue;
            }
            let (target, op, rhs) = split_assignment(stmt)
                .ok_or_else(|| Error::Parse(format!("unsupported statement `{stmt}`")))?;
            let rhs = match op {
                Some(op) => format!("{target} {op} ({rhs})"),
                None => rhs.to_string(),
            };
            let node = parse_node(&rhs, &slots)?;
            let slot = match slots.iter().position(|s| s == target) {
                Some(i) => i,
                None => {
                    slots.push(target.to_string());
                    slots.len() - 1
                }
            };
            assignments.push((slot, node));
        }
        let ret = ret.ok_or_else(|| Error::Parse("function has no return statement".into()))?;
        Ok(Self {
            slots,
            arity,
            assignments,
            ret,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Total expression node count across all statements.
    pub fn node_count(&self) -> usize {
        self.ret.node_count() + self.assignments.iter().map(|(_, n)| n.node_count()).sum::<usize>()
    }

    pub fn eval(&self, args: &[f64], budget: &mut NodeBudget) -> std::result::Result<f64, BudgetExhausted> {
        debug_assert_eq!(args.len(), self.arity);
        if self.assignments.is_empty() {
            return eval_node(&self.ret, args, budget);
        }
        let mut slots = vec![0.0; self.slots.len()];
        slots[..self.arity].copy_from_slice(args);
        for (slot, node) in &self.assignments {
            slots[*slot] = eval_node(node, &slots, budget)?;
        }
        eval_node(&self.ret, &slots, budget)
    }
}

impl fmt::Display for DslProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (slot, node) in &self.assignments {
            let mut s = String::new();
            write_node(node, &self.slots, &mut s);
            writeln!(f, "{} = {s}", self.slots[*slot])?;
        }
        let mut s = String::new();
        write_node(&self.ret, &self.slots, &mut s);
        write!(f, "return {s}")
    }
}

/// Joins physical lines into statements, following open brackets and
/// backslash continuations; drops comments and blank lines.
fn logical_lines(lines: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    for line in lines {
        let mut text = strip_comment(line).trim().to_string();
        let continued = text.ends_with('\\');
        if continued {
            text.pop();
        }
        if text.is_empty() && depth == 0 && !continued {
            continue;
        }
        for c in text.chars() {
            match c {
                '(' | '[' => depth += 1,
                ')' | ']' => depth -= 1,
                _ => {}
            }
        }
        if !cur.is_empty() {
            cur.push(' ');
        }
        cur.push_str(&text);
        if depth <= 0 && !continued {
            out.push(std::mem::take(&mut cur));
            depth = 0;
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur);
    }
    out
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
        && !matches!(s, "if" | "for" | "while" | "return" | "def" | "lambda" | "pass")
}

/// `target [: annotation] (=|+=|-=|*=|/=) rhs`
fn split_assignment(stmt: &str) -> Option<(&str, Option<char>, &str)> {
    let bytes = stmt.as_bytes();
    let eq = stmt.find('=')?;
    if bytes.get(eq + 1) == Some(&b'=') {
        return None;
    }
    let (mut lhs, rhs) = (&stmt[..eq], &stmt[eq + 1..]);
    let mut op = None;
    if let Some(last) = lhs.chars().last() {
        if matches!(last, '+' | '-' | '*' | '/') {
            op = Some(last);
            lhs = &lhs[..lhs.len() - 1];
        } else if matches!(last, '<' | '>' | '!') {
            return None;
        }
    }
    let target = lhs.split(':').next()?.trim();
    if !is_ident(target) || rhs.trim().is_empty() {
        return None;
    }
    Some((target, op, rhs.trim()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(code: &str, params: &[&str], args: &[f64]) -> f64 {
        DslProgram::from_function(code, params)
            .unwrap()
            .eval(args, &mut NodeBudget::unlimited())
            .unwrap()
    }

    #[test]
    fn single_return() {
        let code = "def priority(item, bins):\n    \"\"\"doc\"\"\"\n    return -(bins - item)\n";
        assert_eq!(run(code, &["item", "bins"], &[3.0, 5.0]), -2.0);
    }

    #[test]
    fn assignments_and_continuations() {
        let code = "import math\n\ndef f(a, b):\n    '''doc\n    more'''\n    # comment\n    t = a * 2  # twice\n    t += (b +\n          1)\n    u: float = math.sqrt(t)\n    return u\n";
        assert_eq!(run(code, &["a", "b"], &[3.0, 9.0]), 4.0);
    }

    #[test]
    fn rejects_control_flow() {
        let code = "def f(a, b):\n    while True:\n        pass\n";
        assert!(DslProgram::from_function(code, &["a", "b"]).is_err());
        let code = "def f(a, b):\n    if a > b:\n        return a\n    return b\n";
        assert!(DslProgram::from_function(code, &["a", "b"]).is_err());
        let code = "def f(a, b):\n    x = a\n";
        assert!(DslProgram::from_function(code, &["a", "b"]).is_err());
        let code = "def f(a):\n    return a\n";
        assert!(DslProgram::from_function(code, &["a", "b"]).is_err());
        let code = "import numpy as np\nK = 3\ndef f(a, b):\n    return a\n";
        assert!(DslProgram::from_function(code, &["a", "b"]).is_err());
        let code = "def f(a, b):\n    return a == b\n";
        assert!(DslProgram::from_function(code, &["a", "b"]).is_err());
    }

    #[test]
    fn counts_nodes_and_prints() {
        let p = DslProgram::from_function("def f(a, b):\n    c = a + b\n    return c * 2\n", &["a", "b"]).unwrap();
        assert_eq!(p.node_count(), 6);
        assert_eq!(p.to_string(), "c = a + b\nreturn c * 2.0");
        let e = DslProgram::from_expression("a + b", &["a", "b"]).unwrap();
        assert_eq!(e.node_count(), 3);
    }
}
