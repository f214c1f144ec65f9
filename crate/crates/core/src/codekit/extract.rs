//! Pulling candidate code (and an optional idea sentence) out of raw
//! sampler responses.

use crate::codekit::template::{indent_of, scan_functions, strip_indent, TemplateProgram};
use crate::error::{Error, Result};

const MAX_IDEA_CHARS: usize = 1000;

struct Block {
    lines: Vec<String>,
}

fn fenced_blocks(response: &str) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<String>> = None;
    for line in response.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(lines) => blocks.push(Block { lines }),
                None => current = Some(Vec::new()),
            }
            continue;
        }
        if let Some(lines) = current.as_mut() {
            lines.push(line.to_string());
        }
    }
    if let Some(lines) = current {
        blocks.push(Block { lines });
    }
    blocks
}

fn dedent(lines: &[&str]) -> Vec<String> {
    let min = lines
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| indent_of(l))
        .min()
        .unwrap_or(0);
    lines.iter().map(|l| strip_indent(l, min).trim_end().to_string()).collect()
}

/// Renames the chosen function and checks its arity.
fn finish(lines: Vec<String>, template: &TemplateProgram) -> Result<String> {
    let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
    let funcs = scan_functions(&refs);
    let min_indent = funcs.iter().map(|f| f.indent).min().unwrap_or(0);
    let outer: Vec<_> = funcs.iter().filter(|f| f.indent == min_indent).collect();
    let chosen = outer
        .iter()
        .find(|f| f.name == template.function_name)
        .or_else(|| outer.first())
        .ok_or_else(|| Error::Parse("no function definition found".into()))?;
    if chosen.params.len() != template.params.len() {
        return Err(Error::Parse(format!(
            "function `{}` takes {} parameter(s), template `{}` takes {}",
            chosen.name,
            chosen.params.len(),
            template.function_name,
            template.params.len()
        )));
    }
    let mut out = lines.clone();
    let line = &lines[chosen.start];
    out[chosen.start] = format!(
        "{}{}{}",
        &line[..chosen.name_range.0],
        template.function_name,
        &line[chosen.name_range.1..]
    );
    while out.last().is_some_and(|l| l.trim().is_empty()) {
        out.pop();
    }
    while out.first().is_some_and(|l| l.trim().is_empty()) {
        out.remove(0);
    }
    Ok(out.join("\n") + "\n")
}

/// Extracts the candidate function from a sampler response.
///
/// The first fenced block that contains a `def` wins; without one, a bare
/// function definition anywhere in the text is used. The function is
/// renamed to the template's name and must have the template's arity.
pub fn extract_candidate(response: &str, template: &TemplateProgram) -> Result<String> {
    for block in fenced_blocks(response) {
        let refs: Vec<&str> = block.lines.iter().map(String::as_str).collect();
        if scan_functions(&refs).is_empty() {
            continue;
        }
        return finish(dedent(&refs), template);
    }
    let lines: Vec<&str> = response.lines().collect();
    let funcs = scan_functions(&lines);
    let pick = funcs
        .iter()
        .find(|f| f.name == template.function_name)
        .or_else(|| funcs.first())
        .ok_or_else(|| Error::Parse("no function definition found in response".into()))?;
    finish(dedent(&lines[pick.start..pick.end.max(pick.body_start)]), template)
}

/// First brace-delimited span outside code fences, used as the
/// natural-language description of the algorithm.
pub fn extract_idea(response: &str) -> Option<String> {
    let mut in_fence = false;
    let mut prose = String::new();
    for line in response.lines() {
        if line.trim_start().starts_with("```") {
            in_fence = !in_fence;
            continue;
        }
        if !in_fence {
            prose.push_str(line);
            prose.push('\n');
        }
    }
    let start = prose.find('{')?;
    let mut depth = 0usize;
    for (i, c) in prose[start..].char_indices() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    let inner = prose[start + 1..start + i].trim();
                    if inner.is_empty() {
                        return None;
                    }
                    let idea: String = inner.chars().take(MAX_IDEA_CHARS).collect();
                    return Some(idea.split_whitespace().collect::<Vec<_>>().join(" "));
                }
            }
            _ => {}
        }
    }
    None
}
