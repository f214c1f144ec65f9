//! Template programs: the single-function skeleton a sampler must complete.
//!
//! Parsing is line and indentation based. It understands enough of
//! Python-style source to locate `def` statements, their parameter lists,
//! docstrings and bodies; it is not a general parser.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Param {
    pub name: String,
    /// Annotation text, or `"any"` when the parameter is unannotated.
    pub type_tag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemplateProgram {
    pub source: String,
    pub function_name: String,
    pub params: Vec<Param>,
    pub docstring: String,
    /// Example implementation following the docstring.
    pub body: String,
    /// Imports and helpers preceding the function.
    pub preamble: String,
    signature: String,
    docstring_raw: String,
}

/// A `def` statement located in some source text.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct FunctionSpan {
    pub name: String,
    pub params: Vec<Param>,
    pub indent: usize,
    /// First line of the signature.
    pub start: usize,
    /// First body line (one past the signature's last line).
    pub body_start: usize,
    /// One past the function's last body line.
    pub end: usize,
    /// Byte range of the name within the `start` line.
    pub name_range: (usize, usize),
}

pub(crate) fn indent_of(line: &str) -> usize {
    line.chars()
        .take_while(|c| *c == ' ' || *c == '\t')
        .map(|c| if c == '\t' { 4 } else { 1 })
        .sum()
}

fn is_blank_or_comment(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

/// Matches `def name(` at the start of a (trimmed) line, returning the name's
/// byte range in the untrimmed line.
fn def_header(line: &str) -> Option<(String, usize, usize)> {
    let lead = line.len() - line.trim_start().len();
    let rest = line[lead..].strip_prefix("def")?;
    let after_kw = rest.trim_start();
    if after_kw.len() == rest.len() {
        return None;
    }
    let name_start = line.len() - after_kw.len();
    let name: String = after_kw
        .chars()
        .take_while(|c| c.is_alphanumeric() || *c == '_')
        .collect();
    if name.is_empty() || !name.starts_with(is_ident_start) {
        return None;
    }
    let name_end = name_start + name.len();
    if !line[name_end..].trim_start().starts_with('(') {
        return None;
    }
    Some((name, name_start, name_end))
}

/// Splits at top-level commas, ignoring brackets.
fn split_top_level(s: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    parts.push(cur);
    parts
}

fn parse_params(list: &str) -> Vec<Param> {
    split_top_level(list)
        .into_iter()
        .filter_map(|raw| {
            let raw = raw.trim();
            if raw.is_empty() || raw == "/" || raw == "*" {
                return None;
            }
            let decl = split_once_top(raw, '=').0;
            let (name, ty) = match decl.split_once(':') {
                Some((n, t)) => (n.trim(), t.trim()),
                None => (decl.trim(), "any"),
            };
            Some(Param {
                name: name.to_string(),
                type_tag: ty.to_string(),
            })
        })
        .collect()
}

fn split_once_top(s: &str, sep: char) -> (&str, Option<&str>) {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            c if c == sep && depth == 0 => return (&s[..i], Some(&s[i + c.len_utf8()..])),
            _ => {}
        }
    }
    (s, None)
}

/// Locates every `def` in `lines`. Nested definitions are reported too;
/// callers filter by indentation.
pub(crate) fn scan_functions(lines: &[&str]) -> Vec<FunctionSpan> {
    let mut found = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let Some((name, ns, ne)) = def_header(lines[i]) else {
            i += 1;
            continue;
        };
        let indent = indent_of(lines[i]);
        // gather the signature up to the balancing `)` and trailing `:`
        let mut sig = String::new();
        let mut depth = 0i32;
        let mut opened = false;
        let mut j = i;
        let mut params_text = String::new();
        let mut complete = false;
        'outer: while j < lines.len() {
            let line = if j == i { &lines[j][ne..] } else { lines[j] };
            for c in line.chars() {
                if opened && depth > 0 {
                    if c == ')' && depth == 1 {
                        depth = 0;
                        continue;
                    }
                    if c == '(' || c == '[' || c == '{' {
                        depth += 1;
                    } else if c == ')' || c == ']' || c == '}' {
                        depth -= 1;
                    }
                    params_text.push(c);
                } else if !opened && c == '(' {
                    opened = true;
                    depth = 1;
                } else if opened && depth == 0 && c == ':' {
                    complete = true;
                    // a one-liner body after the colon is not supported
                    break 'outer;
                }
            }
            sig.push_str(line);
            params_text.push(' ');
            j += 1;
        }
        if !complete {
            i += 1;
            continue;
        }
        let body_start = j + 1;
        let mut end = body_start;
        let mut k = body_start;
        while k < lines.len() {
            if is_blank_or_comment(lines[k]) {
                k += 1;
                continue;
            }
            if indent_of(lines[k]) <= indent {
                break;
            }
            k += 1;
            end = k;
        }
        found.push(FunctionSpan {
            name,
            params: parse_params(&params_text),
            indent,
            start: i,
            body_start,
            end,
            name_range: (ns, ne),
        });
        i = body_start;
    }
    found
}

/// Finds a docstring at the first statement of a body; returns
/// `(text, first_line, one_past_last_line)`.
pub(crate) fn find_docstring(lines: &[&str], body_start: usize, end: usize) -> Option<(String, usize, usize)> {
    let first = (body_start..end).find(|&k| !lines[k].trim().is_empty())?;
    let t = lines[first].trim_start();
    let t = t.strip_prefix(['r', 'R']).unwrap_or(t);
    let quote = ["\"\"\"", "'''"].into_iter().find(|q| t.starts_with(q))?;
    let after = &t[3..];
    if let Some(close) = after.find(quote) {
        return Some((after[..close].trim().to_string(), first, first + 1));
    }
    let mut text = vec![after.to_string()];
    for (k, line) in lines.iter().enumerate().take(end).skip(first + 1) {
        if let Some(close) = line.find(quote) {
            text.push(line[..close].to_string());
            let joined = dedent_block(&text.join("\n"));
            return Some((joined.trim().to_string(), first, k + 1));
        }
        text.push(line.to_string());
    }
    None
}

pub(crate) fn dedent_block(text: &str) -> String {
    let lines: Vec<&str> = text.lines().collect();
    let min = lines
        .iter()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| indent_of(l))
        .min()
        .unwrap_or(0);
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                l.trim().to_string()
            } else {
                strip_indent(l, min).to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Removes up to `n` columns of leading whitespace.
pub(crate) fn strip_indent(line: &str, n: usize) -> &str {
    let mut cols = 0;
    for (i, c) in line.char_indices() {
        if cols >= n || !(c == ' ' || c == '\t') {
            return &line[i..];
        }
        cols += if c == '\t' { 4 } else { 1 };
    }
    ""
}

pub fn parse_template(source: &str) -> Result<TemplateProgram> {
    let lines: Vec<&str> = source.lines().collect();
    let top: Vec<FunctionSpan> = scan_functions(&lines)
        .into_iter()
        .filter(|f| f.indent == 0)
        .collect();
    let func = match top.as_slice() {
        [f] => f.clone(),
        [] => return Err(Error::Template("no top-level function definition".into())),
        many => {
            return Err(Error::Template(format!(
                "expected one top-level function, found {}",
                many.len()
            )))
        }
    };
    if let Some(extra) = lines[func.end..].iter().find(|l| !is_blank_or_comment(l)) {
        return Err(Error::Template(format!(
            "unexpected top-level content after the function: `{}`",
            extra.trim()
        )));
    }
    if func.params.is_empty() {
        return Err(Error::Template(format!("function `{}` has no parameters", func.name)));
    }
    let (docstring, ds_start, ds_end) = find_docstring(&lines, func.body_start, func.end)
        .ok_or_else(|| Error::Template(format!("function `{}` has no docstring", func.name)))?;
    if docstring.is_empty() {
        return Err(Error::Template(format!("function `{}` has an empty docstring", func.name)));
    }
    let join = |from: usize, to: usize| lines[from..to].join("\n");
    Ok(TemplateProgram {
        source: source.to_string(),
        function_name: func.name.clone(),
        params: func.params.clone(),
        docstring,
        body: join(ds_end, func.end).trim_end().to_string(),
        preamble: join(0, func.start).trim().to_string(),
        signature: join(func.start, func.body_start),
        docstring_raw: join(ds_start, ds_end),
    })
}

impl TemplateProgram {
    pub fn param_names(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.name.as_str()).collect()
    }

    /// Reassembles the full program text.
    pub fn assemble(&self) -> String {
        let mut out = String::new();
        if !self.preamble.is_empty() {
            out.push_str(&self.preamble);
            out.push_str("\n\n");
        }
        out.push_str(&self.signature);
        out.push('\n');
        out.push_str(&self.docstring_raw);
        out.push('\n');
        out.push_str(&self.body);
        out.push('\n');
        out
    }

    /// Signature and docstring without a body, with the function renamed.
    pub fn header_named(&self, name: &str) -> String {
        let signature = self.signature.replacen(
            &format!("def {}", self.function_name),
            &format!("def {name}"),
            1,
        );
        format!("{signature}\n{}\n", self.docstring_raw)
    }

    /// Whole program with the function renamed.
    pub fn assemble_named(&self, name: &str) -> String {
        rename_function(&self.assemble(), &self.function_name, name)
    }
}

/// Renames the first `def old(` in `code` to `new`.
pub(crate) fn rename_function(code: &str, old: &str, new: &str) -> String {
    let lines: Vec<&str> = code.lines().collect();
    let funcs = scan_functions(&lines);
    let Some(f) = funcs.iter().find(|f| f.name == old) else {
        return code.to_string();
    };
    let mut out: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
    let line = &lines[f.start];
    out[f.start] = format!("{}{}{}", &line[..f.name_range.0], new, &line[f.name_range.1..]);
    let mut s = out.join("\n");
    if code.ends_with('\n') {
        s.push('\n');
    }
    s
}
