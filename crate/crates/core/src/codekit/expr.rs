//! Safe arithmetic expression language used for in-process candidates.
//!
//! Grammar (EBNF), loosest binding first:
//!
//! ```text
//! expr     = cmp ;
//! cmp      = sum { ("<" | "<=" | ">" | ">=") sum } ;
//! sum      = product { ("+" | "-") product } ;
//! product  = power { ("*" | "/") power } ;
//! power    = unary [ ("^" | "**") power ] ;
//! unary    = ("-" | "+") unary | atom ;
//! atom     = number | ident | call | "(" expr ")" ;
//! call     = fname "(" expr { "," expr } ")" ;
//! fname    = "abs" | "sqrt" | "log" | "exp" | "sin" | "cos"
//!          | "min" | "max" | "if" ;
//! ```
//!
//! Identifiers may carry a `math.`, `np.` or `numpy.` prefix, which is
//! dropped. `pi` is a constant unless bound as a variable.
//!
//! Every operator is total: division by a near-zero denominator yields 1,
//! `sqrt` and `log` act on `|x|`, `exp` saturates at argument 700, and any
//! overflow is clamped to `±f64::MAX`, so evaluation never produces NaN or
//! an infinity.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

pub const MAX_SOURCE_LEN: usize = 64 * 1024;
pub const MAX_DEPTH: usize = 64;
pub const MAX_NODES: usize = 10_000;
const MAX_NESTING: usize = 256;

pub const DIV_EPSILON: f64 = 1e-12;
pub const LOG_EPSILON: f64 = 1e-12;
pub const EXP_CLAMP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Abs,
    Sqrt,
    Log,
    Exp,
    Sin,
    Cos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// Index into the binding set the expression was parsed against.
    Var(usize),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    If(Box<Node>, Box<Node>, Box<Node>),
}

impl Node {
    pub fn node_count(&self) -> usize {
        match self {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Unary(_, a) => 1 + a.node_count(),
            Node::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
            Node::If(c, t, e) => 1 + c.node_count() + t.node_count() + e.node_count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Unary(_, a) => 1 + a.depth(),
            Node::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
            Node::If(c, t, e) => 1 + c.depth().max(t.depth()).max(e.depth()),
        }
    }
}

/// A parsed expression together with the variable names it was bound to.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprAst {
    pub root: Node,
    pub vars: Vec<String>,
}

/// Evaluation ran out of its node-visit allowance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExhausted;

/// Node-visit allowance shared by every expression evaluated for one
/// candidate.
#[derive(Debug, Clone)]
pub struct NodeBudget {
    remaining: u64,
}

impl NodeBudget {
    pub fn new(visits: u64) -> Self {
        Self { remaining: visits }
    }

    pub fn unlimited() -> Self {
        Self::new(u64::MAX)
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    #[inline]
    fn charge(&mut self) -> std::result::Result<(), BudgetExhausted> {
        if self.remaining == 0 {
            return Err(BudgetExhausted);
        }
        self.remaining -= 1;
        Ok(())
    }
}

pub fn parse_expression(text: &str, bindings: &[&str]) -> Result<ExprAst> {
    let vars: Vec<String> = bindings.iter().map(|s| s.to_string()).collect();
    let root = parse_node(text, &vars)?;
    Ok(ExprAst { root, vars })
}

pub(crate) fn parse_node(text: &str, vars: &[String]) -> Result<Node> {
    if text.len() > MAX_SOURCE_LEN {
        return Err(Error::Parse(format!(
            "expression longer than {MAX_SOURCE_LEN} bytes"
        )));
    }
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        vars,
        nodes: 0,
        nesting: 0,
    };
    let (node, _) = p.expr(0)?;
    if let Some(tok) = p.peek() {
        return Err(Error::Parse(format!("unexpected {tok} after expression")));
    }
    Ok(node)
}

/// Evaluates with named bindings.
pub fn eval_expression(ast: &ExprAst, bindings: &HashMap<String, f64>) -> Result<f64> {
    let slots = ast
        .vars
        .iter()
        .map(|name| {
            bindings
                .get(name)
                .copied()
                .ok_or_else(|| Error::Eval(format!("unbound variable `{name}`")))
        })
        .collect::<Result<Vec<f64>>>()?;
    eval_node(&ast.root, &slots, &mut NodeBudget::unlimited())
        .map_err(|_| Error::Eval("node budget exhausted".into()))
}

impl ExprAst {
    pub fn eval_slots(&self, slots: &[f64], budget: &mut NodeBudget) -> std::result::Result<f64, BudgetExhausted> {
        eval_node(&self.root, slots, budget)
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }
}

#[inline]
pub(crate) fn finite(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else if x == f64::INFINITY {
        f64::MAX
    } else if x == f64::NEG_INFINITY {
        -f64::MAX
    } else {
        x
    }
}

pub fn protected_div(x: f64, y: f64) -> f64 {
    if y.abs() < DIV_EPSILON {
        1.0
    } else {
        finite(x / y)
    }
}

fn protected_pow(x: f64, y: f64) -> f64 {
    let base = if x < 0.0 && y.fract() != 0.0 { x.abs() } else { x };
    finite(base.powf(y))
}

fn apply_unary(op: UnaryOp, x: f64) -> f64 {
    finite(match op {
        UnaryOp::Neg => -x,
        UnaryOp::Abs => x.abs(),
        UnaryOp::Sqrt => x.abs().sqrt(),
        UnaryOp::Log => (x.abs() + LOG_EPSILON).ln(),
        UnaryOp::Exp => x.min(EXP_CLAMP).exp(),
        UnaryOp::Sin => x.sin(),
        UnaryOp::Cos => x.cos(),
    })
}

fn apply_binary(op: BinaryOp, x: f64, y: f64) -> f64 {
    let truth = |b: bool| if b { 1.0 } else { 0.0 };
    match op {
        BinaryOp::Add => finite(x + y),
        BinaryOp::Sub => finite(x - y),
        BinaryOp::Mul => finite(x * y),
        BinaryOp::Div => protected_div(x, y),
        BinaryOp::Pow => protected_pow(x, y),
        BinaryOp::Min => x.min(y),
        BinaryOp::Max => x.max(y),
        BinaryOp::Lt => truth(x < y),
        BinaryOp::Le => truth(x <= y),
        BinaryOp::Gt => truth(x > y),
        BinaryOp::Ge => truth(x >= y),
    }
}

pub(crate) fn eval_node(node: &Node, slots: &[f64], budget: &mut NodeBudget) -> std::result::Result<f64, BudgetExhausted> {
    budget.charge()?;
    Ok(match node {
        Node::Const(c) => *c,
        Node::Var(i) => finite(slots[*i]),
        Node::Unary(op, a) => apply_unary(*op, eval_node(a, slots, budget)?),
        Node::Binary(op, a, b) => {
            let x = eval_node(a, slots, budget)?;
            let y = eval_node(b, slots, budget)?;
            apply_binary(*op, x, y)
        }
        Node::If(c, t, e) => {
            if eval_node(c, slots, budget)? != 0.0 {
                eval_node(t, slots, budget)?
            } else {
                eval_node(e, slots, budget)?
            }
        }
    })
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Lt,
    Le,
    Gt,
    Ge,
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(n) => write!(f, "number {n}"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::Lt => write!(f, "`<`"),
            Tok::Le => write!(f, "`<=`"),
            Tok::Gt => write!(f, "`>`"),
            Tok::Ge => write!(f, "`>=`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
        }
    }
}

const MODULE_PREFIXES: [&str; 3] = ["math", "np", "numpy"];

fn lex(text: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() || c == '\\' {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v: f64 = s
                .parse()
                .map_err(|_| Error::Parse(format!("malformed number `{s}`")))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("number `{s}` out of range")));
            }
            out.push(Tok::Num(v));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut ident = read_ident(&chars, &mut i);
            if MODULE_PREFIXES.contains(&ident.as_str())
                && chars.get(i) == Some(&'.')
                && chars.get(i + 1).is_some_and(|d| d.is_alphabetic() || *d == '_')
            {
                i += 1;
                ident = read_ident(&chars, &mut i);
            }
            out.push(Tok::Ident(ident));
            continue;
        }
        let two = chars.get(i + 1).copied();
        let (tok, width) = match (c, two) {
            ('*', Some('*')) => (Tok::Caret, 2),
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            ('^', _) => (Tok::Caret, 1),
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (',', _) => (Tok::Comma, 1),
            _ => return Err(Error::Parse(format!("unexpected character `{c}`"))),
        };
        out.push(tok);
        i += width;
    }
    Ok(out)
}

fn read_ident(chars: &[char], i: &mut usize) -> String {
    let start = *i;
    while *i < chars.len() && (chars[*i].is_alphanumeric() || chars[*i] == '_') {
        *i += 1;
    }
    chars[start..*i].iter().collect()
}

// ---------------------------------------------------------------------------
// Pratt parser
// ---------------------------------------------------------------------------

const PREFIX_BP: u8 = 9;

fn infix_bp(tok: &Tok) -> Option<(u8, u8, BinaryOp)> {
    Some(match tok {
        Tok::Lt => (1, 2, BinaryOp::Lt),
        Tok::Le => (1, 2, BinaryOp::Le),
        Tok::Gt => (1, 2, BinaryOp::Gt),
        Tok::Ge => (1, 2, BinaryOp::Ge),
        Tok::Plus => (3, 4, BinaryOp::Add),
        Tok::Minus => (3, 4, BinaryOp::Sub),
        Tok::Star => (5, 6, BinaryOp::Mul),
        Tok::Slash => (5, 6, BinaryOp::Div),
        Tok::Caret => (8, 7, BinaryOp::Pow),
        _ => return None,
    })
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    vars: &'a [String],
    nodes: usize,
    nesting: usize,
}

type Parsed = (Node, usize);

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(Error::Parse(format!("expected {want}, found {t}"))),
            None => Err(Error::Parse(format!("expected {want}, found end of input"))),
        }
    }

    fn make(&mut self, node: Node, depth: usize) -> Result<Parsed> {
        self.nodes += 1;
        if self.nodes > MAX_NODES {
            return Err(Error::Parse(format!("expression exceeds {MAX_NODES} nodes")));
        }
        if depth > MAX_DEPTH {
            return Err(Error::Parse(format!("expression deeper than {MAX_DEPTH}")));
        }
        Ok((node, depth))
    }

    fn expr(&mut self, min_bp: u8) -> Result<Parsed> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            return Err(Error::Parse("expression nested too deeply".into()));
        }
        let mut lhs = self.prefix()?;
        while let Some((lbp, rbp, op)) = self.peek().and_then(infix_bp) {
            if lbp < min_bp {
                break;
            }
            self.next();
            let rhs = self.expr(rbp)?;
            let depth = 1 + lhs.1.max(rhs.1);
            lhs = self.make(Node::Binary(op, Box::new(lhs.0), Box::new(rhs.0)), depth)?;
        }
        self.nesting -= 1;
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Parsed> {
        match self.next() {
            Some(Tok::Num(v)) => self.make(Node::Const(v), 1),
            Some(Tok::Minus) => {
                let (a, d) = self.expr(PREFIX_BP)?;
                self.make(Node::Unary(UnaryOp::Neg, Box::new(a)), d + 1)
            }
            Some(Tok::Plus) => self.expr(PREFIX_BP),
            Some(Tok::LParen) => {
                let inner = self.expr(0)?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.next();
                    self.call(&name)
                } else if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    self.make(Node::Var(i), 1)
                } else if name == "pi" {
                    self.make(Node::Const(std::f64::consts::PI), 1)
                } else {
                    Err(Error::Parse(format!("unknown identifier `{name}`")))
                }
            }
            Some(t) => Err(Error::Parse(format!("unexpected {t}"))),
            None => Err(Error::Parse("unexpected end of input".into())),
        }
    }

    fn call(&mut self, name: &str) -> Result<Parsed> {
        let mut args = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                args.push(self.expr(0)?);
                match self.next() {
                    Some(Tok::Comma) => continue,
                    Some(Tok::RParen) => break,
                    Some(t) => return Err(Error::Parse(format!("expected `,` or `)`, found {t}"))),
                    None => return Err(Error::Parse("unbalanced parentheses".into())),
                }
            }
        } else {
            self.next();
        }
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!("`{name}` takes {n} argument(s), got {}", args.len())))
            }
        };
        let unary = match name {
            "abs" | "fabs" => Some(UnaryOp::Abs),
            "sqrt" => Some(UnaryOp::Sqrt),
            "log" => Some(UnaryOp::Log),
            "exp" => Some(UnaryOp::Exp),
            "sin" => Some(UnaryOp::Sin),
            "cos" => Some(UnaryOp::Cos),
            _ => None,
        };
        if let Some(op) = unary {
            arity(1)?;
            let (a, d) = args.pop().unwrap();
            return self.make(Node::Unary(op, Box::new(a)), d + 1);
        }
        match name {
            "min" | "max" => {
                arity(2)?;
                let (b, db) = args.pop().unwrap();
                let (a, da) = args.pop().unwrap();
                let op = if name == "min" { BinaryOp::Min } else { BinaryOp::Max };
                self.make(Node::Binary(op, Box::new(a), Box::new(b)), 1 + da.max(db))
            }
            "if" => {
                arity(3)?;
                let (e, de) = args.pop().unwrap();
                let (t, dt) = args.pop().unwrap();
                let (c, dc) = args.pop().unwrap();
                self.make(Node::If(Box::new(c), Box::new(t), Box::new(e)), 1 + dc.max(dt).max(de))
            }
            _ => Err(Error::Parse(format!("unknown function `{name}`"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

const PREC_CMP: u8 = 1;
const PREC_SUM: u8 = 2;
const PREC_PRODUCT: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_UNARY: u8 = 5;
const PREC_ATOM: u8 = 6;

fn binary_prec(op: BinaryOp) -> Option<u8> {
    match op {
        BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => Some(PREC_CMP),
        BinaryOp::Add | BinaryOp::Sub => Some(PREC_SUM),
        BinaryOp::Mul | BinaryOp::Div => Some(PREC_PRODUCT),
        BinaryOp::Pow => Some(PREC_POW),
        BinaryOp::Min | BinaryOp::Max => None,
    }
}

fn symbol(op: BinaryOp) -> &'static str {
    match op {
        BinaryOp::Add => "+",
        BinaryOp::Sub => "-",
        BinaryOp::Mul => "*",
        BinaryOp::Div => "/",
        BinaryOp::Pow => "^",
        BinaryOp::Min => "min",
        BinaryOp::Max => "max",
        BinaryOp::Lt => "<",
        BinaryOp::Le => "<=",
        BinaryOp::Gt => ">",
        BinaryOp::Ge => ">=",
    }
}

fn unary_name(op: UnaryOp) -> &'static str {
    match op {
        UnaryOp::Neg => "-",
        UnaryOp::Abs => "abs",
        UnaryOp::Sqrt => "sqrt",
        UnaryOp::Log => "log",
        UnaryOp::Exp => "exp",
        UnaryOp::Sin => "sin",
        UnaryOp::Cos => "cos",
    }
}

fn prec(node: &Node) -> u8 {
    match node {
        Node::Const(c) if c.is_sign_negative() => PREC_UNARY,
        Node::Unary(UnaryOp::Neg, _) => PREC_UNARY,
        Node::Binary(op, _, _) => binary_prec(*op).unwrap_or(PREC_ATOM),
        _ => PREC_ATOM,
    }
}

pub(crate) fn write_node(node: &Node, vars: &[String], out: &mut String) {
    match node {
        Node::Const(c) => {
            if c.is_sign_negative() {
                out.push_str(&format!("-{:?}", c.abs()));
            } else {
                out.push_str(&format!("{c:?}"));
            }
        }
        Node::Var(i) => out.push_str(vars.get(*i).map(String::as_str).unwrap_or("?")),
        Node::Unary(UnaryOp::Neg, a) => {
            out.push('-');
            wrap(a, prec(a) < PREC_UNARY, vars, out);
        }
        Node::Unary(op, a) => {
            out.push_str(unary_name(*op));
            out.push('(');
            write_node(a, vars, out);
            out.push(')');
        }
        Node::Binary(op, a, b) => match binary_prec(*op) {
            None => {
                out.push_str(symbol(*op));
                out.push('(');
                write_node(a, vars, out);
                out.push_str(", ");
                write_node(b, vars, out);
                out.push(')');
            }
            Some(p) => {
                let right_assoc = *op == BinaryOp::Pow;
                let (pa, pb) = (prec(a), prec(b));
                wrap(a, pa < p || (pa == p && right_assoc), vars, out);
                out.push(' ');
                out.push_str(symbol(*op));
                out.push(' ');
                wrap(b, pb < p || (pb == p && !right_assoc), vars, out);
            }
        },
        Node::If(c, t, e) => {
            out.push_str("if(");
            write_node(c, vars, out);
            out.push_str(", ");
            write_node(t, vars, out);
            out.push_str(", ");
            write_node(e, vars, out);
            out.push(')');
        }
    }
}

fn wrap(node: &Node, parens: bool, vars: &[String], out: &mut String) {
    if parens {
        out.push('(');
    }
    write_node(node, vars, out);
    if parens {
        out.push(')');
    }
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_node(&self.root, &self.vars, &mut s);
        f.write_str(&s)
    }
}
