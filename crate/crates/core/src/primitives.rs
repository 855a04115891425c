//! Primitive sets and expression trees.
//!
//! A gene is an [`ExprTree`] stored in prefix order. Leaves read a variable
//! one sample in the past (`y1` is `y[k-1]`); a back-shift node `qd` delays
//! its whole subtree by `d` further samples, so `q1(y1)` reads `y[k-2]`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PrimitiveFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A named function usable as an interior node.
#[derive(Clone)]
pub struct Function {
    name: String,
    arity: usize,
    eval: PrimitiveFn,
}

impl Function {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    #[inline]
    pub fn apply(&self, args: &[f64]) -> f64 {
        (self.eval)(args)
    }
}

impl fmt::Debug for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

/// Looks up one of the functions shipped with the crate.
pub fn builtin(name: &str) -> Option<(usize, PrimitiveFn)> {
    let (arity, f): (usize, PrimitiveFn) = match name {
        "mul" => (2, Arc::new(|a: &[f64]| a[0] * a[1])),
        "add" => (2, Arc::new(|a: &[f64]| a[0] + a[1])),
        "sub" => (2, Arc::new(|a: &[f64]| a[0] - a[1])),
        // protected division
        "div" => (
            2,
            Arc::new(|a: &[f64]| if a[1].abs() < 1e-12 { 1.0 } else { a[0] / a[1] }),
        ),
        "gt" => (2, Arc::new(|a: &[f64]| if a[0] > a[1] { 1.0 } else { 0.0 })),
        "neg" => (1, Arc::new(|a: &[f64]| -a[0])),
        "abs" => (1, Arc::new(|a: &[f64]| a[0].abs())),
        "square" => (1, Arc::new(|a: &[f64]| a[0] * a[0])),
        "tanh" => (1, Arc::new(|a: &[f64]| a[0].tanh())),
        "sin" => (1, Arc::new(|a: &[f64]| a[0].sin())),
        "cos" => (1, Arc::new(|a: &[f64]| a[0].cos())),
        "exp" => (1, Arc::new(|a: &[f64]| a[0].exp())),
        "log" => (1, Arc::new(|a: &[f64]| a[0].abs().max(1e-12).ln())),
        "sqrt" => (1, Arc::new(|a: &[f64]| a[0].abs().sqrt())),
        _ => return None,
    };
    Some((arity, f))
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses `q<d>` shift operator names.
fn shift_amount(s: &str) -> Option<usize> {
    let digits = s.strip_prefix('q')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    digits.parse().ok()
}

/// Functions, variables, back-shift operators and named constants that
/// genes may be built from.
#[derive(Clone)]
pub struct PrimitiveSet {
    functions: Vec<Function>,
    variables: Vec<String>,
    max_delay: usize,
    constants: Vec<(String, f64)>,
}

impl fmt::Debug for PrimitiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrimitiveSet")
            .field("functions", &self.functions)
            .field("variables", &self.variables)
            .field("max_delay", &self.max_delay)
            .field("constants", &self.constants)
            .finish()
    }
}

impl PrimitiveSet {
    /// Creates a set with `mul`, shift operators `q1..q{max_delay}` and
    /// variables `ARG0..ARG{n-1}`. `ARG0` is the output variable.
    pub fn new(max_delay: usize, number_of_variables: usize) -> Result<Self> {
        if number_of_variables == 0 {
            return Err(Error::NoVariables);
        }
        let (arity, eval) = builtin("mul").expect("mul is built in");
        Ok(Self {
            functions: vec![Function {
                name: "mul".into(),
                arity,
                eval,
            }],
            variables: (0..number_of_variables)
                .map(|i| format!("ARG{i}"))
                .collect(),
            max_delay,
            constants: Vec::new(),
        })
    }

    /// Builds a set and registers the given built-in functions.
    pub fn with_functions(
        max_delay: usize,
        number_of_variables: usize,
        extra: &[(&str, usize)],
    ) -> Result<Self> {
        let mut pset = Self::new(max_delay, number_of_variables)?;
        for &(name, arity) in extra {
            pset.add_builtin(name, arity)?;
        }
        Ok(pset)
    }

    fn check_new_symbol(&self, name: &str) -> Result<()> {
        if !is_name(name) {
            return Err(Error::InvalidName(name.to_string()));
        }
        if shift_amount(name).is_some() || self.symbol_exists(name) {
            return Err(Error::DuplicateFunction(name.to_string()));
        }
        Ok(())
    }

    fn symbol_exists(&self, name: &str) -> bool {
        self.functions.iter().any(|f| f.name == name)
            || self.variables.iter().any(|v| v == name)
            || self.constants.iter().any(|(c, _)| c == name)
    }

    /// Registers a built-in function by name; the arity must match.
    pub fn add_builtin(&mut self, name: &str, arity: usize) -> Result<()> {
        if arity < 1 {
            return Err(Error::InvalidArity {
                name: name.into(),
                arity,
            });
        }
        self.check_new_symbol(name)?;
        match builtin(name) {
            Some((a, eval)) if a == arity => {
                self.functions.push(Function {
                    name: name.into(),
                    arity,
                    eval,
                });
                Ok(())
            }
            _ => Err(Error::UnknownBuiltin {
                name: name.into(),
                arity,
            }),
        }
    }

    /// Registers a user-defined pointwise function.
    pub fn add_function<F>(&mut self, name: &str, arity: usize, f: F) -> Result<()>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if arity < 1 {
            return Err(Error::InvalidArity {
                name: name.into(),
                arity,
            });
        }
        self.check_new_symbol(name)?;
        self.functions.push(Function {
            name: name.into(),
            arity,
            eval: Arc::new(f),
        });
        Ok(())
    }

    /// Registers a named numeric terminal.
    pub fn add_constant(&mut self, name: &str, value: f64) -> Result<()> {
        self.check_new_symbol(name)?;
        self.constants.push((name.into(), value));
        Ok(())
    }

    /// Returns a copy with variables renamed according to `mapping`.
    pub fn rename_arguments<S: AsRef<str>>(&self, mapping: &[(S, S)]) -> Result<Self> {
        let mut variables = self.variables.clone();
        for (from, to) in mapping {
            let (from, to) = (from.as_ref(), to.as_ref());
            let idx = self
                .variables
                .iter()
                .position(|v| v == from)
                .ok_or_else(|| Error::UnknownVariable(from.into()))?;
            if !is_name(to) || shift_amount(to).is_some() {
                return Err(Error::InvalidName(to.into()));
            }
            variables[idx] = to.into();
        }
        for (i, v) in variables.iter().enumerate() {
            let clash = variables[..i].contains(v)
                || self.functions.iter().any(|f| &f.name == v)
                || self.constants.iter().any(|(c, _)| c == v);
            if clash {
                return Err(Error::DuplicateVariable(v.clone()));
            }
        }
        Ok(Self {
            variables,
            ..self.clone()
        })
    }

    pub fn functions(&self) -> &[Function] {
        &self.functions
    }

    pub fn function(&self, id: usize) -> &Function {
        &self.functions[id]
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.variables.len() - 1
    }

    pub fn max_delay(&self) -> usize {
        self.max_delay
    }

    pub fn constants(&self) -> &[(String, f64)] {
        &self.constants
    }

    /// Names of all interior-node operators: functions then shifts.
    pub fn operator_names(&self) -> Vec<String> {
        self.functions
            .iter()
            .map(|f| f.name.clone())
            .chain((1..=self.max_delay).map(|d| format!("q{d}")))
            .collect()
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    /// Parses a prefix expression such as `mul(q1(y1),u1)`.
    pub fn parse(&self, text: &str) -> Result<ExprTree> {
        Parser::new(self, text).parse()
    }

    /// Canonical prefix form of `tree`.
    pub fn print(&self, tree: &ExprTree) -> String {
        let mut out = String::new();
        self.write_node(tree, 0, &mut out);
        out
    }

    fn write_node(&self, tree: &ExprTree, at: usize, out: &mut String) -> usize {
        let node = tree.nodes[at];
        match node {
            Node::Var(v) => out.push_str(&self.variables[v as usize]),
            Node::Named(c) => out.push_str(&self.constants[c as usize].0),
            Node::Const(x) => out.push_str(&format!("{x:?}")),
            Node::Func { id, .. } => out.push_str(&self.functions[id as usize].name),
            Node::Shift(d) => out.push_str(&format!("q{d}")),
        }
        let arity = node.arity();
        if arity == 0 {
            return at + 1;
        }
        out.push('(');
        let mut next = at + 1;
        for i in 0..arity {
            if i > 0 {
                out.push(',');
            }
            next = self.write_node(tree, next, out);
        }
        out.push(')');
        next
    }

    /// Random tree with height at most `max_height`, ramped half-and-half
    /// between heights 1 and `max_height`.
    pub fn random_tree<R: Rng + ?Sized>(&self, max_height: usize, rng: &mut R) -> ExprTree {
        if max_height == 0 {
            return ExprTree {
                nodes: vec![self.random_terminal(rng)],
            };
        }
        let height = rng.random_range(1..=max_height);
        let full = rng.random_bool(0.5);
        let mut nodes = Vec::new();
        self.grow(&mut nodes, 0, height, full, rng);
        ExprTree { nodes }
    }

    fn num_operators(&self) -> usize {
        self.functions.len() + self.max_delay
    }

    fn num_terminals(&self) -> usize {
        self.variables.len() + self.constants.len()
    }

    fn random_terminal<R: Rng + ?Sized>(&self, rng: &mut R) -> Node {
        let i = rng.random_range(0..self.num_terminals());
        if i < self.variables.len() {
            Node::Var(i as u16)
        } else {
            Node::Named((i - self.variables.len()) as u16)
        }
    }

    fn random_operator<R: Rng + ?Sized>(&self, rng: &mut R) -> Node {
        let i = rng.random_range(0..self.num_operators());
        if i < self.functions.len() {
            Node::Func {
                id: i as u16,
                arity: self.functions[i].arity as u8,
            }
        } else {
            Node::Shift((i - self.functions.len() + 1) as u16)
        }
    }

    fn grow<R: Rng + ?Sized>(
        &self,
        nodes: &mut Vec<Node>,
        depth: usize,
        height: usize,
        full: bool,
        rng: &mut R,
    ) {
        let terminal = if depth >= height {
            true
        } else if full {
            false
        } else {
            let nt = self.num_terminals() as f64;
            rng.random_bool(nt / (nt + self.num_operators() as f64))
        };
        if terminal {
            nodes.push(self.random_terminal(rng));
            return;
        }
        let op = self.random_operator(rng);
        nodes.push(op);
        for _ in 0..op.arity() {
            self.grow(nodes, depth + 1, height, full, rng);
        }
    }
}

/// Builds a primitive set from built-in function names.
pub fn make_pset(
    max_delay: usize,
    number_of_variables: usize,
    extra_functions: &[(&str, usize)],
) -> Result<PrimitiveSet> {
    PrimitiveSet::with_functions(max_delay, number_of_variables, extra_functions)
}

/// One node of a prefix-ordered expression tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Func {
        id: u16,
        arity: u8,
    },
    /// Back-shift by the given number of samples.
    Shift(u16),
    Var(u16),
    Named(u16),
    Const(f64),
}

impl Node {
    #[inline]
    pub fn arity(&self) -> usize {
        match *self {
            Node::Func { arity, .. } => arity as usize,
            Node::Shift(_) => 1,
            _ => 0,
        }
    }
}

/// An expression tree in prefix order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExprTree {
    nodes: Vec<Node>,
}

impl ExprTree {
    /// Wraps a node sequence, checking that it forms exactly one tree.
    pub fn from_nodes(nodes: Vec<Node>) -> Option<Self> {
        let mut open = 1usize;
        for (i, n) in nodes.iter().enumerate() {
            if open == 0 {
                return None;
            }
            open = open - 1 + n.arity();
            if open == 0 && i + 1 != nodes.len() {
                return None;
            }
        }
        (open == 0).then_some(Self { nodes })
    }

    pub fn leaf(node: Node) -> Self {
        debug_assert_eq!(node.arity(), 0);
        Self { nodes: vec![node] }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> Node {
        self.nodes[0]
    }

    /// Exclusive end index of the subtree rooted at `start`.
    pub fn subtree_end(&self, start: usize) -> usize {
        let mut open = 1usize;
        let mut i = start;
        while open > 0 {
            open = open - 1 + self.nodes[i].arity();
            i += 1;
        }
        i
    }

    /// Levels from root to deepest leaf; a single leaf has height 0.
    pub fn height(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// Depth of every node, in prefix order.
    pub fn depths(&self) -> Vec<usize> {
        let mut depths = Vec::with_capacity(self.nodes.len());
        // remaining children of every ancestor level
        let mut stack: Vec<usize> = Vec::new();
        for n in &self.nodes {
            depths.push(stack.len());
            if let Some(top) = stack.last_mut() {
                *top -= 1;
            }
            if n.arity() > 0 {
                stack.push(n.arity());
            } else {
                while matches!(stack.last(), Some(0)) {
                    stack.pop();
                }
            }
        }
        depths
    }

    /// Returns a copy where the subtree at `start` is replaced by `with`.
    pub fn replace_subtree(&self, start: usize, with: &[Node]) -> ExprTree {
        let end = self.subtree_end(start);
        let mut nodes = Vec::with_capacity(self.nodes.len() - (end - start) + with.len());
        nodes.extend_from_slice(&self.nodes[..start]);
        nodes.extend_from_slice(with);
        nodes.extend_from_slice(&self.nodes[end..]);
        ExprTree { nodes }
    }

    pub fn subtree(&self, start: usize) -> &[Node] {
        &self.nodes[start..self.subtree_end(start)]
    }

    /// Wraps the tree in a back-shift of `d` samples.
    pub fn shifted(&self, d: usize) -> ExprTree {
        let mut nodes = Vec::with_capacity(self.nodes.len() + 1);
        nodes.push(Node::Shift(d as u16));
        nodes.extend_from_slice(&self.nodes);
        ExprTree { nodes }
    }

    /// Effective lag of each leaf, in prefix order (`None` for non-variable
    /// nodes): one implicit unit delay plus all enclosing shifts.
    pub fn leaf_lags(&self) -> Vec<Option<usize>> {
        let mut out = Vec::with_capacity(self.nodes.len());
        // (remaining children, accumulated shift at that level)
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for n in &self.nodes {
            let delay = stack.last().map_or(0, |&(_, d)| d);
            out.push(match n {
                Node::Var(_) => Some(1 + delay),
                _ => None,
            });
            if let Some(top) = stack.last_mut() {
                top.0 -= 1;
            }
            match *n {
                Node::Shift(d) => stack.push((1, delay + d as usize)),
                Node::Func { arity, .. } => stack.push((arity as usize, delay)),
                _ => {}
            }
            while matches!(stack.last(), Some(&(0, _))) {
                stack.pop();
            }
        }
        out
    }

    /// Per-variable maximum effective lag.
    pub fn lag_profile(&self, num_variables: usize) -> LagProfile {
        let mut per_variable = vec![0; num_variables];
        for (n, lag) in self.nodes.iter().zip(self.leaf_lags()) {
            if let (Node::Var(v), Some(lag)) = (n, lag) {
                let slot = &mut per_variable[*v as usize];
                *slot = (*slot).max(lag);
            }
        }
        LagProfile { per_variable }
    }
}

/// Maximum effective lag per variable; index 0 is the output.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LagProfile {
    per_variable: Vec<usize>,
}

impl LagProfile {
    pub fn new(per_variable: Vec<usize>) -> Self {
        Self { per_variable }
    }

    pub fn per_variable(&self) -> &[usize] {
        &self.per_variable
    }

    pub fn lag(&self, var: usize) -> usize {
        self.per_variable.get(var).copied().unwrap_or(0)
    }

    /// n_y
    pub fn output_lag(&self) -> usize {
        self.lag(0)
    }

    /// n_u over all inputs
    pub fn input_lag(&self) -> usize {
        self.per_variable.iter().skip(1).copied().max().unwrap_or(0)
    }

    pub fn max_lag(&self) -> usize {
        self.per_variable.iter().copied().max().unwrap_or(0)
    }

    pub fn merge(&mut self, other: &LagProfile) {
        if self.per_variable.len() < other.per_variable.len() {
            self.per_variable.resize(other.per_variable.len(), 0);
        }
        for (a, b) in self.per_variable.iter_mut().zip(&other.per_variable) {
            *a = (*a).max(*b);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Name(String),
    Number(f64),
    Open,
    Close,
    Comma,
}

struct Parser<'a> {
    pset: &'a PrimitiveSet,
    tokens: Vec<(usize, Token)>,
    pos: usize,
    len: usize,
}

impl<'a> Parser<'a> {
    fn new(pset: &'a PrimitiveSet, text: &str) -> Self {
        Self {
            pset,
            tokens: Vec::new(),
            pos: 0,
            len: text.len(),
        }
        .tokenize(text)
    }

    fn tokenize(mut self, text: &str) -> Self {
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            let start = i;
            match c {
                b' ' | b'\t' | b'\n' | b'\r' => {
                    i += 1;
                    continue;
                }
                b'(' => self.tokens.push((start, Token::Open)),
                b')' => self.tokens.push((start, Token::Close)),
                b',' => self.tokens.push((start, Token::Comma)),
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    while i + 1 < bytes.len()
                        && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_')
                    {
                        i += 1;
                    }
                    self.tokens
                        .push((start, Token::Name(text[start..=i].to_string())));
                }
                c if c.is_ascii_digit() || c == b'-' || c == b'+' || c == b'.' => {
                    while i + 1 < bytes.len()
                        && (bytes[i + 1].is_ascii_alphanumeric()
                            || bytes[i + 1] == b'.'
                            || ((bytes[i + 1] == b'-' || bytes[i + 1] == b'+')
                                && matches!(bytes[i], b'e' | b'E')))
                    {
                        i += 1;
                    }
                    let lit = &text[start..=i];
                    match lit.parse::<f64>() {
                        Ok(x) if x.is_finite() => self.tokens.push((start, Token::Number(x))),
                        _ => self.tokens.push((start, Token::Name(lit.to_string()))),
                    }
                }
                _ => {
                    // unknown character: surface as a symbol error
                    let ch = text[start..].chars().next().unwrap();
                    self.tokens.push((start, Token::Name(ch.to_string())));
                    i += ch.len_utf8();
                    continue;
                }
            }
            i += 1;
        }
        self
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.len, |(p, _)| *p)
    }

    fn parse(mut self) -> Result<ExprTree> {
        let mut nodes = Vec::new();
        self.expr(&mut nodes)?;
        if self.pos != self.tokens.len() {
            return Err(Error::Syntax {
                pos: self.offset(),
                msg: "unexpected trailing input".into(),
            });
        }
        Ok(ExprTree { nodes })
    }

    fn expr(&mut self, nodes: &mut Vec<Node>) -> Result<()> {
        let pos = self.offset();
        let tok = self.tokens.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        let name = match tok {
            Some(Token::Number(x)) => {
                nodes.push(Node::Const(x));
                return Ok(());
            }
            Some(Token::Name(name)) => name,
            _ => {
                return Err(Error::Syntax {
                    pos,
                    msg: "expected a symbol".into(),
                })
            }
        };
        let node = self.resolve(&name, pos)?;
        nodes.push(node);

        let mut found = 0;
        if self.peek() == Some(&Token::Open) {
            self.pos += 1;
            loop {
                self.expr(nodes)?;
                found += 1;
                match self.peek() {
                    Some(Token::Comma) => self.pos += 1,
                    Some(Token::Close) => {
                        self.pos += 1;
                        break;
                    }
                    _ => {
                        return Err(Error::Syntax {
                            pos: self.offset(),
                            msg: "unbalanced parentheses".into(),
                        })
                    }
                }
            }
        }
        if found != node.arity() {
            return Err(Error::ArityMismatch {
                name,
                expected: node.arity(),
                found,
            });
        }
        Ok(())
    }

    fn resolve(&self, name: &str, pos: usize) -> Result<Node> {
        let p = self.pset;
        if let Some(i) = p.variables.iter().position(|v| v == name) {
            return Ok(Node::Var(i as u16));
        }
        if let Some(i) = p.functions.iter().position(|f| f.name == name) {
            return Ok(Node::Func {
                id: i as u16,
                arity: p.functions[i].arity as u8,
            });
        }
        if let Some(i) = p.constants.iter().position(|(c, _)| c == name) {
            return Ok(Node::Named(i as u16));
        }
        match shift_amount(name) {
            Some(d) if d <= p.max_delay => Ok(Node::Shift(d as u16)),
            _ => Err(Error::UnknownSymbol {
                symbol: name.into(),
                pos,
            }),
        }
    }
}
