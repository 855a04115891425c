//! Multi-gene models, datasets and regressor matrices.
//!
//! A model is the linear combination `sum_i theta_i * g_i` of its genes.
//! There is no implicit intercept: a constant term must be an explicit gene.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::evolve::Fitness;
use crate::primitives::{ExprTree, Function, LagProfile, Node, PrimitiveSet};

/// One output series and zero or more input series of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    u: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(y: Vec<f64>, u: Vec<Vec<f64>>) -> Result<Self> {
        for (i, s) in u.iter().enumerate() {
            if s.len() != y.len() {
                return Err(Error::LengthMismatch {
                    name: format!("input {i}"),
                    len: s.len(),
                    expected: y.len(),
                });
            }
        }
        Ok(Self { y, u })
    }

    pub fn siso(y: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        Self::new(y, vec![u])
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.u
    }

    pub fn num_inputs(&self) -> usize {
        self.u.len()
    }

    /// Series of variable `var`: 0 is the output, `i > 0` is input `i - 1`.
    pub fn series(&self, var: usize) -> &[f64] {
        if var == 0 {
            &self.y
        } else {
            &self.u[var - 1]
        }
    }

    pub(crate) fn check_against(&self, num_variables: usize) -> Result<()> {
        if self.u.len() + 1 != num_variables {
            return Err(Error::InputCountMismatch {
                expected: num_variables - 1,
                found: self.u.len(),
            });
        }
        Ok(())
    }
}

/// An ordered list of genes with optional parameters and fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    genes: Vec<ExprTree>,
    pub theta: Option<Vec<f64>>,
    pub fitness: Option<Fitness>,
    lag: LagProfile,
    num_variables: usize,
}

impl Model {
    pub fn new(genes: Vec<ExprTree>, num_variables: usize) -> Result<Self> {
        if genes.is_empty() {
            return Err(Error::EmptyModel);
        }
        let lag = lag_of(&genes, num_variables);
        Ok(Self {
            genes,
            theta: None,
            fitness: None,
            lag,
            num_variables,
        })
    }

    pub fn genes(&self) -> &[ExprTree] {
        &self.genes
    }

    pub fn term_count(&self) -> usize {
        self.genes.len()
    }

    pub fn lag(&self) -> &LagProfile {
        &self.lag
    }

    pub fn max_lag(&self) -> usize {
        self.lag.max_lag()
    }

    pub fn num_variables(&self) -> usize {
        self.num_variables
    }

    /// Replaces the gene list, clearing parameters and fitness.
    pub fn set_genes(&mut self, genes: Vec<ExprTree>) {
        assert!(!genes.is_empty(), "a model needs at least one gene");
        self.lag = lag_of(&genes, self.num_variables);
        self.genes = genes;
        self.invalidate();
    }

    pub fn invalidate(&mut self) {
        self.theta = None;
        self.fitness = None;
    }

    pub fn compile(&self, pset: &PrimitiveSet) -> CompiledModel {
        compile_model(self, pset)
    }

    pub fn terms(&self, pset: &PrimitiveSet) -> Vec<String> {
        self.genes.iter().map(|g| pset.print(g)).collect()
    }

    /// Expands the model into a polynomial over lagged variables, merging
    /// genes that reduce to the same monomial. `None` if any gene uses a
    /// non-polynomial function.
    pub fn polynomial(&self, pset: &PrimitiveSet, theta: &[f64]) -> Option<Polynomial> {
        let mut terms = BTreeMap::new();
        for (gene, &t) in self.genes.iter().zip(theta) {
            let (coef, mono) = Monomial::from_tree(gene, pset)?;
            *terms.entry(mono).or_insert(0.0) += coef * t;
        }
        Some(Polynomial { terms })
    }
}

fn lag_of(genes: &[ExprTree], num_variables: usize) -> LagProfile {
    let mut lag = LagProfile::new(vec![0; num_variables]);
    for g in genes {
        lag.merge(&g.lag_profile(num_variables));
    }
    lag
}

/// Parses each term and assembles a model.
pub fn create_model<S: AsRef<str>>(pset: &PrimitiveSet, terms: &[S]) -> Result<Model> {
    if terms.is_empty() {
        return Err(Error::EmptyModel);
    }
    let genes = terms
        .iter()
        .enumerate()
        .map(|(index, t)| {
            pset.parse(t.as_ref()).map_err(|e| Error::Term {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Model::new(genes, pset.num_variables())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Instr {
    Load { var: usize, lag: usize },
    Const(f64),
    Apply { func: usize, arity: usize },
}

/// Postfix programs for every gene, with back-shifts folded into leaf lags.
#[derive(Debug, Clone)]
pub struct CompiledModel {
    programs: Vec<Vec<Instr>>,
    functions: Vec<Function>,
    lag: LagProfile,
    num_variables: usize,
}

/// Compiles `model` against the functions of `pset`.
pub fn compile_model(model: &Model, pset: &PrimitiveSet) -> CompiledModel {
    let programs = model
        .genes
        .iter()
        .map(|g| {
            let mut prog = Vec::with_capacity(g.len());
            emit(g.nodes(), 0, 0, pset, &mut prog);
            prog
        })
        .collect();
    CompiledModel {
        programs,
        functions: pset.functions().to_vec(),
        lag: model.lag.clone(),
        num_variables: model.num_variables,
    }
}

fn emit(
    nodes: &[Node],
    at: usize,
    delay: usize,
    pset: &PrimitiveSet,
    out: &mut Vec<Instr>,
) -> usize {
    match nodes[at] {
        Node::Var(v) => {
            out.push(Instr::Load {
                var: v as usize,
                lag: 1 + delay,
            });
            at + 1
        }
        Node::Const(x) => {
            out.push(Instr::Const(x));
            at + 1
        }
        Node::Named(c) => {
            out.push(Instr::Const(pset.constants()[c as usize].1));
            at + 1
        }
        Node::Shift(d) => emit(nodes, at + 1, delay + d as usize, pset, out),
        Node::Func { id, arity } => {
            let mut next = at + 1;
            for _ in 0..arity {
                next = emit(nodes, next, delay, pset, out);
            }
            out.push(Instr::Apply {
                func: id as usize,
                arity: arity as usize,
            });
            next
        }
    }
}

impl CompiledModel {
    pub fn term_count(&self) -> usize {
        self.programs.len()
    }

    pub fn lag(&self) -> &LagProfile {
        &self.lag
    }

    pub fn max_lag(&self) -> usize {
        self.lag.max_lag()
    }

    pub fn num_variables(&self) -> usize {
        self.num_variables
    }

    /// Evaluates every gene at one time step. `sample(var, lag)` returns the
    /// value of `var` `lag` samples before the current step.
    pub fn eval_genes<F>(&self, sample: F, out: &mut [f64], stack: &mut Vec<f64>)
    where
        F: Fn(usize, usize) -> f64,
    {
        for (prog, slot) in self.programs.iter().zip(out.iter_mut()) {
            stack.clear();
            for instr in prog {
                match *instr {
                    Instr::Load { var, lag } => stack.push(sample(var, lag)),
                    Instr::Const(x) => stack.push(x),
                    Instr::Apply { func, arity } => {
                        let base = stack.len() - arity;
                        let v = self.functions[func].apply(&stack[base..]);
                        stack.truncate(base);
                        stack.push(v);
                    }
                }
            }
            *slot = stack[0];
        }
    }

    /// Values of gene `gene` for every k in `start..end`, reading measured data.
    pub fn eval_column(&self, gene: usize, data: &Dataset, start: usize, end: usize) -> Vec<f64> {
        let rows = end - start;
        let mut stack: Vec<Vec<f64>> = Vec::new();
        let mut args = Vec::new();
        for instr in &self.programs[gene] {
            match *instr {
                Instr::Load { var, lag } => {
                    let s = data.series(var);
                    stack.push(s[start - lag..end - lag].to_vec());
                }
                Instr::Const(x) => stack.push(vec![x; rows]),
                Instr::Apply { func, arity } => {
                    let base = stack.len() - arity;
                    let f = &self.functions[func];
                    let mut result = vec![0.0; rows];
                    for (r, slot) in result.iter_mut().enumerate() {
                        args.clear();
                        args.extend(stack[base..].iter().map(|c| c[r]));
                        *slot = f.apply(&args);
                    }
                    stack.truncate(base);
                    stack.push(result);
                }
            }
        }
        stack.pop().expect("non-empty program")
    }
}

/// Gene values over rows `k = start..n` plus the matching target `y[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorMatrix {
    pub start: usize,
    /// Column-major: one vector per gene.
    pub columns: Vec<Vec<f64>>,
    pub target: Vec<f64>,
}

impl RegressorMatrix {
    pub fn rows(&self) -> usize {
        self.target.len()
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[r]).collect()
    }

    /// `Phi * theta`
    pub fn predict(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows()];
        for (col, &t) in self.columns.iter().zip(theta) {
            for (o, &x) in out.iter_mut().zip(col) {
                *o += t * x;
            }
        }
        out
    }
}

/// Builds the regressor matrix over rows `k = L..N` where `L` is the
/// model's maximum lag.
pub fn build_regressors(model: &CompiledModel, data: &Dataset) -> Result<RegressorMatrix> {
    build_regressors_from(model, data, model.max_lag())
}

/// As [`build_regressors`], but starting at row `start >= L`.
pub fn build_regressors_from(
    model: &CompiledModel,
    data: &Dataset,
    start: usize,
) -> Result<RegressorMatrix> {
    data.check_against(model.num_variables)?;
    let n = data.len();
    let start = start.max(model.max_lag());
    if n <= start {
        return Err(Error::SeriesTooShort {
            len: n,
            required: start,
        });
    }
    let columns = (0..model.term_count())
        .map(|g| model.eval_column(g, data, start, n))
        .collect();
    Ok(RegressorMatrix {
        start,
        columns,
        target: data.y()[start..].to_vec(),
    })
}

/// A product of lagged variables, keyed by `(variable, lag)` with powers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub BTreeMap<(usize, usize), u32>);

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    /// Normalizes a gene built from `mul`, shifts, variables and constants.
    /// Returns the constant factor and the monomial.
    pub fn from_tree(tree: &ExprTree, pset: &PrimitiveSet) -> Option<(f64, Monomial)> {
        let lags = tree.leaf_lags();
        let mut coef = 1.0;
        let mut powers = BTreeMap::new();
        for (node, lag) in tree.nodes().iter().zip(lags) {
            match *node {
                Node::Var(v) => *powers.entry((v as usize, lag?)).or_insert(0) += 1,
                Node::Const(x) => coef *= x,
                Node::Named(c) => coef *= pset.constants()[c as usize].1,
                Node::Shift(_) => {}
                Node::Func { id, .. } => {
                    if pset.function(id as usize).name() != "mul" {
                        return None;
                    }
                }
            }
        }
        Some((coef, Monomial(powers)))
    }

    pub fn display<'a>(&'a self, pset: &'a PrimitiveSet) -> impl fmt::Display + 'a {
        MonomialDisplay { mono: self, pset }
    }
}

struct MonomialDisplay<'a> {
    mono: &'a Monomial,
    pset: &'a PrimitiveSet,
}

impl fmt::Display for MonomialDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mono.0.is_empty() {
            return write!(f, "1");
        }
        for (i, ((var, lag), pow)) in self.mono.0.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "{}[k-{lag}]", self.pset.variables()[*var])?;
            if *pow > 1 {
                write!(f, "^{pow}")?;
            }
        }
        Ok(())
    }
}

/// A model expanded into monomials with merged coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    /// Monomials whose coefficient magnitude exceeds `tol`.
    pub fn support(&self, tol: f64) -> Vec<&Monomial> {
        self.terms
            .iter()
            .filter(|(_, c)| c.abs() > tol)
            .map(|(m, _)| m)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::make_pset;

    fn pset() -> PrimitiveSet {
        make_pset(1, 2, &[])
            .unwrap()
            .rename_arguments(&[("ARG0", "y1"), ("ARG1", "u1")])
            .unwrap()
    }

    #[test]
    fn create_piroddi_model() {
        let m = create_model(&pset(), &["q1(y1)", "u1", "mul(q1(y1),u1)"]).unwrap();
        assert_eq!(m.term_count(), 3);
        assert_eq!(m.lag().output_lag(), 2);
        assert_eq!(m.lag().input_lag(), 1);
        assert!(m.theta.is_none());

        let m = create_model(&pset(), &["y1"]).unwrap();
        assert_eq!(m.term_count(), 1);
        assert_eq!((m.lag().output_lag(), m.lag().input_lag()), (1, 0));
    }

    #[test]
    fn create_model_errors() {
        let err = create_model(&pset(), &["y1", "q9(y1)"]).unwrap_err();
        match err {
            Error::Term { index, source } => {
                assert_eq!(index, 1);
                assert!(matches!(*source, Error::UnknownSymbol { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            create_model::<&str>(&pset(), &[]).unwrap_err(),
            Error::EmptyModel
        );
    }

    #[test]
    fn compiled_evaluation() {
        let p = pset();
        let m = create_model(&p, &["u1", "mul(q1(y1),u1)"]).unwrap();
        let c = m.compile(&p);
        // y[k-2] = 2, u[k-1] = 3
        let sample = |var: usize, lag: usize| match (var, lag) {
            (0, 2) => 2.0,
            (1, 1) => 3.0,
            _ => f64::NAN,
        };
        let mut out = [0.0; 2];
        let mut stack = Vec::new();
        c.eval_genes(sample, &mut out, &mut stack);
        assert_eq!(out, [3.0, 6.0]);

        let c2 = m.compile(&p);
        let mut out2 = [0.0; 2];
        c2.eval_genes(sample, &mut out2, &mut stack);
        assert_eq!(out, out2);

        let single = create_model(&p, &["u1"]).unwrap().compile(&p);
        let mut one = [0.0];
        single.eval_genes(|_, _| 0.5, &mut one, &mut stack);
        assert_eq!(one, [0.5]);
    }

    #[test]
    fn regressors_by_hand() {
        let p = make_pset(1, 1, &[])
            .unwrap()
            .rename_arguments(&[("ARG0", "y1")])
            .unwrap();
        let m = create_model(&p, &["y1"]).unwrap().compile(&p);
        let data = Dataset::new(vec![1.0, 2.0, 3.0], vec![]).unwrap();
        let r = build_regressors(&m, &data).unwrap();
        assert_eq!(r.columns, vec![vec![1.0, 2.0]]);
        assert_eq!(r.target, vec![2.0, 3.0]);
    }

    #[test]
    fn regressor_shape_and_short_series() {
        let p = pset();
        let m = create_model(&p, &["q1(y1)", "u1", "mul(q1(y1),u1)"])
            .unwrap()
            .compile(&p);
        let n = 500;
        let data = Dataset::siso(
            (0..n).map(|i| (i as f64).sin()).collect(),
            (0..n).map(|i| (i as f64).cos()).collect(),
        )
        .unwrap();
        let r = build_regressors(&m, &data).unwrap();
        assert_eq!((r.rows(), r.cols()), (498, 3));
        assert_eq!(r.columns[2][0], data.y()[0] * data.u[0][1]);

        let short = Dataset::siso(vec![0.0; 2], vec![0.0; 2]).unwrap();
        assert!(matches!(
            build_regressors(&m, &short),
            Err(Error::SeriesTooShort {
                len: 2,
                required: 2
            })
        ));
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::siso(vec![0.0; 3], vec![0.0; 2]).is_err());
        let p = pset();
        let m = create_model(&p, &["y1"]).unwrap().compile(&p);
        let no_inputs = Dataset::new(vec![0.0; 5], vec![]).unwrap();
        assert!(matches!(
            build_regressors(&m, &no_inputs),
            Err(Error::InputCountMismatch { .. })
        ));
    }

    #[test]
    fn monomial_normalization() {
        let p = pset();
        let a = p.parse("mul(q1(y1),u1)").unwrap();
        let b = p.parse("mul(u1,q1(y1))").unwrap();
        let (ca, ma) = Monomial::from_tree(&a, &p).unwrap();
        let (cb, mb) = Monomial::from_tree(&b, &p).unwrap();
        assert_eq!((ca, &ma), (cb, &mb));
        assert_eq!(ma.degree(), 2);
        assert_eq!(ma.display(&p).to_string(), "y1[k-2]*u1[k-1]");

        let m = create_model(&p, &["u1", "mul(2.0,u1)", "y1"]).unwrap();
        let poly = m.polynomial(&p, &[1.0, 0.5, 0.0]).unwrap();
        assert_eq!(poly.terms.len(), 2);
        assert_eq!(poly.support(1e-12).len(), 1);
    }
}
