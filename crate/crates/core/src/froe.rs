//! Forward regression orthogonal estimator (FROE) with the error reduction
//! ratio (ERR) over an enumerated polynomial candidate set.

use crate::error::{Error, Result};
use crate::model::{build_regressors, Dataset, Model};
use crate::primitives::{ExprTree, Node, PrimitiveSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FroeConfig {
    /// Maximum polynomial degree.
    pub degree: usize,
    /// Maximum output lag of the candidates.
    pub ny: usize,
    /// Maximum lag of every input in the candidates.
    pub nu: usize,
    pub max_terms: Option<usize>,
    /// Stop once the cumulative ERR reaches this value.
    pub rho: f64,
}

impl Default for FroeConfig {
    fn default() -> Self {
        Self {
            degree: 2,
            ny: 2,
            nu: 2,
            max_terms: None,
            rho: 0.9999,
        }
    }
}

impl FroeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.degree < 1 {
            return Err(Error::Config("FROE degree must be >= 1".into()));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::Config(format!(
                "rho must lie in (0, 1], got {}",
                self.rho
            )));
        }
        if self.max_terms == Some(0) {
            return Err(Error::Config("max_terms must be >= 1".into()));
        }
        Ok(())
    }
}

/// Tree reading `var` exactly `lag >= 1` samples back, built from the
/// largest available shift operators.
pub fn lagged_variable(pset: &PrimitiveSet, var: usize, lag: usize) -> Result<ExprTree> {
    assert!(lag >= 1);
    let mut tree = ExprTree::leaf(Node::Var(var as u16));
    let mut remaining = lag - 1;
    if remaining > 0 && pset.max_delay() == 0 {
        return Err(Error::Config(format!(
            "lag {lag} needs back-shift operators but max delay is 0"
        )));
    }
    while remaining > 0 {
        let d = remaining.min(pset.max_delay());
        tree = tree.shifted(d);
        remaining -= d;
    }
    Ok(tree)
}

fn product(pset: &PrimitiveSet, factors: &[&ExprTree]) -> ExprTree {
    let mul = pset
        .functions()
        .iter()
        .position(|f| f.name() == "mul")
        .expect("mul is always present");
    let (last, rest) = factors.split_last().expect("at least one factor");
    let mut nodes = Vec::new();
    for f in rest {
        nodes.push(Node::Func {
            id: mul as u16,
            arity: 2,
        });
        nodes.extend_from_slice(f.nodes());
    }
    nodes.extend_from_slice(last.nodes());
    ExprTree::from_nodes(nodes).expect("well-formed product")
}

/// All monomials of degree `1..=degree` over `y[k-1..k-ny]` and
/// `u_j[k-1..k-nu]`, each listed once. Ordered by degree, then
/// lexicographically over the base terms (outputs first).
pub fn enumerate_candidates(pset: &PrimitiveSet, cfg: &FroeConfig) -> Result<Vec<ExprTree>> {
    cfg.validate()?;
    let mut base = Vec::new();
    for lag in 1..=cfg.ny {
        base.push(lagged_variable(pset, 0, lag)?);
    }
    for var in 1..pset.num_variables() {
        for lag in 1..=cfg.nu {
            base.push(lagged_variable(pset, var, lag)?);
        }
    }
    let mut out = Vec::new();
    if base.is_empty() {
        return Ok(out);
    }
    for degree in 1..=cfg.degree {
        // non-decreasing index tuples = multisets of size `degree`
        let mut idx = vec![0usize; degree];
        loop {
            let factors: Vec<&ExprTree> = idx.iter().map(|&i| &base[i]).collect();
            out.push(product(pset, &factors));
            let Some(pos) = (0..degree).rev().find(|&p| idx[p] + 1 < base.len()) else {
                break;
            };
            let v = idx[pos] + 1;
            idx[pos..].iter_mut().for_each(|x| *x = v);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectedTerm {
    /// Index into the candidate list.
    pub candidate: usize,
    pub tree: ExprTree,
    pub err: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrReport {
    pub terms: Vec<SelectedTerm>,
    pub theta: Vec<f64>,
    /// First regressor row (the candidate set's maximum lag).
    pub start: usize,
}

impl ErrReport {
    pub fn cumulative_err(&self) -> f64 {
        self.terms.last().map_or(0.0, |t| t.cumulative)
    }

    /// The selected terms as a model carrying the estimated parameters.
    pub fn to_model(&self, pset: &PrimitiveSet) -> Result<Model> {
        let mut model = Model::new(
            self.terms.iter().map(|t| t.tree.clone()).collect(),
            pset.num_variables(),
        )?;
        model.theta = Some(self.theta.clone());
        Ok(model)
    }

    /// Table of term, ERR, cumulative ERR and parameter.
    pub fn render(&self, pset: &PrimitiveSet) -> String {
        let rows: Vec<(String, f64, f64, f64)> = self
            .terms
            .iter()
            .zip(&self.theta)
            .map(|(t, th)| (pset.print(&t.tree), t.err, t.cumulative, *th))
            .collect();
        let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(4).max(4);
        let mut s = format!(
            "{:<width$}  {:>12}  {:>12}  {:>14}\n",
            "term", "ERR", "cum. ERR", "theta"
        );
        for (term, err, cum, th) in rows {
            s.push_str(&format!(
                "{term:<width$}  {err:>12.6e}  {cum:>12.8}  {th:>14.6e}\n"
            ));
        }
        s
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Candidates whose orthogonalized energy drops below this fraction of
/// their original energy are considered spanned by the selection.
const ZERO_TOL: f64 = 1e-20;

/// Greedy forward selection by ERR with modified Gram-Schmidt.
///
/// Ties in ERR go to the lowest candidate index. Selection stops at
/// `max_terms`, once the cumulative ERR reaches `rho`, or when every
/// remaining candidate is numerically spanned.
pub fn froe(
    pset: &PrimitiveSet,
    data: &Dataset,
    candidates: &[ExprTree],
    cfg: &FroeConfig,
) -> Result<ErrReport> {
    cfg.validate()?;
    if candidates.is_empty() {
        return Err(Error::Config("FROE needs at least one candidate".into()));
    }
    let all = Model::new(candidates.to_vec(), pset.num_variables())?;
    let reg = build_regressors(&all.compile(pset), data)?;
    let y = &reg.target;
    let yy = dot(y, y);
    let mut report = ErrReport {
        terms: Vec::new(),
        theta: Vec::new(),
        start: reg.start,
    };
    if yy == 0.0 {
        return Ok(report);
    }

    let original: Vec<f64> = reg.columns.iter().map(|c| dot(c, c)).collect();
    let mut w = reg.columns.clone();
    let mut alive: Vec<bool> = original.iter().map(|&e| e > 0.0).collect();
    // coefficients of each candidate against the selected orthogonal basis
    let mut coef: Vec<Vec<f64>> = vec![Vec::new(); candidates.len()];
    let mut selected: Vec<usize> = Vec::new();
    let mut g = Vec::new();
    let limit = cfg.max_terms.unwrap_or(usize::MAX).min(reg.rows());
    let mut cumulative = 0.0;

    while selected.len() < limit {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..candidates.len() {
            if !alive[i] {
                continue;
            }
            let ww = dot(&w[i], &w[i]);
            if ww <= ZERO_TOL * original[i] {
                alive[i] = false;
                continue;
            }
            let wy = dot(&w[i], y);
            let err = (wy * wy) / (ww * yy);
            if best.is_none_or(|(_, b)| err > b) {
                best = Some((i, err));
            }
        }
        let Some((s, err)) = best else { break };
        alive[s] = false;
        let ws = w[s].clone();
        let wsws = dot(&ws, &ws);
        g.push(dot(&ws, y) / wsws);
        cumulative += err;
        report.terms.push(SelectedTerm {
            candidate: s,
            tree: candidates[s].clone(),
            err,
            cumulative,
        });
        selected.push(s);

        for i in 0..candidates.len() {
            if !alive[i] {
                continue;
            }
            let a = dot(&ws, &w[i]) / wsws;
            for (wi, wsi) in w[i].iter_mut().zip(&ws) {
                *wi -= a * wsi;
            }
            coef[i].push(a);
        }
        if cumulative >= cfg.rho {
            break;
        }
    }

    // back substitution through the unit upper-triangular factor
    let n = selected.len();
    let mut theta = vec![0.0; n];
    for j in (0..n).rev() {
        let mut v = g[j];
        for t in j + 1..n {
            v -= coef[selected[t]][j] * theta[t];
        }
        theta[j] = v;
    }
    report.theta = theta;
    Ok(report)
}
