//! Initialization, selection, crossover and mutation operators.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::primitives::{ExprTree, PrimitiveSet};

/// Subtree exchanges that break the height limit are retried this many
/// times before the parents are returned unchanged.
pub const HEIGHT_RETRIES: usize = 3;

/// A fresh individual with a uniform number of genes in `1..=max_terms`.
pub fn random_individual<R: Rng + ?Sized>(
    pset: &PrimitiveSet,
    max_height: usize,
    max_terms: usize,
    rng: &mut R,
) -> Model {
    let count = rng.random_range(1..=max_terms.max(1));
    let genes = (0..count)
        .map(|_| pset.random_tree(max_height, rng))
        .collect();
    Model::new(genes, pset.num_variables()).expect("at least one gene")
}

pub fn init_population<R: Rng + ?Sized>(
    pset: &PrimitiveSet,
    pop_size: usize,
    max_height: usize,
    max_terms: usize,
    rng: &mut R,
) -> Vec<Model> {
    (0..pop_size)
        .map(|_| random_individual(pset, max_height, max_terms, rng))
        .collect()
}

/// Index of the tournament winner among `k` uniform draws with replacement.
/// `better(a, b)` must be a strict ordering; ties keep the earlier draw.
pub fn tournament<R, F>(population: &[Model], k: usize, better: F, rng: &mut R) -> Result<usize>
where
    R: Rng + ?Sized,
    F: Fn(usize, usize) -> bool,
{
    assert!(!population.is_empty(), "tournament on empty population");
    let mut best: Option<usize> = None;
    for _ in 0..k.max(1) {
        let i = rng.random_range(0..population.len());
        if population[i].fitness.is_none() {
            return Err(Error::Unevaluated(i));
        }
        match best {
            Some(b) if !better(i, b) => {}
            _ => best = Some(i),
        }
    }
    Ok(best.expect("k >= 1"))
}

/// One-point gene-list crossover with explicit cut points: offspring are
/// `a[..cut_a] ++ b[cut_b..]` and `b[..cut_b] ++ a[cut_a..]`, truncated to
/// `max_terms`.
pub fn swap_tails(
    a: &Model,
    b: &Model,
    cut_a: usize,
    cut_b: usize,
    max_terms: usize,
) -> (Model, Model) {
    let (ga, gb) = (a.genes(), b.genes());
    let mut first: Vec<ExprTree> = ga[..cut_a].iter().chain(&gb[cut_b..]).cloned().collect();
    let mut second: Vec<ExprTree> = gb[..cut_b].iter().chain(&ga[cut_a..]).cloned().collect();
    first.truncate(max_terms);
    second.truncate(max_terms);
    let mut x = a.clone();
    let mut y = b.clone();
    x.set_genes(first);
    y.set_genes(second);
    (x, y)
}

/// High-level crossover: exchanges whole genes. Each parent's cut is drawn
/// from `0..len`, so both tails and hence both offspring are non-empty.
pub fn crossover_high_level<R: Rng + ?Sized>(
    a: &Model,
    b: &Model,
    max_terms: usize,
    rng: &mut R,
) -> (Model, Model) {
    let cut_a = rng.random_range(0..a.term_count());
    let cut_b = rng.random_range(0..b.term_count());
    swap_tails(a, b, cut_a, cut_b, max_terms)
}

/// Low-level crossover: exchanges subtrees between one gene of each parent.
/// Returns clones of the parents if no exchange within `max_height` is found.
pub fn crossover_low_level<R: Rng + ?Sized>(
    a: &Model,
    b: &Model,
    max_height: usize,
    rng: &mut R,
) -> (Model, Model) {
    for _ in 0..=HEIGHT_RETRIES {
        let gi = rng.random_range(0..a.term_count());
        let gj = rng.random_range(0..b.term_count());
        let (ta, tb) = (&a.genes()[gi], &b.genes()[gj]);
        let ni = rng.random_range(0..ta.len());
        let nj = rng.random_range(0..tb.len());
        let new_a = ta.replace_subtree(ni, tb.subtree(nj));
        let new_b = tb.replace_subtree(nj, ta.subtree(ni));
        if new_a.height() > max_height || new_b.height() > max_height {
            continue;
        }
        let mut x = a.clone();
        let mut genes = a.genes().to_vec();
        genes[gi] = new_a;
        x.set_genes(genes);
        let mut y = b.clone();
        let mut genes = b.genes().to_vec();
        genes[gj] = new_b;
        y.set_genes(genes);
        return (x, y);
    }
    (a.clone(), b.clone())
}

/// Subtree mutation: one node of one gene is replaced by a fresh random
/// subtree small enough to keep the gene within `max_height`.
pub fn mutate_inner<R: Rng + ?Sized>(
    ind: &Model,
    pset: &PrimitiveSet,
    max_height: usize,
    rng: &mut R,
) -> Model {
    let gi = rng.random_range(0..ind.term_count());
    let gene = &ind.genes()[gi];
    let node = rng.random_range(0..gene.len());
    let depth = gene.depths()[node];
    let fresh = pset.random_tree(max_height.saturating_sub(depth), rng);
    let mut genes = ind.genes().to_vec();
    genes[gi] = gene.replace_subtree(node, fresh.nodes());
    let mut out = ind.clone();
    out.set_genes(genes);
    out
}

/// Gene replacement: one gene is swapped for an entirely new random tree.
pub fn mutate_outer<R: Rng + ?Sized>(
    ind: &Model,
    pset: &PrimitiveSet,
    max_height: usize,
    rng: &mut R,
) -> Model {
    let gi = rng.random_range(0..ind.term_count());
    let mut genes = ind.genes().to_vec();
    genes[gi] = pset.random_tree(max_height, rng);
    let mut out = ind.clone();
    out.set_genes(genes);
    out
}

/// Applies inner or outer mutation with equal probability.
pub fn mutate<R: Rng + ?Sized>(
    ind: &Model,
    pset: &PrimitiveSet,
    max_height: usize,
    rng: &mut R,
) -> Model {
    if rng.random_bool(0.5) {
        mutate_inner(ind, pset, max_height, rng)
    } else {
        mutate_outer(ind, pset, max_height, rng)
    }
}
