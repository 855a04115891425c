//! Oracles and property checks shared by the integration and acceptance
//! suites. Nothing here calls the code path it checks.

#![allow(dead_code)]

use std::collections::BTreeSet;

use mggp::evolve::nsga2;
use mggp::froe::{enumerate_candidates, froe, FroeConfig};
use mggp::linalg::lstsq;
use mggp::model::{build_regressors, create_model, Dataset, Model, Monomial};
use mggp::primitives::{make_pset, ExprTree, PrimitiveSet};
use mggp::simulate::predict_free_run;
use mggp::systems::{generate, GenerateConfig};
use mggp::{ls, Estimator, Evaluator, EvolveConfig, Evolver, Objective};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TRUE_THETA: [f64; 3] = [0.75, 0.25, -0.20];

pub fn pset() -> PrimitiveSet {
    make_pset(1, 2, &[])
        .unwrap()
        .rename_arguments(&[("ARG0", "y1"), ("ARG1", "u1")])
        .unwrap()
}

/// Direct recursion of `y[k] = t0 y[k-2] + t1 u[k-1] + t2 (y[k-2] u[k-1])`.
pub fn piroddi_oracle(theta: &[f64; 3], u: &[f64], y0: [f64; 2], len: usize) -> Vec<f64> {
    let mut y = vec![0.0; len];
    y[..2].copy_from_slice(&y0);
    for k in 2..len {
        y[k] = theta[0] * y[k - 2] + theta[1] * u[k - 1] + theta[2] * (y[k - 2] * u[k - 1]);
    }
    y
}

pub fn noiseless_piroddi(n: usize, seed: u64) -> Dataset {
    generate(
        "piroddi",
        &GenerateConfig {
            samples: n,
            noise_std: 0.0,
            ma: 0.0,
            seed,
        },
    )
    .unwrap()
}

/// The true monomials `y[k-2]`, `u[k-1]`, `y[k-2] u[k-1]`.
pub fn true_monomials() -> BTreeSet<Monomial> {
    let p = pset();
    ["q1(y1)", "u1", "mul(q1(y1),u1)"]
        .iter()
        .map(|s| Monomial::from_tree(&p.parse(s).unwrap(), &p).unwrap().1)
        .collect()
}

/// Coefficients of the model after merging genes into monomials and
/// dropping those with negligible weight. `None` for non-polynomial genes.
pub fn normalized_terms(
    p: &PrimitiveSet,
    model: &Model,
    theta: &[f64],
) -> Option<Vec<(Monomial, f64)>> {
    let poly = model.polynomial(p, theta)?;
    Some(
        poly.terms
            .into_iter()
            .filter(|(_, c)| c.abs() > 1e-8)
            .collect(),
    )
}

/// Outcome of a structure-recovery check on one identified model.
pub struct Recovery {
    pub mse: f64,
    pub structure_ok: bool,
    pub max_theta_error: f64,
}

pub fn check_recovery(p: &PrimitiveSet, data: &Dataset, model: &Model) -> Recovery {
    let ev = Evaluator::new(p, data, Objective::Osa, Estimator::Ls);
    let Ok((theta, values)) = ev.fit(model) else {
        return Recovery {
            mse: f64::INFINITY,
            structure_ok: false,
            max_theta_error: f64::INFINITY,
        };
    };
    let truth = true_monomials();
    let terms = normalized_terms(p, model, &theta).unwrap_or_default();
    let found: BTreeSet<Monomial> = terms.iter().map(|(m, _)| m.clone()).collect();
    let structure_ok = found == truth;
    let mut max_theta_error = f64::INFINITY;
    if structure_ok {
        let expected = ["q1(y1)", "u1", "mul(q1(y1),u1)"]
            .iter()
            .zip(TRUE_THETA)
            .map(|(s, t)| (Monomial::from_tree(&p.parse(s).unwrap(), p).unwrap().1, t))
            .collect::<Vec<_>>();
        max_theta_error = expected
            .iter()
            .map(|(m, t)| {
                let got = terms.iter().find(|(x, _)| x == m).map(|(_, c)| *c).unwrap();
                (got - t).abs()
            })
            .fold(0.0, f64::max);
    }
    Recovery {
        mse: values[0],
        structure_ok,
        max_theta_error,
    }
}

/// Exhaustive LS over every subset of `size` candidates; returns the
/// candidate indices with the smallest residual sum of squares.
pub fn best_subset(
    p: &PrimitiveSet,
    data: &Dataset,
    candidates: &[ExprTree],
    size: usize,
    start: usize,
) -> Vec<usize> {
    let all = Model::new(candidates.to_vec(), p.num_variables()).unwrap();
    let reg = mggp::model::build_regressors_from(&all.compile(p), data, start).unwrap();
    let mut best = (f64::INFINITY, Vec::new());
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        let cols: Vec<Vec<f64>> = idx.iter().map(|&i| reg.columns[i].clone()).collect();
        if let Ok(theta) = lstsq(&cols, &reg.target) {
            let rss: f64 = (0..reg.rows())
                .map(|r| {
                    let fit: f64 = cols.iter().zip(&theta).map(|(c, t)| c[r] * t).sum();
                    (reg.target[r] - fit).powi(2)
                })
                .sum();
            if rss < best.0 {
                best = (rss, idx.clone());
            }
        }
        // next combination
        let n = candidates.len();
        let Some(pos) = (0..size).rev().find(|&i| idx[i] < n - size + i) else {
            break;
        };
        idx[pos] += 1;
        for j in pos + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
    best.1
}

/// O(n^2 m) brute-force front assignment: repeatedly peel off the points
/// not dominated by any remaining point.
pub fn brute_force_fronts(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let dominates = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| x > y)
    };
    let mut remaining: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| dominates(&points[j], &points[i])))
            .collect();
        remaining.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(
            proptest::test_runner::RngAlgorithm::ChaCha,
        ),
    )
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

fn rich_pset() -> PrimitiveSet {
    make_pset(2, 3, &[("tanh", 1), ("add", 2)]).unwrap()
}

/// parse(print(t)) == t for random trees.
pub fn prop_round_trip() -> Result<(), String> {
    let p = rich_pset();
    run(256, (any::<u64>(), 0usize..5), |(seed, h)| {
        let t = p.random_tree(h, &mut ChaCha8Rng::seed_from_u64(seed));
        let back = p
            .parse(&p.print(&t))
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(back, t);
        Ok(())
    })
}

/// Wrapping in qd adds d to every variable's lag; height grows by one.
pub fn prop_lag_additivity() -> Result<(), String> {
    let p = rich_pset();
    run(256, (any::<u64>(), 0usize..4, 1usize..3), |(seed, h, d)| {
        let t = p.random_tree(h, &mut ChaCha8Rng::seed_from_u64(seed));
        let before = t.lag_profile(3);
        let shifted = t.shifted(d);
        let after = shifted.lag_profile(3);
        for v in 0..3 {
            let expected = if before.lag(v) == 0 {
                0
            } else {
                before.lag(v) + d
            };
            prop_assert_eq!(after.lag(v), expected);
        }
        prop_assert_eq!(shifted.height(), t.height() + 1);
        Ok(())
    })
}

/// Every operator keeps heights within the limit and gene counts in range;
/// crossover conserves genes, mutation preserves gene count.
pub fn prop_operator_closure() -> Result<(), String> {
    use mggp::evolve::operators::*;
    let p = rich_pset();
    run(
        256,
        (any::<u64>(), 0usize..5, 1usize..6),
        |(seed, max_h, max_t)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_individual(&p, max_h, max_t, &mut rng);
            let b = random_individual(&p, max_h, max_t, &mut rng);
            let ok = |m: &Model| {
                (1..=max_t).contains(&m.term_count())
                    && m.genes().iter().all(|g| g.height() <= max_h)
            };
            prop_assert!(ok(&a) && ok(&b));
            let (x, y) = crossover_high_level(&a, &b, max_t, &mut rng);
            prop_assert!(ok(&x) && ok(&y));
            if a.term_count() + b.term_count() <= max_t {
                prop_assert_eq!(
                    x.term_count() + y.term_count(),
                    a.term_count() + b.term_count()
                );
            }
            let (x, y) = crossover_low_level(&a, &b, max_h, &mut rng);
            prop_assert!(ok(&x) && ok(&y));
            prop_assert_eq!(
                (x.term_count(), y.term_count()),
                (a.term_count(), b.term_count())
            );
            let m = mutate(&a, &p, max_h, &mut rng);
            prop_assert!(ok(&m));
            prop_assert_eq!(m.term_count(), a.term_count());
            // closure over the primitive set
            for g in x.genes().iter().chain(y.genes()).chain(m.genes()) {
                prop_assert!(p.parse(&p.print(g)).is_ok());
            }
            Ok(())
        },
    )
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize) -> Dataset {
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Dataset::siso(y, u).unwrap()
}

/// Regressor columns are orthogonal to the LS residual.
pub fn prop_ls_orthogonality() -> Result<(), String> {
    let p = pset();
    run(128, (any::<u64>(), 1usize..5), |(seed, genes)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_dataset(&mut rng, 200);
        let trees: Vec<ExprTree> = (0..genes).map(|_| p.random_tree(3, &mut rng)).collect();
        let model = Model::new(trees, 2).unwrap().compile(&p);
        let reg = build_regressors(&model, &data).unwrap();
        let Ok(theta) = ls(&model, &data) else {
            return Ok(());
        };
        let fit = reg.predict(&theta);
        let resid: Vec<f64> = reg.target.iter().zip(&fit).map(|(a, b)| a - b).collect();
        let rn = resid.iter().map(|x| x * x).sum::<f64>().sqrt();
        for c in &reg.columns {
            let cn = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            let d: f64 = c.iter().zip(&resid).map(|(a, b)| a * b).sum();
            prop_assert!(
                d.abs() <= 1e-6 * cn * rn + 1e-300,
                "dot {} vs {}",
                d,
                cn * rn
            );
        }
        Ok(())
    })
}

/// LS recovers synthesis coefficients exactly.
pub fn prop_ls_exact_recovery() -> Result<(), String> {
    let p = pset();
    run(
        128,
        (any::<u64>(), prop::collection::vec(-2.0f64..2.0, 3)),
        |(seed, coefs)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = random_dataset(&mut rng, 120);
            let model = create_model(&p, &["y1", "mul(q1(y1),u1)", "q1(u1)"])
                .unwrap()
                .compile(&p);
            let reg = build_regressors(&model, &data).unwrap();
            let target = reg.predict(&coefs);
            let theta =
                lstsq(&reg.columns, &target).map_err(|e| TestCaseError::fail(e.to_string()))?;
            for (a, b) in theta.iter().zip(&coefs) {
                prop_assert!((a - b).abs() < 1e-8);
            }
            Ok(())
        },
    )
}

/// ERR values in [0, 1], cumulative non-decreasing and at most 1.
pub fn prop_err_bounds() -> Result<(), String> {
    let p = pset();
    run(64, any::<u64>(), |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_dataset(&mut rng, 150);
        let cfg = FroeConfig {
            degree: 2,
            ny: 2,
            nu: 2,
            max_terms: None,
            rho: 1.0,
        };
        let cands = enumerate_candidates(&p, &cfg).unwrap();
        let r = froe(&p, &data, &cands, &cfg).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let mut prev = 0.0;
        for t in &r.terms {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&t.err));
            prop_assert!(t.cumulative + 1e-15 >= prev);
            prop_assert!(t.cumulative <= 1.0 + 1e-9);
            prev = t.cumulative;
        }
        Ok(())
    })
}

/// Fast non-dominated sort equals the brute-force oracle.
pub fn prop_front_equality() -> Result<(), String> {
    let points = (1usize..=64, 2usize..4).prop_flat_map(|(n, m)| {
        prop::collection::vec(
            prop::collection::vec((0i32..8).prop_map(|v| v as f64), m),
            n,
        )
    });
    run(200, points, |pts| {
        let mut fast = nsga2::fast_non_dominated_sort(&pts);
        let mut slow = brute_force_fronts(&pts);
        for f in fast.iter_mut().chain(slow.iter_mut()) {
            f.sort_unstable();
        }
        prop_assert_eq!(fast, slow);
        Ok(())
    })
}

/// Scaling minimized objectives by a positive constant leaves fronts and
/// tournament preferences unchanged.
pub fn prop_argmax_invariance() -> Result<(), String> {
    let points = (2usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(0.0f64..10.0, 2), n),
            0.1f64..10.0,
        )
    });
    run(100, points, |(pts, c)| {
        let w: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|x| -x).collect()).collect();
        let ws: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| p.iter().map(|x| -x * c).collect())
            .collect();
        prop_assert_eq!(
            nsga2::fast_non_dominated_sort(&w),
            nsga2::fast_non_dominated_sort(&ws)
        );
        let (r1, _) = nsga2::rank_and_crowding(&w);
        let (r2, _) = nsga2::rank_and_crowding(&ws);
        prop_assert_eq!(r1, r2);
        Ok(())
    })
}

/// Free-run simulation equals the hand-coded recursion to 1e-12 relative.
pub fn prop_free_run_oracle() -> Result<(), String> {
    let p = pset();
    let model = create_model(&p, &["q1(y1)", "u1", "mul(q1(y1),u1)"])
        .unwrap()
        .compile(&p);
    run(
        64,
        (any::<u64>(), -1.0f64..1.0, -1.0f64..1.0),
        |(seed, a, b)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = rand_distr::StandardNormal;
            let u: Vec<f64> = (0..500).map(|_| rng.sample::<f64, _>(normal)).collect();
            let sim = predict_free_run(&model, &TRUE_THETA, &[a, b], &[u[..499].to_vec()])
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            let oracle = piroddi_oracle(&TRUE_THETA, &u, [a, b], 500);
            prop_assert_eq!(sim.len(), 500);
            for (s, o) in sim.iter().zip(&oracle) {
                prop_assert!(
                    (s - o).abs() <= 1e-12 * o.abs().max(1e-300) || s == o,
                    "{} vs {}",
                    s,
                    o
                );
            }
            Ok(())
        },
    )
}

/// Identical seeds give identical runs whatever the worker count.
pub fn check_worker_determinism() -> Result<(), String> {
    let p = pset();
    let data = noiseless_piroddi(300, 3);
    let cfg = EvolveConfig {
        pop_size: 60,
        n_gen: 6,
        seed: 99,
        ..EvolveConfig::default()
    };
    let ev = Evolver::new(cfg.clone(), p.clone()).unwrap();
    let evaluator = Evaluator::new(&p, &data, Objective::Osa, Estimator::Ls);
    let one = mggp::parallel::with_workers(1, || ev.run(|m| evaluator.evaluate(m)).unwrap());
    let four = mggp::parallel::with_workers(4, || ev.run(|m| evaluator.evaluate(m)).unwrap());
    if one != four {
        return Err("mono-objective run differs between 1 and 4 workers".into());
    }
    let mo = Evolver::new(
        EvolveConfig {
            weights: vec![-1.0, -1.0],
            ..cfg
        },
        p.clone(),
    )
    .unwrap();
    let evaluator = Evaluator::new(&p, &data, Objective::OsaAndTerms, Estimator::Ls);
    let one = mggp::parallel::with_workers(1, || mo.run_mo(|m| evaluator.evaluate(m)).unwrap());
    let three = mggp::parallel::with_workers(3, || mo.run_mo(|m| evaluator.evaluate(m)).unwrap());
    if one != three {
        return Err("multi-objective run differs between 1 and 3 workers".into());
    }
    Ok(())
}

/// All property checks, labelled.
pub fn property_suite() -> Vec<(&'static str, Result<(), String>)> {
    vec![
        ("tree round-trip", prop_round_trip()),
        ("lag additivity", prop_lag_additivity()),
        (
            "operator closure and gene-count conservation",
            prop_operator_closure(),
        ),
        ("LS residual orthogonality", prop_ls_orthogonality()),
        ("LS exact recovery", prop_ls_exact_recovery()),
        ("ERR bounds", prop_err_bounds()),
        (
            "NSGA-II fronts vs brute force (200 instances)",
            prop_front_equality(),
        ),
        ("argmax invariance under scaling", prop_argmax_invariance()),
        ("free-run vs direct recursion", prop_free_run_oracle()),
        (
            "seed determinism across worker counts",
            check_worker_determinism(),
        ),
    ]
}
