//! The multi-gene genetic programming engine.
//!
//! [`Evolver::run`] is the mono-objective loop: tournament selection,
//! pairwise recombination (high- or low-level crossover, equally likely)
//! with probability `cxpb`, mutation of non-recombined individuals with
//! probability `mtpb`, evaluation, then elitism. [`Evolver::run_mo`] swaps
//! selection and elitism for NSGA-II.
//!
//! All random draws happen on the calling thread; only fitness evaluation
//! fans out (see [`crate::parallel`]), so results depend on the seed alone.

pub mod nsga2;
pub mod operators;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::parallel;
use crate::primitives::PrimitiveSet;

pub use operators::{
    crossover_high_level, crossover_low_level, init_population, mutate, mutate_inner, mutate_outer,
    random_individual, swap_tails, tournament,
};

/// Objective values with per-objective direction (`-1` minimize, `+1` maximize).
#[derive(Debug, Clone, PartialEq)]
pub struct Fitness {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Fitness {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::ObjectiveArity {
                expected: weights.len(),
                found: values.len(),
            });
        }
        Ok(Self { values, weights })
    }

    /// Values times weights; larger is better. NaN counts as worst.
    pub fn weighted(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| {
                let x = v * w;
                if x.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    x
                }
            })
            .collect()
    }

    /// Strict lexicographic comparison of weighted values.
    pub fn better_than(&self, other: &Fitness) -> bool {
        for (a, b) in self.weighted().into_iter().zip(other.weighted()) {
            if a > b {
                return true;
            }
            if a < b {
                return false;
            }
        }
        false
    }

    pub fn dominates(&self, other: &Fitness) -> bool {
        nsga2::dominates(&self.weighted(), &other.weighted())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub pop_size: usize,
    /// Probability that a parent pair is recombined.
    pub cxpb: f64,
    /// Probability that a non-recombined individual is mutated.
    pub mtpb: f64,
    pub n_gen: usize,
    pub max_height: usize,
    pub max_terms: usize,
    /// Individuals carried over by elitism (mono-objective).
    pub elite: usize,
    /// Fraction of the population kept by NSGA-II selection (multi-objective).
    pub pop_percent: f64,
    pub tournament_size: usize,
    pub weights: Vec<f64>,
    pub seed: u64,
    pub verbose: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            pop_size: 500,
            cxpb: 0.9,
            mtpb: 0.1,
            n_gen: 50,
            max_height: 3,
            max_terms: 5,
            elite: 10,
            pop_percent: 0.8,
            tournament_size: 2,
            weights: vec![-1.0],
            seed: 0,
            verbose: false,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.into()));
        if self.pop_size == 0 {
            return fail("pop_size must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.cxpb) || !(0.0..=1.0).contains(&self.mtpb) {
            return fail("cxpb and mtpb must lie in [0, 1]");
        }
        if self.max_terms == 0 {
            return fail("max_terms must be >= 1");
        }
        if self.elite > self.pop_size {
            return fail("elite cannot exceed pop_size");
        }
        if !(self.pop_percent > 0.0 && self.pop_percent <= 1.0) {
            return fail("pop_percent must lie in (0, 1]");
        }
        if self.tournament_size == 0 {
            return fail("tournament_size must be >= 1");
        }
        if self.weights.is_empty() || self.weights.iter().any(|w| !w.is_finite() || *w == 0.0) {
            return fail("weights must be non-zero and finite");
        }
        Ok(())
    }
}

/// Best individuals found: the top `elite` ever seen (mono-objective) or
/// the final first front (multi-objective).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HallOfFame {
    pub members: Vec<Model>,
    capacity: usize,
}

impl HallOfFame {
    fn with_capacity(capacity: usize) -> Self {
        Self {
            members: Vec::new(),
            capacity,
        }
    }

    pub fn best(&self) -> Option<&Model> {
        self.members.first()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn update(&mut self, population: &[Model]) {
        let mut pool: Vec<&Model> = self.members.iter().chain(population).collect();
        pool.sort_by(|a, b| compare_mono(a, b));
        let mut kept: Vec<Model> = Vec::with_capacity(self.capacity);
        for m in pool {
            if kept.len() == self.capacity {
                break;
            }
            if !kept.iter().any(|k| k.genes() == m.genes()) {
                kept.push(m.clone());
            }
        }
        self.members = kept;
    }
}

fn fitness(m: &Model) -> &Fitness {
    m.fitness.as_ref().expect("evaluated individual")
}

/// Best-first ordering for evaluated individuals.
fn compare_mono(a: &Model, b: &Model) -> std::cmp::Ordering {
    let (fa, fb) = (fitness(a), fitness(b));
    if fa.better_than(fb) {
        std::cmp::Ordering::Less
    } else if fb.better_than(fa) {
        std::cmp::Ordering::Greater
    } else {
        std::cmp::Ordering::Equal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub gen: usize,
    /// Evaluations performed in this generation.
    pub evals: usize,
    /// Per-objective best raw value (respecting each weight's direction).
    pub best: Vec<f64>,
    /// Per-objective mean over finite values.
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// One record for the initial population and one per generation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvolutionLog {
    pub records: Vec<GenerationRecord>,
}

impl EvolutionLog {
    pub fn total_evals(&self) -> usize {
        self.records.iter().map(|r| r.evals).sum()
    }

    /// `gen,evals,best,mean` followed by `best<i>,mean<i>` per extra objective.
    pub fn to_csv(&self) -> String {
        let objectives = self.records.first().map_or(1, |r| r.best.len());
        let mut s = String::from("gen,evals,best,mean");
        for i in 2..=objectives {
            let _ = write!(s, ",best{i},mean{i}");
        }
        s.push('\n');
        for r in &self.records {
            let _ = write!(s, "{},{}", r.gen, r.evals);
            for (b, m) in r.best.iter().zip(&r.mean) {
                let _ = write!(s, ",{b},{m}");
            }
            s.push('\n');
        }
        s
    }
}

fn record(gen: usize, evals: usize, population: &[Model], weights: &[f64]) -> GenerationRecord {
    let k = weights.len();
    let mut r = GenerationRecord {
        gen,
        evals,
        best: Vec::with_capacity(k),
        mean: Vec::with_capacity(k),
        min: Vec::with_capacity(k),
        max: Vec::with_capacity(k),
    };
    for (j, w) in weights.iter().enumerate() {
        let vals: Vec<f64> = population.iter().map(|m| fitness(m).values[j]).collect();
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let finite: Vec<f64> = vals.iter().copied().filter(|v| v.is_finite()).collect();
        let mean = if finite.is_empty() {
            if *w < 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        r.best.push(if *w < 0.0 { min } else { max });
        r.mean.push(mean);
        r.min.push(min);
        r.max.push(max);
    }
    r
}

fn report(r: &GenerationRecord) {
    let mut line = format!("gen {:>4}  evals {:>6}", r.gen, r.evals);
    for (b, m) in r.best.iter().zip(&r.mean) {
        let _ = write!(line, "  best {b:.6e}  mean {m:.6e}");
    }
    println!("{line}");
}

/// Evaluates every individual lacking a fitness; returns the count.
pub fn evaluate_population<E>(
    population: &mut [Model],
    evaluate: &E,
    weights: &[f64],
) -> Result<usize>
where
    E: Fn(&Model) -> Vec<f64> + Sync,
{
    let pending: Vec<usize> = (0..population.len())
        .filter(|&i| population[i].fitness.is_none())
        .collect();
    let refs: Vec<&Model> = pending.iter().map(|&i| &population[i]).collect();
    let results = parallel::map(&refs, |m| evaluate(m));
    for (i, values) in pending.iter().zip(results) {
        population[*i].fitness = Some(Fitness::new(values, weights.to_vec())?);
    }
    Ok(pending.len())
}

/// Runs an MGGP search over a primitive set.
#[derive(Debug, Clone)]
pub struct Evolver {
    pub config: EvolveConfig,
    pub pset: PrimitiveSet,
}

impl Evolver {
    pub fn new(config: EvolveConfig, pset: PrimitiveSet) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, pset })
    }

    fn vary<R: Rng + ?Sized>(&self, offspring: &mut [Model], rng: &mut R) {
        let cfg = &self.config;
        let n = offspring.len();
        let mut recombined = vec![false; n];
        let mut i = 0;
        while i + 1 < n {
            if rng.random::<f64>() < cfg.cxpb {
                let (a, b) = if rng.random_bool(0.5) {
                    crossover_high_level(&offspring[i], &offspring[i + 1], cfg.max_terms, rng)
                } else {
                    crossover_low_level(&offspring[i], &offspring[i + 1], cfg.max_height, rng)
                };
                offspring[i] = a;
                offspring[i + 1] = b;
                recombined[i] = true;
                recombined[i + 1] = true;
            }
            i += 2;
        }
        for (ind, done) in offspring.iter_mut().zip(recombined) {
            if !done && rng.random::<f64>() < cfg.mtpb {
                *ind = mutate(ind, &self.pset, cfg.max_height, rng);
            }
        }
    }

    fn initial<E, R>(&self, evaluate: &E, rng: &mut R) -> Result<(Vec<Model>, usize)>
    where
        E: Fn(&Model) -> Vec<f64> + Sync,
        R: Rng + ?Sized,
    {
        let cfg = &self.config;
        let mut pop = init_population(&self.pset, cfg.pop_size, cfg.max_height, cfg.max_terms, rng);
        let evals = evaluate_population(&mut pop, evaluate, &cfg.weights)?;
        Ok((pop, evals))
    }

    /// Mono-objective evolution seeded from `config.seed`.
    pub fn run<E>(&self, evaluate: E) -> Result<(HallOfFame, EvolutionLog)>
    where
        E: Fn(&Model) -> Vec<f64> + Sync,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        self.run_with_rng(evaluate, &mut rng)
    }

    pub fn run_with_rng<E, R>(&self, evaluate: E, rng: &mut R) -> Result<(HallOfFame, EvolutionLog)>
    where
        E: Fn(&Model) -> Vec<f64> + Sync,
        R: Rng + ?Sized,
    {
        let cfg = &self.config;
        let (mut pop, evals) = self.initial(&evaluate, rng)?;
        let mut hof = HallOfFame::with_capacity(cfg.elite.max(1));
        hof.update(&pop);
        let mut log = EvolutionLog::default();
        log.records.push(record(0, evals, &pop, &cfg.weights));
        if cfg.verbose {
            report(&log.records[0]);
        }

        for gen in 1..=cfg.n_gen {
            let better = |i: usize, j: usize| fitness(&pop[i]).better_than(fitness(&pop[j]));
            let mut offspring = Vec::with_capacity(cfg.pop_size);
            for _ in 0..cfg.pop_size {
                let w = tournament(&pop, cfg.tournament_size, better, rng)?;
                offspring.push(pop[w].clone());
            }
            self.vary(&mut offspring, rng);
            let evals = evaluate_population(&mut offspring, &evaluate, &cfg.weights)?;

            // elitism: the best ever seen replace the worst offspring
            let inject = cfg.elite.min(hof.len());
            if inject > 0 {
                let mut order: Vec<usize> = (0..offspring.len()).collect();
                order.sort_by(|&a, &b| compare_mono(&offspring[b], &offspring[a]));
                for (slot, elite) in order.into_iter().take(inject).zip(&hof.members) {
                    offspring[slot] = elite.clone();
                }
            }
            pop = offspring;
            hof.update(&pop);
            log.records.push(record(gen, evals, &pop, &cfg.weights));
            if cfg.verbose {
                report(log.records.last().unwrap());
            }
        }
        Ok((hof, log))
    }

    /// NSGA-II evolution seeded from `config.seed`.
    pub fn run_mo<E>(&self, evaluate: E) -> Result<(HallOfFame, EvolutionLog)>
    where
        E: Fn(&Model) -> Vec<f64> + Sync,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        self.run_mo_with_rng(evaluate, &mut rng)
    }

    pub fn run_mo_with_rng<E, R>(
        &self,
        evaluate: E,
        rng: &mut R,
    ) -> Result<(HallOfFame, EvolutionLog)>
    where
        E: Fn(&Model) -> Vec<f64> + Sync,
        R: Rng + ?Sized,
    {
        let cfg = &self.config;
        let (mut pop, evals) = self.initial(&evaluate, rng)?;
        let mut log = EvolutionLog::default();
        log.records.push(record(0, evals, &pop, &cfg.weights));
        if cfg.verbose {
            report(&log.records[0]);
        }
        let keep = ((cfg.pop_percent * cfg.pop_size as f64).ceil() as usize).clamp(1, cfg.pop_size);

        for gen in 1..=cfg.n_gen {
            let points: Vec<Vec<f64>> = pop.iter().map(|m| fitness(m).weighted()).collect();
            let (rank, crowd) = nsga2::rank_and_crowding(&points);
            let better = |i: usize, j: usize| {
                rank[i] < rank[j] || (rank[i] == rank[j] && crowd[i] > crowd[j])
            };
            let mut offspring = Vec::with_capacity(cfg.pop_size);
            for _ in 0..cfg.pop_size {
                let w = tournament(&pop, cfg.tournament_size, better, rng)?;
                offspring.push(pop[w].clone());
            }
            self.vary(&mut offspring, rng);
            let mut evals = evaluate_population(&mut offspring, &evaluate, &cfg.weights)?;

            let mut combined = pop;
            combined.extend(offspring);
            let points: Vec<Vec<f64>> = combined.iter().map(|m| fitness(m).weighted()).collect();
            let chosen = nsga2::select(&points, keep);
            let mut next: Vec<Model> = chosen.into_iter().map(|i| combined[i].clone()).collect();
            let mut fresh = init_population(
                &self.pset,
                cfg.pop_size - next.len(),
                cfg.max_height,
                cfg.max_terms,
                rng,
            );
            evals += evaluate_population(&mut fresh, &evaluate, &cfg.weights)?;
            next.extend(fresh);
            pop = next;
            log.records.push(record(gen, evals, &pop, &cfg.weights));
            if cfg.verbose {
                report(log.records.last().unwrap());
            }
        }

        let points: Vec<Vec<f64>> = pop.iter().map(|m| fitness(m).weighted()).collect();
        let mut members: Vec<Model> = Vec::new();
        if let Some(first) = nsga2::fast_non_dominated_sort(&points).first() {
            for &i in first {
                if !members.iter().any(|m| m.genes() == pop[i].genes()) {
                    members.push(pop[i].clone());
                }
            }
        }
        members.sort_by(compare_mono);
        let capacity = members.len();
        Ok((HallOfFame { members, capacity }, log))
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

    // genes-only objective: prefer fewer nodes, prefer more genes
    fn size_objective(m: &Model) -> Vec<f64> {
        vec![m.genes().iter().map(|g| g.len()).sum::<usize>() as f64 / m.term_count() as f64]
    }

    fn small_config() -> EvolveConfig {
        EvolveConfig {
            pop_size: 40,
            n_gen: 5,
            elite: 3,
            seed: 11,
            ..EvolveConfig::default()
        }
    }

    #[test]
    fn fitness_comparisons() {
        let a = Fitness::new(vec![3.0], vec![-1.0]).unwrap();
        let b = Fitness::new(vec![5.0], vec![-1.0]).unwrap();
        assert!(a.better_than(&b) && !b.better_than(&a));
        let nan = Fitness::new(vec![f64::NAN], vec![-1.0]).unwrap();
        let inf = Fitness::new(vec![f64::INFINITY], vec![-1.0]).unwrap();
        assert!(inf.better_than(&nan) || !nan.better_than(&inf));
        assert!(b.better_than(&inf));
        let p = Fitness::new(vec![1.0, 2.0], vec![-1.0, -1.0]).unwrap();
        let q = Fitness::new(vec![2.0, 2.0], vec![-1.0, -1.0]).unwrap();
        assert!(p.dominates(&q) && !q.dominates(&p));
        assert!(Fitness::new(vec![1.0], vec![-1.0, -1.0]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(EvolveConfig::default().validate().is_ok());
        let bad = [
            EvolveConfig {
                cxpb: 1.5,
                ..EvolveConfig::default()
            },
            EvolveConfig {
                elite: 600,
                ..EvolveConfig::default()
            },
            EvolveConfig {
                max_terms: 0,
                ..EvolveConfig::default()
            },
            EvolveConfig {
                pop_percent: 0.0,
                ..EvolveConfig::default()
            },
            EvolveConfig {
                pop_size: 0,
                elite: 0,
                ..EvolveConfig::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn zero_generations_evaluates_initial_population_only() {
        let cfg = EvolveConfig {
            n_gen: 0,
            ..small_config()
        };
        let ev = Evolver::new(cfg, pset()).unwrap();
        let (hof, log) = ev.run(size_objective).unwrap();
        assert_eq!(log.records.len(), 1);
        assert_eq!(log.total_evals(), 40);
        assert_eq!(hof.len(), 3);
        assert_eq!(
            hof.best().unwrap().fitness.as_ref().unwrap().values[0],
            log.records[0].best[0]
        );
    }

    #[test]
    fn elitism_without_variation_never_worsens() {
        let cfg = EvolveConfig {
            cxpb: 0.0,
            mtpb: 0.0,
            n_gen: 10,
            ..small_config()
        };
        let (_, log) = Evolver::new(cfg, pset())
            .unwrap()
            .run(size_objective)
            .unwrap();
        for w in log.records.windows(2) {
            assert!(w[1].best[0] <= w[0].best[0]);
        }
        // nothing changes, so nothing is re-evaluated
        assert_eq!(log.total_evals(), 40);
    }

    #[test]
    fn hof_is_sorted_and_monotone() {
        let ev = Evolver::new(small_config(), pset()).unwrap();
        let (hof, log) = ev.run(size_objective).unwrap();
        let vals: Vec<f64> = hof
            .members
            .iter()
            .map(|m| m.fitness.as_ref().unwrap().values[0])
            .collect();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let overall = log
            .records
            .iter()
            .map(|r| r.best[0])
            .fold(f64::INFINITY, f64::min);
        assert_eq!(vals[0], overall);
    }

    #[test]
    fn objective_arity_is_checked() {
        let ev = Evolver::new(small_config(), pset()).unwrap();
        assert!(matches!(
            ev.run(|_| vec![1.0, 2.0]),
            Err(Error::ObjectiveArity {
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn multi_objective_front_is_non_dominated() {
        let cfg = EvolveConfig {
            weights: vec![-1.0, -1.0],
            ..small_config()
        };
        let ev = Evolver::new(cfg, pset()).unwrap();
        let (hof, log) = ev
            .run_mo(|m| vec![size_objective(m)[0], m.term_count() as f64])
            .unwrap();
        assert_eq!(log.records.len(), 6);
        assert!(!hof.is_empty());
        for a in &hof.members {
            for b in &hof.members {
                assert!(!a
                    .fitness
                    .as_ref()
                    .unwrap()
                    .dominates(b.fitness.as_ref().unwrap()));
            }
        }
        let csv = log.to_csv();
        assert!(csv.starts_with("gen,evals,best,mean,best2,mean2\n"));
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn seeded_runs_repeat() {
        let ev = Evolver::new(small_config(), pset()).unwrap();
        let a = ev.run(size_objective).unwrap();
        let b = ev.run(size_objective).unwrap();
        assert_eq!(a, b);
    }
}
