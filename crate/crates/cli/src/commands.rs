use std::fmt::Write as _;
use std::path::Path;

use mggp::froe::{enumerate_candidates, froe};
use mggp::record::Columns;
use mggp::simulate::{
    predict_free_run_on, predict_osa, predict_shooting, score_free_run, score_osa, score_shooting,
    ShootingConfig,
};
use mggp::systems::{generate as generate_system, GenerateConfig};
use mggp::{Dataset, Evaluator, Evolver, Model, ModelRecord, PrimitiveSet};

use crate::config::RunConfig;
use crate::data::{read_dataset, write_columns, write_file};
use crate::error::CliError;

pub struct RunOptions {
    pub seed: Option<u64>,
    pub workers: usize,
    pub verbose: bool,
}

fn columns(cfg: &RunConfig) -> Columns {
    Columns {
        output: cfg.data.output.clone(),
        inputs: cfg.data.inputs.clone(),
    }
}

fn describe(pset: &PrimitiveSet, model: &Model, theta: &[f64]) -> String {
    let mut s = String::new();
    for (term, t) in model.terms(pset).iter().zip(theta) {
        let _ = writeln!(s, "  {t:>+14.8e}  {term}");
    }
    s
}

/// Among models whose first objective is numerically indistinguishable from
/// the best, the one with fewest terms.
fn pick_parsimonious<'a>(front: &'a [Model], data: &Dataset) -> Option<&'a Model> {
    let power = data.y().iter().map(|y| y * y).sum::<f64>() / data.len().max(1) as f64;
    let mse = |m: &Model| m.fitness.as_ref().map_or(f64::INFINITY, |f| f.values[0]);
    let best = front.iter().map(mse).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * (best + power);
    front
        .iter()
        .filter(|m| mse(m) <= best + tol)
        .min_by(|a, b| {
            a.term_count()
                .cmp(&b.term_count())
                .then(mse(a).total_cmp(&mse(b)))
        })
}

pub fn identify(config: &Path, opts: &RunOptions) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let pset = cfg.primitive_set()?;
    let objective = cfg.objective();
    let estimator = cfg.estimator()?;
    let evolve = cfg.evolve(opts.seed, opts.verbose)?;
    let data = read_dataset(&cfg.data.path, &cfg.data.output, &cfg.data.inputs)?;

    let evaluator = Evaluator::new(&pset, &data, objective, estimator);
    let evolver = Evolver::new(evolve, pset.clone())?;
    let multi = objective.arity() > 1;
    let (hof, log) = mggp::parallel::with_workers(opts.workers, || {
        if multi {
            evolver.run_mo(|m| evaluator.evaluate(m))
        } else {
            evolver.run(|m| evaluator.evaluate(m))
        }
    })?;

    let best = pick_parsimonious(&hof.members, &data)
        .ok_or_else(|| CliError::Runtime("evolution produced no model".into()))?;
    let (theta, values) = evaluator
        .fit(best)
        .map_err(|e| CliError::Runtime(format!("best model cannot be fitted: {e}")))?;

    let mut report = format!("model ({} terms):\n", best.term_count());
    report.push_str(&describe(&pset, best, &theta));
    let _ = writeln!(report, "objective: {values:?}");
    let _ = writeln!(report, "evaluations: {}", log.total_evals());
    if multi {
        report.push_str("front (mse, terms):\n");
        let mut front: Vec<&Model> = hof.members.iter().collect();
        front.sort_by_key(|m| m.term_count());
        for m in front {
            let v = &m.fitness.as_ref().expect("evaluated front").values;
            let _ = writeln!(
                report,
                "  {:>14.6e}  {}  [{}]",
                v[0],
                v[1],
                m.terms(&pset).join(", ")
            );
        }
    }
    print!("{report}");

    let mut record = ModelRecord::new(&pset, best, &theta);
    record.data = Some(columns(&cfg));
    write_file(&cfg.output_model(config), &record.to_json())?;
    write_file(&cfg.output_log(config), &log.to_csv())?;
    write_file(&cfg.output_report(config), &report)?;
    Ok(())
}

pub fn run_froe(config: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let pset = cfg.primitive_set()?;
    let froe_cfg = cfg.froe()?;
    let data = read_dataset(&cfg.data.path, &cfg.data.output, &cfg.data.inputs)?;
    let candidates = enumerate_candidates(&pset, &froe_cfg)?;
    if candidates.is_empty() {
        return Err(CliError::Config("empty candidate set".into()));
    }
    let report = froe(&pset, &data, &candidates, &froe_cfg)?;
    let table = report.render(&pset);
    print!("{table}");

    let model = report.to_model(&pset)?;
    let mut record = ModelRecord::new(&pset, &model, &report.theta);
    record.data = Some(columns(&cfg));
    write_file(&cfg.output_model(config), &record.to_json())?;
    write_file(&cfg.output_report(config), &table)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Osa,
    Freerun,
    Shooting,
}

pub struct SimulateArgs<'a> {
    pub model: &'a Path,
    pub data: &'a Path,
    pub mode: Mode,
    pub window: Option<usize>,
    pub output: Option<&'a Path>,
    pub output_column: Option<String>,
    pub input_columns: Option<Vec<String>>,
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(args.model).map_err(|e| {
        CliError::Config(format!("cannot read model {}: {e}", args.model.display()))
    })?;
    let record = ModelRecord::from_json(&text)?;
    let (pset, model) = record.load()?;
    let theta = model.theta.clone().unwrap_or_default();
    let n_inputs = pset.num_variables() - 1;
    let default_inputs = || {
        if n_inputs == 1 {
            vec!["u".to_string()]
        } else {
            (1..=n_inputs).map(|i| format!("u{i}")).collect()
        }
    };
    let output_column = args
        .output_column
        .clone()
        .or_else(|| record.data.as_ref().map(|c| c.output.clone()))
        .unwrap_or_else(|| "y".into());
    let input_columns = args
        .input_columns
        .clone()
        .or_else(|| record.data.as_ref().map(|c| c.inputs.clone()))
        .unwrap_or_else(default_inputs);
    if input_columns.len() != n_inputs {
        return Err(CliError::Config(format!(
            "model has {n_inputs} inputs but {} input columns were given",
            input_columns.len()
        )));
    }
    let data = read_dataset(args.data, &output_column, &input_columns)?;
    let compiled = model.compile(&pset);
    let l = compiled.max_lag();

    let (pred, mse) = match args.mode {
        Mode::Osa => (
            predict_osa(&compiled, &theta, &data)?,
            score_osa(&compiled, &theta, &data)?,
        ),
        Mode::Freerun => (
            predict_free_run_on(&compiled, &theta, &data)?,
            score_free_run(&compiled, &theta, &data)?,
        ),
        Mode::Shooting => {
            let cfg = args.window.map_or_else(
                || ShootingConfig::default_for(&compiled),
                |window| ShootingConfig { window },
            );
            (
                predict_shooting(&compiled, &theta, &data, &cfg)?,
                score_shooting(&compiled, &theta, &data, &cfg)?,
            )
        }
    };

    let k: Vec<f64> = (l..data.len()).map(|k| k as f64).collect();
    let cols: [&[f64]; 3] = [&k, &data.y()[l..], &pred];
    let header = ["k", "y", "yhat"];
    match args.output {
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
            write_columns(file, &header, &cols)?;
            println!("MSE {}", format_value(mse));
        }
        None => {
            write_columns(std::io::stdout().lock(), &header, &cols)?;
            eprintln!("MSE {}", format_value(mse));
        }
    }
    Ok(())
}

/// Shortest round-trip form, in scientific notation when very small or large.
fn format_value(v: f64) -> String {
    if v == 0.0 || !v.is_finite() || (1e-4..1e6).contains(&v.abs()) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

pub struct GenerateArgs<'a> {
    pub system: &'a str,
    pub samples: usize,
    pub noise: f64,
    pub ma: f64,
    pub seed: u64,
    pub output: Option<&'a Path>,
}

pub fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let data = generate_system(
        args.system,
        &GenerateConfig {
            samples: args.samples,
            noise_std: args.noise,
            ma: args.ma,
            seed: args.seed,
        },
    )?;
    let cols: [&[f64]; 2] = [&data.inputs()[0], data.y()];
    match args.output {
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
            write_columns(file, &["u", "y"], &cols)
        }
        None => write_columns(std::io::stdout().lock(), &["u", "y"], &cols),
    }
}
