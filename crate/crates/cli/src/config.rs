//! TOML run configuration.
//!
//! ```toml
//! [data]
//! path = "piroddi.csv"
//! output = "y"
//! inputs = ["u"]
//!
//! [pset]
//! max_delay = 1
//!
//! [evolve]
//! pop_size = 500
//! n_gen = 50
//!
//! [output]
//! model = "model.json"
//! log = "log.csv"
//! ```

use std::path::{Path, PathBuf};

use mggp::{ElsConfig, Estimator, EvolveConfig, FroeConfig, Objective, PrimitiveSet};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    #[serde(default)]
    pub pset: PsetSection,
    #[serde(default)]
    pub objective: ObjectiveSection,
    #[serde(default)]
    pub estimator: EstimatorSection,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub froe: FroeSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: PathBuf,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default = "default_inputs")]
    pub inputs: Vec<String>,
}

fn default_output() -> String {
    "y".into()
}

fn default_inputs() -> Vec<String> {
    vec!["u".into()]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsetSection {
    pub max_delay: usize,
    /// Variable names, output first. Defaults to `y1, u1, u2, ...`.
    pub names: Option<Vec<String>>,
    /// Built-in functions besides `mul`.
    pub functions: Vec<String>,
}

impl Default for PsetSection {
    fn default() -> Self {
        Self {
            max_delay: 1,
            names: None,
            functions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    #[default]
    Osa,
    Freerun,
    Shooting,
    Multi,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSection {
    #[serde(default)]
    pub kind: ObjectiveKind,
    pub window: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    #[default]
    Ls,
    Els,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    #[serde(default)]
    pub kind: EstimatorKind,
    pub n_xi: Option<usize>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    pub pop_size: Option<usize>,
    pub cxpb: Option<f64>,
    pub mtpb: Option<f64>,
    pub n_gen: Option<usize>,
    pub max_height: Option<usize>,
    pub max_terms: Option<usize>,
    pub elite: Option<usize>,
    pub pop_percent: Option<f64>,
    pub tournament_size: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FroeSection {
    pub degree: Option<usize>,
    pub ny: Option<usize>,
    pub nu: Option<usize>,
    pub max_terms: Option<usize>,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub model: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

fn output_or(path: &Option<PathBuf>, config: &Path, default: &str) -> PathBuf {
    path.clone()
        .unwrap_or_else(|| config.parent().unwrap_or(Path::new(".")).join(default))
}

impl RunConfig {
    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.data.path);
        for p in [
            &mut cfg.output.model,
            &mut cfg.output.log,
            &mut cfg.output.report,
        ]
        .into_iter()
        .flatten()
        {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn output_model(&self, config: &Path) -> PathBuf {
        output_or(&self.output.model, config, "model.json")
    }

    pub fn output_log(&self, config: &Path) -> PathBuf {
        output_or(&self.output.log, config, "log.csv")
    }

    pub fn output_report(&self, config: &Path) -> PathBuf {
        output_or(&self.output.report, config, "report.txt")
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn primitive_set(&self) -> Result<PrimitiveSet, CliError> {
        let n = 1 + self.data.inputs.len();
        let mut pset = PrimitiveSet::new(self.pset.max_delay, n)?;
        for name in self.pset.functions.iter().filter(|f| f.as_str() != "mul") {
            let (arity, _) = mggp::primitives::builtin(name)
                .ok_or_else(|| CliError::Config(format!("unknown function `{name}`")))?;
            pset.add_builtin(name, arity)?;
        }
        let names = match &self.pset.names {
            Some(names) => {
                if names.len() != n {
                    return Err(CliError::Config(format!(
                        "pset.names has {} entries but the data has {n} variables",
                        names.len()
                    )));
                }
                names.clone()
            }
            None => std::iter::once("y1".to_string())
                .chain((1..n).map(|i| format!("u{i}")))
                .collect(),
        };
        let mapping: Vec<(String, String)> = pset.variables().iter().cloned().zip(names).collect();
        Ok(pset.rename_arguments(&mapping)?)
    }

    pub fn objective(&self) -> Objective {
        match self.objective.kind {
            ObjectiveKind::Osa => Objective::Osa,
            ObjectiveKind::Freerun => Objective::FreeRun,
            ObjectiveKind::Shooting => Objective::Shooting(self.objective.window),
            ObjectiveKind::Multi => Objective::OsaAndTerms,
        }
    }

    pub fn estimator(&self) -> Result<Estimator, CliError> {
        Ok(match self.estimator.kind {
            EstimatorKind::Ls => Estimator::Ls,
            EstimatorKind::Els => {
                let d = ElsConfig::default();
                let cfg = ElsConfig {
                    n_xi: self.estimator.n_xi.unwrap_or(d.n_xi),
                    max_iters: self.estimator.max_iters.unwrap_or(d.max_iters),
                    tol: self.estimator.tol.unwrap_or(d.tol),
                };
                cfg.validate()?;
                Estimator::Els(cfg)
            }
        })
    }

    pub fn evolve(&self, seed: Option<u64>, verbose: bool) -> Result<EvolveConfig, CliError> {
        let d = EvolveConfig::default();
        let e = &self.evolve;
        let cfg = EvolveConfig {
            pop_size: e.pop_size.unwrap_or(d.pop_size),
            cxpb: e.cxpb.unwrap_or(d.cxpb),
            mtpb: e.mtpb.unwrap_or(d.mtpb),
            n_gen: e.n_gen.unwrap_or(d.n_gen),
            max_height: e.max_height.unwrap_or(d.max_height),
            max_terms: e.max_terms.unwrap_or(d.max_terms),
            elite: e.elite.unwrap_or(d.elite),
            pop_percent: e.pop_percent.unwrap_or(d.pop_percent),
            tournament_size: e.tournament_size.unwrap_or(d.tournament_size),
            weights: self.objective().weights(),
            seed: seed.or(e.seed).unwrap_or(d.seed),
            verbose,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn froe(&self) -> Result<FroeConfig, CliError> {
        let d = FroeConfig::default();
        let f = &self.froe;
        let cfg = FroeConfig {
            degree: f.degree.unwrap_or(d.degree),
            ny: f.ny.unwrap_or(d.ny),
            nu: f.nu.unwrap_or(d.nu),
            max_terms: f.max_terms.or(d.max_terms),
            rho: f.rho.unwrap_or(d.rho),
        };
        cfg.validate()?;
        if cfg.ny == 0 && cfg.nu == 0 {
            return Err(CliError::Config(
                "empty candidate set: ny and nu are both 0".into(),
            ));
        }
        Ok(cfg)
    }
}
