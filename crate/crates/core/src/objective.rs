//! Built-in evaluation functions for the evolver.
//!
//! Each evaluator estimates parameters, then scores the model. Any failure
//! (singular regressors, divergence, short data) scores `+inf` on every
//! objective so the search keeps running.

use crate::error::Result;
use crate::estimate::{els, ls, ElsConfig};
use crate::model::{Dataset, Model};
use crate::primitives::PrimitiveSet;
use crate::simulate::{score_free_run, score_osa, score_shooting, ShootingConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Osa,
    FreeRun,
    /// Multiple shooting; `None` uses ten times the model's lag.
    Shooting(Option<usize>),
    /// One-step-ahead MSE and term count, both minimized.
    OsaAndTerms,
}

impl Objective {
    pub fn arity(&self) -> usize {
        match self {
            Objective::OsaAndTerms => 2,
            _ => 1,
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        vec![-1.0; self.arity()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    Ls,
    Els(ElsConfig),
}

/// Scores individuals on a shared dataset.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    pub pset: &'a PrimitiveSet,
    pub data: &'a Dataset,
    pub objective: Objective,
    pub estimator: Estimator,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        pset: &'a PrimitiveSet,
        data: &'a Dataset,
        objective: Objective,
        estimator: Estimator,
    ) -> Self {
        Self {
            pset,
            data,
            objective,
            estimator,
        }
    }

    /// Estimates parameters and returns them with the objective values.
    pub fn fit(&self, model: &Model) -> Result<(Vec<f64>, Vec<f64>)> {
        let compiled = model.compile(self.pset);
        let theta = match &self.estimator {
            Estimator::Ls => ls(&compiled, self.data)?,
            Estimator::Els(cfg) => els(&compiled, self.data, cfg)?.theta,
        };
        let values = match self.objective {
            Objective::Osa => vec![score_osa(&compiled, &theta, self.data)?],
            Objective::FreeRun => vec![score_free_run(&compiled, &theta, self.data)?],
            Objective::Shooting(window) => {
                let cfg = window.map_or_else(
                    || ShootingConfig::default_for(&compiled),
                    |window| ShootingConfig {
                        window: window.max(compiled.max_lag() + 1),
                    },
                );
                vec![score_shooting(&compiled, &theta, self.data, &cfg)?]
            }
            Objective::OsaAndTerms => vec![
                score_osa(&compiled, &theta, self.data)?,
                model.term_count() as f64,
            ],
        };
        Ok((theta, values))
    }

    pub fn evaluate(&self, model: &Model) -> Vec<f64> {
        match self.fit(model) {
            Ok((_, values)) => values,
            Err(_) => vec![f64::INFINITY; self.objective.arity()],
        }
    }
}
