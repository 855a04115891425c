//! Least squares and extended least squares parameter estimation.

use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::model::{build_regressors, CompiledModel, Dataset, RegressorMatrix};

/// Ordinary least squares on the model's one-step-ahead regressors.
pub fn ls(model: &CompiledModel, data: &Dataset) -> Result<Vec<f64>> {
    ls_regressors(&build_regressors(model, data)?)
}

pub fn ls_regressors(reg: &RegressorMatrix) -> Result<Vec<f64>> {
    lstsq(&reg.columns, &reg.target)
}

/// Settings for extended least squares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElsConfig {
    /// Number of lagged residual regressors.
    pub n_xi: usize,
    pub max_iters: usize,
    /// Convergence threshold on the largest process-parameter change.
    pub tol: f64,
}

impl Default for ElsConfig {
    fn default() -> Self {
        Self {
            n_xi: 1,
            max_iters: 20,
            tol: 1e-8,
        }
    }
}

impl ElsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_xi < 1 {
            return Err(Error::Config("ELS needs n_xi >= 1".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("ELS needs max_iters >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("ELS tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElsEstimate {
    /// Coefficients of the model's genes.
    pub theta: Vec<f64>,
    /// Coefficients of the residual terms `xi[k-1..k-n_xi]` from the last pass.
    pub noise_theta: Vec<f64>,
    /// Number of augmented solves performed.
    pub iterations: usize,
    pub converged: bool,
}

/// Extended least squares: alternates between estimating residuals and
/// re-solving with lagged residuals appended as extra regressors.
///
/// Residuals are recomputed recursively through the estimated noise model
/// and taken as zero before the first regressor row. When the
/// residual columns vanish the plain LS estimate is returned.
pub fn els(model: &CompiledModel, data: &Dataset, cfg: &ElsConfig) -> Result<ElsEstimate> {
    cfg.validate()?;
    let reg = build_regressors(model, data)?;
    let start = reg.start;
    if data.len() <= start + cfg.n_xi {
        return Err(Error::SeriesTooShort {
            len: data.len(),
            required: start + cfg.n_xi,
        });
    }
    let mut theta = ls_regressors(&reg)?;
    // residual per regressor row
    let mut resid: Vec<f64> = reg
        .target
        .iter()
        .zip(reg.predict(&theta))
        .map(|(y, p)| y - p)
        .collect();
    let scale = reg.target.iter().map(|y| y * y).sum::<f64>().sqrt();
    let rows = reg.rows();
    let m = reg.cols();

    let mut noise_theta = vec![0.0; cfg.n_xi];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        let noise_cols: Vec<Vec<f64>> = (1..=cfg.n_xi)
            .map(|lag| {
                (0..rows)
                    .map(|r| if r >= lag { resid[r - lag] } else { 0.0 })
                    .collect()
            })
            .collect();
        let noise_norm = noise_cols
            .iter()
            .flatten()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        if noise_norm <= 1e-9 * scale || noise_norm == 0.0 {
            noise_theta.iter_mut().for_each(|t| *t = 0.0);
            converged = true;
            break;
        }
        let mut columns = reg.columns.clone();
        columns.extend(noise_cols);
        let full = lstsq(&columns, &reg.target)?;
        iterations += 1;

        let delta = full[..m]
            .iter()
            .zip(&theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        theta.copy_from_slice(&full[..m]);
        noise_theta.copy_from_slice(&full[m..]);

        // residuals filtered through the current noise model
        let process = reg.predict(&theta);
        for r in 0..rows {
            let ma: f64 = (1..=cfg.n_xi)
                .filter(|&lag| r >= lag)
                .map(|lag| noise_theta[lag - 1] * resid[r - lag])
                .sum();
            resid[r] = reg.target[r] - process[r] - ma;
        }
        if delta < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(ElsEstimate {
        theta,
        noise_theta,
        iterations,
        converged,
    })
}
