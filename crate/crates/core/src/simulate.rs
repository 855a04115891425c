//! One-step-ahead, free-run and multiple-shooting prediction.
//!
//! All modes share the row alignment of the regressor matrix: the first
//! `L` samples (the model's maximum lag) serve as initial conditions and are
//! never scored.

use crate::error::{Error, Result};
use crate::model::{build_regressors, CompiledModel, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShootingConfig {
    /// Samples per segment, initial conditions included.
    pub window: usize,
}

impl ShootingConfig {
    /// Ten times the model's maximum lag, and at least `L + 1`.
    pub fn default_for(model: &CompiledModel) -> Self {
        let l = model.max_lag();
        Self {
            window: (10 * l).max(l + 1),
        }
    }
}

fn check_theta(model: &CompiledModel, theta: &[f64]) -> Result<()> {
    if theta.len() != model.term_count() {
        return Err(Error::ThetaLength {
            expected: model.term_count(),
            found: theta.len(),
        });
    }
    Ok(())
}

/// Predictions for `k = L..N` using measured past outputs.
pub fn predict_osa(model: &CompiledModel, theta: &[f64], data: &Dataset) -> Result<Vec<f64>> {
    check_theta(model, theta)?;
    Ok(build_regressors(model, data)?.predict(theta))
}

/// Runs the recursion for `k in from..to`, reading outputs from `ybuf` and
/// writing predictions back into it.
fn recurse(
    model: &CompiledModel,
    theta: &[f64],
    ybuf: &mut [f64],
    inputs: &[Vec<f64>],
    from: usize,
    to: usize,
) -> Result<()> {
    let mut genes = vec![0.0; model.term_count()];
    let mut stack = Vec::new();
    for k in from..to {
        {
            let ys = &*ybuf;
            model.eval_genes(
                |var, lag| {
                    if var == 0 {
                        ys[k - lag]
                    } else {
                        inputs[var - 1][k - lag]
                    }
                },
                &mut genes,
                &mut stack,
            );
        }
        let v: f64 = genes.iter().zip(theta).map(|(g, t)| g * t).sum();
        if !v.is_finite() {
            return Err(Error::Divergence { step: k });
        }
        ybuf[k] = v;
    }
    Ok(())
}

/// Free-run simulation producing `len` samples: `y0` (length `L`) followed
/// by recursive predictions. Inputs must cover indices `0..len-1`.
pub fn simulate(
    model: &CompiledModel,
    theta: &[f64],
    y0: &[f64],
    inputs: &[Vec<f64>],
    len: usize,
) -> Result<Vec<f64>> {
    check_theta(model, theta)?;
    let l = model.max_lag();
    if y0.len() != l {
        return Err(Error::InitialConditions {
            expected: l,
            found: y0.len(),
        });
    }
    if inputs.len() + 1 != model.num_variables() {
        return Err(Error::InputCountMismatch {
            expected: model.num_variables() - 1,
            found: inputs.len(),
        });
    }
    if len > l {
        for (i, u) in inputs.iter().enumerate() {
            if u.len() + 1 < len {
                return Err(Error::LengthMismatch {
                    name: format!("input {i}"),
                    len: u.len(),
                    expected: len - 1,
                });
            }
        }
    }
    let mut ybuf = vec![0.0; len.max(l)];
    ybuf[..l].copy_from_slice(y0);
    recurse(model, theta, &mut ybuf, inputs, l, len)?;
    ybuf.truncate(len.max(l));
    Ok(ybuf)
}

/// Free-run simulation driven by `inputs`: returns `y0` followed by one
/// prediction per available input step, `len(u) + 1` samples in total.
///
/// The initial conditions cover the model's maximum lag `L`.
pub fn predict_free_run(
    model: &CompiledModel,
    theta: &[f64],
    y0: &[f64],
    inputs: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let steps = match inputs.first() {
        Some(u) => u.len() + 1,
        None => {
            return Err(Error::Config(
                "free-run without inputs needs an explicit length; use simulate".into(),
            ))
        }
    };
    simulate(model, theta, y0, inputs, steps.max(y0.len()))
}

/// Free-run predictions for `k = L..N`, started from measured `y[0..L]`.
pub fn predict_free_run_on(
    model: &CompiledModel,
    theta: &[f64],
    data: &Dataset,
) -> Result<Vec<f64>> {
    data.check_against(model.num_variables())?;
    let l = model.max_lag();
    if data.len() <= l {
        return Err(Error::SeriesTooShort {
            len: data.len(),
            required: l,
        });
    }
    let full = simulate(model, theta, &data.y()[..l], data.inputs(), data.len())?;
    Ok(full[l..].to_vec())
}

/// Multiple shooting: consecutive segments of `window` samples, each
/// restarted from measured outputs. Returns predictions for `k = L..N`.
pub fn predict_shooting(
    model: &CompiledModel,
    theta: &[f64],
    data: &Dataset,
    cfg: &ShootingConfig,
) -> Result<Vec<f64>> {
    check_theta(model, theta)?;
    data.check_against(model.num_variables())?;
    let l = model.max_lag();
    let n = data.len();
    if cfg.window < l + 1 {
        return Err(Error::Config(format!(
            "shooting window {} is shorter than max lag + 1 = {}",
            cfg.window,
            l + 1
        )));
    }
    if n <= l {
        return Err(Error::SeriesTooShort {
            len: n,
            required: l,
        });
    }
    let y = data.y();
    let mut buf = y.to_vec();
    let mut out = Vec::with_capacity(n - l);
    let step = cfg.window - l;
    let mut s = 0;
    while s + l < n {
        // each segment restarts from measured outputs
        buf[s..s + l].copy_from_slice(&y[s..s + l]);
        let end = (s + cfg.window).min(n);
        recurse(model, theta, &mut buf, data.inputs(), s + l, end)?;
        out.extend_from_slice(&buf[s + l..end]);
        s += step;
    }
    Ok(out)
}

fn mse(measured: &[f64], predicted: &[f64]) -> f64 {
    debug_assert_eq!(measured.len(), predicted.len());
    if measured.is_empty() {
        return 0.0;
    }
    measured
        .iter()
        .zip(predicted)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / measured.len() as f64
}

fn score(result: Result<Vec<f64>>, data: &Dataset, l: usize) -> Result<f64> {
    match result {
        Ok(pred) => {
            let m = mse(&data.y()[l..], &pred);
            Ok(if m.is_nan() { f64::INFINITY } else { m })
        }
        Err(Error::Divergence { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// One-step-ahead MSE over `k = L..N`.
pub fn score_osa(model: &CompiledModel, theta: &[f64], data: &Dataset) -> Result<f64> {
    score(predict_osa(model, theta, data), data, model.max_lag())
}

/// Free-run MSE over `k = L..N`; divergence scores `+inf`.
pub fn score_free_run(model: &CompiledModel, theta: &[f64], data: &Dataset) -> Result<f64> {
    score(
        predict_free_run_on(model, theta, data),
        data,
        model.max_lag(),
    )
}

/// Multiple-shooting MSE over `k = L..N`; divergence scores `+inf`.
pub fn score_shooting(
    model: &CompiledModel,
    theta: &[f64],
    data: &Dataset,
    cfg: &ShootingConfig,
) -> Result<f64> {
    score(
        predict_shooting(model, theta, data, cfg),
        data,
        model.max_lag(),
    )
}
