//! Built-in benchmark systems for data generation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::Dataset;

pub const BUILTIN_SYSTEMS: &[&str] = &["piroddi"];

/// True structure of the Piroddi benchmark in the default `y1`/`u1` naming.
pub const PIRODDI_TERMS: [&str; 3] = ["q1(y1)", "u1", "mul(q1(y1),u1)"];
pub const PIRODDI_THETA: [f64; 3] = [0.75, 0.25, -0.20];

/// `y[k] = 0.75 y[k-2] + 0.25 u[k-1] - 0.20 y[k-2] u[k-1] + c xi[k-1] + xi[k]`
/// from `y[0] = y[1] = 0`. `noise` may be empty for the noiseless system.
pub fn piroddi(u: &[f64], noise: &[f64], ma: f64) -> Vec<f64> {
    let n = u.len();
    let xi = |k: usize| noise.get(k).copied().unwrap_or(0.0);
    let mut y = vec![0.0; n];
    for k in 2..n {
        let [a, b, c] = PIRODDI_THETA;
        // same operation order as the fitted model, so the true model reproduces it exactly
        y[k] = a * y[k - 2] + b * u[k - 1] + c * (y[k - 2] * u[k - 1]) + ma * xi(k - 1) + xi(k);
    }
    y
}

/// Settings for [`generate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateConfig {
    pub samples: usize,
    /// Standard deviation of the white noise `xi`.
    pub noise_std: f64,
    /// Moving-average coefficient on `xi[k-1]`.
    pub ma: f64,
    pub seed: u64,
}

/// Simulates a built-in system driven by zero-mean, unit-variance Gaussian
/// input. Input and noise come from separate streams of the same seed, so
/// the input does not depend on the noise settings.
pub fn generate(system: &str, cfg: &GenerateConfig) -> Result<Dataset> {
    if system != "piroddi" {
        return Err(Error::Config(format!(
            "unknown system `{system}` (available: {})",
            BUILTIN_SYSTEMS.join(", ")
        )));
    }
    if !(cfg.noise_std >= 0.0 && cfg.noise_std.is_finite()) {
        return Err(Error::Config(
            "noise must be a finite, non-negative std".into(),
        ));
    }
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let mut input_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let u: Vec<f64> = (0..cfg.samples)
        .map(|_| unit.sample(&mut input_rng))
        .collect();
    let noise: Vec<f64> = if cfg.noise_std > 0.0 {
        let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        noise_rng.set_stream(1);
        (0..cfg.samples)
            .map(|_| cfg.noise_std * unit.sample(&mut noise_rng))
            .collect()
    } else {
        Vec::new()
    };
    let y = piroddi(&u, &noise, cfg.ma);
    Dataset::siso(y, u)
}
