//! NARX/NARMAX structure selection with multi-gene genetic programming.
//!
//! Models are linear combinations of expression-tree genes over lagged
//! input/output signals. The crate covers:
//!
//! - [`primitives`]: primitive sets, expression trees, back-shift lags
//! - [`model`]: multi-gene models, datasets, regressor matrices
//! - [`estimate`]: least squares and extended least squares
//! - [`simulate`]: one-step-ahead, free-run and multiple-shooting prediction
//! - [`froe`]: forward orthogonal regression with the error reduction ratio
//! - [`evolve`]: mono-objective and NSGA-II multi-objective evolution
//!
//! ```
//! use mggp::{create_model, make_pset, simulate::predict_free_run};
//!
//! let pset = make_pset(1, 2, &[])?.rename_arguments(&[("ARG0", "y1"), ("ARG1", "u1")])?;
//! let model = create_model(&pset, &["q1(y1)", "u1", "mul(q1(y1),u1)"])?;
//! let compiled = model.compile(&pset);
//! let u = vec![vec![1.0; 10]];
//! let y = predict_free_run(&compiled, &[0.75, 0.25, -0.20], &[0.0, 0.0], &u)?;
//! assert_eq!(y.len(), 11);
//! # Ok::<(), mggp::Error>(())
//! ```

pub mod error;
pub mod estimate;
pub mod evolve;
pub mod froe;
pub mod linalg;
pub mod model;
pub mod objective;
pub mod parallel;
pub mod primitives;
pub mod record;
pub mod simulate;
pub mod systems;

pub use error::{Error, Result};
pub use estimate::{els, ls, ElsConfig, ElsEstimate};
pub use evolve::{EvolutionLog, EvolveConfig, Evolver, Fitness, HallOfFame};
pub use froe::{enumerate_candidates, froe, ErrReport, FroeConfig};
pub use model::{
    build_regressors, compile_model, create_model, CompiledModel, Dataset, Model, RegressorMatrix,
};
pub use objective::{Estimator, Evaluator, Objective};
pub use primitives::{make_pset, ExprTree, LagProfile, PrimitiveSet};
pub use record::ModelRecord;
pub use simulate::ShootingConfig;
