use thiserror::Error;

/// Errors raised by the identification toolbox.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("function `{0}` is already defined")]
    DuplicateFunction(String),
    #[error("function `{name}` must have arity >= 1, got {arity}")]
    InvalidArity { name: String, arity: usize },
    #[error("`{0}` is not a valid symbol name")]
    InvalidName(String),
    #[error("no built-in function named `{name}` with arity {arity}")]
    UnknownBuiltin { name: String, arity: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable name `{0}` is already in use")]
    DuplicateVariable(String),
    #[error("a primitive set needs at least one variable")]
    NoVariables,

    #[error("unknown symbol `{symbol}` at byte {pos}")]
    UnknownSymbol { symbol: String, pos: usize },
    #[error("`{name}` expects {expected} argument(s), found {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("term {index}: {source}")]
    Term {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("a model needs at least one term")]
    EmptyModel,

    #[error("series too short: {len} samples, need more than {required}")]
    SeriesTooShort { len: usize, required: usize },
    #[error("dataset has {found} input series but the primitive set expects {expected}")]
    InputCountMismatch { expected: usize, found: usize },
    #[error("series `{name}` has length {len}, expected {expected}")]
    LengthMismatch {
        name: String,
        len: usize,
        expected: usize,
    },
    #[error("parameter vector has length {found}, expected {expected}")]
    ThetaLength { expected: usize, found: usize },
    #[error("initial conditions have length {found}, expected {expected}")]
    InitialConditions { expected: usize, found: usize },

    #[error(
        "singular matrix: numerical rank {rank} < {cols} columns (min diagonal ratio {ratio:e})"
    )]
    SingularMatrix {
        rank: usize,
        cols: usize,
        ratio: f64,
    },
    #[error("simulation diverged at step {step}")]
    Divergence { step: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("individual {0} has not been evaluated")]
    Unevaluated(usize),
    #[error("objective arity mismatch: expected {expected}, got {found}")]
    ObjectiveArity { expected: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
