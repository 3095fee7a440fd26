use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{location}: {source}")]
    ExprAt {
        location: String,
        #[source]
        source: ParseError,
    },
    #[error("{location} at {at}: {source}")]
    EvalAt {
        location: String,
        at: f64,
        #[source]
        source: EvalError,
    },
    #[error("invalid config: {0}")]
    Schema(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{field}: expected {expected} entries, found {found}")]
    Extent {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error("{location} at m = {m}: delay {value} is {reason}")]
    Delay {
        location: String,
        m: i64,
        value: f64,
        reason: &'static str,
    },
    #[error("{location}: declared sup {declared} contradicted by |value| = {sampled} at m = {m}")]
    SupContradicted {
        location: String,
        declared: f64,
        sampled: f64,
        m: u64,
    },
    #[error("model is not autonomous: {0} depends on m")]
    NotAutonomous(String),
    #[error("not an equilibrium: residual {residual:e} exceeds {tol:e}")]
    NotEquilibrium { residual: f64, tol: f64 },
    #[error("matrix of order {n} exceeds the limit {max} for minor enumeration")]
    OrderTooLarge { n: usize, max: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("null vector is not positive: {0}")]
    Positivity(String),
    #[error("no index i with z_i != 0 and z_i*y_i >= 0: the matrix is not an M-matrix")]
    NoWitness,
    #[error("bound iteration increased at q = {q} (component {component}): {previous} -> {next}")]
    Monotonicity {
        q: usize,
        component: usize,
        previous: f64,
        next: f64,
    },
    #[error("{0}")]
    OutOfRange(String),
    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),
    #[error("{0}")]
    Invalid(String),
}
