use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate normal: deviatoric radius is zero")]
    DegenerateNormal,

    #[error("yield surface fit: {0}")]
    YieldFit(String),

    #[error("root solve failed: {0}")]
    RootSolve(String),

    #[error("no admissible data in the {0} subset")]
    NoAdmissibleData(&'static str),

    #[error("ill-posed tangent identification: |N:deps| = {contraction:e} is below threshold")]
    IllPosedIdentification { contraction: f64 },

    #[error("tangent not positive definite: gamma = {gamma:e} >= 2 mu = {limit:e}")]
    TangentNotPositive { gamma: f64, limit: f64 },

    #[error("inverted or degenerate element {element} (det J = {det:e})")]
    InvertedElement { element: usize, det: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("boundary conditions: {0}")]
    Boundary(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("linear solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    LinearSolverDiverged { residual: f64, iterations: usize },

    #[error("local return mapping did not converge: {0}")]
    ReturnMapping(String),

    #[error("global Newton did not converge at step {step}: residual {residual:e}")]
    NewtonDiverged { step: usize, residual: f64 },

    #[error("fixed point violated at step {step}: relative change {change:e}")]
    FixedPointViolated { step: usize, change: f64 },

    #[error("solver failed at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("reference solution has zero norm")]
    ZeroReference,

    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at_step(self, step: usize) -> Self {
        match self {
            e @ Error::AtStep { .. } => e,
            e => Error::AtStep {
                step,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
