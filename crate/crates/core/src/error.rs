use thiserror::Error;

/// Errors produced while constructing or auditing a flow.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(
        "dimension d = {d} is not supported: only even d >= 2 have an explicit compactly \
         supported base flow here (the d = 3 construction is out of scope)"
    )]
    UnsupportedDimension { d: usize },

    #[error("invalid profile exponent q = {q}: must be at least 1")]
    InvalidProfile { q: usize },

    #[error("derivative order {requested} exceeds the exact-derivative order {max} of {what}")]
    RegularityExceeded {
        what: &'static str,
        requested: usize,
        max: usize,
    },

    #[error("invalid scale parameters: {0}")]
    InvalidScale(String),

    #[error("support radius {radius} does not fit in one fundamental domain (needs < pi)")]
    SupportOverlap { radius: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "could not place center ({k}, {j}) after {attempts} attempts; epsilon is too large \
         for this placement strategy"
    )]
    PackingInfeasible { k: usize, j: usize, attempts: usize },

    #[error("frequency sequence is empty")]
    EmptySequence,

    #[error("frequency sequence is identically zero")]
    ZeroFrequencies,

    #[error("enumeration budget exceeded: {count} candidates visited, budget {budget}")]
    BudgetExceeded { count: u64, budget: u64 },

    #[error("no translation witness: the field has no active support")]
    NoWitness,

    #[error("grid error: {0}")]
    Grid(String),

    #[error("CFL condition violated: dt * max|u| / h = {cfl:.3} > {limit}")]
    Cfl { cfl: f64, limit: f64 },

    #[error("time integration became unstable at t = {t}")]
    Instability { t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
