use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RjdError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("non-finite {what} at x = {x}")]
    NonFinite { what: &'static str, x: f64 },

    #[error("lambda = {lambda} is outside [0, lambda0) with lambda0 = {lambda0}")]
    LambdaOutOfRange { lambda: f64, lambda0: f64 },

    #[error("exponential moment diverges at lambda = {lambda}: the family requires lambda < {threshold}")]
    DivergentMoment { lambda: f64, threshold: f64 },

    #[error("no jump is defined from x = {x}: the jump intensity vanishes there")]
    NoJump { x: f64 },

    #[error("jump intensity {rate} at x = {x} exceeds the thinning bound {bound}")]
    IntensityBound { x: f64, rate: f64, bound: f64 },

    #[error("no feasible lambda: the smallest sampled K_max is {min_k_max} at lambda = {at_lambda}")]
    Infeasible { min_k_max: f64, at_lambda: f64 },

    #[error("jump family is not stochastically ordered: {0}")]
    NotOrdered(String),

    #[error("domination fails at x = {x}, z = {z}: tail {tail} exceeds dominating tail {dominating_tail}")]
    DominationViolated {
        x: f64,
        z: f64,
        tail: f64,
        dominating_tail: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("initial states coincide; the V-gap is identically zero")]
    ZeroGap,

    #[error("expression error at offset {pos}: {msg}")]
    Expression { pos: usize, msg: String },

    #[error("model file error at {path}: {msg}")]
    ModelFile { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, RjdError>;
