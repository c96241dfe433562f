use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("derivative vanishes at x = {x} (|f'| = {deriv:e})")]
    CriticalPointSingularity { x: f64, deriv: f64 },
    #[error("argument {re} + {im}i lies on the branch cut")]
    BranchCutViolation { re: f64, im: f64 },
    #[error("newton iteration diverged: {0}")]
    NewtonDivergence(String),
    #[error("branch ambiguous at w = {re} + {im}i")]
    BranchAmbiguity { re: f64, im: f64 },
    #[error("interval is not locally unimodal: {0}")]
    NotLocallyUnimodal(String),
    #[error("orbit of x = {x} hits a critical point at step {step}")]
    CriticalOrbit { x: f64, step: usize },
    #[error("critical value obstructs the monotone pullback: {0}")]
    BranchBlocked(String),
    #[error("point {0} lies inside the nice set")]
    InsideNiceSet(f64),
    #[error("not renormalizable up to period {max_period}")]
    NotRenormalizable { max_period: usize },
    #[error("precision exhausted below level {deepest}")]
    PrecisionExhausted { deepest: usize },
    #[error("preimage chain broken: {0}")]
    ChainBroken(String),
    #[error("degenerate chart: interval length {0:e}")]
    ChartDegenerate(f64),
    #[error("pullback obstructed: {0}")]
    PullbackObstructed(String),
    #[error("backward orbit left the trust region at step {step}")]
    TrustRegionExit { step: usize },
    #[error("no disk scale in range gives the required contraction (best factor {best})")]
    ContractionUnattainable { best: f64 },
    #[error("pullback failure: {0}")]
    PullbackFailure(String),
    #[error("inner domain is not nested in the outer domain")]
    NotNested,
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
