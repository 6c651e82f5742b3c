use thiserror::Error;

/// Failure modes shared by every solver in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("integrand not finite at x = {x}")]
    NonFiniteIntegrand { x: f64 },
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("payoff ill-conditioned: {0}")]
    IllConditionedPayoff(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("parameters outside the informative branch: {0}")]
    InvalidBranch(String),
    #[error("no partition with {n} labels: {reason}")]
    InfeasiblePartition { n: usize, reason: String },
    #[error("only the babbling outcome exists: {0}")]
    OnlyBabbling(String),
    #[error("no anchor induces report {r} at theta = {theta}")]
    NoInducingAnchor { r: f64, theta: f64 },
    #[error("regularity violated at r = {r}: {reason}")]
    RegularityViolation { r: f64, reason: String },
    #[error("ODE leading coefficient vanishes near r = {r}")]
    StiffRegion { r: f64 },
    #[error("no regular equilibrium: {0}")]
    NoRegularEquilibrium(String),
    #[error("assumption violated: {0}")]
    AssumptionViolation(String),
    #[error("eigen solver failed: {0}")]
    SpectralFailure(String),
    #[error("alignment fails: Cov(U^R_1, U^S_1) = {cov}")]
    AlignmentViolation { cov: f64 },
    #[error("no hybrid equilibrium: {0}")]
    NoHybridFound(String),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
}

impl Error {
    /// Short machine-readable tag, used by the CLI and in telemetry.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFiniteIntegrand { .. } => "NonFiniteIntegrand",
            Error::NoSignChange { .. } => "NoSignChange",
            Error::IllConditionedPayoff(_) => "IllConditionedPayoff",
            Error::InvalidModel(_) => "InvalidModel",
            Error::InvalidBranch(_) => "InvalidBranch",
            Error::InfeasiblePartition { .. } => "InfeasiblePartition",
            Error::OnlyBabbling(_) => "OnlyBabbling",
            Error::NoInducingAnchor { .. } => "NoInducingAnchor",
            Error::RegularityViolation { .. } => "RegularityViolation",
            Error::StiffRegion { .. } => "StiffRegion",
            Error::NoRegularEquilibrium(_) => "NoRegularEquilibrium",
            Error::AssumptionViolation(_) => "AssumptionViolation",
            Error::SpectralFailure(_) => "SpectralFailure",
            Error::AlignmentViolation { .. } => "AlignmentViolation",
            Error::NoHybridFound(_) => "NoHybridFound",
            Error::NoConvergence(_) => "NoConvergence",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
