use crate::distributions::DistError;
use crate::lp::LpError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("no closed-form oracle for {0}")]
    OracleUnavailable(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("problem is infeasible: {0}")]
    Infeasible(String),
    #[error("input decision is infeasible: p = {p:.3e} (lower bound {lower:.3e}) exceeds {alpha:.3e}")]
    InfeasibleInput { p: f64, lower: f64, alpha: f64 },
    #[error("sample budget too small: n = {n}, n·α = {n_alpha:.2} < 50")]
    SampleBudgetTooSmall { n: usize, n_alpha: f64 },
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("transport budget infeasible: {0}")]
    BudgetInfeasible(String),
    #[error("base level too extreme: N·α₀ = {0:.2} < 50")]
    BaseLevelTooExtreme(f64),
    #[error("budget {budget} below base cost {base}")]
    BudgetBelowBase { budget: f64, base: f64 },
    #[error("too few exceedances: k = {0} < 20")]
    TooFewExceedances(usize),
    #[error("invalid exceedance count: k = {k} must be below N/2 = {half}")]
    TooManyExceedances { k: usize, half: usize },
    #[error("degenerate level: {0}")]
    DegenerateLevel(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dist(DistError::DomainError(_)) => "DomainError",
            Error::Dist(DistError::InfiniteMean(_)) => "InfiniteMean",
            Error::Dist(_) => "InvalidModel",
            Error::Lp(LpError::NumericalFailure(_)) => "NumericalFailure",
            Error::Lp(_) => "InvalidLp",
            Error::InvalidInstance(_) => "InvalidInstance",
            Error::OracleUnavailable(_) => "OracleUnavailable",
            Error::Unsupported(_) => "Unsupported",
            Error::Infeasible(_) => "Infeasible",
            Error::InfeasibleInput { .. } => "InfeasibleInput",
            Error::SampleBudgetTooSmall { .. } => "SampleBudgetTooSmall",
            Error::NoSolution(_) => "NoSolution",
            Error::BudgetInfeasible(_) => "BudgetInfeasible",
            Error::BaseLevelTooExtreme(_) => "BaseLevelTooExtreme",
            Error::BudgetBelowBase { .. } => "BudgetBelowBase",
            Error::TooFewExceedances(_) => "TooFewExceedances",
            Error::TooManyExceedances { .. } => "TooManyExceedances",
            Error::DegenerateLevel(_) => "DegenerateLevel",
            Error::Config(_) => "ConfigError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Dist(DistError::DomainError(alpha)))
    }
}
