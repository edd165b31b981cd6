//! Unit-root, causality, VAR, PLS and forecast-comparison routines.

pub mod adf;
pub mod dm;
pub mod forecast;
pub mod frame;
pub mod granger;
pub mod multiple_testing;
pub mod ols;
pub mod pls;
pub mod var;

use thiserror::Error;

pub use adf::{adf_test, AdfResult};
pub use dm::{dm_test, DmResult};
pub use forecast::{forecast_suite, ForecastConfig, ForecastReport, Variant};
pub use frame::TimeSeriesFrame;
pub use granger::{granger_tests, Direction, GrangerResult};
pub use multiple_testing::bh_adjust;
pub use ols::{ols, OlsFit};
pub use pls::{factor_cv, pls_on_residuals, simpls, PlsModel};
pub use var::{fit_var, select_lag, VarModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EconError {
    #[error("singular design: {0}")]
    SingularDesign(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    #[error("rank deficiency: extracted {extracted} of {requested} components")]
    RankDeficiency { extracted: usize, requested: usize },
    #[error("loss differential has zero variance")]
    ZeroVarianceLoss,
}

impl EconError {
    pub fn kind(&self) -> &'static str {
        match self {
            EconError::SingularDesign(_) => "SingularDesign",
            EconError::DimensionMismatch(_) => "DimensionMismatch",
            EconError::InsufficientData(_) => "InsufficientData",
            EconError::DomainError(_) => "DomainError",
            EconError::DegenerateSeries(_) => "DegenerateSeries",
            EconError::RankDeficiency { .. } => "RankDeficiency",
            EconError::ZeroVarianceLoss => "ZeroVarianceLoss",
        }
    }
}

pub type Result<T> = std::result::Result<T, EconError>;
