//! Monthly news-sentiment panels from GKG records and factor-augmented
//! forecasting of macro series.

pub mod aggregate;
pub mod econometrics;
pub mod emotions;
pub mod gkg;
pub mod month;
pub mod pipeline;
pub mod relevance;
pub mod synthetic;
