//! End-to-end batch pipeline: ingest, filter, aggregate, granger, forecast and
//! report stages over one output directory.

pub mod artifacts;
pub mod config;
pub mod macro_data;
pub mod report;
pub mod stages;

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::AggregateError;
use crate::econometrics::EconError;
use crate::emotions::EmotionError;
use crate::relevance::RelevanceError;

pub use artifacts::{OutputDir, RunManifest};
pub use config::PipelineConfig;
pub use stages::{run, run_stages};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Filter,
    Aggregate,
    Granger,
    Forecast,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Filter,
        Stage::Aggregate,
        Stage::Granger,
        Stage::Forecast,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Filter => "filter",
            Stage::Aggregate => "aggregate",
            Stage::Granger => "granger",
            Stage::Forecast => "forecast",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, PipelineError> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("missing artifact {}; run the earlier stage first", path.display())]
    MissingArtifact { path: PathBuf },
    #[error("{series}: no value for {month}")]
    MissingMonth { series: String, month: String },
    #[error("{series} row {row}: `{value}` is not a finite number")]
    NonNumeric { series: String, row: usize, value: String },
    #[error("output directory is locked by another run ({})", path.display())]
    Locked { path: PathBuf },
    #[error("artifact {} failed its re-read check: {reason}", path.display())]
    SelfCheck { path: PathBuf, reason: String },
    #[error(transparent)]
    Write(#[from] io::Error),
    #[error(transparent)]
    Relevance(#[from] RelevanceError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Econ(#[from] EconError),
    #[error(transparent)]
    Emotion(#[from] EmotionError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<PipelineError>,
    },
    #[error("stage {stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<PipelineError>,
    },
}

impl PipelineError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        PipelineError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn in_stage(self, stage: Stage) -> Self {
        match self {
            e @ PipelineError::Stage { .. } => e,
            e => PipelineError::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Innermost error class, for machine-readable reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "Config",
            PipelineError::Io { .. } | PipelineError::Write(_) => "Io",
            PipelineError::MissingArtifact { .. } => "MissingArtifact",
            PipelineError::MissingMonth { .. } => "MissingMonth",
            PipelineError::NonNumeric { .. } => "NonNumeric",
            PipelineError::Locked { .. } => "Locked",
            PipelineError::SelfCheck { .. } => "SelfCheck",
            PipelineError::Relevance(e) => match e {
                RelevanceError::DegenerateTraining(_) => "DegenerateTraining",
                RelevanceError::InsufficientData(_) => "InsufficientData",
                RelevanceError::MalformedPredictionFile(_) => "MalformedPredictionFile",
                RelevanceError::DuplicateRecordId(_) => "DuplicateRecordId",
                RelevanceError::MissingPrediction(_) => "MissingPrediction",
                RelevanceError::MalformedLabelFile(_) => "MalformedLabelFile",
                RelevanceError::Io(_) => "Io",
                RelevanceError::Json(_) => "Json",
            },
            PipelineError::Aggregate(e) => match e {
                AggregateError::EmptyMonth(_) => "EmptyMonth",
                AggregateError::MixedMonths { .. } => "MixedMonths",
                AggregateError::MissingMonth(_) => "MissingMonth",
                AggregateError::InsufficientHistory { .. } => "InsufficientHistory",
                AggregateError::Format(_) => "Format",
                AggregateError::Io(_) => "Io",
                AggregateError::Json(_) => "Json",
                AggregateError::Csv(_) => "Csv",
            },
            PipelineError::Econ(e) => e.kind(),
            PipelineError::Emotion(e) => e.kind(),
            PipelineError::Json(_) => "Json",
            PipelineError::Csv(_) => "Csv",
            PipelineError::Context { source, .. } | PipelineError::Stage { source, .. } => source.kind(),
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Stage { stage, .. } => Some(*stage),
            PipelineError::Context { source, .. } => source.stage(),
            _ => None,
        }
    }

    /// `{"error": kind, "stage": ..., "message": ...}`
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": self.kind(),
            "stage": self.stage().map(Stage::name),
            "message": self.to_string(),
        })
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;
