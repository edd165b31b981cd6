//! Pipeline configuration: a single JSON document. Relative paths resolve
//! against the directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::aggregate::CountryGroupMap;
use crate::econometrics::ForecastConfig;
use crate::gkg::GkgSchema;
use crate::month::YearMonth;
use crate::relevance::DEFAULT_MAX_LEN;

pub const MIN_RANGE_MONTHS: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableConfig {
    /// Macro variable, e.g. `ip` or `cpi`.
    pub name: String,
    /// Lower-case theme keywords for the first filtering step.
    pub keywords: Vec<String>,
    /// Control series names (keys of `PipelineConfig::controls`).
    pub controls: Vec<String>,
    /// `record_id,label` fixture for training the native classifier.
    #[serde(default)]
    pub labels: Option<PathBuf>,
    /// `record_id,probability` file for imported mode.
    #[serde(default)]
    pub predictions: Option<PathBuf>,
    /// Country → `month,value` CSV of the target series.
    pub targets: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierMode {
    #[default]
    Native,
    Imported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub mode: ClassifierMode,
    pub folds: usize,
    pub max_len: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            mode: ClassifierMode::Native,
            folds: 10,
            max_len: DEFAULT_MAX_LEN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Seeds {
    /// Cross-validation fold assignment.
    pub cv: u64,
    /// Unfiltered-corpus sampling.
    pub sample: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds { cv: 7, sample: 8 }
    }
}

impl Seeds {
    pub fn from_master(seed: u64) -> Self {
        Seeds {
            cv: seed,
            sample: seed.wrapping_add(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrangerConfig {
    pub max_lag: usize,
    /// Level for counting BH-adjusted significant results.
    pub alpha: f64,
}

impl Default for GrangerConfig {
    fn default() -> Self {
        GrangerConfig { max_lag: 3, alpha: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub corpus: Vec<PathBuf>,
    pub schema: GkgSchema,
    pub start: YearMonth,
    pub end: YearMonth,
    pub countries: Vec<String>,
    pub country_groups: CountryGroupMap,
    pub variables: Vec<VariableConfig>,
    /// Control name → `month,value` CSV.
    pub controls: BTreeMap<String, PathBuf>,
    pub classifier: ClassifierConfig,
    pub seeds: Seeds,
    /// Records drawn per calendar year for the unfiltered panel.
    pub unfiltered_per_year: usize,
    pub forecast: ForecastConfig,
    pub granger: GrangerConfig,
    pub adf_max_lag: usize,
    /// Overrides merged over the bundled emotion map.
    pub emotion_map: Option<PathBuf>,
    /// GCAM key → descriptive score name.
    pub codebook: Option<PathBuf>,
    /// Components with a p-value below this are profiled by emotion.
    pub emotion_alpha: f64,
    /// Largest component count in the factor-count CV table.
    pub factor_cv_max: usize,
    pub factor_cv_folds: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: Vec::new(),
            schema: GkgSchema::default(),
            start: YearMonth::new(2015, 3).expect("valid"),
            end: YearMonth::new(2020, 6).expect("valid"),
            countries: Vec::new(),
            country_groups: CountryGroupMap::default(),
            variables: Vec::new(),
            controls: BTreeMap::new(),
            classifier: ClassifierConfig::default(),
            seeds: Seeds::default(),
            unfiltered_per_year: 1_000_000,
            forecast: ForecastConfig::default(),
            granger: GrangerConfig::default(),
            adf_max_lag: 4,
            emotion_map: None,
            codebook: None,
            emotion_alpha: 0.1,
            factor_cv_max: 6,
            factor_cv_folds: 10,
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    /// Read, resolve relative paths and validate.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve_paths(&base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        self.corpus.iter_mut().for_each(|p| resolve(base, p));
        self.controls.values_mut().for_each(|p| resolve(base, p));
        for v in &mut self.variables {
            v.labels.iter_mut().for_each(|p| resolve(base, p));
            v.predictions.iter_mut().for_each(|p| resolve(base, p));
            v.targets.values_mut().for_each(|p| resolve(base, p));
        }
        self.emotion_map.iter_mut().for_each(|p| resolve(base, p));
        self.codebook.iter_mut().for_each(|p| resolve(base, p));
    }

    pub fn months(&self) -> Vec<YearMonth> {
        YearMonth::range(self.start, self.end)
    }

    pub fn variable(&self, name: &str) -> Option<&VariableConfig> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        self.schema.validate().map_err(PipelineError::Config)?;
        if self.corpus.is_empty() {
            return bad("no corpus files".into());
        }
        let n = self.months().len();
        if n < MIN_RANGE_MONTHS {
            return bad(format!("date range {}..{} spans {n} months, need {MIN_RANGE_MONTHS}", self.start, self.end));
        }
        if self.countries.is_empty() || self.variables.is_empty() {
            return bad("need at least one country and one variable".into());
        }
        for v in &self.variables {
            if v.keywords.is_empty() {
                return bad(format!("variable {} has no keywords", v.name));
            }
            if v.keywords.iter().any(|k| k.to_lowercase() != *k) {
                return bad(format!("keywords of {} must be lower-case", v.name));
            }
            for c in &v.controls {
                if !self.controls.contains_key(c) {
                    return bad(format!("control {c} of {} has no series", v.name));
                }
            }
            for c in &self.countries {
                if !v.targets.contains_key(c) {
                    return bad(format!("no {} series for {c}", v.name));
                }
            }
            match self.classifier.mode {
                ClassifierMode::Native if v.labels.is_none() => {
                    return bad(format!("native classifier needs labels for {}", v.name))
                }
                ClassifierMode::Imported if v.predictions.is_none() => {
                    return bad(format!("imported mode needs predictions for {}", v.name))
                }
                _ => {}
            }
        }
        let mut names: Vec<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.variables.len() {
            return bad("duplicate variable names".into());
        }
        if self.classifier.folds < 2 {
            return bad("classifier folds must be at least 2".into());
        }
        if self.unfiltered_per_year == 0 {
            return bad("unfiltered_per_year must be at least 1".into());
        }
        Ok(())
    }

    /// Location set feeding `country`'s panels; a country absent from the
    /// group map is fed by its own news only.
    pub fn group_for(&self, country: &str) -> std::collections::BTreeSet<String> {
        self.country_groups
            .get(country)
            .cloned()
            .unwrap_or_else(|| [country.to_string()].into_iter().collect())
    }
}
