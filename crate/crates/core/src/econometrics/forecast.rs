//! Walk-forward evaluation of the factor-augmented autoregression and its benchmarks.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dm::{dm_test, DmResult};
use super::frame::TimeSeriesFrame;
use super::ols::{ols, ols_lenient};
use super::pls::{simpls, PlsModel};
use super::var::{select_lag, LagSelection};
use super::{EconError, Result};
use crate::aggregate::SentimentPanel;
use crate::month::YearMonth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// Controls plus factors from the filtered panel.
    #[serde(rename = "MODEL")]
    Model,
    /// Controls only.
    #[serde(rename = "BM1")]
    Bm1,
    /// Controls plus factors from the unfiltered panel.
    #[serde(rename = "BM2")]
    Bm2,
    /// Controls plus average tone.
    #[serde(rename = "BM3")]
    Bm3,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Model, Variant::Bm1, Variant::Bm2, Variant::Bm3];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Model => "MODEL",
            Variant::Bm1 => "BM1",
            Variant::Bm2 => "BM2",
            Variant::Bm3 => "BM3",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Variant {
    type Err = EconError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| EconError::DomainError(format!("unknown variant {s}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastConfig {
    pub n_components: usize,
    /// Largest lag tried by AIC/BIC selection.
    pub p_max: usize,
    /// Fixed lag; skips selection when set.
    pub lag: Option<usize>,
    /// Contiguous blocks; block k+1 is validated after training on blocks 1..=k.
    pub blocks: usize,
    pub tone_column: String,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig {
            n_components: 3,
            p_max: 4,
            lag: None,
            blocks: 4,
            tone_column: "tone_mean".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub month: YearMonth,
    pub actual: f64,
    pub predicted: f64,
}

impl ForecastPoint {
    pub fn error(&self) -> f64 {
        self.actual - self.predicted
    }
}

/// Sentiment coefficients from the full-sample fit binned by p-value:
/// below 0.01, in [0.01, 0.05) and in [0.05, 0.1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SignificanceCounts {
    pub p01: usize,
    pub p05: usize,
    pub p10: usize,
}

impl SignificanceCounts {
    pub fn from_p_values(ps: &[f64]) -> Self {
        let mut c = SignificanceCounts::default();
        for &p in ps {
            if p < 0.01 {
                c.p01 += 1;
            } else if p < 0.05 {
                c.p05 += 1;
            } else if p < 0.1 {
                c.p10 += 1;
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.p01 + self.p05 + self.p10
    }

    /// `***(1),**(1),*(1)` style cell; `-` when nothing is significant.
    pub fn label(&self) -> String {
        let parts: Vec<String> = [("***", self.p01), ("**", self.p05), ("*", self.p10)]
            .iter()
            .filter(|(_, n)| *n > 0)
            .map(|(s, n)| format!("{s}({n})"))
            .collect();
        if parts.is_empty() {
            "-".to_string()
        } else {
            parts.join(",")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub variant: Variant,
    pub rmse: f64,
    pub forecasts: Vec<ForecastPoint>,
    /// p-values of the sentiment regressors in the full-sample fit, factor-major then lag.
    pub sentiment_p_values: Vec<f64>,
    pub significance: SignificanceCounts,
}

impl VariantResult {
    pub fn errors(&self) -> Vec<f64> {
        self.forecasts.iter().map(ForecastPoint::error).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmComparison {
    pub benchmark: Variant,
    pub result: DmResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSpan {
    pub train_end: usize,
    pub validate_start: usize,
    pub validate_end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub country: String,
    pub variable: String,
    pub lag: usize,
    pub lag_selection: Option<LagSelection>,
    pub n_components: usize,
    pub folds: Vec<FoldSpan>,
    pub variants: Vec<VariantResult>,
    /// MODEL against each benchmark; positive statistics favour the benchmark.
    pub dm: Vec<DmComparison>,
    /// PLS fit on the full sample for MODEL, used for emotion profiles.
    pub final_pls: Option<PlsModel>,
    /// Per component: smallest p-value among its lags in the full-sample fit.
    pub component_p_values: Vec<f64>,
}

impl ForecastReport {
    pub fn variant(&self, v: Variant) -> Option<&VariantResult> {
        self.variants.iter().find(|r| r.variant == v)
    }

    pub fn rmse(&self, v: Variant) -> Option<f64> {
        self.variant(v).map(|r| r.rmse)
    }

    pub fn dm_against(&self, benchmark: Variant) -> Option<&DmResult> {
        self.dm.iter().find(|c| c.benchmark == benchmark).map(|c| &c.result)
    }
}

/// Regressors `[1, y_{t-1..t-p}, z_{t-1..t-p}]` for each target row `t` in `rows`.
pub fn ardl_design(y: &DVector<f64>, z: &DMatrix<f64>, p: usize, rows: std::ops::Range<usize>) -> DMatrix<f64> {
    let m = z.ncols();
    let n = rows.len();
    DMatrix::from_fn(n, 1 + p + m * p, |i, j| {
        let t = rows.start + i;
        if j == 0 {
            1.0
        } else if j <= p {
            y[t - j]
        } else {
            let k = j - 1 - p;
            let (col, lag) = (k / p, k % p + 1);
            z[(t - lag, col)]
        }
    })
}

/// Walk-forward split of `n` rows into `blocks` contiguous blocks.
pub fn walk_forward_folds(n: usize, blocks: usize) -> Vec<FoldSpan> {
    let bounds = super::pls::contiguous_folds(n, blocks);
    (1..blocks)
        .map(|k| FoldSpan {
            train_end: bounds[k].start,
            validate_start: bounds[k].start,
            validate_end: bounds[k].end,
        })
        .collect()
}

fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols() + b.ncols(), |i, j| {
        if j < a.ncols() {
            a[(i, j)]
        } else {
            b[(i, j - a.ncols())]
        }
    })
}

struct Data<'a> {
    y: DVector<f64>,
    controls: DMatrix<f64>,
    filtered: &'a SentimentPanel,
    unfiltered: Option<&'a SentimentPanel>,
    tone: Option<DMatrix<f64>>,
    p: usize,
    n_components: usize,
}

impl Data<'_> {
    /// Factors from `panel` fit on BM1 residuals of target rows `p..train_end`,
    /// with the panel standardized on rows `0..train_end`. Row `s` of the result
    /// holds the factor values observed in month `s`.
    fn factors(&self, panel: &SentimentPanel, train_end: usize) -> Result<(DMatrix<f64>, PlsModel)> {
        let p = self.p;
        let x = ardl_design(&self.y, &self.controls, p, p..train_end);
        let target = self.y.rows(p, train_end - p).into_owned();
        let resid = ols_lenient(&x, &target)?.residuals;
        let std_panel = panel.restandardized(train_end);
        // Residual at t is explained by sentiment in month t-1.
        let xs = std_panel.values.rows(p - 1, train_end - p).into_owned();
        let pls = simpls(&xs, &resid, self.n_components)?;
        let f = pls.transform(&std_panel.values)?;
        Ok((f, pls))
    }

    fn exogenous(&self, v: Variant, train_end: usize) -> Result<(DMatrix<f64>, Option<PlsModel>)> {
        match v {
            Variant::Bm1 => Ok((self.controls.clone(), None)),
            Variant::Model => {
                let (f, pls) = self.factors(self.filtered, train_end)?;
                Ok((hstack(&self.controls, &f), Some(pls)))
            }
            Variant::Bm2 => {
                let panel = self
                    .unfiltered
                    .ok_or_else(|| EconError::DomainError("BM2 needs an unfiltered panel".into()))?;
                let (f, pls) = self.factors(panel, train_end)?;
                Ok((hstack(&self.controls, &f), Some(pls)))
            }
            Variant::Bm3 => {
                let tone = self
                    .tone
                    .as_ref()
                    .ok_or_else(|| EconError::DomainError("BM3 needs a tone column".into()))?;
                Ok((hstack(&self.controls, tone), None))
            }
        }
    }
}

/// Run the walk-forward comparison for the requested variants. Both panels
/// must cover exactly the frame's months.
pub fn forecast_suite(
    frame: &TimeSeriesFrame,
    filtered: &SentimentPanel,
    unfiltered: Option<&SentimentPanel>,
    variants: &[Variant],
    cfg: &ForecastConfig,
) -> Result<ForecastReport> {
    for (name, panel) in std::iter::once(("filtered", Some(filtered))).chain(std::iter::once(("unfiltered", unfiltered))) {
        if let Some(panel) = panel {
            if panel.months != frame.months {
                return Err(EconError::DimensionMismatch(format!(
                    "{name} panel months do not match the macro frame"
                )));
            }
        }
    }
    if cfg.blocks < 2 {
        return Err(EconError::DomainError("walk-forward needs at least 2 blocks".into()));
    }
    let n = frame.n_rows();
    let (p, lag_selection) = match cfg.lag {
        Some(p) if p >= 1 => (p, None),
        Some(_) => return Err(EconError::DomainError("lag must be at least 1".into())),
        None => {
            let sel = select_lag(&frame.system_matrix(), cfg.p_max)?;
            (sel.lag, Some(sel))
        }
    };
    let tone = filtered
        .column_index(&cfg.tone_column)
        .map(|j| filtered.values.columns(j, 1).into_owned());
    let data = Data {
        y: frame.target_series(),
        controls: frame.control_matrix(),
        filtered,
        unfiltered,
        tone,
        p,
        n_components: cfg.n_components,
    };

    let folds = walk_forward_folds(n, cfg.blocks);
    let mut variant_order: Vec<Variant> = variants.to_vec();
    variant_order.sort();
    variant_order.dedup();

    let mut results = Vec::with_capacity(variant_order.len());
    let mut final_pls = None;
    let mut component_p_values = Vec::new();
    for &v in &variant_order {
        let mut forecasts = Vec::new();
        for fold in &folds {
            if fold.train_end < p + 3 {
                return Err(EconError::InsufficientData(format!(
                    "{v}: training window of {} rows is too short for lag {p}",
                    fold.train_end
                )));
            }
            let (z, _) = data.exogenous(v, fold.train_end)?;
            let x_train = ardl_design(&data.y, &z, p, p..fold.train_end);
            if x_train.nrows() <= x_train.ncols() {
                return Err(EconError::InsufficientData(format!(
                    "{v}: {} training rows for {} regressors",
                    x_train.nrows(),
                    x_train.ncols()
                )));
            }
            let y_train = data.y.rows(p, fold.train_end - p).into_owned();
            let fit = ols_lenient(&x_train, &y_train)?;
            let x_val = ardl_design(&data.y, &z, p, fold.validate_start..fold.validate_end);
            let pred = x_val * &fit.coefficients;
            for (i, t) in (fold.validate_start..fold.validate_end).enumerate() {
                forecasts.push(ForecastPoint {
                    month: frame.months[t],
                    actual: data.y[t],
                    predicted: pred[i],
                });
            }
        }
        let sse: f64 = forecasts.iter().map(|f| f.error().powi(2)).sum();
        let rmse = (sse / forecasts.len() as f64).sqrt();

        // Full-sample fit for coefficient significance.
        let (z, pls) = data.exogenous(v, n)?;
        let x_full = ardl_design(&data.y, &z, p, p..n);
        let y_full = data.y.rows(p, n - p).into_owned();
        let sentiment_start = 1 + p + p * data.controls.ncols();
        let sentiment_p_values = match ols(&x_full, &y_full) {
            Ok(fit) => fit
                .p_values()
                .map(|ps| ps.iter().skip(sentiment_start).copied().collect())
                .unwrap_or_default(),
            Err(EconError::SingularDesign(reason)) => {
                log::warn!("{v}: full-sample design is singular ({reason}); no significance counts");
                Vec::new()
            }
            Err(e) => return Err(e),
        };
        if v == Variant::Model {
            component_p_values = sentiment_p_values
                .chunks(p)
                .map(|c| c.iter().copied().fold(1.0, f64::min))
                .collect();
            final_pls = pls;
        }
        results.push(VariantResult {
            variant: v,
            rmse,
            forecasts,
            significance: SignificanceCounts::from_p_values(&sentiment_p_values),
            sentiment_p_values,
        });
    }

    let mut dm = Vec::new();
    if let Some(model) = results.iter().find(|r| r.variant == Variant::Model) {
        let em = model.errors();
        for r in results.iter().filter(|r| r.variant != Variant::Model) {
            dm.push(DmComparison {
                benchmark: r.variant,
                result: dm_test(&em, &r.errors(), 1)?,
            });
        }
    }

    Ok(ForecastReport {
        country: String::new(),
        variable: frame.target.clone(),
        lag: p,
        lag_selection,
        n_components: cfg.n_components,
        folds,
        variants: results,
        dm,
        final_pls,
        component_p_values,
    })
}
