//! Location filtering, monthly aggregation and panel construction.
//!
//! Count-based GCAM scores (`c*` keys) are normalized per record by the word
//! count before averaging; value-based scores (`v*` keys and the average tone)
//! are averaged directly over the records that carry them. Within-month
//! dispersion uses the population standard deviation.

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gkg::GkgRecord;
use crate::month::YearMonth;

pub const TONE_SCORE: &str = "tone";
pub const ARTICLE_COUNT: &str = "article_count";
pub const WORD_COUNT: &str = "word_count";
pub const WORD_COUNT_KEY: &str = "wc";

#[derive(Debug, Error)]
pub enum AggregateError {
    #[error("no records for month {0}")]
    EmptyMonth(YearMonth),
    #[error("records from {found} passed to aggregation for {expected}")]
    MixedMonths { expected: YearMonth, found: YearMonth },
    #[error("month {0} missing from the aggregation range")]
    MissingMonth(YearMonth),
    #[error("need at least {needed} months, have {have}")]
    InsufficientHistory { needed: usize, have: usize },
    #[error("panel file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = AggregateError> = std::result::Result<T, E>;

/// Target country code → country codes whose news feeds its panel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryGroupMap(pub BTreeMap<String, BTreeSet<String>>);

/// The ten modelled economies, by GKG (FIPS 10-4) country code.
pub const GLOBAL_GROUP: [&str; 10] = ["US", "UK", "GM", "JA", "BR", "MX", "PL", "NO", "TU", "KS"];
/// Western Europe in FIPS 10-4 codes (UK, DE, FR, IT, ES, NL, CH, SE, NO, BE, AT, DK, FI, IE, PT).
pub const WESTERN_EUROPE: [&str; 15] = [
    "UK", "GM", "FR", "IT", "SP", "NL", "SZ", "SW", "NO", "BE", "AU", "DA", "FI", "EI", "PO",
];

impl CountryGroupMap {
    pub fn get(&self, target: &str) -> Option<&BTreeSet<String>> {
        self.0.get(target)
    }
}

impl Default for CountryGroupMap {
    fn default() -> Self {
        let set = |codes: &[&str]| codes.iter().map(|c| c.to_string()).collect::<BTreeSet<_>>();
        let mut map = BTreeMap::new();
        for c in ["US", "UK", "GM", "JA", "BR", "MX"] {
            map.insert(c.to_string(), set(&GLOBAL_GROUP));
        }
        for c in ["PL", "NO", "TU"] {
            let mut s = set(&WESTERN_EUROPE);
            s.insert(c.to_string());
            map.insert(c.to_string(), s);
        }
        map.insert("KS".to_string(), set(&["KS", "CH"]));
        CountryGroupMap(map)
    }
}

/// Keep records mentioning at least one country of `group`.
pub fn location_filter<'r>(
    records: impl IntoIterator<Item = &'r GkgRecord>,
    group: &BTreeSet<String>,
) -> Vec<&'r GkgRecord> {
    records
        .into_iter()
        .filter(|r| r.country_codes().any(|c| group.contains(c)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    /// Word counts, normalized by article length.
    Count,
    /// Computed scores, averaged as-is.
    Value,
}

/// Classify a GCAM key. The word count itself is not a score.
pub fn score_kind(key: &str) -> Option<ScoreKind> {
    if key == WORD_COUNT_KEY {
        return None;
    }
    let mut chars = key.chars();
    match (chars.next(), chars.next()) {
        (Some('c'), Some(d)) if d.is_ascii_digit() => Some(ScoreKind::Count),
        _ => Some(ScoreKind::Value),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub kind: ScoreKind,
    pub mean: f64,
    pub std: f64,
    /// Records contributing to the mean.
    pub observations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyAggregate {
    pub month: YearMonth,
    pub scores: BTreeMap<String, ScoreSummary>,
    pub article_count: u64,
    pub total_word_count: u64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregate one month of records. `include` restricts which GCAM keys count.
pub fn aggregate_month(
    month: YearMonth,
    records: &[&GkgRecord],
    include: Option<&BTreeSet<String>>,
) -> Result<MonthlyAggregate> {
    if records.is_empty() {
        return Err(AggregateError::EmptyMonth(month));
    }
    for r in records {
        let m = YearMonth::of(r.date());
        if m != month {
            return Err(AggregateError::MixedMonths {
                expected: month,
                found: m,
            });
        }
    }
    let wanted = |k: &str| include.is_none_or(|set| set.contains(k));

    let mut keys: BTreeMap<&str, ScoreKind> = BTreeMap::new();
    for r in records {
        for e in &r.gcam {
            if let Some(kind) = score_kind(&e.key) {
                if wanted(&e.key) {
                    keys.insert(e.key.as_str(), kind);
                }
            }
        }
    }

    let mut scores = BTreeMap::new();
    let tones: Vec<f64> = records.iter().map(|r| r.tone.average_tone).collect();
    let (mean, std) = mean_std(&tones);
    scores.insert(
        TONE_SCORE.to_string(),
        ScoreSummary {
            kind: ScoreKind::Value,
            mean,
            std,
            observations: tones.len() as u64,
        },
    );

    let mut buf = Vec::with_capacity(records.len());
    for (key, kind) in keys {
        buf.clear();
        for r in records {
            let v = r.gcam_value(key);
            match kind {
                ScoreKind::Count => {
                    let rate = match (v, r.word_count) {
                        (Some(c), wc) if wc > 0 => c / wc as f64,
                        _ => 0.0,
                    };
                    buf.push(rate);
                }
                ScoreKind::Value => buf.extend(v),
            }
        }
        let (mean, std) = mean_std(&buf);
        scores.insert(
            key.to_string(),
            ScoreSummary {
                kind,
                mean,
                std,
                observations: buf.len() as u64,
            },
        );
    }

    Ok(MonthlyAggregate {
        month,
        scores,
        article_count: records.len() as u64,
        total_word_count: records.iter().map(|r| r.word_count).sum(),
    })
}

/// Group records by calendar month and aggregate each month.
pub fn aggregate_by_month<'r>(
    records: impl IntoIterator<Item = &'r GkgRecord>,
    include: Option<&BTreeSet<String>>,
) -> Result<Vec<MonthlyAggregate>> {
    let mut by_month: BTreeMap<YearMonth, Vec<&GkgRecord>> = BTreeMap::new();
    for r in records {
        by_month.entry(YearMonth::of(r.date())).or_default().push(r);
    }
    by_month
        .into_iter()
        .map(|(m, recs)| aggregate_month(m, &recs, include))
        .collect()
}

/// Uniform sample of at most `n` records per calendar year, in input order.
pub fn sample_unfiltered<'r>(records: &[&'r GkgRecord], n: usize, seed: u64) -> Vec<&'r GkgRecord> {
    let mut by_year: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_year.entry(YearMonth::of(r.date()).year).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::new();
    for (_, idx) in by_year {
        if idx.len() <= n {
            chosen.extend(idx);
        } else {
            chosen.extend(
                rand::seq::index::sample(&mut rng, idx.len(), n)
                    .into_iter()
                    .map(|j| idx[j]),
            );
        }
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| records[i]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelMetadata {
    /// Month whose levels anchor the differenced series.
    pub base_month: YearMonth,
    pub initial_levels: Vec<f64>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Rows (from the top) the standardization statistics were fit on.
    pub fit_rows: usize,
    pub dropped_all_zero: Vec<String>,
    pub dropped_zero_variance: Vec<String>,
    pub std_form: String,
}

/// Monthly changes of the aggregated scores, standardized per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentPanel {
    pub months: Vec<YearMonth>,
    pub columns: Vec<String>,
    pub values: DMatrix<f64>,
    pub meta: PanelMetadata,
}

pub fn mean_column_name(score: &str) -> String {
    format!("{score}_mean")
}

pub fn std_column_name(score: &str) -> String {
    format!("{score}_std")
}

/// Score name behind a panel column (`joy_mean` → `joy`).
pub fn base_score_name(column: &str) -> &str {
    column
        .strip_suffix("_mean")
        .or_else(|| column.strip_suffix("_std"))
        .unwrap_or(column)
}

pub const MIN_PANEL_MONTHS: usize = 3;

fn is_zero_variance(col: &[f64]) -> bool {
    let (mean, std) = mean_std(col);
    let scale = col.iter().fold(mean.abs(), |m, v| m.max(v.abs()));
    std <= 1e-12 * (1.0 + scale)
}

/// Build a panel over `start..=end` from monthly aggregates.
///
/// All-zero columns are dropped, the rest first-differenced; columns with no
/// variation after differencing are dropped too, then each column is
/// standardized over all rows.
pub fn build_panel(aggregates: &[MonthlyAggregate], start: YearMonth, end: YearMonth) -> Result<SentimentPanel> {
    let by_month: BTreeMap<YearMonth, &MonthlyAggregate> = aggregates.iter().map(|a| (a.month, a)).collect();
    let months = YearMonth::range(start, end);
    if months.len() < MIN_PANEL_MONTHS {
        return Err(AggregateError::InsufficientHistory {
            needed: MIN_PANEL_MONTHS,
            have: months.len(),
        });
    }
    let mut rows = Vec::with_capacity(months.len());
    for m in &months {
        rows.push(*by_month.get(m).ok_or(AggregateError::MissingMonth(*m))?);
    }

    let scores: BTreeSet<&str> = rows.iter().flat_map(|a| a.scores.keys().map(String::as_str)).collect();
    let mut columns = Vec::with_capacity(scores.len() * 2 + 2);
    let mut levels: Vec<Vec<f64>> = Vec::with_capacity(columns.capacity());
    for s in &scores {
        let get = |a: &MonthlyAggregate, f: fn(&ScoreSummary) -> f64| a.scores.get(*s).map(f).unwrap_or(0.0);
        columns.push(mean_column_name(s));
        levels.push(rows.iter().map(|a| get(a, |x| x.mean)).collect());
        columns.push(std_column_name(s));
        levels.push(rows.iter().map(|a| get(a, |x| x.std)).collect());
    }
    columns.push(ARTICLE_COUNT.to_string());
    levels.push(rows.iter().map(|a| a.article_count as f64).collect());
    columns.push(WORD_COUNT.to_string());
    levels.push(rows.iter().map(|a| a.total_word_count as f64).collect());

    panel_from_levels(&months, columns, levels)
}

/// Differencing, pruning and standardization of raw monthly levels
/// (`levels[j]` is column `j`, one entry per month).
pub fn panel_from_levels(months: &[YearMonth], columns: Vec<String>, levels: Vec<Vec<f64>>) -> Result<SentimentPanel> {
    if months.len() < MIN_PANEL_MONTHS {
        return Err(AggregateError::InsufficientHistory {
            needed: MIN_PANEL_MONTHS,
            have: months.len(),
        });
    }
    let mut kept_cols = Vec::new();
    let mut kept_levels = Vec::new();
    let mut diffs = Vec::new();
    let mut dropped_all_zero = Vec::new();
    let mut dropped_zero_variance = Vec::new();
    for (name, lv) in columns.into_iter().zip(levels) {
        if lv.iter().all(|v| *v == 0.0) {
            dropped_all_zero.push(name);
            continue;
        }
        let d: Vec<f64> = lv.windows(2).map(|w| w[1] - w[0]).collect();
        if is_zero_variance(&d) {
            dropped_zero_variance.push(name);
            continue;
        }
        kept_cols.push(name);
        kept_levels.push(lv[0]);
        diffs.push(d);
    }
    let t = months.len() - 1;
    let raw = DMatrix::from_fn(t, diffs.len(), |i, j| diffs[j][i]);
    let (values, means, scales) = standardize(&raw, t);
    Ok(SentimentPanel {
        months: months[1..].to_vec(),
        columns: kept_cols,
        values,
        meta: PanelMetadata {
            base_month: months[0],
            initial_levels: kept_levels,
            means,
            scales,
            fit_rows: t,
            dropped_all_zero,
            dropped_zero_variance,
            std_form: "population".to_string(),
        },
    })
}

/// Standardize each column with mean and population std of the first `fit_rows` rows.
/// Columns constant on the window get scale 1.
pub fn standardize(raw: &DMatrix<f64>, fit_rows: usize) -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let mut out = raw.clone();
    let mut means = Vec::with_capacity(raw.ncols());
    let mut scales = Vec::with_capacity(raw.ncols());
    for j in 0..raw.ncols() {
        let window: Vec<f64> = raw.column(j).iter().take(fit_rows).copied().collect();
        let (mean, std) = mean_std(&window);
        let scale = if std > 0.0 && std.is_finite() { std } else { 1.0 };
        for i in 0..raw.nrows() {
            out[(i, j)] = (raw[(i, j)] - mean) / scale;
        }
        means.push(mean);
        scales.push(scale);
    }
    (out, means, scales)
}

impl SentimentPanel {
    pub fn n_rows(&self) -> usize {
        self.months.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Month-over-month changes before standardization.
    pub fn differenced(&self) -> DMatrix<f64> {
        let mut out = self.values.clone();
        for j in 0..out.ncols() {
            let (m, s) = (self.meta.means[j], self.meta.scales[j]);
            for i in 0..out.nrows() {
                out[(i, j)] = out[(i, j)] * s + m;
            }
        }
        out
    }

    /// Undifferenced levels, base month first.
    pub fn levels(&self) -> DMatrix<f64> {
        let d = self.differenced();
        let mut out = DMatrix::zeros(d.nrows() + 1, d.ncols());
        for j in 0..d.ncols() {
            let mut acc = self.meta.initial_levels[j];
            out[(0, j)] = acc;
            for i in 0..d.nrows() {
                acc += d[(i, j)];
                out[(i + 1, j)] = acc;
            }
        }
        out
    }

    /// Re-fit the standardization on the first `fit_rows` rows only.
    pub fn restandardized(&self, fit_rows: usize) -> SentimentPanel {
        let (values, means, scales) = standardize(&self.differenced(), fit_rows);
        let mut meta = self.meta.clone();
        meta.means = means;
        meta.scales = scales;
        meta.fit_rows = fit_rows;
        SentimentPanel {
            months: self.months.clone(),
            columns: self.columns.clone(),
            values,
            meta,
        }
    }

    /// Keep only rows whose month lies in `start..=end`.
    pub fn slice_months(&self, start: YearMonth, end: YearMonth) -> SentimentPanel {
        let idx: Vec<usize> = (0..self.n_rows())
            .filter(|&i| self.months[i] >= start && self.months[i] <= end)
            .collect();
        SentimentPanel {
            months: idx.iter().map(|&i| self.months[i]).collect(),
            columns: self.columns.clone(),
            values: self.values.select_rows(idx.iter()),
            meta: self.meta.clone(),
        }
    }

    /// CSV: `month` followed by one column per score.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["month".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (i, m) in self.months.iter().enumerate() {
            let mut row = vec![m.to_string()];
            row.extend(self.values.row(i).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, csv_path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(csv_path)?)?;
        std::fs::write(sidecar_path(csv_path), serde_json::to_vec_pretty(&self.meta)?)?;
        Ok(())
    }

    pub fn load(csv_path: &Path) -> Result<SentimentPanel> {
        let meta: PanelMetadata = serde_json::from_slice(&std::fs::read(sidecar_path(csv_path))?)?;
        let (months, columns, values) = read_panel_csv(std::fs::File::open(csv_path)?)?;
        if meta.means.len() != columns.len() {
            return Err(AggregateError::Format(format!(
                "metadata lists {} columns, CSV has {}",
                meta.means.len(),
                columns.len()
            )));
        }
        Ok(SentimentPanel {
            months,
            columns,
            values,
            meta,
        })
    }
}

pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("meta.json")
}

type PanelParts = (Vec<YearMonth>, Vec<String>, DMatrix<f64>);

pub fn read_panel_csv<R: io::Read>(reader: R) -> Result<PanelParts> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("month") {
        return Err(AggregateError::Format("first column must be `month`".into()));
    }
    let columns: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut months = Vec::new();
    let mut data = Vec::new();
    for row in rdr.records() {
        let row = row?;
        months.push(row[0].parse().map_err(|e: crate::month::BadMonth| AggregateError::Format(e.to_string()))?);
        for v in row.iter().skip(1) {
            let x: f64 = v
                .parse()
                .map_err(|_| AggregateError::Format(format!("non-numeric cell `{v}`")))?;
            data.push(x);
        }
    }
    let values = DMatrix::from_row_slice(months.len(), columns.len(), &data);
    Ok((months, columns, values))
}
