//! Macro series ingestion: `month,value` CSVs aligned onto the config range.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::econometrics::{adf_test, TimeSeriesFrame};
use crate::month::YearMonth;

/// Read one series. Every row must carry a `YYYY-MM` month and a finite value.
pub fn read_series(path: &Path, series: &str) -> Result<BTreeMap<YearMonth, f64>> {
    let file = std::fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    read_series_from(file, series)
}

pub fn read_series_from<R: std::io::Read>(reader: R, series: &str) -> Result<BTreeMap<YearMonth, f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "month" || &headers[1] != "value" {
        return Err(PipelineError::Config(format!("{series}: header must be `month,value`")));
    }
    let mut out = BTreeMap::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let non_numeric = |value: &str| PipelineError::NonNumeric {
            series: series.to_string(),
            row: i + 1,
            value: value.to_string(),
        };
        let month: YearMonth = row[0].parse().map_err(|_| non_numeric(&row[0]))?;
        let value: f64 = row[1].parse().map_err(|_| non_numeric(&row[1]))?;
        if !value.is_finite() {
            return Err(non_numeric(&row[1]));
        }
        if out.insert(month, value).is_some() {
            return Err(PipelineError::Config(format!("{series}: month {month} appears twice")));
        }
    }
    Ok(out)
}

/// Values for each month of `months`, or MissingMonth naming the first gap.
pub fn align(series: &BTreeMap<YearMonth, f64>, months: &[YearMonth], name: &str) -> Result<Vec<f64>> {
    months
        .iter()
        .map(|m| {
            series.get(m).copied().ok_or_else(|| PipelineError::MissingMonth {
                series: name.to_string(),
                month: m.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfScreen {
    pub series: String,
    pub first: YearMonth,
    pub last: YearMonth,
    pub t_stat: Option<f64>,
    pub used_lag: Option<usize>,
    pub stationary_at_5pct: bool,
    pub note: Option<String>,
}

/// ADF screening over the whole history a file provides. A failed or
/// impossible test only logs a warning.
pub fn screen(series: &BTreeMap<YearMonth, f64>, name: &str, max_lag: usize) -> AdfScreen {
    let months: Vec<YearMonth> = series.keys().copied().collect();
    let (first, last) = (months[0], months[months.len() - 1]);
    let contiguous = months.windows(2).all(|w| w[1] == w[0].succ());
    let values: Vec<f64> = series.values().copied().collect();
    let mut out = AdfScreen {
        series: name.to_string(),
        first,
        last,
        t_stat: None,
        used_lag: None,
        stationary_at_5pct: false,
        note: None,
    };
    if !contiguous {
        out.note = Some("history has gaps; not screened".into());
    } else {
        match adf_test(&values, max_lag) {
            Ok(r) => {
                out.t_stat = Some(r.t_stat);
                out.used_lag = Some(r.used_lag);
                out.stationary_at_5pct = r.reject_at_5pct;
            }
            Err(e) => out.note = Some(e.to_string()),
        }
    }
    log::info!("ADF screening of {name} over {first}..{last}");
    if !out.stationary_at_5pct {
        log::warn!(
            "{name}: unit root not rejected at 5% ({})",
            out.note.as_deref().unwrap_or("t-statistic above the critical value")
        );
    }
    out
}

/// Frame over `months` with the target first, then the controls.
pub fn ingest_macro(
    variable: &str,
    target: &Path,
    controls: &[(String, &Path)],
    months: &[YearMonth],
    adf_max_lag: usize,
) -> Result<(TimeSeriesFrame, Vec<AdfScreen>)> {
    let mut columns = vec![variable.to_string()];
    let mut cols = Vec::new();
    let mut screens = Vec::new();
    for (name, path) in std::iter::once((variable.to_string(), target)).chain(controls.iter().map(|(n, p)| (n.clone(), *p))) {
        let s = read_series(path, &name).map_err(|e| e.context(path.display().to_string()))?;
        cols.push(align(&s, months, &name)?);
        screens.push(screen(&s, &name, adf_max_lag));
        if name != variable {
            columns.push(name);
        }
    }
    let data = DMatrix::from_fn(months.len(), cols.len(), |i, j| cols[j][i]);
    let controls = columns[1..].to_vec();
    let frame = TimeSeriesFrame::new(months.to_vec(), columns, data, variable, controls)?;
    Ok((frame, screens))
}

/// CSV with `month` then one column per frame column.
pub fn save_frame(frame: &TimeSeriesFrame, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["month".to_string()];
    header.extend(frame.columns.iter().cloned());
    w.write_record(&header)?;
    for (i, m) in frame.months.iter().enumerate() {
        let mut row = vec![m.to_string()];
        row.extend(frame.data.row(i).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of `save_frame`; the first column is the target.
pub fn load_frame(path: &Path) -> Result<TimeSeriesFrame> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let columns: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if columns.is_empty() {
        return Err(PipelineError::Config(format!("{}: no columns", path.display())));
    }
    let mut months = Vec::new();
    let mut values = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |v: &str| PipelineError::NonNumeric {
            series: path.display().to_string(),
            row: i + 1,
            value: v.to_string(),
        };
        months.push(row[0].parse::<YearMonth>().map_err(|_| bad(&row[0]))?);
        for v in row.iter().skip(1) {
            values.push(v.parse::<f64>().map_err(|_| bad(v))?);
        }
    }
    let data = DMatrix::from_row_slice(months.len(), columns.len(), &values);
    let target = columns[0].clone();
    let controls = columns[1..].to_vec();
    Ok(TimeSeriesFrame::new(months, columns, data, target, controls)?)
}
