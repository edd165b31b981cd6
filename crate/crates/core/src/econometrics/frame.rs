use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{EconError, Result};
use crate::month::YearMonth;

/// Named monthly series on a regular grid, with one target and its controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesFrame {
    pub months: Vec<YearMonth>,
    pub columns: Vec<String>,
    /// months × columns.
    pub data: DMatrix<f64>,
    pub target: String,
    pub controls: Vec<String>,
}

impl TimeSeriesFrame {
    pub fn new(
        months: Vec<YearMonth>,
        columns: Vec<String>,
        data: DMatrix<f64>,
        target: impl Into<String>,
        controls: Vec<String>,
    ) -> Result<Self> {
        let target = target.into();
        if data.shape() != (months.len(), columns.len()) {
            return Err(EconError::DimensionMismatch(format!(
                "{}×{} data for {} months and {} columns",
                data.nrows(),
                data.ncols(),
                months.len(),
                columns.len()
            )));
        }
        for w in months.windows(2) {
            if w[1] != w[0].succ() {
                return Err(EconError::DomainError(format!("months {} and {} are not consecutive", w[0], w[1])));
            }
        }
        for name in std::iter::once(&target).chain(&controls) {
            if !columns.contains(name) {
                return Err(EconError::DomainError(format!("no column named {name}")));
            }
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos % months.len(), pos / months.len());
            return Err(EconError::DomainError(format!("non-finite value in {} at {}", columns[j], months[i])));
        }
        Ok(TimeSeriesFrame {
            months,
            columns,
            data,
            target,
            controls,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.months.len()
    }

    pub fn column(&self, name: &str) -> Option<DVector<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.data.column(j).into_owned())
    }

    pub fn target_series(&self) -> DVector<f64> {
        self.column(&self.target).expect("validated target column")
    }

    /// months × controls.
    pub fn control_matrix(&self) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = self
            .controls
            .iter()
            .map(|c| self.column(c).expect("validated control column"))
            .collect();
        DMatrix::from_fn(self.n_rows(), cols.len(), |i, j| cols[j][i])
    }

    /// Target followed by controls, as used for lag selection.
    pub fn system_matrix(&self) -> DMatrix<f64> {
        let y = self.target_series();
        let z = self.control_matrix();
        DMatrix::from_fn(self.n_rows(), 1 + z.ncols(), |i, j| if j == 0 { y[i] } else { z[(i, j - 1)] })
    }

    /// Rows whose month lies in `start..=end`.
    pub fn slice_months(&self, start: YearMonth, end: YearMonth) -> Result<Self> {
        let idx: Vec<usize> = (0..self.n_rows())
            .filter(|&i| self.months[i] >= start && self.months[i] <= end)
            .collect();
        TimeSeriesFrame::new(
            idx.iter().map(|&i| self.months[i]).collect(),
            self.columns.clone(),
            self.data.select_rows(idx.iter()),
            self.target.clone(),
            self.controls.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn months(n: usize) -> Vec<YearMonth> {
        let start: YearMonth = "2019-11".parse().unwrap();
        YearMonth::range(start, (0..n - 1).fold(start, |m, _| m.succ()))
    }

    #[test]
    fn validates_grid_and_columns() {
        let cols = vec!["ip".to_string(), "oil".to_string()];
        let data = DMatrix::from_fn(4, 2, |i, j| (i + j) as f64);
        let f = TimeSeriesFrame::new(months(4), cols.clone(), data.clone(), "ip", vec!["oil".into()]).unwrap();
        assert_eq!(f.system_matrix(), data);
        assert_eq!(f.control_matrix().ncols(), 1);
        let mut gap = months(5);
        gap.remove(2);
        assert!(TimeSeriesFrame::new(gap, cols.clone(), data.clone(), "ip", vec![]).is_err());
        assert!(TimeSeriesFrame::new(months(4), cols.clone(), data.clone(), "cpi", vec![]).is_err());
        let mut bad = data;
        bad[(1, 1)] = f64::NAN;
        assert!(TimeSeriesFrame::new(months(4), cols, bad, "ip", vec![]).is_err());
    }
}
