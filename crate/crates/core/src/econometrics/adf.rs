//! Augmented Dickey-Fuller test, constant-only regression.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ols::ols;
use super::{EconError, Result};

/// Constant-case Dickey-Fuller critical values by sample size (1%, 5%, 10%).
/// The last row is the large-sample limit.
const CRITICAL_TABLE: [(f64, [f64; 3]); 6] = [
    (25.0, [-3.75, -3.00, -2.63]),
    (50.0, [-3.58, -2.93, -2.60]),
    (100.0, [-3.51, -2.89, -2.58]),
    (250.0, [-3.46, -2.88, -2.57]),
    (500.0, [-3.44, -2.87, -2.57]),
    (f64::INFINITY, [-3.43, -2.86, -2.57]),
];

/// Critical values at 1/5/10% for `nobs` observations, linear in 1/n.
pub fn critical_values(nobs: usize) -> [f64; 3] {
    let inv = 1.0 / nobs.max(1) as f64;
    let first = CRITICAL_TABLE[0];
    if inv >= 1.0 / first.0 {
        return first.1;
    }
    for w in CRITICAL_TABLE.windows(2) {
        let (n0, c0) = w[0];
        let (n1, c1) = w[1];
        let (i0, i1) = (1.0 / n0, 1.0 / n1);
        if inv <= i0 && inv >= i1 {
            let f = (inv - i1) / (i0 - i1);
            return [0, 1, 2].map(|k| c1[k] + f * (c0[k] - c1[k]));
        }
    }
    CRITICAL_TABLE[CRITICAL_TABLE.len() - 1].1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub t_stat: f64,
    pub used_lag: usize,
    pub nobs: usize,
    /// 1%, 5%, 10%.
    pub critical_values: [f64; 3],
    pub reject_at_5pct: bool,
}

impl AdfResult {
    pub fn reject_at(&self, level_index: usize) -> bool {
        self.t_stat < self.critical_values[level_index]
    }
}

pub fn min_length(max_lag: usize) -> usize {
    3 * max_lag + 10
}

/// Design for Δy_t on [1, y_{t-1}, Δy_{t-1..t-lag}] over rows t = first..
fn design(y: &[f64], dy: &[f64], lag: usize, first: usize) -> (DMatrix<f64>, DVector<f64>) {
    let rows: Vec<usize> = (first..dy.len()).collect();
    let x = DMatrix::from_fn(rows.len(), 2 + lag, |i, j| {
        let t = rows[i];
        match j {
            0 => 1.0,
            1 => y[t],
            _ => dy[t - (j - 1)],
        }
    });
    let resp = DVector::from_iterator(rows.len(), rows.iter().map(|&t| dy[t]));
    (x, resp)
}

/// ADF with the lag picked by AIC over `0..=max_lag` on a common sample,
/// then re-estimated on all rows available for that lag.
pub fn adf_test(series: &[f64], max_lag: usize) -> Result<AdfResult> {
    if series.len() < min_length(max_lag) {
        return Err(EconError::InsufficientData(format!(
            "ADF with max lag {max_lag} needs {} points, got {}",
            min_length(max_lag),
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(EconError::DomainError("series contains non-finite values".into()));
    }
    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    // dy[t] = y[t+1] - y[t], so the lagged level for dy[t] is y[t].
    let singular = |e: EconError| match e {
        EconError::SingularDesign(m) => EconError::DegenerateSeries(m),
        other => other,
    };

    let mut best = (f64::INFINITY, 0usize);
    for lag in 0..=max_lag {
        let (x, resp) = design(series, &dy, lag, max_lag);
        let fit = ols(&x, &resp).map_err(singular)?;
        let n = fit.nobs as f64;
        if fit.rss <= 0.0 {
            return Err(EconError::DegenerateSeries("perfect fit in ADF regression".into()));
        }
        let aic = n * (fit.rss / n).ln() + 2.0 * fit.nparams as f64;
        if aic < best.0 {
            best = (aic, lag);
        }
    }
    let lag = best.1;
    let (x, resp) = design(series, &dy, lag, lag);
    let fit = ols(&x, &resp).map_err(singular)?;
    let t = fit
        .t_stats()
        .ok_or_else(|| EconError::DegenerateSeries("no residual degrees of freedom".into()))?;
    let t_stat = t[1];
    let crit = critical_values(fit.nobs);
    Ok(AdfResult {
        t_stat,
        used_lag: lag,
        nobs: fit.nobs,
        critical_values: crit,
        reject_at_5pct: t_stat < crit[1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn critical_value_table() {
        assert_eq!(critical_values(25), [-3.75, -3.00, -2.63]);
        assert_eq!(critical_values(10), [-3.75, -3.00, -2.63]);
        let c = critical_values(1_000_000);
        assert!((c[1] + 2.86).abs() < 1e-3);
        let c = critical_values(100);
        assert!((c[1] + 2.89).abs() < 1e-12);
        let c = critical_values(240);
        assert!(c[1] < -2.879 && c[1] > -2.89);
    }

    #[test]
    fn white_noise_rejects() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..240).map(|_| StandardNormal.sample(&mut rng)).collect();
        let r = adf_test(&x, 4).unwrap();
        assert!(r.reject_at_5pct, "{r:?}");
    }

    #[test]
    fn constant_series_is_degenerate() {
        let x = vec![3.0; 60];
        assert!(matches!(adf_test(&x, 2), Err(EconError::DegenerateSeries(_))));
    }

    #[test]
    fn too_short() {
        assert!(matches!(adf_test(&[1.0; 15], 2), Err(EconError::InsufficientData(_))));
    }
}
