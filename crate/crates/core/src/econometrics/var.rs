//! Vector autoregression `Y_t = v + A_1 Y_{t-1} + ... + A_p Y_{t-p} + u_t`,
//! estimated equation by equation with OLS.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ols::ols_multi;
use super::{EconError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarModel {
    pub lag: usize,
    pub intercept: DVector<f64>,
    /// `coefficients[i]` is A_{i+1}, K×K, row = equation.
    pub coefficients: Vec<DMatrix<f64>>,
    /// (T - p) × K, aligned with rows `first_row..T` of the input.
    pub residuals: DMatrix<f64>,
    pub fitted: DMatrix<f64>,
    pub first_row: usize,
    /// ML residual covariance (divided by the number of observations).
    pub sigma: DMatrix<f64>,
    pub log_det_sigma: f64,
    pub aic: f64,
    pub bic: f64,
}

impl VarModel {
    pub fn n_vars(&self) -> usize {
        self.intercept.len()
    }

    pub fn nobs(&self) -> usize {
        self.residuals.nrows()
    }

    /// Residuals of one equation.
    pub fn equation_residuals(&self, eq: usize) -> DVector<f64> {
        self.residuals.column(eq).into_owned()
    }

    /// One-step forecast given the last `p` observations (most recent last).
    pub fn forecast_one(&self, history: &DMatrix<f64>) -> DVector<f64> {
        let t = history.nrows();
        let mut out = self.intercept.clone();
        for (i, a) in self.coefficients.iter().enumerate() {
            let row = history.row(t - 1 - i).transpose();
            out += a * row;
        }
        out
    }
}

/// Stacked regressors [1, Y_{t-1}, ..., Y_{t-p}] for rows t = first..T.
pub fn var_design(data: &DMatrix<f64>, p: usize, first: usize) -> DMatrix<f64> {
    let (t_total, k) = data.shape();
    let n = t_total - first;
    DMatrix::from_fn(n, 1 + k * p, |i, j| {
        if j == 0 {
            1.0
        } else {
            let lag = (j - 1) / k + 1;
            let var = (j - 1) % k;
            data[(first + i - lag, var)]
        }
    })
}

/// Fit on all rows available for lag `p`.
pub fn fit_var(data: &DMatrix<f64>, p: usize) -> Result<VarModel> {
    fit_var_from(data, p, p)
}

/// Fit using rows `first..T` as the estimation sample (`first >= p`).
pub fn fit_var_from(data: &DMatrix<f64>, p: usize, first: usize) -> Result<VarModel> {
    let (t_total, k) = data.shape();
    if p == 0 {
        return Err(EconError::DomainError("VAR lag must be at least 1".into()));
    }
    if first < p || first >= t_total {
        return Err(EconError::DomainError(format!("bad sample start {first} for lag {p}")));
    }
    let n = t_total - first;
    if n <= k * p + 1 {
        return Err(EconError::InsufficientData(format!(
            "{n} observations cannot identify a {k}-variable VAR({p})"
        )));
    }
    let z = var_design(data, p, first);
    let y = data.rows(first, n).into_owned();
    let (coef, resid) = ols_multi(&z, &y)?;
    let fitted = &y - &resid;
    let intercept = coef.row(0).transpose();
    let coefficients = (0..p)
        .map(|lag| coef.rows(1 + lag * k, k).transpose())
        .collect();
    let sigma = resid.transpose() * &resid / n as f64;
    let det = sigma.determinant();
    if det <= 0.0 || !det.is_finite() {
        return Err(EconError::SingularDesign("residual covariance is singular".into()));
    }
    let log_det_sigma = det.ln();
    let params = (k * k * p + k) as f64;
    let nf = n as f64;
    Ok(VarModel {
        lag: p,
        intercept,
        coefficients,
        residuals: resid,
        fitted,
        first_row: first,
        sigma,
        log_det_sigma,
        aic: log_det_sigma + 2.0 * params / nf,
        bic: log_det_sigma + nf.ln() * params / nf,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSelection {
    pub lag: usize,
    pub aic_lag: usize,
    pub bic_lag: usize,
    pub aic: Vec<f64>,
    pub bic: Vec<f64>,
    pub log_det_sigma: Vec<f64>,
}

/// Fit p = 1..=p_max on the common sample starting at row `p_max`; the
/// smaller of the AIC- and BIC-minimizing lags wins.
pub fn select_lag(data: &DMatrix<f64>, p_max: usize) -> Result<LagSelection> {
    if p_max == 0 {
        return Err(EconError::DomainError("p_max must be at least 1".into()));
    }
    let mut aic = Vec::with_capacity(p_max);
    let mut bic = Vec::with_capacity(p_max);
    let mut ld = Vec::with_capacity(p_max);
    for p in 1..=p_max {
        let m = fit_var_from(data, p, p_max)?;
        aic.push(m.aic);
        bic.push(m.bic);
        ld.push(m.log_det_sigma);
    }
    let argmin = |v: &[f64]| {
        v.iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, &x)| if x < best.1 { (i, x) } else { best })
            .0
            + 1
    };
    let (aic_lag, bic_lag) = (argmin(&aic), argmin(&bic));
    if aic_lag != bic_lag {
        log::info!("AIC picks lag {aic_lag}, BIC picks {bic_lag}; using {}", aic_lag.min(bic_lag));
    }
    Ok(LagSelection {
        lag: aic_lag.min(bic_lag),
        aic_lag,
        bic_lag,
        aic,
        bic,
        log_det_sigma: ld,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    pub(crate) fn simulate(a: &[DMatrix<f64>], t: usize, sd: f64, seed: u64) -> DMatrix<f64> {
        let k = a[0].nrows();
        let burn = 100;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sd).unwrap();
        let mut y = DMatrix::zeros(t + burn, k);
        for s in a.len()..t + burn {
            let mut v = DVector::from_fn(k, |_, _| noise.sample(&mut rng));
            for (i, ai) in a.iter().enumerate() {
                v += ai * y.row(s - 1 - i).transpose();
            }
            y.set_row(s, &v.transpose());
        }
        y.rows(burn, t).into_owned()
    }

    #[test]
    fn recovers_var1() {
        let a = DMatrix::from_row_slice(3, 3, &[0.5, 0.1, 0.0, 0.0, 0.4, 0.2, 0.1, 0.0, 0.3]);
        let y = simulate(std::slice::from_ref(&a), 500, 0.1, 12);
        let m = fit_var(&y, 1).unwrap();
        let err = (&m.coefficients[0] - &a).abs().max();
        assert!(err < 0.1, "max error {err}");
        assert_eq!(m.residuals.shape(), (499, 3));
    }

    #[test]
    fn residuals_orthogonal_to_regressors() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]);
        let y = simulate(&[a], 200, 1.0, 4);
        let m = fit_var(&y, 2).unwrap();
        let z = var_design(&y, 2, 2);
        let g = z.transpose() * &m.residuals;
        let scale = z.norm() * m.residuals.norm();
        assert!(g.abs().max() <= 1e-8 * scale);
    }

    #[test]
    fn log_likelihood_term_non_increasing() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]);
        let y = simulate(&[a], 150, 1.0, 5);
        let sel = select_lag(&y, 5).unwrap();
        for w in sel.log_det_sigma.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn selects_true_lag() {
        let a1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]);
        let ones = (0..100)
            .filter(|&s| select_lag(&simulate(std::slice::from_ref(&a1), 120, 1.0, 300 + s), 4).unwrap().lag == 1)
            .count();
        assert!(ones >= 90, "VAR(1) chose 1 in {ones}/100");

        let b1 = DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.1, 0.2]);
        let b2 = DMatrix::from_row_slice(2, 2, &[-0.5, 0.1, 0.0, 0.4]);
        let twos = (0..100)
            .filter(|&s| select_lag(&simulate(&[b1.clone(), b2.clone()], 120, 1.0, 500 + s), 4).unwrap().lag == 2)
            .count();
        assert!(twos >= 80, "VAR(2) chose 2 in {twos}/100");
    }

    #[test]
    fn p_max_one() {
        let a = DMatrix::from_row_slice(1, 1, &[0.5]);
        let y = simulate(&[a], 80, 1.0, 6);
        assert_eq!(select_lag(&y, 1).unwrap().lag, 1);
    }

    #[test]
    fn too_short_is_an_error() {
        let y = DMatrix::from_fn(5, 3, |i, j| (i * 3 + j) as f64);
        assert!(fit_var(&y, 2).is_err());
    }
}
