//! Least squares via Householder QR, with explicit rank checks.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{EconError, Result};

/// Relative size below which an R diagonal marks a dependent column.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: DVector<f64>,
    pub fitted: DVector<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
    pub nobs: usize,
    pub nparams: usize,
    /// Homoskedastic standard errors; `None` without residual degrees of freedom.
    pub std_errors: Option<DVector<f64>>,
}

impl OlsFit {
    pub fn df_resid(&self) -> usize {
        self.nobs.saturating_sub(self.nparams)
    }

    pub fn t_stats(&self) -> Option<DVector<f64>> {
        let se = self.std_errors.as_ref()?;
        Some(self.coefficients.zip_map(se, |b, s| b / s))
    }

    /// Two-sided p-values from Student-t with `n - k` degrees of freedom.
    pub fn p_values(&self) -> Option<DVector<f64>> {
        let t = self.t_stats()?;
        let dist = StudentsT::new(0.0, 1.0, self.df_resid() as f64).ok()?;
        Some(t.map(|x| if x.is_finite() { 2.0 * dist.sf(x.abs()) } else { 0.0 }))
    }
}

/// Column indices whose R diagonal is negligible relative to the column norm.
fn dependent_columns(x: &DMatrix<f64>, r: &DMatrix<f64>) -> Vec<usize> {
    (0..x.ncols())
        .filter(|&j| {
            let norm = x.column(j).norm();
            norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * norm
        })
        .collect()
}

/// OLS of `y` on the columns of `x` (include an intercept column yourself).
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(EconError::DimensionMismatch(format!("design has {n} rows, response {}", y.len())));
    }
    if n < k {
        return Err(EconError::SingularDesign(format!("{n} observations for {k} regressors")));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let dep = dependent_columns(x, &r);
    if !dep.is_empty() {
        return Err(EconError::SingularDesign(format!("collinear regressor columns {dep:?}")));
    }
    let qty = qr.q().transpose() * y;
    let coefficients = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| EconError::SingularDesign("triangular solve failed".into()))?;
    Ok(finish(x, y, coefficients, Some(&r)))
}

/// OLS that tolerates rank deficiency: columns lying in the span of earlier
/// columns get a zero coefficient and the rest are fit exactly.
pub fn ols_lenient(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    match ols(x, y) {
        Err(EconError::SingularDesign(_)) if x.nrows() >= x.ncols() => {
            let r = x.clone().qr().r();
            let dep = dependent_columns(x, &r);
            let keep: Vec<usize> = (0..x.ncols()).filter(|j| !dep.contains(j)).collect();
            let mut coefficients = DVector::zeros(x.ncols());
            if !keep.is_empty() {
                let sub = ols(&x.select_columns(keep.iter()), y)?;
                for (c, &j) in sub.coefficients.iter().zip(&keep) {
                    coefficients[j] = *c;
                }
            }
            Ok(finish(x, y, coefficients, None))
        }
        other => other,
    }
}

fn finish(x: &DMatrix<f64>, y: &DVector<f64>, coefficients: DVector<f64>, r: Option<&DMatrix<f64>>) -> OlsFit {
    let fitted = x * &coefficients;
    let residuals = y - &fitted;
    let rss = residuals.norm_squared();
    let (n, k) = x.shape();
    let std_errors = match r {
        Some(r) if n > k => {
            let sigma2 = rss / (n - k) as f64;
            r.clone()
                .try_inverse()
                .map(|rinv| DVector::from_fn(k, |j, _| (sigma2 * rinv.row(j).norm_squared()).sqrt()))
        }
        _ => None,
    };
    OlsFit {
        coefficients,
        fitted,
        residuals,
        rss,
        nobs: n,
        nparams: k,
        std_errors,
    }
}

/// OLS with several responses sharing one design; returns k×m coefficients and n×m residuals.
pub fn ols_multi(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, k) = x.shape();
    if y.nrows() != n {
        return Err(EconError::DimensionMismatch(format!("design has {n} rows, responses {}", y.nrows())));
    }
    if n < k {
        return Err(EconError::SingularDesign(format!("{n} observations for {k} regressors")));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let dep = dependent_columns(x, &r);
    if !dep.is_empty() {
        return Err(EconError::SingularDesign(format!("collinear regressor columns {dep:?}")));
    }
    let qty = qr.q().transpose() * y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| EconError::SingularDesign("triangular solve failed".into()))?;
    let resid = y - x * &coef;
    Ok((coef, resid))
}

/// Prepend a column of ones.
pub fn with_intercept(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::from_element(x.nrows(), x.ncols() + 1, 1.0);
    out.view_mut((0, 1), (x.nrows(), x.ncols())).copy_from(x);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = with_intercept(&DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]));
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
        let fit = ols(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn collinear_design_is_singular() {
        let x = DMatrix::from_row_slice(4, 3, &[1.0, 1.0, 2.0, 1.0, 2.0, 4.0, 1.0, 3.0, 6.0, 1.0, 4.0, 8.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 5.0]);
        assert!(matches!(ols(&x, &y), Err(EconError::SingularDesign(_))));
        let fit = ols_lenient(&x, &y).unwrap();
        assert!(fit.std_errors.is_none());
        assert!(fit.rss.is_finite());
    }

    #[test]
    fn textbook_standard_errors() {
        // y = [1,2,2,4], x = [1,2,3,4]: slope 0.9, intercept 0, s² = 0.35, se(slope) = sqrt(0.35/5)
        let x = with_intercept(&DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]));
        let y = DVector::from_vec(vec![1.0, 2.0, 2.0, 4.0]);
        let fit = ols(&x, &y).unwrap();
        assert!((fit.coefficients[1] - 0.9).abs() < 1e-12);
        assert!(fit.coefficients[0].abs() < 1e-12);
        let se = fit.std_errors.clone().unwrap();
        assert!((se[1] - (0.35f64 / 5.0).sqrt()).abs() < 1e-12);
        let p = fit.p_values().unwrap();
        assert!(p[1] > 0.0 && p[1] < 0.1);
    }
}
