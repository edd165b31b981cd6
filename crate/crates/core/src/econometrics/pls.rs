//! SIMPLS partial least squares for a single response.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::var::VarModel;
use super::{EconError, Result};
use crate::aggregate::SentimentPanel;

/// Relative norm of the deflated cross-product below which no further
/// component can be extracted.
const EXHAUSTED_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsModel {
    pub n_components: usize,
    pub x_mean: DVector<f64>,
    pub y_mean: f64,
    /// K×A weights; scores are `(x - x_mean) · weights`.
    pub weights: DMatrix<f64>,
    /// K×A X-loadings.
    pub x_loadings: DMatrix<f64>,
    /// y-loadings, one per component.
    pub y_loadings: DVector<f64>,
    /// n×A training scores with unit norm columns.
    pub scores: DMatrix<f64>,
    /// Share of centered y variation explained by the first a+1 components.
    pub explained_variance: Vec<f64>,
    /// K regression coefficients on centered x.
    pub coefficients: DVector<f64>,
}

impl PlsModel {
    pub fn n_features(&self) -> usize {
        self.x_mean.len()
    }

    fn centered(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.n_features() {
            return Err(EconError::DimensionMismatch(format!(
                "model has {} features, input {}",
                self.n_features(),
                x.ncols()
            )));
        }
        let mut c = x.clone();
        for mut row in c.row_iter_mut() {
            row -= self.x_mean.transpose();
        }
        Ok(c)
    }

    /// Component scores for new rows.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.centered(x)? * &self.weights)
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        let c = self.centered(x)?;
        Ok((c * &self.coefficients).add_scalar(self.y_mean))
    }
}

fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(x.ncols(), |j, _| x.column(j).mean())
}

/// Extract `n_components` SIMPLS components of `y` on the columns of `x`.
pub fn simpls(x: &DMatrix<f64>, y: &DVector<f64>, n_components: usize) -> Result<PlsModel> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(EconError::DimensionMismatch(format!("x has {n} rows, y {}", y.len())));
    }
    if n_components == 0 {
        return Err(EconError::DomainError("at least one component is required".into()));
    }
    if n < 2 || k == 0 {
        return Err(EconError::InsufficientData(format!("{n}×{k} predictor matrix")));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(EconError::DomainError("non-finite input".into()));
    }
    let x_mean = column_means(x);
    let y_mean = y.mean();
    let mut x0 = x.clone();
    for mut row in x0.row_iter_mut() {
        row -= x_mean.transpose();
    }
    let y0 = y.add_scalar(-y_mean);
    let sst = y0.norm_squared();

    let mut s = x0.transpose() * &y0;
    let s0 = s.norm();
    let mut r_mat = DMatrix::zeros(k, n_components);
    let mut p_mat = DMatrix::zeros(k, n_components);
    let mut t_mat = DMatrix::zeros(n, n_components);
    let mut q = DVector::zeros(n_components);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n_components);
    let mut explained = Vec::with_capacity(n_components);
    let mut cumulative = 0.0;

    for a in 0..n_components {
        if s0 == 0.0 || s.norm() <= EXHAUSTED_TOL * s0 {
            return Err(EconError::RankDeficiency {
                extracted: a,
                requested: n_components,
            });
        }
        let mut r = s.clone();
        let mut t = &x0 * &r;
        let tn = t.norm();
        if tn <= EXHAUSTED_TOL * r.norm() * x0.norm() {
            return Err(EconError::RankDeficiency {
                extracted: a,
                requested: n_components,
            });
        }
        t /= tn;
        r /= tn;
        let p = x0.transpose() * &t;
        let qa = y0.dot(&t);
        let mut v = p.clone();
        // Two Gram-Schmidt passes keep the loading basis orthonormal.
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&v);
                v.axpy(-c, b, 1.0);
            }
        }
        let vn = v.norm();
        if vn == 0.0 {
            return Err(EconError::RankDeficiency {
                extracted: a,
                requested: n_components,
            });
        }
        v /= vn;
        let proj = v.dot(&s);
        s.axpy(-proj, &v, 1.0);
        basis.push(v);

        r_mat.set_column(a, &r);
        p_mat.set_column(a, &p);
        t_mat.set_column(a, &t);
        q[a] = qa;
        cumulative += qa * qa;
        explained.push(if sst > 0.0 { (cumulative / sst).min(1.0) } else { 0.0 });
    }
    let coefficients = &r_mat * &q;
    Ok(PlsModel {
        n_components,
        x_mean,
        y_mean,
        weights: r_mat,
        x_loadings: p_mat,
        y_loadings: q,
        scores: t_mat,
        explained_variance: explained,
        coefficients,
    })
}

/// PLS of one VAR equation's residuals on panel rows aligned with them.
pub fn pls_on_residuals(benchmark: &VarModel, equation: usize, panel: &SentimentPanel, n_components: usize) -> Result<PlsModel> {
    if equation >= benchmark.n_vars() {
        return Err(EconError::DimensionMismatch(format!("no equation {equation}")));
    }
    let resid = benchmark.equation_residuals(equation);
    if panel.n_rows() != resid.len() {
        return Err(EconError::DimensionMismatch(format!(
            "panel has {} rows, residuals {}",
            panel.n_rows(),
            resid.len()
        )));
    }
    simpls(&panel.values, &resid, n_components)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorCvRow {
    pub components: usize,
    /// In-sample share of explained y variation.
    pub r2: f64,
    /// Held-out residual sum of squares over all folds.
    pub rss: f64,
}

/// Contiguous `folds`-way split of `0..n`, sizes differing by at most one.
pub fn contiguous_folds(n: usize, folds: usize) -> Vec<std::ops::Range<usize>> {
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Leave-one-fold-out CV over contiguous folds for each component count.
/// A count of zero predicts the training mean and has R² = 0.
pub fn factor_cv(x: &DMatrix<f64>, y: &DVector<f64>, components: &[usize], folds: usize) -> Result<Vec<FactorCvRow>> {
    let n = x.nrows();
    if y.len() != n {
        return Err(EconError::DimensionMismatch(format!("x has {n} rows, y {}", y.len())));
    }
    if folds < 2 || n < 2 * folds {
        return Err(EconError::InsufficientData(format!("{n} rows for {folds} folds")));
    }
    let splits = contiguous_folds(n, folds);
    let mut rows = Vec::with_capacity(components.len());
    for &a in components {
        let r2 = if a == 0 {
            0.0
        } else {
            *simpls(x, y, a)?.explained_variance.last().expect("a > 0")
        };
        let mut rss = 0.0;
        for hold in &splits {
            let train: Vec<usize> = (0..n).filter(|i| !hold.contains(i)).collect();
            let xt = x.select_rows(train.iter());
            let yt = DVector::from_iterator(train.len(), train.iter().map(|&i| y[i]));
            let xh = x.rows(hold.start, hold.len()).into_owned();
            let yh = y.rows(hold.start, hold.len()).into_owned();
            let pred = if a == 0 {
                DVector::from_element(hold.len(), yt.mean())
            } else {
                simpls(&xt, &yt, a)?.predict(&xh)?
            };
            rss += (yh - pred).norm_squared();
        }
        rows.push(FactorCvRow { components: a, r2, rss });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::econometrics::ols::{ols, with_intercept};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn scores_are_orthonormal() {
        let x = gaussian(50, 8, 1);
        let y = gaussian(50, 1, 2).column(0).into_owned();
        let m = simpls(&x, &y, 5).unwrap();
        let g = m.scores.transpose() * &m.scores;
        assert!((g - DMatrix::identity(5, 5)).abs().max() <= 1e-8);
        for w in m.explained_variance.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!(*m.explained_variance.last().unwrap() <= 1.0);
        let t = m.transform(&x).unwrap();
        assert!((t - &m.scores).abs().max() <= 1e-10);
    }

    #[test]
    fn single_predictor_matches_ols() {
        let x = gaussian(40, 1, 3);
        let y = x.column(0).map(|v| 2.0 * v + 1.0) + gaussian(40, 1, 4).column(0) * 0.3;
        let m = simpls(&x, &y, 1).unwrap();
        let fit = ols(&with_intercept(&x), &y).unwrap();
        let pred = m.predict(&x).unwrap();
        assert!((pred - fit.fitted).abs().max() <= 1e-10);
        assert!(matches!(simpls(&x, &y, 2), Err(EconError::RankDeficiency { extracted: 1, requested: 2 })));
    }

    #[test]
    fn full_extraction_matches_ols() {
        let x = gaussian(30, 4, 5);
        let y = gaussian(30, 1, 6).column(0).into_owned();
        let m = simpls(&x, &y, 4).unwrap();
        let fit = ols(&with_intercept(&x), &y).unwrap();
        assert!((m.predict(&x).unwrap() - fit.fitted).abs().max() <= 1e-9);
    }

    #[test]
    fn first_weight_is_cross_product_direction() {
        let x = gaussian(30, 6, 7);
        let y = gaussian(30, 1, 8).column(0).into_owned();
        let m = simpls(&x, &y, 2).unwrap();
        let mut xc = x.clone();
        let means = column_means(&x);
        for mut row in xc.row_iter_mut() {
            row -= means.transpose();
        }
        let s = xc.transpose() * y.add_scalar(-y.mean());
        let w = m.weights.column(0);
        let cos = w.dot(&s) / (w.norm() * s.norm());
        assert!((cos - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cv_rows() {
        let x = gaussian(40, 5, 9);
        let y = x.column(0) + gaussian(40, 1, 10).column(0) * 0.1;
        let rows = factor_cv(&x, &y, &[0, 1, 2, 3], 5).unwrap();
        assert_eq!(rows[0].r2, 0.0);
        for w in rows.windows(2) {
            assert!(w[1].r2 >= w[0].r2 - 1e-12);
        }
        assert!(rows[1].rss < rows[0].rss);
    }

    #[test]
    fn residual_factors_nearly_uncorrelated_with_fitted() {
        use crate::aggregate::panel_from_levels;
        use crate::econometrics::var::fit_var;
        use crate::month::YearMonth;

        let corr = |a: &DVector<f64>, b: &DVector<f64>| {
            let (ma, mb) = (a.mean(), b.mean());
            let cov: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - ma) * (y - mb)).sum();
            let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
            let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
            cov / (va * vb).sqrt()
        };
        for seed in 0..5 {
            let t = 200;
            let shocks = gaussian(t, 2, 100 + seed);
            let mut data = DMatrix::zeros(t, 2);
            for i in 1..t {
                data[(i, 0)] = 0.5 * data[(i - 1, 0)] + 0.2 * data[(i - 1, 1)] + shocks[(i, 0)];
                data[(i, 1)] = 0.3 * data[(i - 1, 1)] + shocks[(i, 1)];
            }
            let var = fit_var(&data, 1).unwrap();
            let resid = var.equation_residuals(0);
            let noise = gaussian(t, 12, 200 + seed);
            let levels: Vec<Vec<f64>> = (0..12)
                .map(|j| {
                    let mut acc = 0.0;
                    (0..t)
                        .map(|i| {
                            let signal = if i > 0 && j < 4 { resid[i - 1] } else { 0.0 };
                            acc += signal + noise[(i, j)];
                            acc
                        })
                        .collect()
                })
                .collect();
            let start: YearMonth = "2000-01".parse().unwrap();
            let months = YearMonth::range(start, (1..t).fold(start, |m, _| m.succ()));
            let panel = panel_from_levels(&months, (0..12).map(|j| format!("s{j}_mean")).collect(), levels).unwrap();
            let model = pls_on_residuals(&var, 0, &panel, 3).unwrap();
            let fitted = var.fitted.column(0).into_owned();
            // Only the first component carries the planted factor; later ones fit noise.
            let c = corr(&model.scores.column(0).into_owned(), &fitted);
            assert!(c.abs() < 0.15, "seed {seed}: {c}");
        }
    }

    #[test]
    fn folds_cover_range() {
        let f = contiguous_folds(11, 4);
        assert_eq!(f, vec![0..3, 3..6, 6..9, 9..11]);
    }
}
