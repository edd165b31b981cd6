//! Granger causality F-tests between panel scores and a macro series.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::multiple_testing::bh_adjust;
use super::ols::ols;
use super::{EconError, Result};
use crate::aggregate::SentimentPanel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ScoreToMacro,
    MacroToScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrangerResult {
    pub score: String,
    pub lag: usize,
    pub direction: Direction,
    /// `None` when the unrestricted design is singular.
    pub f_stat: Option<f64>,
    pub p_raw: Option<f64>,
    pub p_adjusted: Option<f64>,
    pub df_num: usize,
    pub df_den: usize,
}

impl GrangerResult {
    pub fn testable(&self) -> bool {
        self.f_stat.is_some()
    }

    pub fn significant(&self, alpha: f64) -> bool {
        self.p_adjusted.is_some_and(|p| p < alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FTest {
    pub f_stat: f64,
    pub p_value: f64,
    pub df_num: usize,
    pub df_den: usize,
}

fn lag_design(target: &[f64], cause: Option<&[f64]>, lag: usize) -> (DMatrix<f64>, DVector<f64>) {
    let n = target.len() - lag;
    let k = 1 + lag + cause.map_or(0, |_| lag);
    let x = DMatrix::from_fn(n, k, |i, j| {
        let t = i + lag;
        if j == 0 {
            1.0
        } else if j <= lag {
            target[t - j]
        } else {
            cause.expect("cause columns")[t - (j - lag)]
        }
    });
    let y = DVector::from_iterator(n, target[lag..].iter().copied());
    (x, y)
}

/// Does `cause` Granger-cause `target` at `lag`? Nested OLS F-test over rows t >= lag.
pub fn granger_f(target: &[f64], cause: &[f64], lag: usize) -> Result<FTest> {
    if target.len() != cause.len() {
        return Err(EconError::DimensionMismatch(format!(
            "target has {} points, cause {}",
            target.len(),
            cause.len()
        )));
    }
    if lag == 0 {
        return Err(EconError::DomainError("lag must be at least 1".into()));
    }
    if target.len() <= 3 * lag + 1 {
        return Err(EconError::InsufficientData(format!("{} points for lag {lag}", target.len())));
    }
    let (xr, y) = lag_design(target, None, lag);
    let (xu, _) = lag_design(target, Some(cause), lag);
    let restricted = ols(&xr, &y)?;
    let unrestricted = ols(&xu, &y)?;
    let df_den = unrestricted.df_resid();
    if df_den == 0 {
        return Err(EconError::InsufficientData("no residual degrees of freedom".into()));
    }
    let num = ((restricted.rss - unrestricted.rss) / lag as f64).max(0.0);
    let den = unrestricted.rss / df_den as f64;
    let f_stat = if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let p_value = if f_stat.is_infinite() {
        0.0
    } else {
        FisherSnedecor::new(lag as f64, df_den as f64)
            .map_err(|e| EconError::DomainError(e.to_string()))?
            .sf(f_stat)
    };
    Ok(FTest {
        f_stat,
        p_value,
        df_num: lag,
        df_den,
    })
}

pub fn min_length(max_lag: usize) -> usize {
    3 * max_lag + 6
}

/// All score/lag/direction tests for one panel against `target` (aligned
/// row-for-row with the panel). Adjusted p-values are Benjamini-Hochberg over
/// the testable results of each direction.
pub fn granger_tests(panel: &SentimentPanel, target: &[f64], max_lag: usize) -> Result<Vec<GrangerResult>> {
    if target.len() != panel.n_rows() {
        return Err(EconError::DimensionMismatch(format!(
            "panel has {} rows, target {}",
            panel.n_rows(),
            target.len()
        )));
    }
    if target.len() < min_length(max_lag) {
        return Err(EconError::InsufficientData(format!(
            "Granger tests up to lag {max_lag} need {} points, got {}",
            min_length(max_lag),
            target.len()
        )));
    }
    let mut results = Vec::with_capacity(panel.n_cols() * max_lag * 2);
    for (j, name) in panel.columns.iter().enumerate() {
        let score: Vec<f64> = panel.values.column(j).iter().copied().collect();
        for direction in [Direction::ScoreToMacro, Direction::MacroToScore] {
            for lag in 1..=max_lag {
                let test = match direction {
                    Direction::ScoreToMacro => granger_f(target, &score, lag),
                    Direction::MacroToScore => granger_f(&score, target, lag),
                };
                let result = match test {
                    Ok(t) => GrangerResult {
                        score: name.clone(),
                        lag,
                        direction,
                        f_stat: Some(t.f_stat),
                        p_raw: Some(t.p_value),
                        p_adjusted: None,
                        df_num: t.df_num,
                        df_den: t.df_den,
                    },
                    Err(EconError::SingularDesign(reason)) => {
                        log::info!("{name} lag {lag} {direction:?}: untestable ({reason})");
                        GrangerResult {
                            score: name.clone(),
                            lag,
                            direction,
                            f_stat: None,
                            p_raw: None,
                            p_adjusted: None,
                            df_num: lag,
                            df_den: 0,
                        }
                    }
                    Err(e) => return Err(e),
                };
                results.push(result);
            }
        }
    }
    adjust_in_place(&mut results)?;
    Ok(results)
}

/// Fill `p_adjusted` by BH within each direction.
pub fn adjust_in_place(results: &mut [GrangerResult]) -> Result<()> {
    for direction in [Direction::ScoreToMacro, Direction::MacroToScore] {
        let idx: Vec<usize> = results
            .iter()
            .enumerate()
            .filter(|(_, r)| r.direction == direction && r.p_raw.is_some())
            .map(|(i, _)| i)
            .collect();
        let raw: Vec<f64> = idx.iter().map(|&i| results[i].p_raw.expect("filtered")).collect();
        let adj = bh_adjust(&raw)?;
        for (&i, a) in idx.iter().zip(adj) {
            results[i].p_adjusted = Some(a);
        }
    }
    Ok(())
}

/// Number of results with BH-adjusted p below `alpha` in `direction`.
pub fn count_significant(results: &[GrangerResult], direction: Direction, alpha: f64) -> usize {
    results
        .iter()
        .filter(|r| r.direction == direction && r.significant(alpha))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn planted_cause_is_detected() {
        let x = noise(64, 1);
        let e = noise(64, 2);
        let mut y = vec![0.0; 64];
        for t in 1..64 {
            y[t] = 0.8 * x[t - 1] + e[t];
        }
        let f = granger_f(&y, &x, 1).unwrap();
        assert!(f.p_value < 1e-6, "{f:?}");
    }

    #[test]
    fn lagged_copy_is_singular_at_higher_lags() {
        let y = noise(64, 5);
        // x_t = y_{t-1}: x_{t-1} duplicates y_{t-2}.
        let mut x = vec![0.0; 64];
        x[1..].copy_from_slice(&y[..63]);
        assert!(granger_f(&y, &x, 1).is_ok());
        assert!(matches!(granger_f(&y, &x, 2), Err(EconError::SingularDesign(_))));
        assert!(matches!(granger_f(&y, &x, 3), Err(EconError::SingularDesign(_))));
    }

    #[test]
    fn leading_copy_gives_near_zero_p() {
        let y = noise(64, 6);
        // x_t = y_{t+1}: x_{t-1} reproduces y_t exactly.
        let mut x = vec![0.0; 64];
        x[..63].copy_from_slice(&y[1..]);
        let f = granger_f(&y, &x, 1).unwrap();
        assert!(f.p_value < 1e-10);
    }

    #[test]
    fn affine_rescaling_leaves_f_unchanged() {
        let x = noise(80, 8);
        let y = noise(80, 9);
        let x2: Vec<f64> = x.iter().map(|v| 3.5 * v - 2.0).collect();
        for lag in 1..=3 {
            let a = granger_f(&y, &x, lag).unwrap().f_stat;
            let b = granger_f(&y, &x2, lag).unwrap().f_stat;
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn adjusted_not_below_raw() {
        use crate::aggregate::panel_from_levels;
        use crate::month::YearMonth;
        let months = YearMonth::range("2015-03".parse().unwrap(), "2020-06".parse().unwrap());
        let levels: Vec<Vec<f64>> = (0..4).map(|s| noise(64, 100 + s)).collect();
        let panel = panel_from_levels(&months, (0..4).map(|i| format!("s{i}")).collect(), levels).unwrap();
        let target = noise(63, 7);
        let res = granger_tests(&panel, &target, 3).unwrap();
        assert_eq!(res.len(), 4 * 3 * 2);
        for r in &res {
            let (p, a) = (r.p_raw.unwrap(), r.p_adjusted.unwrap());
            assert!(a >= p && a <= 1.0);
        }
        assert!(granger_tests(&panel, &target[1..], 3).is_err());
    }
}
