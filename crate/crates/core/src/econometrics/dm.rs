//! Diebold-Mariano test with the Harvey-Leybourne-Newbold small-sample correction.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{EconError, Result};

pub const MIN_LENGTH: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    /// Corrected statistic; positive when `errors_a` has the larger squared loss.
    pub statistic: f64,
    /// Two-sided, Student-t with n - 1 degrees of freedom.
    pub p_value: f64,
    pub horizon: usize,
    pub n: usize,
    pub mean_loss_diff: f64,
    /// Set when the loss differential has no variation; p is then 1.
    pub degenerate: bool,
}

fn autocov(d: &[f64], mean: f64, k: usize) -> f64 {
    let n = d.len();
    (k..n).map(|t| (d[t] - mean) * (d[t - k] - mean)).sum::<f64>() / n as f64
}

/// Squared-error loss comparison of two forecast error series.
pub fn dm_test(errors_a: &[f64], errors_b: &[f64], horizon: usize) -> Result<DmResult> {
    if errors_a.len() != errors_b.len() {
        return Err(EconError::DimensionMismatch(format!(
            "error series of length {} and {}",
            errors_a.len(),
            errors_b.len()
        )));
    }
    let n = errors_a.len();
    if n < MIN_LENGTH {
        return Err(EconError::InsufficientData(format!("DM test needs {MIN_LENGTH} points, got {n}")));
    }
    if horizon == 0 || horizon >= n {
        return Err(EconError::DomainError(format!("horizon {horizon} for {n} points")));
    }
    if errors_a.iter().chain(errors_b).any(|e| !e.is_finite()) {
        return Err(EconError::DomainError("non-finite forecast error".into()));
    }
    let d: Vec<f64> = errors_a.iter().zip(errors_b).map(|(a, b)| a * a - b * b).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let gamma0 = autocov(&d, mean, 0);
    let mut lrv = gamma0;
    for k in 1..horizon {
        lrv += 2.0 * autocov(&d, mean, k);
    }
    let scale = d.iter().map(|v| v * v).sum::<f64>() / nf;
    if gamma0 <= 1e-14 * scale || lrv <= 0.0 {
        return Ok(DmResult {
            statistic: 0.0,
            p_value: 1.0,
            horizon,
            n,
            mean_loss_diff: mean,
            degenerate: true,
        });
    }
    let dm = mean / (lrv / nf).sqrt();
    let h = horizon as f64;
    let correction = ((nf + 1.0 - 2.0 * h + h * (h - 1.0) / nf) / nf).sqrt();
    let statistic = dm * correction;
    let t = StudentsT::new(0.0, 1.0, nf - 1.0).map_err(|e| EconError::DomainError(e.to_string()))?;
    let p_value = (2.0 * t.sf(statistic.abs())).min(1.0);
    Ok(DmResult {
        statistic,
        p_value,
        horizon,
        n,
        mean_loss_diff: mean,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, sd: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); sd * z }).collect::<Vec<f64>>()
    }

    #[test]
    fn identical_errors_are_degenerate() {
        let e = noise(30, 1.0, 1);
        let r = dm_test(&e, &e, 1).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn antisymmetric() {
        let a = noise(60, 1.5, 2);
        let b = noise(60, 1.0, 3);
        for h in 1..=3 {
            let x = dm_test(&a, &b, h).unwrap();
            let y = dm_test(&b, &a, h).unwrap();
            assert_eq!(x.statistic, -y.statistic);
            assert_eq!(x.p_value, y.p_value);
        }
    }

    #[test]
    fn hand_computed_h1() {
        // d = [1, 3, 1, 3, ...], mean 2, gamma0 = 1, T = 10: DM = 2 / sqrt(0.1), HLN factor sqrt(9/10).
        let a: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { 3f64.sqrt() }).collect();
        let b = vec![0.0; 10];
        let r = dm_test(&a, &b, 1).unwrap();
        let want = 2.0 / 0.1f64.sqrt() * 0.9f64.sqrt();
        assert!((r.statistic - want).abs() < 1e-12);
    }

    #[test]
    fn input_checks() {
        assert!(matches!(dm_test(&[1.0; 5], &[1.0; 5], 1), Err(EconError::InsufficientData(_))));
        assert!(matches!(dm_test(&[1.0; 12], &[1.0; 11], 1), Err(EconError::DimensionMismatch(_))));
    }
}
