//! Two-sample tests.

use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value
/// `Q_KS((√n_e + 0.12 + 0.11/√n_e) D)`.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::UndefinedStatistic(
            "KS test needs two non-empty samples".into(),
        ));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::Domain("NaN in KS sample".into()));
    }
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    let en = (n1 * n2 / (n1 + n2)).sqrt();
    let p = q_ks((en + 0.12 + 0.11 / en) * d);
    Ok(KsResult {
        statistic: d,
        p_value: p,
    })
}

/// Kolmogorov survival function `2 Σ (-1)^{j-1} exp(-2 j² λ²)`.
fn q_ks(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let a2 = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 2.0;
    let mut prev = 0.0f64;
    for j in 1..=100 {
        let term = sign * (a2 * (j * j) as f64).exp();
        sum += term;
        if term.abs() <= 1e-10 * prev || term.abs() <= 1e-12 * sum.abs() {
            return sum.clamp(0.0, 1.0);
        }
        sign = -sign;
        prev = term.abs();
    }
    1.0
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (
        m,
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0),
    )
}

/// Welch unequal-variance t-test, two-sided p-value.
pub fn t_test_two_sided(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::UndefinedStatistic(
            "t-test needs at least 2 observations per sample".into(),
        ));
    }
    let (m1, v1) = mean_var(x);
    let (m2, v2) = mean_var(y);
    let (a, b) = (v1 / x.len() as f64, v2 / y.len() as f64);
    let se2 = a + b;
    if se2 == 0.0 {
        return Ok(if m1 == m2 { 1.0 } else { 0.0 });
    }
    let t = (m1 - m2) / se2.sqrt();
    let df = se2 * se2 / (a * a / (x.len() - 1) as f64 + b * b / (y.len() - 1) as f64);
    let dist =
        StudentsT::new(0.0, 1.0, df).map_err(|e| Error::UndefinedStatistic(e.to_string()))?;
    Ok((2.0 * dist.sf(t.abs())).min(1.0))
}

/// Pooled two-proportion z-test, two-sided p-value. Equal proportions with
/// no variation (all or none succeed in both groups) give `p = 1`.
pub fn two_proportion_z_test(x1: usize, n1: usize, x2: usize, n2: usize) -> Result<f64> {
    if n1 == 0 || n2 == 0 || x1 > n1 || x2 > n2 {
        return Err(Error::UndefinedStatistic(format!(
            "invalid proportions {x1}/{n1} and {x2}/{n2}"
        )));
    }
    let (p1, p2) = (x1 as f64 / n1 as f64, x2 as f64 / n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        return Ok(1.0);
    }
    let z = (p1 - p2) / se;
    Ok(erfc(z.abs() / std::f64::consts::SQRT_2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, Normal, Uniform};

    #[test]
    fn ks_identical_and_disjoint() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let r = ks_two_sample(&x, &x).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let r = ks_two_sample(&x, &[10.0, 11.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(ks_two_sample(&[], &x).is_err());
    }

    #[test]
    fn ks_ties_across_samples() {
        // F1 jumps to 1/2 at 1 and 1 at 2; F2 jumps to 1 at 1.
        let r = ks_two_sample(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
        assert!((r.statistic - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_shifted_uniforms() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let u = Uniform::new(0.0, 1.0);
        let x: Vec<f64> = (0..1000).map(|_| u.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..1000).map(|_| u.sample(&mut rng) + 0.5).collect();
        assert!(ks_two_sample(&x, &y).unwrap().p_value < 1e-3);
    }

    #[test]
    fn q_ks_reference_values() {
        // Kolmogorov distribution: P(K > 1.36) ≈ 0.0494, P(K > 1.0) ≈ 0.2700.
        assert!((q_ks(1.36) - 0.04945).abs() < 1e-4);
        assert!((q_ks(1.0) - 0.26999967).abs() < 1e-6);
    }

    #[test]
    fn welch() {
        assert_eq!(
            t_test_two_sided(&[3.0, 3.0], &[3.0, 3.0, 3.0]).unwrap(),
            1.0
        );
        let x = [1.0, 2.5, 3.0, 4.2];
        assert!((t_test_two_sided(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let n0 = Normal::new(0.0, 1.0).unwrap();
        let n5 = Normal::new(5.0, 1.0).unwrap();
        let a: Vec<f64> = (0..100).map(|_| n0.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..100).map(|_| n5.sample(&mut rng)).collect();
        assert!(t_test_two_sided(&a, &b).unwrap() < 1e-10);
        assert!(t_test_two_sided(&[1.0], &b).is_err());
    }

    #[test]
    fn welch_reference() {
        // Hand computation: means 2 and 4, variances 1 and 4, n = 3 each.
        // t = -2/sqrt(5/3), df = (5/3)^2 / ((1/9)/2 + (16/9)/2) = 2.9412.
        let p = t_test_two_sided(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        let dist = StudentsT::new(0.0, 1.0, 25.0 / 9.0 / (17.0 / 18.0)).unwrap();
        let t: f64 = 2.0 / (5.0f64 / 3.0).sqrt();
        assert!((p - 2.0 * dist.sf(t)).abs() < 1e-12);
    }

    #[test]
    fn proportions() {
        assert_eq!(two_proportion_z_test(5, 5, 7, 7).unwrap(), 1.0);
        assert_eq!(two_proportion_z_test(0, 5, 0, 7).unwrap(), 1.0);
        // 30/30 vs 0/30: z = 1 / sqrt(0.25 * 2/30) = 7.746.
        let p = two_proportion_z_test(30, 30, 0, 30).unwrap();
        assert!(p < 1e-10);
        let p = two_proportion_z_test(12, 40, 20, 40).unwrap();
        let z: f64 = 0.2 / (0.4 * 0.6 * 0.05f64).sqrt();
        assert!((p - erfc(z / std::f64::consts::SQRT_2)).abs() < 1e-15);
        assert!(two_proportion_z_test(1, 0, 0, 1).is_err());
    }
}
