//! Goodness-of-fit helpers for waiting-time statistics.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov-Smirnov test against an exponential with `rate`.
pub fn ks_exponential(samples: &[f64], rate: f64) -> KsResult {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d = 0.0f64;
    for (i, v) in x.iter().enumerate() {
        let cdf = 1.0 - (-rate * v.max(0.0)).exp();
        d = d.max(cdf - i as f64 / n).max((i + 1) as f64 / n - cdf);
    }
    KsResult { statistic: d, p_value: kolmogorov_sf(d, x.len()) }
}

/// Asymptotic survival function of the KS statistic with the usual
/// small-sample correction of the argument.
fn kolmogorov_sf(d: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn accepts_true_exponential_rejects_wrong_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<f64> = (0..2000).map(|_| -(1.0 - rng.gen::<f64>()).ln() / 0.7).collect();
        assert!(ks_exponential(&s, 0.7).p_value > 0.01);
        assert!(ks_exponential(&s, 1.0).p_value < 1e-6);
    }

    #[test]
    fn known_distribution_values() {
        // Q(1.36) ≈ 0.049
        assert!((kolmogorov_sf(1.36 / 1e4f64.sqrt(), 10_000) - 0.049).abs() < 2e-3);
    }
}
