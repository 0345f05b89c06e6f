//! Goodness-of-fit tests and interval estimates used by the Monte Carlo
//! checks.

use serde::Serialize;

/// Two-sided normal quantile for a 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl KsResult {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.27 {
        return 1.0;
    }
    if x < 1.0 {
        // small-x form converges faster there
        let y = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        let mut cdf = 0.0;
        for k in 0..20 {
            let j = (2 * k + 1) as f64;
            cdf += (-j * j * y).exp();
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / x;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let sqrt_n = effective_n.sqrt();
    kolmogorov_sf(d * (sqrt_n + 0.12 + 0.11 / sqrt_n))
}

/// One-sample Kolmogorov-Smirnov test of `samples` against `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> KsResult {
    assert!(!samples.is_empty(), "KS test needs samples");
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    }
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty(), "KS test needs samples");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
    }
}

/// Sample mean with a 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCi {
    pub mean: f64,
    pub std_err: f64,
    pub half_width: f64,
    pub n: usize,
}

pub fn mean_ci(values: &[f64]) -> MeanCi {
    let n = values.len();
    if n == 0 {
        return MeanCi {
            mean: f64::NAN,
            std_err: f64::NAN,
            half_width: f64::NAN,
            n,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let std_err = (var / n as f64).sqrt();
    MeanCi {
        mean,
        std_err,
        half_width: Z95 * std_err,
        n,
    }
}

/// Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let spread = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - spread).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + spread).min(1.0) };
    (lo, hi)
}

/// Least-squares projection onto nonincreasing sequences (pool adjacent
/// violators), equal weights.
pub fn isotonic_nonincreasing(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, n2) = blocks[blocks.len() - 1];
            let (m1, n1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.pop();
            let n = n1 + n2;
            *blocks.last_mut().unwrap() = ((m1 * n1 as f64 + m2 * n2 as f64) / n as f64, n);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, n)| std::iter::repeat_n(m, n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_known_points() {
        // P(K > 1.3581) ~= 0.05, P(K > 1.9495) ~= 0.001
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.9495) - 0.001).abs() < 1e-4);
        // both series agree near the switch point
        let y = std::f64::consts::PI.powi(2) / 8.0;
        let small = 1.0 - (2.0 * std::f64::consts::PI).sqrt() * (0..20).map(|k| (-((2 * k + 1) as f64).powi(2) * y).exp()).sum::<f64>();
        assert!((small - kolmogorov_sf(1.0)).abs() < 1e-10);
    }

    #[test]
    fn ks_detects_shift() {
        let samples: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_one_sample(&samples, |x| x.clamp(0.0, 1.0)).passes(1e-3));
        assert!(!ks_one_sample(&samples, |x| (x - 0.1).clamp(0.0, 1.0)).passes(1e-3));
    }

    #[test]
    fn two_sample_identical_is_zero() {
        let a: Vec<f64> = (0..500).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn wilson_zero_successes() {
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
    }

    #[test]
    fn pava_pools_violators() {
        assert_eq!(isotonic_nonincreasing(&[3.0, 1.0, 2.0, 0.0]), vec![3.0, 1.5, 1.5, 0.0]);
        assert_eq!(isotonic_nonincreasing(&[1.0, 2.0]), vec![1.5, 1.5]);
    }
}
