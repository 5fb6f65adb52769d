//! Small statistical toolkit: running moments, Kolmogorov–Smirnov tests,
//! log-sum-exp and importance-sampling diagnostics.

use statrs::function::erf::erfc;
use std::f64::consts::{PI, SQRT_2};

/// Running mean and variance (Welford), mergeable across chunks.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Pools another accumulator into this one (Chan et al.).
    pub fn merge(&mut self, other: &MeanAccumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for MeanAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = MeanAccumulator::new();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// Merges accumulators in the given order.
pub fn merge_all<'a>(parts: impl IntoIterator<Item = &'a MeanAccumulator>) -> MeanAccumulator {
    let mut acc = MeanAccumulator::new();
    for p in parts {
        acc.merge(p);
    }
    acc
}

/// Standard normal upper tail `P(N > x)`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `ln P(lo <= N <= hi)` for a standard normal, accurate deep in either tail.
pub fn log_normal_interval(lo: f64, hi: f64) -> f64 {
    if !(lo < hi) {
        return f64::NEG_INFINITY;
    }
    let mass = if lo > 0.0 {
        normal_sf(lo) - normal_sf(hi)
    } else if hi < 0.0 {
        normal_sf(-hi) - normal_sf(-lo)
    } else {
        1.0 - normal_sf(hi) - normal_sf(-lo)
    };
    mass.ln()
}

/// `P(sup |Brownian bridge| > lambda)` on `[0,1]`, the Kolmogorov distribution tail.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series converges fast for small lambda.
        let c = PI * PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=20).map(|j| (-((2 * j - 1) as f64).powi(2) * c).exp()).sum();
        (1.0 - (2.0 * PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for j in 1..=100 {
            let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
            s += if j % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let sn = n_eff.sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

/// One-sample KS test of `samples` against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    assert!(!samples.is_empty(), "KS test needs samples");
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    KsResult { statistic: d, p_value: ks_p_value(d, n) }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty(), "KS test needs samples");
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    KsResult { statistic: d, p_value: ks_p_value(d, n_eff) }
}

/// `log(sum exp(x_i))`, `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.into_iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Kish effective sample size `(sum w)^2 / sum w^2` from log-weights.
pub fn effective_sample_size(log_w: &[f64]) -> f64 {
    let l1 = log_sum_exp(log_w.iter().copied());
    if l1 == f64::NEG_INFINITY {
        return 0.0;
    }
    let l2 = log_sum_exp(log_w.iter().map(|&x| 2.0 * x));
    (2.0 * l1 - l2).exp()
}

/// Empirical CDF of `samples` at `x` with its binomial standard error.
pub fn empirical_cdf(samples: &[f64], x: f64) -> (f64, f64) {
    let n = samples.len() as f64;
    let p = samples.iter().filter(|&&s| s <= x).count() as f64 / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn log_interval_in_far_tail() {
        // Mills ratio: sf(x) ~ phi(x)/x (1 - 1/x^2 + 3/x^4).
        let x: f64 = 20.0;
        let mills = -0.5 * x * x - (2.0 * std::f64::consts::PI).sqrt().ln() - x.ln() + (1.0 - 1.0 / (x * x) + 3.0 / x.powi(4)).ln();
        assert_relative_eq!(log_normal_interval(x, f64::INFINITY), mills, epsilon = 1e-4);
        assert_relative_eq!(log_normal_interval(f64::NEG_INFINITY, -x), mills, epsilon = 1e-4);
        assert_relative_eq!(log_normal_interval(-1.0, 1.0), (1.0 - 2.0 * normal_sf(1.0)).ln(), epsilon = 1e-14);
        assert_eq!(log_normal_interval(1.0, 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn accumulator_matches_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1 - 3.0).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let acc: MeanAccumulator = xs.iter().copied().collect();
        assert_relative_eq!(acc.mean(), mean, epsilon = 1e-12);
        assert_relative_eq!(acc.variance(), var, epsilon = 1e-10);

        let mut left: MeanAccumulator = xs[..313].iter().copied().collect();
        let right: MeanAccumulator = xs[313..].iter().copied().collect();
        left.merge(&right);
        assert_eq!(left.count(), 1000);
        assert_relative_eq!(left.mean(), mean, epsilon = 1e-12);
        assert_relative_eq!(left.variance(), var, epsilon = 1e-10);
    }

    #[test]
    fn kolmogorov_branches_agree() {
        // Both series are valid near the switch point.
        let lam = 1.18;
        let c = PI * PI / (8.0 * lam * lam);
        let small: f64 = 1.0 - (2.0 * PI).sqrt() / lam * (1..=20).map(|j| (-((2 * j - 1) as f64).powi(2) * c).exp()).sum::<f64>();
        let large: f64 = 2.0 * (1..=50).map(|j| {
            let t = (-2.0 * (j * j) as f64 * lam * lam).exp();
            if j % 2 == 1 { t } else { -t }
        }).sum::<f64>();
        assert_relative_eq!(small, large, epsilon = 1e-12);
        // Tabulated critical values of the Kolmogorov distribution.
        assert_relative_eq!(kolmogorov_sf(1.3581), 0.05, epsilon = 1e-4);
        assert_relative_eq!(kolmogorov_sf(1.6276), 0.01, epsilon = 1e-4);
        assert_relative_eq!(kolmogorov_sf(1.9495), 0.001, epsilon = 1e-5);
    }

    #[test]
    fn ks_accepts_uniform_and_rejects_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_one_sample(&u, |x| x.clamp(0.0, 1.0)).p_value > 0.001);
        let shifted: Vec<f64> = u.iter().map(|x| x * 0.9).collect();
        assert!(ks_one_sample(&shifted, |x| x.clamp(0.0, 1.0)).p_value < 1e-6);
        let v: Vec<f64> = (0..4000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_two_sample(&u, &v).p_value > 0.001);
        assert!(ks_two_sample(&shifted, &v).p_value < 1e-6);
    }

    #[test]
    fn ks_statistic_small_case() {
        // Hand computed: sorted {0.1, 0.4, 0.8} against U(0,1).
        let r = ks_one_sample(&[0.8, 0.1, 0.4], |x| x);
        assert_relative_eq!(r.statistic, 0.2666666666666667, epsilon = 1e-12);
        let r = ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn lse_and_ess() {
        assert_relative_eq!(log_sum_exp([0.0, 0.0]), 2f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(log_sum_exp([-1000.0, -1000.0]), -1000.0 + 2f64.ln(), epsilon = 1e-12);
        assert_eq!(log_sum_exp(Vec::<f64>::new()), f64::NEG_INFINITY);
        assert_relative_eq!(effective_sample_size(&[-5.0; 40]), 40.0, epsilon = 1e-9);
        assert_relative_eq!(effective_sample_size(&[0.0, f64::NEG_INFINITY, f64::NEG_INFINITY]), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn normal_tails() {
        assert_relative_eq!(normal_sf(0.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(normal_sf(1.959963984540054), 0.025, max_relative = 1e-9);
        assert_relative_eq!(normal_cdf(-1.0) + normal_sf(-1.0), 1.0, epsilon = 1e-15);
    }
}
