//! Importance sampling with deterministically shifted Brownian bridges.

use crate::model::McEstimate;
use crate::stats::log_sum_exp;

/// `log(dQ/dP)` at `path`, where `P` is the free bridge law and `Q` the law
/// of a free bridge plus `shift` (which must vanish at both ends).
///
/// Increments are i.i.d. `N(0, delta)` conditioned on their sum under both
/// laws, so the ratio is `exp(sum (2 dx ds - ds^2) / (2 delta))`.
pub fn shift_log_ratio(path: &[f64], shift: &[f64], delta: f64) -> f64 {
    debug_assert_eq!(path.len(), shift.len());
    let mut acc = 0.0;
    for j in 1..path.len() {
        let dx = path[j] - path[j - 1];
        let ds = shift[j] - shift[j - 1];
        acc += 2.0 * dx * ds - ds * ds;
    }
    acc / (2.0 * delta)
}

/// `log(dP/dQ)` for the mixture `Q = sum_c probs[c] Q_c` given `log(dQ_c/dP)`.
pub(crate) fn mixture_log_ratio(log_ratios: &[f64], probs: &[f64]) -> f64 {
    -log_sum_exp(log_ratios.iter().zip(probs).map(|(r, p)| r + p.ln()))
}

/// Self-normalized estimate of `P(hit)` from log-weights, with the
/// delta-method standard error.
pub fn weighted_fraction(log_w: &[f64], hit: impl Fn(usize) -> bool, seed: u64) -> McEstimate {
    let n = log_w.len();
    let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if n == 0 || m == f64::NEG_INFINITY {
        return McEstimate { mean: 0.0, stderr: 0.0, n_samples: n as u64, seed };
    }
    let w: Vec<f64> = log_w.iter().map(|l| (l - m).exp()).collect();
    let total: f64 = w.iter().sum();
    let p = (0..n).filter(|&i| hit(i)).map(|i| w[i]).sum::<f64>() / total;
    let var: f64 = (0..n)
        .map(|i| {
            let r = if hit(i) { 1.0 - p } else { -p };
            (w[i] * r).powi(2)
        })
        .sum::<f64>()
        / (total * total);
    McEstimate { mean: p.clamp(0.0, 1.0), stderr: var.sqrt(), n_samples: n as u64, seed }
}
