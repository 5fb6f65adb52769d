//! Closed-form Brownian bridge barrier probabilities, the Gaussian tail bound,
//! and Monte Carlo estimators used to check them.

use crate::bridge_sampler::fill_bridge;
use crate::error::{Error, Result};
use crate::model::{Grid, McEstimate};
use crate::rng::{par_chunks, CHUNK};
use crate::stats::{merge_all, MeanAccumulator};
use std::collections::VecDeque;
use std::f64::consts::PI;

fn check_interval(a: f64, b: f64) -> Result<()> {
    if a < b {
        Ok(())
    } else {
        Err(Error::InvalidInterval { a, b })
    }
}

/// `P(inf_{[a,b]} B <= beta)` for a bridge from `(a, x)` to `(b, y)`.
pub fn bridge_min_tail(a: f64, b: f64, x: f64, y: f64, beta: f64) -> Result<f64> {
    check_interval(a, b)?;
    let m = beta.min(x).min(y);
    Ok((-2.0 * (x - m) * (y - m) / (b - a)).exp())
}

/// `P(sup_{[a,b]} B >= beta)` for a bridge from `(a, x)` to `(b, y)`.
pub fn bridge_max_tail(a: f64, b: f64, x: f64, y: f64, beta: f64) -> Result<f64> {
    check_interval(a, b)?;
    let m = beta.max(x).max(y);
    Ok((-2.0 * (m - x) * (m - y) / (b - a)).exp())
}

/// Probability that a bridge segment of duration `delta` and diffusion
/// coefficient `diffusion`, pinned at `u` and `v`, touches `level` from above.
#[inline]
pub fn segment_crossing_probability(u: f64, v: f64, level: f64, delta: f64, diffusion: f64) -> f64 {
    let (du, dv) = (u - level, v - level);
    if du <= 0.0 || dv <= 0.0 {
        1.0
    } else {
        (-2.0 * du * dv / (diffusion * delta)).exp()
    }
}

/// `(2 pi)^{-1/2} a^{-1} e^{-a^2/2}`, an upper bound on `P(N(0,1) > a)`.
pub fn gaussian_tail_bound(a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::NonPositiveArgument(a));
    }
    Ok((-0.5 * a * a).exp() / (a * (2.0 * PI).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Barrier {
    Below,
    Above,
}

/// Conditional probability, given the grid values, that the continuum path
/// touches `level`. Exact for a bridge with the given diffusion coefficient.
pub fn barrier_hit_probability(values: &[f64], delta: f64, level: f64, side: Barrier, diffusion: f64) -> f64 {
    let mut log_stay = 0.0;
    for w in values.windows(2) {
        let p = match side {
            Barrier::Below => segment_crossing_probability(w[0], w[1], level, delta, diffusion),
            Barrier::Above => segment_crossing_probability(-w[0], -w[1], -level, delta, diffusion),
        };
        if p >= 1.0 {
            return 1.0;
        }
        log_stay += (-p).ln_1p();
    }
    -log_stay.exp_m1()
}

fn barrier_mc(grid_n: usize, a: f64, b: f64, x: f64, y: f64, level: f64, side: Barrier, n: usize, seed: u64) -> Result<McEstimate> {
    let grid = Grid::new(a, b, grid_n)?;
    let delta = grid.spacing();
    let parts = par_chunks(n, CHUNK, seed, 0xB1, |rng, range| {
        let mut acc = MeanAccumulator::new();
        let mut v = vec![0.0; grid_n];
        for _ in range {
            v[0] = x;
            v[grid_n - 1] = y;
            fill_bridge(&mut v, delta, rng);
            acc.push(barrier_hit_probability(&v, delta, level, side, 1.0));
        }
        acc
    });
    Ok(McEstimate::from_accumulator(&merge_all(&parts), seed))
}

/// Monte Carlo estimate of `P(inf B <= beta)` on a `grid_n`-point grid.
///
/// Each draw contributes the exact conditional hitting probability given its
/// grid values, so the estimator is unbiased at any resolution.
pub fn bridge_min_tail_mc(a: f64, b: f64, x: f64, y: f64, beta: f64, grid_n: usize, n: usize, seed: u64) -> Result<McEstimate> {
    check_interval(a, b)?;
    barrier_mc(grid_n, a, b, x, y, beta, Barrier::Below, n, seed)
}

/// Monte Carlo estimate of `P(sup B >= beta)`; see [`bridge_min_tail_mc`].
pub fn bridge_max_tail_mc(a: f64, b: f64, x: f64, y: f64, beta: f64, grid_n: usize, n: usize, seed: u64) -> Result<McEstimate> {
    check_interval(a, b)?;
    barrier_mc(grid_n, a, b, x, y, beta, Barrier::Above, n, seed)
}

/// Largest range `max - min` over all windows of `w + 1` consecutive values.
pub fn max_window_range(values: &[f64], w: usize) -> f64 {
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut best: f64 = 0.0;
    for (j, &v) in values.iter().enumerate() {
        while maxq.back().is_some_and(|&i| values[i] <= v) {
            maxq.pop_back();
        }
        maxq.push_back(j);
        while minq.back().is_some_and(|&i| values[i] >= v) {
            minq.pop_back();
        }
        minq.push_back(j);
        let lo = j.saturating_sub(w);
        while maxq[0] < lo {
            maxq.pop_front();
        }
        while minq[0] < lo {
            minq.pop_front();
        }
        best = best.max(values[maxq[0]] - values[minq[0]]);
    }
    best
}

pub const OSCILLATION_GRID: usize = 1025;

/// Estimates `P(sup_{|u-v|<=d} |B(u)-B(v)| > K sqrt(d))` for a standard bridge
/// on `[0,1]`, for every `K` in `ks` on shared draws.
pub fn oscillation_tail_estimates(d: f64, ks: &[f64], grid_n: usize, n: usize, seed: u64) -> Result<Vec<McEstimate>> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::InvalidSpec(format!("window d must lie in (0, 1], got {d}")));
    }
    if let Some(&k) = ks.iter().find(|k| !(**k >= 0.0)) {
        return Err(Error::InvalidSpec(format!("K must be nonnegative, got {k}")));
    }
    let grid = Grid::new(0.0, 1.0, grid_n)?;
    let delta = grid.spacing();
    let w = (d / delta + 1e-9).floor() as usize;
    let scale = d.sqrt();
    let parts = par_chunks(n, CHUNK, seed, 0xB2, |rng, range| {
        let mut accs = vec![MeanAccumulator::new(); ks.len()];
        let mut v = vec![0.0; grid_n];
        for _ in range {
            v[0] = 0.0;
            v[grid_n - 1] = 0.0;
            fill_bridge(&mut v, delta, rng);
            let osc = max_window_range(&v, w);
            for (acc, &k) in accs.iter_mut().zip(ks) {
                acc.push(if osc > k * scale { 1.0 } else { 0.0 });
            }
        }
        accs
    });
    Ok((0..ks.len())
        .map(|i| McEstimate::from_accumulator(&merge_all(parts.iter().map(|p| &p[i])), seed))
        .collect())
}

/// Single-`K` version of [`oscillation_tail_estimates`] on the default grid.
pub fn oscillation_tail_estimate(d: f64, k: f64, n: usize, seed: u64) -> Result<McEstimate> {
    Ok(oscillation_tail_estimates(d, &[k], OSCILLATION_GRID, n, seed)?[0])
}

/// Smallest `C` with `p <= prefactor * C * exp(-K^2 / C)` for every pair.
///
/// `C exp(-K^2/C)` increases in `C`, so each pair is solved by bisection.
/// Pairs with `p == 0` impose nothing.
pub fn fit_subgaussian_constant(ks: &[f64], ps: &[f64], prefactor: f64) -> f64 {
    let mut c_max: f64 = 0.0;
    for (&k, &p) in ks.iter().zip(ps) {
        if p <= 0.0 {
            continue;
        }
        let f = |c: f64| prefactor * c * (-k * k / c).exp();
        let (mut lo, mut hi) = (1e-12, 1.0);
        while f(hi) < p {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        c_max = c_max.max(hi);
    }
    c_max
}

/// Smallest `C` with `p <= exp(-K^2 / C)` for every pair (`+inf` if some `p = 1`, `K > 0`).
pub fn fit_gaussian_decay_constant(ks: &[f64], ps: &[f64]) -> f64 {
    ks.iter()
        .zip(ps)
        .filter(|(k, p)| **p > 0.0 && **k > 0.0)
        .map(|(&k, &p)| if p >= 1.0 { f64::INFINITY } else { k * k / (-p.ln()) })
        .fold(0.0, f64::max)
}
