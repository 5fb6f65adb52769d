//! Boltzmann weights, normalizing constants and the conditional samplers.

mod heat_bath;
mod sweep;

pub use heat_bath::{heat_bath_sweep, monotone_coupled_sweep, monotone_coupled_sweep_in_place, LATTICE_POINTS};
pub use sweep::{first_hitting_domain, mcmc_sweep, resample_on_stopping_domain, Block, StoppingDomain, SweepConfig};

use crate::bridge_sampler::fill_free_ensemble;
use crate::error::{Error, Result};
use crate::model::{exp_capped, BoundaryCurve, BoundaryData, Grid, Hamiltonian, LineEnsemble, McEstimate, DEFAULT_EXP_CAP};
use crate::rng::{open_unit, par_chunks, CHUNK};
use crate::stats::{merge_all, MeanAccumulator};
use rand::Rng;

pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// A resampling problem: curves `k1..=k2` on `[a, b]` with boundary data and
/// interaction `H`, optionally with the weight restricted off a window `(a', b')`.
///
/// Intervals are stored as indices into `grid`, the grid that carries the
/// boundary curves. Sampled ensembles live on the sub-grid `[a, b]`.
#[derive(Debug, Clone)]
pub struct ConditionalSpec {
    grid: Grid,
    sub: Grid,
    k1: usize,
    k2: usize,
    ia: usize,
    ib: usize,
    window: Option<(usize, usize)>,
    boundary: BoundaryData,
    hamiltonian: Hamiltonian,
    crossing_correction: bool,
    exp_cap: f64,
}

impl ConditionalSpec {
    pub fn new(grid: Grid, k1: usize, k2: usize, interval: (f64, f64), boundary: BoundaryData, hamiltonian: Hamiltonian) -> Result<Self> {
        if k1 == 0 || k2 < k1 {
            return Err(Error::InvalidSpec(format!("curve range {k1}..={k2} is empty or not 1-based")));
        }
        if boundary.k() != k2 - k1 + 1 {
            return Err(Error::LengthMismatch { expected: k2 - k1 + 1, found: boundary.k() });
        }
        let ia = grid.require_index(interval.0)?;
        let ib = grid.require_index(interval.1)?;
        if ia >= ib {
            return Err(Error::InvalidInterval { a: interval.0, b: interval.1 });
        }
        for c in [&boundary.upper, &boundary.lower] {
            if let Some(p) = c.as_path() {
                if !p.grid().approx_eq(&grid) {
                    return Err(Error::GridMismatch("boundary curve does not live on the spec grid".into()));
                }
            }
        }
        if boundary.x.iter().chain(&boundary.y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("entrance and exit data must be finite".into()));
        }
        let sub = grid.sub_grid(ia, ib)?;
        Ok(ConditionalSpec {
            grid,
            sub,
            k1,
            k2,
            ia,
            ib,
            window: None,
            boundary,
            hamiltonian,
            crossing_correction: true,
            exp_cap: DEFAULT_EXP_CAP,
        })
    }

    /// Restricts the weight to `[a, a'] ∪ [b', b]`.
    pub fn with_window(mut self, window: (f64, f64)) -> Result<Self> {
        let wa = self.grid.require_index(window.0)?;
        let wb = self.grid.require_index(window.1)?;
        if !(self.ia < wa && wa < wb && wb < self.ib) {
            return Err(Error::InvalidSpec(format!("window ({}, {}) must satisfy a < a' < b' < b", window.0, window.1)));
        }
        self.window = Some((wa, wb));
        Ok(self)
    }

    /// Toggles the per-segment crossing correction for the ordered interaction.
    pub fn with_crossing_correction(mut self, on: bool) -> Self {
        self.crossing_correction = on;
        self
    }

    pub fn with_exp_cap(mut self, cap: f64) -> Self {
        self.exp_cap = cap;
        self
    }

    pub fn k(&self) -> usize {
        self.k2 - self.k1 + 1
    }

    pub fn k_range(&self) -> (usize, usize) {
        (self.k1, self.k2)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// The grid on `[a, b]` that sampled curves live on.
    pub fn sub_grid(&self) -> &Grid {
        &self.sub
    }

    pub fn index_range(&self) -> (usize, usize) {
        (self.ia, self.ib)
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    pub fn hamiltonian(&self) -> Hamiltonian {
        self.hamiltonian
    }

    /// True when every pair term vanishes identically (`f = +inf`, `g = -inf`, no inner pairs).
    fn is_free(&self) -> bool {
        self.k() == 1 && self.boundary.upper.is_infinite() && self.boundary.lower.is_infinite()
    }

    fn ranges(&self) -> Vec<(usize, usize)> {
        let n = self.ib - self.ia;
        match self.window {
            None => vec![(0, n)],
            Some((wa, wb)) => vec![(0, wa - self.ia), (wb - self.ia, n)],
        }
    }

    fn boundary_slice<'a>(&self, c: &'a BoundaryCurve) -> Option<&'a [f64]> {
        c.as_path().map(|p| &p.values()[self.ia..=self.ib])
    }
}

/// Log Boltzmann weight `-sum_i int H(L_{i+1} - L_i)` by trapezoidal quadrature.
///
/// With the ordered interaction and crossing correction on, each pair
/// contributes the log probability that bridges through the grid values
/// never touch, so the result is the conditional acceptance probability
/// given the grid values rather than a grid-only indicator.
pub fn log_boltzmann_weight(ens: &LineEnsemble, spec: &ConditionalSpec) -> Result<f64> {
    if ens.k() != spec.k() {
        return Err(Error::GridMismatch(format!("ensemble has {} curves, spec needs {}", ens.k(), spec.k())));
    }
    if !ens.grid().approx_eq(&spec.sub) {
        return Err(Error::GridMismatch("ensemble grid differs from the spec interval".into()));
    }
    Ok(log_weight_floor(ens.curves(), spec, f64::NEG_INFINITY))
}

/// Same as [`log_boltzmann_weight`] without checks; may return `-inf` as soon
/// as the running value drops below `floor`.
pub fn log_weight_floor(curves: &[Vec<f64>], spec: &ConditionalSpec, floor: f64) -> f64 {
    let k = curves.len();
    let delta = spec.sub.spacing();
    let ranges = spec.ranges();
    let f = spec.boundary_slice(&spec.boundary.upper);
    let g = spec.boundary_slice(&spec.boundary.lower);
    let mut total = 0.0;
    for p in 0..=k {
        let (up, up_fixed) = if p == 0 { (f, true) } else { (Some(curves[p - 1].as_slice()), false) };
        let (lo, lo_fixed) = if p == k { (g, true) } else { (Some(curves[p].as_slice()), false) };
        let (Some(up), Some(lo)) = (up, lo) else { continue };
        let term = match spec.hamiltonian.rate() {
            Some(s) => -exp_pair_integral(up, lo, s, delta, &ranges, spec.exp_cap),
            None => {
                let diffusion = if up_fixed || lo_fixed { 1.0 } else { 2.0 };
                ordered_pair_log_weight(up, lo, delta, &ranges, spec.crossing_correction, diffusion)
            }
        };
        total += term;
        if total < floor || total == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
    }
    total
}

fn exp_pair_integral(up: &[f64], lo: &[f64], s: f64, delta: f64, ranges: &[(usize, usize)], cap: f64) -> f64 {
    let mut sum = 0.0;
    for &(j0, j1) in ranges {
        if j1 <= j0 {
            continue;
        }
        let mut part = 0.5 * (exp_capped(s * (lo[j0] - up[j0]), cap) + exp_capped(s * (lo[j1] - up[j1]), cap));
        for j in j0 + 1..j1 {
            part += exp_capped(s * (lo[j] - up[j]), cap);
        }
        sum += part * delta;
    }
    sum
}

fn ordered_pair_log_weight(up: &[f64], lo: &[f64], delta: f64, ranges: &[(usize, usize)], correct: bool, diffusion: f64) -> f64 {
    let mut log_w = 0.0;
    for &(j0, j1) in ranges {
        if correct {
            if up[j0] - lo[j0] <= 0.0 {
                return f64::NEG_INFINITY;
            }
            for j in j0..j1 {
                let (d0, d1) = (up[j] - lo[j], up[j + 1] - lo[j + 1]);
                if d1 <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                log_w += (-(-2.0 * d0 * d1 / (diffusion * delta)).exp()).ln_1p();
            }
        } else if (j0..=j1).any(|j| lo[j] > up[j]) {
            return f64::NEG_INFINITY;
        }
    }
    log_w
}

/// Monte Carlo estimate of `Z = E_free[W]` from `n` free draws.
pub fn estimate_z(spec: &ConditionalSpec, n: usize, seed: u64) -> McEstimate {
    let delta = spec.sub.spacing();
    let len = spec.sub.len();
    let b = &spec.boundary;
    let parts = par_chunks(n, CHUNK, seed, 0x21, |rng, range| {
        let mut acc = MeanAccumulator::new();
        let mut curves = vec![vec![0.0; len]; spec.k()];
        for _ in range {
            if spec.is_free() {
                acc.push(1.0);
                continue;
            }
            fill_free_ensemble(&mut curves, &b.x, &b.y, delta, rng);
            acc.push(log_weight_floor(&curves, spec, f64::NEG_INFINITY).exp());
        }
        acc
    });
    McEstimate::from_accumulator(&merge_all(&parts), seed)
}

/// Rejection sampler: draws free candidates and accepts with probability `W`.
///
/// Returns the accepted ensemble (on the spec sub-grid) and the acceptance
/// index, which is geometric with mean `1/Z`.
pub fn sample_conditional<R: Rng + ?Sized>(spec: &ConditionalSpec, rng: &mut R, budget: u64) -> Result<(LineEnsemble, u64)> {
    let mut curves = vec![vec![0.0; spec.sub.len()]; spec.k()];
    let attempts = sample_conditional_into(&mut curves, spec, rng, budget)?;
    Ok((LineEnsemble::new(spec.sub, curves)?, attempts))
}

/// Buffer-reusing form of [`sample_conditional`].
pub fn sample_conditional_into<R: Rng + ?Sized>(curves: &mut [Vec<f64>], spec: &ConditionalSpec, rng: &mut R, budget: u64) -> Result<u64> {
    let delta = spec.sub.spacing();
    let b = &spec.boundary;
    for attempt in 1..=budget {
        fill_free_ensemble(curves, &b.x, &b.y, delta, rng);
        let log_u = open_unit(rng).ln();
        if log_weight_floor(curves, spec, log_u) >= log_u {
            return Ok(attempt);
        }
    }
    Err(Error::RejectionBudgetExhausted { attempts: budget, block: None })
}
