//! Asymptotic ordering: how often adjacent curves come within `rho` of each
//! other on `[-1, 1]` as `t` grows.

use super::report::{le_within, ExperimentReport};
use super::{MAX_GRID_POINTS, MAX_SAMPLES};
use crate::error::{Error, Result};
use crate::gibbs::{mcmc_sweep, Block, SweepConfig};
use crate::model::{BoundaryCurve, BoundaryData, Grid, Hamiltonian, LineEnsemble, McEstimate};
use crate::rng::{par_chunks, CHUNK};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingConfig {
    /// The gap between curves `k` and `k+1` (1-based) of a `k+1` curve ensemble.
    pub k: usize,
    pub t_list: Vec<f64>,
    /// Spacing of the entrance and exit data at `u = ±2`.
    pub gap: f64,
    pub rho: f64,
    /// Independent chains per `t`.
    pub n_chains: usize,
    /// Sweeps before the first read-out; the second read-out is at twice this.
    pub burn_in: usize,
    pub points_per_unit: usize,
    pub seed: u64,
}

impl OrderingConfig {
    pub fn new(k: usize, t_list: Vec<f64>, gap: f64, rho: f64, n_chains: usize, seed: u64) -> Self {
        OrderingConfig { k, t_list, gap, rho, n_chains, burn_in: 10, points_per_unit: 16, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if !(1..=4).contains(&self.k) {
            return bad(format!("k must lie in 1..=4, got {}", self.k));
        }
        if self.t_list.is_empty() || self.t_list.iter().any(|t| !(1.0..=1000.0).contains(t)) {
            return bad(format!("every t must lie in [1, 1000], got {:?}", self.t_list));
        }
        if !(self.gap > 0.0 && self.gap.is_finite()) {
            return bad(format!("gap must be positive for strictly ordered boundary data, got {}", self.gap));
        }
        if self.rho.is_nan() {
            return bad("rho must not be NaN".into());
        }
        if self.n_chains < 2 || self.n_chains > MAX_SAMPLES {
            return bad(format!("n_chains must lie in 2..={MAX_SAMPLES}, got {}", self.n_chains));
        }
        if self.burn_in == 0 {
            return bad("burn_in must be positive".into());
        }
        if self.points_per_unit < 2 || 4 * self.points_per_unit + 1 > MAX_GRID_POINTS {
            return bad(format!("points_per_unit out of range: {}", self.points_per_unit));
        }
        Ok(())
    }
}

/// Minimum over grid points in `[-1, 1]` of `L_k - L_{k+1}`.
fn min_gap(state: &LineEnsemble, k: usize, i0: usize, i1: usize) -> f64 {
    let (up, lo) = (state.curve(k - 1), state.curve(k));
    (i0..=i1).map(|i| up[i] - lo[i]).fold(f64::INFINITY, f64::min)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (pos - i as f64) * (sorted[j] - sorted[i])
}

fn fraction_below(gaps: &[f64], rho: f64, seed: u64) -> McEstimate {
    let n = gaps.len() as f64;
    let p = gaps.iter().filter(|&&g| g < rho).count() as f64 / n;
    McEstimate { mean: p, stderr: (p * (1.0 - p) / n).sqrt(), n_samples: gaps.len() as u64, seed }
}

/// Runs independent block-Gibbs chains of `k+1` curves on `[-2, 2]` for each
/// `t` and estimates `P(min_{[-1,1]} (L_k - L_{k+1}) < rho)`.
///
/// Each chain is read at `burn_in` and `2 burn_in` sweeps; if the two
/// estimates disagree by more than 3 combined SE the run fails with
/// `MixingDiagnostic`.
pub fn run_ordering_experiment(cfg: &OrderingConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut r = ExperimentReport::new("ordering");
    r.echo("k", cfg.k);
    r.echo("t_list", cfg.t_list.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", "));
    r.echo("gap", cfg.gap);
    r.echo("rho", cfg.rho);
    r.echo("n_chains", cfg.n_chains);
    r.echo("burn_in", cfg.burn_in);
    r.echo("points_per_unit", cfg.points_per_unit);
    r.echo("seed", cfg.seed);

    let curves = cfg.k + 1;
    let grid = Grid::new(-2.0, 2.0, 4 * cfg.points_per_unit + 1)?;
    let (i0, i1) = (grid.require_index(-1.0)?, grid.require_index(1.0)?);
    let ends: Vec<f64> = (0..curves).map(|i| -(i as f64) * cfg.gap).collect();
    let outer = BoundaryData::new(ends.clone(), ends.clone(), BoundaryCurve::PlusInfinity, BoundaryCurve::MinusInfinity)?;
    let init = LineEnsemble::linear(grid, &ends, &ends)?;
    let blocks: Vec<Block> = (0..curves).map(|i| Block::new(i, i, -2.0, 2.0)).collect();
    let sweep_cfg = SweepConfig::default();

    let mut estimates = Vec::new();
    for (ti, &t) in cfg.t_list.iter().enumerate() {
        let h = Hamiltonian::scaled(t)?;
        let parts = par_chunks(cfg.n_chains, CHUNK, cfg.seed, 0x0D00 + ti as u32, |rng, range| {
            let mut out = Vec::with_capacity(range.len());
            for _ in range {
                let mut state = init.clone();
                let mut first = 0.0;
                for s in 1..=2 * cfg.burn_in {
                    state = mcmc_sweep(&state, &outer, h, rng, &blocks, &sweep_cfg)?;
                    if s == cfg.burn_in {
                        first = min_gap(&state, cfg.k, i0, i1);
                    }
                }
                out.push((first, min_gap(&state, cfg.k, i0, i1)));
            }
            Ok::<_, Error>(out)
        });
        let mut pairs = Vec::with_capacity(cfg.n_chains);
        for p in parts {
            pairs.extend(p?);
        }
        let early: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mut late: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let p_early = fraction_below(&early, cfg.rho, cfg.seed);
        let p_late = fraction_below(&late, cfg.rho, cfg.seed);
        let z = (p_early.mean - p_late.mean).abs() / p_early.stderr.hypot(p_late.stderr);
        if z > 3.0 {
            return Err(Error::MixingDiagnostic(format!(
                "t={t}: estimate {} at {} sweeps vs {} at {} sweeps ({z:.2} SE apart)",
                p_early.mean,
                cfg.burn_in,
                p_late.mean,
                2 * cfg.burn_in
            )));
        }
        r.estimate(format!("p_gap_below_rho_t{t}"), p_late);
        late.sort_by(f64::total_cmp);
        for q in [0.05f64, 0.25, 0.5, 0.75, 0.95] {
            r.value(format!("min_gap_q{:02}_t{t}", (q * 100.0).round() as u32), quantile(&late, q));
        }
        estimates.push((t, p_late));
    }
    let mut monotone = true;
    let mut detail = Vec::new();
    for w in estimates.windows(2) {
        let ok = le_within(&w[1].1, &w[0].1, 3.0);
        monotone &= ok;
        detail.push(format!("t={}: {:.6} -> t={}: {:.6}", w[0].0, w[0].1.mean, w[1].0, w[1].1.mean));
    }
    r.check("nonincreasing_in_t", monotone, detail.join("; "));
    r.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(r)
}
