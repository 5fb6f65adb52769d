//! The three-curve fluctuation pipeline: big oscillations of the top curve
//! are bounded by bad boundary data plus a Gaussian decay term.

use super::report::ExperimentReport;
use super::{MAX_GRID_POINTS, MAX_SAMPLES};
use crate::bridge_analytics::{fit_gaussian_decay_constant, fit_subgaussian_constant, oscillation_tail_estimates, OSCILLATION_GRID};
use crate::bridge_sampler::fill_bridge;
use crate::error::{Error, Result};
use crate::gibbs::{log_weight_floor, sample_conditional_into, ConditionalSpec, DEFAULT_BUDGET};
use crate::model::{BoundaryCurve, BoundaryData, Grid, Hamiltonian, McEstimate};
use crate::rng::{par_chunks, CHUNK};
use crate::stats::{merge_all, MeanAccumulator};
use rand::Rng;
use std::time::Instant;

/// Centres of the synthetic boundary law at `u = ±1`.
const CENTRES: [f64; 3] = [1.0, 0.0, -1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationConfig {
    pub d: f64,
    pub k_list: Vec<f64>,
    /// Half-width of the uniform jitter around each boundary centre.
    pub boundary_box: f64,
    /// Boundary draws (one Gibbs sample each).
    pub n_samples: usize,
    /// Free draws per boundary for `Z` and the free fluctuation probability.
    pub n_inner: usize,
    /// Free draws for the worst-case decay fit.
    pub n_free: usize,
    pub t: f64,
    pub grid_points: usize,
    pub seed: u64,
}

impl FluctuationConfig {
    pub fn new(d: f64, k_list: Vec<f64>, boundary_box: f64, n_samples: usize, seed: u64) -> Self {
        FluctuationConfig { d, k_list, boundary_box, n_samples, n_inner: 256, n_free: 20_000, t: 1.0, grid_points: 129, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if !(self.d > 0.0 && self.d <= 1.0) {
            return bad(format!("d must lie in (0, 1], got {}", self.d));
        }
        if self.k_list.is_empty() || self.k_list.iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
            return bad(format!("K values must be finite and nonnegative, got {:?}", self.k_list));
        }
        if !(self.boundary_box >= 0.0 && self.boundary_box.is_finite()) {
            return bad(format!("boundary_box must be nonnegative, got {}", self.boundary_box));
        }
        for (name, n) in [("n_samples", self.n_samples), ("n_inner", self.n_inner), ("n_free", self.n_free)] {
            if n == 0 || n > MAX_SAMPLES {
                return bad(format!("{name} must lie in 1..={MAX_SAMPLES}, got {n}"));
            }
        }
        if !(1.0..=1000.0).contains(&self.t) {
            return bad(format!("t must lie in [1, 1000], got {}", self.t));
        }
        if self.grid_points < 3 || self.grid_points > MAX_GRID_POINTS {
            return bad(format!("grid_points must lie in 3..={MAX_GRID_POINTS}, got {}", self.grid_points));
        }
        if self.window() == 0 {
            return bad(format!("grid too coarse for window d = {}", self.d));
        }
        Ok(())
    }

    fn window(&self) -> usize {
        let delta = 2.0 / (self.grid_points - 1) as f64;
        (self.d / delta + 1e-9).floor() as usize
    }
}

/// `sup_{u,v in [0,d]} |L(u) - L(v)|` on the grid.
fn range_on(values: &[f64], i0: usize, w: usize) -> f64 {
    let s = &values[i0..=i0 + w];
    let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo
}

struct Replica {
    z: f64,
    in_box: f64,
    free_fluc: Vec<f64>,
    fluc: Vec<bool>,
}

/// Worst-case free fluctuation probability over boundaries in `[-K, K]^6`,
/// attained at the steepest top-curve bridge from `-K` to `K`.
fn worst_case_free(cfg: &FluctuationConfig, grid: &Grid, i0: usize, w: usize) -> Vec<McEstimate> {
    let n = grid.len();
    let delta = grid.spacing();
    cfg.k_list
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let level = k * cfg.d.sqrt();
            let parts = par_chunks(cfg.n_free, CHUNK, cfg.seed, 0xF000 + ki as u32, |rng, range| {
                let mut acc = MeanAccumulator::new();
                let mut v = vec![0.0; n];
                for _ in range {
                    v[0] = -k;
                    v[n - 1] = k;
                    fill_bridge(&mut v, delta, rng);
                    acc.push(if range_on(&v, i0, w) >= level { 1.0 } else { 0.0 });
                }
                acc
            });
            McEstimate::from_accumulator(&merge_all(&parts), cfg.seed)
        })
        .collect()
}

/// Samples boundary data from a jittered law, the three-curve Gibbs
/// conditional given it, and checks the bad-boundary decomposition of
/// `P(BigFluc)` at every `K`.
pub fn run_fluctuation_experiment(cfg: &FluctuationConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut r = ExperimentReport::new("fluctuation");
    r.echo("d", cfg.d);
    r.echo("K_list", cfg.k_list.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", "));
    r.echo("boundary_box", cfg.boundary_box);
    r.echo("n_samples", cfg.n_samples);
    r.echo("n_inner", cfg.n_inner);
    r.echo("n_free", cfg.n_free);
    r.echo("t", cfg.t);
    r.echo("grid_points", cfg.grid_points);
    r.echo("seed", cfg.seed);

    let grid = Grid::new(-1.0, 1.0, cfg.grid_points)?;
    let i0 = grid.require_index(0.0)?;
    let w = cfg.window();
    let n = grid.len();
    let delta = grid.spacing();
    let h = Hamiltonian::scaled(cfg.t)?;
    let ks = &cfg.k_list;

    // Decay constant C with P_free(BigFluc) <= e^{-K^2/C} uniformly over the box.
    let worst = worst_case_free(cfg, &grid, i0, w);
    let worst_p: Vec<f64> = worst.iter().map(|e| e.mean).collect();
    let c = fit_gaussian_decay_constant(ks, &worst_p);
    for (k, e) in ks.iter().zip(&worst) {
        r.estimate(format!("p_free_worst_K{k}"), *e);
    }
    r.value("fitted_C", c);

    // Standard-bridge oscillation tail and its subgaussian constant.
    let osc = oscillation_tail_estimates(cfg.d, ks, OSCILLATION_GRID, cfg.n_free, cfg.seed)?;
    let osc_p: Vec<f64> = osc.iter().map(|e| e.mean).collect();
    let c0 = fit_subgaussian_constant(ks, &osc_p, 1.0);
    r.value("fitted_C0", c0);
    let decay_ok = ks.iter().zip(&osc_p).all(|(k, p)| *p <= c0 * (-k * k / c0).exp() * (1.0 + 1e-9) || *k == 0.0);
    r.check("free_decay_C0", decay_ok, format!("P_free(osc > K sqrt(d)) <= C0 e^(-K^2/C0) with C0 = {c0:.6}"));

    let parts = par_chunks(cfg.n_samples, CHUNK / 8, cfg.seed, 0xF100, |rng, range| {
        let mut out = Vec::with_capacity(range.len());
        let mut curves = vec![vec![0.0; n]; 3];
        for _ in range {
            let x: Vec<f64> = CENTRES.iter().map(|c| c + cfg.boundary_box * (2.0 * rng.random::<f64>() - 1.0)).collect();
            let y: Vec<f64> = CENTRES.iter().map(|c| c + cfg.boundary_box * (2.0 * rng.random::<f64>() - 1.0)).collect();
            let bd = BoundaryData::new(x.clone(), y.clone(), BoundaryCurve::PlusInfinity, BoundaryCurve::MinusInfinity)?;
            let spec = ConditionalSpec::new(grid, 1, 3, (-1.0, 1.0), bd, h)?;
            let mut z = MeanAccumulator::new();
            let mut free_hits = vec![0u64; ks.len()];
            for _ in 0..cfg.n_inner {
                for (i, cur) in curves.iter_mut().enumerate() {
                    cur[0] = x[i];
                    cur[n - 1] = y[i];
                    fill_bridge(cur, delta, rng);
                }
                z.push(log_weight_floor(&curves, &spec, f64::NEG_INFINITY).exp());
                let osc = range_on(&curves[0], i0, w);
                for (hit, k) in free_hits.iter_mut().zip(ks) {
                    *hit += (osc >= k * cfg.d.sqrt()) as u64;
                }
            }
            sample_conditional_into(&mut curves, &spec, rng, DEFAULT_BUDGET)?;
            let osc = range_on(&curves[0], i0, w);
            let extent = x.iter().chain(&y).fold(0.0f64, |m, v| m.max(v.abs()));
            out.push(Replica {
                z: z.mean(),
                in_box: extent,
                free_fluc: free_hits.iter().map(|&c| c as f64 / cfg.n_inner as f64).collect(),
                fluc: ks.iter().map(|k| osc >= k * cfg.d.sqrt()).collect(),
            });
        }
        Ok::<_, Error>(out)
    });
    let mut reps = Vec::with_capacity(cfg.n_samples);
    for p in parts {
        reps.extend(p?);
    }
    let nf = reps.len() as f64;
    let bernoulli = |p: f64| McEstimate { mean: p, stderr: (p * (1.0 - p) / nf).sqrt(), n_samples: reps.len() as u64, seed: cfg.seed };

    let mut big = Vec::new();
    let mut nested = true;
    for (ki, &k) in ks.iter().enumerate() {
        let decay = if c > 0.0 { (-k * k / (2.0 * c)).exp() } else { 0.0 };
        let good = |rep: &Replica| rep.in_box <= k && rep.z >= decay;
        let p_big = bernoulli(reps.iter().filter(|x| x.fluc[ki]).count() as f64 / nf);
        let p_gbc = bernoulli(reps.iter().filter(|x| !good(x)).count() as f64 / nf);
        let sup_term = reps.iter().filter(|x| good(x)).map(|x| x.free_fluc[ki] / x.z).fold(0.0, f64::max);
        let slack = 3.0 * p_big.stderr.hypot(p_gbc.stderr);
        r.estimate(format!("p_bigfluc_K{k}"), p_big);
        r.estimate(format!("p_gb_complement_K{k}"), p_gbc);
        r.value(format!("decay_term_K{k}"), decay);
        r.value(format!("sup_term_K{k}"), sup_term);
        r.check(
            format!("middle_bound_K{k}"),
            p_big.mean <= p_gbc.mean + decay + slack,
            format!("{:.6} <= {:.6} + {:.6} (+ {:.2e} at 3 SE)", p_big.mean, p_gbc.mean, decay, slack),
        );
        r.check(
            format!("key_bound_K{k}"),
            p_big.mean <= p_gbc.mean + sup_term.min(1.0) + slack,
            format!("{:.6} <= {:.6} + {:.6} (+ {:.2e} at 3 SE)", p_big.mean, p_gbc.mean, sup_term, slack),
        );
        for (kj, &k2) in ks.iter().enumerate() {
            if k2 > k {
                nested &= reps.iter().all(|x| !x.fluc[kj] || x.fluc[ki]);
            }
        }
        big.push(p_big.mean);
    }
    r.check("bigfluc_nested_in_K", nested, "BigFluc at larger K implies BigFluc at smaller K on every sample");
    r.value("fitted_C_bigfluc", fit_gaussian_decay_constant(ks, &big));
    r.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(r)
}
