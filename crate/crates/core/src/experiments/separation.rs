//! Separation of curves under the off-window reweighted measure, and the
//! normalizing-constant lower bound it implies.
//!
//! Curve `j` (1-based) lives on `[l_j, r_j] = [-(k+2-j)L, (k+2-j)L]` and is
//! extended by the boundary `f_j` outside; `f_{k+1}` is a fixed floor on
//! `[l_1, r_1]`. The target law reweights free bridges by the Boltzmann
//! weight restricted to `[l_1, -L] ∪ [L, r_1]`.

use super::importance::{mixture_log_ratio, shift_log_ratio, weighted_fraction};
use super::report::ExperimentReport;
use super::{MAX_GRID_POINTS, MAX_SAMPLES, MIN_ESS};
use crate::bridge_sampler::{fill_bridge, sample_truncated_normal};
use crate::error::{Error, Result};
use crate::gibbs::{estimate_z, log_boltzmann_weight, log_weight_floor, ConditionalSpec};
use crate::model::{BoundaryCurve, BoundaryData, Grid, Hamiltonian, LineEnsemble, McEstimate, Path};
use crate::rng::{par_chunks, stream, CHUNK};
use crate::stats::{effective_sample_size, log_normal_interval};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationConfig {
    pub k: usize,
    pub l: f64,
    pub t: f64,
    pub m: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Grid intervals per unit length (at least 32, i.e. 33 points per unit).
    pub points_per_unit: usize,
    /// Constant value of every boundary component; must satisfy `|c| <= M`.
    pub boundary_level: f64,
    /// Boundaries resampled from `E` for the normalizing-constant run.
    pub n_boundaries: usize,
    /// Free draws per resampled boundary.
    pub n_inner: usize,
}

impl SeparationConfig {
    pub fn new(k: usize, l: f64, t: f64, m: f64, n_samples: usize, seed: u64) -> Self {
        SeparationConfig { k, l, t, m, n_samples, seed, points_per_unit: 32, boundary_level: 0.0, n_boundaries: 200, n_inner: 2000 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if !(1..=4).contains(&self.k) {
            return bad(format!("k must lie in 1..=4, got {}", self.k));
        }
        if !(self.l >= 1.0 && self.l.is_finite()) {
            return bad(format!("L must be >= 1, got {}", self.l));
        }
        if !(1.0..=1000.0).contains(&self.t) {
            return bad(format!("t must lie in [1, 1000], got {}", self.t));
        }
        if !(self.m >= self.l.sqrt() && self.m.is_finite()) {
            return bad(format!("M must satisfy M >= sqrt(L) = {}, got {}", self.l.sqrt(), self.m));
        }
        if self.n_samples == 0 || self.n_samples > MAX_SAMPLES {
            return bad(format!("n_samples must lie in 1..={MAX_SAMPLES}, got {}", self.n_samples));
        }
        if self.points_per_unit < 32 {
            return bad(format!("points_per_unit must be >= 32, got {}", self.points_per_unit));
        }
        if !(self.boundary_level.abs() <= self.m) {
            return bad(format!("boundary_level must satisfy |c| <= M, got {}", self.boundary_level));
        }
        if self.n_boundaries == 0 || self.n_inner == 0 || self.n_inner > MAX_SAMPLES {
            return bad("n_boundaries and n_inner must be positive".into());
        }
        if Layout::points(self) > MAX_GRID_POINTS {
            return bad(format!("grid would need {} points, cap is {MAX_GRID_POINTS}", Layout::points(self)));
        }
        Ok(())
    }

    /// `l_j = -(k+2-j)L` for `j` in `1..=k+1`.
    pub fn left(&self, j: usize) -> f64 {
        -((self.k + 2 - j) as f64) * self.l
    }

    pub fn right(&self, j: usize) -> f64 {
        -self.left(j)
    }

    /// Endpoint band `[(4k-4j+3)M, (4k-4j+5)M]` of curve `j` in the event `E`.
    pub fn band(&self, j: usize) -> (f64, f64) {
        let base = (4 * (self.k - j)) as f64;
        ((base + 3.0) * self.m, (base + 5.0) * self.m)
    }

    fn echo(&self, r: &mut ExperimentReport) {
        r.echo("k", self.k);
        r.echo("L", self.l);
        r.echo("t", self.t);
        r.echo("M", self.m);
        r.echo("n_samples", self.n_samples);
        r.echo("seed", self.seed);
        r.echo("points_per_unit", self.points_per_unit);
        r.echo("boundary_level", self.boundary_level);
    }
}

/// Grid on `[l_1, r_1]` with every `l_j`, `r_j` and `±L` on a node.
struct Layout {
    grid: Grid,
    m: usize,
    n: usize,
}

impl Layout {
    fn per_l(cfg: &SeparationConfig) -> usize {
        (cfg.points_per_unit as f64 * cfg.l - 1e-9).ceil() as usize
    }

    fn points(cfg: &SeparationConfig) -> usize {
        2 * (cfg.k + 1) * Self::per_l(cfg) + 1
    }

    fn new(cfg: &SeparationConfig) -> Result<Self> {
        let m = Self::per_l(cfg);
        let n = Self::points(cfg);
        Ok(Layout { grid: Grid::new(cfg.left(1), cfg.right(1), n)?, m, n })
    }

    /// Index range of curve `j` (1-based); `j = k+1` gives `[-L, L]`.
    fn span(&self, j: usize) -> (usize, usize) {
        ((j - 1) * self.m, self.n - 1 - (j - 1) * self.m)
    }
}

const FREE_P: f64 = 0.2;
const LIFT_P: f64 = 0.2;
const BAND_P: f64 = 0.4;
const RAISED_P: f64 = 0.2;
/// Per-curve spacing of the lifted component, in units of `sqrt(L)`.
const LIFT_STEP: f64 = 1.0;

/// Piecewise-linear shift rising from 0 at index `0` to `h` at `rise`,
/// flat until `len - 1 - rise`, back to 0 at `len - 1`.
fn plateau(len: usize, rise: usize, h: f64) -> Vec<f64> {
    (0..len)
        .map(|i| {
            let d = i.min(len - 1 - i);
            if d >= rise {
                h
            } else {
                h * d as f64 / rise as f64
            }
        })
        .collect()
}

/// Free law of `(B(-L), B(L))` for one curve: a bridge pinned at `c` over
/// duration `total`, read at elapsed times `s1 < s2`.
struct EndpointLaw {
    c: f64,
    s1: f64,
    s2: f64,
    total: f64,
}

impl EndpointLaw {
    fn first(&self) -> (f64, f64) {
        (self.c, (self.s1 * (self.total - self.s1) / self.total).sqrt())
    }

    fn second(&self, x1: f64) -> (f64, f64) {
        let rest = self.total - self.s1;
        let gap = self.s2 - self.s1;
        (x1 + (self.c - x1) * gap / rest, (gap * (self.total - self.s2) / rest).sqrt())
    }

    /// `ln P(x1 in band) + ln P(x2 in band | x1)`.
    fn log_band_mass(&self, x1: f64, band: (f64, f64)) -> f64 {
        let interval = |(m, sd): (f64, f64)| log_normal_interval((band.0 - m) / sd, (band.1 - m) / sd);
        interval(self.first()) + interval(self.second(x1))
    }
}
struct Draw {
    log_w: f64,
    e: bool,
    a: bool,
    f: bool,
    /// `L_j(-L)` then `L_j(L)` for each curve, kept only when `e`.
    ends: Vec<f64>,
}

struct Sampler {
    cfg: SeparationConfig,
    lay: Layout,
    spec: ConditionalSpec,
    /// Endpoint law of each curve, for the band-conditioned component.
    laws: Vec<EndpointLaw>,
    /// Shift of each curve under the raised component.
    raised: Vec<Vec<f64>>,
    /// Shift of each curve under the lifted component, which only staggers
    /// the curves above the floor and each other.
    lift: Vec<Vec<f64>>,
}

impl Sampler {
    fn new(cfg: &SeparationConfig) -> Result<Self> {
        cfg.validate()?;
        let lay = Layout::new(cfg)?;
        let k = cfg.k;
        let c = cfg.boundary_level;
        let floor = BoundaryCurve::Curve(Path::constant(lay.grid, c)?);
        let bd = BoundaryData::new(vec![c; k], vec![c; k], BoundaryCurve::PlusInfinity, floor)?;
        let spec = ConditionalSpec::new(lay.grid, 1, k, (cfg.left(1), cfg.right(1)), bd, Hamiltonian::scaled(cfg.t)?)?
            .with_window((-cfg.l, cfg.l))?;
        // Mixture of the free law, the free law conditioned on E (endpoints
        // drawn sequentially from their band-truncated conditionals), and a
        // drift already above the A-level by l_{j+1}.
        let delta = lay.grid.spacing();
        let (p1, p2) = lay.span(k + 1);
        let mut laws = Vec::new();
        let mut raised = Vec::new();
        let mut lift = Vec::new();
        for j in 1..=k {
            let (i0, i1) = lay.span(j);
            let el = |i: usize| (i - i0) as f64 * delta;
            laws.push(EndpointLaw { c, s1: el(p1), s2: el(p2), total: el(i1) });
            let mid = (4 * (k - j) + 4) as f64 * cfg.m;
            raised.push(plateau(i1 - i0 + 1, lay.m, mid + 0.5 * cfg.m - c));
            lift.push(plateau(i1 - i0 + 1, lay.m / 2, (k + 1 - j) as f64 * LIFT_STEP * cfg.l.sqrt()));
        }
        Ok(Sampler { cfg: cfg.clone(), lay, spec, laws, raised, lift })
    }

    fn draw<R: Rng + ?Sized>(&self, curves: &mut [Vec<f64>], rng: &mut R) -> Draw {
        let cfg = &self.cfg;
        let k = cfg.k;
        let delta = self.lay.grid.spacing();
        let (lo_l, hi_l) = self.lay.span(k + 1);
        let u: f64 = rng.random();
        let comp = if u < FREE_P {
            0
        } else if u < FREE_P + BAND_P {
            1
        } else if u < FREE_P + BAND_P + RAISED_P {
            2
        } else {
            3
        };
        let mut log_raised = 0.0;
        let mut log_lift = 0.0;
        let mut log_band = 0.0;
        let mut e = true;
        for j in 1..=k {
            let (i0, i1) = self.lay.span(j);
            let band = cfg.band(j);
            let law = &self.laws[j - 1];
            let cur = &mut curves[j - 1];
            cur.fill(cfg.boundary_level);
            let seg = &mut cur[i0..=i1];
            let (q1, q2) = (lo_l - i0, hi_l - i0);
            if comp == 1 {
                let (m1, sd1) = law.first();
                seg[q1] = sample_truncated_normal(m1, sd1, band.0, band.1, rng);
                let (m2, sd2) = law.second(seg[q1]);
                seg[q2] = sample_truncated_normal(m2, sd2, band.0, band.1, rng);
                fill_bridge(&mut seg[..=q1], delta, rng);
                fill_bridge(&mut seg[q1..=q2], delta, rng);
                fill_bridge(&mut seg[q2..], delta, rng);
            } else {
                fill_bridge(seg, delta, rng);
                let shift = match comp {
                    2 => Some(&self.raised[j - 1]),
                    3 => Some(&self.lift[j - 1]),
                    _ => None,
                };
                if let Some(sh) = shift {
                    seg.iter_mut().zip(sh).for_each(|(x, s)| *x += s);
                }
            }
            log_raised += shift_log_ratio(seg, &self.raised[j - 1], delta);
            log_lift += shift_log_ratio(seg, &self.lift[j - 1], delta);
            let in_band = |v: f64| band.0 <= v && v <= band.1;
            e &= in_band(seg[q1]) && in_band(seg[q2]);
            if e {
                log_band += law.log_band_mass(seg[q1], band);
            }
        }
        // dP/dQ with dQ_band/dP = 1_E / P(E).
        let log_band_ratio = if e { -log_band } else { f64::NEG_INFINITY };
        let log_pq = mixture_log_ratio(&[0.0, log_band_ratio, log_raised, log_lift], &[FREE_P, BAND_P, RAISED_P, LIFT_P]);
        let log_w = log_weight_floor(curves, &self.spec, f64::NEG_INFINITY) + log_pq;
        let mut a = true;
        let mut f = true;
        for j in 1..=k {
            let cur = &curves[j - 1];
            let (b0, b1) = cfg.band(j);
            let in_band = |v: f64| b0 <= v && v <= b1;
            let (o0, o1) = self.lay.span(j);
            let (n0, n1) = self.lay.span(j + 1);
            let inner = &cur[n0..=n1];
            a &= inner.iter().all(|&v| v >= (b0 + b1) / 2.0);
            f &= inner.iter().all(|&v| in_band(v)) && cur[o0..=o1].iter().all(|&v| v <= b1);
        }
        let ends = if e { curves.iter().flat_map(|c| [c[lo_l], c[hi_l]]).collect() } else { Vec::new() };
        Draw { log_w, e, a, f, ends }
    }

    fn run(&self, salt: u32) -> Vec<Draw> {
        let n = self.lay.n;
        let k = self.cfg.k;
        par_chunks(self.cfg.n_samples, CHUNK, self.cfg.seed, salt, |rng, range| {
            let mut curves = vec![vec![0.0; n]; k];
            range.map(|_| self.draw(&mut curves, rng)).collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect()
    }
}

/// Smallest `D >= 1` with `log_p >= -ln D - D x`, the two-sided constant form
/// `p >= D^{-1} e^{-D x}`. Infinite when `log_p = -inf`.
pub fn fit_log_lower_constant(log_p: f64, x: f64) -> f64 {
    if log_p == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let g = |d: f64| -d.ln() - d * x;
    if log_p >= g(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while g(hi) > log_p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > log_p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

struct SeparationOutcome {
    draws: Vec<Draw>,
    log_w: Vec<f64>,
    p_e: McEstimate,
}

fn separation_core(cfg: &SeparationConfig, r: &mut ExperimentReport) -> Result<SeparationOutcome> {
    let sampler = Sampler::new(cfg)?;
    let draws = sampler.run(0x5E);
    let log_w: Vec<f64> = draws.iter().map(|d| d.log_w).collect();
    let ess = effective_sample_size(&log_w);
    if !(ess >= MIN_ESS) {
        return Err(Error::EffectiveSampleSizeTooSmall { ess, threshold: MIN_ESS });
    }
    let e_logs: Vec<f64> = draws.iter().filter(|d| d.e).map(|d| d.log_w).collect();
    let ess_e = effective_sample_size(&e_logs);
    let p_e = weighted_fraction(&log_w, |i| draws[i].e, cfg.seed);
    let p_a = weighted_fraction(&log_w, |i| draws[i].a, cfg.seed);
    let p_f = weighted_fraction(&log_w, |i| draws[i].f, cfg.seed);
    r.estimate("p_E", p_e);
    r.estimate("p_A_all", p_a);
    r.estimate("p_F_all", p_f);
    r.value("ess", ess);
    r.value("ess_E", ess_e);
    r.value("hits_E", e_logs.len() as f64);
    let x = cfg.m * cfg.m / cfg.l + cfg.l;
    let d3 = fit_log_lower_constant(p_e.mean.ln(), x);
    r.value("log_p_E", p_e.mean.ln());
    r.value("fitted_D", d3);
    r.check("ess_E", ess_e >= MIN_ESS, format!("ESS restricted to E is {ess_e:.1} (need >= {MIN_ESS})"));
    let inclusion = draws.iter().all(|d| !d.f || d.e);
    r.check("F_subset_E", inclusion && p_f.mean <= p_e.mean, "every sample in all F_j is in E");
    r.check(
        "log_p_E_lower_bound",
        p_e.mean > 0.0 && d3.is_finite(),
        format!("log p_E = {:.6} >= -ln D - D (M^2/L + L) with fitted D = {d3:.6}", p_e.mean.ln()),
    );
    Ok(SeparationOutcome { draws, log_w, p_e })
}

/// Estimates `P~(E)`, `P~(∩A_j)` and `P~(∩F_j)` by self-normalized importance
/// sampling from a defensive mixture of free and drift-shifted bridges.
pub fn run_separation_experiment(cfg: &SeparationConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut r = ExperimentReport::new("separation");
    cfg.echo(&mut r);
    separation_core(cfg, &mut r)?;
    r.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(r)
}

/// `P(sup_{[0,T]} |B| <= a)` for a standard bridge pinned at 0 on both ends.
pub(crate) fn bridge_sup_abs_below(a: f64, duration: f64) -> f64 {
    let mut s = 0.0;
    for m in 1..=200 {
        let term = (-2.0 * (m * m) as f64 * a * a / duration).exp();
        s += if m % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (1.0 - 2.0 * s).clamp(0.0, 1.0)
}

/// Resamples boundaries realizing `E`, estimates `Z` on `(-L, L)` for each,
/// and checks the oscillation-event weight bound on fresh free draws.
pub fn run_z_lowerbound_experiment(cfg: &SeparationConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut r = ExperimentReport::new("z_lowerbound");
    cfg.echo(&mut r);
    r.echo("n_boundaries", cfg.n_boundaries);
    r.echo("n_inner", cfg.n_inner);
    let out = separation_core(cfg, &mut r)?;
    let hits: Vec<usize> = (0..out.draws.len()).filter(|&i| out.draws[i].e).collect();
    if hits.is_empty() || out.p_e.mean == 0.0 {
        return Err(Error::EffectiveSampleSizeTooSmall { ess: 0.0, threshold: MIN_ESS });
    }
    let top = hits.iter().map(|&i| out.log_w[i]).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = hits.iter().map(|&i| (out.log_w[i] - top).exp()).collect();
    let pick = WeightedIndex::new(&weights).map_err(|e| Error::InvalidSpec(format!("resampling weights: {e}")))?;
    let mut rng = stream(cfg.seed, 0x2B << 40);

    let k = cfg.k;
    let lay = Layout::new(cfg)?;
    let c = cfg.boundary_level;
    let floor = BoundaryCurve::Curve(Path::constant(lay.grid, c)?);
    let h = Hamiltonian::scaled(cfg.t)?;
    let bound = -2.0 * k as f64 * cfg.l;
    let n_osc = (cfg.n_inner / 4).max(1);

    let mut z_hat = Vec::with_capacity(cfg.n_boundaries);
    let mut osc_hits = 0u64;
    let mut osc_total = 0u64;
    let mut violations = 0u64;
    let mut worst_gap = f64::INFINITY;
    for b in 0..cfg.n_boundaries {
        let ends = &out.draws[hits[pick.sample(&mut rng)]].ends;
        let x: Vec<f64> = (0..k).map(|j| ends[2 * j]).collect();
        let y: Vec<f64> = (0..k).map(|j| ends[2 * j + 1]).collect();
        let bd = BoundaryData::new(x.clone(), y.clone(), BoundaryCurve::PlusInfinity, floor.clone())?;
        let spec = ConditionalSpec::new(lay.grid, 1, k, (-cfg.l, cfg.l), bd, h)?;
        let sub_seed = cfg.seed ^ (b as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z_hat.push(estimate_z(&spec, cfg.n_inner, sub_seed).mean);

        let sub = *spec.sub_grid();
        let delta = sub.spacing();
        let len = sub.len();
        let mut osc_rng = stream(sub_seed, 0x2C << 40);
        let mut curves = vec![vec![0.0; len]; k];
        for _ in 0..n_osc {
            let mut osc = true;
            for j in 0..k {
                let v = &mut curves[j];
                v[0] = x[j];
                v[len - 1] = y[j];
                fill_bridge(v, delta, &mut osc_rng);
                osc &= (0..len).all(|i| {
                    let lin = x[j] + (y[j] - x[j]) * i as f64 / (len - 1) as f64;
                    (v[i] - lin).abs() <= cfg.m
                });
            }
            osc_total += 1;
            if osc {
                osc_hits += 1;
                let ens = LineEnsemble::new(sub, curves.clone())?;
                let lw = log_boltzmann_weight(&ens, &spec)?;
                worst_gap = worst_gap.min(lw - bound);
                if lw < bound {
                    violations += 1;
                }
            }
        }
    }
    let nb = z_hat.len() as f64;
    let mean_z = z_hat.iter().sum::<f64>() / nb;
    let var_z = z_hat.iter().map(|z| (z - mean_z).powi(2)).sum::<f64>() / (nb - 1.0).max(1.0);
    let min_z = z_hat.iter().copied().fold(f64::INFINITY, f64::min);
    let d4 = z_hat.iter().map(|&z| bound.exp() / z).fold(1.0, f64::max);
    r.estimate("z_given_E", McEstimate { mean: mean_z, stderr: (var_z / nb).sqrt(), n_samples: z_hat.len() as u64, seed: cfg.seed });
    let p_osc = osc_hits as f64 / osc_total as f64;
    r.estimate(
        "osc_free",
        McEstimate { mean: p_osc, stderr: (p_osc * (1.0 - p_osc) / osc_total as f64).sqrt(), n_samples: osc_total, seed: cfg.seed },
    );
    let osc_exact = bridge_sup_abs_below(cfg.m, 2.0 * cfg.l).powi(k as i32);
    r.value("osc_free_continuum", osc_exact);
    r.value("min_z", min_z);
    r.value("fitted_D4", d4);
    r.value("osc_weight_margin", worst_gap);
    r.check("z_in_unit_interval", z_hat.iter().all(|&z| z > 0.0 && z <= 1.0), format!("min Z = {min_z:.6e}"));
    r.check("z_lower_bound", mean_z >= bound.exp() / d4, format!("mean Z = {mean_z:.6e} >= e^(-2kL)/D4 with fitted D4 = {d4:.6}"));
    r.check("osc_weight_bound", violations == 0, format!("{violations} of {osc_hits} samples in E ∩ Osc have log W < -2kL"));
    r.check(
        "osc_probability",
        p_osc + 3.0 * (p_osc * (1.0 - p_osc) / osc_total as f64).sqrt() >= osc_exact,
        format!("grid Osc frequency {p_osc:.6} vs continuum {osc_exact:.6}"),
    );
    r.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn intervals_nest() {
        let cfg = SeparationConfig::new(3, 1.5, 10.0, 2.0, 10, 1);
        for j in 1..=3 {
            assert!(cfg.left(j) < cfg.left(j + 1) && cfg.right(j + 1) < cfg.right(j));
        }
        assert_eq!(cfg.left(4), -1.5);
        assert_eq!(cfg.left(1), -6.0);
        assert_eq!(cfg.band(1), (22.0, 26.0));
        let lay = Layout::new(&cfg).unwrap();
        for j in 1..=4 {
            let (i0, i1) = lay.span(j);
            assert_relative_eq!(lay.grid.point(i0), cfg.left(j), epsilon = 1e-12);
            assert_relative_eq!(lay.grid.point(i1), cfg.right(j), epsilon = 1e-12);
        }
    }

    #[test]
    fn validation_rejects_bad_m_and_k() {
        let mut cfg = SeparationConfig::new(2, 1.0, 100.0, 0.5, 10, 1);
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("M >= sqrt(L)"), "{err}");
        cfg.m = 1.0;
        assert!(cfg.validate().is_ok());
        cfg.k = 5;
        assert!(cfg.validate().is_err());
        cfg.k = 2;
        cfg.boundary_level = 1.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn plateau_shape() {
        assert_eq!(plateau(7, 2, 4.0), vec![0.0, 2.0, 4.0, 4.0, 4.0, 2.0, 0.0]);
    }

    #[test]
    fn lower_constant_fit() {
        assert_eq!(fit_log_lower_constant(-0.1, 1.0), 1.0);
        let d = fit_log_lower_constant(-10.0, 2.0);
        assert_relative_eq!(-d.ln() - 2.0 * d, -10.0, epsilon = 1e-9);
        assert!(fit_log_lower_constant(f64::NEG_INFINITY, 1.0).is_infinite());
    }

    #[test]
    fn endpoint_law_matches_free_bridges() {
        // Bridge pinned at 0 on [-3, 3], read at -1 and 1, band [0.5, 2.5].
        use crate::stats::normal_sf;
        let law = EndpointLaw { c: 0.0, s1: 2.0, s2: 4.0, total: 6.0 };
        let band = (0.5, 2.5);
        // Simpson over x1 of phi(x1) P(x2 in band | x1).
        let (m1, sd1) = law.first();
        let pdf = |x: f64| (-0.5 * ((x - m1) / sd1).powi(2)).exp() / (sd1 * (2.0 * std::f64::consts::PI).sqrt());
        let cond = |x: f64| {
            let (m, sd) = law.second(x);
            normal_sf((band.0 - m) / sd) - normal_sf((band.1 - m) / sd)
        };
        let n = 2000;
        let h = (band.1 - band.0) / n as f64;
        let exact: f64 = (0..=n)
            .map(|i| {
                let x = band.0 + i as f64 * h;
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * pdf(x) * cond(x)
            })
            .sum::<f64>()
            * h
            / 3.0;
        // Free bridges on a 97-point grid, so -1 and 1 are nodes 32 and 64.
        let mut rng = stream(21, 0);
        let mut v = vec![0.0; 97];
        let trials = 200_000;
        let hits = (0..trials)
            .filter(|_| {
                v[0] = 0.0;
                v[96] = 0.0;
                fill_bridge(&mut v, 6.0 / 96.0, &mut rng);
                (band.0..=band.1).contains(&v[32]) && (band.0..=band.1).contains(&v[64])
            })
            .count() as f64;
        let p = hits / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((p - exact).abs() < 4.0 * se, "{p} +- {se} vs {exact}");
        // The band mass at a sampled x1 is the integrand's normalizer.
        let x1 = 1.3;
        assert_relative_eq!(law.log_band_mass(x1, band), ((normal_sf((0.5 - m1) / sd1) - normal_sf((2.5 - m1) / sd1)) * cond(x1)).ln(), epsilon = 1e-12);
    }

    #[test]
    fn sup_abs_series() {
        // P(sup |B| <= a) on [0,1]: Kolmogorov distribution at a.
        assert_relative_eq!(bridge_sup_abs_below(1.3581, 1.0), 0.95, epsilon = 1e-4);
        // Brownian scaling: [0,T] at a equals [0,1] at a/sqrt(T).
        assert_relative_eq!(bridge_sup_abs_below(2.0, 4.0), bridge_sup_abs_below(1.0, 1.0), epsilon = 1e-14);
    }

    #[test]
    fn small_separation_run() {
        let cfg = SeparationConfig::new(1, 1.0, 1000.0, 1.0, 20_000, 5);
        let r = run_separation_experiment(&cfg).unwrap();
        let p = r.get_estimate("p_E").unwrap();
        assert!(p.mean > 0.0 && p.mean < 1.0);
        assert!(r.get_value("ess").unwrap() > 1000.0);
        assert!(r.get_check("F_subset_E").unwrap().passed);
        let again = run_separation_experiment(&cfg).unwrap();
        assert_eq!(r.estimates, again.estimates);
    }
}
