//! Single-site heat-bath dynamics and the monotone coupling.
//!
//! At an interior site the conditional density of the value `v` is
//!
//! ```text
//! exp(-(v - mu)^2 / (2 s2) - delta * (H(below - v) + H(v - above)))
//! ```
//!
//! with `mu` the mean of the two neighbours and `s2 = delta / 2`. Values are
//! drawn by inverting its CDF with one uniform per site. For convex
//! nondecreasing `H` the density has monotone likelihood ratio in `mu`,
//! `below` and `above`, so feeding the same uniform to two ordered chains
//! keeps them ordered.

use super::sweep::check_outer;
use crate::error::{Error, Result};
use crate::model::{BoundaryCurve, BoundaryData, Hamiltonian, LineEnsemble};
use crate::rng::open_unit;
use rand::Rng;
use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::SQRT_2;

pub const LATTICE_POINTS: usize = 1024;

/// The density window reaches this many nats below the mode.
const LOG_SPAN: f64 = 30.0;

struct Site {
    mu: f64,
    var: f64,
    w: f64,
    s: f64,
    below: f64,
    above: f64,
}

impl Site {
    fn log_density(&self, v: f64) -> f64 {
        let d = v - self.mu;
        -0.5 * d * d / self.var - self.w * (self.lower_term(v) + self.upper_term(v))
    }

    #[inline]
    fn lower_term(&self, v: f64) -> f64 {
        if self.below == f64::NEG_INFINITY {
            0.0
        } else {
            (self.s * (self.below - v)).exp()
        }
    }

    #[inline]
    fn upper_term(&self, v: f64) -> f64 {
        if self.above == f64::INFINITY {
            0.0
        } else {
            (self.s * (v - self.above)).exp()
        }
    }

    fn d1(&self, v: f64) -> f64 {
        -(v - self.mu) / self.var + self.w * self.s * (self.lower_term(v) - self.upper_term(v))
    }

    fn d2(&self, v: f64) -> f64 {
        -1.0 / self.var - self.w * self.s * self.s * (self.lower_term(v) + self.upper_term(v))
    }

    /// Mode of the log-concave density by safeguarded Newton.
    fn mode(&self) -> f64 {
        let sd = self.var.sqrt();
        let (mut lo, mut hi);
        if self.d1(self.mu) > 0.0 {
            lo = self.mu;
            let mut step = sd;
            hi = self.mu + step;
            while self.d1(hi) > 0.0 {
                lo = hi;
                step *= 2.0;
                hi = self.mu + step;
            }
        } else {
            hi = self.mu;
            let mut step = sd;
            lo = self.mu - step;
            while self.d1(lo) < 0.0 {
                hi = lo;
                step *= 2.0;
                lo = self.mu - step;
            }
        }
        let mut v = 0.5 * (lo + hi);
        for _ in 0..200 {
            let g = self.d1(v);
            if g > 0.0 {
                lo = v;
            } else {
                hi = v;
            }
            let mut next = v - g / self.d2(v);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - v).abs() <= 1e-12 * sd || hi - lo <= 1e-12 * sd {
                return next;
            }
            v = next;
        }
        v
    }

    /// Point on one side of the mode where the log density has dropped by
    /// about `LOG_SPAN`. Newton from outside on a concave function never
    /// overshoots the level set, so the window only errs on the wide side.
    fn span_end(&self, mode: f64, peak: f64, dir: f64) -> f64 {
        let target = peak - LOG_SPAN;
        let mut v = mode + dir * (2.0 * LOG_SPAN * self.var).sqrt();
        for _ in 0..60 {
            let g = self.log_density(v) - target;
            if !g.is_finite() {
                v = 0.5 * (v + mode);
                continue;
            }
            if g > -1.0 {
                break;
            }
            let step = g / self.d1(v);
            if !step.is_finite() {
                break;
            }
            v -= step;
        }
        v
    }

    /// Inverse CDF at `u` on a piecewise-linear density over a fixed lattice.
    fn quantile(&self, u: f64, buf: &mut Lattice) -> f64 {
        let mode = self.mode();
        let peak = self.log_density(mode);
        let left = self.span_end(mode, peak, -1.0);
        let right = self.span_end(mode, peak, 1.0);
        let m = LATTICE_POINTS;
        let h = (right - left) / (m - 1) as f64;
        // exp(s (below - v)) and exp(s (v - above)) are geometric along the lattice.
        let (mut lt, lr) = if self.below == f64::NEG_INFINITY { (0.0, 1.0) } else { ((self.s * (self.below - left)).exp(), (-self.s * h).exp()) };
        let (mut ut, ur) = if self.above == f64::INFINITY { (0.0, 1.0) } else { ((self.s * (left - self.above)).exp(), (self.s * h).exp()) };
        let dens = &mut buf.dens;
        let cdf = &mut buf.cdf;
        for (i, p) in dens.iter_mut().enumerate() {
            let v = left + i as f64 * h;
            let d = v - self.mu;
            let l = -0.5 * d * d / self.var - self.w * (lt + ut);
            *p = (l - peak).exp();
            lt *= lr;
            ut *= ur;
        }
        cdf[0] = 0.0;
        for i in 1..m {
            cdf[i] = cdf[i - 1] + 0.5 * h * (dens[i - 1] + dens[i]);
        }
        let target = u * cdf[m - 1];
        let cell = cdf.partition_point(|&c| c <= target).clamp(1, m - 1) - 1;
        let rem = target - cdf[cell];
        let (p0, p1) = (dens[cell], dens[cell + 1]);
        let a2 = 0.5 * (p1 - p0) / h;
        let x = if a2.abs() * h * h <= 1e-14 * (p0 * h).max(f64::MIN_POSITIVE) {
            if p0 > 0.0 { rem / p0 } else { 0.0 }
        } else {
            2.0 * rem / (p0 + (p0 * p0 + 4.0 * a2 * rem).max(0.0).sqrt())
        };
        left + cell as f64 * h + x.clamp(0.0, h)
    }
}

struct Lattice {
    dens: Vec<f64>,
    cdf: Vec<f64>,
}

impl Lattice {
    fn new() -> Self {
        Lattice { dens: vec![0.0; LATTICE_POINTS], cdf: vec![0.0; LATTICE_POINTS] }
    }
}

/// Normal restricted to `[lo, hi]`, sampled by inverse CDF.
fn truncated_normal_quantile(mu: f64, sd: f64, lo: f64, hi: f64, u: f64) -> f64 {
    let a = (lo - mu) / sd;
    let b = (hi - mu) / sd;
    mu + sd * std_truncated_quantile(a, b, u)
}

fn std_truncated_quantile(a: f64, b: f64, u: f64) -> f64 {
    if b <= 0.0 {
        return -std_truncated_quantile(-b, -a, 1.0 - u);
    }
    if a >= 0.0 {
        // Right tail: work with survival functions.
        let qa = 0.5 * erfc(a / SQRT_2);
        let qb = if b == f64::INFINITY { 0.0 } else { 0.5 * erfc(b / SQRT_2) };
        if qa < 1e-300 {
            // Far tail: exponential approximation of the truncated normal.
            let span = if b == f64::INFINITY { f64::INFINITY } else { b - a };
            let cut = -(-a * span).exp_m1();
            return a - (-u * cut).ln_1p() / a;
        }
        let q = qa - u * (qa - qb);
        return (SQRT_2 * erfc_inv(2.0 * q)).clamp(a, b);
    }
    let pa = if a == f64::NEG_INFINITY { 0.0 } else { 0.5 * erfc(-a / SQRT_2) };
    let pb = if b == f64::INFINITY { 1.0 } else { 0.5 * erfc(-b / SQRT_2) };
    let p = pa + u * (pb - pa);
    (-SQRT_2 * erfc_inv(2.0 * p)).clamp(a, b)
}

fn sample_site(site: &Site, h: Hamiltonian, u: f64, buf: &mut Lattice) -> f64 {
    if h.is_ordered() {
        truncated_normal_quantile(site.mu, site.var.sqrt(), site.below, site.above, u)
    } else {
        site.quantile(u, buf)
    }
}

fn boundary_at(c: &BoundaryCurve, j: usize) -> f64 {
    c.value(j)
}

fn site_for(state: &LineEnsemble, outer: &BoundaryData, h: Hamiltonian, i: usize, j: usize) -> Site {
    let delta = state.grid().spacing();
    let c = state.curve(i);
    let above = if i == 0 { boundary_at(&outer.upper, j) } else { state.curve(i - 1)[j] };
    let below = if i + 1 == state.k() { boundary_at(&outer.lower, j) } else { state.curve(i + 1)[j] };
    Site { mu: 0.5 * (c[j - 1] + c[j + 1]), var: 0.5 * delta, w: delta, s: h.rate().unwrap_or(0.0), below, above }
}

fn check_ordered_state(state: &LineEnsemble, outer: &BoundaryData) -> Result<()> {
    let n = state.grid().len();
    for j in 0..n {
        let mut prev = boundary_at(&outer.upper, j);
        for i in 0..state.k() {
            let v = state.curve(i)[j];
            if !(v < prev) && !(j == 0 || j == n - 1) {
                return Err(Error::OrderViolationInput(format!("curve {i} not strictly below its upper neighbour at site {j}")));
            }
            prev = v;
        }
        if !(boundary_at(&outer.lower, j) < prev) && j != 0 && j != n - 1 {
            return Err(Error::OrderViolationInput(format!("bottom curve not strictly above the lower boundary at site {j}")));
        }
    }
    Ok(())
}

/// One systematic heat-bath scan (top curve first, left to right).
pub fn heat_bath_sweep<R: Rng + ?Sized>(state: &mut LineEnsemble, outer: &BoundaryData, h: Hamiltonian, rng: &mut R) -> Result<()> {
    check_outer(state, outer)?;
    if h.is_ordered() {
        check_ordered_state(state, outer)?;
    }
    let mut buf = Lattice::new();
    let n = state.grid().len();
    for i in 0..state.k() {
        for j in 1..n - 1 {
            let u = open_unit(rng);
            let site = site_for(state, outer, h, i, j);
            state.curve_mut(i)[j] = sample_site(&site, h, u, &mut buf);
        }
    }
    Ok(())
}

fn leq_curve(lo: &BoundaryCurve, hi: &BoundaryCurve, n: usize) -> bool {
    (0..n).all(|j| lo.value(j) <= hi.value(j))
}

/// Heat-bath scan of two states driven by the same uniforms.
///
/// Requires `lo <= hi` pointwise for the states and for all boundary data.
/// Each chain on its own follows exactly the kernel of [`heat_bath_sweep`].
pub fn monotone_coupled_sweep<R: Rng + ?Sized>(
    lo: &LineEnsemble,
    hi: &LineEnsemble,
    outer_lo: &BoundaryData,
    outer_hi: &BoundaryData,
    h: Hamiltonian,
    rng: &mut R,
) -> Result<(LineEnsemble, LineEnsemble)> {
    let (mut a, mut b) = (lo.clone(), hi.clone());
    monotone_coupled_sweep_in_place(&mut a, &mut b, outer_lo, outer_hi, h, rng)?;
    Ok((a, b))
}

/// In-place form of [`monotone_coupled_sweep`].
pub fn monotone_coupled_sweep_in_place<R: Rng + ?Sized>(
    lo: &mut LineEnsemble,
    hi: &mut LineEnsemble,
    outer_lo: &BoundaryData,
    outer_hi: &BoundaryData,
    h: Hamiltonian,
    rng: &mut R,
) -> Result<()> {
    check_outer(lo, outer_lo)?;
    check_outer(hi, outer_hi)?;
    if !lo.grid().approx_eq(hi.grid()) || lo.k() != hi.k() {
        return Err(Error::OrderViolationInput("states have different shapes".into()));
    }
    let n = lo.grid().len();
    for i in 0..lo.k() {
        if lo.curve(i).iter().zip(hi.curve(i)).any(|(a, b)| a > b) {
            return Err(Error::OrderViolationInput(format!("lo exceeds hi on curve {i}")));
        }
    }
    if !leq_curve(&outer_lo.upper, &outer_hi.upper, n) || !leq_curve(&outer_lo.lower, &outer_hi.lower, n) {
        return Err(Error::OrderViolationInput("outer boundary curves are not ordered".into()));
    }
    if h.is_ordered() {
        check_ordered_state(lo, outer_lo)?;
        check_ordered_state(hi, outer_hi)?;
    }
    let mut buf = Lattice::new();
    for i in 0..lo.k() {
        for j in 1..n - 1 {
            let u = open_unit(rng);
            let s_lo = site_for(lo, outer_lo, h, i, j);
            let s_hi = site_for(hi, outer_hi, h, i, j);
            lo.curve_mut(i)[j] = sample_site(&s_lo, h, u, &mut buf);
            hi.curve_mut(i)[j] = sample_site(&s_hi, h, u, &mut buf);
        }
    }
    Ok(())
}
