//! Exact sampling of Brownian bridges (diffusion coefficient one) on grids.

use crate::error::{Error, Result};
use crate::model::{Grid, LineEnsemble, Path};
use rand::Rng;
use rand_distr::StandardNormal;

/// Fills the interior of `v` with a bridge from `v[0]` to `v[last]`.
///
/// Each point is drawn from its Gaussian conditional given the previous point
/// and the pinned right endpoint, which is exact at grid points.
pub fn fill_bridge<R: Rng + ?Sized>(v: &mut [f64], delta: f64, rng: &mut R) {
    let n = v.len();
    if n < 3 {
        return;
    }
    let y = v[n - 1];
    for j in 1..n - 1 {
        let r = (n - j) as f64;
        let prev = v[j - 1];
        let mean = prev + (y - prev) / r;
        let sd = (delta * (r - 1.0) / r).sqrt();
        let z: f64 = rng.sample(StandardNormal);
        v[j] = mean + sd * z;
    }
}

pub fn sample_bridge<R: Rng + ?Sized>(grid: &Grid, x: f64, y: f64, rng: &mut R) -> Path {
    let mut v = vec![0.0; grid.len()];
    v[0] = x;
    *v.last_mut().unwrap() = y;
    fill_bridge(&mut v, grid.spacing(), rng);
    Path::new(*grid, v).expect("bridge values are finite")
}

/// Overwrites `curves` with independent bridges; buffers are reused.
pub fn fill_free_ensemble<R: Rng + ?Sized>(curves: &mut [Vec<f64>], x: &[f64], y: &[f64], delta: f64, rng: &mut R) {
    for ((c, &xi), &yi) in curves.iter_mut().zip(x).zip(y) {
        c[0] = xi;
        *c.last_mut().unwrap() = yi;
        fill_bridge(c, delta, rng);
    }
}

pub fn sample_free_ensemble<R: Rng + ?Sized>(grid: &Grid, x: &[f64], y: &[f64], rng: &mut R) -> Result<LineEnsemble> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: x.len(), found: y.len() });
    }
    if x.is_empty() {
        return Err(Error::InvalidSpec("need at least one curve".into()));
    }
    let mut curves = vec![vec![0.0; grid.len()]; x.len()];
    fill_free_ensemble(&mut curves, x, y, grid.spacing(), rng);
    LineEnsemble::new(*grid, curves)
}

/// Draws `N(mean, sd^2)` conditioned on `[lo, hi]`.
///
/// Plain rejection when the interval straddles the mean; otherwise the
/// exponential-proposal rejection sampler for one-sided normal tails, which
/// stays efficient arbitrarily far out.
pub fn sample_truncated_normal<R: Rng + ?Sized>(mean: f64, sd: f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
    let (a, b) = ((lo - mean) / sd, (hi - mean) / sd);
    debug_assert!(a < b);
    if b < 0.0 {
        return mean - sd * sample_truncated_normal(0.0, 1.0, -b, -a, rng);
    }
    if a <= 0.0 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if a <= z && z <= b {
                return mean + sd * z;
            }
        }
    }
    let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let z = a - (1.0 - rng.random::<f64>()).ln() / alpha;
        if z <= b && rng.random::<f64>().ln() <= -0.5 * (z - alpha) * (z - alpha) {
            return mean + sd * z;
        }
    }
}

/// Draws the continuum minimum of a bridge segment of duration `delta`
/// pinned at `u` and `v`, optionally conditioned on staying above `floor`.
///
/// Inverts `P(min <= m) = exp(-2 (u-m)(v-m) / delta)` for `m <= min(u, v)`.
pub fn sample_segment_minimum<R: Rng + ?Sized>(u: f64, v: f64, delta: f64, floor: Option<f64>, rng: &mut R) -> f64 {
    let lo_mass = match floor {
        Some(f) if f < u.min(v) => (-2.0 * (u - f) * (v - f) / delta).exp(),
        Some(_) => 1.0,
        None => 0.0,
    };
    let unif = 1.0 - rng.random::<f64>();
    let q = lo_mass + unif * (1.0 - lo_mass);
    let d = u - v;
    0.5 * ((u + v) - (d * d - 2.0 * delta * q.ln()).sqrt())
}

/// Continuum minimum of a path given its grid values, segment by segment.
pub fn sample_path_minimum<R: Rng + ?Sized>(values: &[f64], delta: f64, floor: Option<f64>, rng: &mut R) -> f64 {
    values
        .windows(2)
        .map(|w| sample_segment_minimum(w[0], w[1], delta, floor, rng))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::{ks_one_sample, ks_two_sample, MeanAccumulator};
    use proptest::prelude::*;

    #[test]
    fn truncated_normal_matches_conditional_cdf() {
        use crate::stats::normal_sf;
        let mut rng = stream(12, 0);
        for &(lo, hi) in &[(-1.0, 0.5), (2.5, 4.0), (9.0, 11.0), (-6.0, -4.5)] {
            let (mean, sd) = (1.0, 2.0);
            let xs: Vec<f64> = (0..20_000).map(|_| sample_truncated_normal(mean, sd, lo, hi, &mut rng)).collect();
            assert!(xs.iter().all(|&x| lo <= x && x <= hi));
            let (a, b) = ((lo - mean) / sd, (hi - mean) / sd);
            // Exact conditional CDF written through upper tails, valid on both sides.
            let cdf = |x: f64| {
                let z = (x - mean) / sd;
                if a > 0.0 {
                    (normal_sf(a) - normal_sf(z)) / (normal_sf(a) - normal_sf(b))
                } else {
                    (normal_sf(-z) - normal_sf(-a)) / (normal_sf(-b) - normal_sf(-a))
                }
            };
            let ks = ks_one_sample(&xs, cdf);
            assert!(ks.p_value > 1e-3, "[{lo}, {hi}]: p = {}", ks.p_value);
        }
    }

    #[test]
    fn two_point_grid_is_deterministic() {
        let g = Grid::new(0.0, 3.0, 2).unwrap();
        let p = sample_bridge(&g, 1.5, -2.0, &mut stream(1, 0));
        assert_eq!(p.values(), &[1.5, -2.0]);
    }

    #[test]
    fn midpoint_moments() {
        let g = Grid::new(0.0, 1.0, 3).unwrap();
        let mut rng = stream(2, 0);
        let acc: MeanAccumulator = (0..100_000).map(|_| sample_bridge(&g, 0.0, 0.0, &mut rng).values()[1]).collect();
        // Var B(1/2) = 1/4; SE of the sample variance is about sqrt(2/n) * 1/4.
        assert!(acc.mean().abs() < 3.0 * acc.stderr());
        assert!((acc.variance() - 0.25).abs() < 3.0 * 0.25 * (2.0 / 1e5f64).sqrt());
    }

    #[test]
    fn covariance_oracle() {
        let g = Grid::new(0.0, 1.0, 5).unwrap();
        let mut rng = stream(3, 0);
        let prods: MeanAccumulator = (0..100_000)
            .map(|_| {
                let p = sample_bridge(&g, 0.0, 0.0, &mut rng);
                p.values()[1] * p.values()[3]
            })
            .collect();
        assert!((prods.mean() - 0.0625).abs() < 3.0 * prods.stderr(), "{}", prods.mean());
    }

    #[test]
    fn ensemble_is_pinned_and_uncorrelated() {
        let g = Grid::new(-1.0, 1.0, 9).unwrap();
        let (x, y) = ([1.0, 0.0, -2.0], [0.5, -1.0, -1.5]);
        let mut rng = stream(4, 0);
        let mut cross = MeanAccumulator::new();
        for _ in 0..100_000 {
            let e = sample_free_ensemble(&g, &x, &y, &mut rng).unwrap();
            for i in 0..3 {
                assert_eq!(e.curve(i)[0], x[i]);
                assert_eq!(e.curve(i)[8], y[i]);
            }
            cross.push((e.curve(0)[4] - 0.75) * (e.curve(1)[4] + 0.5));
        }
        assert!(cross.mean().abs() < 3.0 * cross.stderr());
        assert!(matches!(sample_free_ensemble(&g, &x, &y[..2], &mut rng), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn single_curve_ensemble_is_a_bridge() {
        let g = Grid::new(0.0, 1.0, 17).unwrap();
        let e = sample_free_ensemble(&g, &[0.3], &[0.1], &mut stream(5, 9)).unwrap();
        let p = sample_bridge(&g, 0.3, 0.1, &mut stream(5, 9));
        assert_eq!(e.curve(0), p.values());
    }

    #[test]
    fn brownian_scaling() {
        let len = 4.0;
        let g1 = Grid::new(0.0, 1.0, 65).unwrap();
        let gl = Grid::new(0.0, len, 65).unwrap();
        let mut r1 = stream(6, 0);
        let mut r2 = stream(6, 1);
        let (mut mid1, mut max1, mut midl, mut maxl) = (vec![], vec![], vec![], vec![]);
        for _ in 0..10_000 {
            let p = sample_bridge(&g1, 0.0, 0.0, &mut r1);
            mid1.push(p.values()[32]);
            max1.push(p.max());
            let q = sample_bridge(&gl, 0.0, 0.0, &mut r2);
            midl.push(q.values()[32] / len.sqrt());
            maxl.push(q.max() / len.sqrt());
        }
        assert!(ks_two_sample(&mid1, &midl).p_value > 0.001);
        assert!(ks_two_sample(&max1, &maxl).p_value > 0.001);
    }

    #[test]
    fn determinism() {
        let g = Grid::new(0.0, 2.0, 33).unwrap();
        let a = sample_bridge(&g, 0.0, 1.0, &mut stream(7, 2));
        let b = sample_bridge(&g, 0.0, 1.0, &mut stream(7, 2));
        assert_eq!(a, b);
    }

    #[test]
    fn segment_minimum_law() {
        // On a two-point grid the segment minimum is the path minimum.
        let mut rng = stream(8, 0);
        let mins: Vec<f64> = (0..20_000).map(|_| sample_segment_minimum(0.0, 0.5, 1.0, None, &mut rng)).collect();
        let cdf = |m: f64| if m >= 0.0 { 1.0 } else { (-2.0 * (0.0 - m) * (0.5 - m)).exp() };
        assert!(ks_one_sample(&mins, cdf).p_value > 0.001);
        let mins: Vec<f64> = (0..20_000).map(|_| sample_segment_minimum(0.0, 0.0, 1.0, Some(-1.0), &mut rng)).collect();
        assert!(mins.iter().all(|&m| m >= -1.0 && m <= 0.0));
        let trunc = |m: f64| ((-2.0 * m * m).exp() - (-2f64).exp()) / (1.0 - (-2f64).exp());
        assert!(ks_one_sample(&mins, |m| trunc(m.clamp(-1.0, 0.0))).p_value > 0.001);
    }

    proptest! {
        #[test]
        fn endpoints_always_pinned(x in -10.0..10.0f64, y in -10.0..10.0f64, n in 2usize..200, seed in 0u64..1000) {
            let g = Grid::new(-1.0, 2.0, n).unwrap();
            let p = sample_bridge(&g, x, y, &mut stream(seed, 0));
            prop_assert_eq!(p.values()[0], x);
            prop_assert_eq!(p.values()[n - 1], y);
        }

        #[test]
        fn segment_minimum_below_endpoints(u in -3.0..3.0f64, v in -3.0..3.0f64, seed in 0u64..1000) {
            let m = sample_segment_minimum(u, v, 0.1, None, &mut stream(seed, 1));
            prop_assert!(m <= u.min(v) + 1e-12);
        }
    }
}
