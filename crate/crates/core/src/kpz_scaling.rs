//! The 3:2:1 KPZ scaling map between the unscaled and scaled line ensembles.
//!
//! For curve index `n` the scaled curve is
//! `h_n(x) = (H_n(t^{2/3} x) + t/24) / t^{1/3} + (n - 1) t^{-1/3} log t^{2/3}`.

use crate::error::{Error, Result};
use crate::model::{Grid, Path};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingParams {
    pub t: f64,
    /// Curve index, 1 for the top curve.
    pub n: usize,
}

impl ScalingParams {
    pub fn new(t: f64, n: usize) -> Result<Self> {
        let p = ScalingParams { t, n };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::NonPositiveT(self.t));
        }
        if self.n == 0 {
            return Err(Error::InvalidSpec("curve index is 1-based".into()));
        }
        Ok(())
    }

    /// `t^{1/3}`, exact for perfect cubes.
    pub fn cube_root(&self) -> f64 {
        self.t.cbrt()
    }

    /// `t^{2/3}`.
    pub fn space_factor(&self) -> f64 {
        let c = self.t.cbrt();
        c * c
    }

    /// The index term `(n - 1) t^{-1/3} log t^{2/3}`.
    pub fn index_shift(&self) -> f64 {
        (self.n - 1) as f64 * self.space_factor().ln() / self.cube_root()
    }

    /// Scaled value for an unscaled value.
    pub fn scale_value(&self, v: f64) -> f64 {
        (v + self.t / 24.0) / self.cube_root() + self.index_shift()
    }

    pub fn unscale_value(&self, h: f64) -> f64 {
        (h - self.index_shift()) * self.cube_root() - self.t / 24.0
    }
}

/// Maps a sampled `H_n` on a `u`-grid to `h_n` on the grid `x = u / t^{2/3}`.
pub fn scale_to_kpz_frame(path: &Path, p: ScalingParams) -> Result<Path> {
    p.check()?;
    let g = path.grid();
    let c = p.space_factor();
    let grid = Grid::new(g.a() / c, g.b() / c, g.len())?;
    Path::new(grid, path.values().iter().map(|&v| p.scale_value(v)).collect())
}

/// Inverse of [`scale_to_kpz_frame`].
pub fn unscale_from_kpz_frame(path: &Path, p: ScalingParams) -> Result<Path> {
    p.check()?;
    let g = path.grid();
    let c = p.space_factor();
    let grid = Grid::new(g.a() * c, g.b() * c, g.len())?;
    Path::new(grid, path.values().iter().map(|&h| p.unscale_value(h)).collect())
}

/// Adds `sign * u^2 / 2` pointwise.
pub fn parabola_shift(path: &Path, sign: f64) -> Result<Path> {
    let g = *path.grid();
    let vals = path.values().iter().enumerate().map(|(j, &v)| {
        let u = g.point(j);
        v + sign * 0.5 * u * u
    });
    Path::new(g, vals.collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn unit_time_is_a_constant_shift() {
        let g = Grid::new(-1.0, 2.0, 7).unwrap();
        let p = Path::from_fn(g, |u| u.sin()).unwrap();
        let s = scale_to_kpz_frame(&p, ScalingParams::new(1.0, 1).unwrap()).unwrap();
        assert_eq!(s.grid(), p.grid());
        for (a, b) in s.values().iter().zip(p.values()) {
            assert_relative_eq!(*a, b + 1.0 / 24.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn index_shift_at_t8() {
        let g = Grid::new(-4.0, 4.0, 9).unwrap();
        let p = Path::from_fn(g, |u| 0.3 * u).unwrap();
        let s1 = scale_to_kpz_frame(&p, ScalingParams::new(8.0, 1).unwrap()).unwrap();
        let s2 = scale_to_kpz_frame(&p, ScalingParams::new(8.0, 2).unwrap()).unwrap();
        assert_eq!((s1.grid().a(), s1.grid().b()), (-1.0, 1.0));
        for (a, b) in s2.values().iter().zip(s1.values()) {
            assert_relative_eq!(a - b, std::f64::consts::LN_2, epsilon = 1e-14);
        }
    }

    #[test]
    fn bad_t() {
        let g = Grid::new(0.0, 1.0, 3).unwrap();
        let p = Path::constant(g, 0.0).unwrap();
        let bad = ScalingParams { t: 0.0, n: 1 };
        assert!(matches!(scale_to_kpz_frame(&p, bad), Err(Error::NonPositiveT(_))));
        assert!(matches!(unscale_from_kpz_frame(&p, ScalingParams { t: -2.0, n: 1 }), Err(Error::NonPositiveT(_))));
        assert!(ScalingParams::new(f64::NAN, 1).is_err());
    }

    #[test]
    fn parabola_examples() {
        let g = Grid::new(-1.0, 1.0, 3).unwrap();
        let zero = Path::constant(g, 0.0).unwrap();
        assert_eq!(parabola_shift(&zero, 1.0).unwrap().values(), &[0.5, 0.0, 0.5]);
        let twice = parabola_shift(&parabola_shift(&zero, 1.0).unwrap(), 1.0).unwrap();
        assert_eq!(twice.values(), &[1.0, 0.0, 1.0]);
    }

    proptest! {
        #[test]
        fn round_trip(t in 0.01..1000.0f64, n in 1usize..6, a in -5.0..0.0f64, len in 0.1..5.0f64, vals in proptest::collection::vec(-50.0..50.0f64, 5)) {
            let g = Grid::new(a, a + len, 5).unwrap();
            let p = Path::new(g, vals).unwrap();
            let sp = ScalingParams::new(t, n).unwrap();
            let back = unscale_from_kpz_frame(&scale_to_kpz_frame(&p, sp).unwrap(), sp).unwrap();
            for (x, y) in back.values().iter().zip(p.values()) {
                prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(t / 24.0).max(1.0));
            }
            prop_assert!((back.grid().a() - a).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn parabola_shift_inverts(vals in proptest::collection::vec(-10.0..10.0f64, 9)) {
            let g = Grid::new(-2.0, 2.0, 9).unwrap();
            let p = Path::new(g, vals).unwrap();
            let back = parabola_shift(&parabola_shift(&p, 1.0).unwrap(), -1.0).unwrap();
            for (x, y) in back.values().iter().zip(p.values()) {
                prop_assert!((x - y).abs() <= 1e-13);
            }
        }
    }
}
