//! Block Gibbs sweeps built on the rejection sampler, and stopping domains.

use super::{sample_conditional_into, ConditionalSpec, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::model::{BoundaryCurve, BoundaryData, Hamiltonian, LineEnsemble, Path};
use rand::Rng;

/// Curves `top..=bottom` (0-based, top first) on the grid interval `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub top: usize,
    pub bottom: usize,
    pub a: f64,
    pub b: f64,
}

impl Block {
    pub fn new(top: usize, bottom: usize, a: f64, b: f64) -> Self {
        Block { top, bottom, a, b }
    }

    /// Every curve of a `k`-curve ensemble on `[a, b]`.
    pub fn all(k: usize, a: f64, b: f64) -> Self {
        Block { top: 0, bottom: k - 1, a, b }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub budget: u64,
    pub crossing_correction: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { budget: DEFAULT_BUDGET, crossing_correction: true }
    }
}

pub(crate) fn check_outer(state: &LineEnsemble, outer: &BoundaryData) -> Result<()> {
    if outer.k() != state.k() {
        return Err(Error::LengthMismatch { expected: state.k(), found: outer.k() });
    }
    let last = state.grid().len() - 1;
    for i in 0..state.k() {
        if state.curve(i)[0] != outer.x[i] || state.curve(i)[last] != outer.y[i] {
            return Err(Error::InvalidSpec(format!("curve {i} endpoints differ from the outer entrance/exit data")));
        }
    }
    for c in [&outer.upper, &outer.lower] {
        if let Some(p) = c.as_path() {
            if !p.grid().approx_eq(state.grid()) {
                return Err(Error::GridMismatch("outer boundary curve is not on the state grid".into()));
            }
        }
    }
    Ok(())
}

/// Resamples each block in turn from its conditional law given the rest of
/// the state. A scan over blocks covering the ensemble is one sweep.
pub fn mcmc_sweep<R: Rng + ?Sized>(
    state: &LineEnsemble,
    outer: &BoundaryData,
    h: Hamiltonian,
    rng: &mut R,
    blocks: &[Block],
    cfg: &SweepConfig,
) -> Result<LineEnsemble> {
    check_outer(state, outer)?;
    let mut next = state.clone();
    for (bi, block) in blocks.iter().enumerate() {
        resample_block(&mut next, outer, h, rng, block, cfg).map_err(|e| match e {
            Error::RejectionBudgetExhausted { attempts, .. } => Error::RejectionBudgetExhausted { attempts, block: Some(bi) },
            other => other,
        })?;
    }
    Ok(next)
}

fn resample_block<R: Rng + ?Sized>(state: &mut LineEnsemble, outer: &BoundaryData, h: Hamiltonian, rng: &mut R, block: &Block, cfg: &SweepConfig) -> Result<()> {
    let grid = *state.grid();
    if block.top > block.bottom || block.bottom >= state.k() {
        return Err(Error::InvalidSpec(format!("block curves {}..={} outside 0..{}", block.top, block.bottom, state.k())));
    }
    let ia = grid.require_index(block.a)?;
    let ib = grid.require_index(block.b)?;
    let x = (block.top..=block.bottom).map(|i| state.curve(i)[ia]).collect();
    let y = (block.top..=block.bottom).map(|i| state.curve(i)[ib]).collect();
    let upper = if block.top == 0 { outer.upper.clone() } else { BoundaryCurve::Curve(state.path(block.top - 1)?) };
    let lower = if block.bottom + 1 == state.k() { outer.lower.clone() } else { BoundaryCurve::Curve(state.path(block.bottom + 1)?) };
    let bd = BoundaryData::new(x, y, upper, lower)?;
    let spec = ConditionalSpec::new(grid, block.top + 1, block.bottom + 1, (block.a, block.b), bd, h)?
        .with_crossing_correction(cfg.crossing_correction);
    let mut curves = vec![vec![0.0; ib - ia + 1]; block.bottom - block.top + 1];
    sample_conditional_into(&mut curves, &spec, rng, cfg.budget)?;
    for (off, c) in curves.into_iter().enumerate() {
        state.curve_mut(block.top + off)[ia..=ib].copy_from_slice(&c);
    }
    Ok(())
}

/// Random interval `[left, right]` found by scanning a curve for a level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingDomain {
    pub left: f64,
    pub right: f64,
    pub hit_left: bool,
    pub hit_right: bool,
}

/// Scans `[l0, l1]` rightwards and `[r0, r1]` leftwards for the first grid
/// point where `curve >= level`.
///
/// `left` is the first such point in the left window and `right` the first
/// from the right end of the right window; without a hit they fall back to
/// `l0` and `r1` with the flag cleared. Both endpoints are decided by values
/// outside the open interval `(left, right)`.
pub fn first_hitting_domain(curve: &Path, level: f64, left_search: (f64, f64), right_search: (f64, f64)) -> Result<StoppingDomain> {
    let g = curve.grid();
    let (l0, l1) = (g.require_index(left_search.0)?, g.require_index(left_search.1)?);
    let (r0, r1) = (g.require_index(right_search.0)?, g.require_index(right_search.1)?);
    if !(l0 <= l1 && l1 <= r0 && r0 <= r1) {
        return Err(Error::InvalidSpec("search windows must satisfy l0 <= l1 <= r0 <= r1".into()));
    }
    let v = curve.values();
    let left_hit = (l0..=l1).find(|&j| v[j] >= level);
    let right_hit = (r0..=r1).rev().find(|&j| v[j] >= level);
    Ok(StoppingDomain {
        left: g.point(left_hit.unwrap_or(l0)),
        right: g.point(right_hit.unwrap_or(r1)),
        hit_left: left_hit.is_some(),
        hit_right: right_hit.is_some(),
    })
}

/// Resamples curves `top..=bottom` on a stopping domain; a degenerate domain
/// leaves the state unchanged.
#[allow(clippy::too_many_arguments)]
pub fn resample_on_stopping_domain<R: Rng + ?Sized>(
    state: &LineEnsemble,
    outer: &BoundaryData,
    h: Hamiltonian,
    top: usize,
    bottom: usize,
    domain: &StoppingDomain,
    rng: &mut R,
    cfg: &SweepConfig,
) -> Result<LineEnsemble> {
    if domain.left >= domain.right {
        check_outer(state, outer)?;
        return Ok(state.clone());
    }
    mcmc_sweep(state, outer, h, rng, &[Block::new(top, bottom, domain.left, domain.right)], cfg)
}
