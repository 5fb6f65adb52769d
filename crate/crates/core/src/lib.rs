//! Sampling and Monte Carlo verification for H-Brownian Gibbs line ensembles.
//!
//! The crate covers free Brownian bridge ensembles, Boltzmann reweighting
//! under `H_t(x) = e^{t^{1/3} x}` or the hard-wall interaction, rejection and
//! Gibbs-sweep samplers, the monotone heat-bath coupling, the KPZ scaling map,
//! and a set of experiments that estimate the probabilities appearing in
//! separation, ordering and fluctuation bounds.

pub mod bridge_analytics;
pub mod bridge_sampler;
pub mod error;
pub mod experiments;
pub mod gibbs;
pub mod kpz_scaling;
pub mod model;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use model::{BoundaryCurve, BoundaryData, Grid, Hamiltonian, LineEnsemble, McEstimate, Path};
