//! Downlink rate coverage of satellite-terrestrial integrated networks (STINs).
//!
//! A STIN serves ground users from two co-channel layers at once: a LEO
//! constellation modeled as a Poisson point process on a sphere above the
//! Earth, and a terrestrial network modeled the same way on the Earth sphere
//! itself. Each node is lifted radially by a random height, users attach to
//! the strongest biased average received power among the nodes they can see,
//! and everything else they can see interferes. This crate computes the rate
//! coverage probability `P[rate > gamma]` of the typical user two independent
//! ways and cross-validates them:
//!
//! * **analysis** evaluates the closed-form expressions (visibility
//!   probabilities, nearest-distance and serving-distance densities, biased
//!   association probabilities, interference Laplace transforms and their
//!   high-order derivatives, and the final two-term coverage integral) by
//!   adaptive quadrature.
//! * **montecarlo** simulates the marked spherical point processes directly
//!   (node placement, random heights, Shadowed-Rician and Nakagami fading,
//!   association, SINR) with a splittable RNG so results are reproducible
//!   bit-for-bit at any worker count.
//!
//! Supporting modules: [`geometry`] (spherical-cap areas and visibility
//! windows), [`stochastic`] (fading laws and exact samplers), [`numerics`]
//! (adaptive quadrature, truncated power series, log-domain accumulation),
//! and [`scenario`] (configuration types plus the unit-aware file format
//! shared with the CLI).
//!
//! # Example
//!
//! ```
//! use stin::scenario::ScenarioConfig;
//! use stin::analysis;
//!
//! // A small constellation over a sparse terrestrial layer.
//! let mut cfg = ScenarioConfig::builder()
//!     .satellite_mean_visible(4.0)
//!     .terrestrial_mean_visible(5.0)
//!     .build()
//!     .unwrap();
//! cfg.satellite.bias = 1.0;
//!
//! let grid = stin::analysis::log_gamma_grid(1e5, 1e9, 25);
//! let curve = analysis::coverage_probability(&cfg, &grid).unwrap();
//! assert!(curve.points.windows(2).all(|w| w[1].p_cov <= w[0].p_cov + 1e-9));
//! ```

pub mod analysis;
pub mod geometry;
pub mod montecarlo;
pub mod numerics;
pub mod scenario;
pub mod stochastic;

mod error;

pub use error::{Error, Result};
