//! Numerical machinery shared by the analysis and validation paths.
//!
//! Three independent pieces:
//!
//! * [`quad`] — adaptive Gauss-Legendre quadrature with an embedded 7/15-point
//!   error estimate. Every integral in the closed-form evaluators goes through
//!   this and carries its error estimate back to the caller.
//! * [`jet`] — truncated power series ("jets") in the Laplace variable, used
//!   to push derivatives of order up to [`jet::MAX_ORDER`] through
//!   `exp(-g(s))` without finite differencing.
//! * [`special`] — small exact helpers (Pochhammer symbols, binomials,
//!   factorials) plus re-exports of the gamma family, and a signed log-domain
//!   scalar for sums whose terms span hundreds of orders of magnitude.

pub mod jet;
pub mod quad;
pub mod special;

pub use jet::{jet_exp, laplace_derivatives, laplace_derivatives_log, Jet};
pub use quad::{integrate_1d, QuadResult, QuadratureSpec};
pub use special::{binomial, factorial, gamma_fn, ln_factorial, ln_gamma, pochhammer, LogSigned};
