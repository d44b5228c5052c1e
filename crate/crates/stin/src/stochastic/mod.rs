//! Fading laws, splittable RNG streams, and exact samplers for the marked
//! spherical point processes.
//!
//! Satellite links fade per the Shadowed-Rician model (Rician scattering
//! around a line-of-sight component whose power is itself Gamma-shadowed);
//! terrestrial links per Nakagami-m. Both are handled through their *power*
//! distributions, for which integer shadowing order makes everything closed
//! form: the Shadowed-Rician power is a finite mixture of Erlang laws, which
//! gives the density, CDF, Laplace transform, and all Laplace-transform
//! derivatives in a few lines each.
//!
//! Node placement is an isotropic Poisson process on the layer's base sphere
//! with i.i.d. random heights as marks. Sampling draws only the spherical cap
//! of directions that can ever be visible to the user given the height
//! support (the restriction of a Poisson process is a Poisson process, and
//! marks are independent of position, so visible-node statistics are exactly
//! those of the full-sphere process at a tiny fraction of the cost).

mod rng;
mod sample;
mod sr_sampler;

pub use rng::{derive_stream, mix_seed, stream_tag};
pub use sample::{
    nearest_visible_distance, sample_constellation, uniform_on_sphere, ConstellationSample,
    ConstellationSampler, NodeSample, VisibleNode, MAX_EXPECTED_COUNT,
};
pub use sr_sampler::{sample_envelope_construction, ShadowedRicianSampler};

use serde::{Deserialize, Serialize};

use crate::numerics::special::{factorial, pochhammer};
use crate::{Error, Result};

// ===== Shadowed-Rician fading ==============================================

/// Parameters of the Shadowed-Rician fading law (integer shadowing order).
///
/// `m` is the Nakagami order of the line-of-sight shadowing, `b` the half
/// average scatter power, and `omega` the average line-of-sight power. The
/// mean fading power is `2b + omega`. With `m = 1, b = 1/2, omega = 0` the
/// law reduces to Rayleigh fading (unit-mean exponential power).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowedRicianParams {
    pub m: u32,
    pub b: f64,
    pub omega: f64,
}

impl ShadowedRicianParams {
    pub fn new(m: u32, b: f64, omega: f64) -> Result<ShadowedRicianParams> {
        if m < 1 || !(b > 0.0) || !(omega >= 0.0) {
            return Err(Error::Config(format!(
                "shadowed-Rician parameters need m >= 1, b > 0, omega >= 0; \
                 got m = {m}, b = {b}, omega = {omega}"
            )));
        }
        Ok(ShadowedRicianParams { m, b, omega })
    }

    /// Rayleigh fading as the degenerate case (K = 1, δ = 0).
    pub fn rayleigh() -> ShadowedRicianParams {
        ShadowedRicianParams {
            m: 1,
            b: 0.5,
            omega: 0.0,
        }
    }

    /// Frequent heavy shadowing: deep, common line-of-sight blockage.
    pub fn frequent_heavy_shadowing() -> ShadowedRicianParams {
        ShadowedRicianParams {
            m: 1,
            b: 0.063,
            omega: 8.97e-4,
        }
    }

    /// Average shadowing.
    pub fn average_shadowing() -> ShadowedRicianParams {
        ShadowedRicianParams {
            m: 10,
            b: 0.126,
            omega: 0.835,
        }
    }

    /// Infrequent light shadowing: near-clear line of sight.
    pub fn infrequent_light_shadowing() -> ShadowedRicianParams {
        ShadowedRicianParams {
            m: 19,
            b: 0.158,
            omega: 1.29,
        }
    }

    /// K = 2bm / (2bm + Ω), the scatter-to-total shadowing ratio.
    pub fn k_factor(&self) -> f64 {
        let t = 2.0 * self.b * self.m as f64;
        t / (t + self.omega)
    }

    /// δ = Ω / (2b (2bm + Ω)).
    pub fn delta(&self) -> f64 {
        self.omega / (2.0 * self.b * (2.0 * self.b * self.m as f64 + self.omega))
    }

    /// δ̄ = m / (2bm + Ω) = 1/(2b) − δ exactly.
    pub fn delta_bar(&self) -> f64 {
        self.m as f64 / (2.0 * self.b * self.m as f64 + self.omega)
    }

    /// Mean fading power 2b + Ω.
    pub fn mean_power(&self) -> f64 {
        2.0 * self.b + self.omega
    }

    /// Series coefficient c_k = (1-m)_k (-1)^k / (k!)², nonnegative for
    /// k < m and zero beyond.
    pub fn series_coefficient(&self, k: u32) -> f64 {
        let kf = factorial(k);
        pochhammer(1.0 - self.m as f64, k) * (-1.0f64).powi(k as i32) / (kf * kf)
    }

    /// Mixture weights w_k of the power law written as a finite Erlang
    /// mixture: X ~ Σ_k w_k · Erlang(k+1, rate δ̄), k = 0..m-1.
    ///
    /// The weights are nonnegative and sum to 1 (the Laplace transform at 0).
    pub fn erlang_weights(&self) -> Vec<f64> {
        let k_factor = self.k_factor();
        let delta = self.delta();
        let delta_bar = self.delta_bar();
        let prefactor = k_factor.powi(self.m as i32) / (2.0 * self.b);
        (0..self.m)
            .map(|k| {
                // δ^k with the δ = 0, k = 0 case meaning the empty product.
                let delta_pow = if k == 0 { 1.0 } else { delta.powi(k as i32) };
                prefactor * self.series_coefficient(k) * delta_pow * factorial(k)
                    / delta_bar.powi(k as i32 + 1)
            })
            .collect()
    }

    /// Power density f_X(x).
    pub fn power_pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let delta_bar = self.delta_bar();
        let y = delta_bar * x;
        let mut erlang = delta_bar * (-y).exp();
        let mut acc = 0.0;
        for (k, w) in self.erlang_weights().into_iter().enumerate() {
            acc += w * erlang;
            erlang *= delta_bar * x / (k as f64 + 1.0);
        }
        acc
    }

    /// Power CDF F_X(x) = 1 − Σ_k w_k e^{-δ̄x} Σ_{i<=k} (δ̄x)^i/i!.
    pub fn power_cdf(&self, x: f64) -> f64 {
        1.0 - self.power_ccdf(x)
    }

    /// Upper tail P[X > x], computed directly (no 1-minus cancellation).
    pub fn power_ccdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let y = self.delta_bar() * x;
        let exp_term = (-y).exp();
        let mut acc = 0.0;
        let mut partial = 0.0; // Σ_{i<=k} y^i/i!
        let mut term = 1.0;
        for (k, w) in self.erlang_weights().into_iter().enumerate() {
            partial += term;
            acc += w * partial;
            term *= y / (k as f64 + 1.0);
        }
        acc * exp_term
    }

    /// Laplace transform of the power, E[e^{-sX}] = Σ_k w_k (δ̄/(δ̄+s))^{k+1}.
    pub fn power_laplace(&self, s: f64) -> f64 {
        self.power_laplace_derivative(s, 0)
    }

    /// j-th derivative d^j/ds^j E[e^{-sX}]; closed form via the Erlang
    /// mixture: Σ_k w_k δ̄^{k+1} (-1)^j (k+1)_j (δ̄+s)^{-(k+1+j)}.
    pub fn power_laplace_derivative(&self, s: f64, j: u32) -> f64 {
        PreparedFading::new(&Fading::ShadowedRician(*self)).power_laplace_derivative(s, j)
    }
}

// ===== Nakagami-m fading ===================================================

/// Nakagami fading order for terrestrial links; the power is Gamma(n, rate n)
/// with unit mean, and n = 1 is Rayleigh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NakagamiParams {
    pub n: u32,
}

impl NakagamiParams {
    pub fn new(n: u32) -> Result<NakagamiParams> {
        if n < 1 {
            return Err(Error::Config(format!("Nakagami order must be >= 1, got {n}")));
        }
        Ok(NakagamiParams { n })
    }

    pub fn rayleigh() -> NakagamiParams {
        NakagamiParams { n: 1 }
    }

    /// Power density: Gamma(n, rate n).
    pub fn power_pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let n = self.n as f64;
        n.powi(self.n as i32) * x.powi(self.n as i32 - 1) * (-n * x).exp()
            / statrs::function::gamma::gamma(n)
    }

    /// Power CDF: regularized lower incomplete gamma P(n, nx).
    pub fn power_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        statrs::function::gamma::gamma_lr(self.n as f64, self.n as f64 * x)
    }

    /// Upper tail P[X > x] = e^{-nx} Σ_{k<n} (nx)^k / k!.
    pub fn power_ccdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let y = self.n as f64 * x;
        let mut acc = 0.0;
        let mut term = 1.0;
        for k in 0..self.n {
            acc += term;
            term *= y / (k as f64 + 1.0);
        }
        acc * (-y).exp()
    }

    /// E[e^{-sX}] = (1 + s/n)^{-n}.
    pub fn power_laplace(&self, s: f64) -> f64 {
        self.power_laplace_derivative(s, 0)
    }

    /// d^j/ds^j (1+s/n)^{-n} = (-1)^j (n)_j n^{-j} (1+s/n)^{-(n+j)}.
    pub fn power_laplace_derivative(&self, s: f64, j: u32) -> f64 {
        PreparedFading::Nakagami { n: self.n }.power_laplace_derivative(s, j)
    }
}

/// Per-layer fading assignment: satellites fade Shadowed-Rician, terrestrial
/// nodes Nakagami.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Fading {
    ShadowedRician(ShadowedRicianParams),
    Nakagami(NakagamiParams),
}

impl Fading {
    pub fn power_laplace_derivative(&self, s: f64, j: u32) -> f64 {
        match self {
            Fading::ShadowedRician(p) => p.power_laplace_derivative(s, j),
            Fading::Nakagami(p) => p.power_laplace_derivative(s, j),
        }
    }

    pub fn power_laplace(&self, s: f64) -> f64 {
        self.power_laplace_derivative(s, 0)
    }

    pub fn mean_power(&self) -> f64 {
        match self {
            Fading::ShadowedRician(p) => p.mean_power(),
            Fading::Nakagami(_) => 1.0,
        }
    }
}

/// Fading law with its mixture weights precomputed, for allocation-free
/// Laplace-derivative evaluation inside quadrature loops.
#[derive(Debug, Clone)]
pub enum PreparedFading {
    ShadowedRician { weights: Vec<f64>, delta_bar: f64 },
    Nakagami { n: u32 },
}

impl PreparedFading {
    pub fn new(fading: &Fading) -> PreparedFading {
        match fading {
            Fading::ShadowedRician(p) => PreparedFading::ShadowedRician {
                weights: p.erlang_weights(),
                delta_bar: p.delta_bar(),
            },
            Fading::Nakagami(p) => PreparedFading::Nakagami { n: p.n },
        }
    }

    /// d^j/ds^j E[e^{-sX}]; identical math to the `Fading` methods.
    pub fn power_laplace_derivative(&self, s: f64, j: u32) -> f64 {
        match self {
            PreparedFading::ShadowedRician { weights, delta_bar } => {
                let base = delta_bar + s;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                let mut acc = 0.0;
                for (k, w) in weights.iter().enumerate() {
                    let k1 = k as f64 + 1.0;
                    acc += w
                        * delta_bar.powi(k as i32 + 1)
                        * pochhammer(k1, j)
                        * base.powi(-(k as i32 + 1 + j as i32));
                }
                sign * acc
            }
            PreparedFading::Nakagami { n } => {
                let nf = *n as f64;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * pochhammer(nf, j)
                    * nf.powi(-(j as i32))
                    * (1.0 + s / nf).powi(-(*n as i32 + j as i32))
            }
        }
    }
}
