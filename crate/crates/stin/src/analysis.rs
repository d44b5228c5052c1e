//! Closed-form evaluation of visibility, nearest-distance, association, and
//! rate-coverage quantities.
//!
//! The central object is [`RadialIntensity`]: the expected number of a
//! layer's nodes within slant range `r` of the user, `Λ(r)`, together with
//! its radial density `Λ'(r)`. Both reduce to closed forms for the supported
//! height families (degenerate and uniform), because the spherical-cap area
//! is piecewise rational in the displaced radius. Everything else stacks on
//! top:
//!
//! * visibility: the visible-node count is Poisson with mean `Λ(∞)`;
//! * nearest distance given visibility: density `Λ'(r) e^{-Λ(r)} / P[V]`;
//! * biased association: a layer serves from distance `r` when the competing
//!   layer is empty inside its bias-equivalent radius `ρ(r)`;
//! * interference Laplace transforms: `exp(-g(s))` with `g` and its
//!   s-derivatives integrals of `Λ'` against the fading transform;
//! * coverage: the serving-distance density times a fading-tail expansion in
//!   Laplace-transform derivatives, integrated over the distance window.
//!
//! All final expansions run in log-magnitude form; powers like `u^18` paired
//! with 18th-order derivatives overflow and underflow f64 separately even
//! though their products are tame.

use std::cell::{Cell, RefCell};

use serde::{Deserialize, Serialize};

use crate::geometry::{CapWindow, LayerKind, SphereGeometry};
use crate::numerics::{
    integrate_1d, laplace_derivatives, laplace_derivatives_log, ln_factorial, Jet, LogSigned,
    QuadratureSpec,
};
use crate::scenario::{NetworkLayer, ScenarioConfig};
use crate::stochastic::{Fading, PreparedFading};
use crate::{Error, Result};

/// Visibility of a layer: chance of seeing at least one node, plus the
/// underlying Poisson mean of the visible count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Visibility {
    pub probability: f64,
    pub poisson_mean: f64,
}

/// One threshold of a coverage curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveragePoint {
    /// Rate threshold in bits/s.
    pub gamma_bps: f64,
    pub p_cov: f64,
    pub p_cov_sat: f64,
    pub p_cov_terr: f64,
    /// Largest quadrature error estimate among this point's integrals.
    pub quadrature_max_err: f64,
}

/// Rate coverage across a threshold grid, with the scenario-level
/// probabilities the curve decomposes over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCurve {
    pub points: Vec<CoveragePoint>,
    pub visibility_sat: Visibility,
    pub visibility_terr: Visibility,
    /// P[served by satellite | satellite visible].
    pub pi_sat: f64,
    pub pi_terr: f64,
    /// Mean-load factors applied to the thresholds (1 when load-unaware).
    pub load_sat: f64,
    pub load_terr: f64,
}

/// Unconditional service split of the typical user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssociationSplit {
    pub satellite: f64,
    pub terrestrial: f64,
    /// No node of either layer visible.
    pub unserved: f64,
}

// ---- Radial intensity -----------------------------------------------------

/// Intensity measure of a layer's node distances: `cumulative(r)` is the
/// expected number of nodes within slant range `r`, `density(r)` its radial
/// derivative, `poisson_mean()` the saturation value (all visible nodes).
///
/// Internally everything lives in the displaced-height coordinate
/// `x = (base radius + height) - R_E`, where the cap area of slant range `r`
/// is a three-branch rational function; averaging over uniform heights then
/// has elementary antiderivatives, so no quadrature happens here.
#[derive(Debug, Clone, Copy)]
pub struct RadialIntensity {
    density_per_m2: f64,
    /// Base-sphere radius R.
    base_radius_m: f64,
    earth_radius_m: f64,
    /// Displaced-height support [x_lo, x_hi]; equal for degenerate heights.
    x_lo: f64,
    x_hi: f64,
}

impl RadialIntensity {
    pub fn new(layer: &NetworkLayer, geom: &SphereGeometry) -> RadialIntensity {
        let offset = match layer.kind {
            LayerKind::Satellite => geom.orbit_altitude_m(),
            LayerKind::Terrestrial => 0.0,
        };
        RadialIntensity {
            density_per_m2: layer.density_per_m2,
            base_radius_m: geom.base_radius_m(layer.kind),
            earth_radius_m: geom.earth_radius_m,
            x_lo: offset + layer.heights.h_min_m(),
            x_hi: offset + layer.heights.h_max_m(),
        }
    }

    /// Feasible slant-range support across the height support.
    pub fn window(&self) -> CapWindow {
        let e = self.earth_radius_m;
        CapWindow {
            r_min_m: self.x_lo,
            r_max_m: (self.x_hi * (self.x_hi + 2.0 * e)).sqrt(),
        }
    }

    /// Poisson mean per unit density: the height-averaged visible cap area.
    fn poisson_mean_per_density(&self) -> f64 {
        let (r, e) = (self.base_radius_m, self.earth_radius_m);
        let two_pi_r2 = 2.0 * std::f64::consts::PI * r * r;
        if self.x_lo == self.x_hi {
            let x = self.x_lo;
            return two_pi_r2 * x / (e + x);
        }
        let span = self.x_hi - self.x_lo;
        // ∫ x/(e+x) dx = span - e·ln(1 + span/(e + x_lo)).
        two_pi_r2 * (span - e * (span / (e + self.x_lo)).ln_1p()) / span
    }

    pub fn poisson_mean(&self) -> f64 {
        self.density_per_m2 * self.poisson_mean_per_density()
    }

    /// Saturation boundary in x: heights with x below this are entirely
    /// inside slant range r (cap saturated), via x = sqrt(r² + E²) - E.
    fn saturation_x(&self, r: f64) -> f64 {
        let e = self.earth_radius_m;
        r * r / ((r * r + e * e).sqrt() + e)
    }

    /// Expected node count within slant range `r`.
    pub fn cumulative(&self, r: f64) -> f64 {
        if r <= 0.0 || self.density_per_m2 == 0.0 {
            return 0.0;
        }
        let (rad, e) = (self.base_radius_m, self.earth_radius_m);
        let q = self.saturation_x(r);
        let pi = std::f64::consts::PI;
        if self.x_lo == self.x_hi {
            let x = self.x_lo;
            let area = if x > r {
                0.0
            } else if x >= q {
                pi * rad * rad * (r * r - x * x) / (e * (e + x))
            } else {
                2.0 * pi * rad * rad * x / (e + x)
            };
            return self.density_per_m2 * area;
        }
        let span = self.x_hi - self.x_lo;
        let mut total = 0.0;
        // Saturated heights: full visible cap 2πR²x/(e+x).
        let (a, b) = (self.x_lo, self.x_hi.min(q));
        if b > a {
            total += 2.0 * pi * rad * rad * ((b - a) - e * ((b - a) / (e + a)).ln_1p());
        }
        // Partial heights: cap area πR²(r² - x²)/(e(e+x)).
        let (a, b) = (self.x_lo.max(q), self.x_hi.min(r));
        if b > a {
            let l = ((b - a) / (e + a)).ln_1p();
            total += pi * rad * rad / e * ((r * r - e * e) * l + e * (b - a) - (b * b - a * a) / 2.0);
        }
        self.density_per_m2 * total / span
    }

    /// Radial density `d/dr cumulative(r)`.
    pub fn density(&self, r: f64) -> f64 {
        if r <= 0.0 || self.density_per_m2 == 0.0 {
            return 0.0;
        }
        let (rad, e) = (self.base_radius_m, self.earth_radius_m);
        let q = self.saturation_x(r);
        let scale = 2.0 * std::f64::consts::PI * rad * rad * r / e;
        if self.x_lo == self.x_hi {
            let x = self.x_lo;
            if q <= x && x <= r {
                return self.density_per_m2 * scale / (e + x);
            }
            return 0.0;
        }
        let (a, b) = (self.x_lo.max(q), self.x_hi.min(r));
        if b <= a {
            return 0.0;
        }
        let span = self.x_hi - self.x_lo;
        self.density_per_m2 * scale * ((b - a) / (e + a)).ln_1p() / span
    }

    /// Interior radii where the height clipping changes branch; quadratures
    /// over the window split here.
    fn interior_cuts(&self) -> Vec<f64> {
        if self.x_lo == self.x_hi {
            return Vec::new();
        }
        let e = self.earth_radius_m;
        vec![(self.x_lo * (self.x_lo + 2.0 * e)).sqrt(), self.x_hi]
    }
}

// ---- Per-layer evaluation context -----------------------------------------

/// A layer with its intensity, prepared fading, and the coefficients of the
/// fading-tail expansion: `P[X > y] = Σ_k mixture[k] Σ_{i<=k} (rate·y)^i/i!
/// e^{-rate·y}` (Erlang-mixture tail for the satellite law, single Gamma tail
/// for Nakagami).
struct LayerCtx<'a> {
    layer: &'a NetworkLayer,
    intensity: RadialIntensity,
    prepared: PreparedFading,
    /// Highest Laplace-derivative order the tail expansion needs.
    order: usize,
    mixture: Vec<f64>,
    /// Rate of the exponential tail: δ̄ (satellite) or n (terrestrial).
    rate: f64,
    cuts: Vec<f64>,
}

impl<'a> LayerCtx<'a> {
    fn new(layer: &'a NetworkLayer, geom: &SphereGeometry) -> LayerCtx<'a> {
        let intensity = RadialIntensity::new(layer, geom);
        let (mixture, rate) = match &layer.fading {
            Fading::ShadowedRician(p) => (p.erlang_weights(), p.delta_bar()),
            Fading::Nakagami(p) => {
                let n = p.n as usize;
                let mut w = vec![0.0; n];
                w[n - 1] = 1.0;
                (w, p.n as f64)
            }
        };
        LayerCtx {
            layer,
            intensity,
            prepared: PreparedFading::new(&layer.fading),
            order: mixture.len() - 1,
            mixture,
            rate,
            cuts: intensity.interior_cuts(),
        }
    }
}

/// Distance in the serving layer mapped to the competing layer's
/// bias-equivalent distance: the competitor wins only from closer than this.
/// Exact inverse of itself with the layers swapped.
pub fn biased_radius(own: &NetworkLayer, other: &NetworkLayer, r: f64) -> f64 {
    let ratio = (other.tx_power_w * other.bias) / (own.tx_power_w * own.bias);
    ratio.powf(1.0 / other.path_loss_exponent)
        * r.powf(own.path_loss_exponent / other.path_loss_exponent)
}

/// Unnormalized serving density at distance r: nearest own-layer node there,
/// competitor void inside the bias-equivalent radius. Integrates to the
/// unconditional probability of being served by the own layer.
fn serving_weight(own: &LayerCtx, cross: &LayerCtx, r: f64) -> f64 {
    let d = own.intensity.density(r);
    if d == 0.0 {
        return 0.0;
    }
    let rho = biased_radius(own.layer, cross.layer, r);
    d * (-own.intensity.cumulative(r) - cross.intensity.cumulative(rho)).exp()
}

/// Integrate with forced panel boundaries at the given cut radii.
fn integrate_with_cuts(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    cuts: &[f64],
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let mut edges: Vec<f64> = cuts.iter().copied().filter(|c| *c > lo && *c < hi).collect();
    edges.push(hi);
    edges.sort_by(|a, b| a.total_cmp(b));
    edges.dedup();
    let mut value = 0.0;
    let mut max_err: f64 = 0.0;
    let mut left = lo;
    for right in edges {
        let piece = integrate_1d(&f, left, right, spec)?;
        value += piece.value;
        max_err = max_err.max(piece.error_estimate);
        left = right;
    }
    Ok((value, max_err))
}

/// j-th s-derivative of the interference Laplace exponent
/// `g(s) = ∫ Λ'(v) (1 - 𝓛_X(s·ḡ·v^{-β})) dv` over distances beyond the
/// exclusion radius, where ḡ is the interferer side-lobe EIRP.
fn exponent_derivative(
    src: &LayerCtx,
    s: f64,
    exclusion: f64,
    j: u32,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let win = src.intensity.window();
    let lo = exclusion.max(win.r_min_m);
    let hi = win.r_max_m;
    if !(lo < hi) || src.layer.density_per_m2 == 0.0 {
        return Ok((0.0, 0.0));
    }
    let eirp = src.layer.side_gain * src.layer.tx_power_w;
    let beta = src.layer.path_loss_exponent;
    let integrand = |v: f64| {
        let w = src.intensity.density(v);
        if w == 0.0 {
            return 0.0;
        }
        let attenuated = eirp * v.powf(-beta);
        let x = s * attenuated;
        if j == 0 {
            w * (1.0 - src.prepared.power_laplace_derivative(x, 0))
        } else {
            -w * attenuated.powi(j as i32) * src.prepared.power_laplace_derivative(x, j)
        }
    };
    integrate_with_cuts(integrand, lo, hi, &src.cuts, spec)
}

/// Coverage tail at serving distance r: `P[SINR > γ̃ | serving own at r]`,
/// marginalized over both layers' interference and the fading of the serving
/// link. `u` is the Laplace variable per watt of received interference.
fn conditional_ccdf(
    own: &LayerCtx,
    cross: &LayerCtx,
    r: f64,
    gamma_tilde: f64,
    sigma2_w: f64,
    inner_err: &Cell<f64>,
) -> Result<f64> {
    if gamma_tilde <= 0.0 {
        return Ok(1.0);
    }
    let gp = own.layer.main_gain * own.layer.tx_power_w;
    let u = own.rate * gamma_tilde * r.powf(own.layer.path_loss_exponent) / gp;
    if u == 0.0 {
        return Ok(1.0);
    }
    let rho = biased_radius(own.layer, cross.layer, r);
    let mut g = vec![0.0; own.order + 1];
    for (j, slot) in g.iter_mut().enumerate() {
        let (own_part, e1) = exponent_derivative(own, u, r, j as u32, &QuadratureSpec::INNER)?;
        let (cross_part, e2) = exponent_derivative(cross, u, rho, j as u32, &QuadratureSpec::INNER)?;
        inner_err.set(inner_err.get().max(e1).max(e2));
        *slot = own_part + cross_part;
    }
    g[0] += u * sigma2_w;
    if own.order >= 1 {
        g[1] += sigma2_w;
    }
    let l = laplace_derivatives_log(&g, own.order);
    let ln_u = u.ln();
    let mut prefix = LogSigned::ZERO;
    let mut total = 0.0;
    for (i, li) in l.iter().enumerate() {
        // (-1)^i u^i/i! · L^(i); nonnegative since L is completely monotone.
        let scale = if i == 0 {
            LogSigned::ONE
        } else {
            let sign = if i % 2 == 1 { -1.0 } else { 1.0 };
            LogSigned::new(sign, i as f64 * ln_u - ln_factorial(i as u32))
        };
        prefix = prefix.add(scale.mul(*li));
        total += own.mixture[i] * prefix.value();
    }
    Ok(total)
}

/// Outer cut list for integrals over the own layer's window: own branch
/// changes plus the competing layer's branch changes pulled back through the
/// bias map.
fn serving_cuts(own: &LayerCtx, cross: &LayerCtx) -> Vec<f64> {
    let mut cuts = own.cuts.clone();
    let cwin = cross.intensity.window();
    for c in cross
        .cuts
        .iter()
        .copied()
        .chain([cwin.r_min_m, cwin.r_max_m])
    {
        cuts.push(biased_radius(cross.layer, own.layer, c));
    }
    cuts
}

/// Unconditional probability of being served by the own layer, with its
/// quadrature error estimate.
fn association_mass(own: &LayerCtx, cross: &LayerCtx) -> Result<(f64, f64)> {
    let win = own.intensity.window();
    if !(win.r_min_m < win.r_max_m) || own.layer.density_per_m2 == 0.0 {
        return Ok((0.0, 0.0));
    }
    let cuts = serving_cuts(own, cross);
    integrate_with_cuts(
        |r| serving_weight(own, cross, r),
        win.r_min_m,
        win.r_max_m,
        &cuts,
        &QuadratureSpec::OUTER,
    )
}

/// One layer's coverage term at a single threshold.
fn coverage_term(
    own: &LayerCtx,
    cross: &LayerCtx,
    gamma_tilde: f64,
    sigma2_w: f64,
) -> Result<(f64, f64)> {
    let win = own.intensity.window();
    if !(win.r_min_m < win.r_max_m) || own.layer.density_per_m2 == 0.0 {
        return Ok((0.0, 0.0));
    }
    let cuts = serving_cuts(own, cross);
    let inner_err = Cell::new(0.0f64);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |r: f64| {
        let weight = serving_weight(own, cross, r);
        if weight == 0.0 {
            return 0.0;
        }
        match conditional_ccdf(own, cross, r, gamma_tilde, sigma2_w, &inner_err) {
            Ok(ccdf) => weight * ccdf,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let (value, err) = integrate_with_cuts(
        integrand,
        win.r_min_m,
        win.r_max_m,
        &cuts,
        &QuadratureSpec::OUTER,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok((value, err.max(inner_err.get())))
}

// ---- Public operations ----------------------------------------------------

/// Probability that at least one node of the layer is above the horizon,
/// with the Poisson mean of the visible count.
pub fn visibility_probability(layer: &NetworkLayer, geom: &SphereGeometry) -> Result<Visibility> {
    layer.validate()?;
    let mean = RadialIntensity::new(layer, geom).poisson_mean();
    Ok(Visibility {
        probability: -(-mean).exp_m1(),
        poisson_mean: mean,
    })
}

/// Density that makes the layer's mean visible-node count equal
/// `mean_visible`; inverse of the mean exposed by
/// [`visibility_probability`]. Ignores the layer's own density field.
pub fn density_from_mean_visible(
    layer: &NetworkLayer,
    geom: &SphereGeometry,
    mean_visible: f64,
) -> Result<f64> {
    if !(mean_visible >= 0.0) || !mean_visible.is_finite() {
        return Err(Error::Config(format!(
            "mean visible count must be finite and >= 0, got {mean_visible}"
        )));
    }
    if mean_visible == 0.0 {
        return Ok(0.0);
    }
    let per_density = RadialIntensity::new(layer, geom).poisson_mean_per_density();
    if per_density <= 0.0 {
        return Err(Error::Config(format!(
            "{} layer geometry admits no visible nodes; cannot invert a mean of {mean_visible}",
            layer.kind
        )));
    }
    Ok(mean_visible / per_density)
}

/// Nearest-visible-node distance density, conditional on the layer being
/// visible; zero outside the slant-range window.
pub fn nearest_distance_pdf(layer: &NetworkLayer, geom: &SphereGeometry, r: f64) -> Result<f64> {
    layer.validate()?;
    let intensity = RadialIntensity::new(layer, geom);
    let mean = intensity.poisson_mean();
    if mean <= 0.0 {
        return Err(Error::Config(format!(
            "{} layer is never visible; conditional nearest distance undefined",
            layer.kind
        )));
    }
    Ok(intensity.density(r) * (-intensity.cumulative(r)).exp() / -(-mean).exp_m1())
}

/// P[served by `which` | `which` visible] under biased strongest-average
/// association.
pub fn association_probability(cfg: &ScenarioConfig, which: LayerKind) -> Result<f64> {
    cfg.validate()?;
    let own = LayerCtx::new(cfg.layer(which), &cfg.geom);
    let cross = LayerCtx::new(cfg.other_layer(which), &cfg.geom);
    let p_vis = -(-own.intensity.poisson_mean()).exp_m1();
    if p_vis == 0.0 {
        return Ok(0.0);
    }
    let (mass, _) = association_mass(&own, &cross)?;
    Ok(mass / p_vis)
}

/// Unconditional service split: P[satellite serves], P[terrestrial serves],
/// P[nothing visible]. The three masses sum to 1 up to quadrature error.
pub fn association_split(cfg: &ScenarioConfig) -> Result<AssociationSplit> {
    cfg.validate()?;
    let sat = LayerCtx::new(&cfg.satellite, &cfg.geom);
    let terr = LayerCtx::new(&cfg.terrestrial, &cfg.geom);
    let (sat_mass, _) = association_mass(&sat, &terr)?;
    let (terr_mass, _) = association_mass(&terr, &sat)?;
    let unserved = (-sat.intensity.poisson_mean() - terr.intensity.poisson_mean()).exp();
    Ok(AssociationSplit {
        satellite: sat_mass,
        terrestrial: terr_mass,
        unserved,
    })
}

/// Serving-distance density: nearest-distance density conditioned on the
/// layer both being visible and winning the biased association.
pub fn nearest_distance_pdf_given_association(
    cfg: &ScenarioConfig,
    which: LayerKind,
    r: f64,
) -> Result<f64> {
    cfg.validate()?;
    let own = LayerCtx::new(cfg.layer(which), &cfg.geom);
    let cross = LayerCtx::new(cfg.other_layer(which), &cfg.geom);
    let (mass, _) = association_mass(&own, &cross)?;
    if mass <= 0.0 {
        return Err(Error::Config(format!(
            "{which} layer never serves; conditional serving distance undefined"
        )));
    }
    Ok(serving_weight(&own, &cross, r) / mass)
}

/// Laplace transform `E[e^{-s I}]` of one layer's interference seen from the
/// typical user, with interferers excluded inside `exclusion_radius_m`, as a
/// jet carrying derivatives in `s` through `order`.
pub fn interference_laplace(
    cfg: &ScenarioConfig,
    source: LayerKind,
    exclusion_radius_m: f64,
    s_per_w: f64,
    order: usize,
) -> Result<Jet> {
    cfg.validate()?;
    if !(s_per_w >= 0.0) || !(exclusion_radius_m >= 0.0) {
        return Err(Error::Config(format!(
            "need s >= 0 and exclusion radius >= 0, got s = {s_per_w}, r = {exclusion_radius_m}"
        )));
    }
    let src = LayerCtx::new(cfg.layer(source), &cfg.geom);
    let mut g = vec![0.0; order + 1];
    for (j, slot) in g.iter_mut().enumerate() {
        let (value, _) =
            exponent_derivative(&src, s_per_w, exclusion_radius_m, j as u32, &QuadratureSpec::INNER)?;
        *slot = value;
    }
    Ok(Jet::from_derivatives(&laplace_derivatives(&g, order)))
}

/// Mean-load factors `(L_sat, L_terr)`: one plus the users per node routed
/// to the layer.
pub fn load_factors(cfg: &ScenarioConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    let sat = LayerCtx::new(&cfg.satellite, &cfg.geom);
    let terr = LayerCtx::new(&cfg.terrestrial, &cfg.geom);
    let load = |own: &LayerCtx, cross: &LayerCtx| -> Result<f64> {
        let p_vis = -(-own.intensity.poisson_mean()).exp_m1();
        if p_vis == 0.0 {
            return Ok(1.0);
        }
        let (mass, _) = association_mass(own, cross)?;
        let pi = mass / p_vis;
        let assigned = cfg.user_density_per_m2 * pi;
        if assigned == 0.0 {
            return Ok(1.0);
        }
        if own.layer.density_per_m2 == 0.0 {
            return Err(Error::Config(format!(
                "{} layer has zero density but nonzero user assignment",
                own.layer.kind
            )));
        }
        Ok(1.0 + assigned / own.layer.density_per_m2)
    };
    Ok((load(&sat, &terr)?, load(&terr, &sat)?))
}

/// Rate coverage `P[W log2(1 + SINR) > γ]` over a threshold grid.
pub fn coverage_probability(cfg: &ScenarioConfig, gamma_grid: &[f64]) -> Result<CoverageCurve> {
    coverage_impl(cfg, gamma_grid, false)
}

/// Rate coverage with each layer's threshold rescaled by its mean load:
/// the layer term is evaluated at `2^{γ L_o / W} - 1`.
pub fn load_aware_coverage(cfg: &ScenarioConfig, gamma_grid: &[f64]) -> Result<CoverageCurve> {
    coverage_impl(cfg, gamma_grid, true)
}

fn coverage_impl(cfg: &ScenarioConfig, gamma_grid: &[f64], load_aware: bool) -> Result<CoverageCurve> {
    cfg.validate()?;
    for g in gamma_grid {
        if !(*g >= 0.0) || !g.is_finite() {
            return Err(Error::Config(format!(
                "rate thresholds must be finite and >= 0, got {g}"
            )));
        }
    }
    let sat = LayerCtx::new(&cfg.satellite, &cfg.geom);
    let terr = LayerCtx::new(&cfg.terrestrial, &cfg.geom);
    let visibility_sat = Visibility {
        probability: -(-sat.intensity.poisson_mean()).exp_m1(),
        poisson_mean: sat.intensity.poisson_mean(),
    };
    let visibility_terr = Visibility {
        probability: -(-terr.intensity.poisson_mean()).exp_m1(),
        poisson_mean: terr.intensity.poisson_mean(),
    };
    let (sat_mass, _) = association_mass(&sat, &terr)?;
    let (terr_mass, _) = association_mass(&terr, &sat)?;
    let pi_sat = if visibility_sat.probability > 0.0 {
        sat_mass / visibility_sat.probability
    } else {
        0.0
    };
    let pi_terr = if visibility_terr.probability > 0.0 {
        terr_mass / visibility_terr.probability
    } else {
        0.0
    };
    let (load_sat, load_terr) = if load_aware {
        load_factors(cfg)?
    } else {
        (1.0, 1.0)
    };
    let sigma2 = cfg.noise_power_w();
    let w = cfg.bandwidth_hz;
    let mut points = Vec::with_capacity(gamma_grid.len());
    for &gamma in gamma_grid {
        let gt_sat = (gamma * load_sat * std::f64::consts::LN_2 / w).exp_m1();
        let gt_terr = (gamma * load_terr * std::f64::consts::LN_2 / w).exp_m1();
        let (p_sat, e_sat) = coverage_term(&sat, &terr, gt_sat, sigma2)?;
        let (p_terr, e_terr) = coverage_term(&terr, &sat, gt_terr, sigma2)?;
        points.push(CoveragePoint {
            gamma_bps: gamma,
            p_cov: p_sat + p_terr,
            p_cov_sat: p_sat,
            p_cov_terr: p_terr,
            quadrature_max_err: e_sat.max(e_terr),
        });
    }
    Ok(CoverageCurve {
        points,
        visibility_sat,
        visibility_terr,
        pi_sat,
        pi_terr,
        load_sat,
        load_terr,
    })
}

/// `n` log-spaced thresholds from `lo` to `hi` inclusive.
///
/// Panics if `lo <= 0`, `hi < lo`, or `n == 0`: grid construction is a
/// programming decision, not a runtime input (the CLI validates first).
pub fn log_gamma_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n > 0, "bad grid [{lo}, {hi}] with {n} points");
    if n == 1 {
        return vec![lo];
    }
    let step = (hi / lo).ln() / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo * (step * i as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cap_area, HeightDistribution};

    fn reference_cfg(sat_mean: f64, terr_mean: f64) -> ScenarioConfig {
        ScenarioConfig::builder()
            .satellite_mean_visible(sat_mean)
            .terrestrial_mean_visible(terr_mean)
            .build()
            .unwrap()
    }

    #[test]
    fn zero_density_is_never_visible() {
        let cfg = reference_cfg(0.0, 0.0);
        let vis = visibility_probability(&cfg.satellite, &cfg.geom).unwrap();
        assert_eq!(vis.probability, 0.0);
        assert_eq!(vis.poisson_mean, 0.0);
    }

    #[test]
    fn degenerate_satellite_mean_is_closed_form() {
        let mut cfg = reference_cfg(0.0, 0.0);
        cfg.satellite.heights = HeightDistribution::degenerate(0.0).unwrap();
        let lambda = density_from_mean_visible(&cfg.satellite, &cfg.geom, 100.0).unwrap();
        let rs = cfg.geom.orbit_radius_m;
        let hs = cfg.geom.orbit_altitude_m();
        let expected = 100.0 / (2.0 * std::f64::consts::PI * rs * hs);
        assert!((lambda / expected - 1.0).abs() < 1e-12);
        cfg.satellite.density_per_m2 = lambda;
        let vis = visibility_probability(&cfg.satellite, &cfg.geom).unwrap();
        assert!((vis.poisson_mean - 100.0).abs() < 1e-9);
        assert!((vis.probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_visible_round_trips_through_density() {
        let cfg = reference_cfg(4.0, 5.0);
        for (layer, want) in [(&cfg.satellite, 4.0), (&cfg.terrestrial, 5.0)] {
            let vis = visibility_probability(layer, &cfg.geom).unwrap();
            assert!(
                (vis.poisson_mean / want - 1.0).abs() < 1e-9,
                "{}: mean {} vs {want}",
                layer.kind,
                vis.poisson_mean
            );
        }
    }

    #[test]
    fn radial_intensity_matches_height_quadrature() {
        let cfg = reference_cfg(100.0, 5000.0);
        for layer in [&cfg.satellite, &cfg.terrestrial] {
            let offset = match layer.kind {
                LayerKind::Satellite => cfg.geom.orbit_altitude_m(),
                LayerKind::Terrestrial => 0.0,
            };
            let intensity = RadialIntensity::new(layer, &cfg.geom);
            let win = intensity.window();
            for frac in [0.05, 0.3, 0.6, 0.9, 1.0] {
                let r = win.r_min_m + frac * win.width();
                // Split the height quadrature at the saturation kink; the
                // adaptive scheme misses it when no node straddles the kink.
                let e = cfg.geom.earth_radius_m;
                let h_kink = (r * r + e * e).sqrt() - e - offset;
                let f = |h: f64| layer.density_per_m2 * cap_area(layer.kind, &cfg.geom, h, r);
                let direct = layer
                    .heights
                    .expect_clipped(f64::NEG_INFINITY, h_kink, f, &QuadratureSpec::INNER)
                    .unwrap()
                    + layer
                        .heights
                        .expect_clipped(h_kink, f64::INFINITY, f, &QuadratureSpec::INNER)
                        .unwrap();
                let closed = intensity.cumulative(r);
                assert!(
                    (closed - direct).abs() <= 1e-8 * direct.abs().max(1e-12),
                    "{} at r = {r}: closed {closed} vs quadrature {direct}",
                    layer.kind
                );
            }
        }
    }

    #[test]
    fn radial_density_matches_finite_difference() {
        let cfg = reference_cfg(100.0, 5000.0);
        for layer in [&cfg.satellite, &cfg.terrestrial] {
            let intensity = RadialIntensity::new(layer, &cfg.geom);
            let win = intensity.window();
            for frac in [0.2, 0.5, 0.8] {
                let r = win.r_min_m + frac * win.width();
                // Wide enough that the cancellation inside cumulative() does
                // not dominate the difference quotient.
                let dr = win.width() * 2e-4;
                let fd = (intensity.cumulative(r + dr) - intensity.cumulative(r - dr)) / (2.0 * dr);
                let exact = intensity.density(r);
                assert!(
                    (exact - fd).abs() <= 1e-5 * fd.abs().max(1e-12),
                    "{} at r = {r}: exact {exact} vs fd {fd}",
                    layer.kind
                );
            }
        }
    }

    #[test]
    fn nearest_distance_pdf_normalizes() {
        let cfg = reference_cfg(100.0, 5000.0);
        for layer in [&cfg.satellite, &cfg.terrestrial] {
            let intensity = RadialIntensity::new(layer, &cfg.geom);
            let win = intensity.window();
            let (total, _) = integrate_with_cuts(
                |r| nearest_distance_pdf(layer, &cfg.geom, r).unwrap(),
                win.r_min_m,
                win.r_max_m,
                &intensity.interior_cuts(),
                &QuadratureSpec::OUTER,
            )
            .unwrap();
            assert!((total - 1.0).abs() < 1e-6, "{}: ∫pdf = {total}", layer.kind);
        }
    }

    #[test]
    fn association_without_competitor_is_certain() {
        let cfg = reference_cfg(4.0, 0.0);
        let pi = association_probability(&cfg, LayerKind::Satellite).unwrap();
        assert!((pi - 1.0).abs() < 1e-9, "pi = {pi}");
    }

    #[test]
    fn association_split_sums_to_one() {
        let mut cfg = reference_cfg(4.0, 5.0);
        cfg.satellite.bias = 10.0;
        let split = association_split(&cfg).unwrap();
        let total = split.satellite + split.terrestrial + split.unserved;
        assert!((total - 1.0).abs() < 1e-6, "masses sum to {total}");
        assert!(split.satellite > 0.0 && split.terrestrial > 0.0);
    }

    #[test]
    fn serving_pdf_normalizes() {
        let cfg = reference_cfg(4.0, 5.0);
        let own = LayerCtx::new(&cfg.satellite, &cfg.geom);
        let win = own.intensity.window();
        let cross = LayerCtx::new(&cfg.terrestrial, &cfg.geom);
        let cuts = serving_cuts(&own, &cross);
        let (total, _) = integrate_with_cuts(
            |r| nearest_distance_pdf_given_association(&cfg, LayerKind::Satellite, r).unwrap(),
            win.r_min_m,
            win.r_max_m,
            &cuts,
            &QuadratureSpec::OUTER,
        )
        .unwrap();
        assert!((total - 1.0).abs() < 1e-6, "∫serving pdf = {total}");
    }

    #[test]
    fn laplace_is_one_at_zero_and_without_interferers() {
        let cfg = reference_cfg(4.0, 0.0);
        let jet = interference_laplace(&cfg, LayerKind::Satellite, 1e6, 0.0, 3).unwrap();
        assert_eq!(jet.value(), 1.0);
        let jet = interference_laplace(&cfg, LayerKind::Terrestrial, 0.0, 1e9, 3).unwrap();
        assert_eq!(jet.value(), 1.0);
        for k in 1..=3 {
            assert_eq!(jet.derivative(k), 0.0);
        }
    }

    #[test]
    fn coverage_at_zero_threshold_is_total_service_probability() {
        let cfg = reference_cfg(4.0, 5.0);
        let curve = coverage_probability(&cfg, &[0.0]).unwrap();
        let split = association_split(&cfg).unwrap();
        let served = split.satellite + split.terrestrial;
        let p = curve.points[0].p_cov;
        assert!((p - served).abs() < 1e-6, "p_cov(0) = {p} vs served = {served}");
    }

    #[test]
    fn coverage_is_monotone_and_bounded() {
        let cfg = reference_cfg(4.0, 5.0);
        let grid = log_gamma_grid(1e6, 1e9, 5);
        let curve = coverage_probability(&cfg, &grid).unwrap();
        for pair in curve.points.windows(2) {
            assert!(pair[1].p_cov <= pair[0].p_cov + 1e-9);
        }
        for p in &curve.points {
            assert!(p.p_cov >= 0.0 && p.p_cov <= 1.0 + 1e-6, "p_cov = {}", p.p_cov);
            assert!(p.p_cov_sat >= 0.0 && p.p_cov_terr >= 0.0);
        }
    }

    #[test]
    fn load_factors_follow_definition() {
        let cfg = reference_cfg(4.0, 5.0);
        assert_eq!(load_factors(&cfg).unwrap(), (1.0, 1.0));
        let mut loaded = cfg.clone();
        loaded.user_density_per_m2 = 100.0 * loaded.satellite.density_per_m2;
        let pi_sat = association_probability(&loaded, LayerKind::Satellite).unwrap();
        let (l_sat, _) = load_factors(&loaded).unwrap();
        assert!((l_sat - (1.0 + 100.0 * pi_sat)).abs() < 1e-9);
    }

    #[test]
    fn load_aware_with_no_users_matches_plain_coverage() {
        let cfg = reference_cfg(4.0, 5.0);
        let grid = [1e7, 1e8];
        let plain = coverage_probability(&cfg, &grid).unwrap();
        let aware = load_aware_coverage(&cfg, &grid).unwrap();
        for (a, b) in plain.points.iter().zip(&aware.points) {
            assert!((a.p_cov - b.p_cov).abs() < 1e-10);
        }
    }

    #[test]
    fn gamma_grid_hits_endpoints() {
        let grid = log_gamma_grid(1e5, 1e9, 50);
        assert_eq!(grid.len(), 50);
        assert_eq!(grid[0], 1e5);
        assert_eq!(grid[49], 1e9);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
    }
}
