//! Spherical-cap geometry on concentric spheres.
//!
//! The network lives on two base spheres centered on the Earth's center: the
//! Earth sphere itself (terrestrial nodes) and the orbit sphere (satellites).
//! Each node is lifted radially by a random height above its base sphere, and
//! the user sits at `(0, 0, R_E)`. Everything the analysis needs from this
//! arrangement reduces to areas of spherical caps, which the hat-box theorem
//! turns into closed forms linear in cap height:
//!
//! * `cap_area_*` — area of the base-sphere region whose (height-h) nodes lie
//!   within slant range `r` of the user, a piecewise function of `r` that is
//!   zero below the layer's minimum range and saturates at the full visible
//!   cap once `r` reaches the layer's horizon range.
//! * `cap_area_derivative` — its radial derivative, the density of nodes per
//!   unit slant range.
//! * visibility windows — per-height and distribution-wide bounds on the
//!   slant ranges at which a node can be seen at all.
//!
//! All lengths are meters; configuration layers convert from km at parse time
//! so the ~1e6 m radii and ~1e2 m heights never mix units here.

use serde::{Deserialize, Serialize};

use crate::numerics::{integrate_1d, QuadratureSpec};
use crate::{Error, Result};

/// Which network layer a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Satellite,
    Terrestrial,
}

impl LayerKind {
    pub fn other(self) -> LayerKind {
        match self {
            LayerKind::Satellite => LayerKind::Terrestrial,
            LayerKind::Terrestrial => LayerKind::Satellite,
        }
    }
}

impl std::fmt::Display for LayerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LayerKind::Satellite => write!(f, "satellite"),
            LayerKind::Terrestrial => write!(f, "terrestrial"),
        }
    }
}

/// Earth and orbit sphere radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereGeometry {
    /// Earth radius R_E in meters.
    pub earth_radius_m: f64,
    /// Orbit-sphere radius R_S in meters (satellites before height displacement).
    pub orbit_radius_m: f64,
}

impl SphereGeometry {
    pub fn new(earth_radius_m: f64, orbit_radius_m: f64) -> Result<SphereGeometry> {
        if !(earth_radius_m > 0.0 && orbit_radius_m > earth_radius_m) {
            return Err(Error::Config(format!(
                "need orbit radius > earth radius > 0, got R_E = {earth_radius_m} m, \
                 R_S = {orbit_radius_m} m"
            )));
        }
        Ok(SphereGeometry {
            earth_radius_m,
            orbit_radius_m,
        })
    }

    pub fn from_orbit_altitude(earth_radius_m: f64, altitude_m: f64) -> Result<SphereGeometry> {
        SphereGeometry::new(earth_radius_m, earth_radius_m + altitude_m)
    }

    /// Standard orbit altitude h_S = R_S - R_E (exact by construction).
    pub fn orbit_altitude_m(&self) -> f64 {
        self.orbit_radius_m - self.earth_radius_m
    }

    /// Base-sphere radius of the given layer.
    pub fn base_radius_m(&self, kind: LayerKind) -> f64 {
        match kind {
            LayerKind::Satellite => self.orbit_radius_m,
            LayerKind::Terrestrial => self.earth_radius_m,
        }
    }
}

/// Distribution of the i.i.d. node heights above the base sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HeightDistribution {
    /// Every node at exactly this height (no quadrature over heights:
    /// expectations collapse to point evaluations).
    Degenerate { h_m: f64 },
    /// Heights uniform on [h_min_m, h_max_m], h_min_m < h_max_m.
    Uniform { h_min_m: f64, h_max_m: f64 },
}

impl HeightDistribution {
    /// Uniform on [h_min, h_max]; a zero-width interval collapses to
    /// `Degenerate` so height integrals stay exact.
    pub fn uniform(h_min_m: f64, h_max_m: f64) -> Result<HeightDistribution> {
        if !(0.0 <= h_min_m && h_min_m <= h_max_m) {
            return Err(Error::Config(format!(
                "height support must satisfy 0 <= h_min <= h_max, got [{h_min_m}, {h_max_m}]"
            )));
        }
        if h_min_m == h_max_m {
            Ok(HeightDistribution::Degenerate { h_m: h_min_m })
        } else {
            Ok(HeightDistribution::Uniform { h_min_m, h_max_m })
        }
    }

    pub fn degenerate(h_m: f64) -> Result<HeightDistribution> {
        if !(h_m >= 0.0) {
            return Err(Error::Config(format!("height must be >= 0, got {h_m}")));
        }
        Ok(HeightDistribution::Degenerate { h_m })
    }

    pub fn h_min_m(&self) -> f64 {
        match *self {
            HeightDistribution::Degenerate { h_m } => h_m,
            HeightDistribution::Uniform { h_min_m, .. } => h_min_m,
        }
    }

    pub fn h_max_m(&self) -> f64 {
        match *self {
            HeightDistribution::Degenerate { h_m } => h_m,
            HeightDistribution::Uniform { h_max_m, .. } => h_max_m,
        }
    }

    /// Density f_H(h); a Dirac mass for `Degenerate` (callers must not
    /// evaluate the density there — use [`HeightDistribution::expect`]).
    pub fn pdf(&self, h: f64) -> f64 {
        match *self {
            HeightDistribution::Degenerate { .. } => {
                panic!("point-mass height distribution has no density; use expect()")
            }
            HeightDistribution::Uniform { h_min_m, h_max_m } => {
                if (h_min_m..=h_max_m).contains(&h) {
                    1.0 / (h_max_m - h_min_m)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, h: f64) -> f64 {
        match *self {
            HeightDistribution::Degenerate { h_m } => {
                if h >= h_m {
                    1.0
                } else {
                    0.0
                }
            }
            HeightDistribution::Uniform { h_min_m, h_max_m } => {
                ((h - h_min_m) / (h_max_m - h_min_m)).clamp(0.0, 1.0)
            }
        }
    }

    /// E[f(H)] — exact point evaluation for `Degenerate`, adaptive quadrature
    /// for `Uniform`.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F, spec: &QuadratureSpec) -> Result<f64> {
        self.expect_clipped(f64::NEG_INFINITY, f64::INFINITY, f, spec)
    }

    /// E[f(H) · 1{a <= H <= b}], the height integrals clipped to a feasibility
    /// window.
    pub fn expect_clipped<F: Fn(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        f: F,
        spec: &QuadratureSpec,
    ) -> Result<f64> {
        match *self {
            HeightDistribution::Degenerate { h_m } => {
                if a <= h_m && h_m <= b {
                    Ok(f(h_m))
                } else {
                    Ok(0.0)
                }
            }
            HeightDistribution::Uniform { h_min_m, h_max_m } => {
                let lo = a.max(h_min_m);
                let hi = b.min(h_max_m);
                if lo >= hi {
                    return Ok(0.0);
                }
                let density = 1.0 / (h_max_m - h_min_m);
                let result = integrate_1d(|h| f(h) * density, lo, hi, spec)?;
                Ok(result.value)
            }
        }
    }
}

/// Feasible slant-range support [r_min, r_max] for a layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapWindow {
    pub r_min_m: f64,
    pub r_max_m: f64,
}

impl CapWindow {
    pub fn contains(&self, r: f64) -> bool {
        self.r_min_m <= r && r <= self.r_max_m
    }

    pub fn width(&self) -> f64 {
        self.r_max_m - self.r_min_m
    }
}

// ---- Per-height slant-range bounds ----------------------------------------

/// Smallest and largest slant range at which a node of height `h` can be
/// visible: directly overhead (terrestrial) / sub-user point (satellite)
/// through the horizon.
pub fn slant_range_bounds(kind: LayerKind, geom: &SphereGeometry, h: f64) -> (f64, f64) {
    let re = geom.earth_radius_m;
    match kind {
        LayerKind::Terrestrial => (h, (h * (h + 2.0 * re)).sqrt()),
        LayerKind::Satellite => {
            let rs = geom.orbit_radius_m;
            let lifted = rs + h;
            (lifted - re, (lifted * lifted - re * re).sqrt())
        }
    }
}

// ---- Cap areas ------------------------------------------------------------

/// Area of the Earth-sphere inner cap holding the terrestrial nodes of height
/// `h` within slant range `r` of the user. Zero for `r <= h`, saturating at
/// the full visible cap `2π h R_E² / (R_E + h)` beyond the horizon range.
pub fn cap_area_terrestrial(geom: &SphereGeometry, h: f64, r: f64) -> f64 {
    debug_assert!(h >= 0.0 && r >= 0.0);
    let re = geom.earth_radius_m;
    let (r_min, r_max) = slant_range_bounds(LayerKind::Terrestrial, geom, h);
    if r < r_min {
        0.0
    } else if r <= r_max {
        // Hat-box: the cap's base-sphere area is linear in the cap height
        // h - h_r, where h_r is the altitude of the slant-range-r circle.
        let lifted = re + h;
        let h_r = (lifted * lifted - re * re - r * r) / (2.0 * re);
        2.0 * std::f64::consts::PI * re * re * (h - h_r) / lifted
    } else {
        2.0 * std::f64::consts::PI * h * re * re / (re + h)
    }
}

/// Area of the orbit-sphere inner cap holding the satellites of height `h`
/// within slant range `r` of the user. Zero for `r <= R_S + h - R_E`,
/// saturating at `2π R_S² (h_S + h) / (R_S + h)` beyond the horizon range.
pub fn cap_area_satellite(geom: &SphereGeometry, h: f64, r: f64) -> f64 {
    debug_assert!(h >= 0.0 && r >= 0.0);
    let re = geom.earth_radius_m;
    let rs = geom.orbit_radius_m;
    let hs = geom.orbit_altitude_m();
    let lifted = rs + h;
    let (r_min, r_max) = slant_range_bounds(LayerKind::Satellite, geom, h);
    if r < r_min {
        0.0
    } else if r <= r_max {
        let h_r = (lifted * lifted - re * re - r * r) / (2.0 * re);
        2.0 * std::f64::consts::PI * rs * rs * (hs + h - h_r) / lifted
    } else {
        2.0 * std::f64::consts::PI * rs * rs * (hs + h) / lifted
    }
}

/// Layer-dispatched cap area.
pub fn cap_area(kind: LayerKind, geom: &SphereGeometry, h: f64, r: f64) -> f64 {
    match kind {
        LayerKind::Satellite => cap_area_satellite(geom, h, r),
        LayerKind::Terrestrial => cap_area_terrestrial(geom, h, r),
    }
}

/// Radial derivative of the cap area; nonzero only strictly inside the middle
/// branch, where the area grows like the slant-range circle's circumference.
pub fn cap_area_derivative(kind: LayerKind, geom: &SphereGeometry, h: f64, r: f64) -> f64 {
    let (r_min, r_max) = slant_range_bounds(kind, geom, h);
    if r < r_min || r > r_max {
        return 0.0;
    }
    let re = geom.earth_radius_m;
    match kind {
        LayerKind::Terrestrial => 2.0 * std::f64::consts::PI * r * re / (re + h),
        LayerKind::Satellite => {
            let rs = geom.orbit_radius_m;
            2.0 * std::f64::consts::PI * r * rs * rs / (re * (rs + h))
        }
    }
}

/// Saturation value of the cap area: the whole base-sphere region visible to
/// the user for nodes of height `h`.
pub fn max_cap_area(kind: LayerKind, geom: &SphereGeometry, h: f64) -> f64 {
    let re = geom.earth_radius_m;
    match kind {
        LayerKind::Terrestrial => 2.0 * std::f64::consts::PI * h * re * re / (re + h),
        LayerKind::Satellite => {
            let rs = geom.orbit_radius_m;
            let hs = geom.orbit_altitude_m();
            2.0 * std::f64::consts::PI * rs * rs * (hs + h) / (rs + h)
        }
    }
}

/// Cosine of the polar angle (from the user's zenith axis) bounding the
/// visible cap of base-sphere directions for nodes of height `h`. Sampling
/// restricted to `cos θ >= this` covers every direction that can ever be
/// visible at that height.
pub fn visibility_cone_cos(kind: LayerKind, geom: &SphereGeometry, h: f64) -> f64 {
    let radius = geom.base_radius_m(kind);
    1.0 - max_cap_area(kind, geom, h) / (2.0 * std::f64::consts::PI * radius * radius)
}

// ---- Distribution-wide windows --------------------------------------------

/// Global feasible nearest-distance support across the height support:
/// [r_min(h_min), r_max(h_max)] since both bounds increase with height.
pub fn slant_range_window(
    kind: LayerKind,
    geom: &SphereGeometry,
    heights: &HeightDistribution,
) -> CapWindow {
    let (r_min, _) = slant_range_bounds(kind, geom, heights.h_min_m());
    let (_, r_max) = slant_range_bounds(kind, geom, heights.h_max_m());
    CapWindow {
        r_min_m: r_min,
        r_max_m: r_max,
    }
}

/// Height sub-interval over which a node at slant range exactly `r` is
/// geometrically possible; `None` when `r` lies outside the layer's window.
///
/// The lower bound comes from the horizon condition (r <= r_max(h)), the
/// upper from the minimum-range condition (r >= r_min(h)); both written in
/// cancellation-free form.
pub fn height_integration_bounds(
    kind: LayerKind,
    geom: &SphereGeometry,
    heights: &HeightDistribution,
    r: f64,
) -> Option<(f64, f64)> {
    let re = geom.earth_radius_m;
    // sqrt(r² + R_E²) - R, computed as a stable quotient.
    let hypot = (r * r + re * re).sqrt();
    let (lo, hi) = match kind {
        LayerKind::Satellite => {
            let rs = geom.orbit_radius_m;
            let from_horizon = (r * r + re * re - rs * rs) / (hypot + rs);
            (from_horizon, r + re - rs)
        }
        LayerKind::Terrestrial => {
            let from_horizon = r * r / (hypot + re);
            (from_horizon, r)
        }
    };
    let h_low = lo.max(heights.h_min_m());
    let h_high = hi.min(heights.h_max_m());
    if h_low <= h_high {
        Some((h_low, h_high))
    } else {
        None
    }
}
