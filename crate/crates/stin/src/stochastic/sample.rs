//! Exact sampling of one layer's marked spherical Poisson process.
//!
//! A sample draws N ~ Poisson(λ · window area) node directions uniformly on
//! the spherical cap of the base sphere that can ever be visible to the user
//! (the cap for the maximum height), attaches i.i.d. heights and fading
//! powers, and flags per-node visibility exactly. Directions use the hat-box
//! method: the coordinate along the user's zenith axis is uniform on the
//! cap's extent, the azimuth uniform on [0, 2π).
//!
//! Per-node draw order is fixed (axis coordinate, azimuth, height, fading) so
//! a seed fully determines the sample; degenerate height distributions
//! consume no randomness for the height.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use super::rng::{derive_stream, stream_tag};
use super::sr_sampler::ShadowedRicianSampler;
use super::Fading;
use crate::geometry::{max_cap_area, HeightDistribution, LayerKind, SphereGeometry};
use crate::scenario::NetworkLayer;
use crate::{Error, Result};

/// Guard on the expected number of sampled nodes per draw.
pub const MAX_EXPECTED_COUNT: f64 = 1e7;

/// One node of a sampled constellation.
#[derive(Debug, Clone, Copy)]
pub struct NodeSample {
    /// Unit direction on the base sphere (user is along +z).
    pub direction: [f64; 3],
    pub height_m: f64,
    /// Displaced radius: base radius + height, exactly.
    pub radius_m: f64,
    /// Distance to the user at (0, 0, R_E).
    pub slant_range_m: f64,
    /// Whether the node clears the horizon for its own height.
    pub visible: bool,
    /// Power fading draw for this node's link.
    pub fading_power: f64,
}

/// Compact record of a visible node, for the simulation hot path.
#[derive(Debug, Clone, Copy)]
pub struct VisibleNode {
    pub slant_range_m: f64,
    pub fading_power: f64,
}

/// One draw of a layer's constellation.
#[derive(Debug, Clone)]
pub struct ConstellationSample {
    pub kind: LayerKind,
    pub base_radius_m: f64,
    /// Base-sphere area of the sampled direction cap.
    pub window_area_m2: f64,
    /// λ × window area: the Poisson mean of `nodes.len()`.
    pub expected_count: f64,
    /// Seed that produced this sample.
    pub seed: u64,
    pub nodes: Vec<NodeSample>,
}

#[derive(Debug, Clone)]
enum FadingSampler {
    ShadowedRician(ShadowedRicianSampler),
    Nakagami(Gamma<f64>),
}

/// Prepared sampler for one layer: window geometry and fading tables are
/// computed once, then each seed yields an independent sample.
#[derive(Debug, Clone)]
pub struct ConstellationSampler {
    kind: LayerKind,
    base_radius_m: f64,
    earth_radius_m: f64,
    heights: HeightDistribution,
    /// Lower bound of the axis coordinate over the sampled cap, as a
    /// fraction of the base radius.
    cos_floor: f64,
    window_area_m2: f64,
    expected_count: f64,
    poisson: Option<Poisson<f64>>,
    fading: FadingSampler,
}

impl ConstellationSampler {
    pub fn new(layer: &NetworkLayer, geom: &SphereGeometry) -> Result<ConstellationSampler> {
        layer.validate()?;
        let kind = layer.kind;
        let window_area_m2 = max_cap_area(kind, geom, layer.heights.h_max_m());
        let expected_count = layer.density_per_m2 * window_area_m2;
        if expected_count > MAX_EXPECTED_COUNT {
            return Err(Error::SampleGuard {
                expected: expected_count,
                guard: MAX_EXPECTED_COUNT,
            });
        }
        let base_radius_m = geom.base_radius_m(kind);
        let cos_floor = 1.0 - window_area_m2 / (2.0 * std::f64::consts::PI * base_radius_m * base_radius_m);
        let poisson = if expected_count > 0.0 {
            Some(Poisson::new(expected_count).expect("positive finite mean"))
        } else {
            None
        };
        let fading = match layer.fading {
            Fading::ShadowedRician(p) => FadingSampler::ShadowedRician(ShadowedRicianSampler::new(p)?),
            Fading::Nakagami(p) => {
                let n = p.n as f64;
                FadingSampler::Nakagami(Gamma::new(n, 1.0 / n).expect("validated order"))
            }
        };
        Ok(ConstellationSampler {
            kind,
            base_radius_m,
            earth_radius_m: geom.earth_radius_m,
            heights: layer.heights,
            cos_floor,
            window_area_m2,
            expected_count,
            poisson,
            fading,
        })
    }

    pub fn expected_count(&self) -> f64 {
        self.expected_count
    }

    pub fn window_area_m2(&self) -> f64 {
        self.window_area_m2
    }

    /// Core sampling loop; every public sampling entry point goes through
    /// this one function so they all consume the RNG stream identically.
    fn sample_visit(&self, rng: &mut ChaCha12Rng, mut visit: impl FnMut(NodeSample)) {
        let count = match &self.poisson {
            Some(p) => p.sample(rng) as usize,
            None => 0,
        };
        let two_pi = 2.0 * std::f64::consts::PI;
        for _ in 0..count {
            let cos_theta = self.cos_floor + (1.0 - self.cos_floor) * rng.random::<f64>();
            let azimuth = two_pi * rng.random::<f64>();
            let height_m = match self.heights {
                HeightDistribution::Degenerate { h_m } => h_m,
                HeightDistribution::Uniform { h_min_m, h_max_m } => {
                    h_min_m + (h_max_m - h_min_m) * rng.random::<f64>()
                }
            };
            let fading_power = match &self.fading {
                FadingSampler::ShadowedRician(s) => s.sample(rng),
                FadingSampler::Nakagami(g) => g.sample(rng),
            };

            let radius_m = self.base_radius_m + height_m;
            let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
            let (sin_az, cos_az) = azimuth.sin_cos();
            let direction = [sin_theta * cos_az, sin_theta * sin_az, cos_theta];
            // Stable law of cosines: d² = (ρ - R_E)² + 2 ρ R_E (1 - cos θ).
            let slant_sq = (radius_m - self.earth_radius_m).powi(2)
                + 2.0 * radius_m * self.earth_radius_m * (1.0 - cos_theta);
            let slant_range_m = slant_sq.sqrt();
            // Above the horizon iff d ≤ √(ρ² - R_E²), the tangent length.
            let visible = slant_sq <= radius_m * radius_m - self.earth_radius_m * self.earth_radius_m;
            visit(NodeSample {
                direction,
                height_m,
                radius_m,
                slant_range_m,
                visible,
                fading_power,
            });
        }
    }

    /// Full sample with every node retained.
    pub fn sample(&self, seed: u64) -> ConstellationSample {
        let mut rng = derive_stream(seed, &[stream_tag(self.kind)]);
        let mut nodes = Vec::with_capacity((self.expected_count * 1.1) as usize + 8);
        self.sample_visit(&mut rng, |node| nodes.push(node));
        ConstellationSample {
            kind: self.kind,
            base_radius_m: self.base_radius_m,
            window_area_m2: self.window_area_m2,
            expected_count: self.expected_count,
            seed,
            nodes,
        }
    }

    /// Visible nodes only, appended to a reusable buffer; identical RNG
    /// consumption to [`ConstellationSampler::sample`] for the same seed.
    pub fn sample_visible(&self, seed: u64, out: &mut Vec<VisibleNode>) {
        let mut rng = derive_stream(seed, &[stream_tag(self.kind)]);
        self.sample_visit(&mut rng, |node| {
            if node.visible {
                out.push(VisibleNode {
                    slant_range_m: node.slant_range_m,
                    fading_power: node.fading_power,
                });
            }
        });
    }
}

/// One-shot convenience: prepare a sampler and draw a single sample.
pub fn sample_constellation(
    layer: &NetworkLayer,
    geom: &SphereGeometry,
    seed: u64,
) -> Result<ConstellationSample> {
    Ok(ConstellationSampler::new(layer, geom)?.sample(seed))
}

/// Minimum slant range among visible nodes; `None` if nothing is visible.
pub fn nearest_visible_distance(sample: &ConstellationSample) -> Option<f64> {
    sample
        .nodes
        .iter()
        .filter(|n| n.visible)
        .map(|n| n.slant_range_m)
        .min_by(|a, b| a.total_cmp(b))
}

/// Uniform point on the full sphere of the given radius (hat-box method):
/// z uniform on [-R, R], azimuth uniform. Exposed for isotropy tests and
/// Monte Carlo area estimates.
pub fn uniform_on_sphere<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> [f64; 3] {
    let z = radius * (2.0 * rng.random::<f64>() - 1.0);
    let azimuth = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    let rho = (radius * radius - z * z).max(0.0).sqrt();
    let (sin_az, cos_az) = azimuth.sin_cos();
    [rho * cos_az, rho * sin_az, z]
}
