//! Scenario configuration: everything that parameterizes one network
//! instance, with validation and a builder carrying sensible defaults.
//!
//! All analysis runs in linear units (meters, watts, linear gains); dB-domain
//! values are converted exactly once, in [`units`] helpers called by the
//! builder and the file loader.

use serde::{Deserialize, Serialize};

use crate::geometry::{HeightDistribution, LayerKind, SphereGeometry};
use crate::stochastic::{Fading, NakagamiParams, ShadowedRicianParams};
use crate::{Error, Result};

pub mod file;
pub mod units;

pub use file::{FadingFile, LayerFile, ScenarioFile};

/// Per-layer parameter bundle. The layer's sphere radius is not duplicated
/// here; it always comes from the [`SphereGeometry`] passed alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkLayer {
    pub kind: LayerKind,
    /// Node density on the layer's base sphere, per m².
    pub density_per_m2: f64,
    pub heights: HeightDistribution,
    pub path_loss_exponent: f64,
    pub tx_power_w: f64,
    /// Association bias, linear.
    pub bias: f64,
    /// Effective main-lobe gain, linear (any free-space factor folded in).
    pub main_gain: f64,
    /// Effective side-lobe gain, linear.
    pub side_gain: f64,
    pub fading: Fading,
}

impl NetworkLayer {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.density_per_m2 >= 0.0) || !self.density_per_m2.is_finite() {
            return fail(format!("{} density must be finite and >= 0", self.kind));
        }
        if !(self.path_loss_exponent >= 2.0) {
            return fail(format!(
                "{} path-loss exponent must be >= 2, got {}",
                self.kind, self.path_loss_exponent
            ));
        }
        if !(self.tx_power_w > 0.0) {
            return fail(format!("{} tx power must be > 0 W", self.kind));
        }
        if !(self.bias > 0.0) {
            return fail(format!("{} bias must be > 0", self.kind));
        }
        if !(self.side_gain > 0.0) || !(self.main_gain >= self.side_gain) {
            return fail(format!(
                "{} gains must satisfy main >= side > 0, got main={} side={}",
                self.kind, self.main_gain, self.side_gain
            ));
        }
        match (self.kind, &self.fading) {
            (LayerKind::Satellite, Fading::ShadowedRician(_)) => {}
            (LayerKind::Terrestrial, Fading::Nakagami(_)) => {}
            _ => {
                return fail(format!(
                    "{} layer has the wrong fading family (satellite takes shadowed-Rician, terrestrial Nakagami)",
                    self.kind
                ))
            }
        }
        Ok(())
    }
}

/// Full parameterization of one network instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub geom: SphereGeometry,
    pub satellite: NetworkLayer,
    pub terrestrial: NetworkLayer,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    /// User density on the Earth sphere, per m²; only the load model reads it.
    pub user_density_per_m2: f64,
}

impl ScenarioConfig {
    pub fn builder() -> ScenarioBuilder {
        ScenarioBuilder::default()
    }

    /// Noise power σ² = N₀·W in watts, derived so it can never go stale.
    pub fn noise_power_w(&self) -> f64 {
        units::dbm_to_watts(self.noise_psd_dbm_hz) * self.bandwidth_hz
    }

    pub fn layer(&self, kind: LayerKind) -> &NetworkLayer {
        match kind {
            LayerKind::Satellite => &self.satellite,
            LayerKind::Terrestrial => &self.terrestrial,
        }
    }

    pub fn other_layer(&self, kind: LayerKind) -> &NetworkLayer {
        self.layer(kind.other())
    }

    pub fn validate(&self) -> Result<()> {
        if self.satellite.kind != LayerKind::Satellite || self.terrestrial.kind != LayerKind::Terrestrial {
            return Err(Error::Config("layer slots and kinds disagree".into()));
        }
        self.satellite.validate()?;
        self.terrestrial.validate()?;
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::Config("bandwidth must be > 0 Hz".into()));
        }
        if !self.noise_psd_dbm_hz.is_finite() {
            return Err(Error::Config("noise PSD must be finite".into()));
        }
        if !(self.user_density_per_m2 >= 0.0) {
            return Err(Error::Config("user density must be >= 0".into()));
        }
        let max_sat_height = self.satellite.heights.h_max_m();
        if self.geom.orbit_radius_m + max_sat_height <= self.geom.earth_radius_m {
            return Err(Error::Config(
                "satellite shell must clear the Earth radius at its maximum height".into(),
            ));
        }
        Ok(())
    }
}

/// How a builder layer's density was specified.
#[derive(Debug, Clone, Copy)]
enum DensitySpec {
    PerM2(f64),
    MeanVisible(f64),
}

/// Builder with defaults for the reference configuration: 6371/6871 km
/// spheres, satellite heights U[0, 1000] m, terrestrial U[0, 200] m,
/// β = 2 / 4, powers 43 / 46 dBm, satellite gains 10 / −10 dBi, terrestrial
/// 0 / 0 dBi, unit biases, Rayleigh fading on both layers, W = 100 MHz,
/// N₀ = −174 dBm/Hz, no users. Layers start empty; set a density or a mean
/// visible count.
#[derive(Debug, Clone)]
pub struct ScenarioBuilder {
    geom: SphereGeometry,
    sat_density: DensitySpec,
    terr_density: DensitySpec,
    sat_heights: HeightDistribution,
    terr_heights: HeightDistribution,
    sat_fading: ShadowedRicianParams,
    terr_fading: NakagamiParams,
    sat_bias: f64,
    terr_bias: f64,
    sat_power_dbm: f64,
    terr_power_dbm: f64,
    sat_main_gain_dbi: f64,
    sat_side_gain_dbi: f64,
    terr_main_gain_dbi: f64,
    terr_side_gain_dbi: f64,
    sat_beta: f64,
    terr_beta: f64,
    bandwidth_hz: f64,
    noise_psd_dbm_hz: f64,
    user_density_per_m2: f64,
    carrier_frequency_hz: Option<f64>,
}

impl Default for ScenarioBuilder {
    fn default() -> ScenarioBuilder {
        ScenarioBuilder {
            geom: SphereGeometry::new(6371e3, 6871e3).expect("valid reference geometry"),
            sat_density: DensitySpec::PerM2(0.0),
            terr_density: DensitySpec::PerM2(0.0),
            sat_heights: HeightDistribution::uniform(0.0, 1000.0).expect("valid range"),
            terr_heights: HeightDistribution::uniform(0.0, 200.0).expect("valid range"),
            sat_fading: ShadowedRicianParams::rayleigh(),
            terr_fading: NakagamiParams::rayleigh(),
            sat_bias: 1.0,
            terr_bias: 1.0,
            sat_power_dbm: 43.0,
            terr_power_dbm: 46.0,
            sat_main_gain_dbi: 10.0,
            sat_side_gain_dbi: -10.0,
            terr_main_gain_dbi: 0.0,
            terr_side_gain_dbi: 0.0,
            sat_beta: 2.0,
            terr_beta: 4.0,
            bandwidth_hz: 100e6,
            noise_psd_dbm_hz: -174.0,
            user_density_per_m2: 0.0,
            carrier_frequency_hz: None,
        }
    }
}

impl ScenarioBuilder {
    pub fn geometry(mut self, geom: SphereGeometry) -> Self {
        self.geom = geom;
        self
    }

    /// Sets the satellite density via the mean number of visible nodes.
    pub fn satellite_mean_visible(mut self, mean: f64) -> Self {
        self.sat_density = DensitySpec::MeanVisible(mean);
        self
    }

    pub fn terrestrial_mean_visible(mut self, mean: f64) -> Self {
        self.terr_density = DensitySpec::MeanVisible(mean);
        self
    }

    pub fn satellite_density_per_m2(mut self, density: f64) -> Self {
        self.sat_density = DensitySpec::PerM2(density);
        self
    }

    pub fn terrestrial_density_per_m2(mut self, density: f64) -> Self {
        self.terr_density = DensitySpec::PerM2(density);
        self
    }

    pub fn satellite_heights(mut self, heights: HeightDistribution) -> Self {
        self.sat_heights = heights;
        self
    }

    pub fn terrestrial_heights(mut self, heights: HeightDistribution) -> Self {
        self.terr_heights = heights;
        self
    }

    pub fn satellite_fading(mut self, params: ShadowedRicianParams) -> Self {
        self.sat_fading = params;
        self
    }

    pub fn terrestrial_fading(mut self, params: NakagamiParams) -> Self {
        self.terr_fading = params;
        self
    }

    pub fn satellite_bias(mut self, bias: f64) -> Self {
        self.sat_bias = bias;
        self
    }

    pub fn terrestrial_bias(mut self, bias: f64) -> Self {
        self.terr_bias = bias;
        self
    }

    pub fn satellite_tx_power_dbm(mut self, dbm: f64) -> Self {
        self.sat_power_dbm = dbm;
        self
    }

    pub fn terrestrial_tx_power_dbm(mut self, dbm: f64) -> Self {
        self.terr_power_dbm = dbm;
        self
    }

    pub fn satellite_gains_dbi(mut self, main: f64, side: f64) -> Self {
        self.sat_main_gain_dbi = main;
        self.sat_side_gain_dbi = side;
        self
    }

    pub fn terrestrial_gains_dbi(mut self, main: f64, side: f64) -> Self {
        self.terr_main_gain_dbi = main;
        self.terr_side_gain_dbi = side;
        self
    }

    pub fn satellite_path_loss_exponent(mut self, beta: f64) -> Self {
        self.sat_beta = beta;
        self
    }

    pub fn terrestrial_path_loss_exponent(mut self, beta: f64) -> Self {
        self.terr_beta = beta;
        self
    }

    pub fn bandwidth_hz(mut self, hz: f64) -> Self {
        self.bandwidth_hz = hz;
        self
    }

    pub fn noise_psd_dbm_hz(mut self, dbm_hz: f64) -> Self {
        self.noise_psd_dbm_hz = dbm_hz;
        self
    }

    pub fn user_density_per_m2(mut self, density: f64) -> Self {
        self.user_density_per_m2 = density;
        self
    }

    /// When set, multiplies the free-space factor (c / 4πf_c)² into every
    /// effective gain; when unset, configured gains are taken as already
    /// effective.
    pub fn carrier_frequency_hz(mut self, hz: f64) -> Self {
        self.carrier_frequency_hz = Some(hz);
        self
    }

    pub fn build(self) -> Result<ScenarioConfig> {
        let free_space = match self.carrier_frequency_hz {
            Some(fc) if fc > 0.0 => {
                let lam = units::SPEED_OF_LIGHT_M_S / fc;
                (lam / (4.0 * std::f64::consts::PI)).powi(2)
            }
            Some(fc) => {
                return Err(Error::Config(format!("carrier frequency must be > 0 Hz, got {fc}")));
            }
            None => 1.0,
        };
        let mut satellite = NetworkLayer {
            kind: LayerKind::Satellite,
            density_per_m2: 0.0,
            heights: self.sat_heights,
            path_loss_exponent: self.sat_beta,
            tx_power_w: units::dbm_to_watts(self.sat_power_dbm),
            bias: self.sat_bias,
            main_gain: units::db_to_linear(self.sat_main_gain_dbi) * free_space,
            side_gain: units::db_to_linear(self.sat_side_gain_dbi) * free_space,
            fading: Fading::ShadowedRician(self.sat_fading),
        };
        let mut terrestrial = NetworkLayer {
            kind: LayerKind::Terrestrial,
            density_per_m2: 0.0,
            heights: self.terr_heights,
            path_loss_exponent: self.terr_beta,
            tx_power_w: units::dbm_to_watts(self.terr_power_dbm),
            bias: self.terr_bias,
            main_gain: units::db_to_linear(self.terr_main_gain_dbi) * free_space,
            side_gain: units::db_to_linear(self.terr_side_gain_dbi) * free_space,
            fading: Fading::Nakagami(self.terr_fading),
        };
        satellite.density_per_m2 = resolve_density(&satellite, &self.geom, self.sat_density)?;
        terrestrial.density_per_m2 = resolve_density(&terrestrial, &self.geom, self.terr_density)?;
        let config = ScenarioConfig {
            geom: self.geom,
            satellite,
            terrestrial,
            bandwidth_hz: self.bandwidth_hz,
            noise_psd_dbm_hz: self.noise_psd_dbm_hz,
            user_density_per_m2: self.user_density_per_m2,
        };
        config.validate()?;
        Ok(config)
    }
}

fn resolve_density(layer: &NetworkLayer, geom: &SphereGeometry, spec: DensitySpec) -> Result<f64> {
    match spec {
        DensitySpec::PerM2(d) => Ok(d),
        DensitySpec::MeanVisible(mean) => crate::analysis::density_from_mean_visible(layer, geom, mean),
    }
}
