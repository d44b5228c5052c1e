//! On-disk scenario schema: a TOML document with units spelled out in the
//! key names. Parsing converts to linear base units exactly once; the result
//! is a validated [`ScenarioConfig`].
//!
//! Serialization picks file values whose parse reproduces the config
//! bit-for-bit, so parse → serialize → parse is the identity.

use serde::{Deserialize, Serialize};

use super::units;
use super::{NetworkLayer, ScenarioConfig};
use crate::geometry::{HeightDistribution, LayerKind, SphereGeometry};
use crate::stochastic::{Fading, NakagamiParams, ShadowedRicianParams};
use crate::{Error, Result};

/// Top-level scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_earth_radius_km")]
    pub earth_radius_km: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit_radius_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit_altitude_km: Option<f64>,
    pub bandwidth_mhz: f64,
    pub noise_psd_dbm_hz: f64,
    #[serde(default)]
    pub user_density_per_km2: f64,
    /// Optional carrier frequency; when present the free-space factor
    /// (c / 4πf_c)² multiplies every gain at parse time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier_frequency_ghz: Option<f64>,
    pub satellite: LayerFile,
    pub terrestrial: LayerFile,
}

fn default_earth_radius_km() -> f64 {
    6371.0
}

/// Per-layer section. Exactly one of `density_per_km2` and
/// `mean_visible_count` must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_per_km2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_visible_count: Option<f64>,
    #[serde(default)]
    pub height_min_m: f64,
    pub height_max_m: f64,
    pub path_loss_exponent: f64,
    pub tx_power_dbm: f64,
    #[serde(default = "default_bias")]
    pub bias: f64,
    pub main_gain_dbi: f64,
    pub side_gain_dbi: f64,
    pub fading: FadingFile,
}

fn default_bias() -> f64 {
    1.0
}

/// Fading selector: a named preset string or an explicit parameter table.
/// `fhs`, `as`, `ils` and `custom` are satellite-only; `nakagami` is
/// terrestrial-only; `rayleigh` maps to each layer's Rayleigh special case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingFile {
    Fhs,
    As,
    Ils,
    Rayleigh,
    Custom { m: u32, b: f64, omega: f64 },
    Nakagami { n: u32 },
}

impl FadingFile {
    fn resolve(&self, kind: LayerKind) -> Result<Fading> {
        let mismatch = || {
            Err(Error::Config(format!(
                "fading {self:?} is not valid for the {kind} layer"
            )))
        };
        match (kind, self) {
            (LayerKind::Satellite, FadingFile::Fhs) => {
                Ok(Fading::ShadowedRician(ShadowedRicianParams::frequent_heavy_shadowing()))
            }
            (LayerKind::Satellite, FadingFile::As) => {
                Ok(Fading::ShadowedRician(ShadowedRicianParams::average_shadowing()))
            }
            (LayerKind::Satellite, FadingFile::Ils) => {
                Ok(Fading::ShadowedRician(ShadowedRicianParams::infrequent_light_shadowing()))
            }
            (LayerKind::Satellite, FadingFile::Rayleigh) => {
                Ok(Fading::ShadowedRician(ShadowedRicianParams::rayleigh()))
            }
            (LayerKind::Satellite, &FadingFile::Custom { m, b, omega }) => {
                Ok(Fading::ShadowedRician(ShadowedRicianParams::new(m, b, omega)?))
            }
            (LayerKind::Terrestrial, FadingFile::Rayleigh) => {
                Ok(Fading::Nakagami(NakagamiParams::rayleigh()))
            }
            (LayerKind::Terrestrial, &FadingFile::Nakagami { n }) => {
                Ok(Fading::Nakagami(NakagamiParams::new(n)?))
            }
            _ => mismatch(),
        }
    }

    fn from_fading(fading: &Fading) -> FadingFile {
        match fading {
            Fading::ShadowedRician(p) => {
                for (preset, file) in [
                    (ShadowedRicianParams::rayleigh(), FadingFile::Rayleigh),
                    (ShadowedRicianParams::frequent_heavy_shadowing(), FadingFile::Fhs),
                    (ShadowedRicianParams::average_shadowing(), FadingFile::As),
                    (ShadowedRicianParams::infrequent_light_shadowing(), FadingFile::Ils),
                ] {
                    if *p == preset {
                        return file;
                    }
                }
                FadingFile::Custom {
                    m: p.m,
                    b: p.b,
                    omega: p.omega,
                }
            }
            Fading::Nakagami(p) if *p == NakagamiParams::rayleigh() => FadingFile::Rayleigh,
            Fading::Nakagami(p) => FadingFile::Nakagami { n: p.n },
        }
    }
}

impl ScenarioFile {
    pub fn from_toml_str(text: &str) -> Result<ScenarioFile> {
        toml::from_str(text).map_err(|e| Error::Config(format!("scenario parse error: {e}")))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("scenario serialize error: {e}")))
    }

    /// Converts to base units, resolves densities, and validates.
    pub fn resolve(&self) -> Result<ScenarioConfig> {
        let orbit_radius_m = match (self.orbit_radius_km, self.orbit_altitude_km) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give orbit_radius_km or orbit_altitude_km, not both".into(),
                ))
            }
            (Some(r), None) => r * 1e3,
            (None, Some(a)) => self.earth_radius_km * 1e3 + a * 1e3,
            (None, None) => default_earth_radius_km() * 1e3 + 500e3,
        };
        let geom = SphereGeometry::new(self.earth_radius_km * 1e3, orbit_radius_m)?;
        let free_space = match self.carrier_frequency_ghz {
            Some(fc_ghz) if fc_ghz > 0.0 => {
                let lam = units::SPEED_OF_LIGHT_M_S / (fc_ghz * 1e9);
                (lam / (4.0 * std::f64::consts::PI)).powi(2)
            }
            Some(fc_ghz) => {
                return Err(Error::Config(format!(
                    "carrier_frequency_ghz must be > 0, got {fc_ghz}"
                )))
            }
            None => 1.0,
        };
        let satellite = self.satellite.resolve(LayerKind::Satellite, &geom, free_space)?;
        let terrestrial = self.terrestrial.resolve(LayerKind::Terrestrial, &geom, free_space)?;
        let config = ScenarioConfig {
            geom,
            satellite,
            terrestrial,
            bandwidth_hz: self.bandwidth_mhz * 1e6,
            noise_psd_dbm_hz: self.noise_psd_dbm_hz,
            user_density_per_m2: self.user_density_per_km2 * 1e-6,
        };
        config.validate()?;
        Ok(config)
    }

    /// File document whose [`ScenarioFile::resolve`] reproduces `config`
    /// bit-for-bit. Effective gains are written as-is (any carrier-frequency
    /// factor stays folded in), and densities are written directly rather
    /// than as mean visible counts.
    pub fn from_config(config: &ScenarioConfig) -> ScenarioFile {
        ScenarioFile {
            earth_radius_km: preimage(config.geom.earth_radius_m, |x| x * 1e3, |x| x / 1e3),
            orbit_radius_km: Some(preimage(config.geom.orbit_radius_m, |x| x * 1e3, |x| x / 1e3)),
            orbit_altitude_km: None,
            bandwidth_mhz: preimage(config.bandwidth_hz, |x| x * 1e6, |x| x / 1e6),
            noise_psd_dbm_hz: config.noise_psd_dbm_hz,
            user_density_per_km2: preimage(config.user_density_per_m2, |x| x * 1e-6, |x| x / 1e-6),
            carrier_frequency_ghz: None,
            satellite: LayerFile::from_layer(&config.satellite),
            terrestrial: LayerFile::from_layer(&config.terrestrial),
        }
    }
}

impl LayerFile {
    fn resolve(&self, kind: LayerKind, geom: &SphereGeometry, free_space: f64) -> Result<NetworkLayer> {
        let heights = HeightDistribution::uniform(self.height_min_m, self.height_max_m)?;
        let mut layer = NetworkLayer {
            kind,
            density_per_m2: 0.0,
            heights,
            path_loss_exponent: self.path_loss_exponent,
            tx_power_w: units::dbm_to_watts(self.tx_power_dbm),
            bias: self.bias,
            main_gain: units::db_to_linear(self.main_gain_dbi) * free_space,
            side_gain: units::db_to_linear(self.side_gain_dbi) * free_space,
            fading: self.fading.resolve(kind)?,
        };
        layer.density_per_m2 = match (self.density_per_km2, self.mean_visible_count) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(format!(
                    "{kind}: give density_per_km2 or mean_visible_count, not both"
                )))
            }
            (Some(d), None) => d * 1e-6,
            (None, Some(mean)) => crate::analysis::density_from_mean_visible(&layer, geom, mean)?,
            (None, None) => {
                return Err(Error::Config(format!(
                    "{kind}: one of density_per_km2 or mean_visible_count is required"
                )))
            }
        };
        layer.validate()?;
        Ok(layer)
    }

    fn from_layer(layer: &NetworkLayer) -> LayerFile {
        LayerFile {
            density_per_km2: Some(preimage(layer.density_per_m2, |x| x * 1e-6, |x| x / 1e-6)),
            mean_visible_count: None,
            height_min_m: layer.heights.h_min_m(),
            height_max_m: layer.heights.h_max_m(),
            path_loss_exponent: layer.path_loss_exponent,
            tx_power_dbm: preimage(layer.tx_power_w, units::dbm_to_watts, units::watts_to_dbm),
            bias: layer.bias,
            main_gain_dbi: preimage(layer.main_gain, units::db_to_linear, units::linear_to_db),
            side_gain_dbi: preimage(layer.side_gain, units::db_to_linear, units::linear_to_db),
            fading: FadingFile::from_fading(&layer.fading),
        }
    }
}

/// Value `a` with `map(a) == target` exactly, found by nudging the naive
/// inverse by ulps. Unit conversions round, so the naive inverse can be off
/// by a few ulps; searching the neighborhood restores bit-exact round trips.
/// Falls back to the naive inverse if no exact preimage exists nearby.
fn preimage(target: f64, map: impl Fn(f64) -> f64, inverse: impl Fn(f64) -> f64) -> f64 {
    if target == 0.0 {
        return 0.0;
    }
    let guess = inverse(target);
    if map(guess) == target {
        return guess;
    }
    let mut lo = guess;
    let mut hi = guess;
    for _ in 0..64 {
        lo = next_toward(lo, f64::NEG_INFINITY);
        hi = next_toward(hi, f64::INFINITY);
        if map(lo) == target {
            return lo;
        }
        if map(hi) == target {
            return hi;
        }
    }
    guess
}

fn next_toward(x: f64, toward: f64) -> f64 {
    if x == toward {
        return x;
    }
    let bits = x.to_bits();
    let next = if (x < toward) == (x >= 0.0) {
        bits + 1
    } else {
        bits - 1
    };
    f64::from_bits(next)
}
