//! End-to-end trial engine: sample both constellations, apply the biased
//! association rule, accumulate interference, and report empirical coverage.
//! This is the independent oracle the closed-form evaluators are validated
//! against; it shares the scenario types and the samplers but none of the
//! quadrature or transform machinery.
//!
//! Determinism contract: trial `i` of a run is a pure function of
//! `(scenario, trial_seed(master_seed, i))`. Aggregation uses integer
//! exceedance counts, whose reduction is associative, so results are
//! byte-identical for any worker count or schedule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{load_factors, CoverageCurve};
use crate::geometry::LayerKind;
use crate::scenario::{NetworkLayer, ScenarioConfig};
use crate::stochastic::{mix_seed, ConstellationSampler, VisibleNode};
use crate::{Error, Result};

/// Stream tag separating the per-trial seed sequence from other derived
/// streams ("TRIALSEQ").
const TRIAL_STREAM: u64 = 0x5452_4941_4c53_4551;

/// Normal quantile for the 95% Wilson intervals reported with empirical
/// curves.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Seed for trial `index` of a run keyed by `master_seed`. Exposed so test
/// harnesses can re-sample the exact constellations behind a trial.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    mix_seed(master_seed, &[TRIAL_STREAM, index])
}

/// Outcome of one network draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Serving layer; `None` when no node of either layer is visible.
    pub associated: Option<LayerKind>,
    /// Slant range to the serving node; 0 when unserved.
    pub serving_distance_m: f64,
    /// Linear SINR; 0 when unserved.
    pub sinr: f64,
    /// Shannon rate `W log2(1 + SINR)` in bits/s; 0 when unserved.
    pub rate_bps: f64,
    /// Rate divided by the serving layer's mean-load factor.
    pub load_scaled_rate_bps: f64,
    pub visible_satellites: usize,
    pub visible_terrestrials: usize,
}

/// Empirical coverage over a threshold grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCurve {
    pub thresholds_bps: Vec<f64>,
    /// Fraction of trials whose rate exceeded each threshold.
    pub coverage: Vec<f64>,
    pub n_trials: u64,
    /// 95% Wilson half-widths for each coverage fraction.
    pub wilson_halfwidth: Vec<f64>,
}

impl EmpiricalCurve {
    /// See [`percentile_rate`].
    pub fn percentile_rate(&self, percentile: f64) -> Result<f64> {
        percentile_rate(&self.thresholds_bps, &self.coverage, percentile)
    }
}

/// Reusable trial runner: samplers, load factors, and scratch buffers are
/// built once. Clone per worker thread; clones replay identically.
#[derive(Debug, Clone)]
pub struct TrialEngine {
    sat_layer: NetworkLayer,
    terr_layer: NetworkLayer,
    sat_sampler: ConstellationSampler,
    terr_sampler: ConstellationSampler,
    load_sat: f64,
    load_terr: f64,
    sigma2_w: f64,
    bandwidth_hz: f64,
    buf_sat: Vec<VisibleNode>,
    buf_terr: Vec<VisibleNode>,
}

impl TrialEngine {
    pub fn new(cfg: &ScenarioConfig) -> Result<TrialEngine> {
        cfg.validate()?;
        let (load_sat, load_terr) = if cfg.user_density_per_m2 > 0.0 {
            load_factors(cfg)?
        } else {
            (1.0, 1.0)
        };
        Ok(TrialEngine {
            sat_layer: cfg.satellite,
            terr_layer: cfg.terrestrial,
            sat_sampler: ConstellationSampler::new(&cfg.satellite, &cfg.geom)?,
            terr_sampler: ConstellationSampler::new(&cfg.terrestrial, &cfg.geom)?,
            load_sat,
            load_terr,
            sigma2_w: cfg.noise_power_w(),
            bandwidth_hz: cfg.bandwidth_hz,
            buf_sat: Vec::new(),
            buf_terr: Vec::new(),
        })
    }

    pub fn load_factors(&self) -> (f64, f64) {
        (self.load_sat, self.load_terr)
    }

    /// Run one trial. Association picks the larger biased mean received
    /// power `P B d^{-β}` between the layers' nearest visible nodes (a tie,
    /// a probability-zero event, goes to the satellite). The serving node
    /// radiates with its main-lobe gain; every other visible node of both
    /// layers interferes with its side-lobe gain.
    pub fn run(&mut self, seed: u64) -> TrialResult {
        self.buf_sat.clear();
        self.buf_terr.clear();
        self.sat_sampler.sample_visible(seed, &mut self.buf_sat);
        self.terr_sampler.sample_visible(seed, &mut self.buf_terr);

        let nearest = |buf: &[VisibleNode]| {
            buf.iter()
                .enumerate()
                .min_by(|a, b| a.1.slant_range_m.total_cmp(&b.1.slant_range_m))
                .map(|(i, n)| (i, n.slant_range_m))
        };
        let near_sat = nearest(&self.buf_sat);
        let near_terr = nearest(&self.buf_terr);

        let metric = |layer: &NetworkLayer, d: f64| {
            layer.tx_power_w * layer.bias * d.powf(-layer.path_loss_exponent)
        };
        let associated = match (near_sat, near_terr) {
            (None, None) => None,
            (Some(_), None) => Some(LayerKind::Satellite),
            (None, Some(_)) => Some(LayerKind::Terrestrial),
            (Some((_, ds)), Some((_, dt))) => {
                if metric(&self.sat_layer, ds) >= metric(&self.terr_layer, dt) {
                    Some(LayerKind::Satellite)
                } else {
                    Some(LayerKind::Terrestrial)
                }
            }
        };

        let (visible_satellites, visible_terrestrials) = (self.buf_sat.len(), self.buf_terr.len());
        let Some(winner) = associated else {
            return TrialResult {
                associated: None,
                serving_distance_m: 0.0,
                sinr: 0.0,
                rate_bps: 0.0,
                load_scaled_rate_bps: 0.0,
                visible_satellites,
                visible_terrestrials,
            };
        };
        let (serving_idx, serving_d, own_layer, load) = match winner {
            LayerKind::Satellite => {
                let (i, d) = near_sat.unwrap();
                (i, d, &self.sat_layer, self.load_sat)
            }
            LayerKind::Terrestrial => {
                let (i, d) = near_terr.unwrap();
                (i, d, &self.terr_layer, self.load_terr)
            }
        };

        let mut interference = 0.0;
        for (kind, layer, buf) in [
            (LayerKind::Satellite, &self.sat_layer, &self.buf_sat),
            (LayerKind::Terrestrial, &self.terr_layer, &self.buf_terr),
        ] {
            let eirp = layer.side_gain * layer.tx_power_w;
            for (i, node) in buf.iter().enumerate() {
                if kind == winner && i == serving_idx {
                    continue;
                }
                interference +=
                    eirp * node.fading_power * node.slant_range_m.powf(-layer.path_loss_exponent);
            }
        }

        let serving = match winner {
            LayerKind::Satellite => &self.buf_sat[serving_idx],
            LayerKind::Terrestrial => &self.buf_terr[serving_idx],
        };
        let signal = own_layer.main_gain
            * own_layer.tx_power_w
            * serving.fading_power
            * serving_d.powf(-own_layer.path_loss_exponent);
        let sinr = signal / (self.sigma2_w + interference);
        let rate_bps = self.bandwidth_hz * (1.0 + sinr).log2();
        TrialResult {
            associated: Some(winner),
            serving_distance_m: serving_d,
            sinr,
            rate_bps,
            load_scaled_rate_bps: rate_bps / load,
            visible_satellites,
            visible_terrestrials,
        }
    }
}

/// One network draw from scratch; prefer [`TrialEngine`] for repeated use.
pub fn run_trial(cfg: &ScenarioConfig, seed: u64) -> Result<TrialResult> {
    Ok(TrialEngine::new(cfg)?.run(seed))
}

/// Empirical rate coverage: the fraction of `n_trials` draws whose rate
/// (load-scaled when `load_aware`) exceeds each threshold. Unserved trials
/// count in the denominator with rate 0.
pub fn empirical_coverage(
    cfg: &ScenarioConfig,
    gamma_grid: &[f64],
    n_trials: u64,
    master_seed: u64,
    load_aware: bool,
) -> Result<EmpiricalCurve> {
    if n_trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    for g in gamma_grid {
        if !(*g >= 0.0) || !g.is_finite() {
            return Err(Error::Config(format!(
                "rate thresholds must be finite and >= 0, got {g}"
            )));
        }
    }
    let engine = TrialEngine::new(cfg)?;
    let m = gamma_grid.len();
    let counts = (0..n_trials)
        .into_par_iter()
        .fold(
            || (engine.clone(), vec![0u64; m]),
            |(mut eng, mut acc), i| {
                let trial = eng.run(trial_seed(master_seed, i));
                let rate = if load_aware {
                    trial.load_scaled_rate_bps
                } else {
                    trial.rate_bps
                };
                for (slot, g) in acc.iter_mut().zip(gamma_grid) {
                    if rate > *g {
                        *slot += 1;
                    }
                }
                (eng, acc)
            },
        )
        .map(|(_, acc)| acc)
        .reduce(
            || vec![0u64; m],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let n = n_trials as f64;
    let coverage: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let wilson_halfwidth = coverage.iter().map(|&p| wilson_halfwidth(p, n)).collect();
    Ok(EmpiricalCurve {
        thresholds_bps: gamma_grid.to_vec(),
        coverage,
        n_trials,
        wilson_halfwidth,
    })
}

/// Half-width of the 95% Wilson score interval around an observed fraction.
pub fn wilson_halfwidth(p_hat: f64, n: f64) -> f64 {
    let z2 = WILSON_Z * WILSON_Z;
    WILSON_Z / (1.0 + z2 / n) * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Rate achieved by `100 - percentile` percent of users: the threshold where
/// coverage crosses `1 - percentile/100`, linearly interpolated between grid
/// points. Returns 0 when coverage is already below the target at the first
/// threshold, and the last threshold when coverage never drops below it.
pub fn percentile_rate(thresholds: &[f64], coverage: &[f64], percentile: f64) -> Result<f64> {
    if !(percentile > 0.0 && percentile < 100.0) {
        return Err(Error::Config(format!(
            "percentile must be in (0, 100), got {percentile}"
        )));
    }
    if thresholds.is_empty() || thresholds.len() != coverage.len() {
        return Err(Error::Config(format!(
            "need matching nonempty grids, got {} thresholds and {} coverage values",
            thresholds.len(),
            coverage.len()
        )));
    }
    if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("thresholds must be strictly increasing".into()));
    }
    let target = 1.0 - percentile / 100.0;
    if coverage[0] < target {
        return Ok(0.0);
    }
    // First crossing below the target; coverage noise past it is irrelevant.
    for j in 1..coverage.len() {
        if coverage[j] < target {
            let (c0, c1) = (coverage[j - 1], coverage[j]);
            let (t0, t1) = (thresholds[j - 1], thresholds[j]);
            return Ok(t0 + (c0 - target) / (c0 - c1) * (t1 - t0));
        }
    }
    Ok(*thresholds.last().unwrap())
}

/// [`percentile_rate`] over an analytic coverage curve.
pub fn percentile_rate_analytic(curve: &CoverageCurve, percentile: f64) -> Result<f64> {
    let thresholds: Vec<f64> = curve.points.iter().map(|p| p.gamma_bps).collect();
    let coverage: Vec<f64> = curve.points.iter().map(|p| p.p_cov).collect();
    percentile_rate(&thresholds, &coverage, percentile)
}
