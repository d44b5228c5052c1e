//! Scenario file format: exact round trips, unit conversions, preset
//! expansion, the bundled scenario files, and schema rejection paths.

use std::path::PathBuf;

use stin::geometry::HeightDistribution;
use stin::scenario::{ScenarioConfig, ScenarioFile};
use stin::stochastic::{Fading, NakagamiParams, ShadowedRicianParams};

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn reference_toml() -> String {
    r#"
earth_radius_km = 6371.0
orbit_radius_km = 6871.0
bandwidth_mhz = 100.0
noise_psd_dbm_hz = -174.0

[satellite]
mean_visible_count = 5.0
height_min_m = 0.0
height_max_m = 1000.0
path_loss_exponent = 2.0
tx_power_dbm = 43.0
bias = 2.0
main_gain_dbi = 10.0
side_gain_dbi = -10.0
fading = "as"

[terrestrial]
mean_visible_count = 4.0
height_max_m = 200.0
path_loss_exponent = 4.0
tx_power_dbm = 46.0
main_gain_dbi = 0.0
side_gain_dbi = 0.0
fading = { nakagami = { n = 4 } }
"#
    .to_string()
}

fn assert_configs_identical(a: &ScenarioConfig, b: &ScenarioConfig) {
    let bits = |x: f64| x.to_bits();
    assert_eq!(bits(a.geom.earth_radius_m), bits(b.geom.earth_radius_m));
    assert_eq!(bits(a.geom.orbit_radius_m), bits(b.geom.orbit_radius_m));
    assert_eq!(bits(a.bandwidth_hz), bits(b.bandwidth_hz));
    assert_eq!(bits(a.noise_psd_dbm_hz), bits(b.noise_psd_dbm_hz));
    assert_eq!(bits(a.user_density_per_m2), bits(b.user_density_per_m2));
    for (x, y) in [(&a.satellite, &b.satellite), (&a.terrestrial, &b.terrestrial)] {
        assert_eq!(x.kind, y.kind);
        assert_eq!(bits(x.density_per_m2), bits(y.density_per_m2), "{} density", x.kind);
        assert_eq!(bits(x.heights.h_min_m()), bits(y.heights.h_min_m()));
        assert_eq!(bits(x.heights.h_max_m()), bits(y.heights.h_max_m()));
        assert_eq!(bits(x.path_loss_exponent), bits(y.path_loss_exponent));
        assert_eq!(bits(x.tx_power_w), bits(y.tx_power_w), "{} power", x.kind);
        assert_eq!(bits(x.bias), bits(y.bias));
        assert_eq!(bits(x.main_gain), bits(y.main_gain), "{} main gain", x.kind);
        assert_eq!(bits(x.side_gain), bits(y.side_gain), "{} side gain", x.kind);
        assert_eq!(x.fading, y.fading);
    }
}

/// parse -> resolve -> serialize -> parse -> resolve is the identity on
/// every numeric field, bit for bit.
#[test]
fn file_round_trip_is_bit_exact() {
    let original = ScenarioFile::from_toml_str(&reference_toml())
        .unwrap()
        .resolve()
        .unwrap();
    let text = ScenarioFile::from_config(&original).to_toml_string().unwrap();
    let reparsed = ScenarioFile::from_toml_str(&text).unwrap().resolve().unwrap();
    assert_configs_identical(&original, &reparsed);
}

/// Builder-produced configs survive the same round trip. Carrier-folded
/// gains may miss the image of the dBi map, so they round-trip to a few
/// ulps rather than bit-exactly; every other field is exact.
#[test]
fn builder_config_round_trips_through_file() {
    let original = ScenarioConfig::builder()
        .satellite_mean_visible(64.0)
        .terrestrial_mean_visible(128.0)
        .satellite_bias(3.5)
        .satellite_gains_dbi(30.0, -10.0)
        .satellite_fading(ShadowedRicianParams::frequent_heavy_shadowing())
        .terrestrial_fading(NakagamiParams::new(3).unwrap())
        .carrier_frequency_hz(2e9)
        .user_density_per_m2(1.3e-10)
        .build()
        .unwrap();
    let text = ScenarioFile::from_config(&original).to_toml_string().unwrap();
    let reparsed = ScenarioFile::from_toml_str(&text).unwrap().resolve().unwrap();

    let bits = |x: f64| x.to_bits();
    assert_eq!(bits(original.geom.orbit_radius_m), bits(reparsed.geom.orbit_radius_m));
    assert_eq!(bits(original.bandwidth_hz), bits(reparsed.bandwidth_hz));
    assert_eq!(bits(original.user_density_per_m2), bits(reparsed.user_density_per_m2));
    for (x, y) in [
        (&original.satellite, &reparsed.satellite),
        (&original.terrestrial, &reparsed.terrestrial),
    ] {
        assert_eq!(bits(x.density_per_m2), bits(y.density_per_m2), "{} density", x.kind);
        assert_eq!(bits(x.tx_power_w), bits(y.tx_power_w), "{} power", x.kind);
        assert_eq!(bits(x.bias), bits(y.bias));
        assert_eq!(x.fading, y.fading);
        for (g, h) in [(x.main_gain, y.main_gain), (x.side_gain, y.side_gain)] {
            assert!((g - h).abs() <= g.abs() * 1e-13, "{} gain {g} vs {h}", x.kind);
        }
    }
}

/// Named fading presets expand to their exact parameter triples.
#[test]
fn fading_presets_expand_exactly() {
    let base = reference_toml();
    let cases = [
        ("fhs", ShadowedRicianParams::frequent_heavy_shadowing(), (1, 0.063, 8.97e-4)),
        ("as", ShadowedRicianParams::average_shadowing(), (10, 0.126, 0.835)),
        ("ils", ShadowedRicianParams::infrequent_light_shadowing(), (19, 0.158, 1.29)),
    ];
    for (name, preset, (m, b, omega)) in cases {
        let text = base.replace("fading = \"as\"", &format!("fading = \"{name}\""));
        let cfg = ScenarioFile::from_toml_str(&text).unwrap().resolve().unwrap();
        let Fading::ShadowedRician(p) = cfg.satellite.fading else {
            panic!("satellite fading must be the shadowed-Rician family");
        };
        assert_eq!(p, preset);
        assert_eq!(p.m, m, "{name}");
        assert_eq!(p.b, b, "{name}");
        assert_eq!(p.omega, omega, "{name}");
    }
    // Terrestrial rayleigh is Nakagami order 1; the custom satellite table
    // passes through verbatim.
    let text = base
        .replace("fading = { nakagami = { n = 4 } }", "fading = \"rayleigh\"")
        .replace("fading = \"as\"", "fading = { custom = { m = 7, b = 0.2, omega = 1.5 } }");
    let cfg = ScenarioFile::from_toml_str(&text).unwrap().resolve().unwrap();
    assert_eq!(cfg.terrestrial.fading, Fading::Nakagami(NakagamiParams::rayleigh()));
    let Fading::ShadowedRician(p) = cfg.satellite.fading else {
        panic!("satellite fading must be the shadowed-Rician family");
    };
    assert_eq!((p.m, p.b, p.omega), (7, 0.2, 1.5));
}

/// Declared units convert exactly once into base units.
#[test]
fn units_convert_to_base() {
    let cfg = ScenarioFile::from_toml_str(&reference_toml())
        .unwrap()
        .resolve()
        .unwrap();
    assert_eq!(cfg.geom.earth_radius_m, 6371e3);
    assert_eq!(cfg.geom.orbit_radius_m, 6871e3);
    assert_eq!(cfg.bandwidth_hz, 100e6);
    // 43 dBm = 10^{(43-30)/10} W; -174 dBm/Hz over 100 MHz.
    assert!((cfg.satellite.tx_power_w - 19.952_623_149_688_8).abs() < 1e-10);
    assert!((cfg.noise_power_w() - 3.981_071_705_534_972e-13).abs() < 1e-25);
    assert!((cfg.satellite.main_gain - 10.0).abs() < 1e-12);
    assert!((cfg.satellite.side_gain - 0.1).abs() < 1e-14);
    assert_eq!(cfg.satellite.bias, 2.0);
    assert_eq!(
        cfg.satellite.heights,
        HeightDistribution::uniform(0.0, 1000.0).unwrap()
    );
    // mean_visible_count resolves through the visibility mean.
    let vis = stin::analysis::visibility_probability(&cfg.satellite, &cfg.geom).unwrap();
    assert!((vis.poisson_mean - 5.0).abs() < 1e-9);
}

/// A carrier frequency folds the free-space factor into every gain.
#[test]
fn carrier_frequency_folds_into_gains() {
    let with = format!("carrier_frequency_ghz = 2.0\n{}", reference_toml());
    let cfg = ScenarioFile::from_toml_str(&with).unwrap().resolve().unwrap();
    let lam = 299_792_458.0 / 2e9;
    let factor = (lam / (4.0 * std::f64::consts::PI)).powi(2);
    assert!((cfg.satellite.main_gain - 10.0 * factor).abs() <= 10.0 * factor * 1e-12);
    assert!((cfg.terrestrial.main_gain - factor).abs() <= factor * 1e-12);
}

/// Orbit altitude is an alternative spelling of orbit radius; omitting both
/// selects the 500 km reference orbit.
#[test]
fn orbit_spellings_agree() {
    let by_radius = reference_toml();
    let by_altitude = by_radius.replace("orbit_radius_km = 6871.0", "orbit_altitude_km = 500.0");
    let a = ScenarioFile::from_toml_str(&by_radius).unwrap().resolve().unwrap();
    let b = ScenarioFile::from_toml_str(&by_altitude).unwrap().resolve().unwrap();
    assert_configs_identical(&a, &b);
    let neither = by_radius.replace("orbit_radius_km = 6871.0\n", "");
    let c = ScenarioFile::from_toml_str(&neither).unwrap().resolve().unwrap();
    assert_eq!(c.geom.orbit_radius_m, 6871e3);
}

/// The bundled scenario files parse, resolve, and carry their headline
/// parameters.
#[test]
fn bundled_scenarios_resolve() {
    let dir = scenarios_dir();
    let mean_visible = |cfg: &ScenarioConfig, layer: &stin::scenario::NetworkLayer| {
        stin::analysis::visibility_probability(layer, &cfg.geom)
            .unwrap()
            .poisson_mean
    };

    let load = |name: &str| {
        let path = dir.join(name);
        let text = std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
        ScenarioFile::from_toml_str(&text)
            .unwrap_or_else(|e| panic!("{name}: {e}"))
            .resolve()
            .unwrap_or_else(|e| panic!("{name}: {e}"))
    };

    let fig_ref = load("validation_rayleigh.toml");
    assert!((mean_visible(&fig_ref, &fig_ref.satellite) - 100.0).abs() < 1e-6);
    assert!((mean_visible(&fig_ref, &fig_ref.terrestrial) - 5000.0).abs() < 1e-4);
    assert_eq!(fig_ref.satellite.bias, 10.0);
    assert_eq!(
        fig_ref.satellite.fading,
        Fading::ShadowedRician(ShadowedRicianParams::rayleigh())
    );
    assert_eq!(fig_ref.terrestrial.fading, Fading::Nakagami(NakagamiParams::rayleigh()));

    for name in ["sat_density_fhs.toml", "sat_density_as.toml"] {
        let cfg = load(name);
        assert!((mean_visible(&cfg, &cfg.satellite) - 4.0).abs() < 1e-8, "{name}");
        assert!((mean_visible(&cfg, &cfg.terrestrial) - 5.0).abs() < 1e-8, "{name}");
        assert_eq!(cfg.satellite.bias, 1.0, "{name}");
    }

    for name in ["offload_bias_as.toml", "offload_bias_fhs.toml"] {
        let cfg = load(name);
        assert!((mean_visible(&cfg, &cfg.satellite) - 200.0).abs() < 1e-6, "{name}");
        assert!((mean_visible(&cfg, &cfg.terrestrial) - 500.0).abs() < 1e-5, "{name}");
        assert_eq!(cfg.satellite.bias, 2.0, "{name}");
        assert!((cfg.satellite.main_gain - 1e3).abs() < 1e-9, "{name}: 30 dBi main");
        assert_eq!(cfg.user_density_per_m2, 1.17e-4 * 1e-6, "{name}");
    }
}

/// Schema violations are rejected with config errors.
#[test]
fn invalid_documents_are_rejected() {
    let base = reference_toml();

    let both_density = base.replace(
        "mean_visible_count = 5.0",
        "mean_visible_count = 5.0\ndensity_per_km2 = 1e-5",
    );
    let err = ScenarioFile::from_toml_str(&both_density).unwrap().resolve();
    assert!(err.is_err(), "both density spellings must conflict");

    let neither_density = base.replace("mean_visible_count = 5.0\n", "");
    let err = ScenarioFile::from_toml_str(&neither_density).unwrap().resolve();
    assert!(err.is_err(), "some density spelling is required");

    let both_orbits = format!("orbit_altitude_km = 500.0\n{base}");
    let err = ScenarioFile::from_toml_str(&both_orbits).unwrap().resolve();
    assert!(err.is_err(), "both orbit spellings must conflict");

    let unknown_key = format!("{base}\n[satellite.extra]\nvalue = 1.0\n");
    assert!(ScenarioFile::from_toml_str(&unknown_key).is_err(), "unknown keys must fail");

    let typo = base.replace("bandwidth_mhz", "bandwidth_mhz_typo");
    assert!(ScenarioFile::from_toml_str(&typo).is_err());

    let sat_nakagami = base.replace("fading = \"as\"", "fading = { nakagami = { n = 2 } }");
    assert!(ScenarioFile::from_toml_str(&sat_nakagami).unwrap().resolve().is_err());

    let terr_preset = base.replace("fading = { nakagami = { n = 4 } }", "fading = \"fhs\"");
    assert!(ScenarioFile::from_toml_str(&terr_preset).unwrap().resolve().is_err());

    let bad_carrier = format!("carrier_frequency_ghz = 0.0\n{base}");
    assert!(ScenarioFile::from_toml_str(&bad_carrier).unwrap().resolve().is_err());

    assert!(ScenarioFile::from_toml_str("not toml at all [").is_err());
}
