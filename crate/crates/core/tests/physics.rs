mod common;

use boiler_fdd::hx::{effectiveness_shell_tube, solve_outlets};
use boiler_fdd::thermo::{adiabatic_flame_temperature, excess_air_from_co2, flue_fraction, AirSpec, Basis, FuelSpec, Species};
use proptest::prelude::*;

use common::marching_effectiveness;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn exchanger_energy_balance_closes(
        t_hot in 600.0f64..2300.0,
        t_cold in 300.0f64..370.0,
        c_hot in 50.0f64..5000.0,
        c_cold in 500.0f64..200_000.0,
        ua in 0.0f64..20_000.0,
        passes in 1u32..4,
    ) {
        let s = solve_outlets(t_hot, c_hot, t_cold, c_cold, ua, passes).unwrap();
        let hot_side = c_hot * (t_hot - s.t_hot_out);
        let cold_side = c_cold * (s.t_cold_out - t_cold);
        let scale = s.q.abs().max(f64::MIN_POSITIVE);
        prop_assert!((hot_side - s.q).abs() <= 1e-9 * scale.max(1.0), "{hot_side} vs {}", s.q);
        prop_assert!((cold_side - s.q).abs() <= 1e-9 * scale.max(1.0), "{cold_side} vs {}", s.q);
        prop_assert!(s.t_hot_out >= t_cold - 1e-9 && s.t_cold_out <= t_hot + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn two_shell_effectiveness_matches_marching(ntu in 0.05f64..6.0, c_ratio in 0.05f64..1.0) {
        let closed = effectiveness_shell_tube(ntu, c_ratio, 2).unwrap();
        let marched = marching_effectiveness(ntu, c_ratio, 2);
        prop_assert!((closed - marched).abs() < 1e-3, "ntu {ntu} cr {c_ratio}: {closed} vs {marched}");
    }

    #[test]
    fn one_shell_effectiveness_matches_marching(ntu in 0.05f64..6.0, c_ratio in 0.05f64..1.0) {
        let closed = effectiveness_shell_tube(ntu, c_ratio, 1).unwrap();
        let marched = marching_effectiveness(ntu, c_ratio, 1);
        prop_assert!((closed - marched).abs() < 1e-3, "ntu {ntu} cr {c_ratio}: {closed} vs {marched}");
    }
}

#[test]
fn methane_dry_co2_fractions() {
    let fuel = FuelSpec::methane();
    let co2 = flue_fraction(&fuel, 0.0, Species::Co2, Basis::Dry).unwrap();
    assert!((co2 - 0.11737).abs() <= 1e-5, "{co2}");
    let z = excess_air_from_co2(&fuel, 0.10, Basis::Dry).unwrap();
    assert!((z - 0.1555).abs() <= 1e-4, "{z}");
    let back = flue_fraction(&fuel, z, Species::Co2, Basis::Dry).unwrap();
    assert!((back - 0.10).abs() < 1e-12);
}

#[test]
fn flame_temperatures_track_reference_column() {
    let fuel = FuelSpec::methane();
    let air = AirSpec::default();
    let reference = [2275.0, 2145.0, 2030.0, 1929.0, 1839.0, 1758.0];
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for (i, want) in reference.iter().enumerate() {
        let z = i as f64 / 10.0;
        let wet = adiabatic_flame_temperature(&fuel, &air, z, true).unwrap();
        let dry = adiabatic_flame_temperature(&fuel, &air, z, false).unwrap();
        assert!((wet - want).abs() <= 0.10 * want, "z {z}: {wet} vs {want}");
        assert!(wet < dry);
        assert!(wet < prev.0 && dry < prev.1);
        prev = (wet, dry);
    }
}
