//! Steady-state boiler: an adiabatic combustion chamber feeding a two-pass
//! shell-and-tube exchanger. The composition is closed form, so a simulation
//! is a single pass with no inner iteration.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationReport;
use crate::error::{Error, Result};
use crate::fault::FaultCondition;
use crate::hx::{overall_ua, solve_outlets, HxGeometry};
use crate::thermo::{combustion_outputs, excess_air_from_co2, AirSpec, Basis, CombustionState, FuelSpec};

/// J/kg/K, temperature independent.
pub const CP_WATER: f64 = 4186.0;
/// Latent heat of the uncondensed flue vapor, J/kg.
pub const H_FG: f64 = 2.257e6;
/// Room temperature for the flue-loss reference, K.
pub const DEFAULT_ROOM_TEMPERATURE: f64 = 294.0;
/// Combustion-air temperature at rating conditions, K.
pub const RATED_AIR_TEMPERATURE: f64 = 294.0;
pub const DEFAULT_RELATIVE_HUMIDITY: f64 = 0.65;
/// Water-side film coefficient when the datasheet gives none, W/m²/K.
pub const DEFAULT_H_INNER: f64 = 1000.0;

const BASELINE_TOLERANCE: f64 = 1e-9;

/// Manufacturer flow / temperature-rise pair used for validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationPoint {
    pub water_flow_kg_s: f64,
    #[serde(rename = "expected_delta_t_K")]
    pub expected_delta_t_k: f64,
}

/// One boiler model, as stored in a boiler-spec JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoilerSpec {
    pub id: String,
    pub manufacturer: String,
    pub model: String,
    /// W
    pub rated_input: f64,
    /// W
    pub rated_output: f64,
    /// Water-side area, m².
    #[serde(rename = "a_i")]
    pub area_inner: f64,
    /// Gas-side area, m².
    #[serde(rename = "a_o")]
    pub area_outer: f64,
    /// W/m²/K
    pub h_inner: f64,
    /// Fitted gas-side coefficient, W/m²/K; absent until calibrated.
    #[serde(default)]
    pub h_outer_calibrated: Option<f64>,
    /// kg/s
    pub nominal_water_flow: f64,
    /// K
    pub nominal_return_temp: f64,
    /// Dry-basis CO2 mole fraction at rating.
    pub rated_co2_dry: f64,
    /// m³
    pub water_volume: f64,
    pub fuel: FuelSpec,
    #[serde(default)]
    pub air: AirSpec,
    pub shell_passes: u32,
    pub baseline_z: f64,
    /// K/W
    #[serde(default)]
    pub wall_resistance: f64,
    /// Metadata only; pressure loss is not modelled. m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hydraulic_diameter: Option<f64>,
    /// Metadata only. m².
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port_area: Option<f64>,
    /// Where the numbers come from.
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub validation_points: Vec<ValidationPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationReport>,
}

impl BoilerSpec {
    /// Test boiler with round numbers; not tied to any datasheet.
    pub fn synthetic(id: &str, rated_output: f64, efficiency: f64, area_outer: f64, area_inner: f64) -> Self {
        let fuel = FuelSpec::methane();
        let rated_co2_dry = 0.10;
        let baseline_z =
            excess_air_from_co2(&fuel, rated_co2_dry, Basis::Dry).expect("10 % CO2 is reachable");
        Self {
            id: id.to_string(),
            manufacturer: "Synthetic".into(),
            model: id.to_string(),
            rated_input: rated_output / efficiency,
            rated_output,
            area_inner,
            area_outer,
            h_inner: DEFAULT_H_INNER,
            h_outer_calibrated: None,
            nominal_water_flow: rated_output / (CP_WATER * 100.0 / 9.0),
            nominal_return_temp: 333.0,
            rated_co2_dry,
            water_volume: 0.2,
            fuel,
            air: AirSpec::default(),
            shell_passes: 2,
            baseline_z,
            wall_resistance: 0.0,
            hydraulic_diameter: Some(0.1016),
            port_area: Some(0.1),
            source: "synthetic test fixture".into(),
            validation_points: Vec::new(),
            calibration: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::invalid_spec(format!("{}: {j}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.fuel.validate()?;
        self.air.validate()?;
        let positive = [
            ("rated_input", self.rated_input),
            ("rated_output", self.rated_output),
            ("a_i", self.area_inner),
            ("a_o", self.area_outer),
            ("h_inner", self.h_inner),
            ("nominal_water_flow", self.nominal_water_flow),
            ("nominal_return_temp", self.nominal_return_temp),
            ("water_volume", self.water_volume),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid_spec(format!("{}: {name} must be positive, got {v}", self.id)));
            }
        }
        if self.rated_output >= self.rated_input {
            return Err(Error::invalid_spec(format!(
                "{}: rated output {} must be below rated input {}",
                self.id, self.rated_output, self.rated_input
            )));
        }
        if let Some(h) = self.h_outer_calibrated {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::invalid_spec(format!("{}: h_outer_calibrated {h}", self.id)));
            }
        }
        if self.shell_passes < 1 || self.wall_resistance < 0.0 {
            return Err(Error::invalid_spec(format!("{}: bad exchanger arrangement", self.id)));
        }
        let expected = excess_air_from_co2(&self.fuel, self.rated_co2_dry, Basis::Dry)?;
        if (expected - self.baseline_z).abs() > BASELINE_TOLERANCE {
            return Err(Error::invalid_spec(format!(
                "{}: baseline_z {} inconsistent with {} dry CO2 (expected {expected})",
                self.id, self.baseline_z, self.rated_co2_dry
            )));
        }
        Ok(())
    }

    pub fn h_outer(&self) -> Result<f64> {
        self.h_outer_calibrated.ok_or_else(|| {
            Error::invalid_spec(format!("{}: gas-side coefficient not calibrated", self.id))
        })
    }

    pub fn geometry(&self, h_outer: f64) -> HxGeometry {
        HxGeometry {
            area_inner: self.area_inner,
            area_outer: self.area_outer,
            h_inner: self.h_inner,
            h_outer,
            wall_resistance: self.wall_resistance,
            shell_passes: self.shell_passes,
        }
    }

    pub fn with_h_outer(&self, h_outer: f64) -> Self {
        Self {
            h_outer_calibrated: Some(h_outer),
            ..self.clone()
        }
    }

    /// Full firing at nominal flow and return temperature.
    pub fn rated_operating_point(&self) -> OperatingPoint {
        OperatingPoint {
            firing_fraction: 1.0,
            water_flow: self.nominal_water_flow,
            t_return: self.nominal_return_temp,
            t_outdoor: RATED_AIR_TEMPERATURE,
            rh: DEFAULT_RELATIVE_HUMIDITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub firing_fraction: f64,
    /// kg/s
    pub water_flow: f64,
    /// K
    pub t_return: f64,
    /// K
    pub t_outdoor: f64,
    pub rh: f64,
}

impl OperatingPoint {
    pub fn validate(&self) -> Result<()> {
        if !(self.firing_fraction > 0.0 && self.firing_fraction <= 1.0) {
            return Err(Error::domain(format!(
                "firing fraction {} outside (0, 1]",
                self.firing_fraction
            )));
        }
        if !(self.water_flow > 0.0 && self.water_flow.is_finite()) {
            return Err(Error::domain(format!("water flow {} must be positive", self.water_flow)));
        }
        if !(self.t_return > 273.0 && self.t_return < 373.0) {
            return Err(Error::domain(format!("return temperature {} K outside (273, 373)", self.t_return)));
        }
        if !(0.0..=1.0).contains(&self.rh) {
            return Err(Error::domain(format!("relative humidity {} outside [0, 1]", self.rh)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateResult {
    /// K
    pub t_supply: f64,
    /// K
    pub t_exhaust: f64,
    /// W
    pub q_out: f64,
    /// W
    pub q_in: f64,
    pub eta_thermal: f64,
    /// Percent.
    pub eff_combustion: f64,
    /// Percent of heat input.
    pub flue_loss: f64,
    /// Reference used for `flue_loss`, K.
    pub t_room: f64,
    /// W/K
    pub ua: f64,
    pub effectiveness: f64,
    pub combustion: CombustionState,
}

/// Heat-input breakdown. Sensible flue heat is referenced to the reactant
/// temperature; the latent term is the HHV/LHV gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBalance {
    pub q_in: f64,
    pub q_out: f64,
    pub flue_sensible: f64,
    pub latent: f64,
}

impl EnergyBalance {
    /// |q_in − (q_out + losses)| / q_in.
    pub fn closure_error(&self) -> f64 {
        (self.q_in - self.q_out - self.flue_sensible - self.latent).abs() / self.q_in
    }
}

impl SteadyStateResult {
    pub fn delta_t(&self, t_return: f64) -> f64 {
        self.t_supply - t_return
    }

    pub fn energy_balance(&self) -> EnergyBalance {
        let c = &self.combustion;
        EnergyBalance {
            q_in: self.q_in,
            q_out: self.q_out,
            flue_sensible: c.c_gas * (self.t_exhaust - c.t_reactants),
            latent: self.q_in - c.q_release,
        }
    }
}

fn flue_loss_percent(c: &CombustionState, t_exhaust: f64, q_in: f64, t_room: f64) -> f64 {
    let sensible = c.c_gas * (t_exhaust - t_room);
    let latent = c.m_combustion_water * H_FG;
    100.0 * (sensible + latent) / q_in
}

pub fn simulate(spec: &BoilerSpec, op: &OperatingPoint, fault: &FaultCondition) -> Result<SteadyStateResult> {
    simulate_with_room(spec, op, fault, DEFAULT_ROOM_TEMPERATURE)
}

pub fn simulate_with_room(
    spec: &BoilerSpec,
    op: &OperatingPoint,
    fault: &FaultCondition,
    t_room: f64,
) -> Result<SteadyStateResult> {
    let h_outer = spec.h_outer()?;
    op.validate()?;
    fault.validate()?;
    let q_in = op.firing_fraction * spec.rated_input;
    let z = spec.baseline_z + fault.extra_excess_air();
    let air = spec.air.at(op.t_outdoor, op.rh);
    let combustion = combustion_outputs(&spec.fuel, &air, q_in, z)?;
    let ua = overall_ua(&spec.geometry(h_outer), &fault.fouling_state())?;
    let c_water = op.water_flow * CP_WATER;
    let hx = solve_outlets(
        combustion.t_flame,
        combustion.c_gas,
        op.t_return,
        c_water,
        ua,
        spec.shell_passes,
    )?;
    debug_assert!(
        (combustion.c_gas * (combustion.t_flame - hx.t_hot_out) - c_water * (hx.t_cold_out - op.t_return)).abs()
            <= 1e-6 * hx.q.max(1.0),
        "gas-side and water-side heat disagree"
    );
    let flue_loss = flue_loss_percent(&combustion, hx.t_hot_out, q_in, t_room);
    Ok(SteadyStateResult {
        t_supply: hx.t_cold_out,
        t_exhaust: hx.t_hot_out,
        q_out: hx.q,
        q_in,
        eta_thermal: hx.q / q_in,
        eff_combustion: 100.0 - flue_loss,
        flue_loss,
        t_room,
        ua,
        effectiveness: hx.effectiveness,
        combustion,
    })
}

pub fn thermal_efficiency(result: &SteadyStateResult) -> Result<f64> {
    if !(result.q_in > 0.0) {
        return Err(Error::domain(format!("heat input {} must be positive", result.q_in)));
    }
    Ok(result.q_out / result.q_in)
}

/// 100 − flue loss, percent, with the loss referenced to `t_room`.
pub fn combustion_efficiency(result: &SteadyStateResult, t_room: f64) -> Result<f64> {
    if !(result.q_in > 0.0) {
        return Err(Error::domain(format!("heat input {} must be positive", result.q_in)));
    }
    if !(result.t_exhaust > t_room) {
        return Err(Error::domain(format!(
            "exhaust {} K must exceed room temperature {t_room} K",
            result.t_exhaust
        )));
    }
    Ok(100.0 - flue_loss_percent(&result.combustion, result.t_exhaust, result.q_in, t_room))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn spec() -> BoilerSpec {
        BoilerSpec::synthetic("synthetic-500", 500e3, 0.84, 31.0, 20.0).with_h_outer(28.0)
    }

    #[test]
    fn rejects_uncalibrated_and_bad_points() {
        let raw = BoilerSpec::synthetic("s", 100e3, 0.84, 8.0, 5.0);
        let op = raw.rated_operating_point();
        assert!(matches!(simulate(&raw, &op, &FaultCondition::Normal), Err(Error::InvalidSpec(_))));
        let s = spec();
        let bad = OperatingPoint {
            firing_fraction: 1.2,
            ..op
        };
        assert!(simulate(&s, &bad, &FaultCondition::Normal).is_err());
        let bad = OperatingPoint { t_return: 380.0, ..op };
        assert!(simulate(&s, &bad, &FaultCondition::Normal).is_err());
    }

    #[test]
    fn efficiency_examples() {
        let mut r = simulate(&spec(), &spec().rated_operating_point(), &FaultCondition::Normal).unwrap();
        r.q_out = 450e3;
        r.q_in = 500e3;
        assert!((thermal_efficiency(&r).unwrap() - 0.90).abs() < 1e-12);
        r.q_out = 0.0;
        assert_eq!(thermal_efficiency(&r).unwrap(), 0.0);
        r.q_in = 0.0;
        assert!(thermal_efficiency(&r).is_err());
    }

    #[test]
    fn no_flue_loss_at_room_temperature() {
        let mut r = simulate(&spec(), &spec().rated_operating_point(), &FaultCondition::Normal).unwrap();
        r.combustion.m_combustion_water = 0.0;
        let t_room = r.t_exhaust - 1e-12;
        let eff = combustion_efficiency(&r, t_room).unwrap();
        assert!((eff - 100.0).abs() < 1e-6);
        assert!(combustion_efficiency(&r, r.t_exhaust + 1.0).is_err());
    }

    #[test]
    fn vanishing_conductance_passes_water_through() {
        let s = spec().with_h_outer(1e-9);
        let op = s.rated_operating_point();
        let r = simulate(&s, &op, &FaultCondition::Normal).unwrap();
        assert!(r.q_out < 1.0);
        assert!((r.t_supply - op.t_return).abs() < 1e-4);
    }

    #[test]
    fn rated_point_is_sane() {
        let s = spec();
        let op = s.rated_operating_point();
        let r = simulate(&s, &op, &FaultCondition::Normal).unwrap();
        assert!(r.q_out < r.q_in && r.eta_thermal > 0.0 && r.eta_thermal < 1.0);
        assert!(r.t_supply > op.t_return);
        assert!(r.t_exhaust > r.t_supply);
        assert!((r.eff_combustion - (100.0 - r.flue_loss)).abs() < 1e-12);
        assert!(r.energy_balance().closure_error() < 1e-9);
    }

    #[test]
    fn spec_json_round_trip_and_baseline_check() {
        let s = spec();
        let back = BoilerSpec::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
        let mut broken = s.clone();
        broken.baseline_z = 0.3;
        assert!(matches!(BoilerSpec::from_json(&broken.to_json().unwrap()), Err(Error::InvalidSpec(_))));
        let mut broken = s;
        broken.rated_output = broken.rated_input * 1.1;
        assert!(broken.validate().is_err());
    }

    fn any_op() -> impl Strategy<Value = OperatingPoint> {
        (0.3f64..=1.0, 0.5f64..1.5, 313.0f64..345.0, 250.0f64..300.0).prop_map(|(f, w, tr, to)| {
            OperatingPoint {
                firing_fraction: f,
                water_flow: w * spec().nominal_water_flow,
                t_return: tr,
                t_outdoor: to,
                rh: 0.65,
            }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn faults_degrade_monotonically(op in any_op(), m in 0.0f64..0.4, dm in 0.01f64..0.2) {
            let s = spec();
            let normal = simulate(&s, &op, &FaultCondition::Normal).unwrap();
            prop_assert!(normal.q_out < normal.q_in);
            prop_assert!(normal.energy_balance().closure_error() < 1e-6);
            for kind in [crate::fault::FaultKind::Fouling, crate::fault::FaultKind::Scaling] {
                let a = simulate(&s, &op, &kind.with_magnitude(m)).unwrap();
                let b = simulate(&s, &op, &kind.with_magnitude(m + dm)).unwrap();
                prop_assert!(b.q_out < a.q_out);
                prop_assert!(b.t_supply < a.t_supply);
                prop_assert!(b.t_exhaust > a.t_exhaust);
            }
            let a = simulate(&s, &op, &FaultCondition::ExcessAir(m)).unwrap();
            let b = simulate(&s, &op, &FaultCondition::ExcessAir(m + dm)).unwrap();
            prop_assert!(b.combustion.t_flame < a.combustion.t_flame);
            prop_assert!(b.eff_combustion < a.eff_combustion);
        }

        #[test]
        fn simulation_is_deterministic(op in any_op()) {
            let s = spec();
            let a = simulate(&s, &op, &FaultCondition::Fouling(0.11)).unwrap();
            let b = simulate(&s, &op, &FaultCondition::Fouling(0.11)).unwrap();
            prop_assert_eq!(a.t_supply.to_bits(), b.t_supply.to_bits());
            prop_assert_eq!(a.t_exhaust.to_bits(), b.t_exhaust.to_bits());
        }
    }
}
