//! Combustion stoichiometry, flue-gas composition, moist-air properties and
//! adiabatic flame temperature for a CxHy fuel burned with excess air.
//!
//! Reaction per mole of fuel with excess-air fraction `z` and `a = x + y/4`:
//!
//! ```text
//! CxHy + (1+z)·a·(O2 + 3.76 N2) -> x CO2 + y/2 H2O + z·a O2 + 3.76·(1+z)·a N2
//! ```
//!
//! Dry products are lumped into one stream with the dry-air specific heat,
//! vapor (combustion water plus ambient moisture) carries the vapor specific
//! heat. Specific heats are constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MOLAR_MASS_C: f64 = 12.011;
pub const MOLAR_MASS_H: f64 = 1.008;
pub const MOLAR_MASS_O: f64 = 15.999;
pub const MOLAR_MASS_N: f64 = 14.007;

/// Moles of N2 carried per mole of O2 in air.
pub const N2_PER_O2: f64 = 3.76;

const M_O2: f64 = 2.0 * MOLAR_MASS_O;
const M_N2: f64 = 2.0 * MOLAR_MASS_N;
const M_CO2: f64 = MOLAR_MASS_C + 2.0 * MOLAR_MASS_O;
const M_H2O: f64 = 2.0 * MOLAR_MASS_H + MOLAR_MASS_O;

/// Ratio of water to dry-air molar masses used in the humidity ratio.
const WATER_AIR_MASS_RATIO: f64 = 0.622;

/// Hydrocarbon fuel description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelSpec {
    pub carbon_atoms: u32,
    pub hydrogen_atoms: u32,
    /// Lower heating value, J/kg.
    pub lhv: f64,
    /// Higher heating value, J/kg.
    pub hhv: f64,
    /// J/kg/K
    pub cp_fuel: f64,
    /// K
    pub t_fuel: f64,
}

impl FuelSpec {
    /// Natural gas modelled as pure methane.
    pub fn methane() -> Self {
        Self {
            carbon_atoms: 1,
            hydrogen_atoms: 4,
            lhv: 50.0e6,
            hhv: 55.5e6,
            cp_fuel: 2191.0,
            t_fuel: 303.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.carbon_atoms < 1 || self.hydrogen_atoms < 1 {
            return Err(Error::invalid_spec("fuel needs at least one C and one H atom"));
        }
        if !(self.lhv > 0.0 && self.hhv > self.lhv && self.hhv.is_finite()) {
            return Err(Error::invalid_spec(format!(
                "heating values must satisfy hhv > lhv > 0 (lhv {}, hhv {})",
                self.lhv, self.hhv
            )));
        }
        if !(self.cp_fuel > 0.0 && self.t_fuel > 0.0) {
            return Err(Error::invalid_spec("fuel cp and temperature must be positive"));
        }
        Ok(())
    }

    fn x(&self) -> f64 {
        f64::from(self.carbon_atoms)
    }

    fn y(&self) -> f64 {
        f64::from(self.hydrogen_atoms)
    }

    /// Stoichiometric O2 demand per mole of fuel, `x + y/4`.
    pub fn oxygen_demand(&self) -> f64 {
        self.x() + self.y() / 4.0
    }

    /// kg/kmol
    pub fn molar_mass(&self) -> f64 {
        self.x() * MOLAR_MASS_C + self.y() * MOLAR_MASS_H
    }
}

impl Default for FuelSpec {
    fn default() -> Self {
        Self::methane()
    }
}

/// Combustion-air properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AirSpec {
    /// J/kg/K
    pub cp_dry: f64,
    /// J/kg/K
    pub cp_vapor: f64,
    /// K
    pub t_outdoor: f64,
    pub relative_humidity: f64,
    /// Pa
    pub pressure: f64,
}

impl Default for AirSpec {
    fn default() -> Self {
        Self {
            cp_dry: 1005.0,
            cp_vapor: 2900.0,
            t_outdoor: 294.0,
            relative_humidity: 0.65,
            pressure: 101_325.0,
        }
    }
}

impl AirSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.relative_humidity) {
            return Err(Error::invalid_spec(format!(
                "relative humidity {} outside [0, 1]",
                self.relative_humidity
            )));
        }
        if !(self.pressure > 0.0 && self.cp_dry > 0.0 && self.cp_vapor > 0.0) {
            return Err(Error::invalid_spec("air pressure and specific heats must be positive"));
        }
        Ok(())
    }

    pub fn at(self, t_outdoor: f64, relative_humidity: f64) -> Self {
        Self {
            t_outdoor,
            relative_humidity,
            ..self
        }
    }
}

/// Product mole counts per mole of fuel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductMoles {
    pub co2: f64,
    pub h2o: f64,
    pub o2: f64,
    pub n2: f64,
}

impl ProductMoles {
    pub fn total(&self, basis: Basis) -> f64 {
        let dry = self.co2 + self.o2 + self.n2;
        match basis {
            Basis::Dry => dry,
            Basis::Wet => dry + self.h2o,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Co2,
    O2,
}

/// Whether flue-gas fractions include the water vapor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    #[default]
    Dry,
    Wet,
}

/// Converged combustion-chamber outputs for one firing rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombustionState {
    pub excess_air: f64,
    /// kg/s
    pub m_fuel: f64,
    /// Dry combustion air, kg/s.
    pub m_air: f64,
    /// Moisture carried in by the combustion air, kg/s.
    pub m_air_moisture: f64,
    /// CO2 + O2 + N2, kg/s.
    pub m_dry_products: f64,
    /// All vapor in the products (combustion water plus air moisture), kg/s.
    pub m_vapor: f64,
    /// Water formed by the reaction, kg/s.
    pub m_combustion_water: f64,
    /// Heat-capacity-weighted reactant temperature; enthalpy reference, K.
    pub t_reactants: f64,
    /// K
    pub t_flame: f64,
    /// Product-stream heat-capacity rate, W/K.
    pub c_gas: f64,
    /// m_fuel · lhv, W.
    pub q_release: f64,
    pub product_moles: ProductMoles,
}

fn check_excess_air(z: f64) -> Result<()> {
    if !(z >= 0.0 && z.is_finite()) {
        return Err(Error::domain(format!(
            "excess air {z} < 0: sub-stoichiometric combustion is not modelled"
        )));
    }
    Ok(())
}

/// Fuel mass flow for a heat-input rate on the higher-heating-value basis.
pub fn fuel_mass_flow(q_in: f64, fuel: &FuelSpec) -> Result<f64> {
    if !(fuel.hhv > 0.0) {
        return Err(Error::invalid_spec(format!("non-positive hhv {}", fuel.hhv)));
    }
    if !(q_in >= 0.0) {
        return Err(Error::domain(format!("negative heat input {q_in}")));
    }
    Ok(q_in / fuel.hhv)
}

pub fn product_moles(fuel: &FuelSpec, z: f64) -> Result<ProductMoles> {
    check_excess_air(z)?;
    let a = fuel.oxygen_demand();
    Ok(ProductMoles {
        co2: fuel.x(),
        h2o: fuel.y() / 2.0,
        o2: z * a,
        n2: N2_PER_O2 * (1.0 + z) * a,
    })
}

/// Mole fraction of CO2 or O2 in the flue gas.
pub fn flue_fraction(fuel: &FuelSpec, z: f64, species: Species, basis: Basis) -> Result<f64> {
    let moles = product_moles(fuel, z)?;
    let num = match species {
        Species::Co2 => moles.co2,
        Species::O2 => moles.o2,
    };
    Ok(num / moles.total(basis))
}

/// Inverts the CO2 fraction for the excess air. The product total is linear
/// in `z`, so the inverse is closed form.
pub fn excess_air_from_co2(fuel: &FuelSpec, target_co2: f64, basis: Basis) -> Result<f64> {
    if !(target_co2 > 0.0) {
        return Err(Error::domain(format!("CO2 target {target_co2} must be positive")));
    }
    let max = flue_fraction(fuel, 0.0, Species::Co2, basis)?;
    if target_co2 > max {
        return Err(Error::UnreachableTarget {
            target: target_co2,
            max,
        });
    }
    let stoich = product_moles(fuel, 0.0)?.total(basis);
    let slope = (1.0 + N2_PER_O2) * fuel.oxygen_demand();
    Ok(((fuel.x() / target_co2 - stoich) / slope).max(0.0))
}

/// Saturation pressure over liquid water, Pa, from the Magnus form with the
/// Alduchov–Eskridge coefficients (610.94 Pa, 17.625, 243.04 °C).
pub fn saturation_pressure(t: f64) -> f64 {
    let tc = t - 273.15;
    610.94 * (17.625 * tc / (tc + 243.04)).exp()
}

/// Humidity ratio, kg vapor per kg dry air.
pub fn humidity_ratio(t_db: f64, rh: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rh) {
        return Err(Error::domain(format!("relative humidity {rh} outside [0, 1]")));
    }
    if !(t_db > 200.0 && t_db < 350.0) {
        return Err(Error::domain(format!("dry-bulb temperature {t_db} K outside (200, 350)")));
    }
    let p_w = rh * saturation_pressure(t_db);
    if p_w >= p {
        return Err(Error::Saturation {
            partial: p_w,
            total: p,
        });
    }
    Ok(WATER_AIR_MASS_RATIO * p_w / (p - p_w))
}

/// Mass yields per kilogram of fuel.
#[derive(Debug, Clone, Copy)]
struct Yields {
    air: f64,
    moisture: f64,
    dry_products: f64,
    combustion_water: f64,
    moles: ProductMoles,
}

fn yields(fuel: &FuelSpec, air: &AirSpec, z: f64) -> Result<Yields> {
    let moles = product_moles(fuel, z)?;
    let per_mol = 1.0 / fuel.molar_mass();
    let o2_supplied = (1.0 + z) * fuel.oxygen_demand();
    let air_mass = per_mol * (o2_supplied * M_O2 + moles.n2 * M_N2);
    let w = humidity_ratio(air.t_outdoor, air.relative_humidity, air.pressure)?;
    Ok(Yields {
        air: air_mass,
        moisture: w * air_mass,
        dry_products: per_mol * (moles.co2 * M_CO2 + moles.o2 * M_O2 + moles.n2 * M_N2),
        combustion_water: per_mol * moles.h2o * M_H2O,
        moles,
    })
}

impl Yields {
    fn vapor(&self) -> f64 {
        self.combustion_water + self.moisture
    }

    /// Heat-capacity-weighted temperature of fuel, dry air and moisture.
    fn reactant_temperature(&self, fuel: &FuelSpec, air: &AirSpec) -> f64 {
        let c_fuel = fuel.cp_fuel;
        let c_air = self.air * air.cp_dry + self.moisture * air.cp_vapor;
        (c_fuel * fuel.t_fuel + c_air * air.t_outdoor) / (c_fuel + c_air)
    }

    fn product_capacity(&self, air: &AirSpec, include_vapor: bool) -> f64 {
        let dry = self.dry_products * air.cp_dry;
        if include_vapor {
            dry + self.vapor() * air.cp_vapor
        } else {
            dry
        }
    }
}

/// Adiabatic flame temperature. Enthalpies are referenced to the reactant
/// mixing temperature, so the heat release `lhv` is the only source and the
/// products rise above that temperature by `lhv / c_products` per unit fuel.
/// With `include_vapor = false` the vapor mass and its heat capacity are left
/// out of the product stream.
pub fn adiabatic_flame_temperature(
    fuel: &FuelSpec,
    air: &AirSpec,
    z: f64,
    include_vapor: bool,
) -> Result<f64> {
    let y = yields(fuel, air, z)?;
    let t_mix = y.reactant_temperature(fuel, air);
    Ok(t_mix + fuel.lhv / y.product_capacity(air, include_vapor))
}

pub fn combustion_outputs(
    fuel: &FuelSpec,
    air: &AirSpec,
    q_in: f64,
    z: f64,
) -> Result<CombustionState> {
    if !(q_in > 0.0 && q_in.is_finite()) {
        return Err(Error::domain(format!("heat input {q_in} must be positive")));
    }
    let m_fuel = fuel_mass_flow(q_in, fuel)?;
    let y = yields(fuel, air, z)?;
    let t_reactants = y.reactant_temperature(fuel, air);
    let c_per_fuel = y.product_capacity(air, true);
    Ok(CombustionState {
        excess_air: z,
        m_fuel,
        m_air: m_fuel * y.air,
        m_air_moisture: m_fuel * y.moisture,
        m_dry_products: m_fuel * y.dry_products,
        m_vapor: m_fuel * y.vapor(),
        m_combustion_water: m_fuel * y.combustion_water,
        t_reactants,
        t_flame: t_reactants + fuel.lhv / c_per_fuel,
        c_gas: m_fuel * c_per_fuel,
        q_release: m_fuel * fuel.lhv,
        product_moles: y.moles,
    })
}
