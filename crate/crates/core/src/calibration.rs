//! Gas-side heat-transfer coefficient fit against a rated datapoint.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::emulator::{
    simulate, BoilerSpec, OperatingPoint, CP_WATER, DEFAULT_RELATIVE_HUMIDITY, RATED_AIR_TEMPERATURE,
};
use crate::error::{Error, Result};
use crate::fault::FaultCondition;

pub const H_OUTER_MIN: f64 = 1.0;
pub const H_OUTER_MAX: f64 = 1e6;
pub const DEFAULT_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 200;

/// Allowed mismatch between `q_out` and `water_flow · cp · delta_t`.
const CONSISTENCY_TOLERANCE: f64 = 0.05;
/// Samples used to confirm that output rises with the coefficient.
const MONOTONICITY_SAMPLES: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatedPoint {
    /// W
    pub q_in: f64,
    /// W
    pub q_out: f64,
    /// kg/s
    pub water_flow: f64,
    /// K
    pub t_return: f64,
    /// K
    pub delta_t: f64,
    #[serde(default)]
    pub t_exhaust: Option<f64>,
    /// Percent.
    #[serde(default)]
    pub eff_combustion: Option<f64>,
    #[serde(default)]
    pub eta_thermal: Option<f64>,
}

impl RatedPoint {
    /// Datasheet rating: full firing at nominal flow and return temperature.
    pub fn from_spec(spec: &BoilerSpec) -> Self {
        Self {
            q_in: spec.rated_input,
            q_out: spec.rated_output,
            water_flow: spec.nominal_water_flow,
            t_return: spec.nominal_return_temp,
            delta_t: spec.rated_output / (spec.nominal_water_flow * CP_WATER),
            t_exhaust: None,
            eff_combustion: None,
            eta_thermal: Some(spec.rated_output / spec.rated_input),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.q_in > 0.0 && self.water_flow > 0.0 && self.delta_t > 0.0 && self.q_out > 0.0) {
            return Err(Error::domain(format!("rated point has non-positive entries: {self:?}")));
        }
        if self.q_out >= self.q_in {
            return Err(Error::CalibrationInfeasible(format!(
                "rated output {} W is not below heat input {} W",
                self.q_out, self.q_in
            )));
        }
        let implied = self.water_flow * CP_WATER * self.delta_t;
        if ((implied - self.q_out) / self.q_out).abs() > CONSISTENCY_TOLERANCE {
            return Err(Error::domain(format!(
                "rated output {} W disagrees with flow x cp x delta_t = {implied} W",
                self.q_out
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// W/m²/K
    pub h_outer_fitted: f64,
    pub iterations: usize,
    /// Relative errors keyed by output name; `q_out` is the fitted target.
    pub residuals: BTreeMap<String, f64>,
    pub converged: bool,
}

fn rated_operating_point(spec: &BoilerSpec, rated: &RatedPoint) -> OperatingPoint {
    OperatingPoint {
        firing_fraction: rated.q_in / spec.rated_input,
        water_flow: rated.water_flow,
        t_return: rated.t_return,
        t_outdoor: RATED_AIR_TEMPERATURE,
        rh: DEFAULT_RELATIVE_HUMIDITY,
    }
}

fn output_at(spec: &BoilerSpec, op: &OperatingPoint, h_outer: f64) -> Result<f64> {
    Ok(simulate(&spec.with_h_outer(h_outer), op, &FaultCondition::Normal)?.q_out)
}

fn residuals(spec: &BoilerSpec, rated: &RatedPoint, h_outer: f64) -> Result<BTreeMap<String, f64>> {
    let op = rated_operating_point(spec, rated);
    let r = simulate(&spec.with_h_outer(h_outer), &op, &FaultCondition::Normal)?;
    let rel = |got: f64, want: f64| (got - want) / want;
    let mut out = BTreeMap::new();
    out.insert("q_out".to_string(), rel(r.q_out, rated.q_out));
    out.insert("delta_t".to_string(), rel(r.t_supply - op.t_return, rated.delta_t));
    if let Some(t) = rated.t_exhaust {
        out.insert("t_exhaust".to_string(), rel(r.t_exhaust, t));
    }
    if let Some(e) = rated.eff_combustion {
        out.insert("eff_combustion".to_string(), rel(r.eff_combustion, e));
    }
    if let Some(e) = rated.eta_thermal {
        out.insert("eta_thermal".to_string(), rel(r.eta_thermal, e));
    }
    Ok(out)
}

/// Bisects `ln h_outer` over [1, 1e6] until the simulated output at the rated
/// point is within `tol` (relative) of `rated.q_out`. Returns a copy of the
/// spec with the fitted coefficient and the report embedded.
pub fn calibrate_gas_htc(
    spec: &BoilerSpec,
    rated: &RatedPoint,
    tol: f64,
    max_iter: usize,
) -> Result<(BoilerSpec, CalibrationReport)> {
    if !(tol > 0.0) {
        return Err(Error::config(format!("tolerance {tol} must be positive")));
    }
    rated.validate()?;
    let op = rated_operating_point(spec, rated);
    op.validate()?;
    let target = rated.q_out;
    let miss = |q: f64| (q - target).abs() / target;

    let finish = |h: f64, iterations: usize| -> Result<(BoilerSpec, CalibrationReport)> {
        let report = CalibrationReport {
            h_outer_fitted: h,
            iterations,
            residuals: residuals(spec, rated, h)?,
            converged: true,
        };
        let mut fitted = spec.with_h_outer(h);
        fitted.calibration = Some(report.clone());
        Ok((fitted, report))
    };

    if let Some(h) = spec.h_outer_calibrated {
        if miss(output_at(spec, &op, h)?) <= tol {
            return finish(h, 0);
        }
    }

    let (ln_lo, ln_hi) = (H_OUTER_MIN.ln(), H_OUTER_MAX.ln());
    let mut previous = f64::NEG_INFINITY;
    for i in 0..MONOTONICITY_SAMPLES {
        let h = (ln_lo + (ln_hi - ln_lo) * i as f64 / (MONOTONICITY_SAMPLES - 1) as f64).exp();
        let q = output_at(spec, &op, h)?;
        // Near the water-side limit the output saturates to rounding level.
        if q < previous - 1e-12 * q.abs() {
            return Err(Error::CalibrationInfeasible(format!(
                "output is not increasing in the gas-side coefficient near {h} W/m2/K"
            )));
        }
        previous = q;
    }
    let q_lo = output_at(spec, &op, H_OUTER_MIN)?;
    let q_hi = output_at(spec, &op, H_OUTER_MAX)?;
    if !(q_lo <= target && target <= q_hi) {
        return Err(Error::CalibrationInfeasible(format!(
            "target output {target} W outside [{q_lo}, {q_hi}] W reachable for h in [{H_OUTER_MIN}, {H_OUTER_MAX}]"
        )));
    }

    let (mut lo, mut hi) = (ln_lo, ln_hi);
    let mut best = (f64::INFINITY, H_OUTER_MIN);
    for iteration in 1..=max_iter {
        let mid = 0.5 * (lo + hi);
        let h = mid.exp();
        let q = output_at(spec, &op, h)?;
        let m = miss(q);
        if m < best.0 {
            best = (m, h);
        }
        if m <= tol {
            return finish(h, iteration);
        }
        if q < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        best: best.1,
        residual: best.0,
    })
}

/// Calibrates against the spec's own datasheet rating with default settings.
pub fn calibrate_spec(spec: &BoilerSpec) -> Result<(BoilerSpec, CalibrationReport)> {
    calibrate_gas_htc(spec, &RatedPoint::from_spec(spec), DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointError {
    pub water_flow: f64,
    pub expected_delta_t: f64,
    pub achieved_delta_t: f64,
    /// achieved − expected, K.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub boiler_id: String,
    pub points: Vec<PointError>,
    /// None for an empty point list.
    pub mean_error: Option<f64>,
}

/// Simulates each flow at rated firing and nominal return temperature.
pub fn validate(spec: &BoilerSpec, points: &[(f64, f64)]) -> Result<ValidationReport> {
    spec.h_outer()?;
    let mut out = Vec::with_capacity(points.len());
    for &(water_flow, expected_delta_t) in points {
        let op = OperatingPoint {
            water_flow,
            ..spec.rated_operating_point()
        };
        let r = simulate(spec, &op, &FaultCondition::Normal)?;
        let achieved = r.t_supply - op.t_return;
        out.push(PointError {
            water_flow,
            expected_delta_t,
            achieved_delta_t: achieved,
            error: achieved - expected_delta_t,
        });
    }
    let mean_error =
        (!out.is_empty()).then(|| out.iter().map(|p| p.error).sum::<f64>() / out.len() as f64);
    Ok(ValidationReport {
        boiler_id: spec.id.clone(),
        points: out,
        mean_error,
    })
}

/// Validates against the points stored in the spec file.
pub fn validate_spec(spec: &BoilerSpec) -> Result<ValidationReport> {
    let points: Vec<_> = spec
        .validation_points
        .iter()
        .map(|p| (p.water_flow_kg_s, p.expected_delta_t_k))
        .collect();
    validate(spec, &points)
}
