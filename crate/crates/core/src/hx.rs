//! Gas/water shell-and-tube heat exchanger: overall conductance with fouling
//! resistances and the effectiveness-NTU outlet solution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this distance from 1 the capacity ratio is treated as balanced.
const BALANCED_FLOW_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HxGeometry {
    /// Water (tube) side area, m².
    pub area_inner: f64,
    /// Gas (shell) side area, m².
    pub area_outer: f64,
    /// W/m²/K
    pub h_inner: f64,
    /// W/m²/K
    pub h_outer: f64,
    /// Tube-wall conduction resistance, K/W.
    pub wall_resistance: f64,
    pub shell_passes: u32,
}

impl HxGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.area_inner, self.area_outer, self.h_inner, self.h_outer];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid_spec(format!(
                "areas and film coefficients must be positive: {self:?}"
            )));
        }
        if !(self.wall_resistance >= 0.0) {
            return Err(Error::invalid_spec("wall resistance must be non-negative"));
        }
        if self.shell_passes < 1 {
            return Err(Error::invalid_spec("at least one shell pass is required"));
        }
        Ok(())
    }
}

/// Deposit resistances, m²·K/W.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FoulingState {
    /// Water-side scaling.
    pub r_f_inner: f64,
    /// Gas-side fouling.
    pub r_f_outer: f64,
}

impl FoulingState {
    pub const CLEAN: Self = Self {
        r_f_inner: 0.0,
        r_f_outer: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HxSolution {
    pub ua: f64,
    pub ntu: f64,
    pub c_ratio: f64,
    pub effectiveness: f64,
    /// W
    pub q: f64,
    pub t_hot_out: f64,
    pub t_cold_out: f64,
}

/// Series sum of film, deposit and wall resistances, inverted.
pub fn overall_ua(geom: &HxGeometry, fouling: &FoulingState) -> Result<f64> {
    geom.validate()?;
    if !(fouling.r_f_inner >= 0.0 && fouling.r_f_outer >= 0.0) {
        return Err(Error::domain(format!("negative fouling resistance {fouling:?}")));
    }
    let resistance = 1.0 / (geom.h_inner * geom.area_inner)
        + fouling.r_f_inner / geom.area_inner
        + geom.wall_resistance
        + fouling.r_f_outer / geom.area_outer
        + 1.0 / (geom.h_outer * geom.area_outer);
    Ok(1.0 / resistance)
}

/// One shell pass, even number of tube passes (TEMA E).
fn single_shell(ntu: f64, c_ratio: f64) -> f64 {
    if ntu <= 0.0 {
        return 0.0;
    }
    let root = (1.0 + c_ratio * c_ratio).sqrt();
    let e = (-ntu * root).exp();
    2.0 / (1.0 + c_ratio + root * (1.0 + e) / (1.0 - e))
}

/// Effectiveness of `n_passes` identical TEMA-E shells in counterflow series,
/// each carrying `ntu / n_passes`.
pub fn effectiveness_shell_tube(ntu: f64, c_ratio: f64, n_passes: u32) -> Result<f64> {
    if !(ntu >= 0.0) {
        return Err(Error::domain(format!("NTU {ntu} must be non-negative")));
    }
    if !(0.0..=1.0).contains(&c_ratio) {
        return Err(Error::domain(format!("capacity ratio {c_ratio} outside [0, 1]")));
    }
    if n_passes < 1 {
        return Err(Error::domain("at least one shell pass is required"));
    }
    if ntu == 0.0 {
        return Ok(0.0);
    }
    if ntu.is_infinite() {
        return Ok(1.0);
    }
    let n = f64::from(n_passes);
    let eps1 = single_shell(ntu / n, c_ratio);
    if n_passes == 1 {
        return Ok(eps1);
    }
    let eps = if (1.0 - c_ratio).abs() < BALANCED_FLOW_THRESHOLD {
        n * eps1 / (1.0 + (n - 1.0) * eps1)
    } else {
        // ((1-ε₁C)/(1-ε₁))ⁿ written through its reciprocal so that ε₁ → 1
        // stays finite.
        let r = ((1.0 - eps1) / (1.0 - eps1 * c_ratio)).powi(n_passes as i32);
        (1.0 - r) / (1.0 - c_ratio * r)
    };
    Ok(eps.clamp(0.0, 1.0))
}

pub fn solve_outlets(
    t_hot_in: f64,
    c_hot: f64,
    t_cold_in: f64,
    c_cold: f64,
    ua: f64,
    n_passes: u32,
) -> Result<HxSolution> {
    if !(t_hot_in > t_cold_in) {
        return Err(Error::domain(format!(
            "hot inlet {t_hot_in} K must exceed cold inlet {t_cold_in} K"
        )));
    }
    if !(c_hot > 0.0 && c_cold > 0.0) {
        return Err(Error::domain("capacity rates must be positive"));
    }
    if !(ua >= 0.0) {
        return Err(Error::domain(format!("negative UA {ua}")));
    }
    let c_min = c_hot.min(c_cold);
    let c_ratio = c_min / c_hot.max(c_cold);
    let ntu = ua / c_min;
    let effectiveness = effectiveness_shell_tube(ntu, c_ratio, n_passes)?;
    let q = effectiveness * c_min * (t_hot_in - t_cold_in);
    Ok(HxSolution {
        ua,
        ntu,
        c_ratio,
        effectiveness,
        q,
        t_hot_out: t_hot_in - q / c_hot,
        t_cold_out: t_cold_in + q / c_cold,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn geometry(hi_ai: f64, ho_ao: f64, area_outer: f64) -> HxGeometry {
        HxGeometry {
            area_inner: 1.0,
            area_outer,
            h_inner: hi_ai,
            h_outer: ho_ao / area_outer,
            wall_resistance: 0.0,
            shell_passes: 2,
        }
    }

    #[test]
    fn ua_examples() {
        let g = geometry(1000.0, 100.0, 10.0);
        let clean = overall_ua(&g, &FoulingState::CLEAN).unwrap();
        assert_relative_eq!(clean, 1.0 / (0.001 + 0.01), max_relative = 1e-12);
        assert!((clean - 90.909).abs() < 1e-3);
        let fouled = overall_ua(
            &g,
            &FoulingState {
                r_f_inner: 0.0,
                r_f_outer: 0.46,
            },
        )
        .unwrap();
        assert!((fouled - 17.54).abs() < 5e-3, "{fouled}");
        assert!(fouled < clean);
    }

    #[test]
    fn effectiveness_examples() {
        assert_eq!(effectiveness_shell_tube(0.0, 0.5, 2).unwrap(), 0.0);
        let e = effectiveness_shell_tube(1.0, 0.0, 2).unwrap();
        assert!((e - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!((e - 0.6321).abs() < 1e-4);
        let e = effectiveness_shell_tube(2.0, 1.0, 2).unwrap();
        assert!((single_shell(1.0, 1.0) - 0.4627).abs() < 1e-4);
        assert!((e - 0.6326).abs() < 1e-4, "{e}");
        assert!(effectiveness_shell_tube(-1.0, 0.5, 2).is_err());
        assert!(effectiveness_shell_tube(1.0, 1.5, 2).is_err());
    }

    #[test]
    fn balanced_limit_is_continuous() {
        let at = effectiveness_shell_tube(3.0, 1.0, 2).unwrap();
        let near = effectiveness_shell_tube(3.0, 1.0 - 1e-6, 2).unwrap();
        assert!((at - near).abs() < 1e-5);
    }

    #[test]
    fn solve_examples() {
        let s = solve_outlets(2000.0, 10.0, 333.0, 1000.0, 0.0, 2).unwrap();
        assert_eq!(s.q, 0.0);
        assert_eq!((s.t_hot_out, s.t_cold_out), (2000.0, 333.0));

        // Find the UA that gives ε = 0.5 and check the hand-computed outlets.
        let c_ratio = 0.01;
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if effectiveness_shell_tube(mid, c_ratio, 2).unwrap() < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = solve_outlets(2000.0, 10.0, 333.0, 1000.0, lo * 10.0, 2).unwrap();
        assert!((s.q - 8335.0).abs() < 1e-6);
        assert!((s.t_hot_out - 1166.5).abs() < 1e-6);
        assert!((s.t_cold_out - 341.335).abs() < 1e-6);

        assert!(matches!(
            solve_outlets(300.0, 1.0, 300.0, 1.0, 1.0, 2),
            Err(Error::Domain(_))
        ));
    }

    proptest! {
        #[test]
        fn energy_is_conserved(t_hot in 400.0f64..2500.0, dt in 1.0f64..300.0, c_hot in 1.0f64..5e4,
                               c_cold in 1.0f64..5e4, ua in 0.0f64..1e5, n in 1u32..4) {
            let s = solve_outlets(t_hot, c_hot, t_hot - dt, c_cold, ua, n).unwrap();
            let released = c_hot * (t_hot - s.t_hot_out);
            let absorbed = c_cold * (s.t_cold_out - (t_hot - dt));
            prop_assert!((released - absorbed).abs() <= 1e-9 * released.abs().max(1e-12));
            // A temperature cross is allowed, but neither stream passes the other's inlet.
            prop_assert!(s.t_hot_out >= t_hot - dt - 1e-9 && s.t_cold_out <= t_hot + 1e-9);
            prop_assert!((0.0..=1.0).contains(&s.effectiveness));
        }

        #[test]
        fn effectiveness_monotone(ntu in 0.0f64..20.0, d in 1e-3f64..5.0, c in 0.0f64..1.0, dc in 1e-3f64..0.5) {
            let e = effectiveness_shell_tube(ntu, c, 2).unwrap();
            prop_assert!(effectiveness_shell_tube(ntu + d, c, 2).unwrap() >= e - 1e-12);
            let c2 = (c + dc).min(1.0);
            prop_assert!(effectiveness_shell_tube(ntu, c2, 2).unwrap() <= e + 1e-12);
        }

        #[test]
        fn ua_bounded_and_decreasing(hi in 10.0f64..5e3, ho in 5.0f64..500.0, ai in 1.0f64..100.0,
                                     ao in 1.0f64..100.0, r in 1e-4f64..0.5) {
            let g = HxGeometry { area_inner: ai, area_outer: ao, h_inner: hi, h_outer: ho,
                                 wall_resistance: 0.0, shell_passes: 2 };
            let clean = overall_ua(&g, &FoulingState::CLEAN).unwrap();
            prop_assert!(clean <= (hi * ai).min(ho * ao));
            let outer = overall_ua(&g, &FoulingState { r_f_inner: 0.0, r_f_outer: r }).unwrap();
            let inner = overall_ua(&g, &FoulingState { r_f_inner: r, r_f_outer: 0.0 }).unwrap();
            prop_assert!(outer < clean && inner < clean);
            let more = overall_ua(&g, &FoulingState { r_f_inner: 0.0, r_f_outer: 2.0 * r }).unwrap();
            prop_assert!(more < outer);
        }
    }

    #[test]
    fn saturates_for_single_stream_limit() {
        let e = effectiveness_shell_tube(60.0, 0.0, 2).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
    }
}
