use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hx::FoulingState;

/// A single active fault, or none.
///
/// Excess-air magnitudes are added to the boiler's baseline excess air;
/// fouling (gas side) and scaling (water side) magnitudes are deposit
/// resistances in m²·K/W.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", content = "magnitude", rename_all = "snake_case")]
pub enum FaultCondition {
    #[default]
    Normal,
    ExcessAir(f64),
    Fouling(f64),
    Scaling(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    Normal,
    ExcessAir,
    Fouling,
    Scaling,
}

impl FaultKind {
    pub const FAULTS: [FaultKind; 3] = [FaultKind::ExcessAir, FaultKind::Fouling, FaultKind::Scaling];

    /// Label prefix in the detailed scheme.
    pub fn tag(self) -> &'static str {
        match self {
            FaultKind::Normal => "Normal",
            FaultKind::ExcessAir => "ExcessAir",
            FaultKind::Fouling => "Fouling",
            FaultKind::Scaling => "Scaling",
        }
    }

    /// Label in the fault-kind-only scheme.
    pub fn category(self) -> &'static str {
        match self {
            FaultKind::Normal => "Normal",
            FaultKind::ExcessAir => "Excess Air",
            FaultKind::Fouling => "Fouling",
            FaultKind::Scaling => "Scaling",
        }
    }

    pub fn with_magnitude(self, m: f64) -> FaultCondition {
        match self {
            FaultKind::Normal => FaultCondition::Normal,
            FaultKind::ExcessAir => FaultCondition::ExcessAir(m),
            FaultKind::Fouling => FaultCondition::Fouling(m),
            FaultKind::Scaling => FaultCondition::Scaling(m),
        }
    }
}

impl FaultCondition {
    pub fn kind(&self) -> FaultKind {
        match self {
            FaultCondition::Normal => FaultKind::Normal,
            FaultCondition::ExcessAir(_) => FaultKind::ExcessAir,
            FaultCondition::Fouling(_) => FaultKind::Fouling,
            FaultCondition::Scaling(_) => FaultKind::Scaling,
        }
    }

    pub fn magnitude(&self) -> Option<f64> {
        match *self {
            FaultCondition::Normal => None,
            FaultCondition::ExcessAir(m) | FaultCondition::Fouling(m) | FaultCondition::Scaling(m) => {
                Some(m)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.magnitude() {
            Some(m) if !(m >= 0.0 && m.is_finite()) => Err(Error::domain(format!(
                "fault magnitude {m} must be finite and non-negative"
            ))),
            _ => Ok(()),
        }
    }

    /// Excess air added on top of the baseline.
    pub fn extra_excess_air(&self) -> f64 {
        match *self {
            FaultCondition::ExcessAir(z) => z,
            _ => 0.0,
        }
    }

    pub fn fouling_state(&self) -> FoulingState {
        match *self {
            FaultCondition::Fouling(f) => FoulingState {
                r_f_inner: 0.0,
                r_f_outer: f,
            },
            FaultCondition::Scaling(s) => FoulingState {
                r_f_inner: s,
                r_f_outer: 0.0,
            },
            _ => FoulingState::CLEAN,
        }
    }

    /// Detailed label, e.g. `Fouling-0.26`.
    pub fn label(&self) -> String {
        match self.magnitude() {
            None => self.kind().tag().to_string(),
            Some(m) => format!("{}-{m:.2}", self.kind().tag()),
        }
    }

    pub fn from_label(label: &str) -> Result<Self> {
        if label == "Normal" {
            return Ok(FaultCondition::Normal);
        }
        let (tag, mag) = label
            .split_once('-')
            .ok_or_else(|| Error::data(format!("unknown label `{label}`")))?;
        let kind = FaultKind::FAULTS
            .into_iter()
            .find(|k| k.tag() == tag)
            .ok_or_else(|| Error::data(format!("unknown label `{label}`")))?;
        let m: f64 = mag
            .parse()
            .map_err(|_| Error::data(format!("bad magnitude in label `{label}`")))?;
        Ok(kind.with_magnitude(m))
    }
}

impl fmt::Display for FaultCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses `normal`, `excess_air:0.06`, `fouling:0.26`, `scaling:0.1`.
impl FromStr for FaultCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, mag) = match s.split_once(':') {
            Some((k, m)) => (k, Some(m)),
            None => (s, None),
        };
        let kind = match kind.to_ascii_lowercase().replace('-', "_").as_str() {
            "normal" | "none" => FaultKind::Normal,
            "excess_air" | "excessair" | "x" => FaultKind::ExcessAir,
            "fouling" | "f" => FaultKind::Fouling,
            "scaling" | "s" => FaultKind::Scaling,
            other => return Err(Error::config(format!("unknown fault kind `{other}`"))),
        };
        let fault = match (kind, mag) {
            (FaultKind::Normal, None) => FaultCondition::Normal,
            (FaultKind::Normal, Some(_)) => {
                return Err(Error::config("normal operation takes no magnitude"))
            }
            (_, None) => return Err(Error::config(format!("fault `{s}` needs a magnitude"))),
            (k, Some(m)) => k.with_magnitude(
                m.parse()
                    .map_err(|_| Error::config(format!("bad fault magnitude `{m}`")))?,
            ),
        };
        fault.validate()?;
        Ok(fault)
    }
}
