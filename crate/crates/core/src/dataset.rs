//! Fault grid, operating-point sweep and labeled dataset I/O.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::emulator::{simulate, BoilerSpec, OperatingPoint, DEFAULT_RELATIVE_HUMIDITY};
use crate::error::{Error, Result};
use crate::fault::{FaultCondition, FaultKind};
use crate::par;

/// Canonical feature columns, in CSV order.
pub const FEATURE_NAMES: [&str; 7] = [
    "t_return",
    "t_supply",
    "water_flow",
    "pump_speed",
    "t_outdoor",
    "t_fuel",
    "t_flue",
];
pub const FUEL_FLOW_COLUMN: &str = "fuel_flow";
pub const N_FAULT_LEVELS: usize = 10;

/// 0.01, 0.06, …, 0.46.
pub fn fault_levels() -> Vec<f64> {
    (0..N_FAULT_LEVELS).map(|k| (1 + 5 * k) as f64 / 100.0).collect()
}

/// Normal followed by every level of excess air, fouling and scaling.
pub fn fault_grid() -> Vec<FaultCondition> {
    let levels = fault_levels();
    std::iter::once(FaultCondition::Normal)
        .chain(
            FaultKind::FAULTS
                .into_iter()
                .flat_map(|k| levels.iter().map(move |&m| k.with_magnitude(m))),
        )
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LabelScheme {
    #[default]
    Full31,
    MergedExcessAir22,
    Categorical4,
}

impl LabelScheme {
    pub fn class_count(self) -> usize {
        match self {
            LabelScheme::Full31 => 31,
            LabelScheme::MergedExcessAir22 => 22,
            LabelScheme::Categorical4 => 4,
        }
    }

    /// Class names in the fixed reporting order.
    pub fn classes(self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.class_count());
        for f in fault_grid() {
            let label = self.label_for(&f);
            if !out.contains(&label) {
                out.push(label);
            }
        }
        out
    }

    pub fn label_for(self, fault: &FaultCondition) -> String {
        match (self, fault.kind()) {
            (LabelScheme::Full31, _) => fault.label(),
            (LabelScheme::MergedExcessAir22, FaultKind::ExcessAir) => FaultKind::ExcessAir.category().into(),
            (LabelScheme::MergedExcessAir22, _) => fault.label(),
            (LabelScheme::Categorical4, kind) => kind.category().into(),
        }
    }

    /// Maps a detailed label into this scheme.
    pub fn map_label(self, full_label: &str) -> Result<String> {
        let fault = FaultCondition::from_label(full_label)?;
        if fault.label() != full_label {
            return Err(Error::data(format!("label `{full_label}` is not in the detailed scheme")));
        }
        Ok(self.label_for(&fault))
    }
}

impl fmt::Display for LabelScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.class_count())
    }
}

impl From<LabelScheme> for String {
    fn from(s: LabelScheme) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for LabelScheme {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for LabelScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "31" | "full" | "full31" => Ok(LabelScheme::Full31),
            "22" | "merged" | "merged22" => Ok(LabelScheme::MergedExcessAir22),
            "4" | "categorical" | "categorical4" => Ok(LabelScheme::Categorical4),
            other => Err(Error::config(format!("unknown label scheme `{other}` (use 31, 22 or 4)"))),
        }
    }
}

/// Per-axis levels of the operating sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub firing: Vec<f64>,
    /// Multiples of the nominal water flow.
    pub flow_fraction: Vec<f64>,
    /// K
    pub t_outdoor: Vec<f64>,
    /// K
    pub t_return: Vec<f64>,
    pub rh: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            firing: vec![0.5, 0.65, 0.8, 1.0],
            flow_fraction: vec![0.6, 0.8, 1.0, 1.2, 1.4],
            t_outdoor: vec![253.0, 263.0, 273.0, 283.0, 293.0],
            t_return: vec![313.0, 323.0, 333.0, 343.0],
            rh: DEFAULT_RELATIVE_HUMIDITY,
        }
    }
}

impl GridConfig {
    pub fn len(&self) -> usize {
        self.firing.len() * self.flow_fraction.len() * self.t_outdoor.len() * self.t_return.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Cartesian product of the configured levels, firing outermost.
pub fn operating_grid(config: &GridConfig, nominal_water_flow: f64) -> Result<Vec<OperatingPoint>> {
    for (name, axis) in [
        ("firing", &config.firing),
        ("flow_fraction", &config.flow_fraction),
        ("t_outdoor", &config.t_outdoor),
        ("t_return", &config.t_return),
    ] {
        if axis.is_empty() {
            return Err(Error::config(format!("operating grid axis `{name}` is empty")));
        }
    }
    let mut out = Vec::with_capacity(config.len());
    for &firing_fraction in &config.firing {
        for &frac in &config.flow_fraction {
            for &t_outdoor in &config.t_outdoor {
                for &t_return in &config.t_return {
                    let op = OperatingPoint {
                        firing_fraction,
                        water_flow: frac * nominal_water_flow,
                        t_return,
                        t_outdoor,
                        rh: config.rh,
                    };
                    op.validate()
                        .map_err(|e| Error::config(format!("invalid operating point {op:?}: {e}")))?;
                    out.push(op);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub boiler_id: String,
    /// In `FEATURE_NAMES` order.
    pub features: [f64; 7],
    pub fuel_flow: Option<f64>,
    pub label: String,
}

impl Sample {
    /// Feature vector, with fuel flow appended when present.
    pub fn feature_vec(&self) -> Vec<f64> {
        let mut v = self.features.to_vec();
        v.extend(self.fuel_flow);
        v
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub scheme: LabelScheme,
    pub with_fuel_flow: bool,
    pub rows: Vec<Sample>,
    /// Points whose simulation failed.
    pub excluded: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GenerateOptions {
    /// Emit the fuel mass flow as an extra column.
    pub fuel_flow: bool,
}

fn sample_for(
    spec: &BoilerSpec,
    op: &OperatingPoint,
    fault: &FaultCondition,
    opts: GenerateOptions,
) -> Result<Sample> {
    let r = simulate(spec, op, fault)?;
    let features = [
        op.t_return,
        r.t_supply,
        op.water_flow,
        op.water_flow / spec.nominal_water_flow,
        op.t_outdoor,
        spec.fuel.t_fuel,
        r.t_exhaust,
    ];
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite features at {op:?} / {fault}")));
    }
    Ok(Sample {
        boiler_id: spec.id.clone(),
        features,
        fuel_flow: opts.fuel_flow.then_some(r.combustion.m_fuel),
        label: fault.label(),
    })
}

/// One row per (operating point, fault), ordered by operating point then
/// fault. Failed simulations are dropped and counted.
pub fn generate(
    spec: &BoilerSpec,
    ops: &[OperatingPoint],
    faults: &[FaultCondition],
    opts: GenerateOptions,
) -> Result<Dataset> {
    spec.h_outer()?;
    let n_faults = faults.len();
    let cells = par::map_range(ops.len() * n_faults, |i| {
        sample_for(spec, &ops[i / n_faults], &faults[i % n_faults], opts)
    });
    let excluded = cells.iter().filter(|c| c.is_err()).count();
    Ok(Dataset {
        scheme: LabelScheme::Full31,
        with_fuel_flow: opts.fuel_flow,
        rows: cells.into_iter().filter_map(|c| c.ok()).collect(),
        excluded,
    })
}

/// Default grid, all 31 fault conditions.
pub fn generate_default(spec: &BoilerSpec, opts: GenerateOptions) -> Result<Dataset> {
    let ops = operating_grid(&GridConfig::default(), spec.nominal_water_flow)?;
    generate(spec, &ops, &fault_grid(), opts)
}

/// Maps detailed labels to `scheme`; rows and features are untouched.
pub fn relabel(ds: &Dataset, scheme: LabelScheme) -> Result<Dataset> {
    if ds.scheme != LabelScheme::Full31 {
        return Err(Error::data(format!(
            "relabel expects detailed labels, dataset is in the {}-class scheme",
            ds.scheme
        )));
    }
    let rows = ds
        .rows
        .iter()
        .map(|s| {
            Ok(Sample {
                label: scheme.map_label(&s.label)?,
                ..s.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        scheme,
        rows,
        ..ds.clone()
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_names(&self) -> Vec<&'static str> {
        let mut v = FEATURE_NAMES.to_vec();
        if self.with_fuel_flow {
            v.push(FUEL_FLOW_COLUMN);
        }
        v
    }

    pub fn distinct_labels(&self) -> BTreeSet<&str> {
        self.rows.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn boiler_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = Vec::new();
        for s in &self.rows {
            if !ids.contains(&s.boiler_id.as_str()) {
                ids.push(&s.boiler_id);
            }
        }
        ids
    }

    /// Concatenates datasets that share scheme and columns.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Dataset>) -> Result<Dataset> {
        let mut iter = parts.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::data("cannot concatenate zero datasets"))?;
        let mut out = first.clone();
        for d in iter {
            if d.scheme != out.scheme || d.with_fuel_flow != out.with_fuel_flow {
                return Err(Error::data("datasets differ in label scheme or columns"));
            }
            out.rows.extend(d.rows.iter().cloned());
            out.excluded += d.excluded;
        }
        Ok(out)
    }

    pub fn header(&self) -> Vec<&'static str> {
        let mut h = vec!["boiler_id"];
        h.extend(self.feature_names());
        h.push("label");
        h
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.header())?;
        for s in &self.rows {
            let mut rec = Vec::with_capacity(10);
            rec.push(s.boiler_id.clone());
            rec.extend(s.feature_vec().iter().map(|v| v.to_string()));
            rec.push(s.label.clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::data(e.to_string()))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(File::create(path)?)
    }

    /// Reads a dataset CSV. The label scheme is inferred from the labels.
    pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let with_fuel_flow = check_header(&header, true)?;
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let num = |j: usize| -> Result<f64> {
                let v: f64 = rec[j]
                    .trim()
                    .parse()
                    .map_err(|_| Error::data(format!("row {}: bad number `{}`", i + 1, &rec[j])))?;
                if !v.is_finite() {
                    return Err(Error::data(format!("row {}: non-finite value", i + 1)));
                }
                Ok(v)
            };
            let mut features = [0.0; 7];
            for (j, f) in features.iter_mut().enumerate() {
                *f = num(j + 1)?;
            }
            let fuel_flow = if with_fuel_flow { Some(num(8)?) } else { None };
            rows.push(Sample {
                boiler_id: rec[0].to_string(),
                features,
                fuel_flow,
                label: rec[rec.len() - 1].to_string(),
            });
        }
        let scheme = infer_scheme(rows.iter().map(|s| s.label.as_str()))?;
        Ok(Dataset {
            scheme,
            with_fuel_flow,
            rows,
            excluded: 0,
        })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        Self::read_csv(File::open(path)?).map_err(|e| match e {
            Error::Data(m) => Error::data(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Checks a CSV header against the dataset schema, with or without the
/// trailing label column. Returns whether the fuel-flow column is present.
pub fn check_header<S: AsRef<str>>(header: &[S], labeled: bool) -> Result<bool> {
    let header: Vec<&str> = header.iter().map(AsRef::as_ref).collect();
    let with_fuel_flow = header.contains(&FUEL_FLOW_COLUMN);
    let mut expected = vec!["boiler_id"];
    expected.extend(FEATURE_NAMES);
    if with_fuel_flow {
        expected.push(FUEL_FLOW_COLUMN);
    }
    if labeled {
        expected.push("label");
    }
    if header != expected {
        return Err(Error::data(format!("unexpected header {header:?}, expected {expected:?}")));
    }
    Ok(with_fuel_flow)
}

/// Smallest scheme whose class set contains every label.
fn infer_scheme<'a>(labels: impl Iterator<Item = &'a str>) -> Result<LabelScheme> {
    let seen: BTreeSet<&str> = labels.collect();
    let full = LabelScheme::Full31.classes();
    let merged = LabelScheme::MergedExcessAir22.classes();
    let cat = LabelScheme::Categorical4.classes();
    let within = |set: &[String]| seen.iter().all(|l| set.iter().any(|c| c == l));
    // "Normal", "Fouling-…" etc. are shared; decide by the labels that differ.
    if within(&full) {
        return Ok(LabelScheme::Full31);
    }
    if within(&merged) {
        return Ok(LabelScheme::MergedExcessAir22);
    }
    if within(&cat) {
        return Ok(LabelScheme::Categorical4);
    }
    let unknown: Vec<_> = seen
        .iter()
        .filter(|l| !full.contains(&l.to_string()) && !merged.contains(&l.to_string()) && !cat.contains(&l.to_string()))
        .collect();
    Err(Error::data(format!("labels not in any scheme: {unknown:?}")))
}
