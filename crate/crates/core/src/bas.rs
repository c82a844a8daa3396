//! Building-automation time series: CSV ingestion, median filtering and
//! alignment into classifier feature rows.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, TimeDelta};
use serde::{Deserialize, Serialize};

use crate::dataset::FEATURE_NAMES;
use crate::error::{Error, Result};

pub const DEFAULT_MEDIAN_WINDOW: usize = 5;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// Accepts RFC 3339 (offsets are converted to UTC) or a naive ISO-8601
/// date-time with `T` or a space separator.
pub fn parse_timestamp(s: &str) -> Result<NaiveDateTime> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.naive_utc());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(t);
        }
    }
    Err(Error::data(format!("unparseable timestamp `{s}`")))
}

pub fn format_timestamp(t: &NaiveDateTime) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

/// One BAS point. `None` marks a missing or non-finite reading.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub name: String,
    timestamps: Vec<NaiveDateTime>,
    values: Vec<Option<f64>>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, timestamps: Vec<NaiveDateTime>, values: Vec<Option<f64>>) -> Result<Self> {
        let name = name.into();
        if timestamps.len() != values.len() {
            return Err(Error::data(format!(
                "{name}: {} timestamps but {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if let Some(w) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::data(format!(
                "{name}: timestamps not strictly increasing at {}",
                format_timestamp(&timestamps[w + 1])
            )));
        }
        let values = values.into_iter().map(|v| v.filter(|x| x.is_finite())).collect();
        Ok(Self {
            name,
            timestamps,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    /// Reads `timestamp,value`; an empty or unparseable value is missing.
    pub fn read_csv<R: Read>(name: &str, reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut timestamps = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::data(format!("{name}: expected `timestamp,value` rows")));
            }
            timestamps.push(parse_timestamp(&rec[0])?);
            values.push(rec[1].parse::<f64>().ok());
        }
        Self::new(name, timestamps, values)
    }

    /// Point name defaults to the file stem.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::config(format!("no point name in {}", path.display())))?;
        Self::read_csv(name, File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["timestamp", "value"])?;
        for (t, v) in self.timestamps.iter().zip(&self.values) {
            w.write_record([format_timestamp(t), v.map(|x| x.to_string()).unwrap_or_default()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Last valid reading at or before `t`.
    fn value_at(&self, t: NaiveDateTime) -> Option<f64> {
        let end = self.timestamps.partition_point(|&s| s <= t);
        self.values[..end].iter().rev().find_map(|v| *v)
    }
}

/// Reads a wide export: a `timestamp` column followed by one column per point.
pub fn read_wide_csv<R: Read>(reader: R) -> Result<Vec<TimeSeries>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 {
        return Err(Error::data("wide CSV needs a timestamp column and at least one point"));
    }
    let mut timestamps = Vec::new();
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); header.len() - 1];
    for rec in r.records() {
        let rec = rec?;
        timestamps.push(parse_timestamp(&rec[0])?);
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(rec.get(j + 1).and_then(|v| v.parse::<f64>().ok()));
        }
    }
    header[1..]
        .iter()
        .zip(columns)
        .map(|(name, values)| TimeSeries::new(name.clone(), timestamps.clone(), values))
        .collect()
}

pub fn load_wide_csv(path: impl AsRef<Path>) -> Result<Vec<TimeSeries>> {
    read_wide_csv(File::open(path)?)
}

fn median(buf: &mut [f64]) -> f64 {
    buf.sort_unstable_by(f64::total_cmp);
    let n = buf.len();
    if n % 2 == 1 {
        buf[n / 2]
    } else {
        0.5 * (buf[n / 2 - 1] + buf[n / 2])
    }
}

/// Centered running median. Near the ends the window shrinks symmetrically
/// so every output sample is centered; missing readings are skipped.
pub fn median_filter(series: &TimeSeries, window: usize) -> Result<TimeSeries> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::config(format!("median window must be odd and positive, got {window}")));
    }
    let n = series.len();
    if window > n {
        return Err(Error::config(format!(
            "median window {window} exceeds the {n} samples of {}",
            series.name
        )));
    }
    let half = window / 2;
    let mut buf = Vec::with_capacity(window);
    let values = (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            buf.clear();
            buf.extend(series.values[i - h..=i + h].iter().flatten());
            (!buf.is_empty()).then(|| median(&mut buf))
        })
        .collect();
    Ok(TimeSeries {
        name: series.name.clone(),
        timestamps: series.timestamps.clone(),
        values,
    })
}

/// BAS point name to canonical feature name.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointMap(pub BTreeMap<String, String>);

impl PointMap {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// BAS point for each canonical feature, in feature order.
    pub fn resolve(&self) -> Result<[&str; 7]> {
        if let Some((bas, f)) = self.0.iter().find(|(_, f)| !FEATURE_NAMES.contains(&f.as_str())) {
            return Err(Error::config(format!("point `{bas}` maps to unknown feature `{f}`")));
        }
        let mut out = [""; 7];
        for (slot, feature) in out.iter_mut().zip(FEATURE_NAMES) {
            let mut hits = self.0.iter().filter(|(_, f)| f.as_str() == feature);
            *slot = match (hits.next(), hits.next()) {
                (Some((bas, _)), None) => bas.as_str(),
                (None, _) => return Err(Error::config(format!("no BAS point mapped to `{feature}`"))),
                (Some(_), Some(_)) => {
                    return Err(Error::config(format!("several BAS points map to `{feature}`")))
                }
            };
        }
        Ok(out)
    }
}

/// Unlabeled rows in the dataset schema.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRows {
    pub boiler_id: String,
    pub timestamps: Vec<NaiveDateTime>,
    pub rows: Vec<[f64; 7]>,
}

impl FeatureRows {
    pub fn header(with_timestamp: bool) -> Vec<&'static str> {
        let mut h = Vec::with_capacity(9);
        if with_timestamp {
            h.push("timestamp");
        }
        h.push("boiler_id");
        h.extend(FEATURE_NAMES);
        h
    }

    pub fn write_csv<W: Write>(&self, writer: W, with_timestamp: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(Self::header(with_timestamp))?;
        for (t, row) in self.timestamps.iter().zip(&self.rows) {
            let mut rec = Vec::with_capacity(9);
            if with_timestamp {
                rec.push(format_timestamp(t));
            }
            rec.push(self.boiler_id.clone());
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, with_timestamp: bool) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, with_timestamp)?;
        String::from_utf8(buf).map_err(|e| Error::data(e.to_string()))
    }
}

/// Resamples the mapped points onto a common grid by carrying the last
/// observation forward. The grid starts at the latest first sample, steps by
/// `interval` and stops at the earliest last sample, giving
/// `floor(overlap / interval) + 1` rows.
pub fn to_feature_rows(
    map: &PointMap,
    series: &[TimeSeries],
    interval: TimeDelta,
    boiler_id: &str,
) -> Result<FeatureRows> {
    if interval <= TimeDelta::zero() {
        return Err(Error::config("sampling interval must be positive"));
    }
    let points = map.resolve()?;
    let mapped: Vec<&TimeSeries> = points
        .iter()
        .map(|p| {
            series
                .iter()
                .find(|s| s.name == *p)
                .ok_or_else(|| Error::config(format!("mapped point `{p}` has no series")))
        })
        .collect::<Result<_>>()?;
    if let Some(s) = mapped.iter().find(|s| s.is_empty()) {
        return Err(Error::data(format!("series `{}` is empty", s.name)));
    }
    let start = mapped.iter().map(|s| s.timestamps[0]).max().expect("seven series");
    let end = mapped.iter().map(|s| *s.timestamps.last().expect("non-empty")).min().expect("seven series");
    if start > end {
        return Err(Error::data("the mapped series share no common time window"));
    }
    let steps = (end - start).num_milliseconds() / interval.num_milliseconds().max(1);
    let mut timestamps = Vec::with_capacity(steps as usize + 1);
    let mut rows = Vec::with_capacity(steps as usize + 1);
    for k in 0..=steps {
        let t = start + interval * k as i32;
        let mut row = [0.0; 7];
        for (slot, s) in row.iter_mut().zip(&mapped) {
            *slot = s.value_at(t).ok_or_else(|| {
                Error::data(format!("`{}` has no valid reading at or before {}", s.name, format_timestamp(&t)))
            })?;
        }
        timestamps.push(t);
        rows.push(row);
    }
    Ok(FeatureRows {
        boiler_id: boiler_id.to_string(),
        timestamps,
        rows,
    })
}
