//! Measurement data ingestion.
//!
//! Data files are CSV with the header `metric_id,timestamp,value`,
//! RFC 3339 timestamps, `.` as decimal point and `true`/`false` booleans.

use std::collections::BTreeMap;
use std::fmt;
use std::io;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::gqm::ValueKind;
use super::plan::MeasurementPlan;
use crate::id::Id;

pub const CSV_HEADER: [&str; 3] = ["metric_id", "timestamp", "value"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObsValue {
    Num(f64),
    Bool(bool),
}

impl ObsValue {
    pub fn as_f64(self) -> f64 {
        match self {
            ObsValue::Num(v) => v,
            ObsValue::Bool(true) => 1.0,
            ObsValue::Bool(false) => 0.0,
        }
    }
}

impl fmt::Display for ObsValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObsValue::Num(v) => write!(f, "{v}"),
            ObsValue::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub timestamp: DateTime<Utc>,
    pub value: ObsValue,
}

/// Per-metric series, each strictly increasing in time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDataset {
    pub series: BTreeMap<Id, Vec<Observation>>,
}

impl MeasurementDataset {
    pub fn observations(&self, metric: &Id) -> &[Observation] {
        self.series.get(metric).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn numeric_series(&self, metric: &Id) -> Vec<f64> {
        self.observations(metric).iter().map(|o| o.value.as_f64()).collect()
    }

    pub fn len(&self) -> usize {
        self.series.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rows in metric then time order, numbered from 1.
    pub fn to_rows(&self) -> Vec<RawRow> {
        self.series
            .iter()
            .flat_map(|(metric, obs)| {
                obs.iter().map(move |o| (metric.to_string(), format_timestamp(o.timestamp), o.value.to_string()))
            })
            .enumerate()
            .map(|(i, (metric_id, timestamp, value))| RawRow { row: i + 1, metric_id, timestamp, value })
            .collect()
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), csv::Error> {
        write_rows(writer, &self.to_rows())
    }
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// An unparsed data row. `row` is the 1-based record number after the header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRow {
    pub row: usize,
    pub metric_id: String,
    pub timestamp: String,
    pub value: String,
}

impl RawRow {
    pub fn new(row: usize, metric_id: &str, timestamp: &str, value: &str) -> Self {
        RawRow { row, metric_id: metric_id.into(), timestamp: timestamp.into(), value: value.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IngestErrorKind {
    #[error("unknown metric `{metric}`")]
    UnknownMetric { metric: String },
    #[error("value `{value}` is not {}", .expected.keyword())]
    TypeMismatch { expected: ValueKind, value: String },
    #[error("bad timestamp `{timestamp}` (expected RFC 3339)")]
    BadTimestamp { timestamp: String },
    #[error("duplicate timestamp {timestamp} for `{metric}`")]
    DuplicateTimestamp { metric: String, timestamp: String },
    #[error("malformed record: {detail}")]
    MalformedRecord { detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("row {row}: {kind}")]
pub struct IngestError {
    pub row: usize,
    pub kind: IngestErrorKind,
}

/// Validates rows against the plan. Bad rows are reported, never fatal.
pub fn ingest(plan: &MeasurementPlan, rows: &[RawRow]) -> (MeasurementDataset, Vec<IngestError>) {
    let kinds: BTreeMap<&str, ValueKind> = plan.rows.iter().map(|r| (r.metric.as_str(), r.kind)).collect();
    let mut series: BTreeMap<Id, BTreeMap<DateTime<Utc>, ObsValue>> = BTreeMap::new();
    let mut errors = Vec::new();

    for raw in rows {
        let fail = |kind| IngestError { row: raw.row, kind };
        let metric = raw.metric_id.trim();
        let Some(&kind) = kinds.get(metric) else {
            errors.push(fail(IngestErrorKind::UnknownMetric { metric: metric.to_string() }));
            continue;
        };
        let Ok(timestamp) = DateTime::parse_from_rfc3339(raw.timestamp.trim()) else {
            errors.push(fail(IngestErrorKind::BadTimestamp { timestamp: raw.timestamp.clone() }));
            continue;
        };
        let timestamp = timestamp.with_timezone(&Utc);
        let Some(value) = parse_value(kind, raw.value.trim()) else {
            errors.push(fail(IngestErrorKind::TypeMismatch { expected: kind, value: raw.value.clone() }));
            continue;
        };
        let entry = series.entry(Id::unchecked(metric)).or_default();
        if entry.contains_key(&timestamp) {
            errors.push(fail(IngestErrorKind::DuplicateTimestamp {
                metric: metric.to_string(),
                timestamp: format_timestamp(timestamp),
            }));
            continue;
        }
        entry.insert(timestamp, value);
    }

    let dataset = MeasurementDataset {
        series: series
            .into_iter()
            .map(|(m, obs)| {
                (m, obs.into_iter().map(|(timestamp, value)| Observation { timestamp, value }).collect())
            })
            .collect(),
    };
    (dataset, errors)
}

fn parse_value(kind: ValueKind, text: &str) -> Option<ObsValue> {
    match kind {
        ValueKind::Boolean => match text {
            "true" => Some(ObsValue::Bool(true)),
            "false" => Some(ObsValue::Bool(false)),
            _ => None,
        },
        ValueKind::Numeric => {
            let looks_decimal = !text.is_empty()
                && text.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'));
            if !looks_decimal {
                return None;
            }
            text.parse::<f64>().ok().filter(|v| v.is_finite()).map(ObsValue::Num)
        }
    }
}

/// Reads data rows from CSV. Records with the wrong number of fields become
/// [`IngestErrorKind::MalformedRecord`] errors; a wrong header is fatal.
pub fn read_csv<R: io::Read>(reader: R) -> Result<(Vec<RawRow>, Vec<IngestError>), csv::Error> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols != CSV_HEADER {
        return Err(csv::Error::from(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("expected header `{}`, found `{}`", CSV_HEADER.join(","), cols.join(",")),
        )));
    }
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        if record.len() != 3 {
            errors.push(IngestError {
                row,
                kind: IngestErrorKind::MalformedRecord { detail: format!("expected 3 fields, found {}", record.len()) },
            });
            continue;
        }
        rows.push(RawRow::new(row, &record[0], &record[1], &record[2]));
    }
    Ok((rows, errors))
}

pub fn write_rows<W: io::Write>(writer: W, rows: &[RawRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([&r.metric_id, &r.timestamp, &r.value])?;
    }
    w.flush()?;
    Ok(())
}
