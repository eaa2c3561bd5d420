use chrono::{Datelike, NaiveDate};
use serde::Serialize;

use super::dataset::MeasurementDataset;
use super::gqm::Cadence;
use super::plan::MeasurementPlan;
use crate::exec::{self, Exec};
use crate::id::Id;

/// A closed interval of calendar dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("window {start}..{end} is empty")]
pub struct EmptyWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, EmptyWindow> {
        if end < start {
            Err(EmptyWindow { start, end })
        } else {
            Ok(DateWindow { start, end })
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

/// Number of calendar periods of `cadence` that intersect the window.
/// Weeks are ISO weeks starting on Monday.
pub fn expected_observations(cadence: Cadence, window: DateWindow) -> u32 {
    let (s, e) = (window.start, window.end);
    let months = |d: NaiveDate| d.year() as i64 * 12 + d.month0() as i64;
    let span = match cadence {
        Cadence::Daily => (e - s).num_days(),
        Cadence::Weekly => {
            let monday = |d: NaiveDate| d - chrono::Days::new(d.weekday().num_days_from_monday() as u64);
            (monday(e) - monday(s)).num_days() / 7
        }
        Cadence::Monthly => months(e) - months(s),
        Cadence::Quarterly => months(e) / 3 - months(s) / 3,
        Cadence::Yearly => (e.year() - s.year()) as i64,
    };
    (span + 1) as u32
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricCoverage {
    pub metric: Id,
    pub cadence: Option<Cadence>,
    /// `None` for metrics without a collection spec.
    pub expected: Option<u32>,
    pub actual: usize,
    /// `actual / expected` capped at 1; `None` when unplanned.
    pub ratio: Option<f64>,
    pub unplanned: bool,
}

/// Compares collected observations against each metric's cadence.
pub fn coverage_check(
    plan: &MeasurementPlan,
    dataset: &MeasurementDataset,
    window: DateWindow,
) -> Vec<MetricCoverage> {
    coverage_check_with(plan, dataset, window, Exec::default())
}

pub fn coverage_check_with(
    plan: &MeasurementPlan,
    dataset: &MeasurementDataset,
    window: DateWindow,
    exec: Exec,
) -> Vec<MetricCoverage> {
    exec::map(exec, &plan.rows, |row| {
        let actual = dataset
            .observations(&row.metric)
            .iter()
            .filter(|o| window.contains(o.timestamp.date_naive()))
            .count();
        let cadence = row.collection.as_ref().map(|c| c.cadence);
        let expected = cadence.map(|c| expected_observations(c, window));
        let ratio = expected.map(|e| (actual as f64 / e as f64).min(1.0));
        MetricCoverage { metric: row.metric.clone(), cadence, expected, actual, ratio, unplanned: cadence.is_none() }
    })
}
