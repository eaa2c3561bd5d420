//! GQM graphs, measurement plans, data ingestion and coverage.

mod coverage;
mod dataset;
mod gqm;
mod plan;

pub use coverage::{coverage_check, coverage_check_with, expected_observations, DateWindow, EmptyWindow, MetricCoverage};
pub use dataset::{
    format_timestamp, ingest, read_csv, write_rows, IngestError, IngestErrorKind, MeasurementDataset, ObsValue,
    Observation, RawRow, CSV_HEADER,
};
pub use gqm::{gqm_key, Cadence, CollectionSpec, GqmGoal, GqmGraph, Metric, Question, ValueKind, GQM_KEY_PREFIX};
pub use plan::{generate_plan, MeasurementPlan, PlanRow};
