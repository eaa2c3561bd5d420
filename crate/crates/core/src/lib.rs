//! Multi-level goal and strategy grids with attached GQM measurement
//! models: modelling, validation, gap analysis, measurement planning,
//! evaluation with roll-up, layout and maintenance.

pub mod analysis;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod grid;
pub mod id;
pub mod layout;
pub mod maintenance;
pub mod measurement;
pub mod text;

pub use error::PreconditionViolated;
pub use exec::Exec;
pub use grid::Grid;
pub use id::Id;

#[cfg(feature = "testkit")]
pub mod testkit;
