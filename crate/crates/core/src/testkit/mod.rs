//! Generators and brute-force oracles shared by the test suites.

mod gen;
pub mod oracle;

pub use gen::{gap_free_grid, random_dataset, random_env, random_expr, random_grid, random_grid_with, ExprContext, GridParams};
