use crate::grid::{check_structure, Grid, GridError};

/// An operation that requires a structurally valid grid was given one with
/// errors.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("grid has {} structural error(s); first: {}", .errors.len(), .errors.first().map(ToString::to_string).unwrap_or_default())]
pub struct PreconditionViolated {
    pub errors: Vec<GridError>,
}

pub(crate) fn require_valid(grid: &Grid) -> Result<(), PreconditionViolated> {
    let errors: Vec<GridError> = check_structure(grid).into_iter().map(|l| l.error).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(PreconditionViolated { errors })
    }
}
