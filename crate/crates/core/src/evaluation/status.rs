use std::fmt;

use serde::{Deserialize, Serialize};

/// Goal achievement status with a fixed numeric encoding used in roll-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalStatus {
    Achieved,
    AtRisk,
    Failed,
    Unknown,
}

impl GoalStatus {
    pub const ALL: [GoalStatus; 4] =
        [GoalStatus::Achieved, GoalStatus::AtRisk, GoalStatus::Failed, GoalStatus::Unknown];

    /// Achieved = 1.0, AtRisk = 0.5, Failed = 0.0; Unknown has no value.
    pub fn encoding(self) -> Option<f64> {
        match self {
            GoalStatus::Achieved => Some(1.0),
            GoalStatus::AtRisk => Some(0.5),
            GoalStatus::Failed => Some(0.0),
            GoalStatus::Unknown => None,
        }
    }

    /// Position in the order Failed < AtRisk < Achieved; `None` for Unknown.
    pub fn severity_rank(self) -> Option<u8> {
        match self {
            GoalStatus::Failed => Some(0),
            GoalStatus::AtRisk => Some(1),
            GoalStatus::Achieved => Some(2),
            GoalStatus::Unknown => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            GoalStatus::Achieved => "achieved",
            GoalStatus::AtRisk => "at_risk",
            GoalStatus::Failed => "failed",
            GoalStatus::Unknown => "unknown",
        }
    }
}

impl fmt::Display for GoalStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}
