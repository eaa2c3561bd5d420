//! GQM graphs: the measurement attachment of a grid element.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::evaluation::InterpretationModel;
use crate::id::Id;

/// Prefix of the node key used for a GQM graph in layouts, bundles and
/// collapse sets. `:` is not a legal identifier character, so keys never
/// collide with element ids.
pub const GQM_KEY_PREFIX: &str = "gqm:";

/// The five facets of a GQM measurement goal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GqmGoal {
    pub object: String,
    pub purpose: String,
    pub quality_focus: String,
    pub viewpoint: String,
    pub context: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: Id,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Numeric,
    Boolean,
}

impl ValueKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ValueKind::Numeric => "numeric",
            ValueKind::Boolean => "boolean",
        }
    }
}

/// How often a metric is collected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cadence {
    Daily,
    Weekly,
    Monthly,
    Quarterly,
    Yearly,
}

impl Cadence {
    pub const ALL: [Cadence; 5] = [
        Cadence::Daily,
        Cadence::Weekly,
        Cadence::Monthly,
        Cadence::Quarterly,
        Cadence::Yearly,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Cadence::Daily => "daily",
            Cadence::Weekly => "weekly",
            Cadence::Monthly => "monthly",
            Cadence::Quarterly => "quarterly",
            Cadence::Yearly => "yearly",
        }
    }
}

impl fmt::Display for Cadence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for Cadence {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Cadence::ALL
            .into_iter()
            .find(|c| c.keyword() == s)
            .ok_or_else(|| format!("unknown cadence `{s}` (expected daily, weekly, monthly, quarterly or yearly)"))
    }
}

/// Who collects a metric, when, how and from where.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionSpec {
    pub responsible: String,
    pub cadence: Cadence,
    pub method: String,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metric {
    pub id: Id,
    pub name: String,
    /// Required for numeric metrics; `"dimensionless"` is a valid unit.
    pub unit: Option<String>,
    pub kind: ValueKind,
    /// Questions of the owning graph this metric answers.
    pub answers: Vec<Id>,
    pub collection: Option<CollectionSpec>,
}

/// A GQM goal with its questions, metrics and interpretation model, attached
/// to exactly one goal or strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GqmGraph {
    pub attached_to: Id,
    pub goal: GqmGoal,
    pub questions: Vec<Question>,
    pub metrics: Vec<Metric>,
    pub interpretation: Option<InterpretationModel>,
}

impl GqmGraph {
    pub fn new(attached_to: Id) -> Self {
        GqmGraph {
            attached_to,
            goal: GqmGoal::default(),
            questions: Vec::new(),
            metrics: Vec::new(),
            interpretation: None,
        }
    }

    pub fn node_key(&self) -> String {
        gqm_key(&self.attached_to)
    }

    pub fn metric(&self, id: &Id) -> Option<&Metric> {
        self.metrics.iter().find(|m| &m.id == id)
    }
}

pub fn gqm_key(owner: &Id) -> String {
    format!("{GQM_KEY_PREFIX}{owner}")
}
