use serde::{Deserialize, Serialize};

use super::gqm::{CollectionSpec, ValueKind};
use crate::error::{require_valid, PreconditionViolated};
use crate::grid::{ElementKind, Grid};
use crate::id::Id;

/// One metric's collection row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRow {
    pub metric: Id,
    pub name: String,
    /// The goal or strategy whose GQM graph owns the metric.
    pub serves: Id,
    pub serves_kind: ElementKind,
    pub rank: u32,
    pub kind: ValueKind,
    pub unit: Option<String>,
    pub collection: Option<CollectionSpec>,
    /// True when no collection spec is defined yet.
    pub missing: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    pub rows: Vec<PlanRow>,
}

impl MeasurementPlan {
    pub fn row(&self, metric: &str) -> Option<&PlanRow> {
        self.rows.iter().find(|r| r.metric.as_str() == metric)
    }

    pub fn missing_count(&self) -> usize {
        self.rows.iter().filter(|r| r.missing).count()
    }

    /// Plain-text table for terminals.
    pub fn render_text(&self) -> String {
        let mut out = String::from("metric\tserves\trank\tkind\tresponsible\tcadence\tmethod\tsource\n");
        for r in &self.rows {
            let (who, cadence, how, source) = match &r.collection {
                Some(c) => (c.responsible.as_str(), c.cadence.keyword(), c.method.as_str(), c.source.as_str()),
                None => ("MISSING", "MISSING", "MISSING", "MISSING"),
            };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{who}\t{cadence}\t{how}\t{source}\n",
                r.metric,
                r.serves,
                r.rank,
                r.kind.keyword()
            ));
        }
        out
    }
}

/// One row per metric, ordered by the serving element's rank then metric id.
pub fn generate_plan(grid: &Grid) -> Result<MeasurementPlan, PreconditionViolated> {
    require_valid(grid)?;
    let mut rows: Vec<PlanRow> = grid
        .metrics()
        .map(|(owner, m)| PlanRow {
            metric: m.id.clone(),
            name: m.name.clone(),
            serves: owner.clone(),
            serves_kind: grid.element_kind(owner).expect("validated owner"),
            rank: grid.rank_of(owner).expect("validated owner level"),
            kind: m.kind,
            unit: m.unit.clone(),
            collection: m.collection.clone(),
            missing: m.collection.is_none(),
        })
        .collect();
    rows.sort_by(|a, b| (a.rank, &a.metric).cmp(&(b.rank, &b.metric)));
    Ok(MeasurementPlan { rows })
}
