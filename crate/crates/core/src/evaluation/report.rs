//! Whole-grid evaluation with bottom-up roll-up.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::eval::{CompiledModel, Env};
use super::status::GoalStatus;
use crate::error::{require_valid, PreconditionViolated};
use crate::exec::{self, Exec};
use crate::grid::{ElementKind, Grid};
use crate::id::Id;
use crate::measurement::{GqmGraph, MeasurementDataset};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricUse {
    pub metric: Id,
    pub observations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub element: Id,
    pub kind: ElementKind,
    pub rank: u32,
    pub priority: Option<u32>,
    pub status: GoalStatus,
    pub score: Option<f64>,
    /// Metrics the interpretation model reads.
    pub metrics: Vec<MetricUse>,
    /// Referenced metrics without any observation.
    pub missing_data: Vec<Id>,
    /// Direct children whose status was needed but is unknown.
    pub unknown_children: Vec<Id>,
    pub has_model: bool,
    /// The model reads no metric and no child status.
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub grid_name: Option<String>,
    pub grid_version: Option<String>,
    pub evaluated_at: String,
    /// One entry per element owning a GQM graph, ordered by rank, then
    /// priority (unprioritized last), then id.
    pub entries: Vec<ReportEntry>,
}

impl EvaluationReport {
    pub fn entry(&self, element: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.element.as_str() == element)
    }

    pub fn status_of(&self, element: &str) -> Option<GoalStatus> {
        self.entry(element).map(|e| e.status)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "grid {} version {} evaluated {}",
            self.grid_name.as_deref().unwrap_or("-"),
            self.grid_version.as_deref().unwrap_or("-"),
            self.evaluated_at
        );
        let _ = writeln!(out, "{:<16} {:<9} {:>4} {:<9} {:>10}  missing", "element", "kind", "rank", "status", "score");
        for e in &self.entries {
            let score = e.score.map_or("-".to_string(), |s| format!("{s:.4}"));
            let missing: Vec<&str> = e.missing_data.iter().map(Id::as_str).collect();
            let _ = writeln!(
                out,
                "{:<16} {:<9} {:>4} {:<9} {:>10}  {}",
                e.element.as_str(),
                e.kind.to_string(),
                e.rank,
                e.status.label(),
                score,
                if missing.is_empty() { "-".to_string() } else { missing.join(",") }
            );
        }
        out
    }
}

/// Longest downward path length per element; leaves have height 0.
pub(crate) fn heights(grid: &Grid) -> BTreeMap<Id, usize> {
    let children = grid.child_map();
    let order = grid.topological_order().expect("validated grid is acyclic");
    let mut h: BTreeMap<Id, usize> = BTreeMap::new();
    for e in order.iter().rev() {
        let height = children[e].iter().map(|c| h[c] + 1).max().unwrap_or(0);
        h.insert(e.clone(), height);
    }
    h
}

struct Job<'a> {
    element: &'a Id,
    graph: &'a GqmGraph,
    model: Option<CompiledModel>,
    children: Vec<Id>,
}

/// Evaluates every element that owns a GQM graph, children before parents.
pub fn evaluate_grid(
    grid: &Grid,
    dataset: &MeasurementDataset,
    evaluated_at: DateTime<Utc>,
) -> Result<EvaluationReport, PreconditionViolated> {
    evaluate_grid_with(grid, dataset, evaluated_at, Exec::default())
}

/// As [`evaluate_grid`]. Elements of equal height have disjoint dependency
/// sets and are evaluated together under `exec`.
pub fn evaluate_grid_with(
    grid: &Grid,
    dataset: &MeasurementDataset,
    evaluated_at: DateTime<Utc>,
    exec: Exec,
) -> Result<EvaluationReport, PreconditionViolated> {
    require_valid(grid)?;
    let heights = heights(grid);
    let max_h = heights.values().copied().max().unwrap_or(0);
    let mut layers: Vec<Vec<Job>> = (0..=max_h).map(|_| Vec::new()).collect();
    for graph in &grid.gqm_graphs {
        let element = &graph.attached_to;
        let model = graph
            .interpretation
            .as_ref()
            .map(|m| CompiledModel::new(m).expect("validated model type-checks"));
        layers[heights[element]].push(Job { element, graph, model, children: grid.children(element) });
    }

    let mut statuses: BTreeMap<Id, GoalStatus> = BTreeMap::new();
    let mut entries: Vec<ReportEntry> = Vec::new();
    for layer in &layers {
        let done = exec::map(exec, layer, |job| evaluate_one(grid, dataset, job, &statuses));
        for entry in done {
            statuses.insert(entry.element.clone(), entry.status);
            entries.push(entry);
        }
    }

    entries.sort_by(|a, b| {
        (a.rank, a.priority.is_none(), a.priority, &a.element).cmp(&(b.rank, b.priority.is_none(), b.priority, &b.element))
    });
    Ok(EvaluationReport {
        grid_name: grid.metadata.name.clone(),
        grid_version: grid.metadata.version.clone(),
        evaluated_at: evaluated_at.to_rfc3339_opts(SecondsFormat::Secs, true),
        entries,
    })
}

fn evaluate_one(
    grid: &Grid,
    dataset: &MeasurementDataset,
    job: &Job,
    statuses: &BTreeMap<Id, GoalStatus>,
) -> ReportEntry {
    let element = job.element;
    let refs = job.graph.interpretation.as_ref().map(|m| m.references()).unwrap_or_default();

    let mut env = Env::default();
    for m in &job.graph.metrics {
        env.series.insert(m.id.clone(), dataset.numeric_series(&m.id));
    }
    for c in &job.children {
        env.children.insert(c.clone(), statuses.get(c).copied().unwrap_or(GoalStatus::Unknown));
    }

    let (status, score) = match &job.model {
        Some(model) => model.evaluate(&env),
        None => (GoalStatus::Unknown, None),
    };

    let metrics: Vec<MetricUse> = refs
        .metrics
        .iter()
        .map(|m| MetricUse { metric: m.clone(), observations: dataset.observations(m).len() })
        .collect();
    let missing_data = metrics.iter().filter(|u| u.observations == 0).map(|u| u.metric.clone()).collect();
    let needed: BTreeSet<&Id> = if refs.all_children { job.children.iter().collect() } else { refs.children.iter().collect() };
    let unknown_children = needed
        .into_iter()
        .filter(|c| env.children.get(*c).is_none_or(|s| *s == GoalStatus::Unknown))
        .cloned()
        .collect();

    ReportEntry {
        element: element.clone(),
        kind: grid.element_kind(element).expect("validated owner"),
        rank: grid.rank_of(element).expect("validated owner level"),
        priority: grid.goal(element).and_then(|g| g.priority),
        status,
        score,
        metrics,
        missing_data,
        unknown_children,
        has_model: job.model.is_some(),
        vacuous: refs.is_vacuous(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{generate_plan, ingest, RawRow};
    use crate::text::parse_grid;

    const CHAIN: &str = r#"
grid "chain" version "1";
level L0 "Top" rank 0;
level L1 "Low" rank 1;
goal G1 at L0 { description "top"; }
strategy S1 realizes G1 { description "s"; leads_to G2; }
goal G2 at L1 { description "low"; }
gqm for G1 { interpretation { score := min_child_status(); } }
gqm for S1 { interpretation { score := child_status(G2); } }
gqm for G2 {
  question Q "q";
  metric M "m" { kind numeric; unit "h"; answers Q; }
  interpretation { score := last(M); achieved if score >= 0.8; at_risk if score >= 0.4; }
}
"#;

    fn at() -> DateTime<Utc> {
        "2011-06-01T00:00:00Z".parse().unwrap()
    }

    fn run(values: &[&str]) -> EvaluationReport {
        let grid = parse_grid(CHAIN).unwrap();
        let plan = generate_plan(&grid).unwrap();
        let rows: Vec<RawRow> = values
            .iter()
            .enumerate()
            .map(|(i, v)| RawRow::new(i + 1, "M", &format!("2011-0{}-01T00:00:00Z", i + 1), v))
            .collect();
        let (ds, errs) = ingest(&plan, &rows);
        assert!(errs.is_empty());
        evaluate_grid(&grid, &ds, at()).unwrap()
    }

    #[test]
    fn rolls_up_through_levels() {
        let r = run(&["0.1", "0.9"]);
        assert_eq!(r.status_of("G2"), Some(GoalStatus::Achieved));
        assert_eq!(r.status_of("S1"), Some(GoalStatus::Achieved));
        assert_eq!(r.status_of("G1"), Some(GoalStatus::Achieved));
        let r = run(&["0.5"]);
        assert_eq!(r.status_of("G2"), Some(GoalStatus::AtRisk));
        assert_eq!(r.entry("G1").unwrap().score, Some(0.5));
        assert_eq!(r.status_of("G1"), Some(GoalStatus::AtRisk));
    }

    #[test]
    fn missing_data_propagates_unknown() {
        let r = run(&[]);
        for e in ["G1", "S1", "G2"] {
            assert_eq!(r.status_of(e), Some(GoalStatus::Unknown), "{e}");
        }
        assert_eq!(r.entry("G2").unwrap().missing_data, vec![crate::id::id("M")]);
        assert_eq!(r.entry("S1").unwrap().unknown_children, vec![crate::id::id("G2")]);
    }

    #[test]
    fn no_graphs_no_entries() {
        let grid = parse_grid("level L0 \"Top\" rank 0;\ngoal G1 at L0 { description \"x\"; }").unwrap();
        let r = evaluate_grid(&grid, &MeasurementDataset::default(), at()).unwrap();
        assert!(r.entries.is_empty());
        assert_eq!(r.evaluated_at, "2011-06-01T00:00:00Z");
    }

    #[test]
    fn modes_and_runs_agree() {
        let grid = parse_grid(CHAIN).unwrap();
        let ds = MeasurementDataset::default();
        let a = evaluate_grid_with(&grid, &ds, at(), Exec::Sequential).unwrap();
        let b = evaluate_grid_with(&grid, &ds, at(), Exec::Parallel).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn report_json_round_trips() {
        let r = run(&["0.9"]);
        let back: EvaluationReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.render_text().contains("achieved"));
    }
}
