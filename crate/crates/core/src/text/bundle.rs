//! JSON export bundle consumed by the viewer and by scripts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::evaluation::{EvaluationReport, GoalStatus};
use crate::grid::{collapse_set, Assumption, ContextFactor, Grid, Inheritance, RelationKind};
use crate::id::Id;
use crate::layout::LayoutedGrid;
use crate::measurement::{gqm_key, GqmGoal, GqmGraph};

pub const BUNDLE_VERSION: u32 = 1;

/// Ranks a role may see, inclusive bounds. Absent bounds are open.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleView {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_rank: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rank: Option<u32>,
}

impl RoleView {
    pub fn allows(&self, rank: u32) -> bool {
        self.min_rank.is_none_or(|m| rank >= m) && self.max_rank.is_none_or(|m| rank <= m)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoleConfig {
    pub roles: BTreeMap<String, RoleView>,
}

impl RoleConfig {
    /// The ranks of `grid`'s levels visible to `role`.
    pub fn visible_ranks(&self, grid: &Grid, role: &str) -> Option<BTreeSet<u32>> {
        let view = self.roles.get(role)?;
        Some(grid.levels.iter().map(|l| l.rank).filter(|r| view.allows(*r)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BundleError {
    #[error("report does not belong to this grid: {0}")]
    ReportGridMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleLevel {
    pub id: Id,
    pub name: String,
    pub rank: u32,
    pub revision_interval_months: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleGrid {
    pub name: Option<String>,
    pub version: Option<String>,
    pub levels: Vec<BundleLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GqmDetail {
    pub goal: GqmGoal,
    pub questions: Vec<String>,
    pub metrics: Vec<String>,
    pub interpretation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum NodeDetail {
    Element {
        description: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        priority: Option<u32>,
        #[serde(skip_serializing_if = "Option::is_none")]
        realizes: Option<Id>,
        context_factors: Vec<ContextFactor>,
        assumptions: Vec<Assumption>,
    },
    Gqm(GqmDetail),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleNode {
    pub id: String,
    /// `goal`, `strategy` or `gqm`.
    pub kind: &'static str,
    pub rank: u32,
    pub level: Id,
    pub label: String,
    pub detail: NodeDetail,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub owner: Option<Id>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<GoalStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BundleEdge {
    pub from: String,
    pub to: String,
    /// `realized_by`, `leads_to`, `measured_by`, `conflicts` or `supports`.
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inheritance: Option<Inheritance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bundle {
    pub bundle_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    pub grid: BundleGrid,
    pub nodes: Vec<BundleNode>,
    pub edges: Vec<BundleEdge>,
    /// Role name to visible ranks.
    pub roles: BTreeMap<String, Vec<u32>>,
    /// Element id to the node ids hidden when it is collapsed.
    pub collapse_sets: BTreeMap<String, Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout: Option<LayoutedGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<EvaluationReport>,
}

impl Bundle {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundle serializes");
        s.push('\n');
        s
    }

    /// Restricts nodes, edges, collapse sets and layout to the ranks in
    /// `role`'s entry of the role map. `None` for an unknown role.
    pub fn for_role(&self, role: &str) -> Option<Bundle> {
        let ranks: BTreeSet<u32> = self.roles.get(role)?.iter().copied().collect();
        let mut out = self.clone();
        out.role = Some(role.to_string());
        out.nodes.retain(|n| ranks.contains(&n.rank));
        let keep: BTreeSet<String> = out.nodes.iter().map(|n| n.id.clone()).collect();
        out.edges.retain(|e| keep.contains(&e.from) && keep.contains(&e.to));
        out.collapse_sets.retain(|k, _| keep.contains(k));
        for set in out.collapse_sets.values_mut() {
            set.retain(|k| keep.contains(k));
        }
        if let Some(layout) = &mut out.layout {
            layout.nodes.retain(|n| keep.contains(&n.key));
            layout.edges.retain(|e| keep.contains(&e.from) && keep.contains(&e.to));
        }
        if let Some(report) = &mut out.report {
            report.entries.retain(|e| keep.contains(e.element.as_str()));
        }
        Some(out)
    }
}

fn check_report(grid: &Grid, report: &EvaluationReport) -> Result<(), BundleError> {
    let owners: BTreeSet<&str> = grid.gqm_graphs.iter().map(|g| g.attached_to.as_str()).collect();
    let entries: BTreeSet<&str> = report.entries.iter().map(|e| e.element.as_str()).collect();
    if report.grid_version != grid.metadata.version {
        return Err(BundleError::ReportGridMismatch(format!(
            "report version {:?}, grid version {:?}",
            report.grid_version, grid.metadata.version
        )));
    }
    if owners != entries {
        let extra: Vec<&&str> = entries.difference(&owners).collect();
        let missing: Vec<&&str> = owners.difference(&entries).collect();
        return Err(BundleError::ReportGridMismatch(format!("unexpected entries {extra:?}, missing entries {missing:?}")));
    }
    Ok(())
}

fn gqm_detail(g: &GqmGraph) -> GqmDetail {
    GqmDetail {
        goal: g.goal.clone(),
        questions: g.questions.iter().map(|q| format!("{}: {}", q.id, q.text)).collect(),
        metrics: g
            .metrics
            .iter()
            .map(|m| match &m.unit {
                Some(u) => format!("{}: {} [{}]", m.id, m.name, u),
                None => format!("{}: {}", m.id, m.name),
            })
            .collect(),
        interpretation: g.interpretation.as_ref().map(|m| {
            let mut s = format!("score := {}", m.score);
            s.push_str(&format!("; achieved if {}", m.achieved_condition()));
            s.push_str(&format!("; at_risk if {}", m.at_risk_condition()));
            s
        }),
    }
}

/// Builds the bundle. `report`, when given, must come from this grid.
pub fn export_bundle(
    grid: &Grid,
    report: Option<&EvaluationReport>,
    roles: Option<&RoleConfig>,
    layout: Option<&LayoutedGrid>,
) -> Result<Bundle, BundleError> {
    if let Some(r) = report {
        check_report(grid, r)?;
    }
    let status: BTreeMap<&str, (GoalStatus, Option<f64>)> = report
        .map(|r| r.entries.iter().map(|e| (e.element.as_str(), (e.status, e.score))).collect())
        .unwrap_or_default();

    let mut levels: Vec<BundleLevel> = grid
        .levels
        .iter()
        .map(|l| BundleLevel {
            id: l.id.clone(),
            name: l.name.clone(),
            rank: l.rank,
            revision_interval_months: l.revision_interval_months,
        })
        .collect();
    levels.sort_by(|a, b| (a.rank, &a.id).cmp(&(b.rank, &b.id)));

    let mut nodes = Vec::new();
    for id in grid.element_ids() {
        let level = grid.level_of(&id).expect("bundle requires resolved levels");
        let st = status.get(id.as_str());
        let detail = if let Some(g) = grid.goal(&id) {
            NodeDetail::Element {
                description: g.description.clone(),
                priority: g.priority,
                realizes: None,
                context_factors: g.context_factors.clone(),
                assumptions: g.assumptions.clone(),
            }
        } else {
            let s = grid.strategy(&id).expect("element is goal or strategy");
            NodeDetail::Element {
                description: s.description.clone(),
                priority: None,
                realizes: Some(s.realizes.clone()),
                context_factors: s.context_factors.clone(),
                assumptions: s.assumptions.clone(),
            }
        };
        nodes.push(BundleNode {
            id: id.to_string(),
            kind: if grid.goal(&id).is_some() { "goal" } else { "strategy" },
            rank: level.rank,
            level: level.id.clone(),
            label: id.to_string(),
            detail,
            owner: None,
            status: st.map(|s| s.0),
            score: st.and_then(|s| s.1),
        });
        if let Some(g) = grid.gqm_for(&id) {
            nodes.push(BundleNode {
                id: gqm_key(&id),
                kind: "gqm",
                rank: level.rank,
                level: level.id.clone(),
                label: format!("GQM {id}"),
                detail: NodeDetail::Gqm(gqm_detail(g)),
                owner: Some(id.clone()),
                status: None,
                score: None,
            });
        }
    }

    let mut edges = Vec::new();
    let mut strategies: Vec<_> = grid.strategies.iter().collect();
    strategies.sort_by(|a, b| (&a.realizes, &a.id).cmp(&(&b.realizes, &b.id)));
    for s in strategies {
        edges.push(BundleEdge {
            from: s.realizes.to_string(),
            to: s.id.to_string(),
            kind: "realized_by",
            inheritance: None,
            resolution_note: None,
        });
    }
    for d in &grid.derivations {
        edges.push(BundleEdge {
            from: d.from_strategy.to_string(),
            to: d.to_goal.to_string(),
            kind: "leads_to",
            inheritance: Some(d.inheritance),
            resolution_note: None,
        });
    }
    for g in &grid.gqm_graphs {
        edges.push(BundleEdge {
            from: g.attached_to.to_string(),
            to: gqm_key(&g.attached_to),
            kind: "measured_by",
            inheritance: None,
            resolution_note: None,
        });
    }
    for r in &grid.relations {
        edges.push(BundleEdge {
            from: r.from_goal.to_string(),
            to: r.to_goal.to_string(),
            kind: match r.kind {
                RelationKind::Conflicts => "conflicts",
                RelationKind::Supports => "supports",
            },
            inheritance: None,
            resolution_note: r.resolution_note.clone(),
        });
    }

    let roles = roles
        .map(|rc| {
            rc.roles
                .keys()
                .map(|name| (name.clone(), rc.visible_ranks(grid, name).unwrap_or_default().into_iter().collect()))
                .collect()
        })
        .unwrap_or_default();

    let collapse_sets = grid
        .element_ids()
        .into_iter()
        .map(|id| {
            let set = collapse_set(grid, &id).expect("element exists");
            (id.to_string(), set.into_iter().collect())
        })
        .collect();

    Ok(Bundle {
        bundle_version: BUNDLE_VERSION,
        role: None,
        grid: BundleGrid { name: grid.metadata.name.clone(), version: grid.metadata.version.clone(), levels },
        nodes,
        edges,
        roles,
        collapse_sets,
        layout: layout.cloned(),
        report: report.cloned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::evaluate_grid;
    use crate::measurement::MeasurementDataset;
    use crate::text::parse_grid;

    const G: &str = r#"
grid "b" version "3";
level L0 "Top" rank 0;
level L1 "Mid" rank 1;
level L2 "Low" rank 2;
goal G1 at L0 { description "a"; }
strategy S1 realizes G1 { description "s"; leads_to G2; }
goal G2 at L1 { description "b"; }
strategy S2 realizes G2 { description "s"; leads_to G3; }
goal G3 at L2 { description "c"; }
gqm for G3 { interpretation { score := 1; } }
"#;

    #[test]
    fn empty_bundle() {
        let b = export_bundle(&Grid::default(), None, None, None).unwrap();
        let v: serde_json::Value = serde_json::from_str(&b.to_json()).unwrap();
        assert_eq!(v["bundle_version"], 1);
        assert_eq!(v["nodes"], serde_json::json!([]));
        assert_eq!(v["edges"], serde_json::json!([]));
        assert!(v.get("layout").is_none() && v.get("report").is_none());
    }

    #[test]
    fn statuses_and_roles() {
        let grid = parse_grid(G).unwrap();
        let at = "2011-01-01T00:00:00Z".parse().unwrap();
        let report = evaluate_grid(&grid, &MeasurementDataset::default(), at).unwrap();
        let roles = RoleConfig { roles: BTreeMap::from([("project".to_string(), RoleView { min_rank: Some(2), max_rank: None })]) };
        let b = export_bundle(&grid, Some(&report), Some(&roles), None).unwrap();
        let g3 = b.nodes.iter().find(|n| n.id == "G3").unwrap();
        assert_eq!(g3.status, Some(GoalStatus::Achieved));
        assert_eq!(b.roles["project"], vec![2]);
        let p = b.for_role("project").unwrap();
        assert!(p.nodes.iter().all(|n| n.rank >= 2));
        assert_eq!(p.nodes.len(), 2);
        assert!(b.for_role("nobody").is_none());
        assert_eq!(b.collapse_sets["S1"], vec!["G2", "G3", "S2", "gqm:G3"]);
    }

    #[test]
    fn mismatched_report_rejected() {
        let grid = parse_grid(G).unwrap();
        let at = "2011-01-01T00:00:00Z".parse().unwrap();
        let report = evaluate_grid(&grid, &MeasurementDataset::default(), at).unwrap();
        let other = parse_grid(&G.replace("gqm for G3", "gqm for G2")).unwrap();
        assert!(matches!(export_bundle(&other, Some(&report), None, None), Err(BundleError::ReportGridMismatch(_))));
    }
}
