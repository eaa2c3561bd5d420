use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::finding::{sort_findings, Finding, FindingCode};
use crate::error::PreconditionViolated;
use crate::grid::{check_structure, Grid, GridError};
use crate::id::Id;

/// A pre-existing goal, strategy or measure, optionally mapped onto the grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Asset {
    pub label: String,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub maps_to: Option<Id>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetInventory {
    #[serde(default)]
    pub goals: Vec<Asset>,
    #[serde(default)]
    pub strategies: Vec<Asset>,
    #[serde(default)]
    pub metrics: Vec<Asset>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GapError {
    #[error(transparent)]
    Precondition(#[from] PreconditionViolated),
    #[error("inventory asset `{asset}` maps to unknown {expected} `{target}`")]
    UnresolvedMapping { asset: String, expected: &'static str, target: Id },
}

impl AssetInventory {
    /// Every mapping must name an element of the matching kind.
    pub fn check(&self, grid: &Grid) -> Result<(), GapError> {
        let metric_ids: BTreeSet<&Id> = grid.metrics().map(|(_, m)| &m.id).collect();
        let groups: [(&[Asset], &'static str, &dyn Fn(&Id) -> bool); 3] = [
            (&self.goals, "goal", &|id| grid.goal(id).is_some()),
            (&self.strategies, "strategy", &|id| grid.strategy(id).is_some()),
            (&self.metrics, "metric", &|id| metric_ids.contains(id)),
        ];
        for (assets, expected, resolves) in groups {
            for a in assets {
                if let Some(target) = &a.maps_to {
                    if !resolves(target) {
                        return Err(GapError::UnresolvedMapping {
                            asset: a.label.clone(),
                            expected,
                            target: target.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Runs rules G1 to G7. Output is sorted by (rule, subjects).
pub fn gap_analysis(grid: &Grid, inventory: Option<&AssetInventory>) -> Result<Vec<Finding>, GapError> {
    let errors: Vec<GridError> = check_structure(grid).into_iter().map(|l| l.error).collect();
    if !errors.is_empty() {
        return Err(PreconditionViolated { errors }.into());
    }
    if let Some(inv) = inventory {
        inv.check(grid)?;
    }

    let children = grid.child_map();
    let bottom = grid.bottom_rank();
    let mut out = Vec::new();
    let one = |code, id: &Id, msg: String| Finding::new(code, vec![id.to_string()], msg);

    for g in &grid.goals {
        let rank = grid.rank_of(&g.id);
        if children[&g.id].is_empty() && rank != bottom {
            out.push(one(FindingCode::G1, &g.id, format!("goal {} has no realizing strategy", g.id)));
        }
    }

    for s in &grid.strategies {
        let rank = grid.rank_of(&s.id);
        let lower_exists = matches!((rank, bottom), (Some(r), Some(b)) if b > r);
        if children[&s.id].is_empty() && lower_exists {
            out.push(one(FindingCode::G2, &s.id, format!("strategy {} leads to no goal", s.id)));
        }
    }

    for e in grid.element_ids() {
        if grid.gqm_for(&e).is_none() {
            out.push(one(FindingCode::G3, &e, format!("{e} has no GQM graph")));
        }
    }

    let mut referenced: BTreeSet<Id> = BTreeSet::new();
    for graph in &grid.gqm_graphs {
        if let Some(model) = &graph.interpretation {
            referenced.extend(model.references().metrics);
        }
        for q in &graph.questions {
            if !graph.metrics.iter().any(|m| m.answers.contains(&q.id)) {
                out.push(Finding::new(
                    FindingCode::G4,
                    vec![graph.attached_to.to_string(), q.id.to_string()],
                    format!("question {} of {} has no metric", q.id, graph.attached_to),
                ));
            }
        }
    }
    for (_, m) in grid.metrics() {
        if !referenced.contains(&m.id) {
            out.push(one(FindingCode::G5, &m.id, format!("metric {} is not used by any interpretation model", m.id)));
        }
    }

    let mut reached: BTreeSet<&Id> = BTreeSet::new();
    let tops = grid.top_goals();
    let mut stack: Vec<&Id> = tops.iter().collect();
    while let Some(n) = stack.pop() {
        if reached.insert(n) {
            stack.extend(children[n].iter());
        }
    }
    for e in grid.element_ids() {
        if !reached.contains(&e) {
            out.push(one(FindingCode::G6, &e, format!("{e} is unreachable from every top-level goal")));
        }
    }

    if let Some(inv) = inventory {
        for (assets, kind) in [(&inv.goals, "goal"), (&inv.strategies, "strategy"), (&inv.metrics, "metric")] {
            for a in assets.iter().filter(|a| a.maps_to.is_none()) {
                out.push(Finding::new(
                    FindingCode::G7,
                    vec![a.label.clone()],
                    format!("existing {kind} `{}` is not mapped to the grid", a.label),
                ));
            }
        }
    }

    sort_findings(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::id::id;
    use crate::text::parse_grid;

    const GRID: &str = r#"
level L0 "Top" rank 0;
level L1 "Mid" rank 1;
goal G1 at L0 { description "top"; }
goal G2 at L1 { description "mid"; }
goal G9 at L1 { description "orphan"; }
strategy S1 realizes G1 { description "s"; }
gqm for G1 {
  question Q1 "q?";
  question Q2 "unanswered?";
  metric M1 "m" { kind boolean; answers Q1; }
  metric M2 "unused" { kind boolean; answers Q1; }
  interpretation { score := last(M1); }
}
"#;

    fn codes(f: &[Finding]) -> Vec<(String, Vec<String>)> {
        f.iter().map(|f| (f.code.to_string(), f.subjects.clone())).collect()
    }

    #[test]
    fn every_rule_fires() {
        let grid = parse_grid(GRID).unwrap();
        let inv = AssetInventory {
            goals: vec![
                Asset { label: "old-goal".into(), text: String::new(), maps_to: Some(id("G1")) },
                Asset { label: "legacy".into(), text: String::new(), maps_to: None },
            ],
            ..Default::default()
        };
        let f = gap_analysis(&grid, Some(&inv)).unwrap();
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(
            codes(&f),
            vec![
                ("G2".into(), s(&["S1"])),
                ("G3".into(), s(&["G2"])),
                ("G3".into(), s(&["G9"])),
                ("G3".into(), s(&["S1"])),
                ("G4".into(), s(&["G1", "Q2"])),
                ("G5".into(), s(&["M2"])),
                ("G6".into(), s(&["G2"])),
                ("G6".into(), s(&["G9"])),
                ("G7".into(), s(&["legacy"])),
            ]
        );
    }

    #[test]
    fn bottom_goals_need_no_strategy() {
        let grid = parse_grid(GRID).unwrap();
        let f = gap_analysis(&grid, None).unwrap();
        assert!(f.iter().all(|f| f.code != FindingCode::G1));
        assert!(f.iter().all(|f| f.code != FindingCode::G7));
    }

    #[test]
    fn dangling_inventory_mapping() {
        let grid = parse_grid(GRID).unwrap();
        let inv = AssetInventory {
            metrics: vec![Asset { label: "x".into(), text: String::new(), maps_to: Some(id("G1")) }],
            ..Default::default()
        };
        assert!(matches!(gap_analysis(&grid, Some(&inv)), Err(GapError::UnresolvedMapping { .. })));
    }

    #[test]
    fn rejects_invalid_grid() {
        let mut grid = parse_grid(GRID).unwrap();
        grid.strategies[0].realizes = id("NOPE");
        assert!(matches!(gap_analysis(&grid, None), Err(GapError::Precondition(_))));
    }
}
