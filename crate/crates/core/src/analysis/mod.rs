//! Structural validation, gap analysis and conflict detection.

mod finding;
mod gaps;

pub use finding::{exit_code, render_findings, sort_findings, Finding, FindingCode, Severity};
pub use gaps::{gap_analysis, Asset, AssetInventory, GapError};

use crate::grid::{check_structure, Grid, GridError, RelationKind};

fn code_for(error: &GridError) -> FindingCode {
    match error {
        GridError::InvalidId { .. } => FindingCode::InvalidId,
        GridError::DuplicateId { .. } => FindingCode::DuplicateId,
        GridError::DuplicateLevelName { .. } => FindingCode::DuplicateLevelName,
        GridError::DuplicateMetadata => FindingCode::DuplicateMetadata,
        GridError::EmptyText { .. } => FindingCode::EmptyText,
        GridError::InvalidPriority { .. } => FindingCode::InvalidPriority,
        GridError::DanglingReference { .. } => FindingCode::DanglingReference,
        GridError::UpwardDerivation { .. } => FindingCode::UpwardDerivation,
        GridError::DuplicateLink { .. } => FindingCode::DuplicateLink,
        GridError::SelfRelation { .. } => FindingCode::SelfRelation,
        GridError::CycleDetected { .. } => FindingCode::Cycle,
        GridError::DuplicateAttachment { .. } => FindingCode::DuplicateAttachment,
        GridError::MetricWithoutQuestion { .. } => FindingCode::MetricWithoutQuestion,
        GridError::MissingUnit { .. } => FindingCode::MissingUnit,
        GridError::NotAChild { .. } => FindingCode::NotAChild,
        GridError::Type { .. } => FindingCode::TypeError,
    }
}

fn subjects_for(error: &GridError) -> Vec<String> {
    match error {
        GridError::InvalidId { id } => vec![id.clone()],
        GridError::DuplicateId { id } => vec![id.to_string()],
        GridError::DuplicateLevelName { name } => vec![name.clone()],
        GridError::DuplicateMetadata => vec![],
        GridError::EmptyText { owner, .. } => vec![owner.clone()],
        GridError::InvalidPriority { owner } => vec![owner.to_string()],
        GridError::DanglingReference { id, from, .. } => vec![from.clone(), id.to_string()],
        GridError::UpwardDerivation { link } => vec![link.from_strategy.to_string(), link.to_goal.to_string()],
        GridError::DuplicateLink { from, to } => vec![from.to_string(), to.to_string()],
        GridError::SelfRelation { goal } => vec![goal.to_string()],
        GridError::CycleDetected { path } => path.iter().map(ToString::to_string).collect(),
        GridError::DuplicateAttachment { element } => vec![element.to_string()],
        GridError::MetricWithoutQuestion { metric } | GridError::MissingUnit { metric } => vec![metric.to_string()],
        GridError::NotAChild { element, child } => vec![element.to_string(), child.to_string()],
        GridError::Type { element, .. } => vec![element.to_string()],
    }
}

pub fn finding_for(error: &GridError) -> Finding {
    Finding::new(code_for(error), subjects_for(error), error.to_string())
}

/// Structural findings: every invariant violation as an error, then
/// `W_NO_TOP_GOAL` when no goal sits on a rank-0 level.
pub fn validate(grid: &Grid) -> Vec<Finding> {
    let mut out: Vec<Finding> = check_structure(grid).iter().map(|l| finding_for(&l.error)).collect();
    if grid.top_goals().is_empty() {
        out.push(Finding::new(FindingCode::NoTopGoal, vec![], "no goal on a rank-0 level"));
    }
    out.sort_by_key(|f| f.severity);
    out
}

/// C1 for every conflict without a resolution note.
pub fn detect_conflicts(grid: &Grid) -> Vec<Finding> {
    let mut out: Vec<Finding> = grid
        .relations
        .iter()
        .filter(|r| r.kind == RelationKind::Conflicts)
        .filter(|r| r.resolution_note.as_deref().is_none_or(|n| n.trim().is_empty()))
        .map(|r| {
            Finding::new(
                FindingCode::C1,
                vec![r.from_goal.to_string(), r.to_goal.to_string()],
                format!("conflict between {} and {} has no resolution note", r.from_goal, r.to_goal),
            )
        })
        .collect();
    sort_findings(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GoalRelation, Grid};
    use crate::id::id;
    use crate::measurement::GqmGraph;
    use crate::text::parse_grid;

    const SMALL: &str = r#"
level L0 "Top" rank 0;
goal G1 at L0 { description "a"; }
goal G2 at L0 { description "b"; }
"#;

    #[test]
    fn empty_grid_lacks_top_goal() {
        let f = validate(&Grid::default());
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].code, FindingCode::NoTopGoal);
    }

    #[test]
    fn duplicate_attachment() {
        let mut grid = parse_grid(SMALL).unwrap();
        grid.gqm_graphs.push(GqmGraph::new(id("G1")));
        grid.gqm_graphs.push(GqmGraph::new(id("G1")));
        let codes: Vec<_> = validate(&grid).iter().map(|f| f.code).collect();
        assert_eq!(codes, vec![FindingCode::DuplicateAttachment]);
    }

    #[test]
    fn errors_precede_warnings() {
        let mut grid = Grid::default();
        grid.gqm_graphs.push(GqmGraph::new(id("X")));
        let f = validate(&grid);
        assert_eq!(f.first().unwrap().severity, Severity::Error);
        assert_eq!(f.last().unwrap().code, FindingCode::NoTopGoal);
    }

    #[test]
    fn conflicts() {
        let mut grid = parse_grid(SMALL).unwrap();
        assert!(detect_conflicts(&grid).is_empty());
        grid.relations.push(GoalRelation {
            from_goal: id("G1"),
            to_goal: id("G2"),
            kind: RelationKind::Conflicts,
            resolution_note: None,
        });
        let f = detect_conflicts(&grid);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].code, FindingCode::C1);

        grid.relations[0].resolution_note = Some("G1 first".into());
        grid.relations.push(GoalRelation {
            from_goal: id("G2"),
            to_goal: id("G1"),
            kind: RelationKind::Supports,
            resolution_note: None,
        });
        assert!(detect_conflicts(&grid).is_empty());
    }
}
