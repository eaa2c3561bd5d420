use std::collections::BTreeSet;

use chrono::{TimeZone, Utc};
use gqms_core::analysis::{gap_analysis, validate, FindingCode};
use gqms_core::evaluation::{evaluate_grid, GoalStatus};
use gqms_core::measurement::{generate_plan, ingest, read_csv};
use gqms_core::text::{parse_grid, serialize_grid};

const SAMPLE: &str = include_str!("fixtures/sample_grid.gqms");
const CSV: &str = include_str!("fixtures/sample_measurements.csv");

#[test]
fn sample_has_three_levels_with_one_goal_and_strategy_each() {
    let grid = parse_grid(SAMPLE).unwrap();
    assert_eq!(grid.levels.len(), 3);
    for l in &grid.levels {
        let goals: Vec<_> = grid.goals.iter().filter(|g| g.level == l.id).collect();
        assert_eq!(goals.len(), 1, "level {}", l.id);
        let strategies = grid.strategies.iter().filter(|s| s.realizes == goals[0].id).count();
        assert_eq!(strategies, 1);
    }
    assert_eq!(grid.gqm_graphs.len(), 6);
}

#[test]
fn sample_is_valid_and_gap_free() {
    let grid = parse_grid(SAMPLE).unwrap();
    assert!(validate(&grid).is_empty(), "{:?}", validate(&grid));
    assert_eq!(gap_analysis(&grid, None).unwrap(), vec![]);
}

#[test]
fn dropping_any_gqm_block_gives_one_g3() {
    let grid = parse_grid(SAMPLE).unwrap();
    for i in 0..grid.gqm_graphs.len() {
        let mut g = grid.clone();
        let removed = g.gqm_graphs.remove(i);
        let f = gap_analysis(&g, None).unwrap();
        assert_eq!(f.len(), 1, "removing {}: {f:?}", removed.attached_to);
        assert_eq!(f[0].code, FindingCode::G3);
        assert_eq!(f[0].subjects, vec![removed.attached_to.to_string()]);
    }
}

#[test]
fn sample_serializes_stably() {
    let grid = parse_grid(SAMPLE).unwrap();
    let text = serialize_grid(&grid);
    assert_eq!(parse_grid(&text).unwrap(), grid);
    assert_eq!(serialize_grid(&parse_grid(&text).unwrap()), text);
}

#[test]
fn sample_data_achieves_everything() {
    let grid = parse_grid(SAMPLE).unwrap();
    let plan = generate_plan(&grid).unwrap();
    assert_eq!(plan.missing_count(), 0);
    let (rows, bad) = read_csv(CSV.as_bytes()).unwrap();
    assert!(bad.is_empty());
    let (data, errors) = ingest(&plan, &rows);
    assert!(errors.is_empty(), "{errors:?}");
    let metrics: BTreeSet<_> = data.series.keys().cloned().collect();
    assert_eq!(metrics.len(), 6);

    let at = Utc.with_ymd_and_hms(2026, 7, 1, 0, 0, 0).unwrap();
    let report = evaluate_grid(&grid, &data, at).unwrap();
    assert_eq!(report.entries.len(), 6);
    for e in &report.entries {
        assert_eq!(e.status, GoalStatus::Achieved, "{}", e.element);
    }
    assert_eq!(report.entries[0].element.as_str(), "G1");
}
