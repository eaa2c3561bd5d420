//! Snapshot diffs and per-level revision schedules.

mod diff;

pub use diff::{diff, levels_touched, ChangeKind, ChangeSet, ElementRef, FieldChange, Modified};

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::id::Id;

/// Whole months from `from` to `to`, rounded down; negative if `to` is
/// earlier.
pub fn months_between(from: NaiveDate, to: NaiveDate) -> i64 {
    let mut m = (to.year() as i64 - from.year() as i64) * 12 + to.month() as i64 - from.month() as i64;
    if to.day() < from.day() {
        m -= 1;
    }
    m
}

/// A packaged grid version as seen by the schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRecord {
    pub id: String,
    pub created: NaiveDate,
    pub grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSchedule {
    pub level: Id,
    pub name: String,
    pub rank: u32,
    pub interval_months: Option<u32>,
    /// Most recent snapshot whose changes touched the level.
    pub last_snapshot: Option<String>,
    pub last_touched: Option<NaiveDate>,
    pub months_since: Option<i64>,
    pub overdue: bool,
}

/// The last snapshot (in the given order) that touched each level. The
/// first snapshot is compared against an empty grid.
pub fn attribute_snapshots(snapshots: &[SnapshotRecord]) -> BTreeMap<Id, (String, NaiveDate)> {
    let empty = Grid::default();
    let mut out = BTreeMap::new();
    let mut prev = &empty;
    for s in snapshots {
        let cs = diff(prev, &s.grid);
        for level in levels_touched(prev, &s.grid, &cs) {
            out.insert(level, (s.id.clone(), s.created));
        }
        prev = &s.grid;
    }
    out
}

/// Revision status of every level of `current`. `overrides` replaces the
/// grid's own interval for a level. A level with an interval is overdue when
/// more whole months than the interval have passed since a snapshot last
/// touched it, or when no snapshot ever did.
pub fn schedule_status(
    current: &Grid,
    snapshots: &[SnapshotRecord],
    overrides: &BTreeMap<Id, u32>,
    today: NaiveDate,
) -> Vec<LevelSchedule> {
    let touched = attribute_snapshots(snapshots);
    let mut levels: Vec<_> = current.levels.iter().collect();
    levels.sort_by(|a, b| (a.rank, &a.id).cmp(&(b.rank, &b.id)));
    levels
        .into_iter()
        .map(|l| {
            let interval = overrides.get(&l.id).copied().or(l.revision_interval_months);
            let last = touched.get(&l.id);
            let months_since = last.map(|(_, d)| months_between(*d, today));
            let overdue = match (interval, months_since) {
                (None, _) => false,
                (Some(_), None) => true,
                (Some(i), Some(m)) => m > i as i64,
            };
            LevelSchedule {
                level: l.id.clone(),
                name: l.name.clone(),
                rank: l.rank,
                interval_months: interval,
                last_snapshot: last.map(|(id, _)| id.clone()),
                last_touched: last.map(|(_, d)| *d),
                months_since,
                overdue,
            }
        })
        .collect()
}

pub fn render_schedule(rows: &[LevelSchedule]) -> String {
    let mut out = String::from("level\tname\tinterval\tlast snapshot\tmonths\tstatus\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.level,
            r.name,
            r.interval_months.map_or("-".to_string(), |i| i.to_string()),
            r.last_snapshot.as_deref().unwrap_or("-"),
            r.months_since.map_or("-".to_string(), |m| m.to_string()),
            if r.overdue { "OVERDUE" } else { "ok" }
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_grid;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn whole_months() {
        assert_eq!(months_between(d("2010-01-15"), d("2012-02-15")), 25);
        assert_eq!(months_between(d("2010-01-15"), d("2012-02-14")), 24);
        assert_eq!(months_between(d("2012-01-31"), d("2012-02-29")), 0);
        assert_eq!(months_between(d("2012-03-01"), d("2012-01-01")), -2);
    }

    const V1: &str = r#"
level MGMT "Management" rank 0 revise_every 24;
level SW "Software" rank 1 revise_every 12;
goal G1 at MGMT { description "grow"; }
strategy S1 realizes G1 { description "s"; leads_to G2; }
goal G2 at SW { description "ship"; }
"#;

    #[test]
    fn management_overdue_software_current() {
        let v1 = parse_grid(V1).unwrap();
        let v2 = parse_grid(&V1.replace("\"ship\"", "\"ship faster\"")).unwrap();
        let today = d("2012-02-15");
        let snaps = vec![
            SnapshotRecord { id: "v1-initial".into(), created: d("2010-01-15"), grid: v1 },
            SnapshotRecord { id: "v2-sw".into(), created: d("2011-08-15"), grid: v2.clone() },
        ];
        let rows = schedule_status(&v2, &snaps, &BTreeMap::new(), today);
        let flags: Vec<(&str, Option<i64>, bool)> =
            rows.iter().map(|r| (r.level.as_str(), r.months_since, r.overdue)).collect();
        assert_eq!(flags, vec![("MGMT", Some(25), true), ("SW", Some(6), false)]);

        let overrides = BTreeMap::from([(Id::unchecked("MGMT"), 36)]);
        assert!(schedule_status(&v2, &snaps, &overrides, today).iter().all(|r| !r.overdue));
        assert!(render_schedule(&rows).contains("OVERDUE"));
    }

    #[test]
    fn never_packaged_level_is_overdue() {
        let g = parse_grid(V1).unwrap();
        let rows = schedule_status(&g, &[], &BTreeMap::new(), d("2012-01-01"));
        assert!(rows.iter().all(|r| r.overdue && r.last_snapshot.is_none()));
    }
}
