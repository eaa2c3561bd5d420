use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use gqms_core::grid::{Goal, Grid, Inheritance};
use gqms_core::maintenance::{diff, levels_touched, schedule_status, ChangeKind, ChangeSet, ElementRef, SnapshotRecord};
use gqms_core::testkit::random_grid;
use gqms_core::text::{parse_grid, serialize_grid};
use gqms_core::Id;

/// Applies one random edit and returns the element it targeted, if any.
fn edit(rng: &mut impl Rng, g: &mut Grid, n: usize) -> Option<ElementRef> {
    let r = |kind, key: String| Some(ElementRef { kind, key });
    match rng.random_range(0..8) {
        0 if !g.levels.is_empty() => {
            let l = g.levels[0].id.clone();
            let id = format!("N{n}");
            g.goals.push(Goal {
                id: Id::unchecked(id.as_str()),
                level: l,
                description: "added".into(),
                priority: None,
                context_factors: vec![],
                assumptions: vec![],
            });
            r(ChangeKind::Goal, id)
        }
        1 if !g.goals.is_empty() => {
            let i = rng.random_range(0..g.goals.len());
            g.goals[i].description.push_str(" (revised)");
            r(ChangeKind::Goal, g.goals[i].id.to_string())
        }
        2 if !g.strategies.is_empty() => {
            let i = rng.random_range(0..g.strategies.len());
            let s = g.strategies.remove(i);
            g.derivations.retain(|d| d.from_strategy != s.id);
            r(ChangeKind::Strategy, s.id.to_string())
        }
        3 if !g.derivations.is_empty() => {
            let i = rng.random_range(0..g.derivations.len());
            let d = &mut g.derivations[i];
            d.inheritance = Inheritance::ALL[(Inheritance::ALL.iter().position(|x| *x == d.inheritance).unwrap() + 1) % 3];
            r(ChangeKind::Strategy, d.from_strategy.to_string())
        }
        4 if !g.levels.is_empty() => {
            let i = rng.random_range(0..g.levels.len());
            let l = &mut g.levels[i];
            l.revision_interval_months = Some(l.revision_interval_months.unwrap_or(0) + 1);
            r(ChangeKind::Level, l.id.to_string())
        }
        5 if !g.gqm_graphs.is_empty() => {
            let i = rng.random_range(0..g.gqm_graphs.len());
            g.gqm_graphs[i].goal.purpose.push('!');
            r(ChangeKind::Gqm, format!("gqm:{}", g.gqm_graphs[i].attached_to))
        }
        6 if !g.relations.is_empty() => {
            let i = rng.random_range(0..g.relations.len());
            let rel = &mut g.relations[i];
            rel.resolution_note = match &rel.resolution_note {
                Some(_) => None,
                None => Some("resolved".into()),
            };
            r(ChangeKind::Relation, format!("{} {} {}", rel.from_goal, rel.kind.keyword(), rel.to_goal))
        }
        _ => {
            g.metadata.version = Some(format!("v{n}"));
            r(ChangeKind::Metadata, "grid".into())
        }
    }
}

fn swapped(cs: &ChangeSet) -> (Vec<ElementRef>, Vec<ElementRef>, BTreeSet<ElementRef>) {
    (cs.removed.clone(), cs.added.clone(), cs.modified.iter().map(|m| m.element.clone()).collect())
}

#[test]
fn diff_laws_on_edit_sequences() {
    let mut rng = StdRng::seed_from_u64(50);
    for _ in 0..100 {
        let mut versions = vec![random_grid(&mut rng, 20)];
        for n in 0..6 {
            let mut next = versions.last().unwrap().clone();
            let target = edit(&mut rng, &mut next, n).unwrap();
            next.normalize();
            let prev = versions.last().unwrap();
            let cs = diff(prev, &next);
            if *prev != next {
                assert!(cs.touched().contains(&target), "{target} missing from {cs:?}");
            }
            versions.push(next);
        }
        for a in &versions {
            assert!(diff(a, a).is_empty());
            for b in &versions {
                let ab = diff(a, b);
                let ba = diff(b, a);
                let (added, removed, modified) = swapped(&ba);
                assert_eq!(ab.added, added);
                assert_eq!(ab.removed, removed);
                assert_eq!(ab.modified.iter().map(|m| m.element.clone()).collect::<BTreeSet<_>>(), modified);
                for (m1, m2) in ab.modified.iter().zip(&ba.modified) {
                    for (f1, f2) in m1.fields.iter().zip(&m2.fields) {
                        assert_eq!((&f1.before, &f1.after), (&f2.after, &f2.before));
                    }
                }
                assert_eq!(ab.is_empty(), serialize_grid(a) == serialize_grid(b));
                assert_eq!(levels_touched(a, b, &ab), levels_touched(b, a, &ba));
            }
        }
        // What changes from A to C was touched on the way through B.
        for i in 0..versions.len() {
            for j in i..versions.len() {
                for k in j..versions.len() {
                    let ac = diff(&versions[i], &versions[k]).touched();
                    let mut via = diff(&versions[i], &versions[j]).touched();
                    via.extend(diff(&versions[j], &versions[k]).touched());
                    assert!(ac.is_subset(&via));
                }
            }
        }
    }
}

const V1: &str = r#"
level MGMT "Management" rank 0 revise_every 24;
level SW "Software" rank 1 revise_every 12;
goal G1 at MGMT { description "grow"; }
strategy S1 realizes G1 { description "s"; leads_to G2; }
goal G2 at SW { description "ship"; }
"#;

#[test]
fn schedule_scenario_has_one_overdue_level() {
    let d = |s: &str| s.parse::<NaiveDate>().unwrap();
    let v1 = parse_grid(V1).unwrap();
    let v2 = parse_grid(&V1.replace("\"ship\"", "\"ship monthly\"")).unwrap();
    let snaps = vec![
        SnapshotRecord { id: "v1".into(), created: d("2010-01-15"), grid: v1 },
        SnapshotRecord { id: "v2".into(), created: d("2011-08-15"), grid: v2.clone() },
    ];
    let rows = schedule_status(&v2, &snaps, &BTreeMap::new(), d("2012-02-15"));
    let overdue: Vec<&str> = rows.iter().filter(|r| r.overdue).map(|r| r.level.as_str()).collect();
    assert_eq!(overdue, vec!["MGMT"]);
    assert_eq!(rows[0].months_since, Some(25));
    assert_eq!(rows[1].months_since, Some(6));
}
