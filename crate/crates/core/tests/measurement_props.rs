use chrono::{Days, NaiveDate};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

use gqms_core::measurement::{
    coverage_check, coverage_check_with, expected_observations, generate_plan, ingest, read_csv, write_rows, Cadence,
    DateWindow, IngestErrorKind, RawRow,
};
use gqms_core::testkit::{oracle, random_dataset, random_grid};
use gqms_core::Exec;

fn random_window(rng: &mut impl Rng) -> DateWindow {
    let base = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let start = base + Days::new(rng.random_range(0..1500));
    let end = start + Days::new(rng.random_range(0..800));
    DateWindow::new(start, end).unwrap()
}

#[test]
fn expected_observations_match_day_walk() {
    let mut rng = StdRng::seed_from_u64(40);
    for _ in 0..300 {
        let w = random_window(&mut rng);
        for c in Cadence::ALL {
            assert_eq!(expected_observations(c, w), oracle::brute_expected(c, w), "{c} {w:?}");
        }
    }
}

#[test]
fn plan_matches_oracle() {
    let mut rng = StdRng::seed_from_u64(41);
    for _ in 0..100 {
        let grid = random_grid(&mut rng, 30);
        let plan = generate_plan(&grid).unwrap();
        let rows: Vec<_> = plan.rows.iter().map(|r| (r.rank, r.metric.clone(), r.serves.clone(), r.missing)).collect();
        assert_eq!(rows, oracle::brute_plan_rows(&grid));
    }
}

#[test]
fn ingest_is_idempotent_through_csv() {
    let mut rng = StdRng::seed_from_u64(42);
    for _ in 0..100 {
        let grid = random_grid(&mut rng, 30);
        let plan = generate_plan(&grid).unwrap();
        let data = random_dataset(&mut rng, &grid);
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let (rows, bad) = read_csv(buf.as_slice()).unwrap();
        assert!(bad.is_empty());
        let (again, errors) = ingest(&plan, &rows);
        assert!(errors.is_empty(), "{errors:?}");
        assert_eq!(again, data);
        // Ingesting the same rows twice adds nothing but duplicate errors.
        let doubled: Vec<RawRow> = rows.iter().chain(rows.iter()).cloned().collect();
        let (twice, errors) = ingest(&plan, &doubled);
        assert_eq!(twice, data);
        assert_eq!(errors.len(), rows.len());
        assert!(errors.iter().all(|e| matches!(e.kind, IngestErrorKind::DuplicateTimestamp { .. })));
    }
}

#[test]
fn bad_rows_are_reported_not_fatal() {
    let mut rng = StdRng::seed_from_u64(43);
    for _ in 0..50 {
        let grid = random_grid(&mut rng, 30);
        let plan = generate_plan(&grid).unwrap();
        let metrics: Vec<_> = plan.rows.iter().collect();
        let mut rows = Vec::new();
        let mut expected_bad = 0;
        for i in 0..20 {
            let good_ts = format!("2026-01-{:02}T00:00:00Z", i + 1);
            let choice = rng.random_range(0..4);
            let row = match (choice, metrics.choose(&mut rng)) {
                (0, _) | (_, None) => {
                    expected_bad += 1;
                    RawRow::new(i + 1, "NO_SUCH_METRIC", &good_ts, "1")
                }
                (1, Some(m)) => {
                    expected_bad += 1;
                    RawRow::new(i + 1, m.metric.as_str(), "yesterday", "1")
                }
                (2, Some(m)) => {
                    expected_bad += 1;
                    RawRow::new(i + 1, m.metric.as_str(), &good_ts, "not-a-value")
                }
                (_, Some(m)) => {
                    let v = if m.kind == gqms_core::measurement::ValueKind::Boolean { "true" } else { "3.5" };
                    RawRow::new(i + 1, m.metric.as_str(), &good_ts, v)
                }
            };
            rows.push(row);
        }
        let (data, errors) = ingest(&plan, &rows);
        assert_eq!(errors.len(), expected_bad);
        assert_eq!(data.len() + errors.len(), rows.len());
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let (back, _) = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
    }
}

#[test]
fn coverage_ratio_is_bounded_and_mode_independent() {
    let mut rng = StdRng::seed_from_u64(44);
    for _ in 0..100 {
        let grid = random_grid(&mut rng, 30);
        let plan = generate_plan(&grid).unwrap();
        let data = random_dataset(&mut rng, &grid);
        let w = random_window(&mut rng);
        let cov = coverage_check(&plan, &data, w);
        assert_eq!(cov, coverage_check_with(&plan, &data, w, Exec::Sequential));
        for (c, row) in cov.iter().zip(&plan.rows) {
            assert_eq!(c.metric, row.metric);
            assert_eq!(c.unplanned, row.collection.is_none());
            let inside = data.observations(&row.metric).iter().filter(|o| w.contains(o.timestamp.date_naive())).count();
            assert_eq!(c.actual, inside);
            match (c.expected, c.ratio) {
                (Some(e), Some(r)) => {
                    assert!((0.0..=1.0).contains(&r));
                    assert!((r - (inside as f64 / e as f64).min(1.0)).abs() < 1e-12);
                }
                (None, None) => assert!(c.unplanned),
                other => panic!("inconsistent coverage {other:?}"),
            }
        }
    }
}
