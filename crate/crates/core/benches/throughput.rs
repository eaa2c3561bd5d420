use chrono::{NaiveDate, TimeZone, Utc};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::rngs::StdRng;
use rand::SeedableRng;

use gqms_core::evaluation::evaluate_grid_with;
use gqms_core::layout::{layout_with, LayoutOptions};
use gqms_core::measurement::{coverage_check_with, generate_plan, DateWindow};
use gqms_core::testkit::{gap_free_grid, random_dataset, random_grid_with, GridParams};
use gqms_core::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate_grid");
    let at = Utc.with_ymd_and_hms(2026, 7, 1, 0, 0, 0).unwrap();
    for width in [4, 16] {
        let mut rng = StdRng::seed_from_u64(width as u64);
        let grid = gap_free_grid(&mut rng, 6, width);
        let data = random_dataset(&mut rng, &grid);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, grid.element_ids().len()), &exec, |b, &exec| {
                b.iter(|| evaluate_grid_with(&grid, &data, at, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn coverage(c: &mut Criterion) {
    let mut group = c.benchmark_group("coverage_check");
    let window = DateWindow::new(NaiveDate::from_ymd_opt(2026, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2026, 12, 31).unwrap()).unwrap();
    let mut rng = StdRng::seed_from_u64(7);
    let grid = gap_free_grid(&mut rng, 6, 20);
    let plan = generate_plan(&grid).unwrap();
    let data = random_dataset(&mut rng, &grid);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, plan.rows.len()), |b| {
            b.iter(|| coverage_check_with(&plan, &data, window, exec))
        });
    }
    group.finish();
}

fn layout(c: &mut Criterion) {
    let mut group = c.benchmark_group("layout");
    let mut rng = StdRng::seed_from_u64(9);
    // Small rows so the exact refinement runs and dominates.
    let params = GridParams { max_elements: 24, max_levels: 3, relations: false, ..GridParams::default() };
    let grid = random_grid_with(&mut rng, &params);
    let opts = LayoutOptions { show_gqm: true, ..LayoutOptions::default() };
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, grid.element_ids().len()), |b| {
            b.iter(|| layout_with(&grid, &opts, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, evaluation, coverage, layout);
criterion_main!(benches);
