use std::fs;
use std::path::{Path, PathBuf};

use chrono::{TimeZone, Utc};
use gqms_core::evaluation::{evaluate_grid, EvaluationReport, GoalStatus};
use gqms_core::measurement::{generate_plan, ingest, read_csv};
use gqms_core::text::parse_grid;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn gqms(ws: &Path, args: &[&str]) -> Out {
    let mut full = vec!["gqms".to_string(), "--workspace".into(), ws.display().to_string()];
    full.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = gqms_cli::run(full, &mut out, &mut err);
    Out { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn ok(ws: &Path, args: &[&str]) -> Out {
    let o = gqms(ws, args);
    assert_eq!(o.code, 0, "gqms {args:?}\nstdout:\n{}\nstderr:\n{}", o.stdout, o.stderr);
    o
}

/// A workspace seeded with the sample grid, planned.
fn planned() -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path().join("ws");
    let sample = fixture("sample_grid.gqms");
    ok(&ws, &["init", "--from", sample.to_str().unwrap()]);
    ok(&ws, &["plan"]);
    (tmp, ws)
}

#[test]
fn init_refuses_non_empty_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path();
    ok(ws, &["init"]);
    for f in ["gqms.toml", "grid.gqms", "snapshots", "data", "reports"] {
        assert!(ws.join(f).exists(), "{f}");
    }
    let again = gqms(ws, &["init"]);
    assert_eq!(again.code, 1);
    assert!(again.stderr.contains("not empty"), "{}", again.stderr);
    // The template grid parses but has no top goal yet.
    let o = gqms(ws, &["set-goals"]);
    assert_eq!(o.code, 2, "{}{}", o.stdout, o.stderr);
    ok(ws, &["plan"]);
}

#[test]
fn commands_outside_a_workspace_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gqms(tmp.path(), &["set-goals"]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("gqms init"), "{}", o.stderr);
}

#[test]
fn characterize_records_configuration() {
    let (_tmp, ws) = planned();
    ok(
        &ws,
        &[
            "characterize",
            "--scope",
            "Software division",
            "--environment",
            "regulated market",
            "--interval",
            "BUS=36",
            "--role",
            "management=..0",
            "--role",
            "project=2..",
            "--responsible",
            "data collection=QA",
            "--done",
            "process_planned",
        ],
    );
    let text = fs::read_to_string(ws.join("gqms.toml")).unwrap();
    let config = gqms_cli::config::Config::parse(&text).unwrap();
    assert_eq!(config.scope.description, "Software division");
    assert_eq!(config.levels["BUS"].revise_every, Some(36));
    assert_eq!(config.roles["project"].min_rank, Some(2));
    assert!(config.checklist.process_planned && !config.checklist.training_provided);

    let bad = gqms(&ws, &["characterize", "--done", "nonsense"]);
    assert_eq!(bad.code, 1);
    let bad = gqms(&ws, &["characterize", "--role", "x=3..1"]);
    assert_eq!(bad.code, 1);
}

#[test]
fn broken_grid_reports_line_numbers() {
    let (_tmp, ws) = planned();
    let text = fs::read_to_string(ws.join("grid.gqms")).unwrap();
    fs::write(ws.join("grid.gqms"), text.replace("goal G2 at SW {", "goal G2 at SW {{")).unwrap();
    let o = gqms(&ws, &["set-goals"]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("grid.gqms:"), "{}", o.stderr);
    assert!(o.stderr.lines().next().unwrap().split(':').nth(1).unwrap().parse::<u32>().is_ok(), "{}", o.stderr);
}

#[test]
fn set_goals_finds_gaps_and_writes_reports() {
    let (_tmp, ws) = planned();
    ok(&ws, &["set-goals"]);
    let text = fs::read_to_string(ws.join("grid.gqms")).unwrap();
    let gqm_g3 = text.find("gqm for G3").unwrap();
    let end = gqm_g3 + text[gqm_g3..].find("\n}\n").unwrap() + 3;
    let edited = format!("{}{}", &text[..gqm_g3], &text[end..]);
    fs::write(ws.join("grid.gqms"), edited).unwrap();
    let o = gqms(&ws, &["--format", "json", "set-goals"]);
    assert_eq!(o.code, 2, "{}", o.stdout);
    let findings: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    let codes: Vec<&str> = findings.as_array().unwrap().iter().map(|f| f["code"].as_str().unwrap()).collect();
    assert_eq!(codes, ["G3"]);
    let stored: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ws.join("reports/findings.json")).unwrap()).unwrap();
    assert_eq!(stored, findings);
    assert!(ws.join("reports/findings.txt").is_file());
}

#[test]
fn ingest_requires_a_plan() {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path();
    let sample = fixture("sample_grid.gqms");
    ok(ws, &["init", "--from", sample.to_str().unwrap()]);
    let o = gqms(ws, &["ingest", fixture("sample_measurements.csv").to_str().unwrap()]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("gqms plan"), "{}", o.stderr);
}

#[test]
fn ingest_merges_and_rejects_duplicates() {
    let (tmp, ws) = planned();
    let csv = fixture("sample_measurements.csv");
    let first = ok(&ws, &["ingest", csv.to_str().unwrap()]);
    assert!(first.stdout.contains("accepted 17"), "{}", first.stdout);
    let stored = fs::read_to_string(ws.join("data/measurements.csv")).unwrap();

    let again = gqms(&ws, &["ingest", csv.to_str().unwrap()]);
    assert_eq!(again.code, 2);
    assert!(again.stdout.contains("duplicate timestamp"), "{}", again.stdout);
    assert!(again.stdout.contains("accepted 0"), "{}", again.stdout);
    assert_eq!(fs::read_to_string(ws.join("data/measurements.csv")).unwrap(), stored);

    let bad = tmp.path().join("bad.csv");
    fs::write(
        &bad,
        "metric_id,timestamp,value\nCSAT,2026-09-30T00:00:00Z,90\nNOPE,2026-09-30T00:00:00Z,1\nROLLOUT,2026-09-30T00:00:00Z,7\nCSAT,yesterday,1\n",
    )
    .unwrap();
    let o = gqms(&ws, &["--format", "json", "ingest", bad.to_str().unwrap()]);
    assert_eq!(o.code, 2);
    let summary: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(summary["accepted"], 1);
    let kinds: Vec<(u64, &str)> = summary["errors"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["row"].as_u64().unwrap(), e["kind"].as_str().unwrap()))
        .collect();
    assert_eq!(kinds, [(2, "unknown_metric"), (3, "type_mismatch"), (4, "bad_timestamp")]);
    let stored: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ws.join("reports/ingest_errors.json")).unwrap()).unwrap();
    assert_eq!(stored, summary["errors"]);
}

#[test]
fn analyze_matches_direct_evaluation() {
    let (_tmp, ws) = planned();
    let csv = fixture("sample_measurements.csv");
    ok(&ws, &["ingest", csv.to_str().unwrap()]);
    let o = ok(&ws, &["--today", "2026-12-31", "analyze"]);
    assert!(o.stdout.contains("no findings"), "{}", o.stdout);

    let stored: EvaluationReport =
        serde_json::from_str(&fs::read_to_string(ws.join("reports/report.json")).unwrap()).unwrap();
    let grid = parse_grid(&fs::read_to_string(fixture("sample_grid.gqms")).unwrap()).unwrap();
    let plan = generate_plan(&grid).unwrap();
    let (rows, _) = read_csv(fs::File::open(&csv).unwrap()).unwrap();
    let (data, _) = ingest(&plan, &rows);
    let direct = evaluate_grid(&grid, &data, Utc.with_ymd_and_hms(2026, 12, 31, 0, 0, 0).unwrap()).unwrap();
    assert_eq!(stored, direct);
    assert!(stored.entries.iter().all(|e| e.status == GoalStatus::Achieved));
    for f in ["report.txt", "coverage.json", "findings.json"] {
        assert!(ws.join("reports").join(f).is_file(), "{f}");
    }
}

#[test]
fn analyze_without_data_flags_unknown_goals() {
    let (_tmp, ws) = planned();
    let o = gqms(&ws, &["--today", "2026-12-31", "--format", "json", "analyze"]);
    assert_eq!(o.code, 2, "{}", o.stderr);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    let entries = v["report"]["entries"].as_array().unwrap();
    assert!(entries.iter().all(|e| e["status"] == "unknown"), "{}", o.stdout);
    assert!(v["findings"].as_array().unwrap().iter().all(|f| f["code"] == "A1"));
}

#[test]
fn package_diff_and_status() {
    let (_tmp, ws) = planned();
    ok(&ws, &["ingest", fixture("sample_measurements.csv").to_str().unwrap()]);
    ok(&ws, &["--today", "2026-01-15", "analyze"]);
    let o = ok(&ws, &["--today", "2026-01-15", "package", "baseline"]);
    assert!(o.stdout.contains("v1-baseline"));
    let snap = ws.join("snapshots/v1-baseline");
    for f in ["grid.gqms", "report.json", "meta.json"] {
        assert!(snap.join(f).is_file(), "{f}");
    }
    assert_eq!(gqms(&ws, &["package", "bad label"]).code, 1);

    let text = fs::read_to_string(ws.join("grid.gqms")).unwrap();
    fs::write(
        ws.join("grid.gqms"),
        text.replace("Review every change before merge", "Review every change within a day"),
    )
    .unwrap();
    let d = ok(&ws, &["--format", "json", "diff", "v1"]);
    let changes: serde_json::Value = serde_json::from_str(&d.stdout).unwrap();
    assert_eq!(changes["modified"].as_array().unwrap().len(), 1, "{}", d.stdout);
    assert_eq!(changes["modified"][0]["element"]["key"], "G3", "{}", d.stdout);
    ok(&ws, &["--today", "2026-02-01", "package", "reviews"]);
    let same = ok(&ws, &["diff", "v2", "current"]);
    assert_eq!(same.stdout, "no changes\n");
    ok(&ws, &["diff", "v1-baseline", "v2"]);
    assert_eq!(gqms(&ws, &["diff", "v9"]).code, 1);

    // BUS (24 months) was last touched by v1; PRJ has no interval.
    let fine = ok(&ws, &["--today", "2026-12-01", "--format", "json", "status"]);
    let rows: serde_json::Value = serde_json::from_str(&fine.stdout).unwrap();
    assert_eq!(rows[0]["last_snapshot"], "v1-baseline");
    assert_eq!(rows[2]["last_snapshot"], "v2-reviews");
    ok(&ws, &["characterize", "--interval", "BUS=6"]);
    let late = gqms(&ws, &["--today", "2026-12-01", "status"]);
    assert_eq!(late.code, 2);
    let bus = late.stdout.lines().find(|l| l.starts_with("BUS")).unwrap();
    assert!(bus.ends_with("OVERDUE"), "{}", late.stdout);
}

#[test]
fn export_formats_and_roles() {
    let (_tmp, ws) = planned();
    ok(&ws, &["characterize", "--role", "management=..0"]);
    let dot = ok(&ws, &["export", "dot", "--out", "-"]);
    assert!(dot.stdout.starts_with("digraph"), "{}", dot.stdout);
    ok(&ws, &["export", "svg"]);
    let svg = fs::read_to_string(ws.join("reports/grid.svg")).unwrap();
    assert!(svg.contains("<svg"));

    let full: serde_json::Value = serde_json::from_str(&ok(&ws, &["export", "bundle", "--out", "-"]).stdout).unwrap();
    let mgmt: serde_json::Value =
        serde_json::from_str(&ok(&ws, &["export", "bundle", "--role", "management", "--out", "-"]).stdout).unwrap();
    let count = |v: &serde_json::Value| v["nodes"].as_array().unwrap().len();
    assert!(count(&mgmt) < count(&full));
    assert_eq!(gqms(&ws, &["export", "bundle", "--role", "nobody"]).code, 1);

    let collapsed = ok(&ws, &["export", "dot", "--collapse", "G2", "--hide-gqm", "--out", "-"]);
    assert!(collapsed.stdout.contains("G2") && !collapsed.stdout.contains("\"G3\""), "{}", collapsed.stdout);
    assert_eq!(gqms(&ws, &["export", "dot", "--collapse", "NOPE"]).code, 1);
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(gqms(tmp.path(), &["frobnicate"]).code, 1);
    assert_eq!(gqms(tmp.path(), &["ingest"]).code, 1);
    assert_eq!(gqms(tmp.path(), &["--today", "2026-13-01", "status"]).code, 1);
    assert_eq!(gqms(tmp.path(), &["--help"]).code, 0);
}
