use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use gqms_core::analysis::{
    detect_conflicts, exit_code, gap_analysis, render_findings, sort_findings, validate, AssetInventory, Finding,
};
use gqms_core::evaluation::{evaluate_grid, identify_new_gaps, EvaluationReport};
use gqms_core::layout::{layout, to_dot, to_svg, LayoutOptions};
use gqms_core::maintenance::{diff, render_schedule, schedule_status};
use gqms_core::measurement::{
    coverage_check, generate_plan, ingest, read_csv, DateWindow, MeasurementDataset, MeasurementPlan, MetricCoverage,
};
use gqms_core::text::{export_bundle, render_diagnostics, RoleView, HEADER};
use gqms_core::{Grid, Id};
use serde::Serialize;

use crate::config::{Checklist, Config, LevelConfig};
use crate::error::CliError;
use crate::workspace::Workspace;
use crate::{Cli, Command, ExportKind, Format};

struct Ctx<'a> {
    ws: Workspace,
    format: Format,
    today: Option<NaiveDate>,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn today(&self) -> NaiveDate {
        self.today.unwrap_or_else(|| chrono::Local::now().date_naive())
    }

    /// Midnight UTC of `--today`, or the current instant.
    fn now(&self) -> DateTime<Utc> {
        match self.today {
            Some(d) => d.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc(),
            None => Utc::now(),
        }
    }

    /// Prints `text` or pretty JSON depending on `--format`.
    fn emit<T: Serialize>(&mut self, text: &str, value: &T) -> io::Result<()> {
        match self.format {
            Format::Text => self.out.write_all(text.as_bytes()),
            Format::Json => writeln!(self.out, "{}", json(value)),
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

pub(crate) fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let mut ctx = Ctx { ws: Workspace::new(&cli.workspace), format: cli.format, today: cli.today, out, err };
    match &cli.command {
        Command::Init { from } => init(&mut ctx, from.as_deref()),
        Command::Characterize { scope, environment, intervals, roles, responsible, done, inventory } => {
            let args = CharacterizeArgs { scope, environment, intervals, roles, responsible, done, inventory };
            characterize(&mut ctx, args)
        }
        Command::SetGoals => set_goals(&mut ctx),
        Command::Plan => plan(&mut ctx),
        Command::Ingest { files } => ingest_files(&mut ctx, files),
        Command::Analyze { since } => analyze(&mut ctx, *since),
        Command::Package { label } => package(&mut ctx, label),
        Command::Diff { from, to } => diff_versions(&mut ctx, from, to),
        Command::Status => status(&mut ctx),
        Command::Export { kind, role, collapse, hide_gqm, out } => {
            export(&mut ctx, *kind, role.as_deref(), collapse, *hide_gqm, out.as_deref())
        }
        Command::Serve { port, host, assets } => {
            ctx.ws.grid()?;
            let assets = assets.clone().unwrap_or_else(|| ctx.ws.path("viewer"));
            crate::serve::run(ctx.ws.clone(), host, *port, assets, ctx.err)?;
            Ok(0)
        }
    }
}

const EMPTY_GRID: &str = "\
# Declare levels, goals, strategies and their GQM graphs here, e.g.
#
# grid \"My organization\" version \"1\"
# level BUS \"Business\" rank 0 revise_every 24
# goal G1 at BUS \"Increase customer satisfaction\"
";

fn init(ctx: &mut Ctx, from: Option<&Path>) -> Result<i32, CliError> {
    let text = match from {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            // A seed grid must parse; an empty workspace is fine.
            gqms_core::text::parse_grid(&text)
                .map_err(|d| CliError::Syntax(render_diagnostics(&p.display().to_string(), &d)))?;
            text
        }
        None => format!("{HEADER}{EMPTY_GRID}"),
    };
    ctx.ws.init(&Config::default(), &text)?;
    writeln!(ctx.out, "initialized workspace at {}", ctx.ws.root.display())?;
    let cl = Checklist::ITEMS.join(", ");
    writeln!(ctx.out, "next: gqms characterize --scope ...; checklist items: {cl}")?;
    Ok(0)
}

struct CharacterizeArgs<'a> {
    scope: &'a Option<String>,
    environment: &'a [String],
    intervals: &'a [String],
    roles: &'a [String],
    responsible: &'a [String],
    done: &'a [String],
    inventory: &'a Option<String>,
}

fn split_pair<'a>(arg: &'a str, what: &str) -> Result<(&'a str, &'a str), CliError> {
    arg.split_once('=')
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| CliError::Invalid(format!("{what} `{arg}` must look like NAME=VALUE")))
}

/// `MIN..MAX`, either side optional.
fn parse_rank_range(s: &str) -> Option<RoleView> {
    let (lo, hi) = s.split_once("..")?;
    let bound = |b: &str| if b.is_empty() { Ok(None) } else { b.parse::<u32>().map(Some) };
    let view = RoleView { min_rank: bound(lo).ok()?, max_rank: bound(hi).ok()? };
    match (view.min_rank, view.max_rank) {
        (Some(a), Some(b)) if a > b => None,
        _ => Some(view),
    }
}

fn characterize(ctx: &mut Ctx, args: CharacterizeArgs) -> Result<i32, CliError> {
    let mut config = ctx.ws.config()?;
    if let Some(s) = args.scope {
        config.scope.description = s.clone();
    }
    config.scope.environment.extend(args.environment.iter().cloned());
    for arg in args.intervals {
        let (level, months) = split_pair(arg, "interval")?;
        let months: u32 = months
            .parse()
            .ok()
            .filter(|m| *m > 0)
            .ok_or_else(|| CliError::Invalid(format!("interval `{arg}`: months must be a positive integer")))?;
        config.levels.insert(level.to_string(), LevelConfig { revise_every: Some(months) });
    }
    for arg in args.roles {
        let (name, range) = split_pair(arg, "role")?;
        let view = parse_rank_range(range)
            .ok_or_else(|| CliError::Invalid(format!("role `{arg}`: range must look like MIN..MAX")))?;
        config.roles.insert(name.to_string(), view);
    }
    for arg in args.responsible {
        let (task, who) = split_pair(arg, "responsibility")?;
        config.responsibilities.insert(task.to_string(), who.to_string());
    }
    for item in args.done {
        if !config.checklist.mark(item) {
            let known = Checklist::ITEMS.join(", ");
            return Err(CliError::Invalid(format!("unknown checklist item `{item}` (known: {known})")));
        }
    }
    if let Some(inv) = args.inventory {
        config.inventory = Some(inv.clone());
    }
    ctx.ws.save_config(&config)?;

    // Overrides for levels the grid does not declare are kept but flagged.
    if let Ok(grid) = ctx.ws.grid() {
        for level in config.levels.keys() {
            if grid.level(&Id::unchecked(level.as_str())).is_none() {
                writeln!(ctx.err, "warning: interval override for unknown level `{level}`")?;
            }
        }
    }
    let c = &config.checklist;
    let pending: Vec<&str> = Checklist::ITEMS
        .iter()
        .zip([c.process_planned, c.responsibilities_defined, c.training_provided])
        .filter(|(_, done)| !done)
        .map(|(i, _)| *i)
        .collect();
    let text = if pending.is_empty() {
        "configuration saved; checklist complete\n".to_string()
    } else {
        format!("configuration saved; checklist pending: {}\n", pending.join(", "))
    };
    ctx.emit(&text, &config)?;
    Ok(0)
}

fn load_inventory(ws: &Workspace, config: &Config) -> Result<Option<AssetInventory>, CliError> {
    let Some(rel) = &config.inventory else { return Ok(None) };
    let path = ws.root.join(rel);
    let text = fs::read_to_string(&path)?;
    serde_json::from_str(&text).map(Some).map_err(|e| CliError::BadData { path, message: e.to_string() })
}

/// Validation, gap and conflict findings for a parsed grid.
fn structural_findings(ws: &Workspace, grid: &Grid) -> Result<Vec<Finding>, CliError> {
    let config = ws.config()?;
    let inventory = load_inventory(ws, &config)?;
    let mut findings = validate(grid);
    if findings.is_empty() {
        findings.extend(gap_analysis(grid, inventory.as_ref()).map_err(|e| CliError::Invalid(e.to_string()))?);
        findings.extend(detect_conflicts(grid));
    }
    sort_findings(&mut findings);
    Ok(findings)
}

fn write_findings(ctx: &mut Ctx, findings: &[Finding]) -> Result<(), CliError> {
    let text = render_findings(findings);
    ctx.ws.write_report("findings.json", &format!("{}\n", json(&findings)))?;
    ctx.ws.write_report("findings.txt", &text)?;
    Ok(())
}

/// Prints parse diagnostics and returns exit code 1.
fn syntax_failure(ctx: &mut Ctx, e: CliError) -> Result<i32, CliError> {
    match e {
        CliError::Syntax(text) => {
            ctx.err.write_all(text.as_bytes())?;
            Ok(1)
        }
        other => Err(other),
    }
}

fn set_goals(ctx: &mut Ctx) -> Result<i32, CliError> {
    let grid = match ctx.ws.grid() {
        Ok(g) => g,
        Err(e) => return syntax_failure(ctx, e),
    };
    let findings = structural_findings(&ctx.ws, &grid)?;
    write_findings(ctx, &findings)?;
    let text = render_findings(&findings);
    ctx.emit(&text, &findings)?;
    Ok(exit_code(&findings))
}

/// The current grid, refusing to continue past structural errors.
fn valid_grid(ctx: &mut Ctx) -> Result<Result<Grid, i32>, CliError> {
    let grid = match ctx.ws.grid() {
        Ok(g) => g,
        Err(e) => return syntax_failure(ctx, e).map(Err),
    };
    let findings = validate(&grid);
    if exit_code(&findings) == 1 {
        ctx.err.write_all(render_findings(&findings).as_bytes())?;
        return Ok(Err(1));
    }
    Ok(Ok(grid))
}

fn plan(ctx: &mut Ctx) -> Result<i32, CliError> {
    let grid = match valid_grid(ctx)? {
        Ok(g) => g,
        Err(code) => return Ok(code),
    };
    let plan = generate_plan(&grid).map_err(|e| CliError::Invalid(e.to_string()))?;
    let text = plan.render_text();
    ctx.ws.write_report("plan.json", &format!("{}\n", json(&plan)))?;
    ctx.ws.write_report("plan.txt", &text)?;
    ctx.emit(&text, &plan)?;
    if plan.missing_count() > 0 {
        writeln!(ctx.err, "warning: {} metric(s) have no collection procedure", plan.missing_count())?;
    }
    Ok(0)
}

#[derive(Debug, Serialize)]
struct FileError {
    file: String,
    row: usize,
    #[serde(flatten)]
    kind: gqms_core::measurement::IngestErrorKind,
    message: String,
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    accepted: usize,
    total: usize,
    errors: Vec<FileError>,
}

fn ingest_files(ctx: &mut Ctx, files: &[std::path::PathBuf]) -> Result<i32, CliError> {
    let grid = match valid_grid(ctx)? {
        Ok(g) => g,
        Err(code) => return Ok(code),
    };
    let plan = ctx.ws.plan(&grid)?;
    let mut data = ctx.ws.dataset(&plan)?;
    let before = data.len();
    let mut errors = Vec::new();
    for file in files {
        let reader = fs::File::open(file)?;
        let (rows, csv_errors) =
            read_csv(reader).map_err(|e| CliError::BadData { path: file.clone(), message: e.to_string() })?;
        let (merged, row_errors) = merge(&plan, &data, &rows);
        data = merged;
        let name = file.display().to_string();
        for e in csv_errors.into_iter().chain(row_errors) {
            errors.push(FileError { file: name.clone(), row: e.row, message: e.kind.to_string(), kind: e.kind });
        }
    }
    ctx.ws.save_dataset(&data)?;
    let summary = IngestSummary { accepted: data.len() - before, total: data.len(), errors };
    ctx.ws.write_report("ingest_errors.json", &format!("{}\n", json(&summary.errors)))?;

    let mut text = String::new();
    for e in &summary.errors {
        text.push_str(&format!("{}:{}: {}\n", e.file, e.row, e.message));
    }
    text.push_str(&format!(
        "accepted {} observation(s), {} in dataset, {} row(s) rejected\n",
        summary.accepted,
        summary.total,
        summary.errors.len()
    ));
    ctx.emit(&text, &summary)?;
    Ok(if summary.errors.is_empty() { 0 } else { 2 })
}

/// Adds `rows` to `existing`. Stored observations are valid for the plan, so
/// every error belongs to a new row, including timestamps already stored.
fn merge(
    plan: &MeasurementPlan,
    existing: &MeasurementDataset,
    rows: &[gqms_core::measurement::RawRow],
) -> (MeasurementDataset, Vec<gqms_core::measurement::IngestError>) {
    let mut all = existing.to_rows();
    all.extend(rows.iter().cloned());
    ingest(plan, &all)
}

#[derive(Debug, Serialize)]
struct Analysis<'a> {
    report: &'a EvaluationReport,
    findings: &'a [Finding],
    coverage: &'a [MetricCoverage],
}

fn analyze(ctx: &mut Ctx, since: Option<NaiveDate>) -> Result<i32, CliError> {
    let grid = match valid_grid(ctx)? {
        Ok(g) => g,
        Err(code) => return Ok(code),
    };
    let plan = ctx.ws.plan(&grid)?;
    let data = ctx.ws.dataset(&plan)?;
    let report = evaluate_grid(&grid, &data, ctx.now()).map_err(|e| CliError::Invalid(e.to_string()))?;
    ctx.ws.write_report("report.json", &report.to_json())?;
    ctx.ws.write_report("report.txt", &report.render_text())?;

    let new_gaps = identify_new_gaps(&report);
    let mut findings = structural_findings(&ctx.ws, &grid)?;
    findings.extend(new_gaps.iter().cloned());
    sort_findings(&mut findings);
    write_findings(ctx, &findings)?;

    let today = ctx.today();
    let first = data.series.values().filter_map(|s| s.first()).map(|o| o.timestamp.date_naive()).min();
    let start = since.or(first).unwrap_or(today);
    let coverage = match DateWindow::new(start, today) {
        Ok(window) => coverage_check(&plan, &data, window),
        Err(e) => {
            writeln!(ctx.err, "warning: no coverage window: {e}")?;
            Vec::new()
        }
    };
    ctx.ws.write_report("coverage.json", &format!("{}\n", json(&coverage)))?;

    let mut text = report.render_text();
    text.push('\n');
    text.push_str(&render_findings(&new_gaps));
    if !coverage.is_empty() {
        text.push_str(&format!("\ncoverage {start} .. {today}\n"));
        for c in &coverage {
            let line = match (c.expected, c.ratio) {
                (Some(e), Some(r)) => format!("{}\t{}/{}\t{:.0}%\n", c.metric, c.actual, e, r * 100.0),
                _ => format!("{}\t{}\tunplanned\n", c.metric, c.actual),
            };
            text.push_str(&line);
        }
    }
    ctx.emit(&text, &Analysis { report: &report, findings: &new_gaps, coverage: &coverage })?;
    Ok(exit_code(&new_gaps))
}

fn package(ctx: &mut Ctx, label: &str) -> Result<i32, CliError> {
    let grid = match ctx.ws.grid() {
        Ok(g) => g,
        Err(e) => return syntax_failure(ctx, e),
    };
    if let Some(report) = ctx.ws.report()? {
        // A stale report is still packaged, but flagged.
        if export_bundle(&grid, Some(&report), None, None).is_err() {
            writeln!(ctx.err, "warning: reports/report.json predates the current grid; run `gqms analyze`")?;
        }
    }
    let today = ctx.today();
    let meta = ctx.ws.package(label, today, &grid)?;
    ctx.emit(&format!("packaged {}\n", meta.id), &meta)?;
    Ok(0)
}

fn version_grid(ws: &Workspace, version: &str) -> Result<Grid, CliError> {
    match ws.resolve(version)? {
        Some(meta) => ws.snapshot_grid(&meta),
        None => ws.grid(),
    }
}

fn diff_versions(ctx: &mut Ctx, from: &str, to: &str) -> Result<i32, CliError> {
    ctx.ws.require()?;
    let a = version_grid(&ctx.ws, from)?;
    let b = version_grid(&ctx.ws, to)?;
    let changes = diff(&a, &b);
    let text = if changes.is_empty() { "no changes\n".to_string() } else { changes.render_text() };
    ctx.emit(&text, &changes)?;
    Ok(0)
}

fn status(ctx: &mut Ctx) -> Result<i32, CliError> {
    let config = ctx.ws.config()?;
    let grid = ctx.ws.grid()?;
    let snapshots = ctx.ws.snapshot_records()?;
    let rows = schedule_status(&grid, &snapshots, &config.interval_overrides(), ctx.today());
    ctx.emit(&render_schedule(&rows), &rows)?;
    Ok(if rows.iter().any(|r| r.overdue) { 2 } else { 0 })
}

/// The stored report when it still matches `grid`.
pub(crate) fn matching_report(ws: &Workspace, grid: &Grid) -> Result<Option<EvaluationReport>, CliError> {
    Ok(ws.report()?.filter(|r| export_bundle(grid, Some(r), None, None).is_ok()))
}

fn export(
    ctx: &mut Ctx,
    kind: ExportKind,
    role: Option<&str>,
    collapse: &[String],
    hide_gqm: bool,
    out: Option<&str>,
) -> Result<i32, CliError> {
    let config = ctx.ws.config()?;
    let grid = ctx.ws.grid()?;
    let has_report = ctx.ws.report()?.is_some();
    let report = matching_report(&ctx.ws, &grid)?;
    if has_report && report.is_none() {
        writeln!(ctx.err, "warning: ignoring reports/report.json, it predates the current grid")?;
    }
    let roles = config.role_config();
    let visible_ranks = match role {
        Some(r) => Some(roles.visible_ranks(&grid, r).ok_or_else(|| CliError::Invalid(format!("unknown role `{r}`")))?),
        None => None,
    };
    let mut collapsed = BTreeSet::new();
    for c in collapse {
        let id = Id::unchecked(c.as_str());
        if grid.element_kind(&id).is_none() {
            return Err(CliError::Invalid(format!("cannot collapse unknown element `{c}`")));
        }
        collapsed.insert(id);
    }
    let options = LayoutOptions { show_gqm: !hide_gqm, visible_ranks, collapsed };
    let laid = layout(&grid, &options).map_err(|e| CliError::Invalid(e.to_string()))?;
    let (text, ext) = match kind {
        ExportKind::Dot => (to_dot(&laid), "dot"),
        ExportKind::Svg => (to_svg(&laid, report.as_ref()), "svg"),
        ExportKind::Bundle => {
            let bundle = export_bundle(&grid, report.as_ref(), Some(&roles), Some(&laid))
                .map_err(|e| CliError::Invalid(e.to_string()))?;
            let bundle = match role {
                Some(r) => bundle.for_role(r).ok_or_else(|| CliError::Invalid(format!("unknown role `{r}`")))?,
                None => bundle,
            };
            (bundle.to_json(), "json")
        }
    };
    match out {
        Some("-") => ctx.out.write_all(text.as_bytes())?,
        Some(path) => {
            crate::workspace::write_atomic(Path::new(path), text.as_bytes())?;
            writeln!(ctx.out, "wrote {path}")?;
        }
        None => {
            let path = ctx.ws.write_report(&format!("grid.{ext}"), &text)?;
            writeln!(ctx.out, "wrote {}", path.display())?;
        }
    }
    Ok(0)
}
