//! Workspace layout, atomic writes and the snapshot store.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use gqms_core::evaluation::EvaluationReport;
use gqms_core::maintenance::SnapshotRecord;
use gqms_core::measurement::{generate_plan, ingest, read_csv, MeasurementDataset, MeasurementPlan};
use gqms_core::text::{parse_grid, render_diagnostics};
use gqms_core::Grid;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::CliError;

pub const CONFIG_FILE: &str = "gqms.toml";
pub const GRID_FILE: &str = "grid.gqms";
pub const SNAPSHOTS: &str = "snapshots";
pub const DATA: &str = "data";
pub const REPORTS: &str = "reports";
pub const DATASET_FILE: &str = "data/measurements.csv";

#[derive(Debug, Clone)]
pub struct Workspace {
    pub root: PathBuf,
}

/// Writes through a temporary sibling and renames it into place, so readers
/// see either the old or the new content.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("file");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Snapshot metadata stored as `meta.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub id: String,
    pub number: u32,
    pub label: String,
    pub created: NaiveDate,
    pub grid_version: Option<String>,
    pub has_report: bool,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into() }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn report_path(&self, name: &str) -> PathBuf {
        self.root.join(REPORTS).join(name)
    }

    /// Creates the layout. The directory must be absent or empty.
    pub fn init(&self, config: &Config, grid_text: &str) -> Result<(), CliError> {
        if self.root.exists() {
            let non_empty = fs::read_dir(&self.root)?.next().is_some();
            if non_empty {
                return Err(CliError::AlreadyInitialized(self.root.clone()));
            }
        }
        for dir in [SNAPSHOTS, DATA, REPORTS] {
            fs::create_dir_all(self.root.join(dir))?;
        }
        write_atomic(&self.path(GRID_FILE), grid_text.as_bytes())?;
        write_atomic(&self.path(CONFIG_FILE), config.render().as_bytes())?;
        Ok(())
    }

    /// Fails unless the directory holds a config file.
    pub fn require(&self) -> Result<(), CliError> {
        if self.path(CONFIG_FILE).is_file() {
            Ok(())
        } else {
            Err(CliError::MissingWorkspace(self.root.clone()))
        }
    }

    pub fn config(&self) -> Result<Config, CliError> {
        self.require()?;
        let path = self.path(CONFIG_FILE);
        let text = fs::read_to_string(&path)?;
        Config::parse(&text).map_err(|e| CliError::BadConfig { path, message: e.to_string() })
    }

    pub fn save_config(&self, config: &Config) -> Result<(), CliError> {
        write_atomic(&self.path(CONFIG_FILE), config.render().as_bytes())?;
        Ok(())
    }

    pub fn grid_text(&self) -> Result<String, CliError> {
        self.require()?;
        let path = self.path(GRID_FILE);
        fs::read_to_string(&path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => CliError::MissingGrid(path),
            _ => e.into(),
        })
    }

    /// Parses the current grid; diagnostics become [`CliError::Syntax`].
    pub fn grid(&self) -> Result<Grid, CliError> {
        let text = self.grid_text()?;
        parse_grid(&text).map_err(|d| CliError::Syntax(render_diagnostics(GRID_FILE, &d)))
    }

    pub fn plan(&self, grid: &Grid) -> Result<MeasurementPlan, CliError> {
        if !self.report_path("plan.json").is_file() {
            return Err(CliError::MissingArtifact { what: "measurement plan", hint: "run `gqms plan` first" });
        }
        generate_plan(grid).map_err(|e| CliError::Invalid(e.to_string()))
    }

    /// The stored dataset; empty when nothing has been ingested.
    pub fn dataset(&self, plan: &MeasurementPlan) -> Result<MeasurementDataset, CliError> {
        let path = self.path(DATASET_FILE);
        if !path.is_file() {
            return Ok(MeasurementDataset::default());
        }
        let (rows, _) = read_csv(fs::File::open(&path)?).map_err(|e| CliError::BadData { path: path.clone(), message: e.to_string() })?;
        // Rows for metrics dropped from the plan since ingestion are ignored.
        Ok(ingest(plan, &rows).0)
    }

    pub fn save_dataset(&self, data: &MeasurementDataset) -> Result<(), CliError> {
        let mut buf = Vec::new();
        data.write_csv(&mut buf).map_err(|e| CliError::Io(io::Error::other(e)))?;
        write_atomic(&self.path(DATASET_FILE), &buf)?;
        Ok(())
    }

    pub fn report(&self) -> Result<Option<EvaluationReport>, CliError> {
        let path = self.report_path("report.json");
        if !path.is_file() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text).map(Some).map_err(|e| CliError::BadData { path, message: e.to_string() })
    }

    pub fn write_report(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.report_path(name);
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    /// Snapshot metadata sorted by number.
    pub fn snapshots(&self) -> Result<Vec<SnapshotMeta>, CliError> {
        let dir = self.path(SNAPSHOTS);
        let mut out = Vec::new();
        if !dir.is_dir() {
            return Ok(out);
        }
        for entry in fs::read_dir(&dir)? {
            let entry = entry?;
            let meta_path = entry.path().join("meta.json");
            if !meta_path.is_file() {
                continue;
            }
            let text = fs::read_to_string(&meta_path)?;
            let meta: SnapshotMeta =
                serde_json::from_str(&text).map_err(|e| CliError::BadData { path: meta_path, message: e.to_string() })?;
            out.push(meta);
        }
        out.sort_by_key(|m| m.number);
        Ok(out)
    }

    /// Resolves `v3`, `v3-label` or `current`.
    pub fn resolve(&self, version: &str) -> Result<Option<SnapshotMeta>, CliError> {
        if version == "current" {
            return Ok(None);
        }
        let snaps = self.snapshots()?;
        snaps
            .into_iter()
            .find(|m| m.id == version || format!("v{}", m.number) == version)
            .map(Some)
            .ok_or_else(|| CliError::UnknownVersion(version.to_string()))
    }

    pub fn snapshot_grid(&self, meta: &SnapshotMeta) -> Result<Grid, CliError> {
        let path = self.path(SNAPSHOTS).join(&meta.id).join(GRID_FILE);
        let text = fs::read_to_string(&path)?;
        parse_grid(&text).map_err(|d| CliError::Syntax(render_diagnostics(&path.display().to_string(), &d)))
    }

    pub fn snapshot_records(&self) -> Result<Vec<SnapshotRecord>, CliError> {
        self.snapshots()?
            .into_iter()
            .map(|m| Ok(SnapshotRecord { grid: self.snapshot_grid(&m)?, id: m.id, created: m.created }))
            .collect()
    }

    /// Copies the grid and the latest report into `snapshots/v<N>-<label>/`.
    /// The directory is assembled under a temporary name and renamed.
    pub fn package(&self, label: &str, created: NaiveDate, grid: &Grid) -> Result<SnapshotMeta, CliError> {
        let valid = !label.is_empty() && label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if !valid {
            return Err(CliError::InvalidLabel(label.to_string()));
        }
        let number = self.snapshots()?.last().map_or(1, |m| m.number + 1);
        let id = format!("v{number}-{label}");
        let dir = self.path(SNAPSHOTS);
        let tmp = dir.join(format!(".{id}.tmp"));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir_all(&tmp)?;
        fs::write(tmp.join(GRID_FILE), self.grid_text()?)?;
        let report = self.report_path("report.json");
        let has_report = report.is_file();
        if has_report {
            fs::copy(&report, tmp.join("report.json"))?;
        }
        let meta = SnapshotMeta { id: id.clone(), number, label: label.to_string(), created, grid_version: grid.metadata.version.clone(), has_report };
        let mut json = serde_json::to_string_pretty(&meta).expect("meta serializes");
        json.push('\n');
        fs::write(tmp.join("meta.json"), json)?;
        fs::rename(&tmp, dir.join(&id))?;
        Ok(meta)
    }
}
