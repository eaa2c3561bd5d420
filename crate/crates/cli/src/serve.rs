//! Read-only HTTP access to the workspace. Every request re-reads the
//! files, so edits show up on reload.

use std::io::{self, Write};
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use gqms_core::layout::{layout, to_svg, LayoutOptions};
use gqms_core::text::export_bundle;
use serde::Deserialize;
use tokio::net::TcpListener;

use crate::commands::matching_report;
use crate::error::CliError;
use crate::workspace::Workspace;

struct AppState {
    ws: Workspace,
    assets: PathBuf,
}

type Shared = State<Arc<AppState>>;

pub fn router(ws: Workspace, assets: PathBuf) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/bundle", get(bundle))
        .route("/report", get(report))
        .route("/svg", get(svg))
        .route("/{*path}", get(asset))
        .with_state(Arc::new(AppState { ws, assets }))
}

/// Serves until the listener fails.
pub async fn serve_on(listener: TcpListener, ws: Workspace, assets: PathBuf) -> io::Result<()> {
    axum::serve(listener, router(ws, assets)).await
}

/// Binds `host:port` and blocks serving requests.
pub fn run(ws: Workspace, host: &str, port: u16, assets: PathBuf, log: &mut dyn Write) -> Result<(), CliError> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = TcpListener::bind((host, port)).await.map_err(|e| match e.kind() {
            io::ErrorKind::AddrInUse => CliError::PortInUse(port),
            _ => CliError::Io(e),
        })?;
        writeln!(log, "serving {} on http://{}", ws.root.display(), listener.local_addr()?)?;
        serve_on(listener, ws, assets).await?;
        Ok(())
    })
}

fn typed(content_type: &'static str, body: impl IntoResponse) -> Response {
    ([(header::CONTENT_TYPE, content_type)], body).into_response()
}

fn failure(e: CliError) -> Response {
    let code = match e {
        CliError::MissingWorkspace(_) | CliError::MissingGrid(_) => StatusCode::NOT_FOUND,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    };
    (code, format!("{e}\n")).into_response()
}

#[derive(Debug, Deserialize)]
struct BundleQuery {
    role: Option<String>,
}

async fn bundle(State(app): Shared, Query(q): Query<BundleQuery>) -> Response {
    let build = || -> Result<Option<String>, CliError> {
        let config = app.ws.config()?;
        let grid = app.ws.grid()?;
        let report = matching_report(&app.ws, &grid)?;
        let laid = layout(&grid, &LayoutOptions { show_gqm: true, ..LayoutOptions::default() })
            .map_err(|e| CliError::Invalid(e.to_string()))?;
        let roles = config.role_config();
        let bundle = export_bundle(&grid, report.as_ref(), Some(&roles), Some(&laid))
            .map_err(|e| CliError::Invalid(e.to_string()))?;
        Ok(match &q.role {
            Some(r) => bundle.for_role(r).map(|b| b.to_json()),
            None => Some(bundle.to_json()),
        })
    };
    match build() {
        Ok(Some(json)) => typed("application/json", json),
        Ok(None) => (StatusCode::NOT_FOUND, "unknown role\n").into_response(),
        Err(e) => failure(e),
    }
}

async fn report(State(app): Shared) -> Response {
    match app.ws.report() {
        Ok(Some(r)) => typed("application/json", r.to_json()),
        Ok(None) => (StatusCode::NOT_FOUND, "no report yet; run `gqms analyze`\n").into_response(),
        Err(e) => failure(e),
    }
}

async fn svg(State(app): Shared) -> Response {
    let build = || -> Result<String, CliError> {
        let grid = app.ws.grid()?;
        let report = matching_report(&app.ws, &grid)?;
        let laid = layout(&grid, &LayoutOptions { show_gqm: true, ..LayoutOptions::default() })
            .map_err(|e| CliError::Invalid(e.to_string()))?;
        Ok(to_svg(&laid, report.as_ref()))
    };
    match build() {
        Ok(svg) => typed("image/svg+xml", svg),
        Err(e) => failure(e),
    }
}

const BUILTIN_INDEX: &str = r#"<!doctype html>
<html>
<head><meta charset="utf-8"><title>gqms</title>
<style>body{font-family:sans-serif;margin:2em}img{max-width:100%;border:1px solid #ccc}</style>
</head>
<body>
<h1>GQM+Strategies grid</h1>
<p><a href="/bundle">bundle</a> | <a href="/report">report</a> | <a href="/svg">svg</a></p>
<img src="/svg" alt="grid">
</body>
</html>
"#;

async fn index(State(app): Shared) -> Response {
    let file = app.assets.join("index.html");
    match tokio::fs::read(&file).await {
        Ok(bytes) => typed("text/html; charset=utf-8", bytes),
        Err(_) => typed("text/html; charset=utf-8", BUILTIN_INDEX),
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("ico") => "image/x-icon",
        _ => "application/octet-stream",
    }
}

async fn asset(State(app): Shared, UrlPath(path): UrlPath<String>) -> Response {
    let rel = Path::new(&path);
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return StatusCode::NOT_FOUND.into_response();
    }
    let file = app.assets.join(rel);
    match tokio::fs::read(&file).await {
        Ok(bytes) => typed(content_type(&file), bytes),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}
