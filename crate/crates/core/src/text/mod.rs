//! The `.gqms` text format and the JSON export bundle.

mod diagnostic;
mod lexer;
mod parser;
mod serialize;

pub use diagnostic::{render_diagnostics, Diagnostic, DiagnosticKind, Span};
pub use parser::{parse_document, parse_expression, parse_grid, DeclSpans, GridDocument};
pub use serialize::{serialize_grid, HEADER};
mod bundle;

pub use bundle::{
    export_bundle, Bundle, BundleEdge, BundleError, BundleGrid, BundleLevel, BundleNode, GqmDetail, NodeDetail,
    RoleConfig, RoleView, BUNDLE_VERSION,
};
