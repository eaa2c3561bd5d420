//! Interpretation models: expressions, per-element evaluation and roll-up.

mod eval;
mod expr;
mod gaps;
mod report;
mod status;

pub use eval::{eval_expression, evaluate_goal, CompiledModel, Env, Program, Value};
pub use expr::{
    Aggregate, ArithOp, CmpOp, Expr, ExprType, InterpretationModel, LogicOp, References, TypeError,
    DEFAULT_ACHIEVED_THRESHOLD, DEFAULT_AT_RISK_THRESHOLD,
};
pub use gaps::identify_new_gaps;
pub use report::{evaluate_grid, evaluate_grid_with, EvaluationReport, MetricUse, ReportEntry};
pub use status::GoalStatus;
