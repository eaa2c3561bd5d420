//! Interpretation-model expressions.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::id::Id;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Last,
    Avg,
    Min,
    Max,
    Sum,
    Count,
}

impl Aggregate {
    pub const ALL: [Aggregate; 6] = [
        Aggregate::Last,
        Aggregate::Avg,
        Aggregate::Min,
        Aggregate::Max,
        Aggregate::Sum,
        Aggregate::Count,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Aggregate::Last => "last",
            Aggregate::Avg => "avg",
            Aggregate::Min => "min",
            Aggregate::Max => "max",
            Aggregate::Sum => "sum",
            Aggregate::Count => "count",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LogicOp {
    And,
    Or,
}

/// Expression tree. Numeric and boolean sub-terms are distinguished by
/// [`Expr::check`] before evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Num(f64),
    Bool(bool),
    /// The element's own score; only legal inside conditions.
    Score,
    Agg(Aggregate, Id),
    ChildStatus(Id),
    MinChildStatus,
    AvgChildStatus,
    Neg(Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Logic(LogicOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExprType {
    Numeric,
    Boolean,
}

impl fmt::Display for ExprType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExprType::Numeric => "numeric",
            ExprType::Boolean => "boolean",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("expected a {expected} expression, found {found} in `{expr}`")]
    Mismatch { expected: ExprType, found: ExprType, expr: String },
    #[error("`score` may only be used in conditions")]
    ScoreOutsideCondition,
}

/// Static facts about which data an expression consumes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct References {
    pub metrics: BTreeSet<Id>,
    pub children: BTreeSet<Id>,
    /// `min_child_status()` or `avg_child_status()` appears.
    pub all_children: bool,
}

impl References {
    pub fn is_vacuous(&self) -> bool {
        self.metrics.is_empty() && self.children.is_empty() && !self.all_children
    }

    pub fn merge(&mut self, other: References) {
        self.metrics.extend(other.metrics);
        self.children.extend(other.children);
        self.all_children |= other.all_children;
    }
}

impl Expr {
    pub fn num(v: f64) -> Self {
        Expr::Num(v)
    }

    pub fn agg(agg: Aggregate, metric: Id) -> Self {
        Expr::Agg(agg, metric)
    }

    pub fn arith(op: ArithOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Arith(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn cmp(op: CmpOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Cmp(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn and(lhs: Expr, rhs: Expr) -> Self {
        Expr::Logic(LogicOp::And, Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: Expr, rhs: Expr) -> Self {
        Expr::Logic(LogicOp::Or, Box::new(lhs), Box::new(rhs))
    }

    pub fn not(inner: Expr) -> Self {
        Expr::Not(Box::new(inner))
    }

    /// Infers the type of the expression. `allow_score` is true inside
    /// achieved/at-risk conditions.
    pub fn infer(&self, allow_score: bool) -> Result<ExprType, TypeError> {
        use ExprType::*;
        let expect = |e: &Expr, want: ExprType| -> Result<(), TypeError> {
            let found = e.infer(allow_score)?;
            if found == want {
                Ok(())
            } else {
                Err(TypeError::Mismatch { expected: want, found, expr: e.to_string() })
            }
        };
        match self {
            Expr::Num(_) | Expr::Agg(..) | Expr::ChildStatus(_) => Ok(Numeric),
            Expr::MinChildStatus | Expr::AvgChildStatus => Ok(Numeric),
            Expr::Bool(_) => Ok(Boolean),
            Expr::Score => {
                if allow_score {
                    Ok(Numeric)
                } else {
                    Err(TypeError::ScoreOutsideCondition)
                }
            }
            Expr::Neg(inner) => expect(inner, Numeric).map(|_| Numeric),
            Expr::Arith(_, l, r) | Expr::Cmp(_, l, r) => {
                expect(l, Numeric)?;
                expect(r, Numeric)?;
                Ok(if matches!(self, Expr::Arith(..)) { Numeric } else { Boolean })
            }
            Expr::Logic(_, l, r) => {
                expect(l, Boolean)?;
                expect(r, Boolean)?;
                Ok(Boolean)
            }
            Expr::Not(inner) => expect(inner, Boolean).map(|_| Boolean),
        }
    }

    /// Checks that the expression has type `want`.
    pub fn check(&self, want: ExprType, allow_score: bool) -> Result<(), TypeError> {
        let found = self.infer(allow_score)?;
        if found == want {
            Ok(())
        } else {
            Err(TypeError::Mismatch { expected: want, found, expr: self.to_string() })
        }
    }

    pub fn references(&self) -> References {
        let mut refs = References::default();
        self.collect_refs(&mut refs);
        refs
    }

    fn collect_refs(&self, refs: &mut References) {
        match self {
            Expr::Agg(_, m) => {
                refs.metrics.insert(m.clone());
            }
            Expr::ChildStatus(c) => {
                refs.children.insert(c.clone());
            }
            Expr::MinChildStatus | Expr::AvgChildStatus => refs.all_children = true,
            Expr::Num(_) | Expr::Bool(_) | Expr::Score => {}
            Expr::Neg(e) | Expr::Not(e) => e.collect_refs(refs),
            Expr::Arith(_, l, r) | Expr::Cmp(_, l, r) | Expr::Logic(_, l, r) => {
                l.collect_refs(refs);
                r.collect_refs(refs);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Logic(LogicOp::Or, ..) => 1,
            Expr::Logic(LogicOp::And, ..) => 2,
            Expr::Not(_) => 3,
            Expr::Cmp(..) => 4,
            Expr::Arith(ArithOp::Add | ArithOp::Sub, ..) => 5,
            Expr::Arith(ArithOp::Mul | ArithOp::Div, ..) => 6,
            Expr::Neg(_) => 7,
            // Negative literals print with a leading `-` and bind like a
            // unary minus.
            Expr::Num(v) if v.is_sign_negative() => 7,
            _ => 8,
        }
    }
}

/// Writes `e`, parenthesized when its precedence is below `min`.
fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if e.precedence() < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{}", FloatLit(*v)),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Score => f.write_str("score"),
            Expr::Agg(a, m) => write!(f, "{}({m})", a.name()),
            Expr::ChildStatus(c) => write!(f, "child_status({c})"),
            Expr::MinChildStatus => f.write_str("min_child_status()"),
            Expr::AvgChildStatus => f.write_str("avg_child_status()"),
            Expr::Neg(inner) => {
                // `-(3)` stays a negation; a bare `-3` reads back as a literal.
                if matches!(**inner, Expr::Num(_) | Expr::Neg(_)) {
                    write!(f, "-({inner})")
                } else {
                    f.write_str("-")?;
                    write_operand(f, inner, 7)
                }
            }
            Expr::Arith(op, l, r) => {
                let p = self.precedence();
                write_operand(f, l, p)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, r, p + 1)
            }
            Expr::Cmp(op, l, r) => {
                write_operand(f, l, 5)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, r, 5)
            }
            Expr::Logic(op, l, r) => {
                let p = self.precedence();
                write_operand(f, l, p)?;
                f.write_str(match op {
                    LogicOp::And => " and ",
                    LogicOp::Or => " or ",
                })?;
                write_operand(f, r, p + 1)
            }
            Expr::Not(inner) => {
                f.write_str("not ")?;
                write_operand(f, inner, 3)
            }
        }
    }
}

/// Float formatting that reads back to the same value.
struct FloatLit(f64);

impl fmt::Display for FloatLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.0;
        if v == 0.0 && v.is_sign_negative() {
            f.write_str("-0")
        } else {
            write!(f, "{v}")
        }
    }
}

/// How an element's status is computed from its score and data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationModel {
    pub score: Expr,
    /// Defaults to `score >= 1` when absent.
    pub achieved: Option<Expr>,
    /// Defaults to `score >= 0.5` when absent.
    pub at_risk: Option<Expr>,
}

pub const DEFAULT_ACHIEVED_THRESHOLD: f64 = 1.0;
pub const DEFAULT_AT_RISK_THRESHOLD: f64 = 0.5;

impl InterpretationModel {
    pub fn with_score(score: Expr) -> Self {
        InterpretationModel { score, achieved: None, at_risk: None }
    }

    pub fn achieved_condition(&self) -> Expr {
        self.achieved.clone().unwrap_or_else(|| {
            Expr::cmp(CmpOp::Ge, Expr::Score, Expr::Num(DEFAULT_ACHIEVED_THRESHOLD))
        })
    }

    pub fn at_risk_condition(&self) -> Expr {
        self.at_risk.clone().unwrap_or_else(|| {
            Expr::cmp(CmpOp::Ge, Expr::Score, Expr::Num(DEFAULT_AT_RISK_THRESHOLD))
        })
    }

    pub fn type_check(&self) -> Result<(), TypeError> {
        self.score.check(ExprType::Numeric, false)?;
        for cond in [&self.achieved, &self.at_risk].into_iter().flatten() {
            cond.check(ExprType::Boolean, true)?;
        }
        Ok(())
    }

    pub fn references(&self) -> References {
        let mut refs = self.score.references();
        for cond in [&self.achieved, &self.at_risk].into_iter().flatten() {
            refs.merge(cond.references());
        }
        refs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::id::id;

    #[test]
    fn type_check_rejects_mixed_operands() {
        let bad = Expr::arith(ArithOp::Add, Expr::Num(1.0), Expr::Bool(true));
        assert!(matches!(bad.infer(false), Err(TypeError::Mismatch { .. })));
        let good = Expr::cmp(CmpOp::Ge, Expr::agg(Aggregate::Last, id("M1")), Expr::Num(3.0));
        assert_eq!(good.infer(false), Ok(ExprType::Boolean));
    }

    #[test]
    fn score_only_in_conditions() {
        let model = InterpretationModel::with_score(Expr::Score);
        assert_eq!(model.type_check(), Err(TypeError::ScoreOutsideCondition));
        let model = InterpretationModel {
            score: Expr::Num(1.0),
            achieved: Some(Expr::cmp(CmpOp::Ge, Expr::Score, Expr::Num(0.8))),
            at_risk: None,
        };
        assert!(model.type_check().is_ok());
    }

    #[test]
    fn display_parenthesizes_by_precedence() {
        let e = Expr::arith(
            ArithOp::Mul,
            Expr::arith(ArithOp::Add, Expr::Num(1.0), Expr::Num(2.0)),
            Expr::Num(3.0),
        );
        assert_eq!(e.to_string(), "(1 + 2) * 3");
        let e = Expr::arith(
            ArithOp::Sub,
            Expr::Num(1.0),
            Expr::arith(ArithOp::Sub, Expr::Num(2.0), Expr::Num(3.0)),
        );
        assert_eq!(e.to_string(), "1 - (2 - 3)");
        let e = Expr::Neg(Box::new(Expr::Num(3.0)));
        assert_eq!(e.to_string(), "-(3)");
        assert_eq!(Expr::Num(-3.5).to_string(), "-3.5");
        let e = Expr::not(Expr::or(Expr::Bool(true), Expr::Bool(false)));
        assert_eq!(e.to_string(), "not (true or false)");
    }

    #[test]
    fn references_collects_metrics_and_children() {
        let e = Expr::arith(
            ArithOp::Add,
            Expr::agg(Aggregate::Avg, id("M1")),
            Expr::arith(ArithOp::Mul, Expr::ChildStatus(id("G2")), Expr::MinChildStatus),
        );
        let refs = e.references();
        assert_eq!(refs.metrics.into_iter().collect::<Vec<_>>(), vec![id("M1")]);
        assert_eq!(refs.children.into_iter().collect::<Vec<_>>(), vec![id("G2")]);
        assert!(refs.all_children);
        assert!(Expr::Num(1.0).references().is_vacuous());
    }
}
