//! Strict three-valued evaluation of interpretation expressions.
//!
//! Expressions are compiled to a postfix program and run on a value stack.
//! `Undefined` absorbs every operation except `or` with a true operand and
//! `and` with a false operand.

use std::collections::BTreeMap;

use super::expr::{Aggregate, ArithOp, CmpOp, Expr, InterpretationModel, LogicOp, TypeError};
use super::status::GoalStatus;
use crate::id::Id;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Undefined,
}

impl Value {
    pub fn is_undefined(self) -> bool {
        matches!(self, Value::Undefined)
    }

    pub fn as_num(self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(v),
            _ => None,
        }
    }
}

/// Data visible to one element's interpretation model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Env {
    /// Numeric view of each metric's series in timestamp order; booleans are
    /// 1.0 / 0.0.
    pub series: BTreeMap<Id, Vec<f64>>,
    /// Status of every direct child. Children without a GQM graph are
    /// `Unknown`.
    pub children: BTreeMap<Id, GoalStatus>,
    /// The element's score, bound while conditions are evaluated.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Op {
    Num(f64),
    Bool(bool),
    Score,
    Agg(Aggregate, Id),
    Child(Id),
    MinChild,
    AvgChild,
    Neg,
    Arith(ArithOp),
    Cmp(CmpOp),
    Logic(LogicOp),
    Not,
}

/// A type-checked expression in postfix form.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    ops: Vec<Op>,
}

impl Program {
    pub fn compile(expr: &Expr) -> Self {
        let mut ops = Vec::new();
        emit(expr, &mut ops);
        Program { ops }
    }

    pub fn run(&self, env: &Env) -> Value {
        self.run_with_score(env, env.score)
    }

    fn run_with_score(&self, env: &Env, score: Option<f64>) -> Value {
        let mut stack: Vec<Value> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let v = match op {
                Op::Num(v) => Value::Num(*v),
                Op::Bool(b) => Value::Bool(*b),
                Op::Score => score.map_or(Value::Undefined, Value::Num),
                Op::Agg(agg, metric) => aggregate(*agg, env.series.get(metric).map(Vec::as_slice)),
                Op::Child(id) => child_value(env.children.get(id).copied()),
                Op::MinChild => fold_children(env, |vals| vals.iter().copied().fold(f64::INFINITY, f64::min)),
                Op::AvgChild => fold_children(env, |vals| vals.iter().sum::<f64>() / vals.len() as f64),
                Op::Neg => match stack.pop() {
                    Some(Value::Num(v)) => Value::Num(-v),
                    _ => Value::Undefined,
                },
                Op::Not => match stack.pop() {
                    Some(Value::Bool(b)) => Value::Bool(!b),
                    _ => Value::Undefined,
                },
                Op::Arith(op) => {
                    let (l, r) = pop2(&mut stack);
                    arith(*op, l, r)
                }
                Op::Cmp(op) => {
                    let (l, r) = pop2(&mut stack);
                    compare(*op, l, r)
                }
                Op::Logic(op) => {
                    let (l, r) = pop2(&mut stack);
                    logic(*op, l, r)
                }
            };
            stack.push(v);
        }
        stack.pop().unwrap_or(Value::Undefined)
    }
}

fn emit(expr: &Expr, ops: &mut Vec<Op>) {
    match expr {
        Expr::Num(v) => ops.push(Op::Num(*v)),
        Expr::Bool(b) => ops.push(Op::Bool(*b)),
        Expr::Score => ops.push(Op::Score),
        Expr::Agg(a, m) => ops.push(Op::Agg(*a, m.clone())),
        Expr::ChildStatus(c) => ops.push(Op::Child(c.clone())),
        Expr::MinChildStatus => ops.push(Op::MinChild),
        Expr::AvgChildStatus => ops.push(Op::AvgChild),
        Expr::Neg(e) => {
            emit(e, ops);
            ops.push(Op::Neg);
        }
        Expr::Not(e) => {
            emit(e, ops);
            ops.push(Op::Not);
        }
        Expr::Arith(op, l, r) => {
            emit(l, ops);
            emit(r, ops);
            ops.push(Op::Arith(*op));
        }
        Expr::Cmp(op, l, r) => {
            emit(l, ops);
            emit(r, ops);
            ops.push(Op::Cmp(*op));
        }
        Expr::Logic(op, l, r) => {
            emit(l, ops);
            emit(r, ops);
            ops.push(Op::Logic(*op));
        }
    }
}

fn pop2(stack: &mut Vec<Value>) -> (Value, Value) {
    let r = stack.pop().unwrap_or(Value::Undefined);
    let l = stack.pop().unwrap_or(Value::Undefined);
    (l, r)
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        Value::Num(v)
    } else {
        Value::Undefined
    }
}

fn aggregate(agg: Aggregate, series: Option<&[f64]>) -> Value {
    let Some(s) = series.filter(|s| !s.is_empty()) else {
        return Value::Undefined;
    };
    let v = match agg {
        Aggregate::Last => s[s.len() - 1],
        Aggregate::Sum => s.iter().sum(),
        Aggregate::Avg => s.iter().sum::<f64>() / s.len() as f64,
        Aggregate::Min => s.iter().copied().fold(f64::INFINITY, f64::min),
        Aggregate::Max => s.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Aggregate::Count => s.len() as f64,
    };
    finite(v)
}

fn child_value(status: Option<GoalStatus>) -> Value {
    status.and_then(GoalStatus::encoding).map_or(Value::Undefined, Value::Num)
}

fn fold_children(env: &Env, f: impl Fn(&[f64]) -> f64) -> Value {
    if env.children.is_empty() {
        return Value::Undefined;
    }
    let encoded: Option<Vec<f64>> = env.children.values().map(|s| s.encoding()).collect();
    match encoded {
        Some(vals) => finite(f(&vals)),
        None => Value::Undefined,
    }
}

fn arith(op: ArithOp, l: Value, r: Value) -> Value {
    let (Value::Num(a), Value::Num(b)) = (l, r) else {
        return Value::Undefined;
    };
    match op {
        ArithOp::Add => finite(a + b),
        ArithOp::Sub => finite(a - b),
        ArithOp::Mul => finite(a * b),
        ArithOp::Div if b == 0.0 => Value::Undefined,
        ArithOp::Div => finite(a / b),
    }
}

fn compare(op: CmpOp, l: Value, r: Value) -> Value {
    let (Value::Num(a), Value::Num(b)) = (l, r) else {
        return Value::Undefined;
    };
    Value::Bool(match op {
        CmpOp::Lt => a < b,
        CmpOp::Le => a <= b,
        CmpOp::Eq => a == b,
        CmpOp::Ge => a >= b,
        CmpOp::Gt => a > b,
    })
}

fn logic(op: LogicOp, l: Value, r: Value) -> Value {
    let as_bool = |v: Value| match v {
        Value::Bool(b) => Some(b),
        _ => None,
    };
    let (a, b) = (as_bool(l), as_bool(r));
    match op {
        LogicOp::And => match (a, b) {
            (Some(false), _) | (_, Some(false)) => Value::Bool(false),
            (Some(true), Some(true)) => Value::Bool(true),
            _ => Value::Undefined,
        },
        LogicOp::Or => match (a, b) {
            (Some(true), _) | (_, Some(true)) => Value::Bool(true),
            (Some(false), Some(false)) => Value::Bool(false),
            _ => Value::Undefined,
        },
    }
}

/// Type-checks and evaluates `expr`. `score` may appear and reads
/// `env.score`.
pub fn eval_expression(expr: &Expr, env: &Env) -> Result<Value, TypeError> {
    expr.infer(true)?;
    Ok(Program::compile(expr).run(env))
}

/// A compiled interpretation model.
#[derive(Debug, Clone)]
pub struct CompiledModel {
    score: Program,
    achieved: Program,
    at_risk: Program,
}

impl CompiledModel {
    pub fn new(model: &InterpretationModel) -> Result<Self, TypeError> {
        model.type_check()?;
        Ok(CompiledModel {
            score: Program::compile(&model.score),
            achieved: Program::compile(&model.achieved_condition()),
            at_risk: Program::compile(&model.at_risk_condition()),
        })
    }

    /// Status and score. An undefined score gives `Unknown`; otherwise the
    /// first condition that holds decides, and `Failed` when neither does.
    /// A condition that is undefined when reached also gives `Unknown`.
    pub fn evaluate(&self, env: &Env) -> (GoalStatus, Option<f64>) {
        let Some(score) = self.score.run(env).as_num() else {
            return (GoalStatus::Unknown, None);
        };
        for (program, status) in [(&self.achieved, GoalStatus::Achieved), (&self.at_risk, GoalStatus::AtRisk)] {
            match program.run_with_score(env, Some(score)) {
                Value::Bool(true) => return (status, Some(score)),
                Value::Bool(false) => {}
                _ => return (GoalStatus::Unknown, Some(score)),
            }
        }
        (GoalStatus::Failed, Some(score))
    }
}

/// Evaluates one interpretation model against `env`.
pub fn evaluate_goal(model: &InterpretationModel, env: &Env) -> Result<(GoalStatus, Option<f64>), TypeError> {
    Ok(CompiledModel::new(model)?.evaluate(env))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::id::id;
    use crate::text::parse_expression;

    fn env_with(metric: &str, values: &[f64]) -> Env {
        let mut env = Env::default();
        env.series.insert(id(metric), values.to_vec());
        env
    }

    fn eval(src: &str, env: &Env) -> Value {
        eval_expression(&parse_expression(src).unwrap(), env).unwrap()
    }

    #[test]
    fn last_and_empty_avg() {
        assert_eq!(eval("last(M1)", &env_with("M1", &[3.0, 4.0])), Value::Num(4.0));
        assert_eq!(eval("avg(M1)", &env_with("M1", &[])), Value::Undefined);
        assert_eq!(eval("count(M2)", &env_with("M1", &[1.0])), Value::Undefined);
    }

    #[test]
    fn division_by_zero_is_undefined() {
        assert_eq!(eval("1 / 0", &Env::default()), Value::Undefined);
        assert_eq!(eval("1 / 0 > 1 or true", &Env::default()), Value::Bool(true));
    }

    #[test]
    fn kleene_laws_exhaustive() {
        let u = "(1 / 0 > 0)";
        let cases = [
            (format!("true or {u}"), Value::Bool(true)),
            (format!("{u} or true"), Value::Bool(true)),
            (format!("false or {u}"), Value::Undefined),
            (format!("false and {u}"), Value::Bool(false)),
            (format!("{u} and false"), Value::Bool(false)),
            (format!("true and {u}"), Value::Undefined),
            (format!("not {u}"), Value::Undefined),
            (format!("{u} and {u}"), Value::Undefined),
            (format!("{u} or {u}"), Value::Undefined),
        ];
        for (src, want) in cases {
            assert_eq!(eval(&src, &Env::default()), want, "{src}");
        }
    }

    #[test]
    fn type_errors_precede_evaluation() {
        let e = parse_expression("1 + true").unwrap();
        assert!(eval_expression(&e, &Env::default()).is_err());
    }

    #[test]
    fn goal_status_from_score() {
        let model = InterpretationModel {
            score: Expr::Num(0.85),
            achieved: Some(parse_expression("score >= 0.8").unwrap()),
            at_risk: None,
        };
        assert_eq!(evaluate_goal(&model, &Env::default()).unwrap(), (GoalStatus::Achieved, Some(0.85)));
    }

    #[test]
    fn min_child_status_uses_encoding() {
        let model = InterpretationModel::with_score(Expr::MinChildStatus);
        let mut env = Env::default();
        env.children.insert(id("S1"), GoalStatus::Achieved);
        env.children.insert(id("S2"), GoalStatus::AtRisk);
        assert_eq!(evaluate_goal(&model, &env).unwrap(), (GoalStatus::AtRisk, Some(0.5)));
        env.children.insert(id("S3"), GoalStatus::Unknown);
        assert_eq!(evaluate_goal(&model, &env).unwrap(), (GoalStatus::Unknown, None));
    }

    #[test]
    fn missing_data_is_unknown_regardless_of_conditions() {
        let model = InterpretationModel {
            score: parse_expression("last(M1)").unwrap(),
            achieved: Some(Expr::Bool(true)),
            at_risk: None,
        };
        assert_eq!(evaluate_goal(&model, &Env::default()).unwrap(), (GoalStatus::Unknown, None));
    }

    #[test]
    fn default_thresholds() {
        for (score, want) in [(1.0, GoalStatus::Achieved), (0.7, GoalStatus::AtRisk), (0.2, GoalStatus::Failed)] {
            let model = InterpretationModel::with_score(Expr::Num(score));
            assert_eq!(evaluate_goal(&model, &Env::default()).unwrap().0, want);
        }
    }
}
