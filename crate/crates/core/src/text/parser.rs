//! Recursive-descent parser for `.gqms` documents.
//!
//! The parser recovers at item and declaration boundaries so that one run
//! reports every syntax error it can find. Structural checks are delegated
//! to [`build_grid`] and mapped back onto source spans.

use super::diagnostic::{Diagnostic, Span};
use super::lexer::{lex, Tok, Token};
use crate::evaluation::{Aggregate, ArithOp, CmpOp, Expr, InterpretationModel, LogicOp};
use crate::grid::{
    build_grid, Assumption, ContextFactor, Declaration, DerivationLink, Goal, GoalRelation,
    Grid, GridError, GridMetadata, Inheritance, OrganizationalLevel, RelationKind, Strategy,
};
use crate::id::Id;
use crate::measurement::{Cadence, CollectionSpec, GqmGraph, Metric, Question, ValueKind};

const TOP_KEYWORDS: [&str; 6] = ["grid", "level", "goal", "strategy", "relation", "gqm"];

/// Source positions recorded for one declaration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeclSpans {
    /// From the leading keyword to the declared name.
    pub header: Span,
    /// Every identifier and string token inside the declaration, in order.
    pub tokens: Vec<(String, Span)>,
}

impl DeclSpans {
    /// Span of the last token reading `text`, skipping the first
    /// `skip` recorded tokens.
    fn find(&self, text: &str, skip: usize) -> Option<Span> {
        self.tokens.iter().skip(skip).rev().find(|(t, _)| t == text).map(|(_, s)| *s)
    }
}

/// A parsed document: declarations in source order with their spans.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridDocument {
    pub declarations: Vec<Declaration>,
    pub spans: Vec<DeclSpans>,
}

/// Parses a document into a checked grid, or every diagnostic found.
pub fn parse_grid(source: &str) -> Result<Grid, Vec<Diagnostic>> {
    let (doc, mut diags, broken) = parse_document_inner(source);
    let spans = doc.spans.clone();
    match build_grid(doc.declarations) {
        Ok(grid) if diags.is_empty() => return Ok(grid),
        Ok(_) => {}
        Err(errors) => {
            for e in errors {
                if e.declaration.is_some_and(|d| broken.contains(&d)) {
                    continue;
                }
                let span = e
                    .declaration
                    .and_then(|d| spans.get(d))
                    .map(|s| locate(&e.error, s))
                    .unwrap_or_default();
                diags.push(Diagnostic::grid(span, e.error));
            }
        }
    }
    diags.sort_by_key(|d| (d.span.start, d.span.end));
    Err(diags)
}

/// Parses declarations without structural checks.
pub fn parse_document(source: &str) -> Result<GridDocument, Vec<Diagnostic>> {
    let (doc, diags, _) = parse_document_inner(source);
    if diags.is_empty() {
        Ok(doc)
    } else {
        Err(diags)
    }
}

fn locate(error: &GridError, spans: &DeclSpans) -> Span {
    let target: Option<(String, usize)> = match error {
        GridError::DanglingReference { id, .. } => Some((id.to_string(), 1)),
        GridError::DuplicateId { id } => Some((id.to_string(), 0)),
        GridError::InvalidId { id } => Some((id.clone(), 0)),
        GridError::DuplicateLevelName { name } => Some((name.clone(), 0)),
        GridError::UpwardDerivation { link } => Some((link.to_goal.to_string(), 1)),
        GridError::DuplicateLink { to, .. } => Some((to.to_string(), 1)),
        GridError::CycleDetected { path } => path.get(1).map(|g| (g.to_string(), 1)),
        GridError::MetricWithoutQuestion { metric } | GridError::MissingUnit { metric } => {
            Some((metric.to_string(), 0))
        }
        GridError::NotAChild { child, .. } => Some((child.to_string(), 1)),
        _ => None,
    };
    target
        .and_then(|(text, skip)| spans.find(&text, skip))
        .unwrap_or(spans.header)
}

type PResult<T> = Result<T, ()>;

enum LevelRef {
    Id(Id),
    Name(String),
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    depth: usize,
    diags: Vec<Diagnostic>,
    declarations: Vec<Declaration>,
    spans: Vec<DeclSpans>,
    current: DeclSpans,
    broken: Vec<usize>,
    current_broken: bool,
    level_names: Vec<(usize, String)>,
}

fn parse_document_inner(source: &str) -> (GridDocument, Vec<Diagnostic>, Vec<usize>) {
    let (tokens, lex_diags) = lex(source);
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        depth: 0,
        diags: lex_diags,
        declarations: Vec::new(),
        spans: Vec::new(),
        current: DeclSpans::default(),
        broken: Vec::new(),
        current_broken: false,
        level_names: Vec::new(),
    };
    p.document();

    // Resolve `at "Level Name"` references now that all levels are known.
    for (decl, name) in std::mem::take(&mut p.level_names) {
        let level_id = p.declarations.iter().find_map(|d| match d {
            Declaration::Level(l) if l.name == name => Some(l.id.clone()),
            _ => None,
        });
        if let Declaration::Goal(g) = &mut p.declarations[decl] {
            g.level = level_id.unwrap_or_else(|| Id::unchecked(name));
        }
    }
    let mut diags = p.diags;
    diags.sort_by_key(|d| (d.span.start, d.span.end));
    (GridDocument { declarations: p.declarations, spans: p.spans }, diags, p.broken)
}

impl<'t> Parser<'t> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.tokens[self.pos];
        match &t.tok {
            Tok::Eof => return t,
            Tok::LBrace => self.depth += 1,
            Tok::RBrace => self.depth = self.depth.saturating_sub(1),
            Tok::Ident(s) | Tok::Str(s) => self.current.tokens.push((s.clone(), t.span)),
            _ => {}
        }
        self.pos += 1;
        t
    }

    fn error(&mut self, expected: &str) {
        let found = self.peek().describe();
        let span = self.span();
        self.diags.push(Diagnostic::syntax(span, format!("expected {expected}, found {found}")));
        self.current_broken = true;
    }

    fn error_at(&mut self, span: Span, message: String) {
        self.diags.push(Diagnostic::syntax(span, message));
        self.current_broken = true;
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<Span> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            self.error(&tok.describe());
            Err(())
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(&format!("`{kw}`"));
            Err(())
        }
    }

    fn ident(&mut self, what: &str) -> PResult<Id> {
        match self.peek() {
            Tok::Ident(s) => {
                let id = Id::new(s.clone()).map_err(|_| ())?;
                self.bump();
                Ok(id)
            }
            _ => {
                self.error(what);
                Err(())
            }
        }
    }

    fn string(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Tok::Str(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => {
                self.error(what);
                Err(())
            }
        }
    }

    fn integer(&mut self, what: &str) -> PResult<u32> {
        match *self.peek() {
            Tok::Num(v) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => {
                self.bump();
                Ok(v as u32)
            }
            _ => {
                self.error(what);
                Err(())
            }
        }
    }

    fn document(&mut self) {
        while !self.at_eof() {
            let start_depth = self.depth;
            self.current = DeclSpans::default();
            self.current_broken = false;
            let start = self.span();
            let decl = match self.peek() {
                Tok::Ident(kw) if TOP_KEYWORDS.contains(&kw.as_str()) => {
                    let kw = kw.clone();
                    self.bump();
                    self.declaration(&kw, start)
                }
                _ => {
                    self.error("a declaration (grid, level, goal, strategy, relation or gqm)");
                    Err(())
                }
            };
            match decl {
                Ok(decls) => {
                    for d in decls {
                        if self.current_broken {
                            self.broken.push(self.declarations.len());
                        }
                        self.declarations.push(d);
                        self.spans.push(self.current.clone());
                    }
                }
                Err(()) => self.recover_top(start_depth),
            }
            if self.current_broken && self.depth > start_depth {
                self.recover_top(start_depth);
            }
        }
    }

    /// Skips to the end of the current declaration.
    fn recover_top(&mut self, base: usize) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Ident(kw) if self.depth == base && TOP_KEYWORDS.contains(&kw.as_str()) => return,
                Tok::Semi if self.depth == base => {
                    self.bump();
                    return;
                }
                Tok::RBrace if self.depth == base + 1 => {
                    self.bump();
                    return;
                }
                Tok::RBrace if self.depth <= base => {
                    // Stray closer at top level.
                    self.bump();
                    return;
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    /// Skips to the end of the current item inside a block opened at `base`.
    fn recover_item(&mut self, base: usize) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Semi if self.depth == base => {
                    self.bump();
                    return;
                }
                Tok::RBrace if self.depth == base => return,
                Tok::RBrace if self.depth == base + 1 => {
                    // End of a nested item block.
                    self.bump();
                    return;
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    /// Parses `{ item* }`, calling `item` with each leading keyword.
    fn block(&mut self, what: &str, mut item: impl FnMut(&mut Self, &str) -> PResult<()>) -> PResult<()> {
        self.expect(Tok::LBrace)?;
        let base = self.depth;
        loop {
            match self.peek().clone() {
                Tok::RBrace => {
                    self.bump();
                    return Ok(());
                }
                Tok::Eof => {
                    self.error(&format!("`}}` closing {what}"));
                    return Err(());
                }
                Tok::Ident(kw) => {
                    self.bump();
                    if item(self, &kw).is_err() {
                        self.recover_item(base);
                    }
                }
                _ => {
                    self.error(&format!("an item in {what}"));
                    self.recover_item(base);
                }
            }
        }
    }

    fn end_item(&mut self) -> PResult<()> {
        self.expect(Tok::Semi).map(|_| ())
    }

    fn declaration(&mut self, kw: &str, start: Span) -> PResult<Vec<Declaration>> {
        match kw {
            "grid" => self.metadata(start),
            "level" => self.level(start),
            "goal" => self.goal(start),
            "strategy" => self.strategy(start),
            "relation" => self.relation(start),
            "gqm" => self.gqm(start),
            _ => unreachable!("checked by caller"),
        }
    }

    fn metadata(&mut self, start: Span) -> PResult<Vec<Declaration>> {
        let mut meta = GridMetadata::default();
        if let Tok::Str(_) = self.peek() {
            meta.name = Some(self.string("grid name")?);
        }
        if self.is_kw("version") {
            self.bump();
            meta.version = Some(self.string("version label")?);
        }
        self.current.header = start.to(self.prev_span());
        self.end_item()?;
        Ok(vec![Declaration::Metadata(meta)])
    }

    fn level(&mut self, start: Span) -> PResult<Vec<Declaration>> {
        let id = self.ident("level identifier")?;
        self.current.header = start.to(self.prev_span());
        let name = self.string("level name")?;
        self.expect_kw("rank")?;
        let rank = self.integer("rank (non-negative integer)")?;
        let mut interval = None;
        if self.is_kw("revise_every") {
            self.bump();
            let span = self.span();
            let months = self.integer("revision interval in months")?;
            if months == 0 {
                self.error_at(span, "revision interval must be positive".into());
            }
            interval = Some(months);
        }
        self.end_item()?;
        Ok(vec![Declaration::Level(OrganizationalLevel {
            id,
            name,
            rank,
            revision_interval_months: interval,
        })])
    }

    fn rationale_item(
        &mut self,
        kw: &str,
        factors: &mut Vec<ContextFactor>,
        assumptions: &mut Vec<Assumption>,
    ) -> PResult<bool> {
        match kw {
            "context" => {
                let id = self.ident("context factor identifier")?;
                let statement = self.string("context factor statement")?;
                factors.push(ContextFactor { id, statement });
            }
            "assumption" => {
                let id = self.ident("assumption identifier")?;
                let statement = self.string("assumption statement")?;
                assumptions.push(Assumption { id, statement });
            }
            _ => return Ok(false),
        }
        self.end_item()?;
        Ok(true)
    }

    fn goal(&mut self, start: Span) -> PResult<Vec<Declaration>> {
        let id = self.ident("goal identifier")?;
        self.current.header = start.to(self.prev_span());
        self.expect_kw("at")?;
        let level = match self.peek() {
            Tok::Str(_) => LevelRef::Name(self.string("level")?),
            _ => LevelRef::Id(self.ident("level identifier or name")?),
        };
        let mut goal = Goal {
            id,
            level: match &level {
                LevelRef::Id(l) => l.clone(),
                LevelRef::Name(n) => Id::unchecked(n.clone()),
            },
            description: String::new(),
            priority: None,
            context_factors: Vec::new(),
            assumptions: Vec::new(),
        };
        if let LevelRef::Name(n) = level {
            self.level_names.push((self.declarations.len(), n));
        }
        let mut factors = Vec::new();
        let mut assumptions = Vec::new();
        let result = self.block("goal", |p, kw| match kw {
            "description" => {
                goal.description = p.string("description text")?;
                p.end_item()
            }
            "priority" => {
                let span = p.span();
                let v = p.integer("priority (positive integer)")?;
                if v == 0 {
                    p.error_at(span, "priority must be positive".into());
                }
                goal.priority = Some(v);
                p.end_item()
            }
            other => {
                if p.rationale_item(other, &mut factors, &mut assumptions)? {
                    Ok(())
                } else {
                    p.error_at(p.prev_span(), format!("unknown goal item `{other}`"));
                    Err(())
                }
            }
        });
        goal.context_factors = factors;
        goal.assumptions = assumptions;
        let decl = vec![Declaration::Goal(goal)];
        result.map(|_| decl.clone()).or_else(|_| {
            self.current_broken = true;
            Ok(decl)
        })
    }

    fn strategy(&mut self, start: Span) -> PResult<Vec<Declaration>> {
        let id = self.ident("strategy identifier")?;
        self.current.header = start.to(self.prev_span());
        self.expect_kw("realizes")?;
        let realizes = self.ident("goal identifier")?;
        let mut strategy = Strategy {
            id: id.clone(),
            realizes,
            description: String::new(),
            context_factors: Vec::new(),
            assumptions: Vec::new(),
        };
        let mut links = Vec::new();
        let mut factors = Vec::new();
        let mut assumptions = Vec::new();
        let result = self.block("strategy", |p, kw| match kw {
            "description" => {
                strategy.description = p.string("description text")?;
                p.end_item()
            }
            "leads_to" => {
                let to_goal = p.ident("goal identifier")?;
                let mut inheritance = Inheritance::default();
                if let Tok::Ident(k) = p.peek() {
                    match Inheritance::from_keyword(k) {
                        Some(kind) => {
                            inheritance = kind;
                            p.bump();
                        }
                        None => {
                            p.error("`identical`, `retargeted`, `refined` or `;`");
                            return Err(());
                        }
                    }
                }
                links.push(DerivationLink { from_strategy: id.clone(), to_goal, inheritance });
                p.end_item()
            }
            other => {
                if p.rationale_item(other, &mut factors, &mut assumptions)? {
                    Ok(())
                } else {
                    p.error_at(p.prev_span(), format!("unknown strategy item `{other}`"));
                    Err(())
                }
            }
        });
        if result.is_err() {
            self.current_broken = true;
        }
        strategy.context_factors = factors;
        strategy.assumptions = assumptions;
        let mut out = vec![Declaration::Strategy(strategy)];
        out.extend(links.into_iter().map(Declaration::Derivation));
        Ok(out)
    }

    fn relation(&mut self, start: Span) -> PResult<Vec<Declaration>> {
        let from_goal = self.ident("goal identifier")?;
        let kind = match self.peek() {
            Tok::Ident(k) if k == "conflicts" => RelationKind::Conflicts,
            Tok::Ident(k) if k == "supports" => RelationKind::Supports,
            _ => {
                self.error("`conflicts` or `supports`");
                return Err(());
            }
        };
        self.bump();
        let to_goal = self.ident("goal identifier")?;
        self.current.header = start.to(self.prev_span());
        let mut note = None;
        if !self.eat(&Tok::Semi) {
            let result = self.block("relation", |p, kw| match kw {
                "resolution" => {
                    note = Some(p.string("resolution note")?);
                    p.end_item()
                }
                other => {
                    p.error_at(p.prev_span(), format!("unknown relation item `{other}`"));
                    Err(())
                }
            });
            if result.is_err() {
                self.current_broken = true;
            }
        }
        Ok(vec![Declaration::Relation(GoalRelation { from_goal, to_goal, kind, resolution_note: note })])
    }

    fn gqm(&mut self, start: Span) -> PResult<Vec<Declaration>> {
        self.expect_kw("for")?;
        let owner = self.ident("goal or strategy identifier")?;
        self.current.header = start.to(self.prev_span());
        let mut graph = GqmGraph::new(owner);
        let result = self.block("gqm", |p, kw| {
            let facet = match kw {
                "object" => Some(&mut graph.goal.object),
                "purpose" => Some(&mut graph.goal.purpose),
                "focus" => Some(&mut graph.goal.quality_focus),
                "viewpoint" => Some(&mut graph.goal.viewpoint),
                "context" => Some(&mut graph.goal.context),
                _ => None,
            };
            if let Some(slot) = facet {
                *slot = p.string("facet text")?;
                return p.end_item();
            }
            match kw {
                "question" => {
                    let id = p.ident("question identifier")?;
                    let text = p.string("question text")?;
                    graph.questions.push(Question { id, text });
                    p.end_item()
                }
                "metric" => {
                    let metric = p.metric()?;
                    graph.metrics.push(metric);
                    Ok(())
                }
                "interpretation" => {
                    let keyword_span = p.prev_span();
                    if graph.interpretation.is_some() {
                        p.error_at(keyword_span, "more than one interpretation block".into());
                    }
                    graph.interpretation = Some(p.interpretation(keyword_span)?);
                    Ok(())
                }
                other => {
                    p.error_at(p.prev_span(), format!("unknown gqm item `{other}`"));
                    Err(())
                }
            }
        });
        if result.is_err() {
            self.current_broken = true;
        }
        Ok(vec![Declaration::Gqm(graph)])
    }

    fn metric(&mut self) -> PResult<Metric> {
        let id = self.ident("metric identifier")?;
        let name = self.string("metric name")?;
        let mut metric = Metric {
            id,
            name,
            unit: None,
            kind: ValueKind::Numeric,
            answers: Vec::new(),
            collection: None,
        };
        self.block("metric", |p, kw| match kw {
            "unit" => {
                metric.unit = Some(p.string("unit")?);
                p.end_item()
            }
            "kind" => {
                metric.kind = match p.peek() {
                    Tok::Ident(k) if k == "numeric" => ValueKind::Numeric,
                    Tok::Ident(k) if k == "boolean" => ValueKind::Boolean,
                    _ => {
                        p.error("`numeric` or `boolean`");
                        return Err(());
                    }
                };
                p.bump();
                p.end_item()
            }
            "answers" => {
                metric.answers.push(p.ident("question identifier")?);
                while p.eat(&Tok::Comma) {
                    metric.answers.push(p.ident("question identifier")?);
                }
                p.end_item()
            }
            "collect" => {
                let span = p.prev_span();
                metric.collection = Some(p.collection(span)?);
                Ok(())
            }
            other => {
                p.error_at(p.prev_span(), format!("unknown metric item `{other}`"));
                Err(())
            }
        })?;
        Ok(metric)
    }

    fn collection(&mut self, keyword_span: Span) -> PResult<CollectionSpec> {
        let mut responsible = String::new();
        let mut method = String::new();
        let mut source = String::new();
        let mut cadence = None;
        self.block("collect", |p, kw| {
            match kw {
                "responsible" => responsible = p.string("responsible party")?,
                "method" => method = p.string("collection method")?,
                "source" => source = p.string("data source")?,
                "cadence" => {
                    let span = p.span();
                    let word = match p.peek() {
                        Tok::Ident(w) => w.clone(),
                        _ => {
                            p.error("a cadence");
                            return Err(());
                        }
                    };
                    p.bump();
                    match word.parse::<Cadence>() {
                        Ok(c) => cadence = Some(c),
                        Err(msg) => {
                            p.error_at(span, msg);
                            return Err(());
                        }
                    }
                }
                other => {
                    p.error_at(p.prev_span(), format!("unknown collect item `{other}`"));
                    return Err(());
                }
            }
            p.end_item()
        })?;
        match cadence {
            Some(cadence) => Ok(CollectionSpec { responsible, cadence, method, source }),
            None => {
                self.error_at(keyword_span, "collect block needs a `cadence`".into());
                Err(())
            }
        }
    }

    fn interpretation(&mut self, keyword_span: Span) -> PResult<InterpretationModel> {
        let mut score = None;
        let mut achieved = None;
        let mut at_risk = None;
        self.block("interpretation", |p, kw| {
            match kw {
                "score" => {
                    p.expect(Tok::Assign)?;
                    score = Some(p.expr()?);
                }
                "achieved" => {
                    p.expect_kw("if")?;
                    achieved = Some(p.expr()?);
                }
                "at_risk" => {
                    p.expect_kw("if")?;
                    at_risk = Some(p.expr()?);
                }
                other => {
                    p.error_at(p.prev_span(), format!("unknown interpretation item `{other}`"));
                    return Err(());
                }
            }
            p.end_item()
        })?;
        match score {
            Some(score) => Ok(InterpretationModel { score, achieved, at_risk }),
            None => {
                self.error_at(keyword_span, "interpretation needs `score := ...`".into());
                Err(())
            }
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.is_kw("or") {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Expr::Logic(LogicOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.is_kw("and") {
            self.bump();
            let rhs = self.not_expr()?;
            lhs = Expr::Logic(LogicOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.is_kw("not") {
            self.bump();
            return Ok(Expr::not(self.not_expr()?));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Eq => CmpOp::Eq,
            Tok::Ge => CmpOp::Ge,
            Tok::Gt => CmpOp::Gt,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.add_expr()?;
        Ok(Expr::cmp(op, lhs, rhs))
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.mul_expr()?;
            lhs = Expr::arith(op, lhs, rhs);
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::arith(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            // `-3` is a literal; `-(3)` or `-x` a negation.
            if let Tok::Num(v) = *self.peek() {
                self.bump();
                return Ok(Expr::Num(-v));
            }
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(word) => {
                let span = self.span();
                self.bump();
                match word.as_str() {
                    "true" => return Ok(Expr::Bool(true)),
                    "false" => return Ok(Expr::Bool(false)),
                    "score" => return Ok(Expr::Score),
                    _ => {}
                }
                if !matches!(self.peek(), Tok::LParen) {
                    self.error_at(span, format!("unknown name `{word}` (metrics are read through last(), avg(), min(), max(), sum() or count())"));
                    return Err(());
                }
                self.bump();
                let expr = if let Some(agg) = Aggregate::from_name(&word) {
                    Expr::Agg(agg, self.ident("metric identifier")?)
                } else {
                    match word.as_str() {
                        "child_status" => Expr::ChildStatus(self.ident("element identifier")?),
                        "min_child_status" => Expr::MinChildStatus,
                        "avg_child_status" => Expr::AvgChildStatus,
                        _ => {
                            self.error_at(span, format!("unknown function `{word}`"));
                            return Err(());
                        }
                    }
                };
                self.expect(Tok::RParen)?;
                Ok(expr)
            }
            _ => {
                self.error("an expression");
                Err(())
            }
        }
    }
}

/// Parses a standalone expression (used by tools and tests).
pub fn parse_expression(source: &str) -> Result<Expr, Vec<Diagnostic>> {
    let (tokens, mut diags) = lex(source);
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        depth: 0,
        diags: Vec::new(),
        declarations: Vec::new(),
        spans: Vec::new(),
        current: DeclSpans::default(),
        broken: Vec::new(),
        current_broken: false,
        level_names: Vec::new(),
    };
    let result = p.expr();
    if result.is_ok() && !p.at_eof() {
        p.error("end of expression");
    }
    diags.extend(p.diags);
    match result {
        Ok(e) if diags.is_empty() => Ok(e),
        _ => Err(diags),
    }
}
