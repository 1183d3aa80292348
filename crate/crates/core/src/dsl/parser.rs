//! Recursive-descent parser and validator for `.scn` scenario programs.
//!
//! Parsing is total: malformed input yields a diagnostic list (one entry
//! per problem, each with line and column), never a panic. Validation
//! happens inline while token positions are known: undeclared names,
//! type misuse, and bad values are reported alongside syntax errors.

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    /// Unparseable token stream.
    Syntax,
    /// Undeclared identifier or unknown builtin.
    Name,
    /// Wrong value category (e.g. continuous param used as a lane id).
    Type,
    /// Structurally valid but nonsensical value (e.g. inverted bounds).
    Value,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DiagnosticKind::Syntax => "SyntaxError",
            DiagnosticKind::Name => "NameError",
            DiagnosticKind::Type => "TypeError",
            DiagnosticKind::Value => "ValueError",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug)]
pub struct Diagnostic {
    pub line: u32,
    pub col: u32,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.col, self.kind, self.message)
    }
}

/// Value category of an expression, tracked during validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ty {
    Num,
    Str,
    Bool,
    /// Poisoned by an earlier diagnostic; satisfies every check silently.
    Unknown,
}

/// Where an expression appears, which decides the allowed builtins.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ExprCtx {
    /// Placement offsets, headings, speeds, behavior arguments:
    /// parameters only, evaluated before agents exist.
    Value,
    /// `require` lines: parameters plus agent builtins over the initial scene.
    Requirement,
    /// `terminate when` predicates: like Requirement, plus `time`.
    Predicate,
}

/// Argument category in a behavior signature.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArgType {
    Num,
    Lane,
}

pub struct ArgSpec {
    pub name: &'static str,
    pub ty: ArgType,
    pub required: bool,
}

pub struct BehaviorSig {
    pub name: &'static str,
    pub args: &'static [ArgSpec],
}

macro_rules! arg {
    ($name:literal, $ty:ident, $req:literal) => {
        ArgSpec {
            name: $name,
            ty: ArgType::$ty,
            required: $req,
        }
    };
}

/// The builtin behavior catalog. Behaviors are builtins with parameters,
/// not user code; this table drives both parse-time validation and
/// instantiation defaults.
pub const BEHAVIOR_SIGS: &[BehaviorSig] = &[
    BehaviorSig {
        name: "FollowLane",
        args: &[arg!("speed", Num, true)],
    },
    BehaviorSig {
        name: "FollowVehicle",
        args: &[
            arg!("speed", Num, true),
            arg!("t_gap", Num, false),
            arg!("k_v", Num, false),
            arg!("k_s", Num, false),
        ],
    },
    BehaviorSig {
        name: "LaneChange",
        args: &[arg!("target", Lane, true), arg!("speed", Num, true)],
    },
    BehaviorSig {
        name: "Brake",
        args: &[arg!("decel", Num, true), arg!("trigger", Num, true)],
    },
    BehaviorSig {
        name: "PullIn",
        args: &[
            arg!("trigger", Num, true),
            arg!("speed", Num, true),
            arg!("target", Lane, false),
        ],
    },
    BehaviorSig {
        name: "CrossRoad",
        args: &[
            arg!("wait_before", Num, true),
            arg!("speed", Num, true),
            arg!("wait_inside", Num, false),
            arg!("distance", Num, false),
        ],
    },
    BehaviorSig { name: "Park", args: &[] },
    BehaviorSig {
        name: "Wait",
        args: &[arg!("duration", Num, false)],
    },
];

pub fn behavior_sig(name: &str) -> Option<&'static BehaviorSig> {
    BEHAVIOR_SIGS.iter().find(|s| s.name == name)
}

/// Parse and validate a scenario program.
///
/// Returns the validated AST, or every diagnostic found. Never panics on
/// malformed input.
pub fn parse(source: &str) -> Result<ScenarioProgram, Vec<Diagnostic>> {
    let mut p = Parser {
        tokens: tokenize(source),
        pos: 0,
        diags: Vec::new(),
    };
    let prog = p.parse_program();
    if p.diags.is_empty() {
        Ok(prog)
    } else {
        Err(p.diags)
    }
}

/// Names and types visible while validating one scenario scope.
#[derive(Default)]
struct Scope {
    params: Vec<(String, Ty)>,
    agents: Vec<String>,
    has_ego: bool,
}

impl Scope {
    fn param_ty(&self, name: &str) -> Option<Ty> {
        self.params
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| *t)
    }

    fn has_agent(&self, name: &str) -> bool {
        self.agents.iter().any(|a| a == name)
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_kind(&self) -> &TokenKind {
        &self.peek().kind
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek_kind(), TokenKind::Eof)
    }

    fn report(&mut self, tok_line: u32, tok_col: u32, kind: DiagnosticKind, msg: impl Into<String>) {
        self.diags.push(Diagnostic {
            line: tok_line,
            col: tok_col,
            kind,
            message: msg.into(),
        });
    }

    fn report_here(&mut self, kind: DiagnosticKind, msg: impl Into<String>) {
        let (l, c) = (self.peek().line, self.peek().col);
        self.report(l, c, kind, msg);
    }

    /// Skip to just past the next newline; used for statement-level recovery.
    fn recover_line(&mut self) {
        while !matches!(self.peek_kind(), TokenKind::Newline | TokenKind::Eof) {
            self.advance();
        }
        if matches!(self.peek_kind(), TokenKind::Newline) {
            self.advance();
        }
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek_kind(), TokenKind::Newline) {
            self.advance();
        }
    }

    /// Expect a line to be finished; diagnose trailing tokens.
    fn end_line(&mut self) {
        match self.peek_kind() {
            TokenKind::Newline => {
                self.advance();
            }
            TokenKind::Eof => {}
            _ => {
                let found = self.peek_kind().describe();
                self.report_here(
                    DiagnosticKind::Syntax,
                    format!("unexpected {found} at end of statement"),
                );
                self.recover_line();
            }
        }
    }

    fn expect_ident_word(&mut self, word: &str) -> bool {
        if let TokenKind::Ident(s) = self.peek_kind() {
            if s == word {
                self.advance();
                return true;
            }
        }
        let found = self.peek_kind().describe();
        self.report_here(
            DiagnosticKind::Syntax,
            format!("expected `{word}`, found {found}"),
        );
        false
    }

    fn expect(&mut self, kind: TokenKind) -> bool {
        if *self.peek_kind() == kind {
            self.advance();
            return true;
        }
        let found = self.peek_kind().describe();
        self.report_here(
            DiagnosticKind::Syntax,
            format!("expected {}, found {found}", kind.describe()),
        );
        false
    }

    fn take_ident(&mut self, what: &str) -> Option<(String, u32, u32)> {
        if let TokenKind::Ident(s) = self.peek_kind().clone() {
            let t = self.advance();
            return Some((s, t.line, t.col));
        }
        let found = self.peek_kind().describe();
        self.report_here(
            DiagnosticKind::Syntax,
            format!("expected {what}, found {found}"),
        );
        None
    }

    fn take_string(&mut self, what: &str) -> Option<String> {
        match self.peek_kind().clone() {
            TokenKind::Str(s) => {
                self.advance();
                Some(s)
            }
            TokenKind::BadStr => {
                self.report_here(DiagnosticKind::Syntax, "unterminated string literal");
                self.advance();
                None
            }
            other => {
                self.report_here(
                    DiagnosticKind::Syntax,
                    format!("expected {what}, found {}", other.describe()),
                );
                None
            }
        }
    }

    /// Numeric literal with optional leading minus.
    fn take_number(&mut self, what: &str) -> Option<f64> {
        let neg = if matches!(self.peek_kind(), TokenKind::Minus) {
            self.advance();
            true
        } else {
            false
        };
        if let TokenKind::Num(n) = *self.peek_kind() {
            self.advance();
            return Some(if neg { -n } else { n });
        }
        let found = self.peek_kind().describe();
        self.report_here(
            DiagnosticKind::Syntax,
            format!("expected {what}, found {found}"),
        );
        None
    }

    // ----- program structure ---------------------------------------------

    fn parse_program(&mut self) -> ScenarioProgram {
        let mut root = ScenarioProgram::empty("main");
        let mut root_scope = Scope::default();
        let mut seen_terminate_after = false;
        let mut seen_terminate_when = false;
        let mut sub_names: Vec<String> = Vec::new();

        self.skip_newlines();
        while !self.at_eof() {
            let tok = self.peek().clone();
            let word = match &tok.kind {
                TokenKind::Ident(s) => s.clone(),
                other => {
                    let found = other.describe();
                    self.report(
                        tok.line,
                        tok.col,
                        DiagnosticKind::Syntax,
                        format!("expected a declaration, found {found}"),
                    );
                    self.recover_line();
                    self.skip_newlines();
                    continue;
                }
            };
            match word.as_str() {
                "map" => {
                    self.advance();
                    if let Some(path) = self.take_string("map path string") {
                        if root.map.is_some() {
                            self.report(
                                tok.line,
                                tok.col,
                                DiagnosticKind::Value,
                                "duplicate `map` declaration",
                            );
                        }
                        root.map = Some(path);
                    }
                    self.end_line();
                }
                "weather" => {
                    self.advance();
                    if let Some(tag) = self.take_string("weather tag string") {
                        root.weather = Some(tag);
                    }
                    self.end_line();
                }
                "scenario" => {
                    self.advance();
                    if let Some((name, line, col)) = self.take_ident("scenario name") {
                        if sub_names.contains(&name) {
                            self.report(
                                line,
                                col,
                                DiagnosticKind::Value,
                                format!("duplicate subscenario name `{name}`"),
                            );
                        }
                        self.end_line();
                        let sub = self.parse_subscenario(&name);
                        sub_names.push(name);
                        root.subscenarios.push(sub);
                    } else {
                        self.recover_line();
                    }
                }
                "compose" => {
                    self.advance();
                    let compose = self.parse_compose(&root, &root_scope);
                    if root.composition.is_some() {
                        self.report(
                            tok.line,
                            tok.col,
                            DiagnosticKind::Value,
                            "duplicate `compose` block",
                        );
                    }
                    root.composition = compose;
                }
                "end" => {
                    self.report(
                        tok.line,
                        tok.col,
                        DiagnosticKind::Syntax,
                        "`end` without an open block",
                    );
                    self.recover_line();
                }
                _ => {
                    self.parse_body_stmt(
                        &word,
                        &mut root,
                        &mut root_scope,
                        &mut seen_terminate_after,
                        &mut seen_terminate_when,
                        true,
                    );
                }
            }
            self.skip_newlines();
        }
        root
    }

    fn parse_subscenario(&mut self, name: &str) -> ScenarioProgram {
        let mut sub = ScenarioProgram::empty(name);
        let mut scope = Scope::default();
        let mut seen_after = false;
        let mut seen_when = false;
        self.skip_newlines();
        loop {
            if self.at_eof() {
                self.report_here(
                    DiagnosticKind::Syntax,
                    format!("missing `end` for scenario `{name}`"),
                );
                break;
            }
            let tok = self.peek().clone();
            let word = match &tok.kind {
                TokenKind::Ident(s) => s.clone(),
                other => {
                    let found = other.describe();
                    self.report(
                        tok.line,
                        tok.col,
                        DiagnosticKind::Syntax,
                        format!("expected a declaration or `end`, found {found}"),
                    );
                    self.recover_line();
                    self.skip_newlines();
                    continue;
                }
            };
            if word == "end" {
                self.advance();
                self.end_line();
                break;
            }
            match word.as_str() {
                "scenario" | "compose" | "map" | "weather" => {
                    self.report(
                        tok.line,
                        tok.col,
                        DiagnosticKind::Syntax,
                        format!("`{word}` is not allowed inside a scenario block"),
                    );
                    self.recover_line();
                }
                _ => {
                    self.parse_body_stmt(
                        &word,
                        &mut sub,
                        &mut scope,
                        &mut seen_after,
                        &mut seen_when,
                        false,
                    );
                }
            }
            self.skip_newlines();
        }
        sub
    }

    #[allow(clippy::too_many_arguments)]
    fn parse_body_stmt(
        &mut self,
        word: &str,
        prog: &mut ScenarioProgram,
        scope: &mut Scope,
        seen_after: &mut bool,
        seen_when: &mut bool,
        is_root: bool,
    ) {
        let tok = self.peek().clone();
        match word {
            "param" => {
                self.advance();
                if let Some(decl) = self.parse_param(scope) {
                    prog.params.push(decl);
                }
                self.end_line();
            }
            "ego" => {
                self.advance();
                if !is_root {
                    self.report(
                        tok.line,
                        tok.col,
                        DiagnosticKind::Value,
                        "subscenarios may not declare an ego agent",
                    );
                }
                if scope.has_ego {
                    self.report(
                        tok.line,
                        tok.col,
                        DiagnosticKind::Value,
                        "at most one agent may be designated ego",
                    );
                }
                if !self.expect(TokenKind::Assign) {
                    self.recover_line();
                    return;
                }
                if let Some(agent) = self.parse_agent_spec("ego", true, scope) {
                    scope.has_ego = true;
                    scope.agents.push("ego".into());
                    prog.agents.push(agent);
                }
                self.end_line();
            }
            "agent" => {
                self.advance();
                let Some((name, line, col)) = self.take_ident("agent name") else {
                    self.recover_line();
                    return;
                };
                if scope.has_agent(&name) || name == "ego" {
                    self.report(
                        line,
                        col,
                        DiagnosticKind::Value,
                        format!("duplicate agent name `{name}`"),
                    );
                }
                if !self.expect(TokenKind::Assign) {
                    self.recover_line();
                    return;
                }
                if let Some(agent) = self.parse_agent_spec(&name, false, scope) {
                    scope.agents.push(name);
                    prog.agents.push(agent);
                }
                self.end_line();
            }
            "require" => {
                self.advance();
                if let Some((expr, ty)) = self.parse_expr_validated(scope, ExprCtx::Requirement) {
                    if ty != Ty::Bool && ty != Ty::Unknown {
                        self.report(
                            tok.line,
                            tok.col,
                            DiagnosticKind::Type,
                            "`require` expects a boolean expression",
                        );
                    }
                    prog.requirements.push(expr);
                }
                self.end_line();
            }
            "terminate" => {
                self.advance();
                match self.peek_kind().clone() {
                    TokenKind::Ident(w) if w == "after" => {
                        self.advance();
                        let t = self.peek().clone();
                        if let Some(n) = self.take_number("duration in seconds") {
                            if *seen_after {
                                self.report(
                                    tok.line,
                                    tok.col,
                                    DiagnosticKind::Value,
                                    "duplicate `terminate after`",
                                );
                            }
                            *seen_after = true;
                            if !(n > 0.0) || !n.is_finite() {
                                self.report(
                                    t.line,
                                    t.col,
                                    DiagnosticKind::Value,
                                    "max simulation time must be positive and finite",
                                );
                            } else {
                                prog.termination.max_time = n;
                            }
                        }
                    }
                    TokenKind::Ident(w) if w == "when" => {
                        self.advance();
                        if let Some((expr, ty)) =
                            self.parse_expr_validated(scope, ExprCtx::Predicate)
                        {
                            if ty != Ty::Bool && ty != Ty::Unknown {
                                self.report(
                                    tok.line,
                                    tok.col,
                                    DiagnosticKind::Type,
                                    "`terminate when` expects a boolean expression",
                                );
                            }
                            if *seen_when {
                                self.report(
                                    tok.line,
                                    tok.col,
                                    DiagnosticKind::Value,
                                    "duplicate `terminate when`",
                                );
                            }
                            *seen_when = true;
                            prog.termination.predicate = Some(expr);
                        }
                    }
                    other => {
                        let found = other.describe();
                        self.report_here(
                            DiagnosticKind::Syntax,
                            format!("expected `after` or `when`, found {found}"),
                        );
                    }
                }
                self.end_line();
            }
            other => {
                self.report(
                    tok.line,
                    tok.col,
                    DiagnosticKind::Syntax,
                    format!("unknown declaration `{other}`"),
                );
                self.recover_line();
            }
        }
    }

    // ----- params ---------------------------------------------------------

    fn parse_param(&mut self, scope: &mut Scope) -> Option<ParamDecl> {
        let (name, line, col) = self.take_ident("parameter name")?;
        if scope.param_ty(&name).is_some() {
            self.report(
                line,
                col,
                DiagnosticKind::Value,
                format!("duplicate parameter `{name}`"),
            );
        }
        if !self.expect(TokenKind::Assign) {
            self.recover_line();
            return None;
        }
        let dist = self.parse_distribution()?;
        let ty = match &dist {
            Distribution::UniformContinuous { .. } => Ty::Num,
            Distribution::DiscreteChoice { values } => match values.first() {
                Some(ParamValue::Str(_)) => Ty::Str,
                _ => Ty::Num,
            },
            Distribution::Constant { value } => match value {
                ParamValue::Num(_) => Ty::Num,
                ParamValue::Str(_) => Ty::Str,
            },
        };
        scope.params.push((name.clone(), ty));
        Some(ParamDecl { name, dist })
    }

    fn parse_distribution(&mut self) -> Option<Distribution> {
        let tok = self.peek().clone();
        match tok.kind.clone() {
            TokenKind::Ident(w) if w == "uniform" => {
                self.advance();
                self.expect(TokenKind::LParen);
                let lo = self.take_number("lower bound")?;
                self.expect(TokenKind::Comma);
                let hi = self.take_number("upper bound")?;
                self.expect(TokenKind::RParen);
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    self.report(
                        tok.line,
                        tok.col,
                        DiagnosticKind::Value,
                        format!("uniform bounds must satisfy lo < hi and be finite (got {lo}, {hi})"),
                    );
                    return None;
                }
                Some(Distribution::UniformContinuous { lo, hi })
            }
            TokenKind::Ident(w) if w == "choice" => {
                self.advance();
                self.expect(TokenKind::LParen);
                let mut values = Vec::new();
                if !matches!(self.peek_kind(), TokenKind::RParen) {
                    loop {
                        let v = self.parse_param_value()?;
                        values.push(v);
                        if matches!(self.peek_kind(), TokenKind::Comma) {
                            self.advance();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(TokenKind::RParen);
                if values.is_empty() {
                    self.report(
                        tok.line,
                        tok.col,
                        DiagnosticKind::Value,
                        "choice requires at least one value",
                    );
                    return None;
                }
                let all_num = values.iter().all(|v| matches!(v, ParamValue::Num(_)));
                let all_str = values.iter().all(|v| matches!(v, ParamValue::Str(_)));
                if !all_num && !all_str {
                    self.report(
                        tok.line,
                        tok.col,
                        DiagnosticKind::Value,
                        "choice values must be all numbers or all strings",
                    );
                    return None;
                }
                for i in 0..values.len() {
                    for j in i + 1..values.len() {
                        if values[i].same_as(&values[j]) {
                            self.report(
                                tok.line,
                                tok.col,
                                DiagnosticKind::Value,
                                format!("choice values must be distinct ({} repeats)", values[i]),
                            );
                            return None;
                        }
                    }
                }
                Some(Distribution::DiscreteChoice { values })
            }
            _ => {
                let value = self.parse_param_value()?;
                Some(Distribution::Constant { value })
            }
        }
    }

    fn parse_param_value(&mut self) -> Option<ParamValue> {
        match self.peek_kind().clone() {
            TokenKind::Str(s) => {
                self.advance();
                Some(ParamValue::Str(s))
            }
            TokenKind::Num(_) | TokenKind::Minus => {
                self.take_number("value").map(ParamValue::Num)
            }
            other => {
                self.report_here(
                    DiagnosticKind::Syntax,
                    format!("expected a number or string value, found {}", other.describe()),
                );
                None
            }
        }
    }

    // ----- agents -----------------------------------------------------------

    fn parse_agent_spec(&mut self, name: &str, is_ego: bool, scope: &Scope) -> Option<AgentDecl> {
        let (kind_word, kline, kcol) = self.take_ident("agent kind")?;
        let kind = match kind_word.as_str() {
            "car" => AgentKind::Car,
            "bus" => AgentKind::Bus,
            "pedestrian" => AgentKind::Pedestrian,
            other => {
                self.report(
                    kline,
                    kcol,
                    DiagnosticKind::Name,
                    format!("unknown agent kind `{other}` (expected car, bus, or pedestrian)"),
                );
                self.recover_line();
                return None;
            }
        };

        let placement = match self.peek_kind().clone() {
            TokenKind::Ident(w) if w == "on" => {
                self.advance();
                if !self.expect_ident_word("lane") {
                    self.recover_line();
                    return None;
                }
                let lane = self.parse_lane_ref(scope)?;
                if !self.expect_ident_word("at") {
                    self.recover_line();
                    return None;
                }
                let (offset, oty) = self.parse_expr_validated(scope, ExprCtx::Value)?;
                self.require_num(oty, "lane offset");
                let mut lateral = None;
                if self.peek_ident_is("offset") {
                    self.advance();
                    if !self.expect_ident_word("right") {
                        self.recover_line();
                        return None;
                    }
                    let (lat, lty) = self.parse_expr_validated(scope, ExprCtx::Value)?;
                    self.require_num(lty, "lateral offset");
                    lateral = Some(lat);
                }
                Placement::OnLane {
                    lane,
                    offset,
                    lateral,
                }
            }
            TokenKind::Ident(w) if w == "at" => {
                self.advance();
                self.expect(TokenKind::LParen);
                let (x, xty) = self.parse_expr_validated(scope, ExprCtx::Value)?;
                self.require_num(xty, "x coordinate");
                self.expect(TokenKind::Comma);
                let (y, yty) = self.parse_expr_validated(scope, ExprCtx::Value)?;
                self.require_num(yty, "y coordinate");
                self.expect(TokenKind::RParen);
                Placement::Absolute { x, y }
            }
            other => {
                self.report_here(
                    DiagnosticKind::Syntax,
                    format!("expected placement (`on lane ...` or `at (x, y)`), found {}", other.describe()),
                );
                self.recover_line();
                return None;
            }
        };

        let mut heading = None;
        let mut speed = None;
        let mut route = None;
        loop {
            if self.peek_ident_is("heading") {
                self.advance();
                let (h, hty) = self.parse_expr_validated(scope, ExprCtx::Value)?;
                self.require_num(hty, "heading");
                heading = Some(h);
            } else if self.peek_ident_is("speed") {
                self.advance();
                let (s, sty) = self.parse_expr_validated(scope, ExprCtx::Value)?;
                self.require_num(sty, "speed");
                speed = Some(s);
            } else if self.peek_ident_is("route") {
                self.advance();
                self.expect(TokenKind::LParen);
                let mut lanes = Vec::new();
                if !matches!(self.peek_kind(), TokenKind::RParen) {
                    loop {
                        lanes.push(self.parse_lane_ref(scope)?);
                        if matches!(self.peek_kind(), TokenKind::Comma) {
                            self.advance();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(TokenKind::RParen);
                route = Some(lanes);
            } else {
                break;
            }
        }

        if !self.expect(TokenKind::Comma) {
            self.recover_line();
            return None;
        }
        if !self.expect_ident_word("behavior") {
            self.recover_line();
            return None;
        }
        let behavior = self.parse_behavior(kind, scope)?;

        // Absolute placement requires a heading for vehicles (they travel
        // along it); pedestrians walk along their heading too.
        if matches!(placement, Placement::Absolute { .. }) && heading.is_none() {
            self.report_here(
                DiagnosticKind::Value,
                format!("agent `{name}` uses absolute placement and needs a `heading`"),
            );
        }

        Some(AgentDecl {
            name: name.to_string(),
            kind,
            placement,
            heading,
            speed,
            route,
            behavior,
            is_ego,
        })
    }

    fn parse_lane_ref(&mut self, scope: &Scope) -> Option<LaneRef> {
        match self.peek_kind().clone() {
            TokenKind::Str(s) => {
                self.advance();
                Some(LaneRef::Literal(s))
            }
            TokenKind::Ident(name) => {
                let t = self.advance();
                match scope.param_ty(&name) {
                    Some(Ty::Str) => Some(LaneRef::Param(name)),
                    Some(_) => {
                        self.report(
                            t.line,
                            t.col,
                            DiagnosticKind::Type,
                            format!("parameter `{name}` is numeric and cannot be used as a lane id"),
                        );
                        None
                    }
                    None => {
                        self.report(
                            t.line,
                            t.col,
                            DiagnosticKind::Name,
                            format!("undeclared parameter `{name}` used as a lane id"),
                        );
                        None
                    }
                }
            }
            other => {
                self.report_here(
                    DiagnosticKind::Syntax,
                    format!("expected a lane id string or parameter, found {}", other.describe()),
                );
                None
            }
        }
    }

    fn parse_behavior(&mut self, agent_kind: AgentKind, scope: &Scope) -> Option<BehaviorDecl> {
        let (name, line, col) = self.take_ident("behavior name")?;
        let sig = behavior_sig(&name);
        if sig.is_none() {
            self.report(
                line,
                col,
                DiagnosticKind::Name,
                format!("unknown behavior `{name}`"),
            );
        }
        if let Some(sig) = sig {
            let ped_only = sig.name == "CrossRoad";
            let is_ped = agent_kind == AgentKind::Pedestrian;
            if ped_only && !is_ped {
                self.report(
                    line,
                    col,
                    DiagnosticKind::Type,
                    format!("behavior `{name}` applies to pedestrians only"),
                );
            }
            if is_ped && !matches!(sig.name, "CrossRoad" | "Wait" | "Park") {
                self.report(
                    line,
                    col,
                    DiagnosticKind::Type,
                    format!("behavior `{name}` does not apply to pedestrians"),
                );
            }
        }

        let mut args = Vec::new();
        self.expect(TokenKind::LParen);
        if !matches!(self.peek_kind(), TokenKind::RParen) {
            loop {
                let Some((arg_name, aline, acol)) = self.take_ident("argument name") else {
                    self.recover_line();
                    return None;
                };
                if !self.expect(TokenKind::Assign) {
                    self.recover_line();
                    return None;
                }
                let spec = sig.and_then(|s| s.args.iter().find(|a| a.name == arg_name));
                if sig.is_some() && spec.is_none() {
                    self.report(
                        aline,
                        acol,
                        DiagnosticKind::Type,
                        format!("behavior `{name}` has no argument `{arg_name}`"),
                    );
                }
                let (value, vty) = self.parse_expr_validated(scope, ExprCtx::Value)?;
                if let Some(spec) = spec {
                    match spec.ty {
                        ArgType::Num => {
                            if !matches!(vty, Ty::Num | Ty::Unknown) {
                                self.report(
                                    aline,
                                    acol,
                                    DiagnosticKind::Type,
                                    format!("argument `{arg_name}` expects a number"),
                                );
                            }
                        }
                        ArgType::Lane => {
                            if !matches!(vty, Ty::Str | Ty::Unknown) {
                                self.report(
                                    aline,
                                    acol,
                                    DiagnosticKind::Type,
                                    format!("argument `{arg_name}` expects a lane id"),
                                );
                            }
                        }
                    }
                }
                if args.iter().any(|(n, _)| n == &arg_name) {
                    self.report(
                        aline,
                        acol,
                        DiagnosticKind::Value,
                        format!("duplicate argument `{arg_name}`"),
                    );
                }
                args.push((arg_name, value));
                if matches!(self.peek_kind(), TokenKind::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen);

        if let Some(sig) = sig {
            for a in sig.args.iter().filter(|a| a.required) {
                if !args.iter().any(|(n, _)| n == a.name) {
                    self.report(
                        line,
                        col,
                        DiagnosticKind::Type,
                        format!("behavior `{name}` requires argument `{}`", a.name),
                    );
                }
            }
        }

        Some(BehaviorDecl { name, args })
    }

    // ----- compose ----------------------------------------------------------

    fn parse_compose(&mut self, root: &ScenarioProgram, scope: &Scope) -> Option<CompositionSpec> {
        let (mode_word, mline, mcol) = self.take_ident("composition mode")?;
        let mode = match mode_word.as_str() {
            "parallel" => CompositionMode::Parallel,
            "sequential" => CompositionMode::Sequential,
            "opportunistic" => CompositionMode::Opportunistic,
            other => {
                self.report(
                    mline,
                    mcol,
                    DiagnosticKind::Name,
                    format!("unknown composition mode `{other}`"),
                );
                self.recover_line();
                return None;
            }
        };
        self.end_line();
        self.skip_newlines();

        let mut entries = Vec::new();
        loop {
            if self.at_eof() {
                self.report_here(DiagnosticKind::Syntax, "missing `end` for compose block");
                break;
            }
            let tok = self.peek().clone();
            let Some((name, line, col)) = self.take_ident("subscenario name or `end`") else {
                self.recover_line();
                self.skip_newlines();
                continue;
            };
            if name == "end" {
                self.end_line();
                break;
            }
            if root.subscenario(&name).is_none() {
                self.report(
                    line,
                    col,
                    DiagnosticKind::Name,
                    format!("compose entry references undeclared subscenario `{name}`"),
                );
            }
            let mut trigger = None;
            if self.peek_ident_is("when") {
                self.advance();
                trigger = self.parse_trigger(scope);
            }
            match mode {
                CompositionMode::Opportunistic if trigger.is_none() => {
                    self.report(
                        tok.line,
                        tok.col,
                        DiagnosticKind::Value,
                        "opportunistic entries must carry a trigger",
                    );
                }
                CompositionMode::Parallel | CompositionMode::Sequential if trigger.is_some() => {
                    self.report(
                        tok.line,
                        tok.col,
                        DiagnosticKind::Value,
                        format!("{mode} entries must not carry a trigger"),
                    );
                    trigger = None;
                }
                _ => {}
            }
            entries.push(CompositionEntry {
                subscenario: name,
                trigger,
            });
            self.end_line();
            self.skip_newlines();
        }

        Some(CompositionSpec { mode, entries })
    }

    fn parse_trigger(&mut self, scope: &Scope) -> Option<TriggerSpec> {
        let (agent, aline, acol) = self.take_ident("agent name")?;
        if agent != "ego" && !scope.has_agent(&agent) {
            self.report(
                aline,
                acol,
                DiagnosticKind::Name,
                format!("trigger references undeclared agent `{agent}`"),
            );
        }
        if !self.expect_ident_word("enters") {
            return None;
        }
        let (kind_word, kline, kcol) = self.take_ident("region kind")?;
        let region = match kind_word.as_str() {
            "intersection" => RegionRef::Intersection(self.take_string("intersection id")?),
            "region" => RegionRef::Named(self.take_string("region id")?),
            "circle" => {
                self.expect(TokenKind::LParen);
                let x = self.take_number("center x")?;
                self.expect(TokenKind::Comma);
                let y = self.take_number("center y")?;
                self.expect(TokenKind::Comma);
                let radius = self.take_number("radius")?;
                self.expect(TokenKind::RParen);
                if !(radius > 0.0) {
                    self.report(
                        kline,
                        kcol,
                        DiagnosticKind::Value,
                        "circle radius must be positive",
                    );
                }
                RegionRef::Circle { x, y, radius }
            }
            "lane" => {
                let lane = self.take_string("lane id")?;
                if !self.expect_ident_word("from") {
                    return None;
                }
                let from = self.take_number("segment start")?;
                if !self.expect_ident_word("to") {
                    return None;
                }
                let to = self.take_number("segment end")?;
                if !(from < to) {
                    self.report(
                        kline,
                        kcol,
                        DiagnosticKind::Value,
                        "lane segment requires from < to",
                    );
                }
                RegionRef::LaneSegment { lane, from, to }
            }
            other => {
                self.report(
                    kline,
                    kcol,
                    DiagnosticKind::Name,
                    format!("unknown region kind `{other}`"),
                );
                return None;
            }
        };
        Some(TriggerSpec {
            agent,
            region,
            action: TriggerAction::SpawnOnEnterDespawnOnExit,
        })
    }

    // ----- expressions --------------------------------------------------------

    fn peek_ident_is(&self, word: &str) -> bool {
        matches!(self.peek_kind(), TokenKind::Ident(s) if s == word)
    }

    fn require_num(&mut self, ty: Ty, what: &str) {
        if !matches!(ty, Ty::Num | Ty::Unknown) {
            self.report_here(DiagnosticKind::Type, format!("{what} expects a number"));
        }
    }

    fn parse_expr_validated(&mut self, scope: &Scope, ctx: ExprCtx) -> Option<(Expr, Ty)> {
        self.parse_binary(0, scope, ctx)
    }

    fn parse_binary(&mut self, min_prec: u8, scope: &Scope, ctx: ExprCtx) -> Option<(Expr, Ty)> {
        let (mut lhs, mut lty) = self.parse_unary(scope, ctx)?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                TokenKind::Lt => BinOp::Lt,
                TokenKind::Le => BinOp::Le,
                TokenKind::Gt => BinOp::Gt,
                TokenKind::Ge => BinOp::Ge,
                TokenKind::EqEq => BinOp::Eq,
                TokenKind::Ne => BinOp::Ne,
                TokenKind::Ident(w) if w == "and" => BinOp::And,
                TokenKind::Ident(w) if w == "or" => BinOp::Or,
                _ => break,
            };
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let op_tok = self.advance();
            let (rhs, rty) = self.parse_binary(prec + 1, scope, ctx)?;
            let ty = self.check_binop(op, lty, rty, op_tok.line, op_tok.col);
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
            lty = ty;
        }
        Some((lhs, lty))
    }

    fn check_binop(&mut self, op: BinOp, lty: Ty, rty: Ty, line: u32, col: u32) -> Ty {
        use BinOp::*;
        let poisoned = lty == Ty::Unknown || rty == Ty::Unknown;
        match op {
            Add | Sub | Mul | Div => {
                if !poisoned && (lty != Ty::Num || rty != Ty::Num) {
                    self.report(
                        line,
                        col,
                        DiagnosticKind::Type,
                        format!("operator `{}` expects numeric operands", op.symbol()),
                    );
                    return Ty::Unknown;
                }
                if poisoned {
                    Ty::Unknown
                } else {
                    Ty::Num
                }
            }
            Lt | Le | Gt | Ge => {
                if !poisoned && (lty != Ty::Num || rty != Ty::Num) {
                    self.report(
                        line,
                        col,
                        DiagnosticKind::Type,
                        format!("comparison `{}` expects numeric operands", op.symbol()),
                    );
                    return Ty::Unknown;
                }
                Ty::Bool
            }
            Eq | Ne => {
                if !poisoned && lty != rty {
                    self.report(
                        line,
                        col,
                        DiagnosticKind::Type,
                        format!("`{}` operands must have the same type", op.symbol()),
                    );
                    return Ty::Unknown;
                }
                Ty::Bool
            }
            And | Or => {
                if !poisoned && (lty != Ty::Bool || rty != Ty::Bool) {
                    self.report(
                        line,
                        col,
                        DiagnosticKind::Type,
                        format!("`{}` expects boolean operands", op.symbol()),
                    );
                    return Ty::Unknown;
                }
                Ty::Bool
            }
        }
    }

    fn parse_unary(&mut self, scope: &Scope, ctx: ExprCtx) -> Option<(Expr, Ty)> {
        match self.peek_kind().clone() {
            TokenKind::Minus => {
                let t = self.advance();
                let (inner, ty) = self.parse_unary(scope, ctx)?;
                if !matches!(ty, Ty::Num | Ty::Unknown) {
                    self.report(t.line, t.col, DiagnosticKind::Type, "`-` expects a number");
                }
                Some((Expr::Neg(Box::new(inner)), Ty::Num))
            }
            TokenKind::Ident(w) if w == "not" => {
                let t = self.advance();
                let (inner, ty) = self.parse_unary(scope, ctx)?;
                if !matches!(ty, Ty::Bool | Ty::Unknown) {
                    self.report(t.line, t.col, DiagnosticKind::Type, "`not` expects a boolean");
                }
                Some((Expr::Not(Box::new(inner)), Ty::Bool))
            }
            _ => self.parse_primary(scope, ctx),
        }
    }

    fn parse_primary(&mut self, scope: &Scope, ctx: ExprCtx) -> Option<(Expr, Ty)> {
        match self.peek_kind().clone() {
            TokenKind::Num(n) => {
                self.advance();
                Some((Expr::Num(n), Ty::Num))
            }
            TokenKind::Str(s) => {
                self.advance();
                Some((Expr::Str(s), Ty::Str))
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.parse_binary(0, scope, ctx)?;
                self.expect(TokenKind::RParen);
                Some(inner)
            }
            TokenKind::Ident(name) => {
                let t = self.advance();
                if matches!(self.peek_kind(), TokenKind::LParen) {
                    return self.parse_call(&name, t.line, t.col, scope, ctx);
                }
                if name == "time" && ctx == ExprCtx::Predicate {
                    return Some((Expr::Ident(name), Ty::Num));
                }
                match scope.param_ty(&name) {
                    Some(ty) => Some((Expr::Ident(name), ty)),
                    None => {
                        self.report(
                            t.line,
                            t.col,
                            DiagnosticKind::Name,
                            format!("undeclared identifier `{name}`"),
                        );
                        Some((Expr::Ident(name), Ty::Unknown))
                    }
                }
            }
            other => {
                self.report_here(
                    DiagnosticKind::Syntax,
                    format!("expected an expression, found {}", other.describe()),
                );
                None
            }
        }
    }

    fn parse_call(
        &mut self,
        name: &str,
        line: u32,
        col: u32,
        scope: &Scope,
        ctx: ExprCtx,
    ) -> Option<(Expr, Ty)> {
        self.expect(TokenKind::LParen);
        let mut args = Vec::new();
        let mut arg_positions = Vec::new();
        if !matches!(self.peek_kind(), TokenKind::RParen) {
            loop {
                let t = self.peek().clone();
                arg_positions.push((t.line, t.col));
                let (arg, _) = self.parse_binary(0, scope, ctx)?;
                args.push(arg);
                if matches!(self.peek_kind(), TokenKind::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen);

        if ctx == ExprCtx::Value {
            self.report(
                line,
                col,
                DiagnosticKind::Type,
                format!("builtin `{name}` is only usable in `require` and `terminate when`"),
            );
            return Some((
                Expr::Call {
                    name: name.to_string(),
                    args,
                },
                Ty::Unknown,
            ));
        }

        let arity = match name {
            "distance" => 2,
            "speed" => 1,
            _ => {
                self.report(
                    line,
                    col,
                    DiagnosticKind::Name,
                    format!("unknown builtin `{name}` (expected distance or speed)"),
                );
                return Some((
                    Expr::Call {
                        name: name.to_string(),
                        args,
                    },
                    Ty::Unknown,
                ));
            }
        };
        if args.len() != arity {
            self.report(
                line,
                col,
                DiagnosticKind::Type,
                format!("builtin `{name}` takes {arity} agent argument(s)"),
            );
        }
        for (i, a) in args.iter().enumerate() {
            match a {
                Expr::Ident(agent) if agent == "ego" || scope.has_agent(agent) => {}
                Expr::Ident(agent) => {
                    let (l, c) = arg_positions.get(i).copied().unwrap_or((line, col));
                    self.report(
                        l,
                        c,
                        DiagnosticKind::Name,
                        format!("builtin `{name}` references undeclared agent `{agent}`"),
                    );
                }
                _ => {
                    let (l, c) = arg_positions.get(i).copied().unwrap_or((line, col));
                    self.report(
                        l,
                        c,
                        DiagnosticKind::Type,
                        format!("builtin `{name}` expects agent names as arguments"),
                    );
                }
            }
        }
        Some((
            Expr::Call {
                name: name.to_string(),
                args,
            },
            Ty::Num,
        ))
    }
}
