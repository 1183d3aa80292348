//! AST for scenario programs.
//!
//! Nodes carry no source spans; diagnostics are produced during parsing
//! while token positions are still known. This keeps structural equality
//! (used by the pretty-print round-trip property) a plain derive.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A parsed scenario program: a distribution over initial scenes and agent
/// behaviors. Subscenarios are full programs of their own, referenced from
/// the composition block.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioProgram {
    pub name: String,
    /// `map "<path>"` header; only meaningful on the root program.
    pub map: Option<String>,
    /// Inert metadata tag; no metric depends on it.
    pub weather: Option<String>,
    pub params: Vec<ParamDecl>,
    pub agents: Vec<AgentDecl>,
    pub subscenarios: Vec<ScenarioProgram>,
    pub composition: Option<CompositionSpec>,
    pub requirements: Vec<Expr>,
    pub termination: TerminationSpec,
}

impl ScenarioProgram {
    pub fn empty(name: &str) -> Self {
        ScenarioProgram {
            name: name.to_string(),
            map: None,
            weather: None,
            params: Vec::new(),
            agents: Vec::new(),
            subscenarios: Vec::new(),
            composition: None,
            requirements: Vec::new(),
            termination: TerminationSpec::default(),
        }
    }

    pub fn ego(&self) -> Option<&AgentDecl> {
        self.agents.iter().find(|a| a.is_ego)
    }

    pub fn subscenario(&self, name: &str) -> Option<&ScenarioProgram> {
        self.subscenarios.iter().find(|s| s.name == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub dist: Distribution,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Distribution {
    UniformContinuous { lo: f64, hi: f64 },
    DiscreteChoice { values: Vec<ParamValue> },
    Constant { value: ParamValue },
}

/// A parameter value: numeric or a string label (e.g. a lane id).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Num(f64),
    Str(String),
}

impl ParamValue {
    /// Equality usable for the distinct-choices check (NaN-safe via bits).
    pub fn same_as(&self, other: &ParamValue) -> bool {
        match (self, other) {
            (ParamValue::Num(a), ParamValue::Num(b)) => a.to_bits() == b.to_bits(),
            (ParamValue::Str(a), ParamValue::Str(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Num(n) => write!(f, "{}", fmt_num(*n)),
            ParamValue::Str(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Car,
    Bus,
    Pedestrian,
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AgentKind::Car => "car",
            AgentKind::Bus => "bus",
            AgentKind::Pedestrian => "pedestrian",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentDecl {
    pub name: String,
    pub kind: AgentKind,
    pub placement: Placement,
    /// Heading override (radians); on-lane agents default to lane direction.
    pub heading: Option<Expr>,
    /// Initial speed (m/s); defaults to 0.
    pub speed: Option<Expr>,
    /// Ordered lane ids; used by the builtin autopilot and lane-following behaviors.
    pub route: Option<Vec<LaneRef>>,
    pub behavior: BehaviorDecl,
    pub is_ego: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Placement {
    /// `on lane <ref> at <s> [offset right <m>]`
    OnLane {
        lane: LaneRef,
        offset: Expr,
        lateral: Option<Expr>,
    },
    /// `at (<x>, <y>)`
    Absolute { x: Expr, y: Expr },
}

/// A lane id: literal or a discrete string-valued parameter.
#[derive(Clone, Debug, PartialEq)]
pub enum LaneRef {
    Literal(String),
    Param(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BehaviorDecl {
    pub name: String,
    pub args: Vec<(String, Expr)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositionMode {
    Parallel,
    Sequential,
    Opportunistic,
}

impl fmt::Display for CompositionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CompositionMode::Parallel => "parallel",
            CompositionMode::Sequential => "sequential",
            CompositionMode::Opportunistic => "opportunistic",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompositionSpec {
    pub mode: CompositionMode,
    pub entries: Vec<CompositionEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompositionEntry {
    pub subscenario: String,
    pub trigger: Option<TriggerSpec>,
}

/// The only trigger action: agents spawn when the watched agent enters the
/// region and despawn when it exits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerAction {
    #[default]
    SpawnOnEnterDespawnOnExit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriggerSpec {
    /// Watched agent; `ego` unless stated otherwise.
    pub agent: String,
    pub region: RegionRef,
    pub action: TriggerAction,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RegionRef {
    /// Named region declared on the map.
    Named(String),
    Intersection(String),
    Circle { x: f64, y: f64, radius: f64 },
    LaneSegment { lane: String, from: f64, to: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TerminationSpec {
    /// Maximum simulation time in seconds.
    pub max_time: f64,
    /// Optional state predicate; the rollout stops when it becomes true.
    pub predicate: Option<Expr>,
}

impl TerminationSpec {
    pub const DEFAULT_MAX_TIME: f64 = 30.0;
}

impl Default for TerminationSpec {
    fn default() -> Self {
        TerminationSpec {
            max_time: Self::DEFAULT_MAX_TIME,
            predicate: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div => 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Str(String),
    Ident(String),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    /// Builtin call, e.g. `distance(ego, adv)` or `speed(ego)`.
    Call { name: String, args: Vec<Expr> },
}

/// Canonical numeric formatting: shortest round-trip repr, always reparsable.
pub(crate) fn fmt_num(n: f64) -> String {
    let mut s = format!("{n}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

fn fmt_expr(e: &Expr, parent_prec: u8, out: &mut String) {
    match e {
        Expr::Num(n) => out.push_str(&fmt_num(*n)),
        Expr::Str(s) => out.push_str(&format!("{s:?}")),
        Expr::Ident(i) => out.push_str(i),
        Expr::Neg(inner) => {
            out.push('-');
            fmt_expr(inner, 6, out);
        }
        Expr::Not(inner) => {
            out.push_str("not ");
            fmt_expr(inner, 6, out);
        }
        Expr::Binary { op, lhs, rhs } => {
            let prec = op.precedence();
            let need_parens = prec < parent_prec;
            if need_parens {
                out.push('(');
            }
            fmt_expr(lhs, prec, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            // Right operand needs a tighter context for left-assoc reparsing.
            fmt_expr(rhs, prec + 1, out);
            if need_parens {
                out.push(')');
            }
        }
        Expr::Call { name, args } => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                fmt_expr(a, 0, out);
            }
            out.push(')');
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        fmt_expr(self, 0, &mut s);
        write!(f, "{s}")
    }
}

fn fmt_lane_ref(l: &LaneRef) -> String {
    match l {
        LaneRef::Literal(s) => format!("{s:?}"),
        LaneRef::Param(p) => p.clone(),
    }
}

fn print_agent(a: &AgentDecl, out: &mut String) {
    if a.is_ego {
        out.push_str("ego = ");
    } else {
        out.push_str(&format!("agent {} = ", a.name));
    }
    out.push_str(&format!("{}", a.kind));
    match &a.placement {
        Placement::OnLane {
            lane,
            offset,
            lateral,
        } => {
            out.push_str(&format!(" on lane {} at {}", fmt_lane_ref(lane), offset));
            if let Some(lat) = lateral {
                out.push_str(&format!(" offset right {lat}"));
            }
        }
        Placement::Absolute { x, y } => {
            out.push_str(&format!(" at ({x}, {y})"));
        }
    }
    if let Some(h) = &a.heading {
        out.push_str(&format!(" heading {h}"));
    }
    if let Some(s) = &a.speed {
        out.push_str(&format!(" speed {s}"));
    }
    if let Some(route) = &a.route {
        let parts: Vec<String> = route.iter().map(fmt_lane_ref).collect();
        out.push_str(&format!(" route({})", parts.join(", ")));
    }
    out.push_str(&format!(", behavior {}", a.behavior.name));
    out.push('(');
    for (i, (k, v)) in a.behavior.args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format!("{k}={v}"));
    }
    out.push_str(")\n");
}

fn print_region(r: &RegionRef) -> String {
    match r {
        RegionRef::Named(n) => format!("region {n:?}"),
        RegionRef::Intersection(i) => format!("intersection {i:?}"),
        RegionRef::Circle { x, y, radius } => {
            format!("circle({}, {}, {})", fmt_num(*x), fmt_num(*y), fmt_num(*radius))
        }
        RegionRef::LaneSegment { lane, from, to } => {
            format!("lane {lane:?} from {} to {}", fmt_num(*from), fmt_num(*to))
        }
    }
}

fn print_body(prog: &ScenarioProgram, out: &mut String, indent: &str) {
    for p in &prog.params {
        out.push_str(indent);
        match &p.dist {
            Distribution::UniformContinuous { lo, hi } => {
                out.push_str(&format!(
                    "param {} = uniform({}, {})\n",
                    p.name,
                    fmt_num(*lo),
                    fmt_num(*hi)
                ));
            }
            Distribution::DiscreteChoice { values } => {
                let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                out.push_str(&format!("param {} = choice({})\n", p.name, parts.join(", ")));
            }
            Distribution::Constant { value } => {
                out.push_str(&format!("param {} = {value}\n", p.name));
            }
        }
    }
    for a in &prog.agents {
        out.push_str(indent);
        print_agent(a, out);
    }
    for r in &prog.requirements {
        out.push_str(indent);
        out.push_str(&format!("require {r}\n"));
    }
    out.push_str(indent);
    out.push_str(&format!("terminate after {}\n", fmt_num(prog.termination.max_time)));
    if let Some(p) = &prog.termination.predicate {
        out.push_str(indent);
        out.push_str(&format!("terminate when {p}\n"));
    }
}

/// Canonical source form; `parse(pretty_print(ast))` reparses to an equal AST.
pub fn pretty_print(prog: &ScenarioProgram) -> String {
    let mut out = String::new();
    if let Some(m) = &prog.map {
        out.push_str(&format!("map {m:?}\n"));
    }
    if let Some(w) = &prog.weather {
        out.push_str(&format!("weather {w:?}\n"));
    }
    print_body(prog, &mut out, "");
    for sub in &prog.subscenarios {
        out.push_str(&format!("scenario {}\n", sub.name));
        print_body(sub, &mut out, "  ");
        out.push_str("end\n");
    }
    if let Some(c) = &prog.composition {
        out.push_str(&format!("compose {}\n", c.mode));
        for e in &c.entries {
            out.push_str("  ");
            out.push_str(&e.subscenario);
            if let Some(t) = &e.trigger {
                out.push_str(&format!(" when {} enters {}", t.agent, print_region(&t.region)));
            }
            out.push('\n');
        }
        out.push_str("end\n");
    }
    out
}
