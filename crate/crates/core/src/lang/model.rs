use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

/// Program-wide unique flow-graph vertex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VertexId(pub u32);

/// Program-wide unique flow-graph edge.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct EdgeId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// Integer expressions. Division truncates toward zero and is partial:
/// a zero divisor yields no value.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Exp {
    Int(i64),
    Var(String),
    Add(Box<Exp>, Box<Exp>),
    Sub(Box<Exp>, Box<Exp>),
    Mul(Box<Exp>, Box<Exp>),
    Div(Box<Exp>, Box<Exp>),
}

impl Exp {
    pub fn var(name: &str) -> Exp {
        Exp::Var(name.to_string())
    }

    pub fn add(self, rhs: Exp) -> Exp {
        Exp::Add(Box::new(self), Box::new(rhs))
    }

    pub fn sub(self, rhs: Exp) -> Exp {
        Exp::Sub(Box::new(self), Box::new(rhs))
    }

    pub fn mul(self, rhs: Exp) -> Exp {
        Exp::Mul(Box::new(self), Box::new(rhs))
    }

    pub fn div(self, rhs: Exp) -> Exp {
        Exp::Div(Box::new(self), Box::new(rhs))
    }

    /// Evaluate over the integers. `None` on division by zero or overflow
    /// (both are treated as "no transition" by the interpreter).
    pub fn eval(&self, env: &Env) -> Option<i64> {
        match self {
            Exp::Int(n) => Some(*n),
            Exp::Var(x) => env.get(x).copied(),
            Exp::Add(a, b) => a.eval(env)?.checked_add(b.eval(env)?),
            Exp::Sub(a, b) => a.eval(env)?.checked_sub(b.eval(env)?),
            Exp::Mul(a, b) => a.eval(env)?.checked_mul(b.eval(env)?),
            Exp::Div(a, b) => {
                let d = b.eval(env)?;
                if d == 0 {
                    None
                } else {
                    a.eval(env)?.checked_div(d)
                }
            }
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Exp::Int(_) => {}
            Exp::Var(x) => {
                out.insert(x.clone());
            }
            Exp::Add(a, b) | Exp::Sub(a, b) | Exp::Mul(a, b) | Exp::Div(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        let (own, s) = match self {
            Exp::Int(n) => return write!(f, "{n}"),
            Exp::Var(x) => return write!(f, "{x}"),
            Exp::Add(..) => (1, " + "),
            Exp::Sub(..) => (1, " - "),
            Exp::Mul(..) => (2, " * "),
            Exp::Div(..) => (2, " / "),
        };
        let (a, b) = match self {
            Exp::Add(a, b) | Exp::Sub(a, b) | Exp::Mul(a, b) | Exp::Div(a, b) => (a, b),
            _ => unreachable!(),
        };
        if prec > own {
            write!(f, "(")?;
        }
        a.fmt_prec(f, own)?;
        write!(f, "{s}")?;
        b.fmt_prec(f, own + 1)?;
        if prec > own {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Exp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        };
        write!(f, "{s}")
    }
}

/// Boolean expressions survive only in assertion side tables; guards in the
/// flow graph are already desugared to `Assume` edges.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Bexp {
    Cmp(CmpOp, Exp, Exp),
    And(Box<Bexp>, Box<Bexp>),
    Or(Box<Bexp>, Box<Bexp>),
    Not(Box<Bexp>),
}

impl Bexp {
    pub fn eval(&self, env: &Env) -> Option<bool> {
        match self {
            Bexp::Cmp(op, a, b) => {
                let (a, b) = (a.eval(env)?, b.eval(env)?);
                Some(match op {
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                })
            }
            Bexp::And(a, b) => Some(a.eval(env)? && b.eval(env)?),
            Bexp::Or(a, b) => Some(a.eval(env)? || b.eval(env)?),
            Bexp::Not(a) => Some(!a.eval(env)?),
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Bexp::Cmp(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Bexp::And(a, b) | Bexp::Or(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Bexp::Not(a) => a.vars(out),
        }
    }
}

impl fmt::Display for Bexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bexp::Cmp(op, a, b) => write!(f, "{a} {op} {b}"),
            Bexp::And(a, b) => write!(f, "({a} && {b})"),
            Bexp::Or(a, b) => write!(f, "({a} || {b})"),
            Bexp::Not(a) => write!(f, "!({a})"),
        }
    }
}

/// One flow-graph edge action. `Assume(e)` blocks unless `e >= 0`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Action {
    Assign(String, Exp),
    Assume(Exp),
    Call(usize),
    Havoc(String),
}

impl Action {
    /// Variables the action mentions (used by scope validation).
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        match self {
            Action::Assign(x, e) => {
                out.insert(x.clone());
                e.vars(&mut out);
            }
            Action::Assume(e) => e.vars(&mut out),
            Action::Call(_) => {}
            Action::Havoc(x) => {
                out.insert(x.clone());
            }
        }
        out
    }

    pub fn describe(&self, program: &Program) -> String {
        match self {
            Action::Assign(x, e) => format!("{x} := {e}"),
            Action::Assume(e) => format!("assume {e} >= 0"),
            Action::Call(j) => format!("call {}", program.procedures[*j].name),
            Action::Havoc(x) => format!("havoc {x}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Edge {
    pub id: EdgeId,
    pub src: VertexId,
    pub tgt: VertexId,
    pub action: Action,
}

/// Flow graph of one procedure: a distinguished entry (no incoming edges)
/// and exit (no outgoing edges), every vertex reachable from entry.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FlowGraph {
    pub vertices: Vec<VertexId>,
    pub entry: VertexId,
    pub exit: VertexId,
    pub edges: Vec<Edge>,
}

impl FlowGraph {
    pub fn out_edges(&self, v: VertexId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.src == v)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Procedure {
    pub name: String,
    pub locals: BTreeSet<String>,
    pub graph: FlowGraph,
}

/// Assertion site: `vertex` is the source of the assert's skip edge. The
/// analysis never prunes by `cond`; the checker asks whether the path value
/// reaching `vertex` entails it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AssertCheck {
    pub proc_index: usize,
    pub vertex: VertexId,
    pub cond: Bexp,
}

/// Total map from in-scope variables to integers.
pub type Env = BTreeMap<String, i64>;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Program {
    /// Index 0 is the entry procedure `main`.
    pub procedures: Vec<Procedure>,
    pub globals: BTreeSet<String>,
    pub asserts: Vec<AssertCheck>,
}

impl Program {
    /// Globals plus every procedure's locals, sorted.
    pub fn all_vars(&self) -> Vec<String> {
        let mut vars: BTreeSet<String> = self.globals.clone();
        for p in &self.procedures {
            vars.extend(p.locals.iter().cloned());
        }
        vars.into_iter().collect()
    }

    pub fn proc_index(&self, name: &str) -> Option<usize> {
        self.procedures.iter().position(|p| p.name == name)
    }

    /// Which procedure owns a vertex (vertex sets are disjoint).
    pub fn proc_of_vertex(&self, v: VertexId) -> Option<usize> {
        self.procedures
            .iter()
            .position(|p| p.graph.vertices.contains(&v))
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.procedures
            .iter()
            .flat_map(|p| p.graph.edges.iter())
            .find(|e| e.id == id)
    }
}

/// Check the structural invariants; returns one human-readable diagnostic
/// per violation (empty means well-formed).
pub fn validate(program: &Program) -> Vec<String> {
    let mut diags = Vec::new();
    if program.procedures.is_empty() {
        diags.push("program has no procedures".to_string());
        return diags;
    }
    if program.procedures[0].name != "main" {
        diags.push("entry procedure (index 0) must be named main".to_string());
    }
    let mut names = BTreeSet::new();
    for p in &program.procedures {
        if !names.insert(p.name.clone()) {
            diags.push(format!("duplicate procedure name {}", p.name));
        }
    }

    // Local sets must be pairwise disjoint and disjoint from the globals.
    let mut seen_locals: BTreeMap<&String, &str> = BTreeMap::new();
    for p in &program.procedures {
        for x in &p.locals {
            if program.globals.contains(x) {
                diags.push(format!("locals not disjoint: {x} is also a global"));
            }
            if let Some(other) = seen_locals.insert(x, &p.name) {
                diags.push(format!(
                    "locals not disjoint: {x} declared in both {other} and {}",
                    p.name
                ));
            }
        }
    }

    let mut seen_vertices = BTreeSet::new();
    let mut seen_edges = BTreeSet::new();
    for (i, p) in program.procedures.iter().enumerate() {
        let g = &p.graph;
        for v in &g.vertices {
            if !seen_vertices.insert(*v) {
                diags.push(format!("vertex {v} appears in more than one procedure"));
            }
        }
        if !g.vertices.contains(&g.entry) || !g.vertices.contains(&g.exit) {
            diags.push(format!("{}: entry/exit not in vertex set", p.name));
            continue;
        }
        for e in &g.edges {
            if !seen_edges.insert(e.id) {
                diags.push(format!("edge {} reused", e.id));
            }
            if !g.vertices.contains(&e.src) || !g.vertices.contains(&e.tgt) {
                diags.push(format!("{}: edge {} endpoint outside procedure", p.name, e.id));
            }
            if e.tgt == g.entry {
                diags.push(format!("{}: entry has incoming edge {}", p.name, e.id));
            }
            if e.src == g.exit {
                diags.push(format!("{}: exit has outgoing edge {}", p.name, e.id));
            }
            if let Action::Call(j) = e.action {
                if j >= program.procedures.len() {
                    diags.push(format!("{}: call to undeclared procedure index {j}", p.name));
                }
            }
            // Scope: actions may mention globals and this procedure's locals.
            for x in e.action.vars() {
                let is_global = program.globals.contains(&x);
                let is_local = p.locals.contains(&x);
                if !is_global && !is_local {
                    diags.push(format!(
                        "{}: edge {} mentions {x}, which is not in scope",
                        p.name, e.id
                    ));
                }
            }
        }
        // Reachability from entry.
        let mut reached = BTreeSet::new();
        let mut queue = VecDeque::from([g.entry]);
        reached.insert(g.entry);
        while let Some(v) = queue.pop_front() {
            for e in g.out_edges(v) {
                if reached.insert(e.tgt) {
                    queue.push_back(e.tgt);
                }
            }
        }
        for v in &g.vertices {
            if !reached.contains(v) {
                diags.push(format!("{}: vertex {v} unreachable from entry", p.name));
            }
        }
        let _ = i;
    }

    for a in &program.asserts {
        if a.proc_index >= program.procedures.len() {
            diags.push("assert refers to missing procedure".to_string());
        } else if !program.procedures[a.proc_index]
            .graph
            .vertices
            .contains(&a.vertex)
        {
            diags.push(format!("assert vertex {} not in its procedure", a.vertex));
        }
    }
    diags
}
