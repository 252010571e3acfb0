use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::model::{
    Action, AssertCheck, Bexp, CmpOp, Edge, EdgeId, Exp, FlowGraph, Procedure, Program, VertexId,
};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("parse error at {line}:{col}: {msg}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

fn err<T>(line: u32, col: u32, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        col,
        msg: msg.into(),
    })
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: u32,
    col: u32,
}

const KEYWORDS: &[&str] = &[
    "proc", "local", "assume", "call", "assert", "if", "else", "while", "havoc",
];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let (mut line, mut col) = (1u32, 1u32);
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && i + 1 < chars.len() && chars[i + 1] == '/' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            toks.push(Token {
                tok: Tok::Ident(word),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let digits: String = chars[start..i].iter().collect();
            let n: i64 = match digits.parse() {
                Ok(n) => n,
                Err(_) => return err(tl, tc, format!("integer literal {digits} out of range")),
            };
            toks.push(Token {
                tok: Tok::Int(n),
                line: tl,
                col: tc,
            });
            continue;
        }
        // Two-character symbols take precedence.
        let two: Option<&'static str> = if i + 1 < chars.len() {
            match (c, chars[i + 1]) {
                (':', '=') => Some(":="),
                ('<', '=') => Some("<="),
                ('>', '=') => Some(">="),
                ('=', '=') => Some("=="),
                ('!', '=') => Some("!="),
                ('&', '&') => Some("&&"),
                ('|', '|') => Some("||"),
                _ => None,
            }
        } else {
            None
        };
        if let Some(s) = two {
            bump!();
            bump!();
            toks.push(Token {
                tok: Tok::Sym(s),
                line: tl,
                col: tc,
            });
            continue;
        }
        let one: Option<&'static str> = match c {
            ';' => Some(";"),
            ',' => Some(","),
            '(' => Some("("),
            ')' => Some(")"),
            '{' => Some("{"),
            '}' => Some("}"),
            '[' => Some("["),
            ']' => Some("]"),
            '+' => Some("+"),
            '-' => Some("-"),
            '*' => Some("*"),
            '/' => Some("/"),
            '<' => Some("<"),
            '>' => Some(">"),
            '!' => Some("!"),
            _ => None,
        };
        match one {
            Some(s) => {
                bump!();
                toks.push(Token {
                    tok: Tok::Sym(s),
                    line: tl,
                    col: tc,
                });
            }
            None => return err(tl, tc, format!("unexpected character {c:?}")),
        }
    }
    toks.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser (statement AST; lowering to flow graphs happens below)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum Stmt {
    Assign(String, Exp),
    Assume(Bexp),
    Call(String, u32, u32),
    Assert(Bexp),
    If(Bexp, Vec<Stmt>, Vec<Stmt>),
    While(Bexp, Vec<Stmt>),
    Havoc(String),
}

#[derive(Clone, Debug)]
struct ProcAst {
    name: String,
    line: u32,
    col: u32,
    locals: Vec<String>,
    body: Vec<Stmt>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(t) if *t == s)
    }

    fn at_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(t) if t == w)
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.at_sym(s) {
            self.bump();
            Ok(())
        } else {
            let t = self.peek();
            err(t.line, t.col, format!("expected `{s}`, found {}", describe(&t.tok)))
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<(), ParseError> {
        if self.at_word(w) {
            self.bump();
            Ok(())
        } else {
            let t = self.peek();
            err(t.line, t.col, format!("expected `{w}`, found {}", describe(&t.tok)))
        }
    }

    fn ident(&mut self) -> Result<(String, u32, u32), ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok((s.clone(), t.line, t.col))
            }
            _ => err(t.line, t.col, format!("expected identifier, found {}", describe(&t.tok))),
        }
    }

    fn program(&mut self) -> Result<Vec<ProcAst>, ParseError> {
        let mut procs = Vec::new();
        while !matches!(self.peek().tok, Tok::Eof) {
            procs.push(self.proc()?);
        }
        if procs.is_empty() {
            return err(1, 1, "empty program: expected at least one procedure");
        }
        Ok(procs)
    }

    fn proc(&mut self) -> Result<ProcAst, ParseError> {
        self.expect_word("proc")?;
        let (name, line, col) = self.ident()?;
        self.expect_sym("(")?;
        self.expect_sym(")")?;
        let mut locals = Vec::new();
        if self.at_sym("[") {
            self.bump();
            self.expect_word("local")?;
            loop {
                let (x, xl, xc) = self.ident()?;
                if locals.contains(&x) {
                    return err(xl, xc, format!("local {x} declared twice"));
                }
                locals.push(x);
                if self.at_sym(",") {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect_sym("]")?;
        }
        let body = self.block()?;
        Ok(ProcAst {
            name,
            line,
            col,
            locals,
            body,
        })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        while !self.at_sym("}") {
            if matches!(self.peek().tok, Tok::Eof) {
                let t = self.peek();
                return err(t.line, t.col, "unexpected end of input inside block");
            }
            out.push(self.stmt()?);
        }
        self.bump();
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        if self.at_word("assume") {
            self.bump();
            self.expect_sym("(")?;
            let b = self.bexp()?;
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            return Ok(Stmt::Assume(b));
        }
        if self.at_word("assert") {
            self.bump();
            self.expect_sym("(")?;
            let b = self.bexp()?;
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            return Ok(Stmt::Assert(b));
        }
        if self.at_word("call") {
            self.bump();
            let (name, line, col) = self.ident()?;
            self.expect_sym("(")?;
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            return Ok(Stmt::Call(name, line, col));
        }
        if self.at_word("havoc") {
            self.bump();
            let (x, _, _) = self.ident()?;
            self.expect_sym(";")?;
            return Ok(Stmt::Havoc(x));
        }
        if self.at_word("if") {
            self.bump();
            self.expect_sym("(")?;
            let b = self.bexp()?;
            self.expect_sym(")")?;
            let then_branch = self.block()?;
            let else_branch = if self.at_word("else") {
                self.bump();
                if self.at_word("if") {
                    vec![self.stmt()?]
                } else {
                    self.block()?
                }
            } else {
                Vec::new()
            };
            return Ok(Stmt::If(b, then_branch, else_branch));
        }
        if self.at_word("while") {
            self.bump();
            self.expect_sym("(")?;
            let b = self.bexp()?;
            self.expect_sym(")")?;
            let body = self.block()?;
            return Ok(Stmt::While(b, body));
        }
        let (x, _, _) = self.ident()?;
        self.expect_sym(":=")?;
        let e = self.exp()?;
        self.expect_sym(";")?;
        Ok(Stmt::Assign(x, e))
    }

    fn exp(&mut self) -> Result<Exp, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.at_sym("+") {
                self.bump();
                acc = Exp::Add(Box::new(acc), Box::new(self.term()?));
            } else if self.at_sym("-") {
                self.bump();
                acc = Exp::Sub(Box::new(acc), Box::new(self.term()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Exp, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.at_sym("*") {
                self.bump();
                acc = Exp::Mul(Box::new(acc), Box::new(self.factor()?));
            } else if self.at_sym("/") {
                self.bump();
                acc = Exp::Div(Box::new(acc), Box::new(self.factor()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Exp, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Int(n) => {
                self.bump();
                Ok(Exp::Int(*n))
            }
            Tok::Sym("-") => {
                self.bump();
                Ok(Exp::Sub(Box::new(Exp::Int(0)), Box::new(self.factor()?)))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.exp()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(_) => {
                let (x, _, _) = self.ident()?;
                Ok(Exp::Var(x))
            }
            _ => err(t.line, t.col, format!("expected expression, found {}", describe(&t.tok))),
        }
    }

    fn bexp(&mut self) -> Result<Bexp, ParseError> {
        let mut acc = self.band()?;
        while self.at_sym("||") {
            self.bump();
            acc = Bexp::Or(Box::new(acc), Box::new(self.band()?));
        }
        Ok(acc)
    }

    fn band(&mut self) -> Result<Bexp, ParseError> {
        let mut acc = self.batom()?;
        while self.at_sym("&&") {
            self.bump();
            acc = Bexp::And(Box::new(acc), Box::new(self.batom()?));
        }
        Ok(acc)
    }

    fn batom(&mut self) -> Result<Bexp, ParseError> {
        if self.at_sym("!") {
            self.bump();
            return Ok(Bexp::Not(Box::new(self.batom()?)));
        }
        if self.at_sym("(") {
            // `(` may open a boolean group or the left operand of a
            // comparison; try the boolean reading first and fall back.
            let save = self.pos;
            self.bump();
            if let Ok(b) = self.bexp() {
                if self.at_sym(")") {
                    self.bump();
                    return Ok(b);
                }
            }
            self.pos = save;
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Bexp, ParseError> {
        let lhs = self.exp()?;
        let t = self.peek().clone();
        let op = match &t.tok {
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            _ => return err(t.line, t.col, format!("expected comparison, found {}", describe(&t.tok))),
        };
        self.bump();
        let rhs = self.exp()?;
        Ok(Bexp::Cmp(op, lhs, rhs))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(n) => format!("`{n}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".to_string(),
    }
}

// ---------------------------------------------------------------------------
// Lowering to flow graphs
// ---------------------------------------------------------------------------

struct Lower {
    next_v: u32,
    next_e: u32,
    vertices: Vec<VertexId>,
    edges: Vec<Edge>,
    asserts: Vec<AssertCheck>,
    names: BTreeMap<String, usize>,
    cur_proc: usize,
}

impl Lower {
    fn fresh(&mut self) -> VertexId {
        let v = VertexId(self.next_v);
        self.next_v += 1;
        self.vertices.push(v);
        v
    }

    fn edge(&mut self, src: VertexId, tgt: VertexId, action: Action) {
        let id = EdgeId(self.next_e);
        self.next_e += 1;
        self.edges.push(Edge {
            id,
            src,
            tgt,
            action,
        });
    }

    fn guard(&mut self, b: &Bexp, cur: VertexId, next: VertexId) {
        match b {
            Bexp::Cmp(op, s, t) => {
                let diff = |a: &Exp, b: &Exp| Exp::Sub(Box::new(a.clone()), Box::new(b.clone()));
                let minus1 = |e: Exp| Exp::Sub(Box::new(e), Box::new(Exp::Int(1)));
                match op {
                    CmpOp::Lt => self.edge(cur, next, Action::Assume(minus1(diff(t, s)))),
                    CmpOp::Le => self.edge(cur, next, Action::Assume(diff(t, s))),
                    CmpOp::Gt => self.edge(cur, next, Action::Assume(minus1(diff(s, t)))),
                    CmpOp::Ge => self.edge(cur, next, Action::Assume(diff(s, t))),
                    CmpOp::Eq => {
                        let mid = self.fresh();
                        self.edge(cur, mid, Action::Assume(diff(t, s)));
                        self.edge(mid, next, Action::Assume(diff(s, t)));
                    }
                    CmpOp::Ne => {
                        self.edge(cur, next, Action::Assume(minus1(diff(s, t))));
                        self.edge(cur, next, Action::Assume(minus1(diff(t, s))));
                    }
                }
            }
            Bexp::And(a, b) => {
                let mid = self.fresh();
                self.guard(a, cur, mid);
                self.guard(b, mid, next);
            }
            Bexp::Or(a, b) => {
                self.guard(a, cur, next);
                self.guard(b, cur, next);
            }
            Bexp::Not(a) => self.guard(&negate(a), cur, next),
        }
    }

    fn stmt(&mut self, s: &Stmt, cur: VertexId, next: VertexId) {
        match s {
            Stmt::Assign(x, e) => self.edge(cur, next, Action::Assign(x.clone(), e.clone())),
            Stmt::Havoc(x) => self.edge(cur, next, Action::Havoc(x.clone())),
            Stmt::Assume(b) => self.guard(b, cur, next),
            Stmt::Call(name, _, _) => {
                let j = self.names[name];
                self.edge(cur, next, Action::Call(j));
            }
            Stmt::Assert(b) => {
                self.asserts.push(AssertCheck {
                    proc_index: self.cur_proc,
                    vertex: cur,
                    cond: b.clone(),
                });
                self.edge(cur, next, Action::Assume(Exp::Int(0)));
            }
            Stmt::If(b, then_branch, else_branch) => {
                if then_branch.is_empty() {
                    self.guard(b, cur, next);
                } else {
                    let head = self.fresh();
                    self.guard(b, cur, head);
                    self.block(then_branch, head, next);
                }
                let nb = negate(b);
                if else_branch.is_empty() {
                    self.guard(&nb, cur, next);
                } else {
                    let head = self.fresh();
                    self.guard(&nb, cur, head);
                    self.block(else_branch, head, next);
                }
            }
            Stmt::While(b, body) => {
                if body.is_empty() {
                    self.guard(b, cur, cur);
                } else {
                    let head = self.fresh();
                    self.guard(b, cur, head);
                    // The body's final statement targets the loop head directly.
                    self.block(body, head, cur);
                }
                self.guard(&negate(b), cur, next);
            }
        }
    }

    fn block(&mut self, stmts: &[Stmt], cur: VertexId, next: VertexId) {
        if stmts.is_empty() {
            if cur != next {
                self.edge(cur, next, Action::Assume(Exp::Int(0)));
            }
            return;
        }
        let mut at = cur;
        for s in &stmts[..stmts.len() - 1] {
            let nx = self.fresh();
            self.stmt(s, at, nx);
            at = nx;
        }
        self.stmt(&stmts[stmts.len() - 1], at, next);
    }

    fn proc(&mut self, ast: &ProcAst) -> FlowGraph {
        self.vertices = Vec::new();
        let entry = self.fresh();
        let exit = if ast.body.is_empty() {
            entry
        } else {
            let mut at = entry;
            for s in &ast.body[..ast.body.len() - 1] {
                let nx = self.fresh();
                self.stmt(s, at, nx);
                at = nx;
            }
            let exit = self.fresh();
            self.stmt(&ast.body[ast.body.len() - 1], at, exit);
            exit
        };
        FlowGraph {
            vertices: std::mem::take(&mut self.vertices),
            entry,
            exit,
            edges: std::mem::take(&mut self.edges),
        }
    }
}

fn negate(b: &Bexp) -> Bexp {
    match b {
        Bexp::Cmp(op, s, t) => {
            let flip = match op {
                CmpOp::Lt => CmpOp::Ge,
                CmpOp::Le => CmpOp::Gt,
                CmpOp::Gt => CmpOp::Le,
                CmpOp::Ge => CmpOp::Lt,
                CmpOp::Eq => CmpOp::Ne,
                CmpOp::Ne => CmpOp::Eq,
            };
            Bexp::Cmp(flip, s.clone(), t.clone())
        }
        Bexp::And(a, b) => Bexp::Or(Box::new(negate(a)), Box::new(negate(b))),
        Bexp::Or(a, b) => Bexp::And(Box::new(negate(a)), Box::new(negate(b))),
        Bexp::Not(a) => (**a).clone(),
    }
}

fn stmt_calls(s: &Stmt, out: &mut Vec<(String, u32, u32)>) {
    match s {
        Stmt::Call(name, line, col) => out.push((name.clone(), *line, *col)),
        Stmt::If(_, a, b) => {
            for s in a.iter().chain(b) {
                stmt_calls(s, out);
            }
        }
        Stmt::While(_, body) => {
            for s in body {
                stmt_calls(s, out);
            }
        }
        _ => {}
    }
}

/// Parse source text into a program whose guards and assertions are already
/// desugared onto flow-graph edges. The procedure named `main` becomes
/// index 0; the rest keep their source order.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let toks = lex(src)?;
    let mut parser = Parser { toks, pos: 0 };
    let mut asts = parser.program()?;

    let mut seen: BTreeMap<String, ()> = BTreeMap::new();
    for a in &asts {
        if seen.insert(a.name.clone(), ()).is_some() {
            return err(a.line, a.col, format!("procedure {} defined twice", a.name));
        }
    }
    let main_at = match asts.iter().position(|a| a.name == "main") {
        Some(i) => i,
        None => return err(1, 1, "no procedure named main"),
    };
    let main_ast = asts.remove(main_at);
    asts.insert(0, main_ast);

    let names: BTreeMap<String, usize> = asts
        .iter()
        .enumerate()
        .map(|(i, a)| (a.name.clone(), i))
        .collect();
    for a in &asts {
        let mut calls = Vec::new();
        for s in &a.body {
            stmt_calls(s, &mut calls);
        }
        for (callee, line, col) in calls {
            if !names.contains_key(&callee) {
                return err(line, col, format!("call to undefined procedure {callee}"));
            }
        }
    }

    let mut lower = Lower {
        next_v: 0,
        next_e: 0,
        vertices: Vec::new(),
        edges: Vec::new(),
        asserts: Vec::new(),
        names,
        cur_proc: 0,
    };
    let mut procedures = Vec::new();
    for (i, a) in asts.iter().enumerate() {
        lower.cur_proc = i;
        let graph = lower.proc(a);
        procedures.push(Procedure {
            name: a.name.clone(),
            locals: a.locals.iter().cloned().collect(),
            graph,
        });
    }

    // A variable that is not local to the procedure mentioning it is global.
    let mut globals = BTreeSet::new();
    for (i, p) in procedures.iter().enumerate() {
        let mut mentioned = BTreeSet::new();
        for e in &p.graph.edges {
            mentioned.extend(e.action.vars());
        }
        for a in lower.asserts.iter().filter(|a| a.proc_index == i) {
            a.cond.vars(&mut mentioned);
        }
        for x in mentioned {
            if !p.locals.contains(&x) {
                globals.insert(x);
            }
        }
    }

    Ok(Program {
        procedures,
        globals,
        asserts: lower.asserts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::model::validate;

    const DIV: &str = r#"
proc main() {
  r := x;
  q := 0;
  while (r > y) {
    t := y;
    while (t > 0) {
      r := r - 1;
      t := t - 1;
    }
    q := q + 1;
  }
  assert(x == q * y + r);
}
"#;

    #[test]
    fn div_program_shape() {
        let p = parse_program(DIV).unwrap();
        assert_eq!(validate(&p), Vec::<String>::new());
        assert_eq!(p.procedures.len(), 1);
        let g = &p.procedures[0].graph;
        assert_eq!(g.vertices.len(), 10);
        assert_eq!(g.edges.len(), 11);
        assert_eq!(
            p.all_vars(),
            vec!["q".to_string(), "r".into(), "t".into(), "x".into(), "y".into()]
        );
        assert!(p.procedures[0].locals.is_empty());
        // Loop back-edges go straight to the loop heads: both heads have
        // two incoming edges.
        let indeg = |v: VertexId| g.edges.iter().filter(|e| e.tgt == v).count();
        let heads: Vec<_> = g.vertices.iter().copied().filter(|v| indeg(*v) == 2).collect();
        assert_eq!(heads.len(), 2);
        // Exactly one assertion, recorded at the source of a skip edge.
        assert_eq!(p.asserts.len(), 1);
        let at = p.asserts[0].vertex;
        assert!(g
            .out_edges(at)
            .any(|e| e.action == Action::Assume(Exp::Int(0))));
    }

    #[test]
    fn main_is_reordered_to_front() {
        let src = "proc helper() { x := 1; } proc main() { call helper(); }";
        let p = parse_program(src).unwrap();
        assert_eq!(p.procedures[0].name, "main");
        assert_eq!(p.procedures[1].name, "helper");
        // The call edge now refers to helper's post-reorder index.
        let call = p.procedures[0]
            .graph
            .edges
            .iter()
            .find(|e| matches!(e.action, Action::Call(_)))
            .unwrap();
        assert_eq!(call.action, Action::Call(1));
        assert_eq!(validate(&p), Vec::<String>::new());
    }

    #[test]
    fn equality_desugars_to_chained_assumes() {
        let p = parse_program("proc main() { assume(x == y); }").unwrap();
        let g = &p.procedures[0].graph;
        assert_eq!(g.edges.len(), 2);
        assert_eq!(g.edges[0].tgt, g.edges[1].src);
        assert!(matches!(g.edges[0].action, Action::Assume(_)));
        assert!(matches!(g.edges[1].action, Action::Assume(_)));
    }

    #[test]
    fn disequality_desugars_to_parallel_assumes() {
        let p = parse_program("proc main() { assume(x != y); }").unwrap();
        let g = &p.procedures[0].graph;
        assert_eq!(g.edges.len(), 2);
        assert_eq!(g.edges[0].src, g.edges[1].src);
        assert_eq!(g.edges[0].tgt, g.edges[1].tgt);
    }

    #[test]
    fn negation_pushes_through_conjunction() {
        // !(a && b) turns into parallel negated guards, not a Not node.
        let p = parse_program("proc main() { assume(!(x > 0 && y > 0)); }").unwrap();
        let g = &p.procedures[0].graph;
        assert_eq!(g.edges.len(), 2);
        for e in &g.edges {
            assert!(matches!(e.action, Action::Assume(_)));
            assert_eq!(e.src, g.entry);
            assert_eq!(e.tgt, g.exit);
        }
    }

    #[test]
    fn guards_on_trace_semantics() {
        // x < y desugars to assume(y - x - 1 >= 0).
        let p = parse_program("proc main() { assume(x < y); }").unwrap();
        let g = &p.procedures[0].graph;
        match &g.edges[0].action {
            Action::Assume(e) => {
                let env: crate::lang::Env =
                    [("x".to_string(), 3), ("y".to_string(), 5)].into_iter().collect();
                assert_eq!(e.eval(&env), Some(1));
                let env2: crate::lang::Env =
                    [("x".to_string(), 5), ("y".to_string(), 5)].into_iter().collect();
                assert_eq!(e.eval(&env2), Some(-1));
            }
            other => panic!("expected assume, got {other:?}"),
        }
    }

    #[test]
    fn locals_and_globals_are_separated() {
        let src = "proc main() [local a, b] { a := g + 1; b := a; g := b; }";
        let p = parse_program(src).unwrap();
        assert_eq!(
            p.procedures[0].locals.iter().cloned().collect::<Vec<_>>(),
            vec!["a".to_string(), "b".to_string()]
        );
        assert_eq!(p.globals.iter().cloned().collect::<Vec<_>>(), vec!["g".to_string()]);
    }

    #[test]
    fn errors_carry_position() {
        let e = parse_program("proc main() {\n  x := ;\n}").unwrap_err();
        assert_eq!((e.line, e.col), (2, 8));
        let e = parse_program("proc main() { call nope(); }").unwrap_err();
        assert!(e.msg.contains("undefined procedure"));
        let e = parse_program("proc helper() { x := 1; }").unwrap_err();
        assert!(e.msg.contains("main"));
    }

    #[test]
    fn boolean_grouping_backtracks() {
        // A parenthesised arithmetic operand must not be eaten by the
        // boolean grouping rule.
        let p = parse_program("proc main() { assume((x + y) * 2 < 7); }").unwrap();
        assert_eq!(p.procedures[0].graph.edges.len(), 1);
        let p = parse_program("proc main() { assume((x < 1 || y < 1) && z < 1); }").unwrap();
        // (a || b) && c: two parallel guards into a join vertex, then one more.
        assert_eq!(p.procedures[0].graph.edges.len(), 3);
    }

    #[test]
    fn else_if_chains() {
        let src = "proc main() { if (x > 0) { y := 1; } else if (x < 0) { y := 2; } else { y := 3; } }";
        let p = parse_program(src).unwrap();
        assert_eq!(validate(&p), Vec::<String>::new());
        let g = &p.procedures[0].graph;
        assert_eq!(g.out_edges(g.exit).count(), 0);
        // Three assignments to y, one per branch.
        let assigns = g
            .edges
            .iter()
            .filter(|e| matches!(e.action, Action::Assign(..)))
            .count();
        assert_eq!(assigns, 3);
    }

    #[test]
    fn while_loop_body_returns_to_head() {
        let p = parse_program("proc main() { while (x > 0) { x := x - 1; } }").unwrap();
        let g = &p.procedures[0].graph;
        // entry is the loop head; the body edge comes straight back.
        assert_eq!(g.edges.len(), 3);
        let body = g
            .edges
            .iter()
            .find(|e| matches!(e.action, Action::Assign(..)))
            .unwrap();
        assert_eq!(body.tgt, g.entry);
    }
}
