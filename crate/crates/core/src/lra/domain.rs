//! The transition-formula domain and its algebra.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigRational, One, Signed, Zero};

use crate::algebra::{Domain, EdgeSemantics};
use crate::lang::{Action, Bexp, CmpOp, Env, Exp};

use super::cube::Cube;
use super::entail::{cube_entails, cube_entails_ge};
use super::linexpr::{rat, LinExpr, Monomial, Sym};

/// A finite disjunction of cubes. No cubes means `false` (the algebra's 0);
/// a single empty cube is `true` — not to be confused with the identity
/// relation, which constrains every variable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct TransFormula {
    cubes: BTreeSet<Cube>,
}

impl TransFormula {
    pub fn falsity() -> TransFormula {
        TransFormula {
            cubes: BTreeSet::new(),
        }
    }

    pub fn truth() -> TransFormula {
        TransFormula::of_cube(Cube::truth())
    }

    pub fn of_cube(c: Cube) -> TransFormula {
        TransFormula {
            cubes: BTreeSet::from([c]),
        }
    }

    /// Collect cubes, dropping any that syntactically entails another.
    pub fn of_cubes(cubes: impl IntoIterator<Item = Cube>) -> TransFormula {
        let mut kept: Vec<Cube> = Vec::new();
        for c in cubes {
            if kept.iter().any(|k| c.entails_syntactic(k)) {
                continue;
            }
            kept.retain(|k| !k.entails_syntactic(&c));
            kept.push(c);
        }
        TransFormula {
            cubes: kept.into_iter().collect(),
        }
    }

    pub fn cubes(&self) -> impl Iterator<Item = &Cube> {
        self.cubes.iter()
    }

    pub fn cube_count(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_false(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn is_truth(&self) -> bool {
        self.cubes.len() == 1 && self.cubes.iter().next().unwrap().is_truth()
    }
}

impl fmt::Display for TransFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cubes.is_empty() {
            return write!(f, "false");
        }
        if self.cubes.len() == 1 {
            return write!(f, "{}", self.cubes.iter().next().unwrap());
        }
        let parts: Vec<String> = self.cubes.iter().map(|c| format!("({c})")).collect();
        write!(f, "{}", parts.join(" \\/ "))
    }
}

/// Widening strategy for the summary iteration.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Widening {
    /// Keep the old value if the new one is equivalent; otherwise jump to
    /// `true`.
    Trivial,
    /// Keep the constraints of the old value that the new value still
    /// entails (a single-cube hull). Stabilizes because the constraint set
    /// only shrinks.
    Drop,
}

/// A detected induction variable: `var` advances by `increment` (an affine
/// function of strictly lower strata) each iteration, giving `closed_form`
/// as a polynomial in the pre-state and the counter `k` after `k`
/// iterations.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Recurrence {
    pub var: String,
    pub stratum: usize,
    pub increment: LinExpr,
    pub closed_form: LinExpr,
}

/// One formula-level entailment query, recorded when capture is on (used by
/// the SMT-LIB2 export).
#[derive(Clone, Debug)]
pub struct EntailQuery {
    pub lhs: TransFormula,
    pub rhs: TransFormula,
    pub verdict: bool,
}

thread_local! {
    static QUERY_SINK: RefCell<Option<Vec<EntailQuery>>> = const { RefCell::new(None) };
}

/// Upper bound on recorded queries, to keep capture memory-bounded.
const QUERY_CAP: usize = 10_000;

/// Start (or stop) recording entailment queries on this thread.
pub fn capture_queries(on: bool) {
    QUERY_SINK.with(|s| {
        *s.borrow_mut() = if on { Some(Vec::new()) } else { None };
    });
}

/// Drain the recorded queries, leaving capture enabled.
pub fn take_queries() -> Vec<EntailQuery> {
    QUERY_SINK.with(|s| {
        let mut b = s.borrow_mut();
        match b.as_mut() {
            Some(v) => std::mem::take(v),
            None => Vec::new(),
        }
    })
}

fn record_query(lhs: &TransFormula, rhs: &TransFormula, verdict: bool) {
    QUERY_SINK.with(|s| {
        if let Some(v) = s.borrow_mut().as_mut() {
            if v.len() < QUERY_CAP {
                v.push(EntailQuery {
                    lhs: lhs.clone(),
                    rhs: rhs.clone(),
                    verdict,
                });
            }
        }
    });
}

/// The linear-recurrence transition-formula domain over a fixed variable
/// set.
#[derive(Clone, Debug)]
pub struct LraDomain {
    vars: Vec<String>,
    widening: Widening,
    cap: usize,
    fm_budget: usize,
}

pub const DEFAULT_CAP: usize = 16;

impl LraDomain {
    pub fn new(vars: impl IntoIterator<Item = String>) -> LraDomain {
        let mut vars: Vec<String> = vars.into_iter().collect();
        vars.sort();
        vars.dedup();
        LraDomain {
            vars,
            widening: Widening::Trivial,
            cap: DEFAULT_CAP,
            fm_budget: super::cube::FM_BUDGET,
        }
    }

    pub fn for_program(p: &crate::lang::Program) -> LraDomain {
        LraDomain::new(p.all_vars())
    }

    pub fn with_widening(mut self, w: Widening) -> LraDomain {
        self.widening = w;
        self
    }

    pub fn with_cap(mut self, cap: usize) -> LraDomain {
        assert!(cap >= 1, "DNF cap must be at least 1");
        self.cap = cap;
        self
    }

    pub fn with_fm_budget(mut self, budget: usize) -> LraDomain {
        self.fm_budget = budget;
        self
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// `a ⊨ b`: every cube of `a` entails some cube of `b`. Sound and
    /// incomplete (a cube entailing only the disjunction is missed).
    pub fn entails(&self, a: &TransFormula, b: &TransFormula) -> bool {
        let verdict = a
            .cubes()
            .all(|c| b.cubes().any(|d| cube_entails(c, d)));
        record_query(a, b, verdict);
        verdict
    }

    pub fn equivalent(&self, a: &TransFormula, b: &TransFormula) -> bool {
        self.entails(a, b) && self.entails(b, a)
    }

    /// Truth of the formula on a concrete pre/post state pair. Variables
    /// absent from an environment read as 0.
    pub fn eval_formula(&self, pre: &Env, post: &Env, a: &TransFormula) -> bool {
        let assign = |s: &Sym| -> BigRational {
            match s {
                Sym::In(x) => rat(pre.get(x).copied().unwrap_or(0)),
                Sym::Out(x) => rat(post.get(x).copied().unwrap_or(0)),
                Sym::K | Sym::Mid(_) => {
                    unreachable!("internal symbol {s} escaped into a formula")
                }
            }
        };
        a.cubes().any(|c| c.eval(&assign))
    }

    fn frame_rows(&self, except: Option<&str>) -> Vec<LinExpr> {
        self.vars
            .iter()
            .filter(|v| Some(v.as_str()) != except)
            .map(|v| {
                LinExpr::sym(Sym::Out(v.clone())).sub(&LinExpr::sym(Sym::In(v.clone())))
            })
            .collect()
    }

    /// Subsumption-prune and enforce the DNF cap by hull-merging the two
    /// largest cubes until within bounds.
    fn normalize(&self, cubes: impl IntoIterator<Item = Cube>) -> TransFormula {
        let mut f = TransFormula::of_cubes(cubes);
        while f.cubes.len() > self.cap {
            let a = f.cubes.iter().next_back().unwrap().clone();
            f.cubes.remove(&a);
            let b = f.cubes.iter().next_back().unwrap().clone();
            f.cubes.remove(&b);
            let merged = self.hull2(&a, &b);
            f = TransFormula::of_cubes(f.cubes.into_iter().chain(std::iter::once(merged)));
        }
        f
    }

    /// Pairwise hull: the constraints entailed by both cubes — equalities
    /// via affine-hull intersection, inequalities from either cube's rows
    /// checked against the other.
    fn hull2(&self, a: &Cube, b: &Cube) -> Cube {
        let basis: Vec<LinExpr> = a.eq_rows().cloned().collect();
        let eqs = intersect_affine(&basis, b);
        let mut ges: Vec<LinExpr> = Vec::new();
        for g in a.ges() {
            if cube_entails_ge(b, g) {
                ges.push(g.clone());
            }
        }
        for g in b.ges() {
            if cube_entails_ge(a, g) {
                ges.push(g.clone());
            }
        }
        Cube::new(eqs, ges).unwrap_or_else(Cube::truth)
    }

    /// Sequential composition of two cubes through a quantified
    /// intermediate state.
    fn seq_cubes(&self, c: &Cube, d: &Cube) -> Option<Cube> {
        let left = c.rename(&|s: &Sym| match s {
            Sym::Out(x) => Sym::Mid(x.clone()),
            other => other.clone(),
        });
        let right = d.rename(&|s: &Sym| match s {
            Sym::In(x) => Sym::Mid(x.clone()),
            other => other.clone(),
        });
        let conj = left.conj(&right)?;
        let mids: BTreeSet<Sym> = conj
            .all_syms()
            .into_iter()
            .filter(|s| matches!(s, Sym::Mid(_)))
            .collect();
        conj.eliminate_syms(&mids, self.fm_budget)
    }

    /// Read the induction variables off the affine hull: a variable
    /// qualifies when `x′ − x` has the same normal form in every cube, that
    /// form is affine over pre-state variables, and (for stratum > 0) all
    /// of its variables are strictly lower-stratum induction variables.
    pub fn detect_induction_vars(&self, a: &TransFormula) -> Vec<Recurrence> {
        let cubes: Vec<&Cube> = a.cubes().collect();
        if cubes.is_empty() {
            return Vec::new();
        }
        let mut incr: BTreeMap<String, LinExpr> = BTreeMap::new();
        'vars: for x in &self.vars {
            let delta = LinExpr::sym(Sym::Out(x.clone())).sub(&LinExpr::sym(Sym::In(x.clone())));
            let mut common: Option<LinExpr> = None;
            for c in &cubes {
                let nf = c.rref().reduce(&delta);
                match &common {
                    None => common = Some(nf),
                    Some(e) if *e == nf => {}
                    _ => continue 'vars,
                }
            }
            let f = common.unwrap();
            if f.degree() > 1 {
                continue;
            }
            if !f.all_syms().iter().all(|s| matches!(s, Sym::In(_))) {
                continue;
            }
            incr.insert(x.clone(), f);
        }

        // Strata: 0 for constant increments, else 1 + max stratum of the
        // (strictly lower) variables the increment reads.
        let mut stratum: BTreeMap<String, usize> = BTreeMap::new();
        for (x, f) in &incr {
            if f.is_constant() {
                stratum.insert(x.clone(), 0);
            }
        }
        loop {
            let mut changed = false;
            for (x, f) in &incr {
                if stratum.contains_key(x) {
                    continue;
                }
                let deps: Vec<String> = f
                    .all_syms()
                    .into_iter()
                    .map(|s| match s {
                        Sym::In(y) => y,
                        _ => unreachable!(),
                    })
                    .collect();
                if deps.iter().all(|y| y != x && stratum.contains_key(y)) {
                    let s = 1 + deps.iter().map(|y| stratum[y]).max().unwrap_or(0);
                    stratum.insert(x.clone(), s);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        // Closed forms, lowest stratum first. Each variable's value after i
        // iterations is tracked as a polynomial in i with pre-state
        // coefficients; summing over i < k must stay within degree 2 or the
        // variable is demoted to non-inductive.
        let mut order: Vec<(String, usize)> = stratum
            .iter()
            .map(|(x, s)| (x.clone(), *s))
            .collect();
        order.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));

        // cl_x(i) = p[0] + p[1]·i + p[2]·i².
        let mut polys: BTreeMap<String, [LinExpr; 3]> = BTreeMap::new();
        let mut out = Vec::new();
        'order: for (x, s) in order {
            let f = &incr[&x];
            let self_in = LinExpr::sym(Sym::In(x.clone()));
            let (closed, poly);
            if s == 0 {
                let n = f.constant.clone();
                closed = self_in.add(&LinExpr::term(Monomial::unit(Sym::K), n.clone()));
                poly = [self_in, LinExpr::constant(n), LinExpr::zero()];
            } else {
                // Increment at iteration i: substitute each variable's own
                // polynomial.
                let mut p = [
                    LinExpr::constant(f.constant.clone()),
                    LinExpr::zero(),
                    LinExpr::zero(),
                ];
                for (m, coeff) in &f.terms {
                    let y = match &m.syms()[0] {
                        Sym::In(y) => y.clone(),
                        _ => unreachable!(),
                    };
                    let Some(py) = polys.get(&y) else {
                        continue 'order; // dependency was demoted
                    };
                    for j in 0..3 {
                        p[j] = p[j].add(&py[j].scale(coeff));
                    }
                }
                if !p[2].is_zero() {
                    continue; // sum would be cubic in k
                }
                // Σ_{i<k} (p0 + p1·i) = p0·k + p1·(k² − k)/2.
                let k = LinExpr::sym(Sym::K);
                let Some(t0) = p[0].mul(&k) else { continue };
                if !p[1].is_constant() {
                    continue; // p1·k² would exceed degree 2
                }
                let half = p[1].constant.clone() / rat(2);
                let kk = LinExpr::term(Monomial::pair(Sym::K, Sym::K), half.clone());
                let kneg = LinExpr::term(Monomial::unit(Sym::K), -half.clone());
                closed = self_in.add(&t0).add(&kk).add(&kneg);
                poly = [
                    self_in,
                    p[0].sub(&LinExpr::constant(half.clone())),
                    LinExpr::constant(half),
                ];
            }
            polys.insert(x.clone(), poly);
            out.push(Recurrence {
                var: x,
                stratum: s,
                increment: f.clone(),
                closed_form: closed,
            });
        }
        out
    }

    /// Iteration: detect recurrences, emit closed forms under a counter
    /// `k ≥ 0`, then project the counter away — by substitution when some
    /// stratum-0 variable steps by ±1, otherwise by Fourier–Motzkin over the
    /// constraints linear in `k` (with derived monotonicity facts added
    /// first; constraints still carrying `k` afterwards are dropped).
    fn star_value(&self, a: &TransFormula) -> TransFormula {
        if a.is_false() {
            return self.one();
        }
        let recs = self.detect_induction_vars(a);
        let mut eqs: Vec<LinExpr> = Vec::new();
        for r in &recs {
            eqs.push(LinExpr::sym(Sym::Out(r.var.clone())).sub(&r.closed_form));
        }
        let mut ges: Vec<LinExpr> = vec![LinExpr::sym(Sym::K)];

        let pivot = recs.iter().find(|r| {
            r.stratum == 0
                && (r.increment.constant == rat(1) || r.increment.constant == rat(-1))
        });
        let cube = if let Some(r) = pivot {
            // k = ±(x′ − x); the reciprocal of ±1 is itself.
            let repl = LinExpr::sym(Sym::Out(r.var.clone()))
                .sub(&LinExpr::sym(Sym::In(r.var.clone())))
                .scale(&r.increment.constant);
            let sub = |e: &LinExpr| e.substitute(&Sym::K, &repl).expect("affine substitution");
            Cube::new(eqs.iter().map(&sub), ges.iter().map(&sub))
        } else {
            for r in &recs {
                if r.stratum == 0 {
                    let n = &r.increment.constant;
                    let delta = LinExpr::sym(Sym::Out(r.var.clone()))
                        .sub(&LinExpr::sym(Sym::In(r.var.clone())));
                    if n.is_positive() {
                        ges.push(delta);
                    } else if n.is_negative() {
                        ges.push(delta.scale(&rat(-1)));
                    }
                }
            }
            let unit_k = Monomial::unit(Sym::K);
            let has_k_product = |e: &LinExpr| {
                e.terms
                    .keys()
                    .any(|m| m.degree() == 2 && m.mentions(&Sym::K))
            };
            let mut keep_eqs = Vec::new();
            let mut fm = Vec::new();
            let mut keep_ges = Vec::new();
            for e in eqs {
                if has_k_product(&e) {
                    continue;
                } else if !e.coeff(&unit_k).is_zero() {
                    fm.push(e.scale(&rat(-1)));
                    fm.push(e);
                } else {
                    keep_eqs.push(e);
                }
            }
            for g in ges {
                if has_k_product(&g) {
                    continue;
                } else if !g.coeff(&unit_k).is_zero() {
                    fm.push(g);
                } else {
                    keep_ges.push(g);
                }
            }
            let (mut pos, mut neg) = (Vec::new(), Vec::new());
            for e in fm {
                if e.coeff(&unit_k).is_positive() {
                    pos.push(e);
                } else {
                    neg.push(e);
                }
            }
            if pos.len() * neg.len() <= self.fm_budget {
                for p in &pos {
                    let cp = p.coeff(&unit_k);
                    for n in &neg {
                        let cn = n.coeff(&unit_k);
                        let combined = p.scale(&cn.abs()).add(&n.scale(&cp));
                        if !combined.is_constant() {
                            keep_ges.push(combined);
                        }
                    }
                }
            }
            Cube::new(keep_eqs, keep_ges)
        };
        TransFormula::of_cube(cube.unwrap_or_else(Cube::truth))
    }

    fn widen_value(&self, a: &TransFormula, b: &TransFormula) -> TransFormula {
        match self.widening {
            Widening::Trivial => {
                if self.equivalent(a, b) {
                    a.clone()
                } else {
                    TransFormula::truth()
                }
            }
            Widening::Drop => {
                if a.is_false() {
                    return b.clone();
                }
                let first = a.cubes.iter().next().unwrap();
                let others: Vec<&Cube> =
                    a.cubes().skip(1).chain(b.cubes()).collect();
                let mut basis: Vec<LinExpr> = first.eq_rows().cloned().collect();
                for d in &others {
                    if basis.is_empty() {
                        break;
                    }
                    basis = intersect_affine(&basis, d);
                }
                let ges: Vec<LinExpr> = first
                    .ges()
                    .filter(|g| others.iter().all(|d| cube_entails_ge(d, g)))
                    .cloned()
                    .collect();
                TransFormula::of_cube(Cube::new(basis, ges).unwrap_or_else(Cube::truth))
            }
        }
    }

    /// Encode a boolean condition on the *post*-state as a transition
    /// formula whose pre-state is unconstrained, so that `leq(v, goal)`
    /// asks whether every behaviour in `v` ends in a state satisfying the
    /// condition. `None` when an atom involves division or degree > 2.
    pub fn assertion_formula(&self, b: &Bexp) -> Option<TransFormula> {
        self.assertion_signed(b, true)
    }

    fn assertion_signed(&self, b: &Bexp, positive: bool) -> Option<TransFormula> {
        match b {
            Bexp::Cmp(op, e1, e2) => {
                let op = if positive { *op } else { complement(*op) };
                let l = post_lin(e1)?;
                let r = post_lin(e2)?;
                let ge = |e: LinExpr| {
                    TransFormula::of_cube(
                        Cube::new(vec![], vec![e]).unwrap_or_else(Cube::truth),
                    )
                };
                Some(match op {
                    CmpOp::Le => ge(r.sub(&l)),
                    CmpOp::Lt => ge(r.sub(&l).sub(&LinExpr::int(1))),
                    CmpOp::Ge => ge(l.sub(&r)),
                    CmpOp::Gt => ge(l.sub(&r).sub(&LinExpr::int(1))),
                    CmpOp::Eq => TransFormula::of_cube(
                        Cube::new(vec![l.sub(&r)], vec![]).unwrap_or_else(Cube::truth),
                    ),
                    CmpOp::Ne => self.plus(
                        &ge(r.sub(&l).sub(&LinExpr::int(1))),
                        &ge(l.sub(&r).sub(&LinExpr::int(1))),
                    ),
                })
            }
            Bexp::And(a, b) if positive => self.assertion_conj(a, b, positive),
            Bexp::And(a, b) => Some(self.plus(
                &self.assertion_signed(a, false)?,
                &self.assertion_signed(b, false)?,
            )),
            Bexp::Or(a, b) if positive => Some(self.plus(
                &self.assertion_signed(a, true)?,
                &self.assertion_signed(b, true)?,
            )),
            Bexp::Or(a, b) => self.assertion_conj(a, b, positive),
            Bexp::Not(inner) => self.assertion_signed(inner, !positive),
        }
    }

    fn assertion_conj(&self, a: &Bexp, b: &Bexp, positive: bool) -> Option<TransFormula> {
        let fa = self.assertion_signed(a, positive)?;
        let fb = self.assertion_signed(b, positive)?;
        let mut cubes = Vec::new();
        for ca in fa.cubes() {
            for cb in fb.cubes() {
                let eqs: Vec<LinExpr> = ca.eq_rows().chain(cb.eq_rows()).cloned().collect();
                let ges: Vec<LinExpr> = ca.ges().chain(cb.ges()).cloned().collect();
                if let Some(c) = Cube::new(eqs, ges) {
                    cubes.push(c);
                }
            }
        }
        Some(TransFormula::of_cubes(cubes))
    }
}

fn complement(op: CmpOp) -> CmpOp {
    match op {
        CmpOp::Lt => CmpOp::Ge,
        CmpOp::Le => CmpOp::Gt,
        CmpOp::Gt => CmpOp::Le,
        CmpOp::Ge => CmpOp::Lt,
        CmpOp::Eq => CmpOp::Ne,
        CmpOp::Ne => CmpOp::Eq,
    }
}

/// A program expression read over the post-state.
fn post_lin(e: &Exp) -> Option<LinExpr> {
    Some(exp_to_lin(e)?.rename(&|s| match s {
        Sym::In(x) => Sym::Out(x.clone()),
        other => other.clone(),
    }))
}

/// Convert a program expression to a pre-state polynomial; `None` on
/// division or when the degree exceeds 2.
fn exp_to_lin(e: &Exp) -> Option<LinExpr> {
    match e {
        Exp::Int(n) => Some(LinExpr::int(*n)),
        Exp::Var(x) => Some(LinExpr::sym(Sym::In(x.clone()))),
        Exp::Add(a, b) => Some(exp_to_lin(a)?.add(&exp_to_lin(b)?)),
        Exp::Sub(a, b) => Some(exp_to_lin(a)?.sub(&exp_to_lin(b)?)),
        Exp::Mul(a, b) => exp_to_lin(a)?.mul(&exp_to_lin(b)?),
        Exp::Div(_, _) => None,
    }
}

impl Domain for LraDomain {
    type Value = TransFormula;

    fn zero(&self) -> TransFormula {
        TransFormula::falsity()
    }

    fn one(&self) -> TransFormula {
        TransFormula::of_cube(
            Cube::new(self.frame_rows(None), []).expect("identity cube is consistent"),
        )
    }

    fn plus(&self, a: &TransFormula, b: &TransFormula) -> TransFormula {
        self.normalize(a.cubes().chain(b.cubes()).cloned())
    }

    fn times(&self, a: &TransFormula, b: &TransFormula) -> TransFormula {
        let mut out = Vec::new();
        for c in a.cubes() {
            for d in b.cubes() {
                if let Some(cd) = self.seq_cubes(c, d) {
                    out.push(cd);
                }
            }
        }
        self.normalize(out)
    }

    fn star(&self, a: &TransFormula) -> TransFormula {
        self.star_value(a)
    }

    fn exists(&self, x: &str, a: &TransFormula) -> TransFormula {
        let targets = BTreeSet::from([Sym::In(x.to_string()), Sym::Out(x.to_string())]);
        let frame =
            LinExpr::sym(Sym::Out(x.to_string())).sub(&LinExpr::sym(Sym::In(x.to_string())));
        let cubes = a.cubes().filter_map(|c| {
            c.eliminate_syms(&targets, self.fm_budget)?
                .with_eq(frame.clone())
        });
        self.normalize(cubes)
    }

    fn widen(&self, a: &TransFormula, b: &TransFormula) -> TransFormula {
        self.widen_value(a, b)
    }

    fn equal(&self, a: &TransFormula, b: &TransFormula) -> bool {
        self.equivalent(a, b)
    }

    fn leq(&self, a: &TransFormula, b: &TransFormula) -> bool {
        self.entails(a, b)
    }

    fn render(&self, a: &TransFormula) -> String {
        a.to_string()
    }
}

impl EdgeSemantics for LraDomain {
    fn sem_action(&self, action: &Action) -> TransFormula {
        let cube = match action {
            Action::Assign(x, t) => {
                let mut eqs = self.frame_rows(Some(x));
                if let Some(te) = exp_to_lin(t) {
                    eqs.push(LinExpr::sym(Sym::Out(x.clone())).sub(&te));
                }
                Cube::new(eqs, [])
            }
            Action::Assume(g) => {
                let ges = exp_to_lin(g).into_iter().collect::<Vec<_>>();
                Cube::new(self.frame_rows(None), ges)
            }
            Action::Havoc(x) => Cube::new(self.frame_rows(Some(x)), []),
            Action::Call(_) => {
                panic!("call edges have no intrinsic transition semantics")
            }
        };
        match cube {
            Some(c) => TransFormula::of_cube(c),
            None => TransFormula::falsity(),
        }
    }
}

/// All equalities implied by both the span of `basis` and the cube `d`:
/// combinations Σλᵢ·basisᵢ whose normal form under `d` vanishes, computed
/// from the null space of the normal-form images.
fn intersect_affine(basis: &[LinExpr], d: &Cube) -> Vec<LinExpr> {
    if basis.is_empty() {
        return Vec::new();
    }
    let images: Vec<LinExpr> = basis.iter().map(|a| lin_normalize(d, a)).collect();
    let mons: BTreeSet<Monomial> = images
        .iter()
        .flat_map(|e| e.terms.keys().cloned())
        .collect();
    let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(mons.len() + 1);
    for m in &mons {
        rows.push(images.iter().map(|e| e.coeff(m)).collect());
    }
    rows.push(images.iter().map(|e| e.constant.clone()).collect());
    null_space(rows, basis.len())
        .into_iter()
        .filter_map(|lambda| {
            let mut acc = LinExpr::zero();
            for (l, a) in lambda.iter().zip(basis) {
                acc = acc.add(&a.scale(l));
            }
            (!acc.is_zero()).then_some(acc)
        })
        .collect()
}

/// Input-independent linear normal form of `e` under `d`: reduce, apply
/// every affine pivot solution once (solutions mention only non-pivot
/// symbols, so one pass is a fixpoint), reduce again. Being linear in `e`
/// makes it usable column-wise in `intersect_affine`.
fn lin_normalize(d: &Cube, e: &LinExpr) -> LinExpr {
    let mut cur = d.rref().reduce(e);
    let sols: Vec<(Sym, LinExpr)> = d
        .rref()
        .rows()
        .filter_map(|row| {
            let lead = row.leading().unwrap();
            if lead.degree() != 1 {
                return None;
            }
            let s = lead.syms()[0].clone();
            let sol = d.rref().solution_for(lead).unwrap();
            (sol.degree() <= 1).then_some((s, sol))
        })
        .collect();
    for (s, sol) in &sols {
        if let Some(next) = cur.substitute(s, sol) {
            cur = next;
        }
    }
    d.rref().reduce(&cur)
}

/// Basis of the null space { λ ∈ Q^n : A·λ = 0 } for a dense rational
/// matrix given row-major.
fn null_space(mut rows: Vec<Vec<BigRational>>, n: usize) -> Vec<Vec<BigRational>> {
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
    let mut rank = 0;
    for col in 0..n {
        let Some(r) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, r);
        let inv = rows[rank][col].recip();
        for c in 0..n {
            let v = &rows[rank][c] * &inv;
            rows[rank][c] = v;
        }
        for r2 in 0..rows.len() {
            if r2 != rank && !rows[r2][col].is_zero() {
                let factor = rows[r2][col].clone();
                for c in 0..n {
                    let v = &rows[r2][c] - &rows[rank][c] * &factor;
                    rows[r2][c] = v;
                }
            }
        }
        pivot_of_col[col] = Some(rank);
        rank += 1;
    }
    let mut basis = Vec::new();
    for free in 0..n {
        if pivot_of_col[free].is_some() {
            continue;
        }
        let mut v = vec![BigRational::zero(); n];
        v[free] = BigRational::one();
        for col in 0..n {
            if let Some(r) = pivot_of_col[col] {
                v[col] = -rows[r][free].clone();
            }
        }
        basis.push(v);
    }
    basis
}
