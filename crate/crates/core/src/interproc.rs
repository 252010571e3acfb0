//! Interprocedural analysis: summary assignments by widening or least
//! fixpoint, the PathTo table over the call graph, and the activation-stack
//! semantics used as a coincidence oracle.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::algebra::{Domain, EdgeSemantics};
use crate::eval::{interpret_with, EvalError, Interpretation, SummaryAssignment};
use crate::lang::{Action, Bexp, EdgeId, Program, TraceEvent, VertexId};
use crate::pathexpr::{solve_pairwise, solve_single_source};
use crate::regex;

pub const SUMMARY_BUDGET: usize = 200;
pub const ORACLE_BUDGET: usize = 1_000_000;

#[derive(Error, Debug)]
pub enum InterprocError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("summary iteration for procedure {procedure} did not converge within {budget} rounds")]
    WideningDiverged { procedure: String, budget: usize },
    #[error("computed summary assignment is not inductive at procedure {procedure}")]
    NotInductive { procedure: String },
    #[error("return transition on a depth-1 activation stack")]
    ReturnOnMain,
    #[error("coincidence oracle budget of {0} updates exceeded; result inconclusive")]
    OracleBudgetExceeded(usize),
}

/// Procedure-level call structure: one edge i → j per *distinct* caller–
/// callee pair (multiple call sites collapse to one edge).
#[derive(Clone, Debug)]
pub struct CallGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl CallGraph {
    pub fn of_program(program: &Program) -> CallGraph {
        let mut edges = BTreeSet::new();
        for (i, p) in program.procedures.iter().enumerate() {
            for e in &p.graph.edges {
                if let Action::Call(j) = e.action {
                    edges.insert((i, j));
                }
            }
        }
        CallGraph {
            n: program.procedures.len(),
            edges: edges.into_iter().collect(),
        }
    }
}

/// Quantify away every local of a procedure (in sorted order).
pub fn exists_locals<D: Domain>(
    domain: &D,
    locals: &BTreeSet<String>,
    v: &D::Value,
) -> D::Value {
    let mut v = v.clone();
    for x in locals {
        v = domain.exists(x, &v);
    }
    v
}

/// The body value of one procedure under the current summaries:
/// ∃LV_i. I(S)[pathexp(entry_i, exit_i)].
fn body_value<D: Domain + EdgeSemantics>(
    interp: &Interpretation<D>,
    i: usize,
) -> Result<D::Value, EvalError> {
    let p = &interp.program.procedures[i];
    let solved = solve_single_source(&p.graph, p.graph.entry);
    let body = interp.interpret(&solved[&p.graph.exit])?;
    Ok(exists_locals(interp.domain, &p.locals, &body))
}

/// One round of the summary iteration: the pre-widening candidates and the
/// widened assignment.
#[derive(Clone, Debug)]
pub struct SummaryRound<V> {
    pub candidates: Vec<V>,
    pub widened: Vec<V>,
}

/// Iterate S_n(i) = S_{n−1}(i) ∇ ∃LV_i. I(S_{n−1})[pathexp(entry_i,
/// exit_i)] from S_0 = λi.0 until the assignment stops changing, returning
/// the fixpoint together with every round. The result is checked to be
/// inductive.
pub fn summary_fixpoint_widening_trace<D: Domain + EdgeSemantics>(
    domain: &D,
    program: &Program,
    budget: usize,
) -> Result<(SummaryAssignment<D::Value>, Vec<SummaryRound<D::Value>>), InterprocError> {
    let n = program.procedures.len();
    let mut s: SummaryAssignment<D::Value> = (0..n).map(|_| domain.zero()).collect();
    let mut rounds = Vec::new();
    for _ in 0..budget {
        let interp = Interpretation::new(domain, program).with_summary(s.clone());
        let mut candidates = Vec::with_capacity(n);
        for i in 0..n {
            candidates.push(body_value(&interp, i)?);
        }
        let widened: Vec<D::Value> = s
            .iter()
            .zip(&candidates)
            .map(|(old, c)| domain.widen(old, c))
            .collect();
        let converged = widened.iter().zip(&s).all(|(a, b)| domain.equal(a, b));
        rounds.push(SummaryRound {
            candidates,
            widened: widened.clone(),
        });
        if converged {
            assert_inductive(domain, program, &widened)?;
            return Ok((widened, rounds));
        }
        s = widened;
    }
    let last = &rounds.last().expect("budget is at least 1").widened;
    let prev: &[D::Value] = if rounds.len() >= 2 {
        &rounds[rounds.len() - 2].widened
    } else {
        &s
    };
    let bad = (0..n)
        .find(|&i| !domain.equal(&last[i], &prev[i]))
        .unwrap_or(0);
    Err(InterprocError::WideningDiverged {
        procedure: program.procedures[bad].name.clone(),
        budget,
    })
}

pub fn summary_fixpoint_widening<D: Domain + EdgeSemantics>(
    domain: &D,
    program: &Program,
) -> Result<SummaryAssignment<D::Value>, InterprocError> {
    summary_fixpoint_widening_trace(domain, program, SUMMARY_BUDGET).map(|(s, _)| s)
}

/// Kleene iteration of F(S) = λi. ∃LV_i. I(S)[pathexp(entry_i, exit_i)]
/// from ⊥. Exact, but terminates only over domains with finite ascending
/// chains (the relational domain).
pub fn summary_fixpoint_lfp<D: Domain + EdgeSemantics>(
    domain: &D,
    program: &Program,
) -> Result<SummaryAssignment<D::Value>, InterprocError> {
    let n = program.procedures.len();
    let mut s: SummaryAssignment<D::Value> = (0..n).map(|_| domain.zero()).collect();
    loop {
        let interp = Interpretation::new(domain, program).with_summary(s.clone());
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            next.push(body_value(&interp, i)?);
        }
        if next.iter().zip(&s).all(|(a, b)| domain.equal(a, b)) {
            assert_inductive(domain, program, &next)?;
            return Ok(next);
        }
        s = next;
    }
}

fn assert_inductive<D: Domain + EdgeSemantics>(
    domain: &D,
    program: &Program,
    s: &SummaryAssignment<D::Value>,
) -> Result<(), InterprocError> {
    let interp = Interpretation::new(domain, program).with_summary(s.clone());
    for i in 0..program.procedures.len() {
        let body = body_value(&interp, i)?;
        if !domain.leq(&body, &s[i]) {
            return Err(InterprocError::NotInductive {
                procedure: program.procedures[i].name.clone(),
            });
        }
    }
    Ok(())
}

/// The joined value flowing across the call-graph edge i → j:
/// ∃LV_i. ⊕ { I(S)[pathexp(entry_i, src(e))] : e a call-to-j edge in i }.
pub fn call_edge_value<D: Domain + EdgeSemantics>(
    interp: &Interpretation<D>,
    i: usize,
    j: usize,
) -> Result<D::Value, EvalError> {
    let domain = interp.domain;
    let p = &interp.program.procedures[i];
    let solved = solve_single_source(&p.graph, p.graph.entry);
    let mut acc = domain.zero();
    for e in &p.graph.edges {
        if e.action == Action::Call(j) {
            let to_site = interp.interpret(&solved[&e.src])?;
            acc = domain.plus(&acc, &to_site);
        }
    }
    Ok(exists_locals(domain, &p.locals, &acc))
}

/// The PathTo table: for every vertex v of procedure k,
/// I⟨v⟩ = I⟨entry_k⟩ ⊙ I(S)[pathexp(entry_k, v)], with the entry values
/// read directly off the call-graph path expression (the call-graph
/// expression already ends at the entry, so no extra factor is composed
/// there).
pub fn path_to_table<D: Domain + EdgeSemantics>(
    interp: &Interpretation<D>,
) -> Result<BTreeMap<VertexId, D::Value>, EvalError> {
    let domain = interp.domain;
    let program = interp.program;
    let cg = CallGraph::of_program(program);
    let sym_edges: Vec<(usize, usize, EdgeId)> = cg
        .edges
        .iter()
        .enumerate()
        .map(|(k, (i, j))| (*i, *j, EdgeId(k as u32)))
        .collect();
    let order: Vec<usize> = (0..cg.n).collect();
    let mat = solve_pairwise(cg.n, &sym_edges, &order);
    let mut entry_vals = Vec::with_capacity(cg.n);
    for k in 0..cg.n {
        let expr = if k == 0 {
            regex::plus(regex::eps(), mat[0][0].clone())
        } else {
            mat[0][k].clone()
        };
        let val = interpret_with(domain, &expr, &mut |id| {
            let (i, j) = cg.edges[id.0 as usize];
            call_edge_value(interp, i, j)
        })?;
        entry_vals.push(val);
    }
    let mut table = BTreeMap::new();
    for (k, p) in program.procedures.iter().enumerate() {
        let solved = solve_single_source(&p.graph, p.graph.entry);
        for (v, expr) in solved {
            let value = if v == p.graph.entry {
                entry_vals[k].clone()
            } else {
                domain.times(&entry_vals[k], &interp.interpret(&expr)?)
            };
            table.insert(v, value);
        }
    }
    Ok(table)
}

/// A stack of activation records, bottom first; each record pairs the
/// procedure's local-variable set with the value accumulated in that frame.
#[derive(Clone, Debug)]
pub struct ActivationStack<D: Domain> {
    records: Vec<(BTreeSet<String>, D::Value)>,
}

impl<D: Domain> ActivationStack<D> {
    /// The initial stack: main's frame carrying 1.
    pub fn initial(domain: &D, program: &Program) -> ActivationStack<D> {
        ActivationStack {
            records: vec![(program.procedures[0].locals.clone(), domain.one())],
        }
    }

    pub fn depth(&self) -> usize {
        self.records.len()
    }

    pub fn top(&self) -> &(BTreeSet<String>, D::Value) {
        self.records.last().expect("stack is never empty")
    }

    /// (∃V_n.a_n) ⊙ ⋯ ⊙ (∃V_2.a_2) ⊙ a_1, numbering from the top: every
    /// suspended record is composed with its locals quantified away, the
    /// top record as-is.
    pub fn flatten(&self, domain: &D) -> D::Value {
        let mut acc: Option<D::Value> = None;
        for (idx, (locals, a)) in self.records.iter().enumerate() {
            let part = if idx + 1 == self.records.len() {
                a.clone()
            } else {
                exists_locals(domain, locals, a)
            };
            acc = Some(match acc {
                None => part,
                Some(prev) => domain.times(&prev, &part),
            });
        }
        acc.expect("stack is never empty")
    }
}

/// One transition of the stack semantics: a call pushes a fresh frame
/// carrying 1, a return pops the callee record into the caller (quantifying
/// the callee's locals), and any other edge multiplies into the top frame.
pub fn stack_step<D: Domain + EdgeSemantics>(
    interp: &Interpretation<D>,
    ev: &TraceEvent,
    stack: &mut ActivationStack<D>,
) -> Result<(), InterprocError> {
    let domain = interp.domain;
    match ev {
        TraceEvent::Edge(id) => {
            let e = interp
                .program
                .edge(*id)
                .ok_or(EvalError::UnknownEdge(*id))?;
            match &e.action {
                Action::Call(j) => {
                    stack
                        .records
                        .push((interp.program.procedures[*j].locals.clone(), domain.one()));
                }
                other => {
                    let v = domain.sem_action(other);
                    let top = stack.records.last_mut().expect("stack is never empty");
                    top.1 = domain.times(&top.1, &v);
                }
            }
        }
        TraceEvent::Return => {
            if stack.records.len() < 2 {
                return Err(InterprocError::ReturnOnMain);
            }
            let (locals, a) = stack.records.pop().unwrap();
            let summary = exists_locals(domain, &locals, &a);
            let top = stack.records.last_mut().unwrap();
            top.1 = domain.times(&top.1, &summary);
        }
    }
    Ok(())
}

/// Run the stack semantics over a whole event sequence (as produced by
/// `concrete_run`), starting from the initial stack.
pub fn run_stack_semantics<D: Domain + EdgeSemantics>(
    interp: &Interpretation<D>,
    events: &[TraceEvent],
) -> Result<ActivationStack<D>, InterprocError> {
    let mut stack = ActivationStack::initial(interp.domain, interp.program);
    for ev in events {
        stack_step(interp, ev, &mut stack)?;
    }
    Ok(stack)
}

/// Join of flatten(stack(π)) over every interprocedurally valid path from
/// main's entry to each vertex, by exact tabulation: matched-path values
/// within each frame first (call edges complete through the callee's
/// matched value with locals quantified), then the unfinished-call chain
/// values into each procedure. Requires a domain with finitely many values;
/// `budget` bounds the number of worklist updates.
pub fn coincidence_oracle<D: Domain + EdgeSemantics>(
    domain: &D,
    program: &Program,
    budget: usize,
) -> Result<BTreeMap<VertexId, D::Value>, InterprocError> {
    let mut updates = 0usize;
    let bump = |updates: &mut usize| -> Result<(), InterprocError> {
        *updates += 1;
        if *updates > budget {
            Err(InterprocError::OracleBudgetExceeded(budget))
        } else {
            Ok(())
        }
    };

    // Matched-path values M[v]: join over same-level paths from the owning
    // procedure's entry (every call on the path has returned).
    let mut matched: BTreeMap<VertexId, D::Value> = program
        .procedures
        .iter()
        .flat_map(|p| p.graph.vertices.iter())
        .map(|v| (*v, domain.zero()))
        .collect();
    let mut work: VecDeque<VertexId> = VecDeque::new();
    for p in &program.procedures {
        let entry = p.graph.entry;
        matched.insert(entry, domain.one());
        work.push_back(entry);
    }
    while let Some(v) = work.pop_front() {
        let i = program.proc_of_vertex(v).expect("vertex owned by a procedure");
        let p = &program.procedures[i];
        let a = matched[&v].clone();
        for e in p.graph.out_edges(v) {
            let step = match &e.action {
                Action::Call(j) => {
                    let callee = &program.procedures[*j];
                    let at_exit = matched[&callee.graph.exit].clone();
                    exists_locals(domain, &callee.locals, &at_exit)
                }
                other => domain.sem_action(other),
            };
            let b = domain.times(&a, &step);
            let joined = domain.plus(&matched[&e.tgt], &b);
            if !domain.equal(&joined, &matched[&e.tgt]) {
                bump(&mut updates)?;
                matched.insert(e.tgt, joined);
                work.push_back(e.tgt);
            }
        }
        // A change at an exit re-enables every call site of this procedure.
        if v == p.graph.exit {
            for (k, q) in program.procedures.iter().enumerate() {
                for e in &q.graph.edges {
                    if e.action == Action::Call(i) {
                        let _ = k;
                        work.push_back(e.src);
                    }
                }
            }
        }
    }

    // Unfinished-chain values C[k]: join of flatten-of-tail over every
    // chain of pending calls reaching a fresh frame of procedure k. The
    // suspended caller record contributes its matched value with the
    // caller's locals quantified away — exactly its flatten share.
    let mut chains: Vec<D::Value> = (0..program.procedures.len())
        .map(|_| domain.zero())
        .collect();
    chains[0] = domain.one();
    let mut changed = true;
    while changed {
        changed = false;
        for (i, p) in program.procedures.iter().enumerate() {
            for e in &p.graph.edges {
                if let Action::Call(j) = e.action {
                    let to_site = domain.times(&chains[i], &matched[&e.src]);
                    let contrib = exists_locals(domain, &p.locals, &to_site);
                    let joined = domain.plus(&chains[j], &contrib);
                    if !domain.equal(&joined, &chains[j]) {
                        bump(&mut updates)?;
                        chains[j] = joined;
                        changed = true;
                    }
                }
            }
        }
    }

    Ok(matched
        .into_iter()
        .map(|(v, m)| {
            let k = program.proc_of_vertex(v).expect("owned");
            (v, domain.times(&chains[k], &m))
        })
        .collect())
}

/// Assertion verdicts: SAFE means the analyzed value entails the asserted
/// condition; UNKNOWN covers both genuine failures and analysis imprecision.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Verdict {
    Safe,
    Unknown,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Safe => write!(f, "SAFE"),
            Verdict::Unknown => write!(f, "UNKNOWN"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckRow<V> {
    pub procedure: String,
    pub vertex: VertexId,
    pub value: V,
    pub verdict: Verdict,
}

/// Evaluate every assertion against the PathTo table. `encode` turns a
/// condition into a domain value over the post-state; an assertion the
/// domain cannot express is UNKNOWN.
pub fn check_asserts<D: Domain + EdgeSemantics>(
    interp: &Interpretation<D>,
    table: &BTreeMap<VertexId, D::Value>,
    encode: impl Fn(&Bexp) -> Option<D::Value>,
) -> Vec<CheckRow<D::Value>> {
    let domain = interp.domain;
    let mut rows = Vec::new();
    for a in &interp.program.asserts {
        let value = table[&a.vertex].clone();
        let verdict = match encode(&a.cond) {
            Some(goal) if domain.leq(&value, &goal) => Verdict::Safe,
            _ => Verdict::Unknown,
        };
        rows.push(CheckRow {
            procedure: interp.program.procedures[a.proc_index].name.clone(),
            vertex: a.vertex,
            value,
            verdict,
        });
    }
    rows
}
