//! Interpreting path expressions in a domain, per-vertex analysis, and the
//! join-over-paths oracles the cross-checking suites compare against.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::{Domain, EdgeSemantics};
use crate::lang::{Action, Edge, EdgeId, Program, VertexId};
use crate::pathexpr::solve_single_source;
use crate::regex::PathExpr;

/// One summary value per procedure, indexed like `program.procedures`.
pub type SummaryAssignment<V> = Vec<V>;

#[derive(Error, Debug)]
pub enum EvalError {
    #[error("edge {0} is not part of the program")]
    UnknownEdge(EdgeId),
    #[error("edge {0} calls {1}, but no summary assignment was supplied")]
    MissingSummary(EdgeId, String),
    #[error("oracle budget of {0} states exceeded")]
    BudgetExceeded(usize),
}

/// A domain together with the program whose edges it interprets and,
/// optionally, the summaries that give call edges a meaning.
pub struct Interpretation<'a, D: Domain + EdgeSemantics> {
    pub domain: &'a D,
    pub program: &'a Program,
    pub summary: Option<SummaryAssignment<D::Value>>,
}

impl<'a, D: Domain + EdgeSemantics> Interpretation<'a, D> {
    pub fn new(domain: &'a D, program: &'a Program) -> Self {
        Interpretation {
            domain,
            program,
            summary: None,
        }
    }

    pub fn with_summary(mut self, s: SummaryAssignment<D::Value>) -> Self {
        assert_eq!(s.len(), self.program.procedures.len());
        self.summary = Some(s);
        self
    }

    /// The value of one edge: the action's transition semantics, or the
    /// callee's summary for a call edge.
    pub fn sem_edge(&self, e: &Edge) -> Result<D::Value, EvalError> {
        match &e.action {
            Action::Call(j) => match &self.summary {
                Some(s) => Ok(s[*j].clone()),
                None => Err(EvalError::MissingSummary(
                    e.id,
                    self.program.procedures[*j].name.clone(),
                )),
            },
            other => Ok(self.domain.sem_action(other)),
        }
    }

    /// Interpret a path expression by structural recursion, with sharing:
    /// each distinct subterm is evaluated once.
    pub fn interpret(&self, p: &Rc<PathExpr>) -> Result<D::Value, EvalError> {
        interpret_with(self.domain, p, &mut |id| {
            let e = self.program.edge(id).ok_or(EvalError::UnknownEdge(id))?;
            self.sem_edge(e)
        })
    }
}

/// Structural interpretation with a caller-supplied edge valuation,
/// memoized on shared subterms.
pub fn interpret_with<D: Domain>(
    domain: &D,
    p: &Rc<PathExpr>,
    sem: &mut impl FnMut(EdgeId) -> Result<D::Value, EvalError>,
) -> Result<D::Value, EvalError> {
    fn go<D: Domain>(
        domain: &D,
        p: &Rc<PathExpr>,
        sem: &mut impl FnMut(EdgeId) -> Result<D::Value, EvalError>,
        memo: &mut HashMap<*const PathExpr, D::Value>,
    ) -> Result<D::Value, EvalError> {
        if let Some(v) = memo.get(&Rc::as_ptr(p)) {
            return Ok(v.clone());
        }
        let v = match &**p {
            PathExpr::Empty => domain.zero(),
            PathExpr::Eps => domain.one(),
            PathExpr::Edge(id) => sem(*id)?,
            PathExpr::Plus(a, b) => {
                let (x, y) = (go(domain, a, sem, memo)?, go(domain, b, sem, memo)?);
                domain.plus(&x, &y)
            }
            PathExpr::Cat(a, b) => {
                let (x, y) = (go(domain, a, sem, memo)?, go(domain, b, sem, memo)?);
                domain.times(&x, &y)
            }
            PathExpr::Star(a) => {
                let x = go(domain, a, sem, memo)?;
                domain.star(&x)
            }
        };
        memo.insert(Rc::as_ptr(p), v.clone());
        Ok(v)
    }
    go(domain, p, sem, &mut HashMap::new())
}

/// Per-vertex analysis of one procedure: interpret the path expression from
/// the procedure's entry to each vertex.
pub fn intraproc_analyze<D: Domain + EdgeSemantics>(
    interp: &Interpretation<D>,
    proc_index: usize,
) -> Result<BTreeMap<VertexId, D::Value>, EvalError> {
    let g = &interp.program.procedures[proc_index].graph;
    solve_single_source(g, g.entry)
        .iter()
        .map(|(v, p)| Ok((*v, interp.interpret(p)?)))
        .collect()
}

/// Join over all paths, computed without path expressions: a worklist over
/// (vertex, accumulated value) pairs, feasible exactly when the domain has
/// finitely many values. The per-vertex result is the ⊕ of every value
/// reaching that vertex.
pub fn join_over_paths_oracle<D: Domain + EdgeSemantics>(
    interp: &Interpretation<D>,
    proc_index: usize,
    budget: usize,
) -> Result<BTreeMap<VertexId, D::Value>, EvalError> {
    let domain = interp.domain;
    let g = &interp.program.procedures[proc_index].graph;
    let mut seen: BTreeMap<VertexId, Vec<D::Value>> =
        g.vertices.iter().map(|v| (*v, Vec::new())).collect();
    let mut work: VecDeque<(VertexId, D::Value)> = VecDeque::new();
    seen.get_mut(&g.entry).unwrap().push(domain.one());
    work.push_back((g.entry, domain.one()));
    let mut states = 1usize;
    while let Some((v, a)) = work.pop_front() {
        for e in g.out_edges(v) {
            let b = domain.times(&a, &interp.sem_edge(e)?);
            let at = seen.get_mut(&e.tgt).unwrap();
            if at.iter().any(|old| domain.equal(old, &b)) {
                continue;
            }
            at.push(b.clone());
            states += 1;
            if states > budget {
                return Err(EvalError::BudgetExceeded(budget));
            }
            work.push_back((e.tgt, b));
        }
    }
    Ok(seen
        .into_iter()
        .map(|(v, vals)| {
            let joined = vals
                .into_iter()
                .fold(domain.zero(), |acc, x| domain.plus(&acc, &x));
            (v, joined)
        })
        .collect())
}

/// Outcome of sampling paths against an analyzed value.
#[derive(Debug)]
pub struct CorrectnessReport {
    pub checked: usize,
    /// Words whose interpretation is not below the analyzed value.
    pub violations: Vec<Vec<EdgeId>>,
}

/// Sample up to `n_paths` paths from the procedure's entry to `v` (length ≤
/// `max_len`) by seeded random walks and check that each word's
/// interpretation is ≤ the analyzed value at `v`.
pub fn check_correctness_sampled<D: Domain + EdgeSemantics>(
    interp: &Interpretation<D>,
    v: VertexId,
    n_paths: usize,
    max_len: usize,
    seed: u64,
) -> Result<CorrectnessReport, EvalError> {
    let domain = interp.domain;
    let proc_index = interp
        .program
        .proc_of_vertex(v)
        .expect("vertex must belong to a procedure");
    let g = &interp.program.procedures[proc_index].graph;
    let analyzed = {
        let solved = solve_single_source(g, g.entry);
        interp.interpret(&solved[&v])?
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0usize;
    let mut violations = Vec::new();
    let mut walks = 0usize;
    while checked < n_paths && walks < n_paths.max(1) * 10 {
        walks += 1;
        let mut cur = g.entry;
        let mut word: Vec<EdgeId> = Vec::new();
        let mut val = domain.one();
        loop {
            if cur == v {
                checked += 1;
                if !domain.leq(&val, &analyzed) {
                    violations.push(word.clone());
                }
                if checked >= n_paths {
                    break;
                }
            }
            if word.len() >= max_len {
                break;
            }
            let outs: Vec<&Edge> = g.out_edges(cur).collect();
            if outs.is_empty() {
                break;
            }
            let e = outs[rng.gen_range(0..outs.len())];
            val = domain.times(&val, &interp.sem_edge(e)?);
            word.push(e.id);
            cur = e.tgt;
        }
    }
    Ok(CorrectnessReport {
        checked,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;
    use crate::regex;
    use crate::reldom::RelDomain;

    const LOOPY: &str = "
proc main() {
  x := 0;
  while (x < 2) {
    x := x + 1;
  }
}
";

    #[test]
    fn interpret_eps_and_star_closure() {
        let p = parse_program("proc main() { x := x + 1; }").unwrap();
        let d = RelDomain::new(4, ["x"]);
        let interp = Interpretation::new(&d, &p);
        assert_eq!(interp.interpret(&regex::eps()).unwrap(), d.one());
        // Star of x := x+1 over Z_4 relates every state to every state.
        let inc = p.procedures[0].graph.edges[0].id;
        let star = interp
            .interpret(&regex::star(regex::edge(inc)))
            .unwrap();
        assert_eq!(star, d.top());
    }

    #[test]
    fn analyze_equals_join_oracle_on_loopy_program() {
        let p = parse_program(LOOPY).unwrap();
        let d = RelDomain::new(3, ["x"]);
        let interp = Interpretation::new(&d, &p);
        let analyzed = intraproc_analyze(&interp, 0).unwrap();
        let oracle = join_over_paths_oracle(&interp, 0, 100_000).unwrap();
        assert_eq!(analyzed.len(), oracle.len());
        for (v, a) in &analyzed {
            assert_eq!(a, &oracle[v], "mismatch at {v}");
        }
    }

    #[test]
    fn oracle_on_loop_free_chain_is_composition() {
        let p = parse_program("proc main() { x := 1; x := x + 1; }").unwrap();
        let d = RelDomain::new(5, ["x"]);
        let interp = Interpretation::new(&d, &p);
        let g = &p.procedures[0].graph;
        let oracle = join_over_paths_oracle(&interp, 0, 1000).unwrap();
        let e1 = interp.sem_edge(&g.edges[0]).unwrap();
        let e2 = interp.sem_edge(&g.edges[1]).unwrap();
        assert_eq!(oracle[&g.exit], d.times(&e1, &e2));
        assert_eq!(oracle[&g.entry], d.one());
    }

    #[test]
    fn unreachable_vertex_is_zero() {
        // assume(0 >= 1) never fires, so the exit is unreachable.
        let p = parse_program("proc main() { assume(0 > 0); x := 1; }").unwrap();
        let d = RelDomain::new(2, ["x"]);
        let interp = Interpretation::new(&d, &p);
        let g = &p.procedures[0].graph;
        let analyzed = intraproc_analyze(&interp, 0).unwrap();
        let oracle = join_over_paths_oracle(&interp, 0, 1000).unwrap();
        assert_eq!(analyzed[&g.exit], d.zero());
        assert_eq!(oracle[&g.exit], d.zero());
    }

    #[test]
    fn sampled_correctness_holds_on_loop() {
        let p = parse_program(LOOPY).unwrap();
        let d = RelDomain::new(3, ["x"]);
        let interp = Interpretation::new(&d, &p);
        let g = &p.procedures[0].graph;
        for v in &g.vertices {
            let report = check_correctness_sampled(&interp, *v, 25, 20, 7).unwrap();
            assert!(
                report.violations.is_empty(),
                "violations at {v}: {:?}",
                report.violations
            );
        }
        // The entry's empty path is always sampled first: 1 ≤ value(entry).
        let report = check_correctness_sampled(&interp, g.entry, 5, 20, 7).unwrap();
        assert!(report.checked >= 1 && report.violations.is_empty());
    }

    #[test]
    fn call_edge_without_summary_errors() {
        let p = parse_program("proc helper() { x := 1; } proc main() { call helper(); }")
            .unwrap();
        let d = RelDomain::new(2, ["x"]);
        let interp = Interpretation::new(&d, &p);
        let err = intraproc_analyze(&interp, 0).unwrap_err();
        assert!(matches!(err, EvalError::MissingSummary(_, ref name) if name == "helper"));
    }

    #[test]
    fn other_procedures_locals_are_invisible_to_edges() {
        // Sampled interpretation invariant: for an edge of main and a local
        // x of helper, ∃x.⟦e⟧ = ⟦e⟧.
        let p = parse_program(
            "proc helper() [local h] { h := g; } proc main() { g := g + 1; }",
        )
        .unwrap();
        let d = RelDomain::new(3, ["g", "h"]);
        let interp = Interpretation::new(&d, &p);
        for e in &p.procedures[0].graph.edges {
            let v = interp.sem_edge(e).unwrap();
            assert_eq!(d.exists("h", &v), v);
        }
    }
}
