//! Seeded random generators for the property suites and the `axioms`
//! subcommand: bare digraphs with reference word enumeration, well-formed
//! random programs (produced as source text and run through the parser,
//! so every sample satisfies the same invariants as user input), input
//! environments, and random domain values.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::Domain;
use crate::lang::{
    parse_program, validate, Action, Edge, EdgeId, Env, Exp, FlowGraph, Program, VertexId,
};
use crate::lra::{LraDomain, TransFormula};
use crate::reldom::{RelDomain, RelValue};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A bare directed multigraph packaged as a flow graph (entry = first
/// vertex; the exit field is set but carries no meaning here). Self-loops
/// and parallel edges are allowed; edge actions are inert skips.
pub fn random_digraph(seed: u64, max_vertices: usize, max_edges: usize) -> FlowGraph {
    let mut r = rng(seed);
    let n = r.gen_range(2..=max_vertices.max(2));
    let m = r.gen_range(1..=max_edges.max(1));
    let vertices: Vec<VertexId> = (0..n as u32).map(VertexId).collect();
    let edges = (0..m as u32)
        .map(|k| Edge {
            id: EdgeId(k),
            src: VertexId(r.gen_range(0..n as u32)),
            tgt: VertexId(r.gen_range(0..n as u32)),
            action: Action::Assume(Exp::Int(0)),
        })
        .collect();
    FlowGraph {
        vertices,
        entry: VertexId(0),
        exit: VertexId(n as u32 - 1),
        edges,
    }
}

/// Reference path enumeration: every edge-id word of length ≤ `max_len`
/// spelled by a walk from `src`, grouped by endpoint. Breadth-first, so it
/// is exact for the bounded language and independent of the path-expression
/// machinery.
pub fn bfs_words(
    g: &FlowGraph,
    src: VertexId,
    max_len: usize,
) -> BTreeMap<VertexId, BTreeSet<Vec<EdgeId>>> {
    let mut words: BTreeMap<VertexId, BTreeSet<Vec<EdgeId>>> =
        g.vertices.iter().map(|v| (*v, BTreeSet::new())).collect();
    let mut queue = VecDeque::new();
    queue.push_back((src, Vec::new()));
    while let Some((v, w)) = queue.pop_front() {
        if !words.get_mut(&v).expect("vertex in graph").insert(w.clone()) {
            continue;
        }
        if w.len() == max_len {
            continue;
        }
        for e in g.out_edges(v) {
            let mut w2 = w.clone();
            w2.push(e.id);
            queue.push_back((e.tgt, w2));
        }
    }
    words
}

/// Shape controls for [`random_program`].
#[derive(Clone, Debug)]
pub struct ProgramShape {
    /// Upper bound on vertices per procedure (regenerates smaller on miss).
    pub max_vertices: usize,
    /// Number of procedures (1 = intraprocedural; main is always first).
    pub procs: usize,
    /// Permit `call` statements (including recursive ones).
    pub allow_calls: bool,
    /// Permit division in right-hand sides.
    pub allow_div: bool,
    /// Permit `havoc`.
    pub allow_havoc: bool,
    /// Global variable names; procedure k > 0 additionally owns local
    /// `locals[k-1]` when provided.
    pub globals: Vec<&'static str>,
    pub locals: Vec<&'static str>,
}

impl ProgramShape {
    pub fn intraproc() -> ProgramShape {
        ProgramShape {
            max_vertices: 8,
            procs: 1,
            allow_calls: false,
            allow_div: false,
            allow_havoc: true,
            globals: vec!["a", "b", "c"],
            locals: vec![],
        }
    }

    pub fn interproc() -> ProgramShape {
        ProgramShape {
            max_vertices: 8,
            procs: 3,
            allow_calls: true,
            allow_div: false,
            allow_havoc: true,
            globals: vec!["a", "b"],
            locals: vec!["c"],
        }
    }
}

struct TextGen<'a> {
    r: ChaCha8Rng,
    shape: &'a ProgramShape,
    size: usize,
}

impl<'a> TextGen<'a> {
    fn exp(&mut self, vars: &[&str]) -> String {
        let var = |r: &mut ChaCha8Rng| vars[r.gen_range(0..vars.len())].to_string();
        match self.r.gen_range(0..10) {
            0..=1 => format!("{}", self.r.gen_range(-2..=4)),
            2..=4 => var(&mut self.r),
            5 => format!("{} + {}", var(&mut self.r), self.r.gen_range(1..=3)),
            6 => format!("{} - {}", var(&mut self.r), self.r.gen_range(1..=3)),
            7 => format!("{} + {}", var(&mut self.r), var(&mut self.r)),
            8 if self.shape.allow_div => {
                format!("{} / {}", var(&mut self.r), self.r.gen_range(1..=3))
            }
            _ => format!("{} - {}", self.r.gen_range(0..=3), var(&mut self.r)),
        }
    }

    fn cond(&mut self, vars: &[&str]) -> String {
        let x = vars[self.r.gen_range(0..vars.len())];
        let op = ["<", "<=", ">", ">=", "==", "!="][self.r.gen_range(0..6)];
        let rhs = if self.r.gen_bool(0.7) {
            format!("{}", self.r.gen_range(-1..=3))
        } else {
            vars[self.r.gen_range(0..vars.len())].to_string()
        };
        format!("{x} {op} {rhs}")
    }

    fn stmt(&mut self, vars: &[&str], depth: usize, proc_names: &[String], out: &mut String, indent: usize) {
        let pad = "  ".repeat(indent);
        let choice = self.r.gen_range(0..12);
        match choice {
            0..=4 => {
                let x = vars[self.r.gen_range(0..vars.len())];
                let e = self.exp(vars);
                out.push_str(&format!("{pad}{x} := {e};\n"));
            }
            5 if self.shape.allow_havoc => {
                let x = vars[self.r.gen_range(0..vars.len())];
                out.push_str(&format!("{pad}havoc {x};\n"));
            }
            6..=7 if depth > 0 && self.size > 1 => {
                let c = self.cond(vars);
                out.push_str(&format!("{pad}if ({c}) {{\n"));
                self.block(vars, depth - 1, proc_names, out, indent + 1);
                if self.r.gen_bool(0.5) {
                    out.push_str(&format!("{pad}}} else {{\n"));
                    self.block(vars, depth - 1, proc_names, out, indent + 1);
                }
                out.push_str(&format!("{pad}}}\n"));
            }
            8..=9 if depth > 0 && self.size > 1 => {
                let c = self.cond(vars);
                out.push_str(&format!("{pad}while ({c}) {{\n"));
                self.block(vars, depth - 1, proc_names, out, indent + 1);
                out.push_str(&format!("{pad}}}\n"));
            }
            10..=11 if self.shape.allow_calls && proc_names.len() > 1 => {
                let j = self.r.gen_range(1..proc_names.len());
                out.push_str(&format!("{pad}call {}();\n", proc_names[j]));
            }
            _ => {
                let x = vars[self.r.gen_range(0..vars.len())];
                let e = self.exp(vars);
                out.push_str(&format!("{pad}{x} := {e};\n"));
            }
        }
    }

    fn block(&mut self, vars: &[&str], depth: usize, proc_names: &[String], out: &mut String, indent: usize) {
        let len = self.r.gen_range(1..=self.size.max(1));
        for _ in 0..len {
            self.stmt(vars, depth, proc_names, out, indent);
        }
    }
}

/// A random well-formed program: generated as source text, parsed, and
/// checked against the structural validator. The vertex bound is enforced
/// by retrying with shrinking statement budgets, so the function always
/// returns.
pub fn random_program(seed: u64, shape: &ProgramShape) -> Program {
    let proc_names: Vec<String> = (0..shape.procs)
        .map(|k| if k == 0 { "main".to_string() } else { format!("f{k}") })
        .collect();
    for attempt in 0..64 {
        let size = match attempt {
            0..=15 => 3,
            16..=39 => 2,
            _ => 1,
        };
        let depth = if attempt < 40 { 2 } else { 1 };
        let mut g = TextGen {
            r: rng(seed ^ (0x9e37_79b9_u64.wrapping_mul(attempt as u64 + 1))),
            shape,
            size,
        };
        let mut src = String::new();
        for (k, name) in proc_names.iter().enumerate() {
            let local = if k > 0 { shape.locals.get(k - 1) } else { None };
            match local {
                Some(l) => src.push_str(&format!("proc {name}() [local {l}] {{\n")),
                None => src.push_str(&format!("proc {name}() {{\n")),
            }
            let mut vars: Vec<&str> = shape.globals.clone();
            if let Some(l) = local {
                vars.push(l);
            }
            // A leading assignment keeps the entry vertex out of any loop
            // head (the validator requires the entry to have no incoming
            // edges).
            let x = vars[g.r.gen_range(0..vars.len())];
            let e = g.exp(&vars);
            src.push_str(&format!("  {x} := {e};\n"));
            g.block(&vars, depth, &proc_names, &mut src, 1);
            src.push_str("}\n");
        }
        let program = parse_program(&src).expect("generated text is grammatical");
        let issues = validate(&program);
        assert!(issues.is_empty(), "generated program invalid: {issues:?}\n{src}");
        if program
            .procedures
            .iter()
            .all(|p| p.graph.vertices.len() <= shape.max_vertices)
        {
            return program;
        }
    }
    unreachable!("single-statement programs fit any sane vertex bound")
}

/// A random initial environment over `vars` with values in `lo..=hi`.
pub fn random_env(seed: u64, vars: &[String], lo: i64, hi: i64) -> Env {
    let mut r = rng(seed);
    vars.iter()
        .map(|x| (x.clone(), r.gen_range(lo..=hi)))
        .collect()
}

/// Random relation values: 0, 1, ⊤, then relations of varying density.
pub fn random_rel_values(d: &RelDomain, count: usize, seed: u64) -> Vec<RelValue> {
    let mut out = vec![d.zero(), d.one(), d.top()];
    let states = d.states();
    let mut r = rng(seed);
    while out.len() < count {
        let density = r.gen_range(0.05..0.5);
        let mut pairs = Vec::new();
        for a in &states {
            for b in &states {
                if r.gen_bool(density) {
                    pairs.push((a.clone(), b.clone()));
                }
            }
        }
        out.push(d.from_pairs(pairs));
    }
    out.truncate(count);
    out
}

/// Random transition formulas built the way the analyzer builds them: edge
/// atoms combined by ⊕, ⊙ and an occasional ⋆ application.
pub fn random_lra_values(d: &LraDomain, count: usize, seed: u64) -> Vec<TransFormula> {
    use crate::algebra::EdgeSemantics;
    let mut r = rng(seed);
    let vars: Vec<String> = d.vars().to_vec();
    let atom = |r: &mut ChaCha8Rng| -> TransFormula {
        let x = vars[r.gen_range(0..vars.len())].clone();
        let y = vars[r.gen_range(0..vars.len())].clone();
        let action = match r.gen_range(0..6) {
            0 => Action::Assign(x, Exp::Int(r.gen_range(-3..=3))),
            1 => Action::Assign(x, Exp::var(&y).add(Exp::Int(r.gen_range(1..=3)))),
            2 => Action::Assign(x, Exp::var(&y).sub(Exp::Int(r.gen_range(1..=3)))),
            3 => Action::Assume(Exp::var(&x).sub(Exp::var(&y))),
            4 => Action::Assume(Exp::var(&x).sub(Exp::Int(r.gen_range(-2..=2)))),
            _ => Action::Havoc(x),
        };
        d.sem_action(&action)
    };
    let mut out: Vec<TransFormula> = vec![d.zero(), d.one(), TransFormula::truth()];
    while out.len() < count {
        let v = match r.gen_range(0..10) {
            0..=3 => atom(&mut r),
            4..=5 => {
                let a = out[r.gen_range(0..out.len())].clone();
                let b = atom(&mut r);
                d.times(&a, &b)
            }
            6..=7 => {
                let a = out[r.gen_range(0..out.len())].clone();
                let b = out[r.gen_range(0..out.len())].clone();
                d.plus(&a, &b)
            }
            _ => {
                let a = atom(&mut r);
                d.star(&a)
            }
        };
        out.push(v);
    }
    out.truncate(count);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathexpr::solve_single_source;
    use crate::regex::enumerate_words;

    #[test]
    fn digraph_generation_is_deterministic() {
        let a = random_digraph(7, 5, 8);
        let b = random_digraph(7, 5, 8);
        assert_eq!(a.vertices, b.vertices);
        assert_eq!(
            a.edges.iter().map(|e| (e.src, e.tgt)).collect::<Vec<_>>(),
            b.edges.iter().map(|e| (e.src, e.tgt)).collect::<Vec<_>>()
        );
    }

    #[test]
    fn bfs_words_matches_path_expressions_on_a_fixed_graph() {
        let g = random_digraph(3, 4, 6);
        let solved = solve_single_source(&g, g.entry);
        let reference = bfs_words(&g, g.entry, 5);
        for v in &g.vertices {
            assert_eq!(
                enumerate_words(&solved[v], 5),
                reference[v],
                "word mismatch at {v}"
            );
        }
    }

    #[test]
    fn random_programs_validate_and_fit_bounds() {
        let shape = ProgramShape::intraproc();
        for seed in 0..20 {
            let p = random_program(seed, &shape);
            assert_eq!(p.procedures.len(), 1);
            assert!(p.procedures[0].graph.vertices.len() <= shape.max_vertices);
            assert!(validate(&p).is_empty());
        }
    }

    #[test]
    fn interproc_shape_reaches_recursion() {
        let shape = ProgramShape::interproc();
        let mut saw_call = false;
        for seed in 0..30 {
            let p = random_program(seed, &shape);
            assert!(validate(&p).is_empty());
            saw_call |= p
                .procedures
                .iter()
                .flat_map(|q| q.graph.edges.iter())
                .any(|e| matches!(e.action, Action::Call(_)));
        }
        assert!(saw_call, "no sampled program ever called a procedure");
    }

    #[test]
    fn rel_value_samples_cover_the_extremes() {
        let d = RelDomain::new(3, ["a", "b"]);
        let vals = random_rel_values(&d, 12, 5);
        assert_eq!(vals.len(), 12);
        assert!(vals.contains(&d.zero()));
        assert!(vals.contains(&d.one()));
        assert!(vals.contains(&d.top()));
        let again = random_rel_values(&d, 12, 5);
        assert_eq!(vals, again);
    }

    #[test]
    fn lra_value_samples_are_deterministic_and_small() {
        let d = LraDomain::new(["a".to_string(), "b".to_string()]);
        let vals = random_lra_values(&d, 30, 11);
        assert_eq!(vals.len(), 30);
        let again = random_lra_values(&d, 30, 11);
        for (u, v) in vals.iter().zip(&again) {
            assert!(d.equal(u, v));
        }
        assert!(vals.iter().all(|v| v.cube_count() <= 16));
    }
}
