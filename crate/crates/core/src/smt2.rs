//! SMT-LIB2 emission for entailment queries, as an offline cross-check of
//! the built-in (incomplete) decision procedure. Each query `lhs ⊨ rhs`
//! becomes a QF_NIA script asserting `lhs ∧ ¬rhs`: when the engine answered
//! "entailed" the script must be unsat; when it answered "not entailed" the
//! script records that the engine merely failed to prove it (a sat model,
//! if one exists, witnesses a genuine gap).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::lra::{Cube, EntailQuery, LinExpr, Sym, TransFormula};

fn sym_name(s: &Sym) -> String {
    match s {
        Sym::K => "k".to_string(),
        Sym::In(x) => format!("i_{x}"),
        Sym::Out(x) => format!("o_{x}"),
        Sym::Mid(x) => format!("m_{x}"),
    }
}

fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    if a.is_zero() || b.is_zero() {
        BigInt::one()
    } else {
        (a * b / num::integer::gcd(a.clone(), b.clone())).abs()
    }
}

/// Scale a rational row to integer coefficients (multiply by the LCM of the
/// denominators) and render it as an SMT integer term.
fn row_term(e: &LinExpr) -> String {
    let mut scale = e.constant.denom().clone();
    for c in e.terms.values() {
        scale = lcm(&scale, c.denom());
    }
    let scale = BigRational::from_integer(scale);
    let mut parts: Vec<String> = Vec::new();
    let constant = (&e.constant * &scale).to_integer();
    if !constant.is_zero() {
        parts.push(int_atom(&constant));
    }
    for (m, c) in &e.terms {
        let c = (c * &scale).to_integer();
        let mono: Vec<String> = m.syms().iter().map(sym_name).collect();
        let mono = if mono.len() == 1 {
            mono.into_iter().next().unwrap()
        } else {
            format!("(* {})", mono.join(" "))
        };
        parts.push(if c.is_one() {
            mono
        } else {
            format!("(* {} {})", int_atom(&c), mono)
        });
    }
    match parts.len() {
        0 => "0".to_string(),
        1 => parts.pop().unwrap(),
        _ => format!("(+ {})", parts.join(" ")),
    }
}

fn int_atom(n: &BigInt) -> String {
    if n.is_negative() {
        format!("(- {})", n.magnitude())
    } else {
        n.to_string()
    }
}

fn cube_term(c: &Cube) -> String {
    let mut conj: Vec<String> = Vec::new();
    for e in c.eq_rows() {
        conj.push(format!("(= {} 0)", row_term(e)));
    }
    for g in c.ges() {
        conj.push(format!("(>= {} 0)", row_term(g)));
    }
    match conj.len() {
        0 => "true".to_string(),
        1 => conj.pop().unwrap(),
        _ => format!("(and {})", conj.join(" ")),
    }
}

fn formula_term(f: &TransFormula) -> String {
    let mut disj: Vec<String> = f.cubes().map(cube_term).collect();
    match disj.len() {
        0 => "false".to_string(),
        1 => disj.pop().unwrap(),
        _ => format!("(or {})", disj.join(" ")),
    }
}

fn formula_syms(f: &TransFormula, into: &mut std::collections::BTreeSet<Sym>) {
    for c in f.cubes() {
        for e in c.eq_rows().chain(c.ges()) {
            into.extend(e.all_syms());
        }
    }
}

/// Render one recorded entailment query as a complete SMT-LIB2 script.
pub fn query_to_smt2(q: &EntailQuery, index: usize) -> String {
    let mut syms = std::collections::BTreeSet::new();
    formula_syms(&q.lhs, &mut syms);
    formula_syms(&q.rhs, &mut syms);
    let mut out = String::new();
    let _ = writeln!(out, "; entailment query {index}");
    let _ = writeln!(out, "; lhs: {}", q.lhs);
    let _ = writeln!(out, "; rhs: {}", q.rhs);
    if q.verdict {
        let _ = writeln!(out, "; engine verdict: entailed — expect unsat");
    } else {
        let _ = writeln!(
            out,
            "; engine verdict: not proven — sat witnesses a genuine gap, \
             unsat means the engine was merely incomplete here"
        );
    }
    let _ = writeln!(out, "(set-logic QF_NIA)");
    for s in &syms {
        let _ = writeln!(out, "(declare-const {} Int)", sym_name(s));
    }
    let _ = writeln!(out, "(assert {})", formula_term(&q.lhs));
    let _ = writeln!(out, "(assert (not {}))", formula_term(&q.rhs));
    let _ = writeln!(out, "(check-sat)");
    out
}

/// Write every query to `dir` as `query_NNNN.smt2`, returning the paths.
pub fn write_queries(dir: &Path, queries: &[EntailQuery]) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(queries.len());
    for (i, q) in queries.iter().enumerate() {
        let path = dir.join(format!("query_{i:04}.smt2"));
        std::fs::write(&path, query_to_smt2(q, i))?;
        paths.push(path);
    }
    Ok(paths)
}
