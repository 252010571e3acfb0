//! Entailment between cubes: sound, terminating, incomplete on nonlinear
//! goals.
//!
//! Equality goals are reduced modulo the cube's equalities; when a quadratic
//! monomial blocks the reduction, affine solutions for its factors are
//! substituted in (each step replaces a symbol by strictly smaller ones, so
//! the loop terminates). Inequality goals are checked by refuting the
//! negated goal with Fourier–Motzkin over linearized monomial dimensions.

use num::{Signed, Zero};

use super::cube::{Cube, FM_BUDGET};
use super::linexpr::{rat, LinExpr, Monomial};

/// Reduce `target` modulo the cube's equalities, then repeatedly substitute
/// affine solutions of linear monomials into the remaining quadratic
/// monomials and re-reduce.
pub fn normalize_target(cube: &Cube, target: &LinExpr) -> LinExpr {
    let mut cur = cube.rref().reduce(target);
    loop {
        let mut step = None;
        'outer: for m in cur.terms.keys().rev() {
            if m.degree() < 2 {
                continue;
            }
            for s in m.syms() {
                if let Some(sol) = cube.rref().solution_for(&Monomial::unit(s.clone())) {
                    if sol.degree() <= 1 {
                        step = Some((s.clone(), sol));
                        break 'outer;
                    }
                }
            }
        }
        match step {
            Some((s, sol)) => {
                // `sol` is affine, so substitution cannot overflow degree 2.
                cur = cur.substitute(&s, &sol).expect("affine substitution");
                cur = cube.rref().reduce(&cur);
            }
            None => return cur,
        }
    }
}

/// One constraint in a refutation system: `expr ≥ 0`, or `expr > 0` when
/// `strict`.
type Row = (LinExpr, bool);

/// Decide whether the conjunction of the rows is infeasible over the
/// rationals, by eliminating monomial dimensions (cheapest first). Distinct
/// monomials are treated as independent dimensions, which is sound for
/// refutation. Returns `false` when inconclusive (including budget aborts).
pub fn fm_refute(mut rows: Vec<Row>) -> bool {
    loop {
        // Constant rows either contradict or are discharged.
        let mut kept = Vec::with_capacity(rows.len());
        for (e, strict) in rows {
            if e.is_constant() {
                let c = &e.constant;
                if (strict && !c.is_positive()) || (!strict && c.is_negative()) {
                    return true;
                }
            } else {
                kept.push((e, strict));
            }
        }
        rows = kept;
        if rows.is_empty() {
            return false;
        }

        // Pick the dimension with the fewest pos×neg combinations.
        let mut dims: Vec<Monomial> = Vec::new();
        for (e, _) in &rows {
            for m in e.terms.keys() {
                if !dims.contains(m) {
                    dims.push(m.clone());
                }
            }
        }
        let cost = |d: &Monomial| -> usize {
            let mut pos = 0;
            let mut neg = 0;
            for (e, _) in &rows {
                let c = e.coeff(d);
                if c.is_positive() {
                    pos += 1;
                } else if c.is_negative() {
                    neg += 1;
                }
            }
            pos * neg
        };
        dims.sort();
        let dim = dims.iter().min_by_key(|d| cost(d)).unwrap().clone();

        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for (e, strict) in rows {
            let c = e.coeff(&dim);
            if c.is_positive() {
                pos.push((e, strict));
            } else if c.is_negative() {
                neg.push((e, strict));
            } else {
                rest.push((e, strict));
            }
        }
        if pos.len() * neg.len() > FM_BUDGET {
            // Too expensive: drop this dimension's constraints and carry on
            // with the rest; the refutation may fail, which is sound.
            rows = rest;
            continue;
        }
        for (p, sp) in &pos {
            let cp = p.coeff(&dim);
            for (n, sn) in &neg {
                let cn = n.coeff(&dim);
                let combined = p.scale(&cn.abs()).add(&n.scale(&cp));
                debug_assert!(combined.coeff(&dim).is_zero());
                rest.push((combined, *sp || *sn));
            }
        }
        rows = rest;
    }
}

/// Does the cube entail `expr = 0`?
pub fn cube_entails_eq(cube: &Cube, expr: &LinExpr) -> bool {
    normalize_target(cube, expr).is_zero()
}

/// Does the cube entail `expr ≥ 0`?
pub fn cube_entails_ge(cube: &Cube, expr: &LinExpr) -> bool {
    let nf = normalize_target(cube, expr);
    if nf.is_constant() {
        return !nf.constant.is_negative();
    }
    // Refute cube ∧ -nf > 0.
    let mut rows: Vec<Row> = Vec::new();
    for r in cube.eq_rows() {
        rows.push((r.clone(), false));
        rows.push((r.scale(&rat(-1)), false));
    }
    for g in cube.ges() {
        rows.push((g.clone(), false));
    }
    rows.push((nf.scale(&rat(-1)), true));
    fm_refute(rows)
}

/// Does `c` entail every constraint of `d`?
pub fn cube_entails(c: &Cube, d: &Cube) -> bool {
    d.eq_rows().all(|r| cube_entails_eq(c, r))
        && d.ges().all(|g| cube_entails_ge(c, g))
}
