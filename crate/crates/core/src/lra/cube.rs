//! Conjunctions of linear constraints in a canonical form.
//!
//! A cube holds an equality part kept in reduced row-echelon form and a set
//! of inequalities `e ≥ 0`, each reduced modulo the equalities and scaled so
//! its leading coefficient has magnitude one. Opposing inequality pairs are
//! promoted to equalities. A cube detected inconsistent is represented by
//! `None` wherever cubes are built; the enclosing disjunction simply omits
//! it.

use std::collections::BTreeSet;
use std::fmt;

use num::{BigRational, One, Signed, Zero};

use super::linexpr::{rat, LinExpr, Monomial, Rref, Sym};

/// Per-variable ceiling on Fourier–Motzkin combinations; when the product of
/// positive and negative occurrence counts exceeds this, the variable's
/// constraints are dropped instead of combined.
pub const FM_BUDGET: usize = 512;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Cube {
    eqs: Rref,
    ges: BTreeSet<LinExpr>,
}

impl Cube {
    /// The empty conjunction: `true`.
    pub fn truth() -> Cube {
        Cube {
            eqs: Rref::new(),
            ges: BTreeSet::new(),
        }
    }

    /// Build a canonical cube; `None` when a contradiction is detected
    /// (contradictions only visible through nonlinear reasoning may survive).
    pub fn new(
        eqs: impl IntoIterator<Item = LinExpr>,
        ges: impl IntoIterator<Item = LinExpr>,
    ) -> Option<Cube> {
        let mut sys = Rref::new();
        for e in eqs {
            sys.insert(&e).ok()?;
        }
        let mut pending: Vec<LinExpr> = ges.into_iter().collect();
        let mut kept: BTreeSet<LinExpr> = BTreeSet::new();
        loop {
            let mut new_eqs = Vec::new();
            for g in pending.drain(..) {
                let nf = sys.reduce(&g);
                if nf.is_constant() {
                    if nf.constant.is_negative() {
                        return None;
                    }
                    continue;
                }
                let lead = nf.leading().unwrap().clone();
                let scaled = nf.scale(&(BigRational::one() / nf.coeff(&lead).abs()));
                let negated = scaled.scale(&rat(-1));
                if kept.contains(&negated) {
                    kept.remove(&negated);
                    new_eqs.push(scaled);
                } else {
                    kept.insert(scaled);
                }
            }
            if new_eqs.is_empty() {
                break;
            }
            for e in new_eqs {
                sys.insert(&e).ok()?;
            }
            // Equalities changed: re-reduce everything kept so far.
            pending = kept.iter().cloned().collect();
            kept.clear();
        }
        Some(Cube { eqs: sys, ges: kept })
    }

    pub fn is_truth(&self) -> bool {
        self.eqs.is_empty() && self.ges.is_empty()
    }

    pub fn eq_rows(&self) -> impl Iterator<Item = &LinExpr> {
        self.eqs.rows()
    }

    pub fn ges(&self) -> impl Iterator<Item = &LinExpr> {
        self.ges.iter()
    }

    pub fn rref(&self) -> &Rref {
        &self.eqs
    }

    pub fn constraint_count(&self) -> usize {
        self.eqs.len() + self.ges.len()
    }

    /// All constraints as `(is_equality, expr)` pairs.
    pub fn constraints(&self) -> Vec<(bool, LinExpr)> {
        let mut out: Vec<(bool, LinExpr)> =
            self.eqs.rows().map(|r| (true, r.clone())).collect();
        out.extend(self.ges.iter().map(|g| (false, g.clone())));
        out
    }

    pub fn conj(&self, other: &Cube) -> Option<Cube> {
        Cube::new(
            self.eq_rows().chain(other.eq_rows()).cloned(),
            self.ges().chain(other.ges()).cloned(),
        )
    }

    pub fn with_eq(&self, e: LinExpr) -> Option<Cube> {
        Cube::new(
            self.eq_rows().cloned().chain(std::iter::once(e)),
            self.ges().cloned(),
        )
    }

    pub fn with_ge(&self, g: LinExpr) -> Option<Cube> {
        Cube::new(
            self.eq_rows().cloned(),
            self.ges().cloned().chain(std::iter::once(g)),
        )
    }

    pub fn all_syms(&self) -> BTreeSet<Sym> {
        let mut s = self.eqs.all_syms();
        for g in &self.ges {
            s.extend(g.all_syms());
        }
        s
    }

    pub fn mentions(&self, s: &Sym) -> bool {
        self.eqs.rows().any(|r| r.mentions(s)) || self.ges.iter().any(|g| g.mentions(s))
    }

    /// Rename symbols (must be injective on the symbols present).
    pub fn rename(&self, f: &impl Fn(&Sym) -> Sym) -> Cube {
        Cube::new(
            self.eq_rows().map(|r| r.rename(f)),
            self.ges().map(|g| g.rename(f)),
        )
        .expect("injective renaming preserves consistency")
    }

    /// Syntactic entailment: every constraint of `other` is already present
    /// here after reduction. Sound and fast; used for subsumption pruning.
    pub fn entails_syntactic(&self, other: &Cube) -> bool {
        for row in other.eq_rows() {
            if !self.eqs.reduce(row).is_zero() {
                return false;
            }
        }
        for g in other.ges() {
            let nf = self.eqs.reduce(g);
            if nf.is_constant() {
                if nf.constant.is_negative() {
                    return false;
                }
                continue;
            }
            let lead = nf.leading().unwrap().clone();
            let scaled = nf.scale(&(BigRational::one() / nf.coeff(&lead).abs()));
            if !self.ges.contains(&scaled) {
                return false;
            }
        }
        true
    }

    /// Truth under a total symbol assignment (exact rational arithmetic).
    pub fn eval(&self, assign: &impl Fn(&Sym) -> BigRational) -> bool {
        self.eqs.rows().all(|r| r.eval(assign).is_zero())
            && self.ges.iter().all(|g| !g.eval(assign).is_negative())
    }

    /// Existentially project out every symbol in `targets`.
    ///
    /// Equality occurrences are eliminated by Gaussian substitution, linear
    /// inequality occurrences by Fourier–Motzkin (cheapest variable first,
    /// bounded by `budget` combinations per variable), and whatever still
    /// mentions a target afterwards is dropped — a sound weakening. Returns
    /// `None` when the projection exposes a contradiction.
    pub fn eliminate_syms(&self, targets: &BTreeSet<Sym>, budget: usize) -> Option<Cube> {
        let mut eqs: Vec<LinExpr> = self.eq_rows().cloned().collect();
        let mut ges: Vec<LinExpr> = self.ges().cloned().collect();

        let present = |eqs: &[LinExpr], ges: &[LinExpr]| -> Vec<Sym> {
            let mut out = BTreeSet::new();
            for e in eqs.iter().chain(ges.iter()) {
                for s in e.all_syms() {
                    if targets.contains(&s) {
                        out.insert(s);
                    }
                }
            }
            out.into_iter().collect()
        };

        loop {
            let remaining = present(&eqs, &ges);
            if remaining.is_empty() {
                break;
            }

            // Prefer an exact Gaussian step: a symbol with an equality in
            // which it occurs linearly and in no product.
            let mut solved = None;
            'search: for s in &remaining {
                let unit = Monomial::unit(s.clone());
                for (idx, row) in eqs.iter().enumerate() {
                    let c = row.coeff(&unit);
                    if c.is_zero() {
                        continue;
                    }
                    let in_product = row
                        .terms
                        .keys()
                        .any(|m| m.degree() == 2 && m.mentions(s));
                    if in_product {
                        continue;
                    }
                    let mut rest = row.clone();
                    rest.terms.remove(&unit);
                    let sol = rest.scale(&(-BigRational::one() / c));
                    solved = Some((s.clone(), idx, sol));
                    break 'search;
                }
            }

            if let Some((s, idx, sol)) = solved {
                eqs.remove(idx);
                let subst_all = |list: Vec<LinExpr>| -> Vec<LinExpr> {
                    list.into_iter()
                        // A failed substitution (degree overflow) drops the
                        // constraint: sound weakening.
                        .filter_map(|e| e.substitute(&s, &sol))
                        .collect()
                };
                eqs = subst_all(eqs);
                ges = subst_all(ges);
                continue;
            }

            // Fourier–Motzkin on the cheapest remaining symbol.
            let cost = |s: &Sym| -> (usize, usize) {
                let unit = Monomial::unit(s.clone());
                let mut pos = 0;
                let mut neg = 0;
                for g in &ges {
                    let c = g.coeff(&unit);
                    let clean = g
                        .terms
                        .keys()
                        .all(|m| !(m.degree() == 2 && m.mentions(s)));
                    if clean && c.is_positive() {
                        pos += 1;
                    } else if clean && c.is_negative() {
                        neg += 1;
                    }
                }
                (pos, neg)
            };
            let s = remaining
                .iter()
                .min_by_key(|s| {
                    let (p, n) = cost(s);
                    p * n
                })
                .unwrap()
                .clone();
            let unit = Monomial::unit(s.clone());
            let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
            for g in ges.drain(..) {
                let clean = g
                    .terms
                    .keys()
                    .all(|m| !(m.degree() == 2 && m.mentions(&s)));
                let c = g.coeff(&unit);
                if clean && c.is_positive() {
                    pos.push(g);
                } else if clean && c.is_negative() {
                    neg.push(g);
                } else if !g.mentions(&s) {
                    rest.push(g);
                }
                // Constraints mentioning s in a product are dropped.
            }
            if pos.len() * neg.len() <= budget {
                for p in &pos {
                    let cp = p.coeff(&unit);
                    for n in &neg {
                        let cn = n.coeff(&unit);
                        let combined = p.scale(&cn.abs()).add(&n.scale(&cp));
                        debug_assert!(combined.coeff(&unit).is_zero());
                        if combined.is_constant() {
                            if combined.constant.is_negative() {
                                return None;
                            }
                            continue;
                        }
                        rest.push(combined);
                    }
                }
            }
            // Over budget: pos/neg are simply dropped.
            ges = rest;
            eqs.retain(|e| !e.mentions(&s));
        }

        Cube::new(eqs, ges)
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_truth() {
            return write!(f, "true");
        }
        let mut parts = Vec::new();
        for row in self.eq_rows() {
            let lead = row.leading().unwrap();
            let mut rest = row.clone();
            rest.terms.remove(lead);
            parts.push(format!("{} = {}", lead, rest.scale(&rat(-1))));
        }
        for g in self.ges() {
            let mut lhs = LinExpr::zero();
            let mut rhs = LinExpr::zero();
            for (m, c) in &g.terms {
                if c.is_positive() {
                    lhs.add_term(m.clone(), c);
                } else {
                    rhs.add_term(m.clone(), &-c.clone());
                }
            }
            if g.constant.is_positive() {
                lhs.constant = g.constant.clone();
            } else {
                rhs.constant = -g.constant.clone();
            }
            parts.push(format!("{lhs} >= {rhs}"));
        }
        write!(f, "{}", parts.join(" /\\ "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(x: &str) -> LinExpr {
        LinExpr::sym(Sym::In(x.into()))
    }
    fn ov(x: &str) -> LinExpr {
        LinExpr::sym(Sym::Out(x.into()))
    }

    #[test]
    fn canonicalization_promotes_opposing_pairs() {
        // x ≥ 3 ∧ 3 ≥ x becomes the equality x = 3.
        let c = Cube::new(
            [],
            [
                iv("x").sub(&LinExpr::int(3)),
                LinExpr::int(3).sub(&iv("x")),
            ],
        )
        .unwrap();
        assert_eq!(c.ges().count(), 0);
        assert_eq!(c.eq_rows().count(), 1);
        let nf = c.rref().reduce(&iv("x"));
        assert_eq!(nf, LinExpr::int(3));
    }

    #[test]
    fn constant_contradictions_are_detected() {
        assert!(Cube::new([], [LinExpr::int(-1)]).is_none());
        // x = 1 ∧ x ≥ 2 reduces the inequality to -1 ≥ 0.
        assert!(Cube::new(
            [iv("x").sub(&LinExpr::int(1))],
            [iv("x").sub(&LinExpr::int(2))],
        )
        .is_none());
    }

    #[test]
    fn inequalities_are_reduced_modulo_equalities() {
        // x' = x ∧ x' ≥ 0: the inequality is stored over x.
        let c = Cube::new([ov("x").sub(&iv("x"))], [ov("x")]).unwrap();
        let g = c.ges().next().unwrap();
        assert!(!g.mentions(&Sym::Out("x".into())));
        assert!(g.mentions(&Sym::In("x".into())));
    }

    #[test]
    fn eliminate_by_gaussian_substitution() {
        // x'' = x + 1 ∧ x' = x'' + 1, eliminate x'': x' = x + 2.
        let mid = Sym::Mid("x".into());
        let c = Cube::new(
            [
                LinExpr::sym(mid.clone()).sub(&iv("x")).sub(&LinExpr::int(1)),
                ov("x").sub(&LinExpr::sym(mid.clone())).sub(&LinExpr::int(1)),
            ],
            [],
        )
        .unwrap();
        let out = c.eliminate_syms(&BTreeSet::from([mid.clone()]), FM_BUDGET).unwrap();
        assert!(!out.mentions(&mid));
        let nf = out.rref().reduce(&ov("x").sub(&iv("x")));
        assert_eq!(nf, LinExpr::int(2));
    }

    #[test]
    fn eliminate_by_fourier_motzkin() {
        // x'' ≥ x ∧ x' ≥ x'' + 1 (no equalities): eliminating x'' must keep
        // x' ≥ x + 1.
        let mid = Sym::Mid("x".into());
        let c = Cube::new(
            [],
            [
                LinExpr::sym(mid.clone()).sub(&iv("x")),
                ov("x").sub(&LinExpr::sym(mid.clone())).sub(&LinExpr::int(1)),
            ],
        )
        .unwrap();
        let out = c.eliminate_syms(&BTreeSet::from([mid]), FM_BUDGET).unwrap();
        assert_eq!(out.ges().count(), 1);
        let g = out.ges().next().unwrap();
        // x' - x - 1 ≥ 0.
        assert_eq!(*g, ov("x").sub(&iv("x")).sub(&LinExpr::int(1)));
    }

    #[test]
    fn eliminate_detects_infeasible_band() {
        // x'' ≥ 1 ∧ -x'' ≥ 0 is unsatisfiable; projection must notice.
        let mid = Sym::Mid("x".into());
        let c = Cube::new(
            [],
            [
                LinExpr::sym(mid.clone()).sub(&LinExpr::int(1)),
                LinExpr::sym(mid.clone()).scale(&rat(-1)),
            ],
        )
        .unwrap();
        assert!(c.eliminate_syms(&BTreeSet::from([mid]), FM_BUDGET).is_none());
    }

    #[test]
    fn eval_checks_all_constraints() {
        let c = Cube::new(
            [ov("x").sub(&iv("x")).sub(&LinExpr::int(1))],
            [iv("x")],
        )
        .unwrap();
        let good = |s: &Sym| match s {
            Sym::In(_) => rat(2),
            Sym::Out(_) => rat(3),
            _ => rat(0),
        };
        let bad = |s: &Sym| match s {
            Sym::In(_) => rat(2),
            Sym::Out(_) => rat(5),
            _ => rat(0),
        };
        assert!(c.eval(&good));
        assert!(!c.eval(&bad));
    }

    #[test]
    fn display_is_readable() {
        let c = Cube::new(
            [ov("x").sub(&iv("x")).sub(&LinExpr::int(1))],
            [iv("x").sub(&LinExpr::int(2))],
        )
        .unwrap();
        assert_eq!(c.to_string(), "x' = x + 1 /\\ x >= 2");
    }
}
