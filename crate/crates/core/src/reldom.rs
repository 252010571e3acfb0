//! The finite relational domain: binary relations over environments with
//! values in `Z_m`.
//!
//! Every operation is exact, the carrier is finite, and products distribute
//! over arbitrary unions, so this is a genuine quantale — the executable
//! ground truth that the precision and coincidence tests compare against.
//! Arithmetic on a state evaluates over the integers using the
//! representatives `0..m-1` and reduces the final value mod `m`; guards test
//! `e >= 0` on the representative evaluation; division truncates toward zero
//! and a zero divisor simply drops the transition.

use std::collections::{BTreeMap, BTreeSet};

use crate::algebra::{Domain, EdgeSemantics};
use crate::lang::{Action, Edge, Env};

/// One program state: the value of each variable, indexed like the domain's
/// variable list.
pub type State = Vec<u8>;

/// A relation on states. Values carry their modulus and variable list so
/// that mixing incompatible relations is caught immediately.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct RelValue {
    pub m: u8,
    pub vars: Vec<String>,
    pub pairs: BTreeSet<(State, State)>,
}

impl RelValue {
    fn compatible(&self, other: &RelValue) {
        assert_eq!(self.m, other.m, "modulus mismatch");
        assert_eq!(self.vars, other.vars, "variable list mismatch");
    }
}

/// Exact relational composition: `(ρ, ρ″) ∈ R∘S` iff some `ρ′` links them.
pub fn rel_compose(r: &RelValue, s: &RelValue) -> RelValue {
    r.compatible(s);
    let mut by_src: BTreeMap<&State, Vec<&State>> = BTreeMap::new();
    for (a, b) in &s.pairs {
        by_src.entry(a).or_default().push(b);
    }
    let mut pairs = BTreeSet::new();
    for (a, b) in &r.pairs {
        if let Some(outs) = by_src.get(b) {
            for c in outs {
                pairs.insert((a.clone(), (*c).clone()));
            }
        }
    }
    RelValue {
        m: r.m,
        vars: r.vars.clone(),
        pairs,
    }
}

/// Reflexive-transitive closure: the union of all powers, reached by
/// iterating `X ↦ X ∪ X∘R` from the identity until a fixpoint.
pub fn rel_star(r: &RelValue) -> RelValue {
    let d = RelDomain {
        m: r.m,
        vars: r.vars.clone(),
    };
    let mut cur = d.one();
    loop {
        let step = rel_compose(&cur, r);
        let before = cur.pairs.len();
        cur.pairs.extend(step.pairs);
        if cur.pairs.len() == before {
            return cur;
        }
    }
}

/// Quantify a variable out of scope: both endpoints of every pair range
/// over all values of `x`, in lockstep.
pub fn rel_exists(x: &str, r: &RelValue) -> RelValue {
    let idx = r
        .vars
        .iter()
        .position(|v| v == x)
        .unwrap_or_else(|| panic!("unknown variable {x}"));
    let mut pairs = BTreeSet::new();
    for (a, b) in &r.pairs {
        for n in 0..r.m {
            let mut a2 = a.clone();
            let mut b2 = b.clone();
            a2[idx] = n;
            b2[idx] = n;
            pairs.insert((a2, b2));
        }
    }
    RelValue {
        m: r.m,
        vars: r.vars.clone(),
        pairs,
    }
}

/// Interpret one intraprocedural edge. Call edges have no edge-local
/// relational meaning (summaries interpret them) and are rejected.
pub fn rel_sem_edge(e: &Edge, m: u8, vars: &[String]) -> RelValue {
    RelDomain {
        m,
        vars: vars.to_vec(),
    }
    .sem_action(&e.action)
}

#[derive(Clone, Debug)]
pub struct RelDomain {
    pub m: u8,
    pub vars: Vec<String>,
}

impl RelDomain {
    pub fn new(m: u8, vars: impl IntoIterator<Item = impl Into<String>>) -> RelDomain {
        assert!(m >= 1, "modulus must be positive");
        RelDomain {
            m,
            vars: vars.into_iter().map(Into::into).collect(),
        }
    }

    /// All `m^|vars|` states, lexicographically.
    pub fn states(&self) -> Vec<State> {
        let mut out = vec![Vec::new()];
        for _ in &self.vars {
            let mut next = Vec::with_capacity(out.len() * self.m as usize);
            for s in &out {
                for v in 0..self.m {
                    let mut s2 = s.clone();
                    s2.push(v);
                    next.push(s2);
                }
            }
            out = next;
        }
        out
    }

    pub fn from_pairs(&self, pairs: impl IntoIterator<Item = (State, State)>) -> RelValue {
        let pairs: BTreeSet<(State, State)> = pairs.into_iter().collect();
        for (a, b) in &pairs {
            assert_eq!(a.len(), self.vars.len());
            assert_eq!(b.len(), self.vars.len());
            assert!(a.iter().chain(b).all(|v| *v < self.m), "value out of Z_m");
        }
        RelValue {
            m: self.m,
            vars: self.vars.clone(),
            pairs,
        }
    }

    /// The full relation (every state related to every state).
    pub fn top(&self) -> RelValue {
        let states = self.states();
        let mut pairs = BTreeSet::new();
        for a in &states {
            for b in &states {
                pairs.insert((a.clone(), b.clone()));
            }
        }
        self.from_pairs(pairs)
    }

    fn env_of(&self, s: &State) -> Env {
        self.vars
            .iter()
            .zip(s)
            .map(|(x, v)| (x.clone(), *v as i64))
            .collect()
    }
}

impl Domain for RelDomain {
    type Value = RelValue;

    fn zero(&self) -> RelValue {
        RelValue {
            m: self.m,
            vars: self.vars.clone(),
            pairs: BTreeSet::new(),
        }
    }

    fn one(&self) -> RelValue {
        let pairs = self
            .states()
            .into_iter()
            .map(|s| (s.clone(), s))
            .collect();
        RelValue {
            m: self.m,
            vars: self.vars.clone(),
            pairs,
        }
    }

    fn plus(&self, a: &RelValue, b: &RelValue) -> RelValue {
        a.compatible(b);
        let mut pairs = a.pairs.clone();
        pairs.extend(b.pairs.iter().cloned());
        RelValue {
            m: a.m,
            vars: a.vars.clone(),
            pairs,
        }
    }

    fn times(&self, a: &RelValue, b: &RelValue) -> RelValue {
        rel_compose(a, b)
    }

    fn star(&self, a: &RelValue) -> RelValue {
        rel_star(a)
    }

    fn exists(&self, x: &str, a: &RelValue) -> RelValue {
        rel_exists(x, a)
    }

    /// The lattice is finite, so joining is already a widening.
    fn widen(&self, a: &RelValue, b: &RelValue) -> RelValue {
        self.plus(a, b)
    }

    fn equal(&self, a: &RelValue, b: &RelValue) -> bool {
        a.compatible(b);
        a.pairs == b.pairs
    }

    fn render(&self, a: &RelValue) -> String {
        let state = |s: &State| {
            let inner: Vec<String> = s.iter().map(|v| v.to_string()).collect();
            format!("({})", inner.join(","))
        };
        let body: Vec<String> = a
            .pairs
            .iter()
            .map(|(x, y)| format!("{}->{}", state(x), state(y)))
            .collect();
        format!("{{{}}}", body.join(", "))
    }
}

impl EdgeSemantics for RelDomain {
    fn sem_action(&self, action: &Action) -> RelValue {
        let mut pairs = BTreeSet::new();
        match action {
            Action::Assign(x, e) => {
                let idx = self
                    .vars
                    .iter()
                    .position(|v| v == x)
                    .unwrap_or_else(|| panic!("unknown variable {x}"));
                for s in self.states() {
                    if let Some(v) = e.eval(&self.env_of(&s)) {
                        let mut t = s.clone();
                        t[idx] = v.rem_euclid(self.m as i64) as u8;
                        pairs.insert((s, t));
                    }
                }
            }
            Action::Assume(e) => {
                for s in self.states() {
                    if matches!(e.eval(&self.env_of(&s)), Some(n) if n >= 0) {
                        pairs.insert((s.clone(), s));
                    }
                }
            }
            Action::Havoc(x) => {
                let idx = self
                    .vars
                    .iter()
                    .position(|v| v == x)
                    .unwrap_or_else(|| panic!("unknown variable {x}"));
                for s in self.states() {
                    for n in 0..self.m {
                        let mut t = s.clone();
                        t[idx] = n;
                        pairs.insert((s.clone(), t));
                    }
                }
            }
            Action::Call(j) => {
                panic!("call edge (procedure {j}) has no intraprocedural relational semantics")
            }
        }
        RelValue {
            m: self.m,
            vars: self.vars.clone(),
            pairs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Exp;

    fn dx(m: u8) -> RelDomain {
        RelDomain::new(m, ["x"])
    }

    fn p1(pairs: &[(u8, u8)]) -> Vec<(State, State)> {
        pairs.iter().map(|(a, b)| (vec![*a], vec![*b])).collect()
    }

    #[test]
    fn compose_enumerated_example() {
        let d = dx(3);
        let r = d.from_pairs(p1(&[(0, 1), (1, 2)]));
        let s = d.from_pairs(p1(&[(1, 0), (2, 2)]));
        assert_eq!(rel_compose(&r, &s), d.from_pairs(p1(&[(0, 0), (1, 2)])));
    }

    #[test]
    fn compose_units() {
        let d = RelDomain::new(3, ["x", "y"]);
        let r = d.from_pairs([(vec![0, 1], vec![2, 2]), (vec![1, 1], vec![0, 0])]);
        assert_eq!(rel_compose(&r, &d.one()), r);
        assert_eq!(rel_compose(&d.one(), &r), r);
        assert_eq!(rel_compose(&r, &d.zero()), d.zero());
        assert_eq!(rel_compose(&d.zero(), &r), d.zero());
    }

    #[test]
    fn star_of_cycle_is_full_relation() {
        let d = dx(4);
        let r = d.from_pairs(p1(&[(0, 1), (1, 2), (2, 3), (3, 0)]));
        assert_eq!(rel_star(&r), d.top());
    }

    #[test]
    fn star_of_zero_is_one() {
        let d = RelDomain::new(3, ["x", "y"]);
        assert_eq!(rel_star(&d.zero()), d.one());
    }

    #[test]
    fn star_is_idempotent_under_composition() {
        let d = dx(5);
        let r = d.from_pairs(p1(&[(0, 2), (2, 4), (4, 1), (3, 3)]));
        let s = rel_star(&r);
        assert_eq!(rel_compose(&s, &s), s);
        assert_eq!(rel_star(&s), s);
    }

    #[test]
    fn exists_sets_both_coordinates_in_lockstep() {
        let d = RelDomain::new(2, ["g", "x"]);
        // vars sorted g,x: state (g,x). R = {(x:0,g:1) -> (x:1,g:1)}.
        let r = d.from_pairs([(vec![1, 0], vec![1, 1])]);
        let e = rel_exists("x", &r);
        assert_eq!(
            e,
            d.from_pairs([(vec![1, 0], vec![1, 0]), (vec![1, 1], vec![1, 1])])
        );
    }

    #[test]
    fn exists_preserves_identity() {
        let d = RelDomain::new(3, ["x", "y"]);
        assert_eq!(rel_exists("x", &d.one()), d.one());
        assert_eq!(rel_exists("y", &d.one()), d.one());
    }

    #[test]
    fn exists_commutes() {
        let d = RelDomain::new(2, ["x", "y"]);
        let r = d.from_pairs([
            (vec![0, 0], vec![1, 1]),
            (vec![1, 0], vec![0, 0]),
            (vec![1, 1], vec![1, 0]),
        ]);
        assert_eq!(
            rel_exists("x", &rel_exists("y", &r)),
            rel_exists("y", &rel_exists("x", &r))
        );
    }

    #[test]
    fn increment_wraps_mod_m() {
        let d = dx(4);
        let inc = d.sem_action(&Action::Assign(
            "x".into(),
            Exp::Add(Box::new(Exp::var("x")), Box::new(Exp::Int(1))),
        ));
        assert_eq!(inc, d.from_pairs(p1(&[(0, 1), (1, 2), (2, 3), (3, 0)])));
    }

    #[test]
    fn self_division_drops_zero_states() {
        let d = dx(3);
        let div = d.sem_action(&Action::Assign(
            "x".into(),
            Exp::Div(Box::new(Exp::var("x")), Box::new(Exp::var("x"))),
        ));
        assert_eq!(div, d.from_pairs(p1(&[(1, 1), (2, 1)])));
    }

    #[test]
    fn unsatisfiable_guard_is_zero() {
        let d = dx(3);
        let never = d.sem_action(&Action::Assume(Exp::Int(-1)));
        assert_eq!(never, d.zero());
        let always = d.sem_action(&Action::Assume(Exp::Int(0)));
        assert_eq!(always, d.one());
    }

    #[test]
    fn guard_tests_representatives() {
        // assume(x - 2 >= 0) keeps x in {2, 3, 4} for m = 5.
        let d = dx(5);
        let g = d.sem_action(&Action::Assume(Exp::Sub(
            Box::new(Exp::var("x")),
            Box::new(Exp::Int(2)),
        )));
        assert_eq!(g, d.from_pairs(p1(&[(2, 2), (3, 3), (4, 4)])));
    }

    #[test]
    fn havoc_relates_all_values_of_one_variable() {
        let d = RelDomain::new(2, ["x", "y"]);
        let h = d.sem_action(&Action::Havoc("y".into()));
        assert_eq!(h.pairs.len(), 8); // 4 states × 2 choices
        for (a, b) in &h.pairs {
            assert_eq!(a[0], b[0]); // x untouched
        }
    }
}
