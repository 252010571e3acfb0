//! Regular expressions over flow-graph edges.
//!
//! Path expressions are shared trees ([`Rc`] nodes), built through smart
//! constructors that apply only the unit and annihilator laws — `0 + p = p`,
//! `0 . p = 0`, `e . p = p`, `0* = e`, `e* = e`. No other rewriting happens,
//! so the shape produced by Kleene elimination is preserved.

use std::collections::BTreeSet;
use std::fmt;
use std::rc::Rc;

use crate::lang::EdgeId;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PathExpr {
    /// The empty language.
    Empty,
    /// The empty word.
    Eps,
    Edge(EdgeId),
    Plus(Rc<PathExpr>, Rc<PathExpr>),
    Cat(Rc<PathExpr>, Rc<PathExpr>),
    Star(Rc<PathExpr>),
}

pub fn empty() -> Rc<PathExpr> {
    Rc::new(PathExpr::Empty)
}

pub fn eps() -> Rc<PathExpr> {
    Rc::new(PathExpr::Eps)
}

pub fn edge(id: EdgeId) -> Rc<PathExpr> {
    Rc::new(PathExpr::Edge(id))
}

pub fn plus(a: Rc<PathExpr>, b: Rc<PathExpr>) -> Rc<PathExpr> {
    match (&*a, &*b) {
        (PathExpr::Empty, _) => b,
        (_, PathExpr::Empty) => a,
        _ => Rc::new(PathExpr::Plus(a, b)),
    }
}

pub fn cat(a: Rc<PathExpr>, b: Rc<PathExpr>) -> Rc<PathExpr> {
    match (&*a, &*b) {
        (PathExpr::Empty, _) => a,
        (_, PathExpr::Empty) => b,
        (PathExpr::Eps, _) => b,
        (_, PathExpr::Eps) => a,
        _ => Rc::new(PathExpr::Cat(a, b)),
    }
}

pub fn star(a: Rc<PathExpr>) -> Rc<PathExpr> {
    match &*a {
        PathExpr::Empty | PathExpr::Eps => eps(),
        _ => Rc::new(PathExpr::Star(a)),
    }
}

impl PathExpr {
    /// Does the language contain the empty word?
    pub fn nullable(&self) -> bool {
        match self {
            PathExpr::Empty | PathExpr::Edge(_) => false,
            PathExpr::Eps | PathExpr::Star(_) => true,
            PathExpr::Plus(a, b) => a.nullable() || b.nullable(),
            PathExpr::Cat(a, b) => a.nullable() && b.nullable(),
        }
    }

    /// Number of nodes in the tree (shared nodes counted once per visit).
    pub fn size(&self) -> usize {
        match self {
            PathExpr::Empty | PathExpr::Eps | PathExpr::Edge(_) => 1,
            PathExpr::Plus(a, b) | PathExpr::Cat(a, b) => 1 + a.size() + b.size(),
            PathExpr::Star(a) => 1 + a.size(),
        }
    }
}

/// Brzozowski derivative with respect to one edge label.
fn deriv(p: &Rc<PathExpr>, x: EdgeId) -> Rc<PathExpr> {
    match &**p {
        PathExpr::Empty | PathExpr::Eps => empty(),
        PathExpr::Edge(id) => {
            if *id == x {
                eps()
            } else {
                empty()
            }
        }
        PathExpr::Plus(a, b) => plus(deriv(a, x), deriv(b, x)),
        PathExpr::Cat(a, b) => {
            let head = cat(deriv(a, x), b.clone());
            if a.nullable() {
                plus(head, deriv(b, x))
            } else {
                head
            }
        }
        PathExpr::Star(a) => cat(deriv(a, x), star(a.clone())),
    }
}

/// Word membership via iterated derivatives.
pub fn recognizes(p: &Rc<PathExpr>, word: &[EdgeId]) -> bool {
    let mut cur = p.clone();
    for &x in word {
        if matches!(&*cur, PathExpr::Empty) {
            return false;
        }
        cur = deriv(&cur, x);
    }
    cur.nullable()
}

/// All words of the language with length at most `max_len`, in sorted order.
pub fn enumerate_words(p: &Rc<PathExpr>, max_len: usize) -> BTreeSet<Vec<EdgeId>> {
    match &**p {
        PathExpr::Empty => BTreeSet::new(),
        PathExpr::Eps => BTreeSet::from([vec![]]),
        PathExpr::Edge(id) => {
            if max_len >= 1 {
                BTreeSet::from([vec![*id]])
            } else {
                BTreeSet::new()
            }
        }
        PathExpr::Plus(a, b) => {
            let mut out = enumerate_words(a, max_len);
            out.extend(enumerate_words(b, max_len));
            out
        }
        PathExpr::Cat(a, b) => {
            let left = enumerate_words(a, max_len);
            let mut out = BTreeSet::new();
            for u in &left {
                for v in enumerate_words(b, max_len - u.len()) {
                    let mut w = u.clone();
                    w.extend(v);
                    out.insert(w);
                }
            }
            out
        }
        PathExpr::Star(a) => {
            let base = enumerate_words(a, max_len);
            let mut out: BTreeSet<Vec<EdgeId>> = BTreeSet::from([vec![]]);
            loop {
                let mut next = out.clone();
                for w in &out {
                    for u in &base {
                        if u.is_empty() || w.len() + u.len() > max_len {
                            continue;
                        }
                        let mut ext = w.clone();
                        ext.extend(u.iter().copied());
                        next.insert(ext);
                    }
                }
                if next == out {
                    return out;
                }
                out = next;
            }
        }
    }
}

impl fmt::Display for PathExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathExpr::Empty => write!(f, "0"),
            PathExpr::Eps => write!(f, "e"),
            PathExpr::Edge(id) => write!(f, "{}", id.0),
            PathExpr::Plus(a, b) => write!(f, "({a}+{b})"),
            PathExpr::Cat(a, b) => write!(f, "({a}.{b})"),
            PathExpr::Star(a) => write!(f, "{a}*"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: u32) -> EdgeId {
        EdgeId(n)
    }

    #[test]
    fn smart_constructors_apply_unit_laws() {
        let a = edge(e(1));
        assert_eq!(*plus(empty(), a.clone()), *a);
        assert_eq!(*plus(a.clone(), empty()), *a);
        assert_eq!(*cat(eps(), a.clone()), *a);
        assert_eq!(*cat(a.clone(), eps()), *a);
        assert_eq!(*cat(empty(), a.clone()), PathExpr::Empty);
        assert_eq!(*cat(a.clone(), empty()), PathExpr::Empty);
        assert_eq!(*star(empty()), PathExpr::Eps);
        assert_eq!(*star(eps()), PathExpr::Eps);
        // But no factoring: (a+a) stays a sum.
        assert!(matches!(&*plus(a.clone(), a.clone()), PathExpr::Plus(..)));
    }

    #[test]
    fn enumeration_of_simple_star() {
        // (1.2)* up to length 5: e, 12, 1212.
        let p = star(cat(edge(e(1)), edge(e(2))));
        let words = enumerate_words(&p, 5);
        let expect: BTreeSet<Vec<EdgeId>> = BTreeSet::from([
            vec![],
            vec![e(1), e(2)],
            vec![e(1), e(2), e(1), e(2)],
        ]);
        assert_eq!(words, expect);
    }

    #[test]
    fn recognizes_agrees_with_enumeration() {
        // (1 + 2.3)* . 2
        let p = cat(
            star(plus(edge(e(1)), cat(edge(e(2)), edge(e(3))))),
            edge(e(2)),
        );
        let words = enumerate_words(&p, 4);
        assert!(words.contains(&vec![e(2)]));
        assert!(words.contains(&vec![e(1), e(2)]));
        assert!(words.contains(&vec![e(2), e(3), e(2)]));
        // Everything enumerated is recognized…
        for w in &words {
            assert!(recognizes(&p, w), "missing {w:?}");
        }
        // …and everything recognized up to the bound is enumerated.
        let alphabet = [e(1), e(2), e(3)];
        let mut all = vec![vec![]];
        for _ in 0..4 {
            let mut next = Vec::new();
            for w in &all {
                for &a in &alphabet {
                    let mut x = w.clone();
                    x.push(a);
                    next.push(x);
                }
            }
            all.extend(next.clone());
            all = {
                let mut seen = BTreeSet::new();
                all.retain(|w| seen.insert(w.clone()));
                all
            };
        }
        for w in all.iter().filter(|w| w.len() <= 4) {
            assert_eq!(recognizes(&p, w), words.contains(w), "word {w:?}");
        }
    }

    #[test]
    fn rendering_format() {
        let p = plus(
            eps(),
            cat(edge(e(3)), star(plus(edge(e(1)), edge(e(2))))),
        );
        assert_eq!(p.to_string(), "(e+(3.(1+2)*))");
        assert_eq!(empty().to_string(), "0");
    }

    #[test]
    fn derivative_of_star_keeps_tail() {
        let p = star(edge(e(1)));
        assert!(recognizes(&p, &[]));
        assert!(recognizes(&p, &[e(1), e(1), e(1)]));
        assert!(!recognizes(&p, &[e(1), e(2)]));
    }
}
