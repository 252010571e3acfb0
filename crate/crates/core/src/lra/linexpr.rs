//! Symbols, monomials and rational linear expressions over them.
//!
//! A transition formula talks about a variable's value before (`In`) and
//! after (`Out`) a computation, about the loop counter `K`, and — only
//! transiently, inside sequential composition — about the intermediate state
//! (`Mid`). Monomials multiply at most two symbols; every nonlinear term is
//! treated as an independent dimension by the linear machinery.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigRational, One, Signed, Zero};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Sym {
    /// The iteration counter introduced by star.
    K,
    /// Pre-state value of a variable.
    In(String),
    /// Post-state value of a variable.
    Out(String),
    /// Intermediate state during sequential composition.
    Mid(String),
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::K => write!(f, "k"),
            Sym::In(x) => write!(f, "{x}"),
            Sym::Out(x) => write!(f, "{x}'"),
            Sym::Mid(x) => write!(f, "{x}''"),
        }
    }
}

/// A product of one or two symbols, kept sorted. Ordered by degree first
/// (so quadratic monomials outrank linear ones as pivot choices), then
/// lexicographically.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Monomial(Vec<Sym>);

impl Monomial {
    pub fn unit(s: Sym) -> Monomial {
        Monomial(vec![s])
    }

    pub fn pair(a: Sym, b: Sym) -> Monomial {
        let mut v = vec![a, b];
        v.sort();
        Monomial(v)
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn syms(&self) -> &[Sym] {
        &self.0
    }

    pub fn mentions(&self, s: &Sym) -> bool {
        self.0.contains(s)
    }

    /// Multiply two monomials; `None` above degree 2.
    pub fn mul(&self, other: &Monomial) -> Option<Monomial> {
        if self.degree() + other.degree() > 2 {
            return None;
        }
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        v.sort();
        Some(Monomial(v))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join("*"))
    }
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// A rational-coefficient polynomial of degree ≤ 2, stored as a sparse map
/// plus an explicit constant. No zero coefficients are kept.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct LinExpr {
    pub terms: BTreeMap<Monomial, BigRational>,
    pub constant: BigRational,
}

impl LinExpr {
    pub fn zero() -> LinExpr {
        LinExpr::default()
    }

    pub fn constant(c: BigRational) -> LinExpr {
        LinExpr {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn int(n: i64) -> LinExpr {
        LinExpr::constant(rat(n))
    }

    pub fn sym(s: Sym) -> LinExpr {
        LinExpr::term(Monomial::unit(s), rat(1))
    }

    pub fn term(m: Monomial, c: BigRational) -> LinExpr {
        let mut e = LinExpr::zero();
        if !c.is_zero() {
            e.terms.insert(m, c);
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant.is_zero()
    }

    /// True when only the constant part is (possibly) nonzero.
    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: &BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m.clone()).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        out.constant += &other.constant;
        out
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.scale(&rat(-1)))
    }

    pub fn scale(&self, c: &BigRational) -> LinExpr {
        if c.is_zero() {
            return LinExpr::zero();
        }
        LinExpr {
            terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect(),
            constant: &self.constant * c,
        }
    }

    /// Polynomial product; `None` when the result would exceed degree 2.
    pub fn mul(&self, other: &LinExpr) -> Option<LinExpr> {
        let mut out = LinExpr::constant(&self.constant * &other.constant);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), &(c * &other.constant));
        }
        for (m, c) in &other.terms {
            out.add_term(m.clone(), &(c * &self.constant));
        }
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(mb)?;
                out.add_term(m, &(ca * cb));
            }
        }
        Some(out)
    }

    /// The largest monomial (ignoring the constant), if any.
    pub fn leading(&self) -> Option<&Monomial> {
        self.terms.keys().next_back()
    }

    /// Degree of the polynomial (0 for constants).
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn all_syms(&self) -> BTreeSet<Sym> {
        self.terms
            .keys()
            .flat_map(|m| m.syms().iter().cloned())
            .collect()
    }

    pub fn mentions(&self, s: &Sym) -> bool {
        self.terms.keys().any(|m| m.mentions(s))
    }

    /// Replace every symbol according to `f`, re-sorting monomials.
    pub fn rename(&self, f: &impl Fn(&Sym) -> Sym) -> LinExpr {
        let mut out = LinExpr::constant(self.constant.clone());
        for (m, c) in &self.terms {
            let syms: Vec<Sym> = m.syms().iter().map(f).collect();
            let m2 = match syms.len() {
                1 => Monomial::unit(syms.into_iter().next().unwrap()),
                2 => {
                    let mut it = syms.into_iter();
                    Monomial::pair(it.next().unwrap(), it.next().unwrap())
                }
                _ => unreachable!("monomials have degree 1 or 2"),
            };
            out.add_term(m2, c);
        }
        out
    }

    /// Substitute an affine expression for a symbol. `None` when a product
    /// would exceed degree 2 (which can only happen if `repl` is nonlinear).
    pub fn substitute(&self, s: &Sym, repl: &LinExpr) -> Option<LinExpr> {
        let mut out = LinExpr::constant(self.constant.clone());
        for (m, c) in &self.terms {
            if !m.mentions(s) {
                out.add_term(m.clone(), c);
                continue;
            }
            // Split m into the occurrences of s and the residue.
            let residue: Vec<Sym> = {
                let mut syms = m.syms().to_vec();
                let pos = syms.iter().position(|t| t == s).unwrap();
                syms.remove(pos);
                syms
            };
            let mut piece = repl.clone();
            for t in &residue {
                if t == s {
                    piece = piece.mul(repl)?;
                } else {
                    piece = piece.mul(&LinExpr::sym(t.clone()))?;
                }
            }
            out = out.add(&piece.scale(c));
        }
        Some(out)
    }

    /// Evaluate with the given symbol assignment.
    pub fn eval(&self, assign: &impl Fn(&Sym) -> BigRational) -> BigRational {
        let mut acc = self.constant.clone();
        for (m, c) in &self.terms {
            let mut v = BigRational::one();
            for s in m.syms() {
                v *= assign(s);
            }
            acc += c * v;
        }
        acc
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = c.abs();
            if mag.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        if !self.constant.is_zero() {
            if first {
                write!(f, "{}", self.constant)?;
            } else if self.constant.is_negative() {
                write!(f, " - {}", self.constant.abs())?;
            } else {
                write!(f, " + {}", self.constant)?;
            }
        }
        Ok(())
    }
}

/// A system of equalities `row = 0` in reduced row-echelon form over the
/// monomial basis: rows are monic in their leading monomial, leading
/// monomials are distinct, and no row's leading monomial occurs in any other
/// row.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct Rref {
    /// Keyed by leading monomial.
    rows: BTreeMap<Monomial, LinExpr>,
}

/// The system forced `c = 0` for a nonzero constant `c`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Inconsistent;

impl Rref {
    pub fn new() -> Rref {
        Rref::default()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &LinExpr> {
        self.rows.values()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Normal form of `e` modulo the system: every leading monomial of a
    /// row is eliminated from `e`.
    pub fn reduce(&self, e: &LinExpr) -> LinExpr {
        let mut cur = e.clone();
        loop {
            let hit = cur
                .terms
                .iter()
                .rev()
                .find_map(|(m, c)| self.rows.get(m).map(|row| (m.clone(), c.clone(), row)));
            match hit {
                None => return cur,
                Some((_, c, row)) => {
                    cur = cur.sub(&row.scale(&c));
                }
            }
        }
    }

    /// Add `e = 0`. Returns whether the system changed.
    pub fn insert(&mut self, e: &LinExpr) -> Result<bool, Inconsistent> {
        let nf = self.reduce(e);
        if nf.is_zero() {
            return Ok(false);
        }
        if nf.is_constant() {
            return Err(Inconsistent);
        }
        let lead = nf.leading().unwrap().clone();
        let monic = nf.scale(&(BigRational::one() / nf.coeff(&lead)));
        // Back-substitute into existing rows so no other row mentions `lead`.
        let keys: Vec<Monomial> = self.rows.keys().cloned().collect();
        for key in keys {
            let row = &self.rows[&key];
            let c = row.coeff(&lead);
            if !c.is_zero() {
                let updated = row.sub(&monic.scale(&c));
                self.rows.insert(key, updated);
            }
        }
        self.rows.insert(lead, monic);
        Ok(true)
    }

    /// If a row solves `m` directly (i.e. `m` is its leading monomial),
    /// return the solution `m = expr` (with `expr` not mentioning `m`).
    pub fn solution_for(&self, m: &Monomial) -> Option<LinExpr> {
        self.rows.get(m).map(|row| {
            let mut rest = row.clone();
            rest.terms.remove(m);
            rest.scale(&rat(-1))
        })
    }

    pub fn all_syms(&self) -> BTreeSet<Sym> {
        self.rows.values().flat_map(|r| r.all_syms()).collect()
    }
}
