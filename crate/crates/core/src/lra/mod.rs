//! Transition formulas over linear rational arithmetic.
//!
//! Values are finite disjunctions of [`Cube`]s — conjunctions of linear
//! (degree ≤ 2) equalities and inequalities over pre-state and post-state
//! copies of the program variables. Sequencing composes relations through a
//! quantified intermediate state; iteration summarizes loops by detecting
//! induction variables from the affine hull and emitting closed forms in an
//! explicit counter that is then projected away. Entailment is decided (one
//! way) by Gaussian reasoning plus Fourier–Motzkin refutation, so ordering
//! questions in this domain are answered soundly but incompletely.

mod cube;
mod domain;
mod entail;
mod linexpr;

pub use cube::{Cube, FM_BUDGET};
pub use domain::{
    capture_queries, take_queries, EntailQuery, LraDomain, Recurrence, TransFormula, Widening,
};
pub use entail::{cube_entails, cube_entails_eq, cube_entails_ge, fm_refute, normalize_target};
pub use linexpr::{rat, Inconsistent, LinExpr, Monomial, Rref, Sym};
