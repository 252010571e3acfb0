//! Compositional program analysis via regular path expressions.
//!
//! The pipeline: parse a program into per-procedure flow graphs (`lang`),
//! solve single-source path-expression problems over those graphs
//! (`regex`, `pathexpr`), and evaluate the resulting expressions in an
//! algebraic domain (`algebra`, `reldom`, `lra`, `eval`). Procedure calls
//! are handled by summary fixpoints and call-graph path expressions
//! (`interproc`). Everything is deterministic given a seed.

pub mod algebra;
pub mod eval;
pub mod interproc;
pub mod lang;
pub mod lra;
pub mod pathexpr;
pub mod regex;
pub mod reldom;
pub mod samples;
pub mod smt2;
