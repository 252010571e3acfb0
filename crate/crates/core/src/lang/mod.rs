//! Program representation: expressions, per-procedure flow graphs, and the
//! concrete interpreter used as the ground truth for soundness testing.
//!
//! A program is a list of procedures (index 0 is always `main`) over a shared
//! set of global variables; each procedure may declare locals, and local
//! names are disjoint program-wide. Flow-graph edges carry exactly one
//! action. Structured control flow is compiled away by the parser:
//! conditions become `Assume` edges (guard expression `e` meaning `e >= 0`),
//! and `assert` becomes a skip edge whose source vertex is recorded in a
//! side table for the checker — assertions never prune paths.

mod exec;
mod model;
mod parse;

pub use exec::{concrete_run, Trace, TraceEvent, TraceOutcome};
pub use model::{
    validate, Action, AssertCheck, Bexp, CmpOp, Edge, EdgeId, Env, Exp, FlowGraph, Procedure,
    Program, VertexId,
};
pub use parse::{parse_program, ParseError};
