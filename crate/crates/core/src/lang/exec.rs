use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{Action, Edge, EdgeId, Env, Program, VertexId};

/// One transition of a concrete run.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TraceEvent {
    /// An edge of the current procedure fired (for a call edge this marks
    /// the jump into the callee).
    Edge(EdgeId),
    /// The current procedure reached its exit and control popped back to
    /// the caller.
    Return,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TraceOutcome {
    /// Main's exit was reached with an empty call stack.
    Completed,
    /// No enabled edge: every guard is false, or evaluation failed
    /// (division by zero, arithmetic overflow).
    Stuck,
    OutOfFuel,
}

/// A concrete run. `steps[k]` is the vertex reached after `k` transitions
/// together with the full variable store at that point; the store is flat,
/// so variables of suspended or finished procedures keep whatever values
/// their frames hold.
#[derive(Clone, Debug)]
pub struct Trace {
    pub steps: Vec<(VertexId, Env)>,
    pub events: Vec<TraceEvent>,
    pub outcome: TraceOutcome,
}

struct Frame {
    ret_proc: usize,
    ret_vertex: VertexId,
    callee: usize,
    saved: Vec<(String, i64)>,
}

const HAVOC_RANGE: std::ops::RangeInclusive<i64> = -10..=10;

/// Run the program from `main` with globals taken from `init` (variables
/// missing from `init` start at 0, locals always start at 0). Nondeterminism
/// — the choice among enabled edges and havoc values — is resolved by a
/// ChaCha8 stream, so equal seeds give equal traces.
pub fn concrete_run(program: &Program, init: &Env, seed: u64, fuel: usize) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env: Env = program.all_vars().into_iter().map(|x| (x, 0)).collect();
    for (x, v) in init {
        if env.contains_key(x) {
            env.insert(x.clone(), *v);
        }
    }

    let mut cur_proc = 0usize;
    let mut cur = program.procedures[0].graph.entry;
    let mut stack: Vec<Frame> = Vec::new();
    let mut steps = vec![(cur, env.clone())];
    let mut events = Vec::new();

    for _ in 0..fuel {
        if cur == program.procedures[cur_proc].graph.exit {
            match stack.pop() {
                None => {
                    return Trace {
                        steps,
                        events,
                        outcome: TraceOutcome::Completed,
                    }
                }
                Some(frame) => {
                    for (x, v) in frame.saved {
                        env.insert(x, v);
                    }
                    cur_proc = frame.ret_proc;
                    cur = frame.ret_vertex;
                    let _ = frame.callee;
                    events.push(TraceEvent::Return);
                    steps.push((cur, env.clone()));
                    continue;
                }
            }
        }

        let enabled: Vec<&Edge> = program.procedures[cur_proc]
            .graph
            .out_edges(cur)
            .filter(|e| match &e.action {
                Action::Assume(g) => matches!(g.eval(&env), Some(n) if n >= 0),
                Action::Assign(_, e) => e.eval(&env).is_some(),
                Action::Call(_) | Action::Havoc(_) => true,
            })
            .collect();
        if enabled.is_empty() {
            return Trace {
                steps,
                events,
                outcome: TraceOutcome::Stuck,
            };
        }
        let edge = enabled[rng.gen_range(0..enabled.len())];
        events.push(TraceEvent::Edge(edge.id));
        match &edge.action {
            Action::Assume(_) => cur = edge.tgt,
            Action::Assign(x, e) => {
                let v = e.eval(&env).expect("enabled assign evaluates");
                env.insert(x.clone(), v);
                cur = edge.tgt;
            }
            Action::Havoc(x) => {
                env.insert(x.clone(), rng.gen_range(HAVOC_RANGE));
                cur = edge.tgt;
            }
            Action::Call(j) => {
                let callee = &program.procedures[*j];
                let saved: Vec<(String, i64)> = callee
                    .locals
                    .iter()
                    .map(|x| (x.clone(), env[x]))
                    .collect();
                for x in &callee.locals {
                    env.insert(x.clone(), 0);
                }
                stack.push(Frame {
                    ret_proc: cur_proc,
                    ret_vertex: edge.tgt,
                    callee: *j,
                    saved,
                });
                cur_proc = *j;
                cur = callee.graph.entry;
            }
        }
        steps.push((cur, env.clone()));
    }

    Trace {
        steps,
        events,
        outcome: TraceOutcome::OutOfFuel,
    }
}
