//! The domain interface and a sampling-based law checker.
//!
//! A [`Domain`] packages the operations every semantic algebra must provide.
//! The `check_*` functions instantiate the corresponding laws on tuples drawn
//! from a caller-supplied sample list and report, per law, either a pass or
//! the first counterexample. Sampling cannot prove a law, but a counterexample
//! is definitive — the reports drive both the test suite and the `axioms` CLI
//! subcommand.

use serde::Serialize;

use crate::lang::Action;

pub trait Domain {
    type Value: Clone + std::fmt::Debug;

    fn zero(&self) -> Self::Value;
    fn one(&self) -> Self::Value;
    fn plus(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn times(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn star(&self, a: &Self::Value) -> Self::Value;
    /// Move `x` out of scope ("existentially quantify away").
    fn exists(&self, x: &str, a: &Self::Value) -> Self::Value;
    /// Widening; domains with finite ascending chains may use `plus`.
    fn widen(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    /// Semantic equality (not necessarily structural).
    fn equal(&self, a: &Self::Value, b: &Self::Value) -> bool;

    /// The semilattice order: `a <= b` iff `a + b = b`. Domains with a
    /// cheaper or more complete entailment test may override this.
    fn leq(&self, a: &Self::Value, b: &Self::Value) -> bool {
        self.equal(&self.plus(a, b), b)
    }

    fn render(&self, a: &Self::Value) -> String;
}

/// Domains that can interpret individual flow-graph actions. `Call` actions
/// are not edge-local — the interprocedural machinery substitutes summaries
/// for them — so `sem_action` may panic on them.
pub trait EdgeSemantics: Domain {
    fn sem_action(&self, action: &Action) -> Self::Value;
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AxiomStatus {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomResult {
    pub name: String,
    pub status: AxiomStatus,
    /// Counterexample operands (on failure) or a note (when inconclusive).
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AxiomReport {
    pub results: Vec<AxiomResult>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.status == AxiomStatus::Pass)
    }

    pub fn failures(&self) -> Vec<&AxiomResult> {
        self.results
            .iter()
            .filter(|r| r.status == AxiomStatus::Fail)
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&AxiomResult> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn merged(mut self, other: AxiomReport) -> AxiomReport {
        self.results.extend(other.results);
        self
    }

    /// Fixed-width text table (name, status, detail).
    pub fn table(&self) -> String {
        let width = self
            .results
            .iter()
            .map(|r| r.name.chars().count())
            .max()
            .unwrap_or(4)
            .max(5);
        let mut out = String::new();
        out.push_str(&format!("{:width$}  {:12}  detail\n", "axiom", "status"));
        for r in &self.results {
            let status = match r.status {
                AxiomStatus::Pass => "pass",
                AxiomStatus::Fail => "FAIL",
                AxiomStatus::Inconclusive => "inconclusive",
            };
            let pad = width - r.name.chars().count();
            out.push_str(&format!(
                "{}{}  {:12}  {}\n",
                r.name,
                " ".repeat(pad),
                status,
                r.detail.as_deref().unwrap_or("-")
            ));
        }
        out
    }
}

/// Deterministic tuple stream over the sample list: the `t`-th check of a
/// law uses indices mixed by small odd multipliers, so different laws see
/// different (but reproducible) operand combinations.
fn tuple(n: usize, t: usize) -> (usize, usize, usize) {
    (t % n, (t * 31 + 7) % n, (t * 17 + 3) % n)
}

struct Checker<'a, D: Domain> {
    d: &'a D,
    samples: &'a [D::Value],
    results: Vec<AxiomResult>,
}

impl<'a, D: Domain> Checker<'a, D> {
    fn law3(
        &mut self,
        name: &str,
        mut law: impl FnMut(&D, &D::Value, &D::Value, &D::Value) -> bool,
    ) {
        let n = self.samples.len();
        for t in 0..n {
            let (i, j, k) = tuple(n, t);
            let (a, b, c) = (&self.samples[i], &self.samples[j], &self.samples[k]);
            if !law(self.d, a, b, c) {
                self.results.push(AxiomResult {
                    name: name.to_string(),
                    status: AxiomStatus::Fail,
                    detail: Some(format!(
                        "a = {}; b = {}; c = {}",
                        self.d.render(a),
                        self.d.render(b),
                        self.d.render(c)
                    )),
                });
                return;
            }
        }
        self.results.push(AxiomResult {
            name: name.to_string(),
            status: AxiomStatus::Pass,
            detail: None,
        });
    }
}

/// Instantiate the PKA laws on `samples`. Equality laws use [`Domain::equal`],
/// inequalities [`Domain::leq`].
pub fn check_pka<D: Domain>(d: &D, samples: &[D::Value]) -> AxiomReport {
    assert!(!samples.is_empty(), "need at least one sample");
    let mut ck = Checker {
        d,
        samples,
        results: Vec::new(),
    };
    ck.law3("PKA:assoc⊕", |d, a, b, c| {
        d.equal(&d.plus(&d.plus(a, b), c), &d.plus(a, &d.plus(b, c)))
    });
    ck.law3("PKA:comm⊕", |d, a, b, _| d.equal(&d.plus(a, b), &d.plus(b, a)));
    ck.law3("PKA:idem⊕", |d, a, _, _| d.equal(&d.plus(a, a), a));
    ck.law3("PKA:unit0", |d, a, _, _| {
        d.equal(&d.plus(a, &d.zero()), a) && d.equal(&d.plus(&d.zero(), a), a)
    });
    ck.law3("PKA:assocʘ", |d, a, b, c| {
        d.equal(&d.times(&d.times(a, b), c), &d.times(a, &d.times(b, c)))
    });
    ck.law3("PKA:unit1", |d, a, _, _| {
        d.equal(&d.times(&d.one(), a), a) && d.equal(&d.times(a, &d.one()), a)
    });
    ck.law3("PKA:leftPreDist", |d, a, b, c| {
        d.leq(&d.plus(&d.times(a, b), &d.times(a, c)), &d.times(a, &d.plus(b, c)))
    });
    ck.law3("PKA:rightPreDist", |d, a, b, c| {
        d.leq(&d.plus(&d.times(a, c), &d.times(b, c)), &d.times(&d.plus(a, b), c))
    });
    ck.law3("PKA:I1", |d, a, _, _| {
        let s = d.star(a);
        d.leq(&d.plus(&d.one(), &d.times(a, &s)), &s)
    });
    ck.law3("PKA:I2", |d, a, _, _| {
        let s = d.star(a);
        d.leq(&d.plus(&d.one(), &d.times(&s, a)), &s)
    });
    AxiomReport { results: ck.results }
}

/// Instantiate the quantification laws Q1–Q4 and the widening laws on
/// `samples`, quantifying over variables drawn from `vars`. Q1 is checked
/// as the inequality `(∃x.a) ⊕ (∃x.b) ≤ ∃x.(a⊕b)`; domains whose
/// quantification distributes exactly over joins (quantified quantales) may
/// set `q1_equality` to check the stronger equational form.
pub fn check_qpka<D: Domain>(
    d: &D,
    samples: &[D::Value],
    vars: &[String],
    q1_equality: bool,
    widen_budget: usize,
) -> AxiomReport {
    assert!(!samples.is_empty() && !vars.is_empty());
    let mut ck = Checker {
        d,
        samples,
        results: Vec::new(),
    };
    let var = |t: usize| vars[t % vars.len()].as_str();
    let var2 = |t: usize| vars[(t + 1) % vars.len()].as_str();

    {
        let mut t = 0usize;
        ck.law3("Q:Q1", |d, a, b, _| {
            let x = var(t);
            t += 1;
            let lhs = d.plus(&d.exists(x, a), &d.exists(x, b));
            let rhs = d.exists(x, &d.plus(a, b));
            if q1_equality {
                d.equal(&lhs, &rhs)
            } else {
                d.leq(&lhs, &rhs)
            }
        });
    }
    {
        let mut t = 0usize;
        ck.law3("Q:Q2", |d, a, b, _| {
            let x = var(t);
            t += 1;
            let ea = d.exists(x, a);
            d.equal(
                &d.exists(x, &d.times(&ea, b)),
                &d.times(&ea, &d.exists(x, b)),
            )
        });
    }
    {
        let mut t = 0usize;
        ck.law3("Q:Q3", |d, a, b, _| {
            let x = var(t);
            t += 1;
            let eb = d.exists(x, b);
            d.equal(
                &d.exists(x, &d.times(a, &eb)),
                &d.times(&d.exists(x, a), &eb),
            )
        });
    }
    {
        let mut t = 0usize;
        ck.law3("Q:Q4", |d, a, _, _| {
            let (x, y) = (var(t), var2(t));
            t += 1;
            d.equal(
                &d.exists(x, &d.exists(y, a)),
                &d.exists(y, &d.exists(x, a)),
            )
        });
    }
    ck.law3("W:W1", |d, a, b, _| d.leq(&d.plus(a, b), &d.widen(a, b)));

    // Stabilization probe: widen along an ascending prefix-join chain and
    // require the widened sequence to reach a fixed tail within the budget.
    let mut results = ck.results;
    let steps = samples.len().min(widen_budget.max(2));
    let mut ascending = samples[0].clone();
    let mut w = samples[0].clone();
    let mut last_change = 0usize;
    for (i, a) in samples.iter().enumerate().take(steps).skip(1) {
        ascending = d.plus(&ascending, a);
        let next = d.widen(&w, &ascending);
        if !d.equal(&next, &w) {
            last_change = i;
        }
        w = next;
    }
    let status = if last_change + 1 < steps {
        AxiomResult {
            name: "W:stabilization".to_string(),
            status: AxiomStatus::Pass,
            detail: Some(format!(
                "fixed after step {last_change} of {steps}"
            )),
        }
    } else {
        AxiomResult {
            name: "W:stabilization".to_string(),
            status: AxiomStatus::Inconclusive,
            detail: Some(format!("still changing at end of {steps}-step budget")),
        }
    };
    results.push(status);
    AxiomReport { results }
}

/// Quantale laws: exact distributivity of the product over joins, and the
/// star-as-sum-of-powers probe. The probe accumulates partial sums
/// `1 ⊕ a ⊕ a² ⊕ …`; if they stabilize, the limit must equal `a*`, and if
/// they keep growing past the budget the law is inconclusive on that sample.
pub fn check_quantale<D: Domain>(d: &D, samples: &[D::Value], power_budget: usize) -> AxiomReport {
    assert!(!samples.is_empty());
    let mut ck = Checker {
        d,
        samples,
        results: Vec::new(),
    };
    ck.law3("Quantale:distL", |d, a, b, c| {
        d.equal(
            &d.times(a, &d.plus(b, c)),
            &d.plus(&d.times(a, b), &d.times(a, c)),
        )
    });
    ck.law3("Quantale:distR", |d, a, b, c| {
        d.equal(
            &d.times(&d.plus(a, b), c),
            &d.plus(&d.times(a, c), &d.times(b, c)),
        )
    });
    let mut results = ck.results;

    let mut star_sum = AxiomResult {
        name: "Quantale:starSum".to_string(),
        status: AxiomStatus::Pass,
        detail: None,
    };
    'outer: for a in samples {
        let mut power = d.one();
        let mut sum = d.one();
        let mut stabilized = false;
        for _ in 0..power_budget {
            power = d.times(&power, a);
            let next = d.plus(&sum, &power);
            if d.equal(&next, &sum) {
                stabilized = true;
                break;
            }
            sum = next;
        }
        if !stabilized {
            star_sum.status = AxiomStatus::Inconclusive;
            star_sum.detail = Some(format!(
                "power sums of a = {} still growing after {power_budget} terms",
                d.render(a)
            ));
            break 'outer;
        }
        if !d.equal(&sum, &d.star(a)) {
            star_sum.status = AxiomStatus::Fail;
            star_sum.detail = Some(format!(
                "a = {}; sum of powers = {}; a* = {}",
                d.render(a),
                d.render(&sum),
                d.render(&d.star(a))
            ));
            break 'outer;
        }
    }
    results.push(star_sum);
    AxiomReport { results }
}
