use std::collections::BTreeMap;
use std::fmt::{self, Write};

use super::{derive, reach, Anomaly, Domain, Limits, OracleError, Value};
use crate::horn::HornSystem;
use crate::term::{Names, RelId, StateVarId};
use crate::translate::{next_state_occurrences, TransitionSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactStatus {
    Ok,
    /// Both sides know the fact, at different depths.
    Mismatch,
    /// Derivable but never reached.
    Unreachable,
    /// Reached but not derivable.
    Underivable,
}

impl fmt::Display for FactStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FactStatus::Ok => "ok",
            FactStatus::Mismatch => "mismatch",
            FactStatus::Unreachable => "unreachable",
            FactStatus::Underivable => "underivable",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactComparison {
    pub relation: RelId,
    pub tuple: Vec<Value>,
    pub derive_depth: Option<usize>,
    pub reach_step: Option<usize>,
}

impl FactComparison {
    pub fn status(&self) -> FactStatus {
        match (self.derive_depth, self.reach_step) {
            (Some(a), Some(b)) if a == b => FactStatus::Ok,
            (Some(_), Some(_)) => FactStatus::Mismatch,
            (Some(_), None) => FactStatus::Unreachable,
            _ => FactStatus::Underivable,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Discrepancy {
    Fact(FactComparison),
    FlagCleared {
        clause: usize,
        relation: RelId,
        step: usize,
    },
    IncompletePlaces {
        clause: usize,
        relation: RelId,
        step: usize,
    },
    UnsetRead {
        clause: usize,
        var: StateVarId,
        step: usize,
    },
    /// Structural: in the disjunct for `clause`, `var` occurs primed
    /// `count` times in update and frame together instead of once.
    NextStateNotTotal {
        clause: usize,
        var: StateVarId,
        count: usize,
    },
}

#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub facts: Vec<FactComparison>,
    pub discrepancies: Vec<Discrepancy>,
    pub states_explored: usize,
    relation_names: Vec<String>,
    var_names: Vec<String>,
}

impl EquivalenceReport {
    pub fn is_equivalent(&self) -> bool {
        self.discrepancies.is_empty()
    }

    fn fact_label(&self, f: &FactComparison) -> String {
        let args: Vec<String> = f.tuple.iter().map(Value::to_string).collect();
        format!("{}({})", self.relation_names[f.relation.0], args.join(","))
    }

    /// One `fact R(t) derive=D reach=S status` line per fact, then one
    /// line per non-fact discrepancy, then a verdict line.
    pub fn render(&self) -> String {
        let depth = |d: Option<usize>| d.map_or_else(|| "-".to_string(), |d| d.to_string());
        let mut out = String::new();
        for f in &self.facts {
            writeln!(
                out,
                "fact {} derive={} reach={} {}",
                self.fact_label(f),
                depth(f.derive_depth),
                depth(f.reach_step),
                f.status()
            )
            .unwrap();
        }
        for d in &self.discrepancies {
            let rel = |r: &RelId| &self.relation_names[r.0];
            match d {
                Discrepancy::Fact(_) => continue,
                Discrepancy::FlagCleared { clause, relation, step } => {
                    writeln!(out, "anomaly clause {clause}: flag of {} cleared at step {step}", rel(relation))
                }
                Discrepancy::IncompletePlaces { clause, relation, step } => writeln!(
                    out,
                    "anomaly clause {clause}: flag of {} set with unset places at step {step}",
                    rel(relation)
                ),
                Discrepancy::UnsetRead { clause, var, step } => writeln!(
                    out,
                    "anomaly clause {clause}: read of unset {} at step {step}",
                    self.var_names[var.0]
                ),
                Discrepancy::NextStateNotTotal { clause, var, count } => writeln!(
                    out,
                    "anomaly clause {clause}: {} constrained {count} times in the next state",
                    self.var_names[var.0]
                ),
            }
            .unwrap();
        }
        writeln!(
            out,
            "{}: {} facts, {} states, {} discrepancies",
            if self.is_equivalent() { "equivalent" } else { "NOT equivalent" },
            self.facts.len(),
            self.states_explored,
            self.discrepancies.len()
        )
        .unwrap();
        out
    }
}

/// Compare bounded derivability in `sys` with bounded reachability in
/// `ts`, its translation (possibly simplified or deliberately broken).
///
/// Only budget overruns are errors; a read of an unset place during
/// exploration is reported as a discrepancy, with facts compared from
/// whatever was derived.
pub fn check_equivalence(
    sys: &HornSystem,
    ts: &TransitionSystem,
    dom: &Domain,
    depth: usize,
    limits: Limits,
) -> Result<EquivalenceReport, OracleError> {
    let mut discrepancies = Vec::new();
    for (d, counts) in ts.disjuncts.iter().zip(next_state_occurrences(ts)) {
        for (v, count) in counts.into_iter().enumerate() {
            if count != 1 {
                discrepancies.push(Discrepancy::NextStateNotTotal {
                    clause: d.source_clause,
                    var: StateVarId(v),
                    count,
                });
            }
        }
    }

    let derived = derive(sys, dom, depth, limits.max_facts)?;
    let (reached, states_explored) = match reach(ts, dom, depth, limits.max_states) {
        Ok(r) => {
            for a in &r.anomalies {
                discrepancies.push(match *a {
                    Anomaly::FlagCleared { clause, relation, step } => {
                        Discrepancy::FlagCleared { clause, relation, step }
                    }
                    Anomaly::IncompletePlaces { clause, relation, step } => {
                        Discrepancy::IncompletePlaces { clause, relation, step }
                    }
                });
            }
            (Some(r.facts(ts)), r.states.len())
        }
        Err(OracleError::UnsetRead { clause, var, step }) => {
            discrepancies.push(Discrepancy::UnsetRead { clause, var, step });
            (None, 0)
        }
        Err(e) => return Err(e),
    };

    // (relation, tuple) -> (derivation depth, reaching step)
    type Table = BTreeMap<(RelId, Vec<Value>), (Option<usize>, Option<usize>)>;
    let mut table = Table::new();
    for f in derived.facts() {
        table.entry((f.relation, f.tuple.clone())).or_default().0 = Some(f.depth);
    }
    for (key, step) in reached.unwrap_or_default() {
        table.entry(key).or_default().1 = Some(step);
    }
    let facts: Vec<FactComparison> = table
        .into_iter()
        .map(|((relation, tuple), (derive_depth, reach_step))| FactComparison {
            relation,
            tuple,
            derive_depth,
            reach_step,
        })
        .collect();
    let fact_discrepancies: Vec<Discrepancy> =
        facts.iter().filter(|f| f.status() != FactStatus::Ok).cloned().map(Discrepancy::Fact).collect();
    discrepancies.splice(0..0, fact_discrepancies);

    let names = ts.names();
    Ok(EquivalenceReport {
        facts,
        discrepancies,
        states_explored,
        relation_names: ts.relations.iter().map(|r| r.name.clone()).collect(),
        var_names: ts.state_vars().iter().map(|v| names.state(v.ordinal).into_owned()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::load_system;
    use crate::term::Term;
    use crate::translate::{simplify_inline, translate_system};

    const WORKED: &str = include_str!("../../tests/data/worked_example.smt2");

    #[test]
    fn worked_is_equivalent() {
        let sys = load_system(WORKED, None).unwrap();
        let ts = translate_system(&sys);
        let dom = Domain::new(0, 16).unwrap();
        let report = check_equivalence(&sys, &ts, &dom, 10, Limits::default()).unwrap();
        assert!(report.is_equivalent(), "{}", report.render());
        let text = report.render();
        assert!(text.contains("fact E() derive=1 reach=1 ok\n"));
        assert!(text.contains("fact L(6) derive=4 reach=4 ok\n"));
        assert!(text.contains("fact M(6) derive=5 reach=5 ok\n"));
        assert!(text.ends_with("equivalent: 5 facts, 8 states, 0 discrepancies\n"), "{text}");

        let inlined = check_equivalence(&sys, &simplify_inline(&ts), &dom, 10, Limits::default()).unwrap();
        assert!(inlined.is_equivalent(), "{}", inlined.render());
    }

    #[test]
    fn dropped_update_is_detected() {
        let sys = load_system(WORKED, None).unwrap();
        let mut ts = translate_system(&sys);
        // Disjunct 2 writes L's place; keep only the flag update.
        let d = &mut ts.disjuncts[2];
        d.update = d.update.conjuncts()[0].clone();
        let dom = Domain::new(0, 16).unwrap();
        let report = check_equivalence(&sys, &ts, &dom, 10, Limits::default()).unwrap();
        assert!(!report.is_equivalent());
        assert!(report
            .discrepancies
            .iter()
            .any(|d| matches!(d, Discrepancy::NextStateNotTotal { clause: 2, count: 0, .. })));
        assert!(report.discrepancies.iter().any(|d| matches!(d, Discrepancy::Fact(_))));
    }

    #[test]
    fn dropped_body_flag_is_unset_read() {
        let sys = load_system(WORKED, None).unwrap();
        let mut ts = translate_system(&sys);
        // Without `flag.L`, disjunct 2 reads L's place in the initial state.
        let d = &mut ts.disjuncts[2];
        d.guard = Term::conj(d.guard.conjuncts().into_iter().skip(1).cloned());
        let report =
            check_equivalence(&sys, &ts, &Domain::new(0, 16).unwrap(), 10, Limits::default()).unwrap();
        assert!(report.discrepancies.iter().any(|d| matches!(d, Discrepancy::UnsetRead { clause: 2, .. })));
        assert!(report.render().contains("read of unset place.L.1"));
    }

    #[test]
    fn budget_is_an_error() {
        let sys = load_system(WORKED, None).unwrap();
        let ts = translate_system(&sys);
        let limits = Limits { max_facts: 2, max_states: 100 };
        let err = check_equivalence(&sys, &ts, &Domain::new(0, 16).unwrap(), 10, limits).unwrap_err();
        assert!(matches!(err, OracleError::BudgetExceeded { what: "facts", .. }));
    }

    #[test]
    fn status_labels() {
        let f = |d, r| FactComparison { relation: RelId(0), tuple: vec![], derive_depth: d, reach_step: r };
        assert_eq!(f(Some(1), Some(1)).status(), FactStatus::Ok);
        assert_eq!(f(Some(1), Some(2)).status(), FactStatus::Mismatch);
        assert_eq!(f(Some(1), None).status(), FactStatus::Unreachable);
        assert_eq!(f(None, Some(1)).status(), FactStatus::Underivable);
    }
}
