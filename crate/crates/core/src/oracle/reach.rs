use std::collections::{BTreeMap, HashMap};

use super::{eval_ground, for_each_assignment, Domain, EvalError, OracleError, Valuation, Value};
use crate::term::{InputVarId, Op, RelId, Sort, StateVarId, Term, TermKind, VarRef};
use crate::translate::TransitionSystem;

/// A full assignment to the state variables. Places start out unset: the
/// initial condition leaves them unconstrained, and a place only acquires
/// a value when a transition writes its relation's head.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConcreteState {
    pub flags: Vec<bool>,
    pub places: Vec<Option<Value>>,
}

impl ConcreteState {
    pub fn initial(ts: &TransitionSystem) -> Self {
        let nflags = ts.layout.num_relations();
        ConcreteState { flags: vec![false; nflags], places: vec![None; ts.state_vars().len() - nflags] }
    }

    pub fn get(&self, id: StateVarId) -> Option<Value> {
        match self.flags.get(id.0) {
            Some(b) => Some(Value::Bool(*b)),
            None => self.places[id.0 - self.flags.len()],
        }
    }

    fn set(&mut self, id: StateVarId, v: Option<Value>) {
        let nflags = self.flags.len();
        if id.0 < nflags {
            self.flags[id.0] = v.and_then(Value::as_bool).expect("flags are always set Bool values");
        } else {
            self.places[id.0 - nflags] = v;
        }
    }

    /// The place tuple of `rel`, or `None` if any component is unset.
    pub fn tuple(&self, ts: &TransitionSystem, rel: RelId) -> Option<Vec<Value>> {
        ts.layout.places(rel).map(|p| self.get(p)).collect()
    }
}

/// Something the explorer observed that a faithful translation never does.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Anomaly {
    /// A transition cleared a flag that was set.
    FlagCleared { clause: usize, relation: RelId, step: usize },
    /// A transition produced a state with `relation`'s flag set but some
    /// of its places unset.
    IncompletePlaces { clause: usize, relation: RelId, step: usize },
}

#[derive(Clone, Debug)]
pub struct Reachability {
    /// Every explored state with the step it was first reached at, in
    /// breadth-first order.
    pub states: Vec<(ConcreteState, usize)>,
    pub anomalies: Vec<Anomaly>,
}

impl Reachability {
    /// For each `(R, t)` such that some reached state has `R`'s flag set
    /// and places equal to `t`, the least step at which that happens.
    pub fn facts(&self, ts: &TransitionSystem) -> BTreeMap<(RelId, Vec<Value>), usize> {
        let mut out = BTreeMap::new();
        for (s, step) in &self.states {
            for r in 0..ts.layout.num_relations() {
                if !s.flags[r] {
                    continue;
                }
                if let Some(t) = s.tuple(ts, RelId(r)) {
                    out.entry((RelId(r), t)).or_insert(*step);
                }
            }
        }
        out
    }
}

enum Assign<'a> {
    Const(bool),
    Copy(StateVarId),
    Expr(&'a Term),
}

/// A disjunct split into a current-state guard, direct next-state
/// assignments, and residual constraints checked once the next state is
/// complete.
struct Compiled<'a> {
    clause: usize,
    guard: Vec<&'a Term>,
    assigns: Vec<(StateVarId, Assign<'a>)>,
    residual: Vec<&'a Term>,
    unconstrained: Vec<(StateVarId, Sort)>,
    inputs: Vec<(InputVarId, Sort)>,
}

fn compile<'a>(ts: &'a TransitionSystem, index: usize) -> Compiled<'a> {
    let d = &ts.disjuncts[index];
    let mut guard = Vec::new();
    let mut residual = Vec::new();
    for g in d.guard.conjuncts() {
        if g.contains_primed() {
            residual.push(g);
        } else {
            guard.push(g);
        }
    }
    let mut assigned = vec![false; ts.state_vars().len()];
    let mut assigns = Vec::new();
    for c in d.update.conjuncts().into_iter().chain(d.frame.conjuncts()) {
        let direct = match c.kind() {
            TermKind::Primed(v) => Some((*v, Assign::Const(true))),
            TermKind::App(Op::Not, a) => match a[0].kind() {
                TermKind::Primed(v) => Some((*v, Assign::Const(false))),
                _ => None,
            },
            TermKind::App(Op::Eq, a) if a.len() == 2 => {
                let (v, e) = match (a[0].kind(), a[1].kind()) {
                    (TermKind::Primed(v), _) => (Some(*v), &a[1]),
                    (_, TermKind::Primed(v)) => (Some(*v), &a[0]),
                    _ => (None, &a[0]),
                };
                match v {
                    Some(v) if !e.contains_primed() => match e.kind() {
                        TermKind::State(w) => Some((v, Assign::Copy(*w))),
                        _ => Some((v, Assign::Expr(e))),
                    },
                    _ => None,
                }
            }
            _ => None,
        };
        match direct {
            Some((v, a)) if !assigned[v.0] => {
                assigned[v.0] = true;
                assigns.push((v, a));
            }
            _ => residual.push(c),
        }
    }
    let unconstrained =
        ts.state_vars().iter().filter(|v| !assigned[v.ordinal.0]).map(|v| (v.ordinal, v.sort)).collect();
    let inputs = d.formula().input_vars().into_iter().map(|y| (y, ts.input_vars()[y.0].sort)).collect();
    Compiled { clause: d.source_clause, guard, assigns, residual, unconstrained, inputs }
}

struct StepEnv<'a> {
    current: &'a ConcreteState,
    next: Option<&'a ConcreteState>,
    inputs: &'a [Option<Value>],
}

impl Valuation for StepEnv<'_> {
    fn lookup(&self, var: VarRef<'_>) -> Result<Value, EvalError> {
        match var {
            VarRef::State(v) => self.current.get(v).ok_or(EvalError::UnsetRead(v)),
            VarRef::Primed(v) => match self.next {
                Some(n) => n.get(v).ok_or(EvalError::UnsetRead(v)),
                None => Err(EvalError::UnassignedVariable(format!("next #{}", v.0))),
            },
            VarRef::Input(y) => {
                self.inputs[y.0].ok_or_else(|| EvalError::UnassignedVariable(format!("input #{}", y.0)))
            }
            VarRef::Bound(n) => Err(EvalError::UnassignedVariable(n.into())),
        }
    }
}

/// Evaluate a Bool constraint; overflow counts as "does not hold".
fn holds(t: &Term, env: &StepEnv<'_>, clause: usize, step: usize) -> Result<bool, OracleError> {
    match eval_ground(t, env) {
        Ok(v) => Ok(v == Value::Bool(true)),
        Err(EvalError::Overflow) => Ok(false),
        Err(EvalError::UnsetRead(var)) => Err(OracleError::UnsetRead { clause, var, step }),
        Err(e) => Err(e.into()),
    }
}

fn successors(
    ts: &TransitionSystem,
    c: &Compiled<'_>,
    s: &ConcreteState,
    dom: &Domain,
    step: usize,
    mut emit: impl FnMut(ConcreteState),
) -> Result<(), OracleError> {
    let mut inputs = vec![None; ts.input_vars().len()];
    let input_sorts: Vec<Sort> = c.inputs.iter().map(|(_, s)| *s).collect();
    let free_sorts: Vec<Sort> = c.unconstrained.iter().map(|(_, s)| *s).collect();
    for_each_assignment(&input_sorts, dom, |ys| {
        for ((y, _), v) in c.inputs.iter().zip(ys) {
            inputs[y.0] = Some(*v);
        }
        let env = StepEnv { current: s, next: None, inputs: &inputs };
        for g in &c.guard {
            if !holds(g, &env, c.clause, step)? {
                return Ok(());
            }
        }
        let mut base = s.clone();
        for (v, a) in &c.assigns {
            let value = match a {
                Assign::Const(b) => Some(Value::Bool(*b)),
                Assign::Copy(w) => s.get(*w),
                Assign::Expr(e) => match eval_ground(e, &env) {
                    Ok(x) => Some(x),
                    Err(EvalError::Overflow) => return Ok(()),
                    Err(EvalError::UnsetRead(var)) => {
                        return Err(OracleError::UnsetRead { clause: c.clause, var, step })
                    }
                    Err(e) => return Err(e.into()),
                },
            };
            base.set(*v, value);
        }
        for_each_assignment(&free_sorts, dom, |vals| {
            let mut next = base.clone();
            for ((v, _), x) in c.unconstrained.iter().zip(vals) {
                next.set(*v, Some(*x));
            }
            if next.places.iter().flatten().any(|x| !dom.contains(*x)) {
                return Ok(());
            }
            let env = StepEnv { current: s, next: Some(&next), inputs: &inputs };
            for r in &c.residual {
                if !holds(r, &env, c.clause, step)? {
                    return Ok(());
                }
            }
            emit(next);
            Ok(())
        })
    })
}

/// The successors of `s` under disjunct `index` alone, sorted and
/// deduplicated. Places of `s` may be unset.
pub fn successors_of(
    ts: &TransitionSystem,
    index: usize,
    s: &ConcreteState,
    dom: &Domain,
) -> Result<Vec<ConcreteState>, OracleError> {
    let c = compile(ts, index);
    let mut out = Vec::new();
    successors(ts, &c, s, dom, 1, |n| out.push(n))?;
    out.sort();
    out.dedup();
    Ok(out)
}

/// Breadth-first exploration from the initial state for up to `max_steps`
/// transitions.
pub fn reach(
    ts: &TransitionSystem,
    dom: &Domain,
    max_steps: usize,
    max_states: usize,
) -> Result<Reachability, OracleError> {
    let compiled: Vec<Compiled<'_>> = (0..ts.disjuncts.len()).map(|i| compile(ts, i)).collect();
    let init = ConcreteState::initial(ts);
    let mut seen: HashMap<ConcreteState, usize> = HashMap::new();
    let mut states = vec![(init.clone(), 0)];
    seen.insert(init, 0);
    let mut anomalies = Vec::new();
    let mut frontier_start = 0;

    for step in 1..=max_steps {
        let frontier_end = states.len();
        if frontier_start == frontier_end {
            break;
        }
        for si in frontier_start..frontier_end {
            let s = states[si].0.clone();
            for c in &compiled {
                let mut found = Vec::new();
                successors(ts, c, &s, dom, step, |n| found.push(n))?;
                for n in found {
                    if seen.contains_key(&n) {
                        continue;
                    }
                    record_anomalies(ts, c.clause, &s, &n, step, &mut anomalies);
                    seen.insert(n.clone(), step);
                    states.push((n, step));
                    if states.len() > max_states {
                        return Err(OracleError::BudgetExceeded { what: "states", limit: max_states });
                    }
                }
            }
        }
        frontier_start = frontier_end;
    }
    Ok(Reachability { states, anomalies })
}

fn record_anomalies(
    ts: &TransitionSystem,
    clause: usize,
    from: &ConcreteState,
    to: &ConcreteState,
    step: usize,
    out: &mut Vec<Anomaly>,
) {
    for (r, (&before, &after)) in from.flags.iter().zip(&to.flags).enumerate() {
        let relation = RelId(r);
        if before && !after {
            let a = Anomaly::FlagCleared { clause, relation, step };
            if !out.iter().any(|b| same_kind(b, &a)) {
                out.push(a);
            }
        }
        if after && to.tuple(ts, relation).is_none() {
            let a = Anomaly::IncompletePlaces { clause, relation, step };
            if !out.iter().any(|b| same_kind(b, &a)) {
                out.push(a);
            }
        }
    }
}

/// One report per (kind, clause, relation) is enough.
fn same_kind(a: &Anomaly, b: &Anomaly) -> bool {
    match (a, b) {
        (
            Anomaly::FlagCleared { clause: c1, relation: r1, .. },
            Anomaly::FlagCleared { clause: c2, relation: r2, .. },
        )
        | (
            Anomaly::IncompletePlaces { clause: c1, relation: r1, .. },
            Anomaly::IncompletePlaces { clause: c2, relation: r2, .. },
        ) => c1 == c2 && r1 == r2,
        _ => false,
    }
}
