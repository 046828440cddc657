//! Linear Horn clauses to a symbolic transition system.
//!
//! Every relation `R` gets a Boolean flag (`R` has been derived) and one
//! place variable per argument position (the last tuple written to `R`).
//! Each quantified variable `x` of clause `j` becomes a primary input
//! `Y[j, x]`. Clause `j` turns into one transition disjunct
//!
//! ```text
//! [[body_atom /\ constraint]] /\ Prime([[head]]) /\ preserve(X \ Vars(head))
//! ```
//!
//! The initial states have every flag false, and the property is the
//! negated flag of the query relation.

use std::borrow::Cow;
use std::collections::{BTreeSet, HashMap};

use crate::horn::{HornClause, HornSystem};
use crate::term::{InputVarId, Names, RelId, Relation, Sort, StateVarId, Term, TermKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StateVarKind {
    Flag(RelId),
    /// `Place(R, i)` with `i` 1-based.
    Place(RelId, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StateVar {
    pub kind: StateVarKind,
    pub sort: Sort,
    pub ordinal: StateVarId,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InputVar {
    pub clause_id: usize,
    pub var_name: String,
    pub sort: Sort,
    pub id: InputVarId,
}

/// State and input variable universe with lookup tables.
///
/// Ordering: all flags in relation order, then places grouped by relation.
/// Inputs are ordered by (clause, quantified variable).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Layout {
    pub state_vars: Vec<StateVar>,
    pub input_vars: Vec<InputVar>,
    place_base: Vec<usize>,
}

impl Layout {
    pub fn num_relations(&self) -> usize {
        self.place_base.len()
    }

    pub fn flag(&self, rel: RelId) -> StateVarId {
        StateVarId(rel.0)
    }

    /// Place `i` (1-based) of `rel`.
    pub fn place(&self, rel: RelId, i: usize) -> StateVarId {
        debug_assert!(i >= 1);
        StateVarId(self.place_base[rel.0] + i - 1)
    }

    pub fn places(&self, rel: RelId) -> impl Iterator<Item = StateVarId> {
        let start = self.place_base[rel.0];
        let end = self.place_base.get(rel.0 + 1).copied().unwrap_or(self.state_vars.len());
        (start..end).map(StateVarId)
    }

    pub fn state_var(&self, id: StateVarId) -> &StateVar {
        &self.state_vars[id.0]
    }

    pub fn state_term(&self, id: StateVarId) -> Term {
        Term::state(id, self.state_vars[id.0].sort)
    }

    pub fn primed_term(&self, id: StateVarId) -> Term {
        Term::primed(id, self.state_vars[id.0].sort)
    }

    pub fn input_term(&self, id: InputVarId) -> Term {
        Term::input(id, self.input_vars[id.0].sort)
    }

    fn input_of(&self, clause_id: usize, name: &str) -> Option<InputVarId> {
        self.input_vars.iter().find(|v| v.clause_id == clause_id && v.var_name == name).map(|v| v.id)
    }

    /// `{flag(R)} ∪ places(R)` for the relation of a head atom.
    pub fn head_vars(&self, rel: RelId) -> BTreeSet<StateVarId> {
        std::iter::once(self.flag(rel)).chain(self.places(rel)).collect()
    }
}

pub fn build_state_vars(sys: &HornSystem) -> Layout {
    let mut state_vars: Vec<StateVar> = sys
        .relations
        .iter()
        .map(|r| StateVar {
            kind: StateVarKind::Flag(r.index),
            sort: Sort::Bool,
            ordinal: StateVarId(r.index.0),
        })
        .collect();
    let mut place_base = Vec::with_capacity(sys.relations.len());
    for r in &sys.relations {
        place_base.push(state_vars.len());
        for (i, &sort) in r.param_sorts.iter().enumerate() {
            let ordinal = StateVarId(state_vars.len());
            state_vars.push(StateVar { kind: StateVarKind::Place(r.index, i + 1), sort, ordinal });
        }
    }
    let mut input_vars = Vec::new();
    for c in &sys.clauses {
        for (name, sort) in &c.qvars {
            let id = InputVarId(input_vars.len());
            input_vars.push(InputVar { clause_id: c.id, var_name: name.clone(), sort: *sort, id });
        }
    }
    Layout { state_vars, input_vars, place_base }
}

/// The term mapping `[[.]]` for a term of clause `clause_id`.
pub fn translate_term(t: &Term, clause_id: usize, layout: &Layout) -> Term {
    match t.kind() {
        TermKind::Bound(name) => {
            let id = layout
                .input_of(clause_id, name)
                .unwrap_or_else(|| panic!("`{name}` is not quantified in clause {clause_id}"));
            layout.input_term(id)
        }
        TermKind::Rel(rel, args) => {
            let mut parts = vec![layout.state_term(layout.flag(*rel))];
            for (i, a) in args.iter().enumerate() {
                let place = layout.state_term(layout.place(*rel, i + 1));
                parts.push(Term::equal(place, translate_term(a, clause_id, layout)));
            }
            Term::conj(parts)
        }
        TermKind::App(op, args) => {
            let args = args.iter().map(|a| translate_term(a, clause_id, layout)).collect();
            Term::app(*op, args).expect("translation preserves sorts")
        }
        _ => t.clone(),
    }
}

/// Replace every state variable by its next-state copy.
pub fn prime(t: &Term) -> Term {
    debug_assert!(!t.contains_primed());
    t.map_leaves(&mut |leaf| match leaf.kind() {
        TermKind::State(v) => Some(Term::primed(*v, leaf.sort())),
        _ => None,
    })
}

/// `/\ x' = x` over `vars`, in ordinal order.
pub fn preserve<'a>(vars: impl IntoIterator<Item = &'a StateVarId>, layout: &Layout) -> Term {
    let vars: BTreeSet<StateVarId> = vars.into_iter().copied().collect();
    Term::conj(vars.into_iter().map(|v| Term::equal(layout.primed_term(v), layout.state_term(v))))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TransitionDisjunct {
    pub source_clause: usize,
    pub guard: Term,
    pub update: Term,
    pub frame: Term,
}

impl TransitionDisjunct {
    /// `guard /\ update /\ frame` as one flat conjunction.
    pub fn formula(&self) -> Term {
        Term::conj([self.guard.clone(), self.update.clone(), self.frame.clone()])
    }
}

pub fn translate_clause(clause: &HornClause, layout: &Layout) -> TransitionDisjunct {
    let head = clause.head_atom().expect("normalized clause has a relation head");
    let TermKind::Rel(head_rel, _) = head.kind() else { unreachable!() };
    let mut guard = Vec::new();
    if let Some(a) = &clause.body_atom {
        guard.push(translate_term(a, clause.id, layout));
    }
    guard.push(translate_term(&clause.constraint, clause.id, layout));
    let written = layout.head_vars(*head_rel);
    let kept: Vec<StateVarId> =
        layout.state_vars.iter().map(|v| v.ordinal).filter(|v| !written.contains(v)).collect();
    TransitionDisjunct {
        source_clause: clause.id,
        guard: Term::conj(guard),
        update: prime(&translate_term(head, clause.id, layout)),
        frame: preserve(&kept, layout),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TransitionSystem {
    pub relations: Vec<Relation>,
    pub layout: Layout,
    pub init: Term,
    pub disjuncts: Vec<TransitionDisjunct>,
    pub property: Term,
    pub query: RelId,
}

impl TransitionSystem {
    pub fn state_vars(&self) -> &[StateVar] {
        &self.layout.state_vars
    }

    pub fn input_vars(&self) -> &[InputVar] {
        &self.layout.input_vars
    }

    /// The transition relation: disjunction of all disjuncts, in clause order.
    pub fn trans(&self) -> Term {
        Term::disj(self.disjuncts.iter().map(TransitionDisjunct::formula))
    }

    pub fn relation(&self, id: RelId) -> &Relation {
        &self.relations[id.0]
    }

    pub fn names(&self) -> VarNames {
        VarNames::new(self)
    }
}

pub fn translate_system(sys: &HornSystem) -> TransitionSystem {
    let layout = build_state_vars(sys);
    let disjuncts = sys.clauses.iter().map(|c| translate_clause(c, &layout)).collect();
    let init = Term::conj(sys.relations.iter().map(|r| Term::not(layout.state_term(layout.flag(r.index)))));
    let property = Term::not(layout.state_term(layout.flag(sys.query)));
    TransitionSystem { relations: sys.relations.clone(), layout, init, disjuncts, property, query: sys.query }
}

/// Inline input variables that a guard pins to a place variable.
///
/// For every top-level guard conjunct `P = Y` (either orientation) whose
/// input `Y` has not been inlined yet, `Y` is replaced by `P` throughout
/// the disjunct and the conjunct is dropped. Inputs that no longer occur
/// anywhere are removed from the system and the rest renumbered.
pub fn simplify_inline(ts: &TransitionSystem) -> TransitionSystem {
    let layout = &ts.layout;
    let mut disjuncts = Vec::with_capacity(ts.disjuncts.len());
    for d in &ts.disjuncts {
        let mut subst: HashMap<InputVarId, Term> = HashMap::new();
        let mut kept = Vec::new();
        for c in d.guard.conjuncts() {
            if let Some((place, input)) = place_input_equality(c) {
                if let std::collections::hash_map::Entry::Vacant(e) = subst.entry(input) {
                    e.insert(layout.state_term(place));
                    continue;
                }
            }
            kept.push(c.clone());
        }
        let apply = |t: &Term| {
            t.map_leaves(&mut |leaf| match leaf.kind() {
                TermKind::Input(y) => subst.get(y).cloned(),
                _ => None,
            })
        };
        disjuncts.push(TransitionDisjunct {
            source_clause: d.source_clause,
            guard: Term::conj(kept.iter().map(apply)),
            update: apply(&d.update),
            frame: apply(&d.frame),
        });
    }

    let used: BTreeSet<InputVarId> =
        disjuncts.iter().flat_map(|d: &TransitionDisjunct| d.formula().input_vars()).collect();
    let mut renumber = HashMap::new();
    let mut input_vars = Vec::new();
    for v in &layout.input_vars {
        if used.contains(&v.id) {
            let id = InputVarId(input_vars.len());
            renumber.insert(v.id, id);
            input_vars.push(InputVar { id, ..v.clone() });
        }
    }
    let rename = |t: &Term| {
        t.map_leaves(&mut |leaf| match leaf.kind() {
            TermKind::Input(y) => Some(Term::input(renumber[y], leaf.sort())),
            _ => None,
        })
    };
    let disjuncts = disjuncts
        .into_iter()
        .map(|d| TransitionDisjunct {
            source_clause: d.source_clause,
            guard: rename(&d.guard),
            update: rename(&d.update),
            frame: rename(&d.frame),
        })
        .collect();

    TransitionSystem { layout: Layout { input_vars, ..layout.clone() }, disjuncts, ..ts.clone() }
}

fn place_input_equality(t: &Term) -> Option<(StateVarId, InputVarId)> {
    let TermKind::App(crate::term::Op::Eq, args) = t.kind() else { return None };
    match (args.first()?.kind(), args.get(1)?.kind(), args.len()) {
        (TermKind::State(p), TermKind::Input(y), 2) | (TermKind::Input(y), TermKind::State(p), 2) => {
            Some((*p, *y))
        }
        _ => None,
    }
}

/// For every disjunct and state variable, how many times the variable
/// occurs primed in `update` and `frame` together. A well-formed
/// translation has exactly one occurrence for each pair.
pub fn next_state_occurrences(ts: &TransitionSystem) -> Vec<Vec<usize>> {
    ts.disjuncts
        .iter()
        .map(|d| {
            let mut counts = vec![0; ts.layout.state_vars.len()];
            for v in d.update.primed_vars().into_iter().chain(d.frame.primed_vars()) {
                counts[v.0] += 1;
            }
            counts
        })
        .collect()
}

/// Variable names used in emitted text:
/// `flag.R`, `place.R.i`, a `.next` suffix for next-state copies, and
/// `in.j.x` for inputs. Clashing names get an `@k` suffix.
#[derive(Clone, Debug)]
pub struct VarNames {
    state: Vec<String>,
    next: Vec<String>,
    input: Vec<String>,
    relation: Vec<String>,
}

impl VarNames {
    pub fn new(ts: &TransitionSystem) -> Self {
        let mut state = Vec::new();
        for v in ts.state_vars() {
            state.push(match v.kind {
                StateVarKind::Flag(r) => format!("flag.{}", ts.relation(r).name),
                StateVarKind::Place(r, i) => format!("place.{}.{i}", ts.relation(r).name),
            });
        }
        let mut next: Vec<String> = state.iter().map(|s| format!("{s}.next")).collect();
        let mut input: Vec<String> =
            ts.input_vars().iter().map(|v| format!("in.{}.{}", v.clause_id, v.var_name)).collect();

        let mut seen = std::collections::HashSet::new();
        for name in state.iter_mut().chain(next.iter_mut()).chain(input.iter_mut()) {
            if !seen.insert(name.clone()) {
                let fresh = (1..).map(|k| format!("{name}@{k}")).find(|n| !seen.contains(n)).unwrap();
                seen.insert(fresh.clone());
                *name = fresh;
            }
        }
        let relation = ts.relations.iter().map(|r| r.name.clone()).collect();
        VarNames { state, next, input, relation }
    }
}

impl Names for VarNames {
    fn state(&self, id: StateVarId) -> Cow<'_, str> {
        Cow::Borrowed(&self.state[id.0])
    }
    fn primed(&self, id: StateVarId) -> Cow<'_, str> {
        Cow::Borrowed(&self.next[id.0])
    }
    fn input(&self, id: InputVarId) -> Cow<'_, str> {
        Cow::Borrowed(&self.input[id.0])
    }
    fn relation(&self, id: RelId) -> Cow<'_, str> {
        Cow::Borrowed(&self.relation[id.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::load_system;
    use crate::term::Op;

    pub(crate) const WORKED: &str = include_str!("../tests/data/worked_example.smt2");

    fn worked() -> (HornSystem, TransitionSystem) {
        let sys = load_system(WORKED, None).unwrap();
        let ts = translate_system(&sys);
        (sys, ts)
    }

    fn show(ts: &TransitionSystem, t: &Term) -> String {
        t.display(&ts.names()).to_string()
    }

    #[test]
    fn worked_state_vars() {
        let (_, ts) = worked();
        let names = ts.names();
        let xs: Vec<String> = ts.state_vars().iter().map(|v| names.state(v.ordinal).into_owned()).collect();
        assert_eq!(xs, ["flag.E", "flag.L", "flag.M", "flag.q.U", "place.L.1", "place.M.1"]);
        let ys: Vec<String> = ts.input_vars().iter().map(|v| names.input(v.id).into_owned()).collect();
        assert_eq!(ys, ["in.2.x", "in.3.x", "in.4.x"]);
        assert!(ts.input_vars().iter().all(|v| v.sort == Sort::Int));
    }

    #[test]
    fn only_query_relation() {
        let sys = load_system("(set-logic HORN)", None).unwrap();
        let layout = build_state_vars(&sys);
        assert_eq!(layout.state_vars.len(), 1);
        assert!(layout.input_vars.is_empty());
        let ts = translate_system(&sys);
        assert_eq!(ts.trans(), Term::ff());
        assert_eq!(show(&ts, &ts.init), "(not flag.q.U)");
    }

    #[test]
    fn term_mapping() {
        let (sys, ts) = worked();
        let c = &sys.clauses[2];
        let atom = translate_term(c.body_atom.as_ref().unwrap(), 2, &ts.layout);
        assert_eq!(show(&ts, &atom), "(and flag.L (= place.L.1 in.2.x))");
        assert_eq!(show(&ts, &translate_term(&c.constraint, 2, &ts.layout)), "(< in.2.x 5)");
        let head = translate_term(c.head_atom().unwrap(), 2, &ts.layout);
        assert_eq!(show(&ts, &head), "(and flag.L (= place.L.1 (+ in.2.x 3)))");
    }

    #[test]
    fn priming() {
        let (sys, ts) = worked();
        let u = ts.layout.state_term(ts.layout.flag(sys.query));
        assert_eq!(show(&ts, &prime(&u)), "flag.q.U.next");
        let eq = Term::equal(
            ts.layout.state_term(ts.layout.place(RelId(1), 1)),
            Term::app(Op::Add, vec![ts.layout.input_term(InputVarId(0)), Term::int(3)]).unwrap(),
        );
        assert_eq!(show(&ts, &prime(&eq)), "(= place.L.1.next (+ in.2.x 3))");
        assert_eq!(prime(&Term::tt()), Term::tt());
    }

    #[test]
    fn preserve_sets() {
        let (_, ts) = worked();
        assert_eq!(preserve(&[], &ts.layout), Term::tt());
        let all_but_e: Vec<StateVarId> = (1..6).map(StateVarId).collect();
        assert_eq!(
            show(&ts, &preserve(&all_but_e, &ts.layout)),
            "(and (= flag.L.next flag.L) (= flag.M.next flag.M) (= flag.q.U.next flag.q.U) \
             (= place.L.1.next place.L.1) (= place.M.1.next place.M.1))"
        );
        assert_eq!(show(&ts, &preserve(&[StateVarId(5)], &ts.layout)), "(= place.M.1.next place.M.1)");
    }

    #[test]
    fn worked_disjuncts() {
        let (_, ts) = worked();
        let d: Vec<[String; 3]> = ts
            .disjuncts
            .iter()
            .map(|d| [show(&ts, &d.guard), show(&ts, &d.update), show(&ts, &d.frame)])
            .collect();
        assert_eq!(d[0][0], "true");
        assert_eq!(d[0][1], "flag.E.next");
        assert_eq!(d[1][0], "flag.E");
        assert_eq!(d[1][1], "(and flag.L.next (= place.L.1.next 0))");
        assert_eq!(
            d[1][2],
            "(and (= flag.E.next flag.E) (= flag.M.next flag.M) (= flag.q.U.next flag.q.U) (= place.M.1.next place.M.1))"
        );
        assert_eq!(d[3][0], "(and flag.L (= place.L.1 in.3.x) (not (< in.3.x 5)))");
        assert_eq!(d[3][1], "(and flag.M.next (= place.M.1.next in.3.x))");
        assert_eq!(
            d[3][2],
            "(and (= flag.E.next flag.E) (= flag.L.next flag.L) (= flag.q.U.next flag.q.U) (= place.L.1.next place.L.1))"
        );
        assert_eq!(d[4][1], "flag.q.U.next");
        assert_eq!(
            d[4][2],
            "(and (= flag.E.next flag.E) (= flag.L.next flag.L) (= flag.M.next flag.M) \
             (= place.L.1.next place.L.1) (= place.M.1.next place.M.1))"
        );
        assert_eq!(show(&ts, &ts.init), "(and (not flag.E) (not flag.L) (not flag.M) (not flag.q.U))");
        assert_eq!(show(&ts, &ts.property), "(not flag.q.U)");
    }

    #[test]
    fn inlining_matches_hand_derivation() {
        let (_, ts) = worked();
        let inl = simplify_inline(&ts);
        assert!(inl.input_vars().is_empty());
        let d = &inl.disjuncts[2];
        assert_eq!(show(&inl, &d.guard), "(and flag.L (< place.L.1 5))");
        assert_eq!(show(&inl, &d.update), "(and flag.L.next (= place.L.1.next (+ place.L.1 3)))");
        let d = &inl.disjuncts[3];
        assert_eq!(show(&inl, &d.guard), "(and flag.L (not (< place.L.1 5)))");
        assert_eq!(show(&inl, &d.update), "(and flag.M.next (= place.M.1.next place.L.1))");
        assert_eq!(show(&inl, &inl.disjuncts[4].guard), "(and flag.M (not (< place.M.1 7)))");
    }

    #[test]
    fn inlining_keeps_head_only_inputs() {
        let src = "(set-logic HORN)(declare-fun A (Int) Bool)
                   (assert (forall ((y Int)) (=> (> y 0) (A y))))";
        let ts = translate_system(&load_system(src, None).unwrap());
        let inl = simplify_inline(&ts);
        assert_eq!(inl, ts);
    }

    #[test]
    fn totality_on_worked_example() {
        let (_, ts) = worked();
        for counts in next_state_occurrences(&ts) {
            assert!(counts.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn name_collisions_are_resolved() {
        let src = "(set-logic HORN)(declare-fun x () Bool)(declare-fun x.next () Bool)";
        let ts = translate_system(&load_system(src, None).unwrap());
        let names = ts.names();
        assert_eq!(names.state(StateVarId(1)), "flag.x.next");
        assert_eq!(names.primed(StateVarId(0)), "flag.x.next@1");
    }
}
