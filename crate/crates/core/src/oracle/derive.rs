use std::collections::HashMap;

use super::{eval_ground, for_each_assignment, Domain, EvalError, OracleError, Valuation, Value};
use crate::horn::{HornClause, HornSystem};
use crate::term::{RelId, Sort, TermKind, VarRef};

/// A derived tuple of a relation, with the length of its shortest derivation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fact {
    pub relation: RelId,
    pub tuple: Vec<Value>,
    pub depth: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Derivation {
    facts: Vec<Fact>,
    index: HashMap<(RelId, Vec<Value>), usize>,
}

impl Derivation {
    /// Facts in the order they were first derived.
    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn depth_of(&self, relation: RelId, tuple: &[Value]) -> Option<usize> {
        self.index.get(&(relation, tuple.to_vec())).map(|&i| self.facts[i].depth)
    }

    pub fn tuples(&self, relation: RelId) -> impl Iterator<Item = &Fact> {
        self.facts.iter().filter(move |f| f.relation == relation)
    }

    fn insert(&mut self, relation: RelId, tuple: Vec<Value>, depth: usize) -> bool {
        let key = (relation, tuple);
        if self.index.contains_key(&key) {
            return false;
        }
        self.index.insert(key.clone(), self.facts.len());
        self.facts.push(Fact { relation, tuple: key.1, depth });
        true
    }
}

struct Bindings<'a> {
    names: &'a [(String, Sort)],
    values: &'a [Value],
}

impl Valuation for Bindings<'_> {
    fn lookup(&self, var: VarRef<'_>) -> Result<Value, EvalError> {
        match var {
            VarRef::Bound(n) => self
                .names
                .iter()
                .position(|(m, _)| m == n)
                .map(|i| self.values[i])
                .ok_or_else(|| EvalError::UnassignedVariable(n.into())),
            other => Err(EvalError::UnassignedVariable(format!("{other:?}"))),
        }
    }
}

/// `Ok(None)` for a pruned instance (overflow); other errors propagate.
fn pruned<T>(r: Result<T, EvalError>) -> Result<Option<T>, EvalError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(EvalError::Overflow) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Fire `clause` under a full assignment of its quantified variables.
/// Returns the head tuple if the body holds and every head value lies in
/// the domain.
fn fire(
    clause: &HornClause,
    values: &[Value],
    matched: Option<&[Value]>,
    dom: &Domain,
) -> Result<Option<(RelId, Vec<Value>)>, EvalError> {
    let env = Bindings { names: &clause.qvars, values };
    if let (Some(atom), Some(tuple)) = (&clause.body_atom, matched) {
        for (a, want) in atom.args().iter().zip(tuple) {
            match pruned(eval_ground(a, &env))? {
                Some(v) if v == *want => {}
                _ => return Ok(None),
            }
        }
    }
    if pruned(eval_ground(&clause.constraint, &env))? != Some(Value::Bool(true)) {
        return Ok(None);
    }
    let head = clause.head_atom().expect("normalized clause");
    let TermKind::Rel(rel, args) = head.kind() else { unreachable!() };
    let mut tuple = Vec::with_capacity(args.len());
    for a in args {
        match pruned(eval_ground(a, &env))? {
            Some(v) if dom.contains(v) => tuple.push(v),
            _ => return Ok(None),
        }
    }
    Ok(Some((*rel, tuple)))
}

/// Bounded bottom-up evaluation by semi-naive iteration.
///
/// Round 1 fires the body-less clauses under every assignment of their
/// quantified variables. Round `d + 1` joins the clauses with a body atom
/// against the facts first derived in round `d`: quantified variables that
/// appear bare in the body atom are bound from the fact, the rest are
/// enumerated over `dom`.
pub fn derive(
    sys: &HornSystem,
    dom: &Domain,
    max_depth: usize,
    max_facts: usize,
) -> Result<Derivation, OracleError> {
    let mut out = Derivation::default();
    if max_depth == 0 {
        return Ok(out);
    }

    let add = |out: &mut Derivation, fact: Option<(RelId, Vec<Value>)>, depth: usize| {
        if let Some((rel, tuple)) = fact {
            out.insert(rel, tuple, depth);
            if out.facts.len() > max_facts {
                return Err(OracleError::BudgetExceeded { what: "facts", limit: max_facts });
            }
        }
        Ok(())
    };

    for c in sys.clauses.iter().filter(|c| c.is_fact()) {
        let sorts: Vec<Sort> = c.qvars.iter().map(|(_, s)| *s).collect();
        for_each_assignment(&sorts, dom, |vals| add(&mut out, fire(c, vals, None, dom)?, 1))?;
    }

    let rules: Vec<&HornClause> = sys.clauses.iter().filter(|c| !c.is_fact()).collect();
    let mut delta_start = 0;
    for depth in 2..=max_depth {
        let delta_end = out.facts.len();
        if delta_start == delta_end {
            break;
        }
        for fi in delta_start..delta_end {
            let fact = out.facts[fi].clone();
            for c in &rules {
                let atom = c.body_atom.as_ref().unwrap();
                let TermKind::Rel(rel, args) = atom.kind() else { unreachable!() };
                if *rel != fact.relation {
                    continue;
                }
                // Bind bare-variable arguments from the fact.
                let mut fixed: Vec<Option<Value>> = vec![None; c.qvars.len()];
                let mut consistent = true;
                for (a, v) in args.iter().zip(&fact.tuple) {
                    if let TermKind::Bound(n) = a.kind() {
                        let i = c.qvars.iter().position(|(m, _)| m == n).expect("validated");
                        match fixed[i] {
                            Some(w) if w != *v => consistent = false,
                            _ => fixed[i] = Some(*v),
                        }
                    }
                }
                if !consistent {
                    continue;
                }
                let free: Vec<usize> = (0..fixed.len()).filter(|&i| fixed[i].is_none()).collect();
                let free_sorts: Vec<Sort> = free.iter().map(|&i| c.qvars[i].1).collect();
                let mut values: Vec<Value> = fixed.iter().map(|v| v.unwrap_or(Value::Bool(false))).collect();
                for_each_assignment(&free_sorts, dom, |vals| {
                    for (&i, v) in free.iter().zip(vals) {
                        values[i] = *v;
                    }
                    add(&mut out, fire(c, &values, Some(&fact.tuple), dom)?, depth)
                })?;
            }
        }
        delta_start = delta_end;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::load_system;

    const WORKED: &str = include_str!("../../tests/data/worked_example.smt2");

    fn ints(d: &Derivation, rel: usize) -> Vec<(i64, usize)> {
        let mut v: Vec<(i64, usize)> =
            d.tuples(RelId(rel)).map(|f| (f.tuple[0].as_int().unwrap(), f.depth)).collect();
        v.sort();
        v
    }

    #[test]
    fn worked_facts() {
        let sys = load_system(WORKED, None).unwrap();
        let d = derive(&sys, &Domain::new(0, 16).unwrap(), 10, 1000).unwrap();
        assert_eq!(d.depth_of(RelId(0), &[]), Some(1));
        assert_eq!(ints(&d, 1), vec![(0, 2), (3, 3), (6, 4)]);
        assert_eq!(ints(&d, 2), vec![(6, 5)]);
        assert_eq!(d.tuples(sys.query).count(), 0);
    }

    #[test]
    fn worked_facts_small_domain() {
        let sys = load_system(WORKED, None).unwrap();
        let d = derive(&sys, &Domain::new(0, 4).unwrap(), 10, 1000).unwrap();
        assert_eq!(ints(&d, 1), vec![(0, 2), (3, 3)]);
        assert_eq!(ints(&d, 2), vec![]);
    }

    #[test]
    fn depth_bound_truncates() {
        let sys = load_system(WORKED, None).unwrap();
        let d = derive(&sys, &Domain::new(0, 16).unwrap(), 3, 1000).unwrap();
        assert_eq!(ints(&d, 1), vec![(0, 2), (3, 3)]);
        assert!(derive(&sys, &Domain::new(0, 16).unwrap(), 0, 1000).unwrap().facts().is_empty());
    }

    #[test]
    fn query_fact() {
        let sys = load_system("(set-logic HORN)(assert false)", None).unwrap();
        let d = derive(&sys, &Domain::default(), 5, 10).unwrap();
        assert_eq!(d.depth_of(sys.query, &[]), Some(1));
    }

    #[test]
    fn fact_budget() {
        let src = "(set-logic HORN)(declare-fun A (Int) Bool)(assert (forall ((x Int)) (A x)))";
        let sys = load_system(src, None).unwrap();
        let err = derive(&sys, &Domain::default(), 3, 5).unwrap_err();
        assert_eq!(err, OracleError::BudgetExceeded { what: "facts", limit: 5 });
    }

    /// Brute force: iterate the immediate-consequence operator over every
    /// rule instance, without the bare-variable binding shortcut.
    #[test]
    fn matches_naive_iteration() {
        let src = "(set-logic HORN)(declare-fun A (Int Int) Bool)(declare-fun B (Int) Bool)
            (assert (A 0 1))
            (assert (forall ((x Int) (y Int)) (=> (and (A x y) (< x 3)) (A (+ x 1) (* 2 y)))))
            (assert (forall ((x Int) (y Int) (z Int)) (=> (and (A x x) (> z x)) (B z))))
            (assert (forall ((x Int) (y Int)) (=> (and (A x y) (= y (+ x 1))) (B (- y)))))";
        let sys = load_system(src, None).unwrap();
        let dom = Domain::new(-3, 6).unwrap();
        let d = derive(&sys, &dom, 6, 10_000).unwrap();

        let mut known: HashMap<(RelId, Vec<Value>), usize> = HashMap::new();
        for depth in 1..=6 {
            let prev = known.clone();
            for c in &sys.clauses {
                let sorts: Vec<Sort> = c.qvars.iter().map(|(_, s)| *s).collect();
                for_each_assignment::<()>(&sorts, &dom, |vals| {
                    let env = Bindings { names: &c.qvars, values: vals };
                    if let Some(atom) = &c.body_atom {
                        let TermKind::Rel(r, args) = atom.kind() else { unreachable!() };
                        let tuple: Option<Vec<Value>> =
                            args.iter().map(|a| eval_ground(a, &env).ok()).collect();
                        match tuple {
                            Some(t) if prev.contains_key(&(*r, t.clone())) => {}
                            _ => return Ok(()),
                        }
                    }
                    if let Some((r, t)) = fire(c, vals, None, &dom).unwrap() {
                        known.entry((r, t)).or_insert(depth);
                    }
                    Ok(())
                })
                .unwrap();
            }
        }
        assert_eq!(known.len(), d.facts().len());
        for f in d.facts() {
            assert_eq!(known.get(&(f.relation, f.tuple.clone())), Some(&f.depth), "{f:?}");
        }
    }
}
