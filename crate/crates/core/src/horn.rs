//! Linear Horn clauses: clausification of asserted formulas, the linearity
//! check, query normalization and structural validation.

use std::fmt;

use thiserror::Error;

use crate::script::{
    parse_binders, parse_term, push_let_bindings, strip_annotations, RawScript, Scope, ScriptError, Signature,
};
use crate::sexpr::{SExpr, Span};
use crate::term::{RelId, Relation, Sort, Term, TermKind};

/// Base name for the synthesized query relation.
pub const QUERY_NAME: &str = "q.U";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HornError {
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("clause head must be a relation atom or `false`")]
    HeadNotAtomOrFalse { span: Span },
    #[error("clause {id} is nonlinear: {count} relation atoms in its body")]
    NonlinearClause { id: usize, count: usize, span: Option<Span> },
    #[error("query relation `{name}` is not a declared 0-ary relation")]
    BadQueryRelation { name: String },
    #[error("invalid Horn system:\n{}", render_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
}

impl HornError {
    pub fn span(&self) -> Option<Span> {
        match self {
            HornError::Script(e) => e.span(),
            HornError::HeadNotAtomOrFalse { span } => Some(*span),
            HornError::NonlinearClause { span, .. } => *span,
            HornError::BadQueryRelation { .. } => None,
            HornError::Invalid(d) => d.first().and_then(|d| d.span),
        }
    }
}

fn render_diagnostics(ds: &[Diagnostic]) -> String {
    ds.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub clause: Option<usize>,
    pub span: Option<Span>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.clause {
            Some(id) => write!(f, "clause {id}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Head {
    /// A relation atom `R(t1, ..., tn)`.
    Atom(Term),
    /// The literal `false`: the clause is a query.
    QueryFalse,
}

/// A clause as read from the input, before the linearity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseDraft {
    pub qvars: Vec<(String, Sort)>,
    pub body_atoms: Vec<Term>,
    pub constraint: Term,
    pub head: Head,
    pub span: Option<Span>,
}

/// `forall qvars. body_atom /\ constraint => head` with at most one body atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HornClause {
    pub id: usize,
    pub qvars: Vec<(String, Sort)>,
    pub body_atom: Option<Term>,
    pub constraint: Term,
    pub head: Head,
    pub span: Option<Span>,
}

impl HornClause {
    pub fn head_atom(&self) -> Option<&Term> {
        match &self.head {
            Head::Atom(t) => Some(t),
            Head::QueryFalse => None,
        }
    }

    pub fn is_fact(&self) -> bool {
        self.body_atom.is_none()
    }

    pub fn qvar_sort(&self, name: &str) -> Option<Sort> {
        self.qvars.iter().find(|(n, _)| n == name).map(|(_, s)| *s)
    }
}

/// Split an asserted formula into quantified variables, body atoms,
/// interpreted constraint and head.
///
/// Accepted shapes: `(forall (..) F)`, `(not (exists (..) B))` (a query
/// with body `B`), or a quantifier-free `F`, where `F` is `(=> B H)` or a
/// bare head `H`. Body atoms may sit under nested `and`s only.
pub fn clausify(assert: &SExpr, sig: &Signature) -> Result<ClauseDraft, HornError> {
    let mut scope = Scope::default();
    let mut qvars = Vec::new();
    let mut node = strip_annotations(assert);

    let mut query_body = None;
    if let Some(args) = node.app("forall") {
        let [binders, body] = args else {
            return Err(ScriptError::Malformed { what: "forall", span: node.span }.into());
        };
        qvars = parse_binders(binders)?;
        node = strip_annotations(body);
    } else if let Some([inner]) = node.app("not") {
        if let Some(args) = strip_annotations(inner).app("exists") {
            let [binders, body] = args else {
                return Err(ScriptError::Malformed { what: "exists", span: inner.span }.into());
            };
            qvars = parse_binders(binders)?;
            query_body = Some(body);
        }
    }
    for (n, s) in &qvars {
        scope.push_var(n, *s);
    }

    let mut body_parts: Vec<&SExpr> = Vec::new();
    let head_sexpr = match query_body {
        Some(body) => {
            body_parts.push(body);
            None
        }
        None => {
            // Peel `let`s wrapping the implication, and flatten
            // `(=> a b (=> c d))` into body [a, b, c] and head d.
            loop {
                node = strip_annotations(node);
                if let Some([bindings, inner]) = node.app("let") {
                    push_let_bindings(bindings, &mut scope, sig)?;
                    node = inner;
                } else if let Some(args) = node.app("=>") {
                    let Some((last, init)) = args.split_last().filter(|(_, i)| !i.is_empty()) else {
                        return Err(ScriptError::Malformed { what: "implication", span: node.span }.into());
                    };
                    body_parts.extend(init);
                    node = last;
                } else if node.app("forall").is_some() || node.app("exists").is_some() {
                    return Err(ScriptError::NestedQuantifier { span: node.span }.into());
                } else {
                    break;
                }
            }
            Some(node)
        }
    };

    let mut atoms = Vec::new();
    let mut interpreted = Vec::new();
    for part in body_parts {
        flatten_body(part, &mut scope, sig, &mut atoms, &mut interpreted)?;
    }

    let head = match head_sexpr {
        None => Head::QueryFalse,
        Some(h) if h.atom() == Some("false") => Head::QueryFalse,
        Some(h) => {
            let t = parse_term(h, &mut scope, sig)?;
            if !t.is_rel_atom() {
                return Err(HornError::HeadNotAtomOrFalse { span: h.span });
            }
            Head::Atom(t)
        }
    };

    Ok(ClauseDraft {
        qvars,
        body_atoms: atoms,
        constraint: Term::conj(interpreted),
        head,
        span: Some(assert.span),
    })
}

fn flatten_body(
    e: &SExpr,
    scope: &mut Scope,
    sig: &Signature,
    atoms: &mut Vec<Term>,
    interpreted: &mut Vec<Term>,
) -> Result<(), HornError> {
    let e = strip_annotations(e);
    if let Some(children) = e.app("and") {
        for c in children {
            flatten_body(c, scope, sig, atoms, interpreted)?;
        }
        return Ok(());
    }
    if let Some([bindings, inner]) = e.app("let") {
        let mark = push_let_bindings(bindings, scope, sig)?;
        let r = flatten_body(inner, scope, sig, atoms, interpreted);
        scope.truncate(mark);
        return r;
    }
    let t = parse_term(e, scope, sig)?;
    if t.is_rel_atom() {
        atoms.push(t);
    } else {
        interpreted.push(t);
    }
    Ok(())
}

pub fn check_linear(draft: &ClauseDraft, id: usize) -> Result<(), HornError> {
    match draft.body_atoms.len() {
        0 | 1 => Ok(()),
        count => Err(HornError::NonlinearClause { id, count, span: draft.span }),
    }
}

impl ClauseDraft {
    pub fn into_clause(self, id: usize) -> Result<HornClause, HornError> {
        check_linear(&self, id)?;
        let ClauseDraft { qvars, mut body_atoms, constraint, head, span } = self;
        Ok(HornClause { id, qvars, body_atom: body_atoms.pop(), constraint, head, span })
    }
}

/// A clause set before query normalization. `query` selects an existing
/// 0-ary relation to serve as the query; otherwise a fresh one is added.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreSystem {
    pub relations: Vec<Relation>,
    pub clauses: Vec<HornClause>,
    pub query: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HornSystem {
    pub relations: Vec<Relation>,
    pub clauses: Vec<HornClause>,
    pub query: RelId,
}

impl HornSystem {
    pub fn relation(&self, id: RelId) -> &Relation {
        &self.relations[id.0]
    }

    pub fn query_relation(&self) -> &Relation {
        self.relation(self.query)
    }

    pub fn sum_arity(&self) -> usize {
        self.relations.iter().map(Relation::arity).sum()
    }
}

impl From<HornSystem> for PreSystem {
    fn from(sys: HornSystem) -> Self {
        let query = Some(sys.relations[sys.query.0].name.clone());
        PreSystem { relations: sys.relations, clauses: sys.clauses, query }
    }
}

fn fresh_query_name(relations: &[Relation]) -> String {
    let taken = |n: &str| relations.iter().any(|r| r.name == n);
    if !taken(QUERY_NAME) {
        return QUERY_NAME.to_string();
    }
    (1..).map(|i| format!("{QUERY_NAME}.{i}")).find(|n| !taken(n)).expect("unbounded suffix search")
}

/// Point every `false` head at a single 0-ary query relation.
pub fn normalize_query(pre: PreSystem) -> Result<HornSystem, HornError> {
    let PreSystem { mut relations, clauses, query } = pre;
    let query = match query {
        Some(name) => match relations.iter().find(|r| r.name == name) {
            Some(r) if r.arity() == 0 => r.index,
            _ => return Err(HornError::BadQueryRelation { name }),
        },
        None => {
            let index = RelId(relations.len());
            relations.push(Relation { name: fresh_query_name(&relations), param_sorts: vec![], index });
            index
        }
    };
    let clauses = clauses
        .into_iter()
        .map(|mut c| {
            if c.head == Head::QueryFalse {
                c.head = Head::Atom(Term::rel(query, Vec::new()).unwrap());
            }
            c
        })
        .collect();
    Ok(HornSystem { relations, clauses, query })
}

/// Check every structural invariant of a normalized system.
pub fn validate(sys: &HornSystem) -> Result<(), Vec<Diagnostic>> {
    let mut out = Vec::new();
    let mut diag = |clause: Option<usize>, span: Option<Span>, message: String| {
        out.push(Diagnostic { clause, span, message });
    };

    for (i, r) in sys.relations.iter().enumerate() {
        if r.index != RelId(i) {
            diag(None, None, format!("relation `{}` has index {} at position {i}", r.name, r.index.0));
        }
        if sys.relations[..i].iter().any(|o| o.name == r.name) {
            diag(None, None, format!("relation `{}` declared twice", r.name));
        }
    }
    match sys.relations.get(sys.query.0) {
        None => diag(None, None, "query relation is not declared".into()),
        Some(q) if q.arity() != 0 => {
            diag(None, None, format!("query relation `{}` has arity {}", q.name, q.arity()))
        }
        _ => {}
    }

    for (pos, c) in sys.clauses.iter().enumerate() {
        let id = Some(c.id);
        if c.id != pos {
            diag(id, c.span, format!("clause id {} at position {pos}", c.id));
        }
        let check_atom = |what: &str, t: &Term, diag: &mut dyn FnMut(Option<usize>, Option<Span>, String)| {
            let TermKind::Rel(r, args) = t.kind() else {
                diag(id, c.span, format!("{what} is not a relation atom"));
                return;
            };
            let Some(rel) = sys.relations.get(r.0) else {
                diag(id, c.span, format!("{what} uses undeclared relation #{}", r.0));
                return;
            };
            if rel.arity() != args.len() {
                diag(
                    id,
                    c.span,
                    format!("{what} `{}` has {} arguments, expected {}", rel.name, args.len(), rel.arity()),
                );
                return;
            }
            for (i, (a, s)) in args.iter().zip(&rel.param_sorts).enumerate() {
                if a.sort() != *s || !a.sorts_consistent() || a.contains_rel_atom() {
                    diag(id, c.span, format!("{what} `{}` argument {} is ill-sorted", rel.name, i + 1));
                }
            }
        };
        if let Some(a) = &c.body_atom {
            check_atom("body atom", a, &mut diag);
        }
        match &c.head {
            Head::Atom(h) => check_atom("head", h, &mut diag),
            Head::QueryFalse => diag(id, c.span, "head is `false`; normalize the query first".into()),
        }
        if c.constraint.contains_rel_atom() {
            diag(id, c.span, "constraint mentions a relation atom".into());
        }
        if c.constraint.sort() != Sort::Bool || !c.constraint.sorts_consistent() {
            diag(id, c.span, "constraint is ill-sorted".into());
        }
        let mut parts: Vec<&Term> = vec![&c.constraint];
        parts.extend(c.body_atom.iter());
        parts.extend(c.head_atom());
        for t in parts {
            let mut bad = Vec::new();
            t.visit(&mut |s| match s.kind() {
                TermKind::Bound(n) => match c.qvar_sort(n) {
                    Some(sort) if sort == s.sort() => {}
                    Some(_) => bad.push(format!("variable `{n}` used at the wrong sort")),
                    None => bad.push(format!("variable `{n}` is not quantified")),
                },
                TermKind::State(_) | TermKind::Primed(_) | TermKind::Input(_) => {
                    bad.push("transition-system variable inside a Horn clause".into())
                }
                _ => {}
            });
            bad.sort();
            bad.dedup();
            for m in bad {
                diag(id, c.span, m);
            }
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Clausify, check linearity, normalize and validate a parsed script.
pub fn build_system(script: &RawScript, query: Option<&str>) -> Result<HornSystem, HornError> {
    let mut clauses = Vec::with_capacity(script.asserts.len());
    for (id, a) in script.asserts.iter().enumerate() {
        clauses.push(clausify(a, &script.signature)?.into_clause(id)?);
    }
    let sys = normalize_query(PreSystem {
        relations: script.signature.relations().to_vec(),
        clauses,
        query: query.map(str::to_string),
    })?;
    validate(&sys).map_err(HornError::Invalid)?;
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::parse_script;
    use crate::sexpr::{parse_one, parse_str};
    use crate::term::Op;

    const DECLS: &str = "(declare-fun E () Bool)(declare-fun L (Int) Bool)(declare-fun M (Int) Bool)";

    fn sig() -> Signature {
        parse_script(&parse_str(DECLS).unwrap()).unwrap().signature
    }

    fn draft(src: &str) -> Result<ClauseDraft, HornError> {
        clausify(&parse_one(src).unwrap(), &sig())
    }

    fn x() -> Term {
        Term::bound("x", Sort::Int)
    }

    fn rel(id: usize, args: Vec<Term>) -> Term {
        Term::rel(RelId(id), args).unwrap()
    }

    #[test]
    fn loop_clause() {
        let d = draft("(forall ((x Int)) (=> (and (L x) (< x 5)) (L (+ x 3))))").unwrap();
        assert_eq!(d.qvars, vec![("x".to_string(), Sort::Int)]);
        assert_eq!(d.body_atoms, vec![rel(1, vec![x()])]);
        assert_eq!(d.constraint, Term::app(Op::Lt, vec![x(), Term::int(5)]).unwrap());
        let plus = Term::app(Op::Add, vec![x(), Term::int(3)]).unwrap();
        assert_eq!(d.head, Head::Atom(rel(1, vec![plus])));
    }

    #[test]
    fn bare_fact() {
        let d = draft("E").unwrap();
        assert!(d.qvars.is_empty() && d.body_atoms.is_empty());
        assert_eq!(d.constraint, Term::tt());
        assert_eq!(d.head, Head::Atom(rel(0, vec![])));
    }

    #[test]
    fn query_clause_forms() {
        let d = draft("(forall ((x Int)) (=> (and (M x) (not (< x 7))) false))").unwrap();
        assert_eq!(d.body_atoms, vec![rel(2, vec![x()])]);
        assert_eq!(d.constraint.to_string(), "(not (< x 7))");
        assert_eq!(d.head, Head::QueryFalse);

        let e = draft("(not (exists ((x Int)) (and (M x) (not (< x 7)))))").unwrap();
        assert_eq!(e.qvars, d.qvars);
        assert_eq!(e.body_atoms, d.body_atoms);
        assert_eq!(e.constraint, d.constraint);
        assert_eq!(e.head, Head::QueryFalse);
    }

    #[test]
    fn nested_and_and_let() {
        let d = draft(
            "(forall ((x Int) (y Int)) (let ((z (+ x y))) (=> (and (and (L x) (> z 0)) (= y 1)) (M z))))",
        )
        .unwrap();
        assert_eq!(d.body_atoms.len(), 1);
        assert_eq!(d.constraint.to_string(), "(and (> (+ x y) 0) (= y 1))");
        assert_eq!(d.head_atom_string(), "(r2 (+ x y))");
    }

    impl ClauseDraft {
        fn head_atom_string(&self) -> String {
            match &self.head {
                Head::Atom(t) => t.to_string(),
                Head::QueryFalse => "false".into(),
            }
        }
    }

    #[test]
    fn clausify_errors() {
        assert!(matches!(
            draft("(forall ((x Int)) (=> (L x) (< x 3)))"),
            Err(HornError::HeadNotAtomOrFalse { .. })
        ));
        assert!(matches!(
            draft("(forall ((x Int)) (forall ((y Int)) (=> (L x) (L y))))"),
            Err(HornError::Script(ScriptError::NestedQuantifier { .. }))
        ));
        assert!(matches!(
            draft("(forall ((x Int)) (=> (or (L x) (M x)) E))"),
            Err(HornError::Script(ScriptError::RelAtomNotConjunctive { .. }))
        ));
        assert!(matches!(
            draft("(forall ((x Int)) (=> (not (L x)) E))"),
            Err(HornError::Script(ScriptError::RelAtomNotConjunctive { .. }))
        ));
    }

    #[test]
    fn linearity() {
        let one = draft("(forall ((x Int)) (=> (L x) (M x)))").unwrap();
        assert!(check_linear(&one, 0).is_ok());
        let none = draft("(=> true E)").unwrap();
        assert!(check_linear(&none, 1).is_ok());
        let two = draft("(forall ((x Int) (y Int)) (=> (and (L x) (M y)) E))").unwrap();
        assert!(matches!(check_linear(&two, 2), Err(HornError::NonlinearClause { id: 2, count: 2, .. })));
    }

    fn worked_pre(query: Option<&str>) -> PreSystem {
        let src = format!(
            "(set-logic HORN){DECLS}
             (assert E)
             (assert (=> E (L 0)))
             (assert (forall ((x Int)) (=> (and (L x) (< x 5)) (L (+ x 3)))))
             (assert (forall ((x Int)) (=> (and (L x) (not (< x 5))) (M x))))
             (assert (forall ((x Int)) (=> (and (M x) (not (< x 7))) false)))"
        );
        let s = parse_script(&parse_str(&src).unwrap()).unwrap();
        let clauses = s
            .asserts
            .iter()
            .enumerate()
            .map(|(i, a)| clausify(a, &s.signature).unwrap().into_clause(i).unwrap())
            .collect();
        PreSystem { relations: s.signature.relations().to_vec(), clauses, query: query.map(str::to_string) }
    }

    #[test]
    fn query_normalization() {
        let pre = worked_pre(None);
        let sys = normalize_query(pre.clone()).unwrap();
        assert_eq!(sys.relations.len(), 4);
        assert_eq!(sys.query_relation().name, "q.U");
        assert_eq!(sys.clauses.len(), pre.clauses.len());
        assert_eq!(sys.clauses[4].head, Head::Atom(rel(3, vec![])));
        for (a, b) in pre.clauses.iter().zip(&sys.clauses).take(4) {
            assert_eq!(a, b);
        }
        assert_eq!(validate(&sys), Ok(()));
    }

    #[test]
    fn normalization_is_idempotent() {
        let sys = normalize_query(worked_pre(None)).unwrap();
        let again = normalize_query(PreSystem::from(sys.clone())).unwrap();
        assert_eq!(sys, again);
    }

    #[test]
    fn fresh_name_avoids_collisions() {
        let mut pre = worked_pre(None);
        for name in ["q.U", "q.U.1"] {
            let index = RelId(pre.relations.len());
            pre.relations.push(Relation { name: name.into(), param_sorts: vec![], index });
        }
        let sys = normalize_query(pre).unwrap();
        assert_eq!(sys.query_relation().name, "q.U.2");
    }

    #[test]
    fn selected_query_relation() {
        let sys = normalize_query(worked_pre(Some("E"))).unwrap();
        assert_eq!(sys.relations.len(), 3);
        assert_eq!(sys.query, RelId(0));
        assert!(matches!(normalize_query(worked_pre(Some("L"))), Err(HornError::BadQueryRelation { .. })));
    }

    #[test]
    fn no_query_clause_still_adds_u() {
        let mut pre = worked_pre(None);
        pre.clauses.pop();
        let sys = normalize_query(pre).unwrap();
        assert_eq!(sys.relations.len(), 4);
        assert!(sys.clauses.iter().all(|c| c.head_atom() != Some(&rel(3, vec![]))));
    }

    #[test]
    fn validation_diagnostics() {
        let mut sys = normalize_query(worked_pre(None)).unwrap();
        sys.clauses[1].head = Head::Atom(rel(9, vec![]));
        sys.clauses[2].constraint = rel(0, vec![]);
        sys.clauses[3].constraint =
            Term::app(Op::Lt, vec![Term::bound("y", Sort::Int), Term::int(0)]).unwrap();
        let diags = validate(&sys).unwrap_err();
        let msgs: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        assert!(msgs.contains(&"clause 1: head uses undeclared relation #9".to_string()), "{msgs:?}");
        assert!(msgs.contains(&"clause 2: constraint mentions a relation atom".to_string()), "{msgs:?}");
        assert!(msgs.contains(&"clause 3: variable `y` is not quantified".to_string()), "{msgs:?}");
    }
}
