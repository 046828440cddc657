//! SMT-LIB command layer for the HORN logic, and the term parser.

use std::collections::HashMap;

use num_bigint::BigInt;
use thiserror::Error;

use crate::sexpr::{unquote_symbol, SExpr, SExprKind, Span};
use crate::term::{Op, RelId, Relation, Sort, SortError, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("unsupported logic `{logic}` (only HORN is accepted)")]
    UnsupportedLogic { logic: String, span: Span },
    #[error("missing `(set-logic HORN)`")]
    MissingLogic,
    #[error("unsupported sort `{sort}` (only Bool and Int are accepted)")]
    UnsupportedSort { sort: String, span: Span },
    #[error("unsupported command: {what}")]
    UnsupportedCommand { what: String, span: Span },
    #[error("relation `{name}` declared twice")]
    DuplicateRelation { name: String, span: Span },
    #[error("unknown identifier `{name}`")]
    UnknownIdentifier { name: String, span: Span },
    #[error("`{name}` expects {expected} argument(s), got {found}")]
    ArityMismatch { name: String, expected: usize, found: usize, span: Span },
    #[error("sort error: {source}")]
    SortMismatch { source: SortError, span: Span },
    #[error("relation atom under a connective other than `and`")]
    RelAtomNotConjunctive { span: Span },
    #[error("quantifier not allowed here")]
    NestedQuantifier { span: Span },
    #[error("malformed {what}")]
    Malformed { what: &'static str, span: Span },
}

impl ScriptError {
    pub fn span(&self) -> Option<Span> {
        match self {
            ScriptError::MissingLogic => None,
            ScriptError::UnsupportedLogic { span, .. }
            | ScriptError::UnsupportedSort { span, .. }
            | ScriptError::UnsupportedCommand { span, .. }
            | ScriptError::DuplicateRelation { span, .. }
            | ScriptError::UnknownIdentifier { span, .. }
            | ScriptError::ArityMismatch { span, .. }
            | ScriptError::SortMismatch { span, .. }
            | ScriptError::RelAtomNotConjunctive { span }
            | ScriptError::NestedQuantifier { span }
            | ScriptError::Malformed { span, .. } => Some(*span),
        }
    }
}

/// Relation declarations, indexed by name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    relations: Vec<Relation>,
    by_name: HashMap<String, RelId>,
}

impl Signature {
    pub fn new(relations: Vec<Relation>) -> Self {
        let by_name = relations.iter().map(|r| (r.name.clone(), r.index)).collect();
        Signature { relations, by_name }
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn into_relations(self) -> Vec<Relation> {
        self.relations
    }

    pub fn lookup(&self, name: &str) -> Option<&Relation> {
        self.by_name.get(name).map(|id| &self.relations[id.0])
    }

    /// Declare a new relation; returns `None` if the name is taken.
    pub fn declare(&mut self, name: &str, param_sorts: Vec<Sort>) -> Option<RelId> {
        if self.by_name.contains_key(name) {
            return None;
        }
        let index = RelId(self.relations.len());
        self.relations.push(Relation { name: name.to_string(), param_sorts, index });
        self.by_name.insert(name.to_string(), index);
        Some(index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawScript {
    pub logic: Option<String>,
    pub signature: Signature,
    pub asserts: Vec<SExpr>,
    pub check_sat: bool,
}

pub fn parse_script(forest: &[SExpr]) -> Result<RawScript, ScriptError> {
    let mut script =
        RawScript { logic: None, signature: Signature::default(), asserts: Vec::new(), check_sat: false };
    for cmd in forest {
        let malformed = ScriptError::Malformed { what: "command", span: cmd.span };
        let items = cmd.list().ok_or_else(|| malformed.clone())?;
        let head = items.first().and_then(SExpr::atom).ok_or_else(|| malformed.clone())?;
        let args = &items[1..];
        match head {
            "set-logic" => {
                let [logic] = args else { return Err(malformed) };
                let name = logic.symbol().ok_or(malformed)?;
                if name != "HORN" {
                    return Err(ScriptError::UnsupportedLogic { logic: name.to_string(), span: logic.span });
                }
                script.logic = Some(name.to_string());
            }
            "declare-fun" => {
                let [name, params, ret] = args else { return Err(malformed) };
                let name_str = name.symbol().ok_or_else(|| malformed.clone())?;
                let params = params.list().ok_or_else(|| malformed.clone())?;
                let param_sorts = params.iter().map(parse_sort).collect::<Result<Vec<_>, _>>()?;
                if parse_sort(ret)? != Sort::Bool {
                    return Err(ScriptError::UnsupportedCommand {
                        what: format!(
                            "uninterpreted function `{name_str}` (only Bool-valued relations may be declared)"
                        ),
                        span: cmd.span,
                    });
                }
                if script.signature.declare(name_str, param_sorts).is_none() {
                    return Err(ScriptError::DuplicateRelation {
                        name: name_str.to_string(),
                        span: name.span,
                    });
                }
            }
            "assert" => {
                let [formula] = args else { return Err(malformed) };
                script.asserts.push(formula.clone());
            }
            "check-sat" => script.check_sat = true,
            "set-info" | "exit" => {}
            other => {
                return Err(ScriptError::UnsupportedCommand { what: format!("`{other}`"), span: cmd.span })
            }
        }
    }
    Ok(script)
}

pub fn parse_sort(e: &SExpr) -> Result<Sort, ScriptError> {
    match e.symbol() {
        Some("Int") => Ok(Sort::Int),
        Some("Bool") => Ok(Sort::Bool),
        _ => Err(ScriptError::UnsupportedSort { sort: e.to_string(), span: e.span }),
    }
}

#[derive(Clone, Debug)]
enum Binding {
    Var(Sort),
    Let(Term),
}

/// Bound-variable environment: quantified variables and `let` bindings,
/// innermost last.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    entries: Vec<(String, Binding)>,
}

impl Scope {
    pub fn push_var(&mut self, name: &str, sort: Sort) {
        self.entries.push((name.to_string(), Binding::Var(sort)));
    }

    pub fn push_let(&mut self, name: &str, value: Term) {
        self.entries.push((name.to_string(), Binding::Let(value)));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncate(&mut self, len: usize) {
        self.entries.truncate(len);
    }

    fn lookup(&self, name: &str) -> Option<Term> {
        self.entries.iter().rev().find(|(n, _)| n == name).map(|(n, b)| match b {
            Binding::Var(sort) => Term::bound(n.clone(), *sort),
            Binding::Let(t) => t.clone(),
        })
    }
}

/// Parse `(name Sort)` binder lists of `forall` / `exists`.
pub fn parse_binders(e: &SExpr) -> Result<Vec<(String, Sort)>, ScriptError> {
    let malformed = ScriptError::Malformed { what: "binder list", span: e.span };
    let items = e.list().ok_or_else(|| malformed.clone())?;
    let mut out: Vec<(String, Sort)> = Vec::new();
    for b in items {
        let Some([name, sort]) = b.list() else {
            return Err(ScriptError::Malformed { what: "binder", span: b.span });
        };
        let name = name.symbol().ok_or(ScriptError::Malformed { what: "binder", span: b.span })?;
        if out.iter().any(|(n, _)| n == name) {
            return Err(ScriptError::Malformed { what: "binder list (duplicate name)", span: b.span });
        }
        out.push((name.to_string(), parse_sort(sort)?));
    }
    Ok(out)
}

/// Parse the bindings of a `let` in the current scope and push them
/// (parallel `let` semantics). Returns the scope length to truncate to.
pub fn push_let_bindings(bindings: &SExpr, scope: &mut Scope, sig: &Signature) -> Result<usize, ScriptError> {
    let mark = scope.len();
    let malformed = ScriptError::Malformed { what: "let bindings", span: bindings.span };
    let items = bindings.list().ok_or_else(|| malformed.clone())?;
    let mut parsed = Vec::with_capacity(items.len());
    for b in items {
        let Some([name, value]) = b.list() else { return Err(malformed) };
        let name = name.symbol().ok_or_else(|| malformed.clone())?;
        parsed.push((name.to_string(), parse_term(value, scope, sig)?));
    }
    for (name, value) in parsed {
        scope.push_let(&name, value);
    }
    Ok(mark)
}

/// Strip `(! t :named n ...)` annotations.
pub fn strip_annotations(mut e: &SExpr) -> &SExpr {
    while let Some([inner, ..]) = e.app("!") {
        e = inner;
    }
    e
}

fn sort_err(span: Span) -> impl Fn(SortError) -> ScriptError {
    move |source| match source {
        SortError::RelAtomInApp { .. } | SortError::RelAtomInRel => {
            ScriptError::RelAtomNotConjunctive { span }
        }
        source => ScriptError::SortMismatch { source, span },
    }
}

pub fn parse_term(e: &SExpr, scope: &mut Scope, sig: &Signature) -> Result<Term, ScriptError> {
    let e = strip_annotations(e);
    match &e.kind {
        SExprKind::Atom(text) => parse_atom(text, e.span, scope, sig),
        SExprKind::List(items) => {
            let Some(head) = items.first() else {
                return Err(ScriptError::Malformed { what: "term", span: e.span });
            };
            let args = &items[1..];
            let Some(head_text) = head.atom() else {
                return Err(ScriptError::UnknownIdentifier { name: head.to_string(), span: head.span });
            };
            match head_text {
                "let" => {
                    let [bindings, body] = args else {
                        return Err(ScriptError::Malformed { what: "let", span: e.span });
                    };
                    let mark = push_let_bindings(bindings, scope, sig)?;
                    let body = parse_term(body, scope, sig);
                    scope.truncate(mark);
                    body
                }
                "forall" | "exists" => Err(ScriptError::NestedQuantifier { span: e.span }),
                "-" if args.len() == 1 && is_numeral(args[0].atom().unwrap_or("")) => {
                    let n: BigInt = args[0].atom().unwrap().parse().unwrap();
                    Ok(Term::int(-n))
                }
                _ => {
                    let name = unquote_symbol(head_text);
                    if let Some(op) = Op::from_symbol(head_text) {
                        let op = if op == Op::Sub && args.len() == 1 { Op::Neg } else { op };
                        let args =
                            args.iter().map(|a| parse_term(a, scope, sig)).collect::<Result<Vec<_>, _>>()?;
                        Term::app(op, args).map_err(sort_err(e.span))
                    } else if let Some(rel) = sig.lookup(name) {
                        if rel.arity() != args.len() {
                            return Err(ScriptError::ArityMismatch {
                                name: name.to_string(),
                                expected: rel.arity(),
                                found: args.len(),
                                span: e.span,
                            });
                        }
                        let mut parsed = Vec::with_capacity(args.len());
                        for (i, (a, &want)) in args.iter().zip(&rel.param_sorts).enumerate() {
                            let t = parse_term(a, scope, sig)?;
                            if t.is_rel_atom() {
                                return Err(ScriptError::RelAtomNotConjunctive { span: a.span });
                            }
                            if t.sort() != want {
                                return Err(ScriptError::SortMismatch {
                                    source: SortError::Mismatch {
                                        op: "relation application",
                                        position: i + 1,
                                        expected: want,
                                        found: t.sort(),
                                    },
                                    span: a.span,
                                });
                            }
                            parsed.push(t);
                        }
                        Term::rel(rel.index, parsed).map_err(sort_err(e.span))
                    } else {
                        Err(ScriptError::UnknownIdentifier { name: name.to_string(), span: head.span })
                    }
                }
            }
        }
    }
}

fn is_numeral(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) && (s == "0" || !s.starts_with('0'))
}

fn parse_atom(text: &str, span: Span, scope: &Scope, sig: &Signature) -> Result<Term, ScriptError> {
    match text {
        "true" => return Ok(Term::tt()),
        "false" => return Ok(Term::ff()),
        _ => {}
    }
    if is_numeral(text) {
        return Ok(Term::int(text.parse::<BigInt>().expect("numeral")));
    }
    let name = unquote_symbol(text);
    if let Some(t) = scope.lookup(name) {
        return Ok(t);
    }
    match sig.lookup(name) {
        Some(rel) if rel.arity() == 0 => Ok(Term::rel(rel.index, Vec::new()).unwrap()),
        Some(rel) => {
            Err(ScriptError::ArityMismatch { name: name.to_string(), expected: rel.arity(), found: 0, span })
        }
        None => Err(ScriptError::UnknownIdentifier { name: name.to_string(), span }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::{parse_one, parse_str};
    use crate::term::TermKind;

    fn script(src: &str) -> Result<RawScript, ScriptError> {
        parse_script(&parse_str(src).unwrap())
    }

    fn sig_l() -> Signature {
        script("(declare-fun L (Int) Bool) (declare-fun E () Bool)").unwrap().signature
    }

    fn term(src: &str, vars: &[(&str, Sort)]) -> Result<Term, ScriptError> {
        let mut scope = Scope::default();
        for (n, s) in vars {
            scope.push_var(n, *s);
        }
        parse_term(&parse_one(src).unwrap(), &mut scope, &sig_l())
    }

    #[test]
    fn minimal_script() {
        let s = script("(set-logic HORN)(declare-fun L (Int) Bool)(assert true)(check-sat)").unwrap();
        assert_eq!(s.logic.as_deref(), Some("HORN"));
        assert_eq!(s.signature.relations().len(), 1);
        assert_eq!(s.signature.relations()[0].name, "L");
        assert_eq!(s.signature.relations()[0].arity(), 1);
        assert_eq!(s.asserts.len(), 1);
        assert!(s.check_sat);
    }

    #[test]
    fn declare_relation() {
        let s = script("(declare-fun M (Int) Bool)").unwrap();
        let m = s.signature.lookup("M").unwrap();
        assert_eq!((m.name.as_str(), m.arity(), m.index), ("M", 1, RelId(0)));
    }

    #[test]
    fn rejects_fragment_boundary() {
        assert!(matches!(script("(declare-fun f (Int) Int)"), Err(ScriptError::UnsupportedCommand { .. })));
        assert!(matches!(
            script("(declare-fun A ((Array Int Int)) Bool)"),
            Err(ScriptError::UnsupportedSort { .. })
        ));
        assert!(matches!(script("(set-logic ALL)"), Err(ScriptError::UnsupportedLogic { .. })));
        assert!(matches!(script("(push 1)"), Err(ScriptError::UnsupportedCommand { .. })));
        assert!(matches!(
            script("(declare-fun A () Bool)(declare-fun A (Int) Bool)"),
            Err(ScriptError::DuplicateRelation { .. })
        ));
        assert!(script("(set-info :status sat)(exit)").is_ok());
    }

    #[test]
    fn comparison_term() {
        let t = term("(< x 5)", &[("x", Sort::Int)]).unwrap();
        assert_eq!(t.sort(), Sort::Bool);
        assert_eq!(t.kind(), &TermKind::App(Op::Lt, vec![Term::bound("x", Sort::Int), Term::int(5)]));
    }

    #[test]
    fn addition_term() {
        let t = term("(+ x 3)", &[("x", Sort::Int)]).unwrap();
        assert_eq!(t.sort(), Sort::Int);
        assert_eq!(t.kind(), &TermKind::App(Op::Add, vec![Term::bound("x", Sort::Int), Term::int(3)]));
    }

    #[test]
    fn negative_literals_and_negation() {
        assert_eq!(term("(- 7)", &[]).unwrap(), Term::int(-7));
        let t = term("(- x)", &[("x", Sort::Int)]).unwrap();
        assert!(matches!(t.kind(), TermKind::App(Op::Neg, _)));
        let big = term("123456789012345678901234567890", &[]).unwrap();
        assert_eq!(big, Term::int("123456789012345678901234567890".parse::<BigInt>().unwrap()));
    }

    #[test]
    fn unknown_identifier() {
        let err = term("(L q)", &[]).unwrap_err();
        assert_eq!(err, ScriptError::UnknownIdentifier { name: "q".into(), span: Span::new(3, 4) });
    }

    #[test]
    fn arity_and_sort_errors() {
        assert!(matches!(term("(L 1 2)", &[]), Err(ScriptError::ArityMismatch { .. })));
        assert!(matches!(term("(L true)", &[]), Err(ScriptError::SortMismatch { .. })));
        assert!(matches!(term("(+ 1 true)", &[]), Err(ScriptError::SortMismatch { .. })));
        assert!(matches!(term("(or E true)", &[]), Err(ScriptError::RelAtomNotConjunctive { .. })));
        assert!(matches!(term("(forall ((y Int)) true)", &[]), Err(ScriptError::NestedQuantifier { .. })));
    }

    #[test]
    fn let_is_substituted() {
        let t = term("(let ((y (+ x 1)) (x 0)) (< y x))", &[("x", Sort::Int)]).unwrap();
        assert_eq!(t.to_string(), "(< (+ x 1) 0)");
        assert!(term("(let ((y 1)) y)", &[]).is_ok());
        assert!(term("y", &[]).is_err());
    }

    #[test]
    fn annotations_are_skipped() {
        let t = term("(! (< x 5) :named foo)", &[("x", Sort::Int)]).unwrap();
        assert_eq!(t.to_string(), "(< x 5)");
    }

    #[test]
    fn zero_ary_relation_as_atom() {
        assert!(term("E", &[]).unwrap().is_rel_atom());
        assert!(matches!(term("L", &[]), Err(ScriptError::ArityMismatch { .. })));
    }
}
