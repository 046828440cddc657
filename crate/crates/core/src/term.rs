//! Sorted first-order terms over `Bool` and `Int`.
//!
//! A single [`Term`] type serves every stage of the pipeline: the parser
//! produces bound variables and relation atoms, the translator replaces
//! them with state and input variables. Constructors check operator
//! signatures, so a `Term` built through them always carries a correct
//! cached sort.

use std::borrow::Cow;
use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Bool,
    Int,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Bool => "Bool",
            Sort::Int => "Int",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateVarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InputVarId(pub usize);

/// An uninterpreted relation symbol declared with `declare-fun ... Bool`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Relation {
    pub name: String,
    pub param_sorts: Vec<Sort>,
    pub index: RelId,
}

impl Relation {
    pub fn arity(&self) -> usize {
        self.param_sorts.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Neg,
    Mul,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Distinct,
    And,
    Or,
    Not,
    Implies,
    Ite,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SortError {
    #[error("`{op}` expects {expected} argument(s), got {found}")]
    Arity { op: &'static str, expected: &'static str, found: usize },
    #[error("`{op}` argument {position} must be {expected}, got {found}")]
    Mismatch { op: &'static str, position: usize, expected: Sort, found: Sort },
    #[error("relation atom used as an argument of `{op}`")]
    RelAtomInApp { op: &'static str },
    #[error("relation atom used as an argument of another relation")]
    RelAtomInRel,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub | Op::Neg => "-",
            Op::Mul => "*",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::Eq => "=",
            Op::Distinct => "distinct",
            Op::And => "and",
            Op::Or => "or",
            Op::Not => "not",
            Op::Implies => "=>",
            Op::Ite => "ite",
        }
    }

    /// Resolve a surface symbol. `-` maps to [`Op::Sub`]; callers turn the
    /// unary form into [`Op::Neg`].
    pub fn from_symbol(s: &str) -> Option<Op> {
        Some(match s {
            "+" => Op::Add,
            "-" => Op::Sub,
            "*" => Op::Mul,
            "<" => Op::Lt,
            "<=" => Op::Le,
            ">" => Op::Gt,
            ">=" => Op::Ge,
            "=" => Op::Eq,
            "distinct" => Op::Distinct,
            "and" => Op::And,
            "or" => Op::Or,
            "not" => Op::Not,
            "=>" => Op::Implies,
            "ite" => Op::Ite,
            _ => return None,
        })
    }

    /// Check `args` against this operator's signature and return the
    /// result sort.
    pub fn result_sort(self, args: &[Sort]) -> Result<Sort, SortError> {
        let op = self.symbol();
        let n = args.len();
        let all = |sort: Sort| {
            args.iter().enumerate().try_for_each(|(i, &s)| {
                if s == sort {
                    Ok(())
                } else {
                    Err(SortError::Mismatch { op, position: i + 1, expected: sort, found: s })
                }
            })
        };
        let arity = |ok: bool, expected: &'static str| {
            if ok {
                Ok(())
            } else {
                Err(SortError::Arity { op, expected, found: n })
            }
        };
        match self {
            Op::Add | Op::Mul => {
                arity(n >= 2, "at least 2")?;
                all(Sort::Int)?;
                Ok(Sort::Int)
            }
            Op::Sub => {
                arity(n >= 2, "at least 2")?;
                all(Sort::Int)?;
                Ok(Sort::Int)
            }
            Op::Neg => {
                arity(n == 1, "exactly 1")?;
                all(Sort::Int)?;
                Ok(Sort::Int)
            }
            Op::Lt | Op::Le | Op::Gt | Op::Ge => {
                arity(n == 2, "exactly 2")?;
                all(Sort::Int)?;
                Ok(Sort::Bool)
            }
            Op::Eq | Op::Distinct => {
                arity(n >= 2, "at least 2")?;
                all(args[0])?;
                Ok(Sort::Bool)
            }
            Op::And | Op::Or => {
                all(Sort::Bool)?;
                Ok(Sort::Bool)
            }
            Op::Implies => {
                arity(n >= 2, "at least 2")?;
                all(Sort::Bool)?;
                Ok(Sort::Bool)
            }
            Op::Not => {
                arity(n == 1, "exactly 1")?;
                all(Sort::Bool)?;
                Ok(Sort::Bool)
            }
            Op::Ite => {
                arity(n == 3, "exactly 3")?;
                if args[0] != Sort::Bool {
                    return Err(SortError::Mismatch {
                        op,
                        position: 1,
                        expected: Sort::Bool,
                        found: args[0],
                    });
                }
                if args[1] != args[2] {
                    return Err(SortError::Mismatch { op, position: 3, expected: args[1], found: args[2] });
                }
                Ok(args[1])
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TermKind {
    Bool(bool),
    Int(BigInt),
    Bound(String),
    State(StateVarId),
    Primed(StateVarId),
    Input(InputVarId),
    App(Op, Vec<Term>),
    Rel(RelId, Vec<Term>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    kind: TermKind,
    sort: Sort,
}

/// A variable occurrence, as seen by evaluators and renamers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarRef<'a> {
    Bound(&'a str),
    State(StateVarId),
    Primed(StateVarId),
    Input(InputVarId),
}

impl Term {
    pub fn kind(&self) -> &TermKind {
        &self.kind
    }

    pub fn sort(&self) -> Sort {
        self.sort
    }

    pub fn bool(b: bool) -> Term {
        Term { kind: TermKind::Bool(b), sort: Sort::Bool }
    }

    pub fn tt() -> Term {
        Term::bool(true)
    }

    pub fn ff() -> Term {
        Term::bool(false)
    }

    pub fn int(i: impl Into<BigInt>) -> Term {
        Term { kind: TermKind::Int(i.into()), sort: Sort::Int }
    }

    pub fn bound(name: impl Into<String>, sort: Sort) -> Term {
        Term { kind: TermKind::Bound(name.into()), sort }
    }

    pub fn state(id: StateVarId, sort: Sort) -> Term {
        Term { kind: TermKind::State(id), sort }
    }

    pub fn primed(id: StateVarId, sort: Sort) -> Term {
        Term { kind: TermKind::Primed(id), sort }
    }

    pub fn input(id: InputVarId, sort: Sort) -> Term {
        Term { kind: TermKind::Input(id), sort }
    }

    pub fn app(op: Op, args: Vec<Term>) -> Result<Term, SortError> {
        if args.iter().any(Term::is_rel_atom) {
            return Err(SortError::RelAtomInApp { op: op.symbol() });
        }
        let sorts: Vec<Sort> = args.iter().map(Term::sort).collect();
        let sort = op.result_sort(&sorts)?;
        Ok(Term { kind: TermKind::App(op, args), sort })
    }

    /// Relation atom. Arity and parameter sorts are checked against the
    /// declaration by the parser and by `horn::validate`, not here.
    pub fn rel(rel: RelId, args: Vec<Term>) -> Result<Term, SortError> {
        if args.iter().any(Term::is_rel_atom) {
            return Err(SortError::RelAtomInRel);
        }
        Ok(Term { kind: TermKind::Rel(rel, args), sort: Sort::Bool })
    }

    fn app_unchecked(op: Op, args: Vec<Term>) -> Term {
        match Term::app(op, args) {
            Ok(t) => t,
            Err(e) => panic!("ill-sorted internal term: {e}"),
        }
    }

    /// Conjunction that flattens nested `and`s and drops `true`. The empty
    /// conjunction is `true`; a single conjunct is returned as is.
    ///
    /// Panics if a conjunct is not Bool-sorted.
    pub fn conj(parts: impl IntoIterator<Item = Term>) -> Term {
        let mut flat = Vec::new();
        for p in parts {
            assert_eq!(p.sort, Sort::Bool, "conjunct must be Bool");
            match p.kind {
                TermKind::Bool(true) => {}
                TermKind::App(Op::And, args) => flat.extend(args),
                _ => flat.push(p),
            }
        }
        match flat.len() {
            0 => Term::tt(),
            1 => flat.pop().unwrap(),
            _ => Term::app_unchecked(Op::And, flat),
        }
    }

    /// Disjunction; the empty disjunction is `false`.
    pub fn disj(parts: impl IntoIterator<Item = Term>) -> Term {
        let mut parts: Vec<Term> = parts.into_iter().collect();
        match parts.len() {
            0 => Term::ff(),
            1 => parts.pop().unwrap(),
            _ => Term::app_unchecked(Op::Or, parts),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(t: Term) -> Term {
        Term::app_unchecked(Op::Not, vec![t])
    }

    /// Panics on sort mismatch.
    pub fn equal(a: Term, b: Term) -> Term {
        Term::app_unchecked(Op::Eq, vec![a, b])
    }

    pub fn is_rel_atom(&self) -> bool {
        matches!(self.kind, TermKind::Rel(..))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self.kind {
            TermKind::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match &self.kind {
            TermKind::App(_, args) | TermKind::Rel(_, args) => args,
            _ => &[],
        }
    }

    /// Top-level conjuncts (the term itself if it is not an `and`).
    pub fn conjuncts(&self) -> Vec<&Term> {
        match &self.kind {
            TermKind::App(Op::And, args) => args.iter().flat_map(Term::conjuncts).collect(),
            TermKind::Bool(true) => Vec::new(),
            _ => vec![self],
        }
    }

    pub fn as_var(&self) -> Option<VarRef<'_>> {
        match &self.kind {
            TermKind::Bound(n) => Some(VarRef::Bound(n)),
            TermKind::State(v) => Some(VarRef::State(*v)),
            TermKind::Primed(v) => Some(VarRef::Primed(*v)),
            TermKind::Input(v) => Some(VarRef::Input(*v)),
            _ => None,
        }
    }

    /// Pre-order walk over every sub-term.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        f(self);
        for a in self.args() {
            a.visit(f);
        }
    }

    pub fn any(&self, pred: &mut impl FnMut(&Term) -> bool) -> bool {
        pred(self) || self.args().iter().any(|a| a.any(pred))
    }

    pub fn contains_rel_atom(&self) -> bool {
        self.any(&mut Term::is_rel_atom)
    }

    pub fn contains_primed(&self) -> bool {
        self.any(&mut |t| matches!(t.kind, TermKind::Primed(_)))
    }

    pub fn contains_op(&self, op: Op) -> bool {
        self.any(&mut |t| matches!(t.kind, TermKind::App(o, _) if o == op))
    }

    pub fn bound_vars(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let TermKind::Bound(n) = &t.kind {
                out.insert(n.as_str());
            }
        });
        out
    }

    pub fn state_vars(&self) -> BTreeSet<StateVarId> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let TermKind::State(v) = t.kind {
                out.insert(v);
            }
        });
        out
    }

    pub fn primed_vars(&self) -> Vec<StateVarId> {
        let mut out = Vec::new();
        self.visit(&mut |t| {
            if let TermKind::Primed(v) = t.kind {
                out.push(v);
            }
        });
        out
    }

    pub fn input_vars(&self) -> BTreeSet<InputVarId> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let TermKind::Input(v) = t.kind {
                out.insert(v);
            }
        });
        out
    }

    /// Rebuild the term bottom-up, replacing every leaf for which `f`
    /// returns `Some`. Replacements must have the sort of the leaf they
    /// replace.
    pub fn map_leaves(&self, f: &mut impl FnMut(&Term) -> Option<Term>) -> Term {
        match &self.kind {
            TermKind::App(op, args) => {
                let args = args.iter().map(|a| a.map_leaves(f)).collect();
                Term { kind: TermKind::App(*op, args), sort: self.sort }
            }
            TermKind::Rel(r, args) => {
                let args = args.iter().map(|a| a.map_leaves(f)).collect();
                Term { kind: TermKind::Rel(*r, args), sort: self.sort }
            }
            _ => match f(self) {
                Some(t) => {
                    assert_eq!(t.sort, self.sort, "leaf replacement changed sort");
                    t
                }
                None => self.clone(),
            },
        }
    }

    /// Recompute the sort bottom-up, ignoring the cache. Relation atoms
    /// are Bool; their argument sorts are checked elsewhere.
    pub fn infer_sort(&self) -> Result<Sort, SortError> {
        match &self.kind {
            TermKind::Bool(_) | TermKind::Rel(..) => Ok(Sort::Bool),
            TermKind::Int(_) => Ok(Sort::Int),
            TermKind::Bound(_) | TermKind::State(_) | TermKind::Primed(_) | TermKind::Input(_) => {
                Ok(self.sort)
            }
            TermKind::App(op, args) => {
                if args.iter().any(Term::is_rel_atom) {
                    return Err(SortError::RelAtomInApp { op: op.symbol() });
                }
                let sorts = args.iter().map(Term::infer_sort).collect::<Result<Vec<_>, _>>()?;
                op.result_sort(&sorts)
            }
        }
    }

    /// True if every cached sort agrees with [`Term::infer_sort`].
    pub fn sorts_consistent(&self) -> bool {
        self.infer_sort().is_ok_and(|s| s == self.sort) && self.args().iter().all(Term::sorts_consistent)
    }

    /// Render with the given variable names.
    pub fn display<'a, N: Names + ?Sized>(&'a self, names: &'a N) -> Display<'a, N> {
        Display { term: self, names }
    }
}

/// Naming scheme used when printing terms.
pub trait Names {
    fn state(&self, id: StateVarId) -> Cow<'_, str>;
    fn primed(&self, id: StateVarId) -> Cow<'_, str>;
    fn input(&self, id: InputVarId) -> Cow<'_, str>;
    fn relation(&self, id: RelId) -> Cow<'_, str>;
}

/// Placeholder names, for debugging output.
pub struct DebugNames;

impl Names for DebugNames {
    fn state(&self, id: StateVarId) -> Cow<'_, str> {
        format!("s{}", id.0).into()
    }
    fn primed(&self, id: StateVarId) -> Cow<'_, str> {
        format!("s{}'", id.0).into()
    }
    fn input(&self, id: InputVarId) -> Cow<'_, str> {
        format!("i{}", id.0).into()
    }
    fn relation(&self, id: RelId) -> Cow<'_, str> {
        format!("r{}", id.0).into()
    }
}

pub struct Display<'a, N: ?Sized> {
    term: &'a Term,
    names: &'a N,
}

impl<N: Names + ?Sized> fmt::Display for Display<'_, N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self.term, self.names)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, &DebugNames)
    }
}

fn write_term<N: Names + ?Sized>(f: &mut fmt::Formatter<'_>, t: &Term, names: &N) -> fmt::Result {
    match &t.kind {
        TermKind::Bool(b) => write!(f, "{b}"),
        TermKind::Int(i) if i.sign() == num_bigint::Sign::Minus => write!(f, "(- {})", i.magnitude()),
        TermKind::Int(i) => write!(f, "{i}"),
        TermKind::Bound(n) => f.write_str(&quote_symbol(n)),
        TermKind::State(v) => f.write_str(&quote_symbol(&names.state(*v))),
        TermKind::Primed(v) => f.write_str(&quote_symbol(&names.primed(*v))),
        TermKind::Input(v) => f.write_str(&quote_symbol(&names.input(*v))),
        TermKind::App(op, args) => {
            write!(f, "({}", op.symbol())?;
            for a in args {
                f.write_str(" ")?;
                write_term(f, a, names)?;
            }
            f.write_str(")")
        }
        TermKind::Rel(r, args) => {
            let name = names.relation(*r);
            if args.is_empty() {
                return f.write_str(&quote_symbol(&name));
            }
            write!(f, "({}", quote_symbol(&name))?;
            for a in args {
                f.write_str(" ")?;
                write_term(f, a, names)?;
            }
            f.write_str(")")
        }
    }
}

const RESERVED: &[&str] = &[
    "!",
    "_",
    "as",
    "let",
    "exists",
    "forall",
    "match",
    "par",
    "BINARY",
    "DECIMAL",
    "HEXADECIMAL",
    "NUMERAL",
    "STRING",
];

/// Wrap `name` in `|...|` unless it is a legal simple symbol.
pub fn quote_symbol(name: &str) -> Cow<'_, str> {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c))
        && !RESERVED.contains(&name);
    if simple {
        Cow::Borrowed(name)
    } else {
        Cow::Owned(format!("|{name}|"))
    }
}
