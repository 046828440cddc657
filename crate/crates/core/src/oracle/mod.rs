//! Finite-domain executable semantics, used to test the translation.
//!
//! [`derive`] computes which relation facts are derivable from the Horn
//! clauses within a depth bound, and [`reach`] explores the translated
//! transition system breadth-first. [`check_equivalence`] compares the
//! two: a fact `R(t)` must be derivable in `d` steps exactly when a state
//! with `R`'s flag set and `R`'s places equal to `t` is first reachable in
//! `d` transitions.
//!
//! Integers range over a bounded [`Domain`]. Any rule instance whose
//! result leaves the domain is pruned, identically on both sides, so the
//! comparison is exact even though both sides under-approximate the
//! unbounded semantics.

mod derive;
mod equiv;
mod eval;
mod reach;

use std::fmt;

use thiserror::Error;

use crate::term::{Sort, StateVarId};

pub use derive::{derive, Derivation, Fact};
pub use equiv::{check_equivalence, Discrepancy, EquivalenceReport, FactComparison, FactStatus};
pub use eval::{eval_ground, EvalError, Valuation};
pub use reach::{reach, successors_of, Anomaly, ConcreteState, Reachability};

pub const DEFAULT_DOMAIN_CAP: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(i64),
}

impl Value {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(b),
            Value::Int(_) => None,
        }
    }

    pub fn as_int(self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(i),
            Value::Bool(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
        }
    }
}

/// Inclusive integer range `[lo, hi]`; Bool always ranges over both values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Domain {
    lo: i64,
    hi: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("empty domain [{lo}, {hi}]")]
    Empty { lo: i64, hi: i64 },
    #[error("domain [{lo}, {hi}] has more than {cap} values")]
    TooLarge { lo: i64, hi: i64, cap: u64 },
}

impl Domain {
    pub fn new(lo: i64, hi: i64) -> Result<Self, DomainError> {
        Domain::with_cap(lo, hi, DEFAULT_DOMAIN_CAP)
    }

    pub fn with_cap(lo: i64, hi: i64, cap: u64) -> Result<Self, DomainError> {
        if lo > hi {
            return Err(DomainError::Empty { lo, hi });
        }
        if (hi as i128 - lo as i128 + 1) > cap as i128 {
            return Err(DomainError::TooLarge { lo, hi, cap });
        }
        Ok(Domain { lo, hi })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn contains(&self, v: Value) -> bool {
        match v {
            Value::Bool(_) => true,
            Value::Int(i) => self.lo <= i && i <= self.hi,
        }
    }

    pub fn values(&self, sort: Sort) -> Vec<Value> {
        match sort {
            Sort::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Sort::Int => (self.lo..=self.hi).map(Value::Int).collect(),
        }
    }
}

impl Default for Domain {
    fn default() -> Self {
        Domain { lo: -8, hi: 8 }
    }
}

/// Resource caps for the oracles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_facts: usize,
    pub max_states: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_facts: 1_000_000, max_states: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("budget exceeded: more than {limit} {what}")]
    BudgetExceeded { what: &'static str, limit: usize },
    #[error("clause {clause} read unset place variable #{} at step {step}", var.0)]
    UnsetRead { clause: usize, var: StateVarId, step: usize },
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

/// Call `f` on every assignment of domain values to `sorts`, in
/// lexicographic order. Stops early and returns `Err` if `f` does.
pub(crate) fn for_each_assignment<E>(
    sorts: &[Sort],
    dom: &Domain,
    mut f: impl FnMut(&[Value]) -> Result<(), E>,
) -> Result<(), E> {
    let choices: Vec<Vec<Value>> = sorts.iter().map(|s| dom.values(*s)).collect();
    let mut idx = vec![0usize; sorts.len()];
    let mut current: Vec<Value> = choices.iter().map(|c| c[0]).collect();
    loop {
        f(&current)?;
        let mut i = sorts.len();
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < choices[i].len() {
                current[i] = choices[i][idx[i]];
                break;
            }
            idx[i] = 0;
            current[i] = choices[i][0];
        }
    }
}
