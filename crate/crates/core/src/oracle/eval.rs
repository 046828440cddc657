use std::collections::HashMap;

use num_traits::ToPrimitive;
use thiserror::Error;

use super::Value;
use crate::term::{Op, StateVarId, Term, TermKind, VarRef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unassigned variable {0}")]
    UnassignedVariable(String),
    #[error("read of unset state variable #{}", .0.0)]
    UnsetRead(StateVarId),
    #[error("integer overflow")]
    Overflow,
    #[error("relation atoms have no ground value")]
    RelationAtom,
}

pub trait Valuation {
    fn lookup(&self, var: VarRef<'_>) -> Result<Value, EvalError>;
}

impl Valuation for HashMap<String, Value> {
    fn lookup(&self, var: VarRef<'_>) -> Result<Value, EvalError> {
        match var {
            VarRef::Bound(n) => self.get(n).copied().ok_or_else(|| EvalError::UnassignedVariable(n.into())),
            other => Err(EvalError::UnassignedVariable(format!("{other:?}"))),
        }
    }
}

fn int(t: &Term, env: &impl Valuation) -> Result<i64, EvalError> {
    Ok(eval_ground(t, env)?.as_int().expect("sort-checked term"))
}

fn boolean(t: &Term, env: &impl Valuation) -> Result<bool, EvalError> {
    Ok(eval_ground(t, env)?.as_bool().expect("sort-checked term"))
}

/// Evaluate a relation-free term. `and`, `or`, `=>` short-circuit left to
/// right and `ite` only evaluates the branch it takes.
pub fn eval_ground(t: &Term, env: &impl Valuation) -> Result<Value, EvalError> {
    match t.kind() {
        TermKind::Bool(b) => Ok(Value::Bool(*b)),
        TermKind::Int(i) => i.to_i64().map(Value::Int).ok_or(EvalError::Overflow),
        TermKind::Rel(..) => Err(EvalError::RelationAtom),
        TermKind::Bound(_) | TermKind::State(_) | TermKind::Primed(_) | TermKind::Input(_) => {
            env.lookup(t.as_var().unwrap())
        }
        TermKind::App(op, args) => {
            let v = match op {
                Op::Add => Value::Int(
                    args.iter()
                        .try_fold(0i64, |acc, a| acc.checked_add(int(a, env)?).ok_or(EvalError::Overflow))?,
                ),
                Op::Mul => Value::Int(
                    args.iter()
                        .try_fold(1i64, |acc, a| acc.checked_mul(int(a, env)?).ok_or(EvalError::Overflow))?,
                ),
                Op::Sub => {
                    let first = int(&args[0], env)?;
                    Value::Int(
                        args[1..].iter().try_fold(first, |acc, a| {
                            acc.checked_sub(int(a, env)?).ok_or(EvalError::Overflow)
                        })?,
                    )
                }
                Op::Neg => Value::Int(int(&args[0], env)?.checked_neg().ok_or(EvalError::Overflow)?),
                Op::Lt | Op::Le | Op::Gt | Op::Ge => {
                    let (a, b) = (int(&args[0], env)?, int(&args[1], env)?);
                    Value::Bool(match op {
                        Op::Lt => a < b,
                        Op::Le => a <= b,
                        Op::Gt => a > b,
                        _ => a >= b,
                    })
                }
                Op::Eq => {
                    let first = eval_ground(&args[0], env)?;
                    let mut all = true;
                    for a in &args[1..] {
                        all &= eval_ground(a, env)? == first;
                    }
                    Value::Bool(all)
                }
                Op::Distinct => {
                    let vals = args.iter().map(|a| eval_ground(a, env)).collect::<Result<Vec<_>, _>>()?;
                    let distinct = vals.iter().enumerate().all(|(i, v)| !vals[..i].contains(v));
                    Value::Bool(distinct)
                }
                Op::And => {
                    for a in args {
                        if !boolean(a, env)? {
                            return Ok(Value::Bool(false));
                        }
                    }
                    Value::Bool(true)
                }
                Op::Or => {
                    for a in args {
                        if boolean(a, env)? {
                            return Ok(Value::Bool(true));
                        }
                    }
                    Value::Bool(false)
                }
                Op::Not => Value::Bool(!boolean(&args[0], env)?),
                Op::Implies => {
                    let (last, init) = args.split_last().unwrap();
                    for a in init {
                        if !boolean(a, env)? {
                            return Ok(Value::Bool(true));
                        }
                    }
                    Value::Bool(boolean(last, env)?)
                }
                Op::Ite => {
                    if boolean(&args[0], env)? {
                        eval_ground(&args[1], env)?
                    } else {
                        eval_ground(&args[2], env)?
                    }
                }
            };
            Ok(v)
        }
    }
}
