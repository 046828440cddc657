//! VMT and BMC rendering of a [`TransitionSystem`].
//!
//! VMT is plain SMT-LIB where `define-fun`s carry annotations: `:next`
//! pairs a current-state variable with its next-state copy, and `:init`,
//! `:trans` and `:invar-property` mark the three formulas of the system.
//! Inputs are declared but left unpaired.

use std::borrow::Cow;
use std::fmt::Write;

use thiserror::Error;

use crate::sexpr::{self, SExpr, SyntaxError};
use crate::term::{quote_symbol, InputVarId, Names, Op, RelId, Sort, StateVarId};
use crate::translate::{TransitionSystem, VarNames};

pub fn emit_vmt(ts: &TransitionSystem) -> String {
    let names = ts.names();
    let mut out = String::new();
    let decl = |out: &mut String, name: &str, sort: Sort| {
        writeln!(out, "(declare-fun {} () {sort})", quote_symbol(name)).unwrap();
    };
    for v in ts.state_vars() {
        decl(&mut out, &names.state(v.ordinal), v.sort);
    }
    for v in ts.state_vars() {
        decl(&mut out, &names.primed(v.ordinal), v.sort);
    }
    for v in ts.input_vars() {
        decl(&mut out, &names.input(v.id), v.sort);
    }
    for (i, v) in ts.state_vars().iter().enumerate() {
        writeln!(
            out,
            "(define-fun .sv{i} () {} (! {} :next {}))",
            v.sort,
            quote_symbol(&names.state(v.ordinal)),
            quote_symbol(&names.primed(v.ordinal)),
        )
        .unwrap();
    }
    writeln!(out, "(define-fun .init () Bool (! {} :init true))", ts.init.display(&names)).unwrap();
    write_trans(&mut out, ts, &names);
    writeln!(out, "(define-fun .prop () Bool (! {} :invar-property 0))", ts.property.display(&names))
        .unwrap();
    out
}

fn write_trans(out: &mut String, ts: &TransitionSystem, names: &VarNames) {
    match ts.disjuncts.as_slice() {
        [] => out.push_str("(define-fun .trans () Bool (! false :trans true))\n"),
        [d] => {
            out.push_str("(define-fun .trans () Bool (!\n");
            writeln!(out, "  {}", d.formula().display(names)).unwrap();
            out.push_str("  :trans true))\n");
        }
        ds => {
            out.push_str("(define-fun .trans () Bool (!\n  (or");
            for d in ds {
                write!(out, "\n    {}", d.formula().display(names)).unwrap();
            }
            out.push_str(")\n  :trans true))\n");
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("unrolling depth must be non-negative, got {0}")]
    InvalidK(i64),
}

/// Names for step `t` of an unrolling: current-state variables at `t`,
/// next-state variables at `t + 1`, inputs at `t`.
struct StepNames<'a> {
    base: &'a VarNames,
    step: usize,
}

impl Names for StepNames<'_> {
    fn state(&self, id: StateVarId) -> Cow<'_, str> {
        format!("{}@{}", self.base.state(id), self.step).into()
    }
    fn primed(&self, id: StateVarId) -> Cow<'_, str> {
        format!("{}@{}", self.base.state(id), self.step + 1).into()
    }
    fn input(&self, id: InputVarId) -> Cow<'_, str> {
        format!("{}@{}", self.base.input(id), self.step).into()
    }
    fn relation(&self, id: RelId) -> Cow<'_, str> {
        self.base.relation(id)
    }
}

/// `QF_LIA` unless a place variable is Bool-sorted or `*` occurs.
pub fn bmc_logic(ts: &TransitionSystem) -> &'static str {
    let bool_place = ts
        .state_vars()
        .iter()
        .any(|v| matches!(v.kind, crate::translate::StateVarKind::Place(..)) && v.sort == Sort::Bool);
    let mul = ts.disjuncts.iter().any(|d| d.formula().contains_op(Op::Mul));
    if bool_place || mul {
        "ALL"
    } else {
        "QF_LIA"
    }
}

/// `I(X0) /\ T(X0, Y0, X1) /\ ... /\ T(Xk-1, Yk-1, Xk) /\ !P(Xk)`.
pub fn emit_bmc(ts: &TransitionSystem, k: i64) -> Result<String, EmitError> {
    if k < 0 {
        return Err(EmitError::InvalidK(k));
    }
    let k = k as usize;
    let names = ts.names();
    let mut out = String::new();
    writeln!(out, "(set-logic {})", bmc_logic(ts)).unwrap();
    for t in 0..=k {
        let at = StepNames { base: &names, step: t };
        for v in ts.state_vars() {
            writeln!(out, "(declare-fun {} () {})", quote_symbol(&at.state(v.ordinal)), v.sort).unwrap();
        }
    }
    for t in 0..k {
        let at = StepNames { base: &names, step: t };
        for v in ts.input_vars() {
            writeln!(out, "(declare-fun {} () {})", quote_symbol(&at.input(v.id)), v.sort).unwrap();
        }
    }
    let at0 = StepNames { base: &names, step: 0 };
    writeln!(out, "(assert {})", ts.init.display(&at0)).unwrap();
    let trans = ts.trans();
    for t in 0..k {
        let at = StepNames { base: &names, step: t };
        writeln!(out, "(assert {})", trans.display(&at)).unwrap();
    }
    let atk = StepNames { base: &names, step: k };
    writeln!(out, "(assert (not {}))", ts.property.display(&atk)).unwrap();
    out.push_str("(check-sat)\n(exit)\n");
    Ok(out)
}

/// Structural summary of a VMT document, read back through the parser.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VmtAudit {
    pub declarations: usize,
    pub next_pairs: usize,
    pub init: usize,
    pub trans: usize,
    pub properties: usize,
    pub trans_disjuncts: usize,
}

pub fn audit_vmt(text: &str) -> Result<VmtAudit, SyntaxError> {
    let forest = sexpr::parse_str(text)?;
    let mut audit = VmtAudit::default();
    for cmd in &forest {
        if cmd.app("declare-fun").is_some() {
            audit.declarations += 1;
        }
        let Some([_, _, _, body]) = cmd.app("define-fun") else { continue };
        let Some(ann) = body.app("!") else { continue };
        let attrs: Vec<&str> = ann[1..].iter().filter_map(SExpr::atom).collect();
        if attrs.contains(&":next") {
            audit.next_pairs += 1;
        }
        if attrs.contains(&":init") {
            audit.init += 1;
        }
        if attrs.contains(&":invar-property") {
            audit.properties += 1;
        }
        if attrs.contains(&":trans") {
            audit.trans += 1;
            let formula = &ann[0];
            audit.trans_disjuncts = match (formula.app("or"), formula.atom()) {
                (Some(ds), _) => ds.len(),
                (None, Some("false")) => 0,
                _ => 1,
            };
        }
    }
    Ok(audit)
}
