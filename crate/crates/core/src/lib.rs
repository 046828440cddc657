//! Translate linear constrained Horn clauses (SMT-LIB `HORN` logic) into
//! symbolic transition systems and emit them in the VMT format.
//!
//! The pipeline is
//!
//! ```text
//! text --lex/parse--> s-expressions --script--> declarations + asserts
//!      --horn--> normalized linear clauses --translate--> transition system
//!      --vmt--> .vmt / BMC .smt2 text
//! ```
//!
//! [`oracle`] holds finite-domain executable semantics for both ends: a
//! bottom-up Horn derivation engine and an explicit-state explorer for the
//! transition system. Comparing the two checks that a relation is derivable
//! exactly when its flag is reachable.
//!
//! ```
//! let src = "(set-logic HORN)
//!            (declare-fun Inv (Int) Bool)
//!            (assert (Inv 0))
//!            (assert (forall ((x Int)) (=> (and (Inv x) (< x 3)) (Inv (+ x 1)))))
//!            (assert (forall ((x Int)) (=> (and (Inv x) (> x 5)) false)))";
//! let sys = chc2vmt::load_system(src, None).unwrap();
//! let ts = chc2vmt::translate::translate_system(&sys);
//! let vmt = chc2vmt::vmt::emit_vmt(&ts);
//! assert!(vmt.contains(":invar-property 0"));
//! ```

pub mod cli;
pub mod horn;
pub mod oracle;
pub mod random;
pub mod script;
pub mod sexpr;
pub mod term;
pub mod translate;
pub mod vmt;

use thiserror::Error;

use crate::horn::{HornError, HornSystem};
use crate::script::ScriptError;
use crate::sexpr::{Span, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Horn(#[from] HornError),
}

impl From<ScriptError> for Error {
    fn from(e: ScriptError) -> Self {
        Error::Horn(HornError::Script(e))
    }
}

impl Error {
    pub fn span(&self) -> Option<Span> {
        match self {
            Error::Syntax(e) => Some(Span::new(e.offset(), e.offset())),
            Error::Horn(e) => e.span(),
        }
    }
}

/// Parse SMT-LIB text and build the normalized, validated Horn system.
///
/// `query` selects an existing 0-ary relation as the query; by default a
/// fresh one named `q.U` is added.
pub fn load_system(source: &str, query: Option<&str>) -> Result<HornSystem, Error> {
    let forest = sexpr::parse_str(source)?;
    let raw = script::parse_script(&forest)?;
    if raw.logic.is_none() {
        return Err(ScriptError::MissingLogic.into());
    }
    Ok(horn::build_system(&raw, query)?)
}
