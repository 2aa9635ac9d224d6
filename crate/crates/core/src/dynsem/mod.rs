//! Value semantics, update semantics, value typing with footprints, the
//! frame relation and the value/update correspondence.

use thiserror::Error;

pub mod eval;
pub mod store;
pub mod typing;
pub mod value;

pub use eval::{Semantics, UEnv, VEnv};
pub use store::Store;
pub use typing::{corr, frame, frame_violation, vtyping_u, vtyping_v, FrameViolation, TypingEnv};
pub use value::{Footprint, LocId, UAbs, UValue, VAbs, VValue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    /// No rule applies: a well-typed term never reaches this.
    #[error("evaluation stuck: {0}")]
    Stuck(String),
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("dangling location {0}")]
    Dangling(LocId),
    #[error("foreign function `{name}` undefined on its input: {reason}")]
    ForeignUndefined { name: String, reason: String },
    #[error("`{caller}` (order {caller_order}) called `{callee}` of order {callee_order}")]
    OrderViolation {
        caller: String,
        caller_order: u32,
        callee: String,
        callee_order: u32,
    },
    #[error("obligation breached by `{name}`: {detail}")]
    ObligationBreach { name: String, detail: String },
}

impl EvalError {
    pub fn stuck(msg: impl Into<String>) -> Self {
        EvalError::Stuck(msg.into())
    }

    pub fn undefined(name: &str, reason: impl Into<String>) -> Self {
        EvalError::ForeignUndefined {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
