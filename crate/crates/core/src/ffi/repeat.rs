//! The bounded loop `repeat n stop step acc obsv`.

use super::array::{u_args, u_u32, v_args, v_u32};
use super::registry::{CallU, CallV};
use crate::dynsem::{EvalError, Store, UValue, VValue};
use crate::syntax::Type;

pub fn repeat_v(call: &dyn CallV, _: &[Type], arg: VValue) -> Result<VValue, EvalError> {
    let [n, stop, step, mut acc, obs] = v_args("repeat", arg)?;
    for _ in 0..v_u32("repeat", &n)? {
        match call.call_v(&stop, VValue::Prod(vec![acc.clone(), obs.clone()]))? {
            VValue::Bool(true) => break,
            VValue::Bool(false) => {}
            other => {
                return Err(EvalError::undefined(
                    "repeat",
                    format!("stop returned {other}"),
                ))
            }
        }
        acc = call.call_v(&step, VValue::Prod(vec![acc, obs.clone()]))?;
    }
    Ok(acc)
}

/// Evaluating `stop` must leave the store untouched; a write is reported
/// as an obligation breach.
pub fn repeat_u(
    call: &dyn CallU,
    _: &[Type],
    mut store: Store,
    arg: UValue,
) -> Result<(UValue, Store), EvalError> {
    let [n, stop, step, mut acc, obs] = u_args("repeat", arg)?;
    for _ in 0..u_u32("repeat", &n)? {
        let before = store.writes();
        let (b, s) = call.call_u(&stop, UValue::Prod(vec![acc.clone(), obs.clone()]), store)?;
        if s.writes() != before {
            return Err(EvalError::ObligationBreach {
                name: "repeat".into(),
                detail: format!("stop function {stop:?} wrote to the store"),
            });
        }
        store = s;
        match b {
            UValue::Bool(true) => break,
            UValue::Bool(false) => {}
            other => {
                return Err(EvalError::undefined(
                    "repeat",
                    format!("stop returned {other:?}"),
                ))
            }
        }
        let (a, s) = call.call_u(&step, UValue::Prod(vec![acc, obs.clone()]), store)?;
        acc = a;
        store = s;
    }
    Ok((acc, store))
}
