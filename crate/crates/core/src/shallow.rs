//! Pure reference functions at the top of the tower: the array library and
//! loop over lists, hand-written embeddings of the corpus programs, and
//! the relation to polymorphic values.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::dynsem::{VAbs, VValue};
use crate::ffi::{CallS, Registry, ShallowFn};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SValue {
    Unit,
    Bool(bool),
    U8(u8),
    U32(u32),
    Tuple(Vec<SValue>),
    List(Arc<Vec<SValue>>),
    Fun(String),
}

impl SValue {
    pub fn list(xs: Vec<SValue>) -> SValue {
        SValue::List(Arc::new(xs))
    }

    pub fn u32_list(xs: &[u32]) -> SValue {
        SValue::list(xs.iter().map(|&x| SValue::U32(x)).collect())
    }

    pub fn fun(name: &str) -> SValue {
        SValue::Fun(name.to_string())
    }

    pub fn as_u32(&self) -> Option<u32> {
        match self {
            SValue::U32(n) => Some(*n),
            _ => None,
        }
    }
}

impl fmt::Display for SValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let seq = |f: &mut fmt::Formatter<'_>, xs: &[SValue]| -> fmt::Result {
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{x}")?;
            }
            Ok(())
        };
        match self {
            SValue::Unit => write!(f, "()"),
            SValue::Bool(b) => write!(f, "{}", if *b { "True" } else { "False" }),
            SValue::U8(n) => write!(f, "{n}"),
            SValue::U32(n) => write!(f, "{n}"),
            SValue::Tuple(xs) => {
                write!(f, "(")?;
                seq(f, xs)?;
                write!(f, ")")
            }
            SValue::List(xs) => {
                write!(f, "[")?;
                seq(f, xs)?;
                write!(f, "]")
            }
            SValue::Fun(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShallowError {
    #[error("`{name}` applied to ill-shaped argument {arg}")]
    Shape { name: String, arg: String },
    #[error("no shallow embedding for `{0}`")]
    UnknownFunction(String),
}

fn shape(name: &str, arg: &SValue) -> ShallowError {
    ShallowError::Shape {
        name: name.to_string(),
        arg: arg.to_string(),
    }
}

/// `v_s` relates to `v_p`: equal data, arrays as element-wise related lists.
pub fn rel_ps(s: &SValue, v: &VValue) -> bool {
    match (s, v) {
        (SValue::Unit, VValue::Unit) => true,
        (SValue::Bool(a), VValue::Bool(b)) => a == b,
        (SValue::U8(a), VValue::U8(b)) => a == b,
        (SValue::U32(a), VValue::U32(b)) => a == b,
        (SValue::Tuple(xs), VValue::Prod(vs)) => {
            xs.len() == vs.len() && xs.iter().zip(vs).all(|(x, v)| rel_ps(x, v))
        }
        (SValue::List(xs), VValue::Abstract(VAbs::Array { items, .. })) => {
            xs.len() == items.len() && xs.iter().zip(items.iter()).all(|(x, v)| rel_ps(x, v))
        }
        (SValue::Fun(f), VValue::Fun(g, _)) => f == g,
        _ => false,
    }
}

/// The shallow image of a value.
pub fn from_value(v: &VValue) -> SValue {
    match v {
        VValue::Unit => SValue::Unit,
        VValue::Bool(b) => SValue::Bool(*b),
        VValue::U8(n) => SValue::U8(*n),
        VValue::U32(n) => SValue::U32(*n),
        VValue::Prod(vs) => SValue::Tuple(vs.iter().map(from_value).collect()),
        VValue::Fun(f, _) => SValue::Fun(f.clone()),
        VValue::Abstract(VAbs::Array { items, .. }) => {
            SValue::list(items.iter().map(from_value).collect())
        }
    }
}

// list-level operations

pub fn length_s(xs: &[SValue]) -> u32 {
    xs.len() as u32
}

pub fn get_s(xs: &[SValue], i: u32, d: SValue) -> SValue {
    xs.get(i as usize).cloned().unwrap_or(d)
}

pub fn put_s(xs: &[SValue], i: u32, v: SValue) -> Vec<SValue> {
    let mut ys = xs.to_vec();
    if let Some(y) = ys.get_mut(i as usize) {
        *y = v;
    }
    ys
}

/// Folds `f` over `xs[frm .. min(to, length xs)]`.
pub fn fold_s<E>(
    mut f: impl FnMut(SValue, SValue, SValue) -> Result<SValue, E>,
    acc: SValue,
    xs: &[SValue],
    frm: u32,
    to: u32,
    obsv: SValue,
) -> Result<SValue, E> {
    let (frm, to) = (frm as usize, (to as usize).min(xs.len()));
    xs.get(frm..to)
        .unwrap_or(&[])
        .iter()
        .try_fold(acc, |acc, x| f(x.clone(), acc, obsv.clone()))
}

/// `take frm xs @ xs' @ drop (max frm to) xs`, where `xs'` is the mapped
/// slice.
pub fn mapaccum_s<E>(
    mut f: impl FnMut(SValue, SValue, SValue) -> Result<(SValue, SValue), E>,
    acc: SValue,
    xs: &[SValue],
    frm: u32,
    to: u32,
    obsv: SValue,
) -> Result<(Vec<SValue>, SValue), E> {
    let n = xs.len();
    let frm = (frm as usize).min(n);
    let to = (to as usize).min(n);
    let slice = xs.get(frm..to.max(frm)).unwrap_or(&[]);
    let mut acc = acc;
    let mut mapped = Vec::with_capacity(slice.len());
    for x in slice {
        let (y, a) = f(x.clone(), acc, obsv.clone())?;
        mapped.push(y);
        acc = a;
    }
    let mut out = xs[..frm].to_vec();
    out.extend(mapped);
    out.extend_from_slice(&xs[to.max(frm)..]);
    Ok((out, acc))
}

pub fn repeat_s<E>(
    n: u64,
    mut stop: impl FnMut(&SValue, &SValue) -> Result<bool, E>,
    mut step: impl FnMut(SValue, &SValue) -> Result<SValue, E>,
    acc: SValue,
    obsv: SValue,
) -> Result<SValue, E> {
    let mut acc = acc;
    for _ in 0..n {
        if stop(&acc, &obsv)? {
            break;
        }
        acc = step(acc, &obsv)?;
    }
    Ok(acc)
}

pub fn sum_s(xs: &[u32]) -> u32 {
    xs.iter().fold(0u32, |a, x| a.wrapping_add(*x))
}

fn search_step(l: u32, r: u32, b: bool, xs: &[SValue], v: u32) -> (u32, u32, bool) {
    let m = l.wrapping_add(r.wrapping_sub(l) / 2);
    let x = get_s(xs, m, SValue::U32(0)).as_u32().unwrap_or(0);
    if x < v {
        (m.wrapping_add(1), r, b)
    } else if x > v {
        (l, m, b)
    } else {
        (m, r, true)
    }
}

/// Binary search through the loop combinator; also returns the number of
/// step evaluations.
pub fn binary_search_steps(xs: &[u32], v: u32) -> (u32, u64) {
    let list: Vec<SValue> = xs.iter().map(|&x| SValue::U32(x)).collect();
    let len = xs.len() as u32;
    let mut steps = 0u64;
    let unpack = |acc: &SValue| match acc {
        SValue::Tuple(t) => match t.as_slice() {
            [SValue::U32(l), SValue::U32(r), SValue::Bool(b)] => (*l, *r, *b),
            _ => unreachable!("search state"),
        },
        _ => unreachable!("search state"),
    };
    let pack = |(l, r, b): (u32, u32, bool)| {
        SValue::Tuple(vec![SValue::U32(l), SValue::U32(r), SValue::Bool(b)])
    };
    let out = repeat_s::<std::convert::Infallible>(
        len as u64,
        |acc, _| {
            let (l, r, b) = unpack(acc);
            Ok(b || l >= r)
        },
        |acc, _| {
            steps += 1;
            let (l, r, b) = unpack(&acc);
            Ok(pack(search_step(l, r, b, &list, v)))
        },
        pack((0, len, false)),
        SValue::Unit,
    )
    .expect("infallible");
    let (l, _, b) = unpack(&out);
    (if b { l } else { len }, steps)
}

pub fn binary_search_s(xs: &[u32], v: u32) -> u32 {
    binary_search_steps(xs, v).0
}

// registry adaptors

fn args<const N: usize>(name: &str, v: SValue) -> Result<[SValue; N], ShallowError> {
    match v {
        SValue::Tuple(xs) if xs.len() == N => Ok(xs.try_into().expect("length checked")),
        other => Err(shape(name, &other)),
    }
}

fn word(name: &str, v: &SValue) -> Result<u32, ShallowError> {
    v.as_u32().ok_or_else(|| shape(name, v))
}

fn byte(name: &str, v: &SValue) -> Result<u8, ShallowError> {
    match v {
        SValue::U8(n) => Ok(*n),
        other => Err(shape(name, other)),
    }
}

fn list(name: &str, v: SValue) -> Result<Arc<Vec<SValue>>, ShallowError> {
    match v {
        SValue::List(xs) => Ok(xs),
        other => Err(shape(name, &other)),
    }
}

fn boolean(name: &str, v: SValue) -> Result<bool, ShallowError> {
    match v {
        SValue::Bool(b) => Ok(b),
        other => Err(shape(name, &other)),
    }
}

pub fn length_lib(_: &dyn CallS, arg: SValue) -> Result<SValue, ShallowError> {
    Ok(SValue::U32(length_s(&list("length", arg)?)))
}

pub fn get_lib(_: &dyn CallS, arg: SValue) -> Result<SValue, ShallowError> {
    let [xs, i, d] = args("get", arg)?;
    let i = word("get", &i)?;
    Ok(get_s(&list("get", xs)?, i, d))
}

pub fn put_lib(_: &dyn CallS, arg: SValue) -> Result<SValue, ShallowError> {
    let [xs, i, v] = args("put", arg)?;
    let i = word("put", &i)?;
    Ok(SValue::list(put_s(&list("put", xs)?, i, v)))
}

pub fn fold_lib(call: &dyn CallS, arg: SValue) -> Result<SValue, ShallowError> {
    let [f, acc, xs, frm, to, obs] = args("fold", arg)?;
    let (frm, to) = (word("fold", &frm)?, word("fold", &to)?);
    let xs = list("fold", xs)?;
    fold_s(
        |x, acc, o| call.call_s(&f, SValue::Tuple(vec![x, acc, o])),
        acc,
        &xs,
        frm,
        to,
        obs,
    )
}

pub fn mapaccum_lib(call: &dyn CallS, arg: SValue) -> Result<SValue, ShallowError> {
    let [f, acc, xs, frm, to, obs] = args("mapaccum", arg)?;
    let (frm, to) = (word("mapaccum", &frm)?, word("mapaccum", &to)?);
    let xs = list("mapaccum", xs)?;
    let (ys, acc) = mapaccum_s(
        |x, acc, o| {
            let [y, a] = args("mapaccum", call.call_s(&f, SValue::Tuple(vec![x, acc, o]))?)?;
            Ok((y, a))
        },
        acc,
        &xs,
        frm,
        to,
        obs,
    )?;
    Ok(SValue::Tuple(vec![SValue::list(ys), acc]))
}

pub fn repeat_lib(call: &dyn CallS, arg: SValue) -> Result<SValue, ShallowError> {
    let [n, stop, step, acc, obs] = args("repeat", arg)?;
    let n = word("repeat", &n)?;
    repeat_s(
        n as u64,
        |a, o| boolean("repeat", call.call_s(&stop, SValue::Tuple(vec![a.clone(), o.clone()]))?),
        |a, o| call.call_s(&step, SValue::Tuple(vec![a, o.clone()])),
        acc,
        obs,
    )
}

/// Shallow embeddings by function name, with per-name call counters.
pub struct ShallowEnv {
    fns: BTreeMap<String, ShallowFn>,
    calls: RefCell<BTreeMap<String, u64>>,
}

impl ShallowEnv {
    /// Library functions from `registry` plus the hand-written embeddings
    /// of the corpus programs.
    pub fn new(registry: &Registry) -> Self {
        let mut fns: BTreeMap<String, ShallowFn> = BTreeMap::new();
        for name in registry.names() {
            fns.insert(name.to_string(), registry.get(name).expect("listed").shallow.clone());
        }
        for (name, f) in corpus_embeddings() {
            fns.insert(name.to_string(), f);
        }
        ShallowEnv {
            fns,
            calls: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn insert(&mut self, name: &str, f: ShallowFn) {
        self.fns.insert(name.to_string(), f);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.fns.contains_key(name)
    }

    pub fn call(&self, name: &str, arg: SValue) -> Result<SValue, ShallowError> {
        let f = self
            .fns
            .get(name)
            .ok_or_else(|| ShallowError::UnknownFunction(name.to_string()))?
            .clone();
        *self.calls.borrow_mut().entry(name.to_string()).or_default() += 1;
        f(self, arg)
    }

    pub fn calls(&self, name: &str) -> u64 {
        self.calls.borrow().get(name).copied().unwrap_or(0)
    }

    pub fn reset_counts(&self) {
        self.calls.borrow_mut().clear();
    }
}

impl CallS for ShallowEnv {
    fn call_s(&self, f: &SValue, arg: SValue) -> Result<SValue, ShallowError> {
        match f {
            SValue::Fun(name) => self.call(name, arg),
            other => Err(shape("apply", other)),
        }
    }
}

fn u32s<const N: usize>(name: &str, v: SValue) -> Result<[u32; N], ShallowError> {
    let xs: [SValue; N] = args(name, v)?;
    let mut out = [0; N];
    for (o, x) in out.iter_mut().zip(&xs) {
        *o = word(name, x)?;
    }
    Ok(out)
}

fn embed(
    f: impl Fn(&dyn CallS, SValue) -> Result<SValue, ShallowError> + Send + Sync + 'static,
) -> ShallowFn {
    Arc::new(f)
}

/// Hand-written shallow embeddings of the corpus functions.
fn corpus_embeddings() -> Vec<(&'static str, ShallowFn)> {
    vec![
        (
            "add",
            embed(|_, a| {
                let [x, y, _]: [SValue; 3] = args("add", a)?;
                Ok(SValue::U32(word("add", &x)?.wrapping_add(word("add", &y)?)))
            }),
        ),
        (
            "sum",
            embed(|c, a| {
                let xs = list("sum", a)?;
                let len = SValue::U32(length_s(&xs));
                c.call_s(
                    &SValue::fun("fold"),
                    SValue::Tuple(vec![
                        SValue::fun("add"),
                        SValue::U32(0),
                        SValue::List(xs),
                        SValue::U32(0),
                        len,
                        SValue::Unit,
                    ]),
                )
            }),
        ),
        (
            "stop",
            embed(|_, a| {
                let [st, _]: [SValue; 2] = args("stop", a)?;
                let [l, r, b] = args("stop", st)?;
                let b = boolean("stop", b)?;
                Ok(SValue::Bool(b || word("stop", &l)? >= word("stop", &r)?))
            }),
        ),
        (
            "search",
            embed(|c, a| {
                let [st, ob]: [SValue; 2] = args("search", a)?;
                let [l, r, b] = args("search", st)?;
                let (l, r, b) = (word("search", &l)?, word("search", &r)?, boolean("search", b)?);
                let [arr, v] = args("search", ob)?;
                let v = word("search", &v)?;
                let m = l.wrapping_add(r.wrapping_sub(l) / 2);
                let x = c.call_s(
                    &SValue::fun("get"),
                    SValue::Tuple(vec![arr, SValue::U32(m), SValue::U32(0)]),
                )?;
                let x = word("search", &x)?;
                let (l, r, b) = if x < v {
                    (m.wrapping_add(1), r, b)
                } else if x > v {
                    (l, m, b)
                } else {
                    (m, r, true)
                };
                Ok(SValue::Tuple(vec![SValue::U32(l), SValue::U32(r), SValue::Bool(b)]))
            }),
        ),
        (
            "binary_search",
            embed(|c, a| {
                let [arr, v]: [SValue; 2] = args("binary_search", a)?;
                let len = c.call_s(&SValue::fun("length"), arr.clone())?;
                let init = SValue::Tuple(vec![SValue::U32(0), len.clone(), SValue::Bool(false)]);
                let out = c.call_s(
                    &SValue::fun("repeat"),
                    SValue::Tuple(vec![
                        len.clone(),
                        SValue::fun("stop"),
                        SValue::fun("search"),
                        init,
                        SValue::Tuple(vec![arr, v]),
                    ]),
                )?;
                let [l, _, b] = args("binary_search", out)?;
                Ok(if boolean("binary_search", b)? { l } else { len })
            }),
        ),
        (
            "add_obs",
            embed(|_, a| {
                let [x, acc, k] = u32s("add_obs", a)?;
                Ok(SValue::U32(acc.wrapping_add(x.wrapping_mul(k))))
            }),
        ),
        (
            "bump",
            embed(|_, a| {
                let [x, acc, k] = u32s("bump", a)?;
                Ok(SValue::Tuple(vec![
                    SValue::U32(x.wrapping_add(k)),
                    SValue::U32(acc.wrapping_add(x)),
                ]))
            }),
        ),
        (
            "count8",
            embed(|_, a| {
                let [x, acc, k]: [SValue; 3] = args("count8", a)?;
                let acc = word("count8", &acc)?;
                let hit = byte("count8", &x)? > byte("count8", &k)?;
                Ok(SValue::U32(if hit { acc.wrapping_add(1) } else { acc }))
            }),
        ),
        (
            "bump8",
            embed(|_, a| {
                let [x, acc, k]: [SValue; 3] = args("bump8", a)?;
                let (x, acc, k) = (byte("bump8", &x)?, byte("bump8", &acc)?, byte("bump8", &k)?);
                Ok(SValue::Tuple(vec![
                    SValue::U8(x.wrapping_add(k)),
                    SValue::U8(acc.wrapping_add(x)),
                ]))
            }),
        ),
        (
            "reached",
            embed(|_, a| {
                let [acc, lim] = u32s("reached", a)?;
                Ok(SValue::Bool(acc >= lim))
            }),
        ),
        (
            "plus",
            embed(|_, a| {
                let [acc, k] = u32s("plus", a)?;
                Ok(SValue::U32(acc.wrapping_add(k)))
            }),
        ),
        (
            "arr_stop",
            embed(|_, a| {
                let [arr, k]: [SValue; 2] = args("arr_stop", a)?;
                let xs = list("arr_stop", arr)?;
                let x = word("arr_stop", &get_s(&xs, 0, SValue::U32(0)))?;
                Ok(SValue::Bool(x >= word("arr_stop", &k)?))
            }),
        ),
        (
            "arr_step",
            embed(|_, a| {
                let [arr, _]: [SValue; 2] = args("arr_step", a)?;
                let xs = list("arr_step", arr)?;
                let x = word("arr_step", &get_s(&xs, 0, SValue::U32(0)))?;
                Ok(SValue::list(put_s(&xs, 0, SValue::U32(x.wrapping_add(1)))))
            }),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffi::library_registry;

    fn us(xs: &[u32]) -> Vec<SValue> {
        xs.iter().map(|&x| SValue::U32(x)).collect()
    }

    #[test]
    fn get_examples() {
        assert_eq!(get_s(&us(&[10, 20, 30]), 1, SValue::U32(0)), SValue::U32(20));
        assert_eq!(get_s(&[], 5, SValue::U32(42)), SValue::U32(42));
    }

    #[test]
    fn mapaccum_on_slice() {
        let (ys, acc) = mapaccum_s::<()>(
            |x, acc, _| {
                let (x, a) = (x.as_u32().unwrap(), acc.as_u32().unwrap());
                Ok((SValue::U32(x + 1), SValue::U32(a + x)))
            },
            SValue::U32(0),
            &us(&[1, 2, 3]),
            1,
            3,
            SValue::Unit,
        )
        .unwrap();
        assert_eq!(ys, us(&[1, 3, 4]));
        assert_eq!(acc, SValue::U32(5));
    }

    #[test]
    fn mapaccum_with_inverted_range_keeps_list() {
        let (ys, acc) = mapaccum_s::<()>(
            |_, _, _| unreachable!(),
            SValue::U32(9),
            &us(&[1, 2, 3]),
            2,
            1,
            SValue::Unit,
        )
        .unwrap();
        assert_eq!((ys, acc), (us(&[1, 2, 3]), SValue::U32(9)));
    }

    #[test]
    fn repeat_examples() {
        let inc = |a: SValue, _: &SValue| Ok::<_, ()>(SValue::U32(a.as_u32().unwrap() + 1));
        let never = |_: &SValue, _: &SValue| Ok(false);
        assert_eq!(
            repeat_s(0, never, inc, SValue::U32(7), SValue::Unit),
            Ok(SValue::U32(7))
        );
        assert_eq!(
            repeat_s(5, |_, _| Ok(true), inc, SValue::U32(7), SValue::Unit),
            Ok(SValue::U32(7))
        );
        assert_eq!(
            repeat_s(3, never, inc, SValue::U32(0), SValue::Unit),
            Ok(SValue::U32(3))
        );
    }

    #[test]
    fn sum_and_search() {
        assert_eq!(sum_s(&[1, 2, 3]), 6);
        assert_eq!(sum_s(&[u32::MAX, 2]), 1);
        assert_eq!(binary_search_s(&[1, 3, 5, 7], 5), 2);
        assert_eq!(binary_search_s(&[], 0), 0);
        assert_eq!(binary_search_s(&[1, 3, 5, 7], 4), 4);
    }

    #[test]
    fn env_embeddings_agree_with_direct_functions() {
        let r = library_registry();
        let env = ShallowEnv::new(&r);
        assert_eq!(env.call("sum", SValue::u32_list(&[1, 2, 3])), Ok(SValue::U32(6)));
        let arg = SValue::Tuple(vec![SValue::u32_list(&[1, 3, 5, 7]), SValue::U32(5)]);
        assert_eq!(env.call("binary_search", arg), Ok(SValue::U32(2)));
        assert!(env.calls("search") >= 1);
    }

    #[test]
    fn rel_ps_cases() {
        assert!(rel_ps(&SValue::u32_list(&[1, 2]), &VValue::u32_array(&[1, 2])));
        assert!(!rel_ps(&SValue::u32_list(&[1]), &VValue::u32_array(&[1, 2])));
        assert!(rel_ps(&SValue::U32(5), &VValue::U32(5)));
    }
}
