//! Arrays of unboxed elements: value typing at both semantics and the
//! library operations at the value and update layers.

use std::sync::Arc;

use rand::{Rng, RngCore};

use super::registry::{AbsTypeEntry, CallU, CallV, Layout, Reject};
use crate::dynsem::{
    corr, vtyping_u, vtyping_v, EvalError, Footprint, LocId, Store, TypingEnv, UAbs, UValue,
    VAbs, VValue,
};
use crate::lowmachine::{size_of, HEADER_BYTES};
use crate::syntax::Type;

/// Largest byte count addressable with 32-bit pointers.
pub const MAX_WORD: u64 = u32::MAX as u64;

/// `len × size τ ≤ max_word`: element addresses cannot overflow.
pub fn okay(len: u32, elem: &Type) -> bool {
    size_of(elem).is_some_and(|s| len as u64 * s as u64 <= MAX_WORD)
}

/// Element types arrays may hold.
pub const ELEM_TYPES: [Type; 3] = [Type::U32, Type::U8, Type::Bool];

pub fn random_elem(rng: &mut dyn RngCore, elem: &Type) -> VValue {
    match elem {
        Type::U8 => VValue::U8(rng.gen()),
        Type::Bool => VValue::Bool(rng.gen()),
        _ => VValue::U32(rng.gen()),
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ArrayType;

fn elem_arg(args: &[Type]) -> Result<&Type, Reject> {
    match args {
        [t] if size_of(t).is_some() => Ok(t),
        _ => Err(Reject::new(
            "shape",
            format!("Array expects one unboxed type argument, got {args:?}"),
        )),
    }
}

impl ArrayType {
    fn elements(
        &self,
        u: &UAbs,
        store: &Store,
        args: &[Type],
    ) -> Result<(Type, u32, LocId), Reject> {
        let elem = elem_arg(args)?;
        let UAbs::Array { elem: e, len, base } = u;
        if e != elem {
            return Err(Reject::new(
                "element-ill-typed",
                format!("array of {e} used at element type {elem}"),
            ));
        }
        if !okay(*len, elem) {
            return Err(Reject::new(
                "overflow",
                format!("{len} elements of {elem} exceed the address space"),
            ));
        }
        if let Some(i) = (0..*len as LocId).find(|i| !store.contains(base + i)) {
            return Err(Reject::new(
                "dangling",
                format!("element {i} at location {} is unmapped", base + i),
            ));
        }
        Ok((elem.clone(), *len, *base))
    }

    fn footprint(base: LocId, len: u32, readonly: bool) -> Footprint {
        let locs = (base..base + len as LocId).collect();
        if readonly {
            Footprint::readonly(locs)
        } else {
            Footprint::writable(locs)
        }
    }
}

impl AbsTypeEntry for ArrayType {
    fn tag(&self) -> &str {
        "Array"
    }

    fn arity(&self) -> usize {
        1
    }

    fn vtyping_v(
        &self,
        env: &TypingEnv,
        v: &VAbs,
        args: &[Type],
        _readonly: bool,
    ) -> Result<(), Reject> {
        let elem = elem_arg(args)?;
        let VAbs::Array { elem: e, items } = v;
        if e != elem {
            return Err(Reject::new(
                "element-ill-typed",
                format!("array of {e} used at element type {elem}"),
            ));
        }
        if u32::try_from(items.len()).is_err() {
            return Err(Reject::new("overflow", "more than 2^32 - 1 elements"));
        }
        for (i, x) in items.iter().enumerate() {
            vtyping_v(env, x, elem)
                .map_err(|r| Reject::new("element-ill-typed", format!("element {i}: {r}")))?;
        }
        Ok(())
    }

    fn vtyping_u(
        &self,
        env: &TypingEnv,
        u: &UAbs,
        store: &Store,
        args: &[Type],
        readonly: bool,
    ) -> Result<Footprint, Reject> {
        let (elem, len, base) = self.elements(u, store, args)?;
        for i in 0..len as LocId {
            let x = store.get(base + i).expect("checked mapped");
            match vtyping_u(env, x, store, &elem) {
                Ok(fp) if fp.is_empty() => {}
                Ok(_) => {
                    return Err(Reject::new(
                        "element-ill-typed",
                        format!("element {i} has a non-empty footprint"),
                    ))
                }
                Err(r) => {
                    return Err(Reject::new("element-ill-typed", format!("element {i}: {r}")))
                }
            }
        }
        Ok(Self::footprint(base, len, readonly))
    }

    fn corr(
        &self,
        env: &TypingEnv,
        u: &UAbs,
        store: &Store,
        v: &VAbs,
        args: &[Type],
        readonly: bool,
    ) -> Result<Footprint, Reject> {
        let (elem, len, base) = self.elements(u, store, args)?;
        let VAbs::Array { items, .. } = v;
        if items.len() != len as usize {
            return Err(Reject::new(
                "differ",
                format!("length {len} against {} elements", items.len()),
            ));
        }
        for (i, x) in items.iter().enumerate() {
            let y = store.get(base + i as LocId).expect("checked mapped");
            match corr(env, y, store, x, &elem) {
                Ok(fp) if fp.is_empty() => {}
                Ok(_) => {
                    return Err(Reject::new(
                        "element-ill-typed",
                        format!("element {i} has a non-empty footprint"),
                    ))
                }
                Err(r) => return Err(Reject::new(r.clause, format!("element {i}: {}", r.detail))),
            }
        }
        Ok(Self::footprint(base, len, readonly))
    }

    fn layout(&self, args: &[Type]) -> Option<Layout> {
        let elem = elem_arg(args).ok()?;
        Some(Layout {
            header_bytes: HEADER_BYTES,
            elem_size: size_of(elem)?,
        })
    }

    fn gen_u(&self, rng: &mut dyn RngCore, store: &mut Store, max_len: u32) -> (UAbs, Vec<Type>) {
        let elem = ELEM_TYPES[rng.gen_range(0..ELEM_TYPES.len())].clone();
        let len = rng.gen_range(0..=max_len);
        let vals: Vec<UValue> = (0..len)
            .map(|_| UValue::from_prim(&random_elem(rng, &elem)).expect("prim"))
            .collect();
        let base = store.alloc_block(vals);
        (
            UAbs::Array {
                elem: elem.clone(),
                len,
                base,
            },
            vec![elem],
        )
    }

    fn gen_v(&self, rng: &mut dyn RngCore, max_len: u32) -> (VAbs, Vec<Type>) {
        let elem = ELEM_TYPES[rng.gen_range(0..ELEM_TYPES.len())].clone();
        let len = rng.gen_range(0..=max_len);
        let items = (0..len).map(|_| random_elem(rng, &elem)).collect();
        (
            VAbs::Array {
                elem: elem.clone(),
                items: Arc::new(items),
            },
            vec![elem],
        )
    }
}

// argument plumbing

pub(crate) fn v_args<const N: usize>(name: &str, v: VValue) -> Result<[VValue; N], EvalError> {
    match v {
        VValue::Prod(vs) if vs.len() == N => Ok(vs.try_into().expect("length checked")),
        other => Err(EvalError::undefined(name, format!("expected {N}-tuple, got {other}"))),
    }
}

pub(crate) fn u_args<const N: usize>(name: &str, u: UValue) -> Result<[UValue; N], EvalError> {
    match u {
        UValue::Prod(us) if us.len() == N => Ok(us.try_into().expect("length checked")),
        other => Err(EvalError::undefined(name, format!("expected {N}-tuple, got {other:?}"))),
    }
}

pub(crate) fn v_u32(name: &str, v: &VValue) -> Result<u32, EvalError> {
    v.as_u32()
        .ok_or_else(|| EvalError::undefined(name, format!("expected U32, got {v}")))
}

pub(crate) fn u_u32(name: &str, u: &UValue) -> Result<u32, EvalError> {
    u.as_u32()
        .ok_or_else(|| EvalError::undefined(name, format!("expected U32, got {u:?}")))
}

fn v_array(name: &str, v: VValue) -> Result<(Type, Arc<Vec<VValue>>), EvalError> {
    match v {
        VValue::Abstract(VAbs::Array { elem, items }) => Ok((elem, items)),
        other => Err(EvalError::undefined(name, format!("expected an array, got {other}"))),
    }
}

/// Element type, length and base location of an array value: either a
/// location holding the array header, or the header itself.
pub fn u_array(name: &str, u: &UValue, store: &Store) -> Result<(Type, u32, LocId), EvalError> {
    let header = match u {
        UValue::Loc(l) => store.get(*l).ok_or(EvalError::Dangling(*l))?,
        other => other,
    };
    match header {
        UValue::Abstract(UAbs::Array { elem, len, base }) => Ok((elem.clone(), *len, *base)),
        other => Err(EvalError::undefined(
            name,
            format!("no array header at {u:?}, found {other:?}"),
        )),
    }
}

fn u_elem(store: &Store, l: LocId) -> Result<UValue, EvalError> {
    store.get(l).cloned().ok_or(EvalError::Dangling(l))
}

/// `[frm, min(to, len))`, empty when `frm` is past the end.
pub fn range(frm: u32, to: u32, len: u32) -> std::ops::Range<u32> {
    frm..to.min(len)
}

// value semantics

pub fn length_v(_: &dyn CallV, _: &[Type], arg: VValue) -> Result<VValue, EvalError> {
    let (_, items) = v_array("length", arg)?;
    Ok(VValue::U32(items.len() as u32))
}

pub fn get_v(_: &dyn CallV, _: &[Type], arg: VValue) -> Result<VValue, EvalError> {
    let [arr, i, d] = v_args("get", arg)?;
    let i = v_u32("get", &i)?;
    let (_, items) = v_array("get", arr)?;
    Ok(items.get(i as usize).cloned().unwrap_or(d))
}

pub fn put_v(_: &dyn CallV, _: &[Type], arg: VValue) -> Result<VValue, EvalError> {
    let [arr, i, x] = v_args("put", arg)?;
    let i = v_u32("put", &i)? as usize;
    let (elem, mut items) = v_array("put", arr)?;
    if i < items.len() {
        Arc::make_mut(&mut items)[i] = x;
    }
    Ok(VValue::Abstract(VAbs::Array { elem, items }))
}

pub fn fold_v(call: &dyn CallV, _: &[Type], arg: VValue) -> Result<VValue, EvalError> {
    let [f, mut acc, arr, frm, to, obs] = v_args("fold", arg)?;
    let (frm, to) = (v_u32("fold", &frm)?, v_u32("fold", &to)?);
    let (_, items) = v_array("fold", arr)?;
    for i in range(frm, to, items.len() as u32) {
        acc = call.call_v(&f, VValue::Prod(vec![items[i as usize].clone(), acc, obs.clone()]))?;
    }
    Ok(acc)
}

pub fn mapaccum_v(call: &dyn CallV, _: &[Type], arg: VValue) -> Result<VValue, EvalError> {
    let [f, mut acc, arr, frm, to, obs] = v_args("mapaccum", arg)?;
    let (frm, to) = (v_u32("mapaccum", &frm)?, v_u32("mapaccum", &to)?);
    let (elem, mut items) = v_array("mapaccum", arr)?;
    for i in range(frm, to, items.len() as u32) {
        let i = i as usize;
        let x = items[i].clone();
        let r = call.call_v(&f, VValue::Prod(vec![x, acc, obs.clone()]))?;
        let [x, a] = v_args("mapaccum", r)?;
        Arc::make_mut(&mut items)[i] = x;
        acc = a;
    }
    Ok(VValue::Prod(vec![
        VValue::Abstract(VAbs::Array { elem, items }),
        acc,
    ]))
}

// update semantics

pub fn length_u(
    _: &dyn CallU,
    _: &[Type],
    store: Store,
    arg: UValue,
) -> Result<(UValue, Store), EvalError> {
    let (_, len, _) = u_array("length", &arg, &store)?;
    Ok((UValue::U32(len), store))
}

pub fn get_u(
    _: &dyn CallU,
    _: &[Type],
    store: Store,
    arg: UValue,
) -> Result<(UValue, Store), EvalError> {
    let [arr, i, d] = u_args("get", arg)?;
    let i = u_u32("get", &i)?;
    let (_, len, base) = u_array("get", &arr, &store)?;
    let y = if i < len {
        u_elem(&store, base + i as LocId)?
    } else {
        d
    };
    Ok((y, store))
}

pub fn put_u(
    _: &dyn CallU,
    _: &[Type],
    mut store: Store,
    arg: UValue,
) -> Result<(UValue, Store), EvalError> {
    let [arr, i, x] = u_args("put", arg)?;
    let i = u_u32("put", &i)?;
    let (_, len, base) = u_array("put", &arr, &store)?;
    if i < len {
        let l = base + i as LocId;
        if !store.contains(l) {
            return Err(EvalError::Dangling(l));
        }
        store.set(l, x);
    }
    Ok((arr, store))
}

pub fn fold_u(
    call: &dyn CallU,
    _: &[Type],
    mut store: Store,
    arg: UValue,
) -> Result<(UValue, Store), EvalError> {
    let [f, mut acc, arr, frm, to, obs] = u_args("fold", arg)?;
    let (frm, to) = (u_u32("fold", &frm)?, u_u32("fold", &to)?);
    let (_, len, base) = u_array("fold", &arr, &store)?;
    for i in range(frm, to, len) {
        let x = u_elem(&store, base + i as LocId)?;
        let (a, s) = call.call_u(&f, UValue::Prod(vec![x, acc, obs.clone()]), store)?;
        acc = a;
        store = s;
    }
    Ok((acc, store))
}

pub fn mapaccum_u(
    call: &dyn CallU,
    _: &[Type],
    mut store: Store,
    arg: UValue,
) -> Result<(UValue, Store), EvalError> {
    let [f, mut acc, arr, frm, to, obs] = u_args("mapaccum", arg)?;
    let (frm, to) = (u_u32("mapaccum", &frm)?, u_u32("mapaccum", &to)?);
    let (_, len, base) = u_array("mapaccum", &arr, &store)?;
    for i in range(frm, to, len) {
        let l = base + i as LocId;
        let x = u_elem(&store, l)?;
        let (r, s) = call.call_u(&f, UValue::Prod(vec![x, acc, obs.clone()]), store)?;
        let [x, a] = u_args("mapaccum", r)?;
        store = s;
        store.set(l, x);
        acc = a;
    }
    Ok((UValue::Prod(vec![arr, acc]), store))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsem::eval::Aliases;
    use crate::ffi::{library_registry, Registry};
    use crate::syntax::Program;

    struct NoCalls;

    impl CallV for NoCalls {
        fn call_v(&self, _: &VValue, _: VValue) -> Result<VValue, EvalError> {
            unreachable!()
        }
    }

    impl CallU for NoCalls {
        fn call_u(&self, _: &UValue, _: UValue, _: Store) -> Result<(UValue, Store), EvalError> {
            unreachable!()
        }
    }

    fn stored(xs: &[u32]) -> (Store, UValue, LocId) {
        let mut s = Store::new();
        let base = s.alloc_block(xs.iter().map(|&x| UValue::U32(x)));
        let hdr = s.alloc(UValue::Abstract(UAbs::Array {
            elem: Type::U32,
            len: xs.len() as u32,
            base,
        }));
        (s, UValue::Loc(hdr), base)
    }

    fn with_env<R>(f: impl FnOnce(&TypingEnv) -> R) -> R {
        let p = Program::default();
        let r: Registry = library_registry();
        let al = Aliases::new();
        f(&TypingEnv {
            program: &p,
            registry: &r,
            aliases: &al,
        })
    }

    #[test]
    fn put_in_bounds_writes_one_cell() {
        let (s, arr, base) = stored(&[0, 0]);
        let arg = UValue::Prod(vec![arr.clone(), UValue::U32(1), UValue::U32(7)]);
        let (r, s2) = put_u(&NoCalls, &[Type::U32], s.clone(), arg).unwrap();
        assert_eq!(r, arr);
        assert_eq!(s2.get(base + 1), Some(&UValue::U32(7)));
        assert_eq!(s2.get(base), Some(&UValue::U32(0)));
        let mut expect = s;
        expect.set(base + 1, UValue::U32(7));
        assert_eq!(s2, expect);
    }

    #[test]
    fn put_out_of_bounds_is_a_no_op() {
        let (s, arr, _) = stored(&[0, 0]);
        let arg = UValue::Prod(vec![arr.clone(), UValue::U32(2), UValue::U32(7)]);
        let (r, s2) = put_u(&NoCalls, &[Type::U32], s.clone(), arg).unwrap();
        assert_eq!((r, s2), (arr, s));
        let v = VValue::u32_array(&[0, 0]);
        let arg = VValue::Prod(vec![v.clone(), VValue::U32(9), VValue::U32(7)]);
        assert_eq!(put_v(&NoCalls, &[Type::U32], arg).unwrap(), v);
    }

    #[test]
    fn put_value_updates_list() {
        let arg = VValue::Prod(vec![VValue::u32_array(&[0, 0]), VValue::U32(1), VValue::U32(7)]);
        assert_eq!(put_v(&NoCalls, &[Type::U32], arg).unwrap(), VValue::u32_array(&[0, 7]));
    }

    #[test]
    fn get_default_out_of_bounds() {
        let (s, arr, _) = stored(&[10, 20, 30]);
        let get = |i| {
            get_u(&NoCalls, &[Type::U32], s.clone(), UValue::Prod(vec![arr.clone(), UValue::U32(i), UValue::U32(42)]))
                .unwrap()
                .0
        };
        assert_eq!(get(1), UValue::U32(20));
        assert_eq!(get(3), UValue::U32(42));
        let arg = VValue::Prod(vec![VValue::u32_array(&[]), VValue::U32(5), VValue::U32(42)]);
        assert_eq!(get_v(&NoCalls, &[Type::U32], arg).unwrap(), VValue::U32(42));
    }

    #[test]
    fn length_both_layers() {
        let (s, arr, _) = stored(&[1, 2, 3]);
        assert_eq!(length_u(&NoCalls, &[Type::U32], s, arr).unwrap().0, UValue::U32(3));
        assert_eq!(
            length_v(&NoCalls, &[Type::U32], VValue::u32_array(&[1, 2, 3])).unwrap(),
            VValue::U32(3)
        );
    }

    #[test]
    fn vtyping_u_rejections() {
        with_env(|env| {
            let mut s = Store::new();
            let base = s.alloc_block([UValue::U32(1), UValue::U32(2)]);
            let a = UAbs::Array { elem: Type::U32, len: 2, base };
            let fp = ArrayType.vtyping_u(env, &a, &s, &[Type::U32], false).unwrap();
            assert_eq!(fp.w.len(), 2);
            let huge = UAbs::Array { elem: Type::U32, len: 1 << 30, base };
            assert_eq!(
                ArrayType.vtyping_u(env, &huge, &s, &[Type::U32], false).unwrap_err().clause,
                "overflow"
            );
            s.remove(base + 1);
            assert_eq!(
                ArrayType.vtyping_u(env, &a, &s, &[Type::U32], false).unwrap_err().clause,
                "dangling"
            );
            s.set(base + 1, UValue::Bool(true));
            assert_eq!(
                ArrayType.vtyping_u(env, &a, &s, &[Type::U32], false).unwrap_err().clause,
                "element-ill-typed"
            );
        })
    }

    #[test]
    fn okay_boundary() {
        assert!(okay(u32::MAX, &Type::U8));
        assert!(okay((1 << 30) - 1, &Type::U32));
        assert!(!okay(1 << 30, &Type::U32));
    }
}
