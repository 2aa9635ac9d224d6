//! Machine-level array library and loop. Arrays are passed as
//! `WArray { len, vals }` structs; elements live contiguously at `vals`.

use super::heap::{size_of, ExecOutcome, Failed, LowHeap, LowValue};
use crate::ffi::CallLow;
use crate::syntax::Type;

fn stuck(msg: impl Into<String>) -> Failed {
    Failed::Stuck(msg.into())
}

fn struct_array(v: &LowValue) -> Result<(u32, u32), Failed> {
    match v {
        LowValue::StructArray { len, vals } => Ok((*len, *vals)),
        other => Err(stuck(format!("expected an array struct, got {other:?}"))),
    }
}

fn word(v: &LowValue) -> Result<u32, Failed> {
    v.as_u32()
        .ok_or_else(|| stuck(format!("expected a word, got {v:?}")))
}

fn fun_id(v: &LowValue) -> Result<u32, Failed> {
    match v {
        LowValue::FunId(f) => Ok(*f),
        other => Err(stuck(format!("expected a function id, got {other:?}"))),
    }
}

fn elem_type(targs: &[Type]) -> Result<&Type, Failed> {
    targs
        .first()
        .filter(|t| size_of(t).is_some())
        .ok_or_else(|| stuck(format!("no unboxed element type in {targs:?}")))
}

/// Address of element `i`; the element block must be allocated.
fn elem_addr(heap: &LowHeap, elem: &Type, len: u32, vals: u32, i: u32) -> Result<u32, Failed> {
    heap.elems_region(elem, len, vals)?;
    let size = size_of(elem).expect("checked unboxed");
    i.checked_mul(size)
        .and_then(|off| vals.checked_add(off))
        .ok_or(Failed::Overflow)
}

fn args<const N: usize>(v: LowValue) -> Result<[LowValue; N], Failed> {
    match v {
        LowValue::Tuple(vs) if vs.len() == N => Ok(vs.try_into().expect("length checked")),
        other => Err(stuck(format!("expected a {N}-tuple, got {other:?}"))),
    }
}

pub fn low_length(heap: LowHeap, elem: &Type, arr: &LowValue) -> ExecOutcome {
    let (len, vals) = struct_array(arr)?;
    heap.elems_region(elem, len, vals)?;
    Ok((LowValue::U32(len), heap))
}

pub fn low_get(heap: LowHeap, elem: &Type, arr: &LowValue, i: u32, def: LowValue) -> ExecOutcome {
    let (len, vals) = struct_array(arr)?;
    heap.elems_region(elem, len, vals)?;
    if i < len {
        let x = heap.read_scalar(elem, elem_addr(&heap, elem, len, vals, i)?)?;
        Ok((x, heap))
    } else {
        Ok((def, heap))
    }
}

pub fn low_put(heap: LowHeap, elem: &Type, arr: LowValue, i: u32, v: &LowValue) -> ExecOutcome {
    let (len, vals) = struct_array(&arr)?;
    heap.elems_region(elem, len, vals)?;
    if i < len {
        let addr = elem_addr(&heap, elem, len, vals, i)?;
        Ok((arr, heap.write_scalar(addr, v)?))
    } else {
        Ok((arr, heap))
    }
}

#[allow(clippy::too_many_arguments)]
pub fn low_fold(
    call: &dyn CallLow,
    mut heap: LowHeap,
    elem: &Type,
    fid: u32,
    mut acc: LowValue,
    arr: &LowValue,
    frm: u32,
    to: u32,
    obsv: &LowValue,
) -> ExecOutcome {
    let (len, vals) = struct_array(arr)?;
    heap.elems_region(elem, len, vals)?;
    let end = to.min(len);
    let mut i = frm;
    while i < end {
        let x = heap.read_scalar(elem, elem_addr(&heap, elem, len, vals, i)?)?;
        let (a, h) = call.dispatch(fid, LowValue::Tuple(vec![x, acc, obsv.clone()]), heap)?;
        acc = a;
        heap = h;
        i += 1;
    }
    Ok((acc, heap))
}

#[allow(clippy::too_many_arguments)]
pub fn low_mapaccum(
    call: &dyn CallLow,
    mut heap: LowHeap,
    elem: &Type,
    fid: u32,
    mut acc: LowValue,
    arr: LowValue,
    frm: u32,
    to: u32,
    obsv: &LowValue,
) -> ExecOutcome {
    let (len, vals) = struct_array(&arr)?;
    heap.elems_region(elem, len, vals)?;
    let end = to.min(len);
    let mut i = frm;
    while i < end {
        let addr = elem_addr(&heap, elem, len, vals, i)?;
        let x = heap.read_scalar(elem, addr)?;
        let (r, h) = call.dispatch(fid, LowValue::Tuple(vec![x, acc, obsv.clone()]), heap)?;
        let [x, a] = args(r)?;
        heap = h.write_scalar(addr, &x)?;
        acc = a;
        i += 1;
    }
    Ok((LowValue::Tuple(vec![arr, acc]), heap))
}

pub fn low_repeat(
    call: &dyn CallLow,
    mut heap: LowHeap,
    n: u32,
    fid_stop: u32,
    fid_step: u32,
    mut acc: LowValue,
    obsv: &LowValue,
) -> ExecOutcome {
    for _ in 0..n {
        let (b, h) = call.dispatch(fid_stop, LowValue::Tuple(vec![acc.clone(), obsv.clone()]), heap)?;
        heap = h;
        match b {
            LowValue::Bool(true) => break,
            LowValue::Bool(false) => {}
            other => return Err(stuck(format!("stop returned {other:?}"))),
        }
        let (a, h) = call.dispatch(fid_step, LowValue::Tuple(vec![acc, obsv.clone()]), heap)?;
        acc = a;
        heap = h;
    }
    Ok((acc, heap))
}

// registry adaptors: (call, type arguments, heap, packed argument)

pub fn length_low(_: &dyn CallLow, targs: &[Type], heap: LowHeap, arg: LowValue) -> ExecOutcome {
    low_length(heap, elem_type(targs)?, &arg)
}

pub fn get_low(_: &dyn CallLow, targs: &[Type], heap: LowHeap, arg: LowValue) -> ExecOutcome {
    let [arr, i, d] = args(arg)?;
    low_get(heap, elem_type(targs)?, &arr, word(&i)?, d)
}

pub fn put_low(_: &dyn CallLow, targs: &[Type], heap: LowHeap, arg: LowValue) -> ExecOutcome {
    let [arr, i, v] = args(arg)?;
    low_put(heap, elem_type(targs)?, arr, word(&i)?, &v)
}

pub fn fold_low(call: &dyn CallLow, targs: &[Type], heap: LowHeap, arg: LowValue) -> ExecOutcome {
    let [f, acc, arr, frm, to, obs] = args(arg)?;
    low_fold(
        call,
        heap,
        elem_type(targs)?,
        fun_id(&f)?,
        acc,
        &arr,
        word(&frm)?,
        word(&to)?,
        &obs,
    )
}

pub fn mapaccum_low(
    call: &dyn CallLow,
    targs: &[Type],
    heap: LowHeap,
    arg: LowValue,
) -> ExecOutcome {
    let [f, acc, arr, frm, to, obs] = args(arg)?;
    low_mapaccum(
        call,
        heap,
        elem_type(targs)?,
        fun_id(&f)?,
        acc,
        arr,
        word(&frm)?,
        word(&to)?,
        &obs,
    )
}

pub fn repeat_low(call: &dyn CallLow, _: &[Type], heap: LowHeap, arg: LowValue) -> ExecOutcome {
    let [n, stop, step, acc, obs] = args(arg)?;
    low_repeat(call, heap, word(&n)?, fun_id(&stop)?, fun_id(&step)?, acc, &obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lowmachine::heap::RegionKind;

    /// A dispatch table of hand-written machine functions.
    struct Table(Vec<fn(LowValue) -> LowValue>);

    impl CallLow for Table {
        fn dispatch(&self, fid: u32, arg: LowValue, heap: LowHeap) -> ExecOutcome {
            let f = self.0.get(fid as usize).ok_or(Failed::UnknownFid(fid))?;
            Ok((f(arg), heap))
        }
    }

    fn w(v: &LowValue) -> u32 {
        v.as_u32().unwrap()
    }

    fn add(v: LowValue) -> LowValue {
        let [x, acc, _] = args(v).unwrap();
        LowValue::U32(w(&x).wrapping_add(w(&acc)))
    }

    fn bump(v: LowValue) -> LowValue {
        let [x, acc, _] = args(v).unwrap();
        LowValue::Tuple(vec![LowValue::U32(w(&x) + 1), LowValue::U32(w(&acc) + w(&x))])
    }

    fn never(_: LowValue) -> LowValue {
        LowValue::Bool(false)
    }

    fn always(_: LowValue) -> LowValue {
        LowValue::Bool(true)
    }

    fn inc(v: LowValue) -> LowValue {
        let [acc, _] = args(v).unwrap();
        LowValue::U32(w(&acc) + 1)
    }

    fn table() -> Table {
        Table(vec![add, bump, never, always, inc])
    }

    fn array(xs: &[u32]) -> (LowHeap, LowValue) {
        let mut h = LowHeap::new(4096);
        let vals = h.alloc(4 * xs.len() as u32, 4, RegionKind::Elems(Type::U32)).unwrap();
        for (i, x) in xs.iter().enumerate() {
            h = h.write_word(vals + 4 * i as u32, *x).unwrap();
        }
        h.skip(4);
        (h, LowValue::StructArray { len: xs.len() as u32, vals })
    }

    fn elems(h: &LowHeap, arr: &LowValue) -> Vec<u32> {
        let (len, vals) = struct_array(arr).unwrap();
        (0..len).map(|i| h.read_word(vals + 4 * i).unwrap()).collect()
    }

    #[test]
    fn length_and_dangling() {
        let (h, a) = array(&[1, 2, 3]);
        assert_eq!(low_length(h.clone(), &Type::U32, &a).unwrap().0, LowValue::U32(3));
        let (h0, a0) = array(&[]);
        assert_eq!(low_length(h0, &Type::U32, &a0).unwrap().0, LowValue::U32(0));
        let bogus = LowValue::StructArray { len: 3, vals: 0x800 };
        assert_eq!(low_length(h, &Type::U32, &bogus), Err(Failed::DanglingArray(0x800)));
    }

    #[test]
    fn get_in_and_out_of_bounds() {
        let (h, a) = array(&[10, 20, 30]);
        let get = |i, d| low_get(h.clone(), &Type::U32, &a, i, LowValue::U32(d)).unwrap().0;
        assert_eq!(get(1, 0), LowValue::U32(20));
        assert_eq!(get(3, 9), LowValue::U32(9));
        let (h0, a0) = array(&[]);
        assert_eq!(
            low_get(h0, &Type::U32, &a0, 5, LowValue::U32(42)).unwrap().0,
            LowValue::U32(42)
        );
    }

    #[test]
    fn put_changes_exactly_one_element() {
        let (h, a) = array(&[0, 0]);
        let (a2, h2) = low_put(h.clone(), &Type::U32, a.clone(), 1, &LowValue::U32(7)).unwrap();
        assert_eq!(a2, a);
        assert_eq!(elems(&h2, &a), vec![0, 7]);
        let (_, h3) = low_put(h.clone(), &Type::U32, a.clone(), 2, &LowValue::U32(7)).unwrap();
        assert_eq!(h3, h);
        let (_, h4) = low_put(h2, &Type::U32, a.clone(), 0, &LowValue::U32(1)).unwrap();
        let (_, h4) = low_put(h4, &Type::U32, a.clone(), 0, &LowValue::U32(2)).unwrap();
        assert_eq!(elems(&h4, &a), vec![2, 7]);
    }

    #[test]
    fn fold_clamps_and_sums() {
        let t = table();
        let (h, a) = array(&[1, 2, 3]);
        let fold = |frm, to| {
            low_fold(&t, h.clone(), &Type::U32, 0, LowValue::U32(0), &a, frm, to, &LowValue::Unit)
                .unwrap()
                .0
        };
        assert_eq!(fold(0, 3), LowValue::U32(6));
        assert_eq!(fold(3, 1), LowValue::U32(0));
        assert_eq!(fold(0, 99), LowValue::U32(6));
        assert_eq!(fold(1, 2), LowValue::U32(2));
    }

    #[test]
    fn mapaccum_rewrites_range() {
        let t = table();
        let (h, a) = array(&[1, 2]);
        let (r, h2) =
            low_mapaccum(&t, h, &Type::U32, 1, LowValue::U32(0), a.clone(), 0, 2, &LowValue::Unit)
                .unwrap();
        assert_eq!(r, LowValue::Tuple(vec![a.clone(), LowValue::U32(3)]));
        assert_eq!(elems(&h2, &a), vec![2, 3]);
        let (h, a) = array(&[5, 6]);
        let (r, h2) =
            low_mapaccum(&t, h, &Type::U32, 1, LowValue::U32(0), a.clone(), 1, 2, &LowValue::Unit)
                .unwrap();
        assert_eq!(r, LowValue::Tuple(vec![a.clone(), LowValue::U32(6)]));
        assert_eq!(elems(&h2, &a), vec![5, 7]);
    }

    #[test]
    fn repeat_counts() {
        let t = table();
        let h = LowHeap::new(64);
        let rep = |n, stop| {
            low_repeat(&t, h.clone(), n, stop, 4, LowValue::U32(0), &LowValue::Unit).unwrap().0
        };
        assert_eq!(rep(0, 2), LowValue::U32(0));
        assert_eq!(rep(5, 3), LowValue::U32(0));
        assert_eq!(rep(5, 2), LowValue::U32(5));
    }

    #[test]
    fn unknown_fid_fails() {
        let t = table();
        let (h, a) = array(&[1]);
        assert_eq!(
            low_fold(&t, h, &Type::U32, 999, LowValue::U32(0), &a, 0, 1, &LowValue::Unit),
            Err(Failed::UnknownFid(999))
        );
    }
}
