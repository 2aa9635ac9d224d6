//! Relations between machine states and update-semantics states, and the
//! canonical machine image of a store.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::heap::{align_of, size_of, Failed, LowHeap, LowValue, Region, RegionKind, HEADER_BYTES};
use super::interp::from_lit;
use crate::dynsem::{LocId, Store, UAbs, UValue};
use crate::syntax::{Lit, Type};

/// Store locations to machine addresses.
pub type AddrMap = BTreeMap<LocId, u32>;

/// What `rel_vc` needs besides the two values.
#[derive(Clone, Copy)]
pub struct LowCtx<'a> {
    pub store: &'a Store,
    pub amap: &'a AddrMap,
    /// Function names indexed by function id.
    pub table: &'a [String],
}

fn prim_lit(u: &UValue) -> Option<Lit> {
    Some(match u {
        UValue::Unit => Lit::Unit,
        UValue::Bool(b) => Lit::Bool(*b),
        UValue::U8(n) => Lit::U8(*n),
        UValue::U32(n) => Lit::U32(*n),
        _ => return None,
    })
}

fn scalar_type(u: &UValue) -> Option<Type> {
    Some(match u {
        UValue::Bool(_) => Type::Bool,
        UValue::U8(_) => Type::U8,
        UValue::U32(_) => Type::U32,
        _ => return None,
    })
}

fn array_of<'s>(store: &'s Store, u: &'s UValue) -> Option<&'s UAbs> {
    match u {
        UValue::Loc(l) => match store.get(*l)? {
            UValue::Abstract(a) => Some(a),
            _ => None,
        },
        UValue::Abstract(a) => Some(a),
        _ => None,
    }
}

/// Machine value related to an update value, if one exists.
pub fn rel_vc(ctx: &LowCtx, x: &LowValue, u: &UValue) -> bool {
    match (x, u) {
        (LowValue::Tuple(xs), UValue::Prod(us)) => {
            xs.len() == us.len() && xs.iter().zip(us).all(|(x, u)| rel_vc(ctx, x, u))
        }
        (LowValue::FunId(fid), UValue::Fun(name, ts)) => {
            ts.is_empty() && ctx.table.get(*fid as usize) == Some(name)
        }
        (LowValue::StructArray { len, vals }, _) => match array_of(ctx.store, u) {
            Some(UAbs::Array { len: l, base, .. }) => {
                l == len && ctx.amap.get(base) == Some(vals)
            }
            None => false,
        },
        _ => prim_lit(u).is_some_and(|l| from_lit(l) == *x),
    }
}

/// The machine image of an update value under `amap`.
pub fn to_low(u: &UValue, store: &Store, amap: &AddrMap, table: &[String]) -> Option<LowValue> {
    Some(match u {
        UValue::Prod(us) => LowValue::Tuple(
            us.iter()
                .map(|u| to_low(u, store, amap, table))
                .collect::<Option<_>>()?,
        ),
        UValue::Fun(name, ts) if ts.is_empty() => {
            LowValue::FunId(table.iter().position(|n| n == name)? as u32)
        }
        UValue::Fun(..) => return None,
        UValue::Loc(_) | UValue::Abstract(_) => {
            let UAbs::Array { len, base, .. } = array_of(store, u)?;
            LowValue::StructArray {
                len: *len,
                vals: *amap.get(base)?,
            }
        }
        _ => from_lit(prim_lit(u)?),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeapMismatch(pub String);

impl fmt::Display for HeapMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for HeapMismatch {}

fn fail<T>(msg: String) -> Result<T, HeapMismatch> {
    Err(HeapMismatch(msg))
}

/// The heap relation: every store cell is encoded at its mapped address,
/// array headers and element blocks follow the array layout, and the
/// allocation table is exactly the set of regions the store induces.
pub fn rel_hc(heap: &LowHeap, store: &Store, amap: &AddrMap) -> Result<(), HeapMismatch> {
    let mut seen = BTreeSet::new();
    for (l, a) in amap {
        if !seen.insert(*a) {
            return fail(format!("address {a:#x} mapped twice (again by location {l})"));
        }
    }
    let addr = |l: LocId| {
        amap.get(&l)
            .copied()
            .ok_or_else(|| HeapMismatch(format!("location {l} has no address")))
    };
    let mut induced: BTreeSet<Region> = BTreeSet::new();
    let mut element_of: BTreeMap<LocId, Type> = BTreeMap::new();
    for (l, u) in store.iter() {
        if let UValue::Abstract(UAbs::Array { elem, len, base }) = u {
            let size = match size_of(elem) {
                Some(s) => s,
                None => return fail(format!("array at {l} has boxed elements")),
            };
            let h = addr(l)?;
            let vals = addr(*base)?;
            induced.insert(Region {
                base: h,
                len: HEADER_BYTES,
                kind: RegionKind::Header,
            });
            let bytes = match len.checked_mul(size) {
                Some(b) => b,
                None => return fail(format!("array at {l} overflows")),
            };
            induced.insert(Region {
                base: vals,
                len: bytes,
                kind: RegionKind::Elems(elem.clone()),
            });
            let hlen = heap.read_word(h).map_err(|e| HeapMismatch(e.to_string()))?;
            let hvals = heap.read_word(h + 4).map_err(|e| HeapMismatch(e.to_string()))?;
            if (hlen, hvals) != (*len, vals) {
                return fail(format!(
                    "header of {l} at {h:#x} holds ({hlen}, {hvals:#x}), expected ({len}, {vals:#x})"
                ));
            }
            for i in 0..*len {
                let p = base + i as LocId;
                let want = vals as u64 + size as u64 * i as u64;
                if addr(p)? as u64 != want {
                    return fail(format!("element {i} of {l} is not contiguous"));
                }
                element_of.insert(p, elem.clone());
            }
        }
    }
    for (l, u) in store.iter() {
        if matches!(u, UValue::Abstract(_)) {
            continue;
        }
        let a = addr(l)?;
        let t = match element_of.get(&l) {
            Some(t) => t.clone(),
            None => {
                let t = match scalar_type(u) {
                    Some(t) => t,
                    None => return fail(format!("location {l} holds {u:?}, which has no layout")),
                };
                induced.insert(Region {
                    base: a,
                    len: size_of(&t).expect("scalar"),
                    kind: RegionKind::Cell(t.clone()),
                });
                t
            }
        };
        let got = heap.read_scalar(&t, a).map_err(|e| HeapMismatch(e.to_string()))?;
        match prim_lit(u) {
            Some(lit) if from_lit(lit) == got => {}
            _ => return fail(format!("location {l} holds {u:?} but {a:#x} decodes to {got:?}")),
        }
    }
    let actual: BTreeSet<Region> = heap.regions().iter().cloned().collect();
    if actual != induced || actual.len() != heap.regions().len() {
        return fail(format!(
            "allocation table {:?} differs from the store's regions {:?}",
            heap.regions(),
            induced
        ));
    }
    Ok(())
}

/// Lays out `store` in a fresh heap: each array gets a header and an
/// element block, every other cell a scalar slot.
pub fn lay_out(store: &Store, heap_bytes: u32) -> Result<(LowHeap, AddrMap), Failed> {
    let mut heap = LowHeap::new(heap_bytes);
    let mut amap = AddrMap::new();
    let mut blocks: BTreeMap<LocId, u32> = BTreeMap::new();
    for (l, u) in store.iter() {
        let UValue::Abstract(UAbs::Array { elem, len, base }) = u else {
            continue;
        };
        let size = size_of(elem).ok_or_else(|| Failed::Stuck(format!("{elem} is boxed")))?;
        let h = heap.alloc(HEADER_BYTES, 4, RegionKind::Header)?;
        amap.insert(l, h);
        let vals = match blocks.get(base) {
            Some(v) => *v,
            None => {
                let bytes = len.checked_mul(size).ok_or(Failed::Overflow)?;
                let vals = heap.alloc(bytes, align_of(elem).unwrap_or(1), RegionKind::Elems(elem.clone()))?;
                if bytes == 0 {
                    heap.skip(1);
                }
                for i in 0..*len {
                    let p = base + i as LocId;
                    let a = vals + size * i;
                    let x = store
                        .get(p)
                        .and_then(prim_lit)
                        .ok_or_else(|| Failed::Stuck(format!("element location {p} is not a scalar")))?;
                    heap = heap.write_scalar(a, &from_lit(x))?;
                    amap.insert(p, a);
                }
                amap.insert(*base, vals);
                blocks.insert(*base, vals);
                vals
            }
        };
        heap = heap.write_word(h, *len)?.write_word(h + 4, vals)?;
    }
    for (l, u) in store.iter() {
        if amap.contains_key(&l) {
            continue;
        }
        let t = scalar_type(u).ok_or_else(|| Failed::Stuck(format!("location {l} has no layout")))?;
        let size = size_of(&t).expect("scalar");
        let a = heap.alloc(size, size, RegionKind::Cell(t))?;
        heap = heap.write_scalar(a, &from_lit(prim_lit(u).expect("scalar")))?;
        amap.insert(l, a);
    }
    Ok((heap, amap))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn array_store(xs: &[u32]) -> (Store, LocId) {
        let mut s = Store::new();
        let base = if xs.is_empty() {
            s.reserve(1)
        } else {
            s.alloc_block(xs.iter().map(|&x| UValue::U32(x)))
        };
        let l = s.alloc(UValue::Abstract(UAbs::Array {
            elem: Type::U32,
            len: xs.len() as u32,
            base,
        }));
        (s, l)
    }

    #[test]
    fn empty_store_relates_to_empty_heap() {
        let s = Store::new();
        let (h, amap) = lay_out(&s, 256).unwrap();
        assert!(amap.is_empty());
        assert_eq!(rel_hc(&h, &s, &amap), Ok(()));
    }

    #[test]
    fn scalar_cell_encodes_little_endian() {
        let mut s = Store::new();
        let l = s.alloc(UValue::U32(7));
        let (h, amap) = lay_out(&s, 256).unwrap();
        assert_eq!(h.raw(amap[&l], 4).unwrap(), &7u32.to_le_bytes());
        assert_eq!(rel_hc(&h, &s, &amap), Ok(()));
    }

    #[test]
    fn flipped_byte_breaks_relation() {
        let (s, _) = array_store(&[1, 2, 3]);
        let (mut h, amap) = lay_out(&s, 256).unwrap();
        assert!(rel_hc(&h, &s, &amap).is_ok());
        h.corrupt_byte(amap[&1], 0x10);
        assert!(rel_hc(&h, &s, &amap).is_err());
    }

    #[test]
    fn extra_allocation_breaks_relation() {
        let (s, _) = array_store(&[1]);
        let (mut h, amap) = lay_out(&s, 256).unwrap();
        h.alloc(4, 4, RegionKind::Cell(Type::U32)).unwrap();
        assert!(rel_hc(&h, &s, &amap).is_err());
    }

    #[test]
    fn struct_array_relates_to_header() {
        let (s, l) = array_store(&[5, 6]);
        let (_, amap) = lay_out(&s, 256).unwrap();
        let table = vec!["f".to_string()];
        let ctx = LowCtx { store: &s, amap: &amap, table: &table };
        let u = UValue::Loc(l);
        let x = to_low(&u, &s, &amap, &table).unwrap();
        assert_eq!(x, LowValue::StructArray { len: 2, vals: amap[&0] });
        assert!(rel_vc(&ctx, &x, &u));
        assert!(!rel_vc(&ctx, &LowValue::StructArray { len: 3, vals: amap[&0] }, &u));
        assert!(rel_vc(&ctx, &LowValue::U32(5), &UValue::U32(5)));
        assert!(rel_vc(&ctx, &LowValue::FunId(0), &UValue::fun("f")));
        assert!(!rel_vc(&ctx, &LowValue::FunId(1), &UValue::fun("f")));
    }

    #[test]
    fn empty_array_lays_out() {
        let (s, l) = array_store(&[]);
        let (h, amap) = lay_out(&s, 256).unwrap();
        assert!(rel_hc(&h, &s, &amap).is_ok());
        let x = to_low(&UValue::Loc(l), &s, &amap, &[]).unwrap();
        assert!(matches!(x, LowValue::StructArray { len: 0, .. }));
    }
}
