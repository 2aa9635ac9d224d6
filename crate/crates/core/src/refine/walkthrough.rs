//! Reading results back out of each layer, and a single annotated run of a
//! shipped program through all five layers.

use crate::dynsem::{corr, frame_violation, Semantics, Store, UAbs, UValue, VValue};
use crate::ffi::library_registry;
use crate::lowmachine::{rel_hc, rel_vc, size_of, LowCtx, LowHeap, LowMachine, LowValue};
use crate::seeding::fnv1a;
use crate::shallow::rel_ps;
use crate::syntax::Type;

use super::check::Case;
use super::gen::place;
use super::mono::{mono_value, monomorphise};

/// The value an update-semantics result denotes, following locations.
pub fn reify_u(u: &UValue, store: &Store) -> Option<VValue> {
    Some(match u {
        UValue::Prod(us) => VValue::Prod(us.iter().map(|u| reify_u(u, store)).collect::<Option<_>>()?),
        UValue::Fun(f, ts) => VValue::Fun(f.clone(), ts.clone()),
        UValue::Loc(l) => return reify_u(store.get(*l)?, store),
        UValue::Abstract(UAbs::Array { elem, len, base }) => {
            let items = (0..*len as u64)
                .map(|i| store.get(base + i).and_then(UValue::to_prim))
                .collect::<Option<_>>()?;
            VValue::array(elem.clone(), items)
        }
        prim => prim.to_prim()?,
    })
}

/// The value a machine result of type `ty` denotes, reading arrays from
/// `heap` and naming functions through `table`.
pub fn reify_low(x: &LowValue, ty: &Type, heap: &LowHeap, table: &[String]) -> Option<VValue> {
    Some(match (x, ty) {
        (LowValue::Unit, _) => VValue::Unit,
        (LowValue::Bool(b), _) => VValue::Bool(*b),
        (LowValue::U8(n), _) => VValue::U8(*n),
        (LowValue::U32(n), _) => VValue::U32(*n),
        (LowValue::Tuple(xs), Type::Prod(ts)) if xs.len() == ts.len() => VValue::Prod(
            xs.iter()
                .zip(ts)
                .map(|(x, t)| reify_low(x, t, heap, table))
                .collect::<Option<_>>()?,
        ),
        (LowValue::FunId(fid), _) => VValue::fun(table.get(*fid as usize)?),
        (LowValue::StructArray { len, vals }, Type::Abs { args, .. }) => {
            let elem = args.first()?;
            let size = size_of(elem)?;
            let items = (0..*len)
                .map(|i| {
                    let x = heap.read_scalar(elem, vals.checked_add(size.checked_mul(i)?)?).ok()?;
                    reify_low(&x, elem, heap, table)
                })
                .collect::<Option<_>>()?;
            VValue::array(elem.clone(), items)
        }
        _ => return None,
    })
}

pub fn store_digest(store: &Store) -> String {
    format!(
        "{} cells, digest {:016x}",
        store.len(),
        fnv1a(store.snapshot_json().as_bytes())
    )
}

pub fn heap_digest(heap: &LowHeap) -> String {
    let bytes = heap.raw(0, heap.size()).unwrap_or_default();
    format!(
        "{} regions, digest {:016x}",
        heap.regions().len(),
        fnv1a(bytes)
    )
}

#[derive(Clone, Debug)]
pub struct LayerResult {
    pub layer: &'static str,
    pub value: String,
    pub digest: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub relation: &'static str,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct Walkthrough {
    pub program: &'static str,
    pub input: String,
    pub layers: Vec<LayerResult>,
    pub verdicts: Vec<Verdict>,
}

impl Walkthrough {
    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }
}

fn verdict(relation: &'static str, r: Result<(), String>) -> Verdict {
    match r {
        Ok(()) => Verdict {
            relation,
            holds: true,
            detail: String::new(),
        },
        Err(detail) => Verdict {
            relation,
            holds: false,
            detail,
        },
    }
}

/// Runs `case` on `v` at every layer and judges each relation between
/// neighbouring layers.
pub fn walkthrough(case: Case, v: &VValue, heap_bytes: u32) -> Result<Walkthrough, String> {
    let reg = library_registry();
    let poly = case.program();
    let m = monomorphise(&poly, &[case.entry()]).map_err(|e| e.to_string())?;
    let sem_p = Semantics::new(&poly, &reg);
    let sem_m = Semantics::new(&m.program, &reg).with_aliases(m.aliases.clone());
    let machine = LowMachine::new(&m.program, &reg, &m.aliases);
    let senv = crate::shallow::ShallowEnv::new(&reg);
    let f = poly.function(case.entry()).ok_or("no entry function")?;
    let (arg_t, ret_t) = (f.arg_ty.clone(), f.ret_ty.clone());
    let env = sem_m.typing_env();
    let input = place(v, &arg_t, &env, machine.table(), heap_bytes)?;
    let vm_in = mono_value(&m.names, v).map_err(|e| e.to_string())?;

    let s = senv.call(case.entry(), input.s.clone()).map_err(|e| format!("shallow: {e}"))?;
    let vp = sem_p
        .call_v(case.entry(), &[], v.clone())
        .map_err(|e| format!("value (polymorphic): {e}"))?;
    let vm = sem_m
        .call_v(case.entry(), &[], vm_in.clone())
        .map_err(|e| format!("value (monomorphic): {e}"))?;
    let (u, store) = sem_m
        .call_u(case.entry(), &[], input.u.clone(), input.store.clone())
        .map_err(|e| format!("update: {e}"))?;
    let (x, heap) = machine
        .call(case.entry(), input.low.clone(), input.heap.clone())
        .map_err(|e| format!("machine: {e}"))?;

    let show_u = reify_u(&u, &store).map_or_else(|| format!("{u:?}"), |v| v.to_string());
    let show_x = reify_low(&x, &ret_t, &heap, machine.table())
        .map_or_else(|| format!("{x:?}"), |v| v.to_string());
    let layers = vec![
        LayerResult {
            layer: "shallow",
            value: s.to_string(),
            digest: None,
        },
        LayerResult {
            layer: "value (polymorphic)",
            value: vp.to_string(),
            digest: None,
        },
        LayerResult {
            layer: "value (monomorphic)",
            value: vm.to_string(),
            digest: None,
        },
        LayerResult {
            layer: "update",
            value: show_u,
            digest: Some(store_digest(&store)),
        },
        LayerResult {
            layer: "machine",
            value: show_x,
            digest: Some(heap_digest(&heap)),
        },
    ];

    let mut verdicts = vec![
        verdict(
            "shallow ~ value",
            rel_ps(&s, &vp)
                .then_some(())
                .ok_or_else(|| format!("{s} vs {vp}")),
        ),
        verdict(
            "monomorphic = polymorphic",
            match mono_value(&m.names, &vp) {
                Ok(w) if w == vm => Ok(()),
                Ok(w) => Err(format!("{vm} vs {w}")),
                Err(e) => Err(e.to_string()),
            },
        ),
    ];
    let fi = corr(&env, &input.u, &input.store, &vm_in, &arg_t);
    let fo = corr(&env, &u, &store, &vm, &ret_t);
    verdicts.push(verdict(
        "update ~ value",
        match (&fi, &fo) {
            (Ok(_), Ok(_)) => Ok(()),
            (Err(r), _) | (_, Err(r)) => Err(r.to_string()),
        },
    ));
    verdicts.push(verdict(
        "frame",
        match (&fi, &fo) {
            (Ok(a), Ok(b)) => {
                if let Some(l) = b.r.difference(&a.r).next() {
                    Err(format!("read set grew by {l}"))
                } else if let Some(fv) = frame_violation(&a.w, &input.store, &b.w, &store) {
                    Err(format!("{} at {}", fv.clause, fv.loc))
                } else {
                    Ok(())
                }
            }
            _ => Err("footprints unavailable".into()),
        },
    ));
    let ctx = LowCtx {
        store: &store,
        amap: &input.amap,
        table: machine.table(),
    };
    verdicts.push(verdict(
        "machine value ~ update value",
        rel_vc(&ctx, &x, &u)
            .then_some(())
            .ok_or_else(|| format!("{x:?} vs {u:?}")),
    ));
    verdicts.push(verdict(
        "machine heap ~ store",
        rel_hc(&heap, &store, &input.amap).map_err(|e| e.to_string()),
    ));
    if case == Case::BinarySearch {
        verdicts.push(verdict(
            "array bytes unchanged",
            (input.heap.raw(0, input.heap.size()) == heap.raw(0, heap.size()))
                .then_some(())
                .ok_or_else(|| "heap bytes differ".to_string()),
        ));
    }
    Ok(Walkthrough {
        program: case.name(),
        input: v.to_string(),
        layers,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_walkthrough_agrees_everywhere() {
        let w = walkthrough(Case::Sum, &VValue::u32_array(&[1, 2, 3]), 1 << 12).unwrap();
        assert!(w.all_hold(), "{w:?}");
        assert!(w.layers.iter().all(|l| l.value == "6"), "{w:?}");
    }

    #[test]
    fn binary_search_walkthrough_finds_the_key() {
        let v = VValue::Prod(vec![VValue::u32_array(&[1, 3, 5, 7]), VValue::U32(5)]);
        let w = walkthrough(Case::BinarySearch, &v, 1 << 12).unwrap();
        assert!(w.all_hold(), "{w:?}");
        assert!(w.layers.iter().all(|l| l.value == "2"), "{w:?}");
        assert_eq!(w.verdicts.last().unwrap().relation, "array bytes unchanged");
    }

    #[test]
    fn reify_reads_arrays_through_headers() {
        let mut s = Store::new();
        let base = s.alloc_block([UValue::U8(4), UValue::U8(5)]);
        let h = s.alloc(UValue::Abstract(UAbs::Array {
            elem: Type::U8,
            len: 2,
            base,
        }));
        let v = reify_u(&UValue::Loc(h), &s).unwrap();
        assert_eq!(v, VValue::array(Type::U8, vec![VValue::U8(4), VValue::U8(5)]));
    }
}
