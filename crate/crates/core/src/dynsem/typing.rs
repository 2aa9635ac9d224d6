//! Value typing for both semantics, the frame relation and the combined
//! value/update correspondence.

use std::collections::BTreeSet;

use serde::Serialize;

use super::eval::Aliases;
use super::store::Store;
use super::value::{Footprint, LocId, UAbs, UValue, VValue};
use crate::ffi::{Registry, Reject};
use crate::syntax::{Program, Subst, Type};

/// Where value typing looks up function signatures and abstract types.
#[derive(Clone, Copy)]
pub struct TypingEnv<'a> {
    pub program: &'a Program,
    pub registry: &'a Registry,
    pub aliases: &'a Aliases,
}

impl TypingEnv<'_> {
    fn fun_type(&self, name: &str, targs: &[Type]) -> Option<Type> {
        let inst = |vars: &[String], t: Type| {
            (vars.len() == targs.len()).then(|| {
                let s: Subst = vars.iter().cloned().zip(targs.iter().cloned()).collect();
                t.subst(&s)
            })
        };
        if let Some(f) = self.program.function(name) {
            return inst(&f.tyvars, f.fun_type());
        }
        if let Some(e) = self.registry.get(name) {
            return inst(&e.tyvars, e.fun_type());
        }
        let (base, ts) = self.aliases.get(name)?;
        targs
            .is_empty()
            .then(|| self.registry.get(base).map(|e| e.instantiate(ts)))
            .flatten()
    }

    fn check_fun(&self, name: &str, targs: &[Type], t: &Type) -> Result<(), Reject> {
        match self.fun_type(name, targs) {
            Some(ft) if &ft == t => Ok(()),
            Some(ft) => Err(Reject::new(
                "type",
                format!("function `{name}` has type {ft}, expected {t}"),
            )),
            None => Err(Reject::new("type", format!("unknown function `{name}`"))),
        }
    }
}

fn mismatch(what: impl std::fmt::Debug, t: &Type) -> Reject {
    Reject::new("type", format!("{what:?} is not of type {t}"))
}

/// `v : τ`.
pub fn vtyping_v(env: &TypingEnv, v: &VValue, t: &Type) -> Result<(), Reject> {
    match (v, t) {
        (VValue::Unit, Type::Unit)
        | (VValue::Bool(_), Type::Bool)
        | (VValue::U8(_), Type::U8)
        | (VValue::U32(_), Type::U32) => Ok(()),
        (VValue::Prod(vs), Type::Prod(ts)) if vs.len() == ts.len() => {
            vs.iter().zip(ts).try_for_each(|(v, t)| vtyping_v(env, v, t))
        }
        (VValue::Fun(f, ts), Type::Fun(..)) => env.check_fun(f, ts, t),
        (
            VValue::Abstract(a),
            Type::Abs {
                name,
                args,
                readonly,
            },
        ) if a.tag() == name => {
            let entry = env
                .registry
                .abs_type(name)
                .ok_or_else(|| Reject::new("unregistered", format!("abstract type `{name}`")))?;
            entry.vtyping_v(env, a, args, *readonly)
        }
        _ => Err(mismatch(v, t)),
    }
}

fn header(store: &Store, l: LocId) -> Result<&UAbs, Reject> {
    match store.get(l) {
        Some(UValue::Abstract(a)) => Ok(a),
        Some(other) => Err(Reject::new(
            "type",
            format!("location {l} holds {other:?}, not an abstract value"),
        )),
        None => Err(Reject::new("dangling", format!("location {l} is unmapped"))),
    }
}

fn with_header(mut fp: Footprint, l: LocId, readonly: bool) -> Result<Footprint, Reject> {
    if fp.r.contains(&l) || fp.w.contains(&l) {
        return Err(Reject::new("alias", format!("location {l} reachable twice")));
    }
    if readonly {
        fp.r.insert(l);
    } else {
        fp.w.insert(l);
    }
    Ok(fp)
}

fn join(parts: Vec<Footprint>) -> Result<Footprint, Reject> {
    Footprint::join(parts)
        .map_err(|l| Reject::new("alias", format!("writable location {l} is shared")))
}

/// `u | μ : τ ⟨r, w⟩`, returning the canonical footprint.
pub fn vtyping_u(env: &TypingEnv, u: &UValue, store: &Store, t: &Type) -> Result<Footprint, Reject> {
    match (u, t) {
        (UValue::Unit, Type::Unit)
        | (UValue::Bool(_), Type::Bool)
        | (UValue::U8(_), Type::U8)
        | (UValue::U32(_), Type::U32) => Ok(Footprint::empty()),
        (UValue::Prod(us), Type::Prod(ts)) if us.len() == ts.len() => join(
            us.iter()
                .zip(ts)
                .map(|(u, t)| vtyping_u(env, u, store, t))
                .collect::<Result<_, _>>()?,
        ),
        (UValue::Fun(f, ts), Type::Fun(..)) => env.check_fun(f, ts, t).map(|_| Footprint::empty()),
        (
            UValue::Loc(l),
            Type::Abs {
                name,
                args,
                readonly,
            },
        ) => {
            let a = header(store, *l)?;
            let fp = abs_u(env, a, store, name, args, *readonly)?;
            with_header(fp, *l, *readonly)
        }
        (
            UValue::Abstract(a),
            Type::Abs {
                name,
                args,
                readonly,
            },
        ) => abs_u(env, a, store, name, args, *readonly),
        _ => Err(mismatch(u, t)),
    }
}

fn abs_u(
    env: &TypingEnv,
    a: &UAbs,
    store: &Store,
    name: &str,
    args: &[Type],
    readonly: bool,
) -> Result<Footprint, Reject> {
    if a.tag() != name {
        return Err(mismatch(a, &Type::Abs {
            name: name.to_string(),
            args: args.to_vec(),
            readonly,
        }));
    }
    let entry = env
        .registry
        .abs_type(name)
        .ok_or_else(|| Reject::new("unregistered", format!("abstract type `{name}`")))?;
    let fp = entry.vtyping_u(env, a, store, args, readonly)?;
    if let Some(l) = fp.r.intersection(&fp.w).next() {
        return Err(Reject::new("alias", format!("location {l} both read-only and writable")));
    }
    Ok(fp)
}

/// The value/update correspondence: both typings hold and the values
/// represent the same data.
pub fn corr(
    env: &TypingEnv,
    u: &UValue,
    store: &Store,
    v: &VValue,
    t: &Type,
) -> Result<Footprint, Reject> {
    let differ = || Reject::new("differ", format!("{u:?} does not represent {v}"));
    match (u, v, t) {
        (UValue::Prod(us), VValue::Prod(vs), Type::Prod(ts))
            if us.len() == ts.len() && vs.len() == ts.len() =>
        {
            let mut parts = Vec::with_capacity(ts.len());
            for ((u, v), t) in us.iter().zip(vs).zip(ts) {
                parts.push(corr(env, u, store, v, t)?);
            }
            join(parts)
        }
        (UValue::Fun(f, fs), VValue::Fun(g, gs), _) => {
            vtyping_v(env, v, t)?;
            let fp = vtyping_u(env, u, store, t)?;
            if f == g && fs == gs {
                Ok(fp)
            } else {
                Err(differ())
            }
        }
        (
            UValue::Loc(_) | UValue::Abstract(_),
            VValue::Abstract(va),
            Type::Abs {
                name,
                args,
                readonly,
            },
        ) => {
            vtyping_v(env, v, t)?;
            let (ua, loc) = match u {
                UValue::Loc(l) => (header(store, *l)?, Some(*l)),
                UValue::Abstract(a) => (a, None),
                _ => unreachable!(),
            };
            let entry = env
                .registry
                .abs_type(name)
                .ok_or_else(|| Reject::new("unregistered", format!("abstract type `{name}`")))?;
            let fp = entry.corr(env, ua, store, va, args, *readonly)?;
            match loc {
                Some(l) => with_header(fp, l, *readonly),
                None => Ok(fp),
            }
        }
        _ => {
            vtyping_v(env, v, t)?;
            let fp = vtyping_u(env, u, store, t)?;
            if u.to_prim().as_ref() == Some(v) {
                Ok(fp)
            } else {
                Err(differ())
            }
        }
    }
}

/// The first violated clause of the frame relation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrameViolation {
    pub clause: &'static str,
    pub loc: LocId,
}

/// Checks inertia, leak freedom and fresh allocation between
/// `(w_i, μ_i)` and `(w_o, μ_o)` for every location either side mentions.
pub fn frame_violation(
    wi: &BTreeSet<LocId>,
    si: &Store,
    wo: &BTreeSet<LocId>,
    so: &Store,
) -> Option<FrameViolation> {
    let mut locs: BTreeSet<LocId> = si.locations();
    locs.extend(so.locations());
    locs.extend(wi);
    locs.extend(wo);
    for p in locs {
        let (in_i, in_o) = (wi.contains(&p), wo.contains(&p));
        let clause = match (in_i, in_o) {
            (false, false) if si.get(p) != so.get(p) => "inertia",
            (true, false) if so.contains(p) => "leak",
            (false, true) if si.contains(p) => "fresh",
            _ => continue,
        };
        return Some(FrameViolation { clause, loc: p });
    }
    None
}

pub fn frame(wi: &BTreeSet<LocId>, si: &Store, wo: &BTreeSet<LocId>, so: &Store) -> bool {
    frame_violation(wi, si, wo, so).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffi::library_registry;

    fn env_parts() -> (Program, Registry, Aliases) {
        (crate::corpus::array_lib(), library_registry(), Aliases::new())
    }

    fn set(ls: &[LocId]) -> BTreeSet<LocId> {
        ls.iter().copied().collect()
    }

    fn two_elem_store() -> (Store, UValue) {
        let mut s = Store::new();
        let base = s.alloc_block([UValue::U32(1), UValue::U32(2)]);
        let a = UValue::Abstract(UAbs::Array {
            elem: Type::U32,
            len: 2,
            base,
        });
        (s, a)
    }

    #[test]
    fn prims() {
        let (p, r, al) = env_parts();
        let env = TypingEnv { program: &p, registry: &r, aliases: &al };
        assert!(vtyping_v(&env, &VValue::U32(7), &Type::U32).is_ok());
        assert!(vtyping_v(&env, &VValue::Bool(true), &Type::U32).is_err());
        assert_eq!(
            vtyping_u(&env, &UValue::U32(7), &Store::new(), &Type::U32),
            Ok(Footprint::empty())
        );
    }

    #[test]
    fn array_footprints() {
        let (p, r, al) = env_parts();
        let env = TypingEnv { program: &p, registry: &r, aliases: &al };
        assert!(vtyping_v(&env, &VValue::u32_array(&[1, 2]), &Type::array(Type::U32)).is_ok());
        let (s, a) = two_elem_store();
        let fp = vtyping_u(&env, &a, &s, &Type::array(Type::U32)).unwrap();
        assert_eq!(fp, Footprint::writable(set(&[0, 1])));
        let fp = vtyping_u(&env, &a, &s, &Type::array_ro(Type::U32)).unwrap();
        assert_eq!(fp, Footprint::readonly(set(&[0, 1])));
    }

    #[test]
    fn boxed_array_adds_header_location() {
        let (p, r, al) = env_parts();
        let env = TypingEnv { program: &p, registry: &r, aliases: &al };
        let (mut s, a) = two_elem_store();
        let l = s.alloc(a);
        let fp = vtyping_u(&env, &UValue::Loc(l), &s, &Type::array(Type::U32)).unwrap();
        assert_eq!(fp, Footprint::writable(set(&[0, 1, l])));
        s.remove(l);
        assert_eq!(
            vtyping_u(&env, &UValue::Loc(l), &s, &Type::array(Type::U32)).unwrap_err().clause,
            "dangling"
        );
    }

    #[test]
    fn writable_array_twice_in_tuple_is_aliasing() {
        let (p, r, al) = env_parts();
        let env = TypingEnv { program: &p, registry: &r, aliases: &al };
        let (s, a) = two_elem_store();
        let t = Type::Prod(vec![Type::array(Type::U32), Type::array(Type::U32)]);
        let u = UValue::Prod(vec![a.clone(), a.clone()]);
        assert_eq!(vtyping_u(&env, &u, &s, &t).unwrap_err().clause, "alias");
        let t = Type::Prod(vec![Type::array_ro(Type::U32), Type::array_ro(Type::U32)]);
        assert!(vtyping_u(&env, &u, &s, &t).is_ok());
    }

    #[test]
    fn corr_cases() {
        let (p, r, al) = env_parts();
        let env = TypingEnv { program: &p, registry: &r, aliases: &al };
        let s = Store::new();
        assert_eq!(
            corr(&env, &UValue::U32(5), &s, &VValue::U32(5), &Type::U32),
            Ok(Footprint::empty())
        );
        assert!(corr(&env, &UValue::U32(5), &s, &VValue::U32(6), &Type::U32).is_err());
        let (s, a) = two_elem_store();
        let fp = corr(&env, &a, &s, &VValue::u32_array(&[1, 2]), &Type::array(Type::U32)).unwrap();
        assert_eq!(fp, Footprint::writable(set(&[0, 1])));
        assert!(corr(&env, &a, &s, &VValue::u32_array(&[1, 3]), &Type::array(Type::U32)).is_err());
        assert!(corr(&env, &a, &s, &VValue::u32_array(&[1]), &Type::array(Type::U32)).is_err());
    }

    #[test]
    fn function_values_typed_by_signature() {
        let p = crate::corpus::sum_program();
        let r = library_registry();
        let al = Aliases::new();
        let env = TypingEnv { program: &p, registry: &r, aliases: &al };
        let add_ty = Type::fun(Type::Prod(vec![Type::U32, Type::U32, Type::Unit]), Type::U32);
        assert!(vtyping_v(&env, &VValue::fun("add"), &add_ty).is_ok());
        assert!(vtyping_v(&env, &VValue::fun("sum"), &add_ty).is_err());
        let s = Store::new();
        assert!(corr(&env, &UValue::fun("add"), &s, &VValue::fun("add"), &add_ty).is_ok());
    }

    #[test]
    fn frame_clauses() {
        let mut mu = Store::new();
        let l = mu.alloc(UValue::U32(1));
        assert!(frame(&set(&[]), &mu, &set(&[]), &mu));
        assert_eq!(
            frame_violation(&set(&[l]), &mu, &set(&[]), &mu).unwrap().clause,
            "leak"
        );
        let mut mu2 = mu.clone();
        mu2.set(l, UValue::U32(9));
        assert_eq!(
            frame_violation(&set(&[]), &mu, &set(&[l]), &mu2).unwrap().clause,
            "fresh"
        );
        assert_eq!(
            frame_violation(&set(&[]), &mu, &set(&[]), &mu2).unwrap().clause,
            "inertia"
        );
        assert!(frame(&set(&[l]), &mu, &set(&[l]), &mu2));
    }
}
