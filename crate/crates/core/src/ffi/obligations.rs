//! Randomised checks of the requirements every abstract type's value
//! typing must meet, and deliberately broken entries to test the checks.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::Serialize;

use super::array::ArrayType;
use super::registry::{AbsTypeEntry, Layout, Registry, Reject};
use crate::dynsem::eval::Aliases;
use crate::dynsem::{frame, Footprint, LocId, Store, TypingEnv, UAbs, UValue, VAbs};
use crate::seeding::trial_rng;
use crate::syntax::{Program, Type};

pub const CLAUSES: [&str; 6] = ["bang_v", "bang_u", "no-alias", "valid", "frame", "read-only"];

const MAX_LEN: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ObligationReport {
    pub clause: String,
    pub trials: u64,
    pub failures: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

/// A store with unrelated cells, then the value under test allocated last.
struct World {
    store: Store,
    value: UAbs,
    args: Vec<Type>,
    others: Vec<LocId>,
}

fn random_scalar(rng: &mut dyn RngCore) -> UValue {
    match rng.gen_range(0..3) {
        0 => UValue::U32(rng.gen()),
        1 => UValue::U8(rng.gen()),
        _ => UValue::Bool(rng.gen()),
    }
}

fn same_type_scalar(rng: &mut dyn RngCore, like: &UValue) -> UValue {
    match like {
        UValue::U8(_) => UValue::U8(rng.gen()),
        UValue::Bool(_) => UValue::Bool(rng.gen()),
        _ => UValue::U32(rng.gen()),
    }
}

fn world(entry: &dyn AbsTypeEntry, rng: &mut dyn RngCore) -> World {
    let mut store = Store::new();
    let mut others = Vec::new();
    for _ in 0..rng.gen_range(0..6) {
        others.push(store.alloc(random_scalar(rng)));
    }
    let (value, args) = entry.gen_u(rng, &mut store, MAX_LEN);
    World {
        store,
        value,
        args,
        others,
    }
}

fn banged(args: &[Type]) -> Vec<Type> {
    args.iter().map(Type::bang).collect()
}

/// Evaluates one clause on one generated instance; `Err` describes a
/// counterexample.
fn check_clause(
    clause: &str,
    entry: &dyn AbsTypeEntry,
    env: &TypingEnv,
    rng: &mut dyn RngCore,
) -> Result<(), String> {
    let pre = |r: Reject| format!("generated value rejected: {r}");
    match clause {
        "bang_v" => {
            let (v, args) = entry.gen_v(rng, MAX_LEN);
            entry.vtyping_v(env, &v, &args, false).map_err(pre)?;
            entry
                .vtyping_v(env, &v, &banged(&args), true)
                .map_err(|r| format!("{} rejected once banged: {r}", show_v(&v)))
        }
        "bang_u" => {
            let w = world(entry, rng);
            let fp = entry
                .vtyping_u(env, &w.value, &w.store, &w.args, false)
                .map_err(pre)?;
            let want = Footprint::readonly(fp.all());
            match entry.vtyping_u(env, &w.value, &w.store, &banged(&w.args), true) {
                Ok(got) if got == want => Ok(()),
                Ok(got) => Err(format!(
                    "{:?}: banged footprint {got:?}, expected {want:?}",
                    w.value
                )),
                Err(r) => Err(format!("{:?} rejected once banged: {r}", w.value)),
            }
        }
        "no-alias" => {
            let w = world(entry, rng);
            for readonly in [false, true] {
                let args = if readonly { banged(&w.args) } else { w.args.clone() };
                let fp = entry
                    .vtyping_u(env, &w.value, &w.store, &args, readonly)
                    .map_err(pre)?;
                if let Some(l) = fp.r.intersection(&fp.w).next() {
                    return Err(format!("{:?}: location {l} in both r and w", w.value));
                }
            }
            Ok(())
        }
        "valid" => {
            let w = world(entry, rng);
            for readonly in [false, true] {
                let args = if readonly { banged(&w.args) } else { w.args.clone() };
                let fp = entry
                    .vtyping_u(env, &w.value, &w.store, &args, readonly)
                    .map_err(pre)?;
                if let Some(l) = fp.all().into_iter().find(|l| !w.store.contains(*l)) {
                    return Err(format!("{:?}: footprint location {l} is unmapped", w.value));
                }
            }
            Ok(())
        }
        "frame" => {
            let w = world(entry, rng);
            let readonly = rng.gen_bool(0.5);
            let args = if readonly { banged(&w.args) } else { w.args.clone() };
            let fp = entry
                .vtyping_u(env, &w.value, &w.store, &args, readonly)
                .map_err(pre)?;
            let (wi, wo, out) = evolve(rng, &w.store, &w.others);
            if !frame(&wi, &w.store, &wo, &out) {
                return Err("internal: generated store evolution violates the frame".into());
            }
            match entry.vtyping_u(env, &w.value, &out, &args, readonly) {
                Ok(got) if got == fp => Ok(()),
                Ok(got) => Err(format!(
                    "{:?}: footprint changed from {fp:?} to {got:?} across an unrelated update",
                    w.value
                )),
                Err(r) => Err(format!(
                    "{:?}: rejected after an unrelated update (w_i = {wi:?}, w_o = {wo:?}): {r}",
                    w.value
                )),
            }
        }
        "read-only" => {
            let w = world(entry, rng);
            let fp = entry
                .vtyping_u(env, &w.value, &w.store, &banged(&w.args), true)
                .map_err(pre)?;
            if fp.w.is_empty() {
                Ok(())
            } else {
                Err(format!("{:?}: read-only type with w = {:?}", w.value, fp.w))
            }
        }
        other => Err(format!("unknown clause {other}")),
    }
}

/// A store evolution `μ_i → μ_o` touching only the unrelated cells:
/// overwrites and frees some, then allocates fresh ones.
fn evolve(
    rng: &mut dyn RngCore,
    store: &Store,
    others: &[LocId],
) -> (BTreeSet<LocId>, BTreeSet<LocId>, Store) {
    let wi: BTreeSet<LocId> = others.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
    let mut out = store.clone();
    let mut wo = BTreeSet::new();
    for &l in &wi {
        match rng.gen_range(0..3) {
            0 => {
                out.remove(l);
            }
            1 => {
                let v = same_type_scalar(rng, store.get(l).expect("allocated"));
                out.set(l, v);
                wo.insert(l);
            }
            _ => {
                wo.insert(l);
            }
        }
    }
    for _ in 0..rng.gen_range(1..4) {
        wo.insert(out.alloc(random_scalar(rng)));
    }
    (wi, wo, out)
}

fn show_v(v: &VAbs) -> String {
    match v {
        VAbs::Array { elem, items } => format!("array of {} {elem}", items.len()),
    }
}

/// Runs every clause `trials` times against `entry`.
pub fn check_abs_type_obligations(
    entry: Arc<dyn AbsTypeEntry>,
    seed: u64,
    trials: u64,
) -> Vec<ObligationReport> {
    let program = Program::default();
    let mut registry = Registry::new();
    registry.register_abs_type(entry.clone());
    let aliases = Aliases::new();
    let env = TypingEnv {
        program: &program,
        registry: &registry,
        aliases: &aliases,
    };
    CLAUSES
        .iter()
        .map(|&clause| {
            let mut failures = 0;
            let mut counterexample = None;
            for t in 0..trials {
                let mut rng = trial_rng(seed, &format!("obligations/{}/{clause}", entry.tag()), t);
                if let Err(msg) = check_clause(clause, entry.as_ref(), &env, &mut rng) {
                    failures += 1;
                    counterexample.get_or_insert_with(|| format!("trial {t}: {msg}"));
                }
            }
            ObligationReport {
                clause: clause.to_string(),
                trials,
                failures,
                counterexample,
            }
        })
        .collect()
}

/// The array type with one requirement deliberately broken.
struct Mutant {
    clause: &'static str,
    inner: ArrayType,
}

/// A broken array entry violating `clause`, for testing the checks.
pub fn planted_mutant(clause: &str) -> Option<Arc<dyn AbsTypeEntry>> {
    let clause = CLAUSES.iter().copied().find(|c| *c == clause)?;
    Some(Arc::new(Mutant {
        clause,
        inner: ArrayType,
    }))
}

fn first_past_end(u: &UAbs) -> LocId {
    let UAbs::Array { len, base, .. } = u;
    base + *len as LocId
}

impl AbsTypeEntry for Mutant {
    fn tag(&self) -> &str {
        self.inner.tag()
    }

    fn arity(&self) -> usize {
        self.inner.arity()
    }

    fn vtyping_v(
        &self,
        env: &TypingEnv,
        v: &VAbs,
        args: &[Type],
        readonly: bool,
    ) -> Result<(), Reject> {
        if self.clause == "bang_v" && readonly {
            return Err(Reject::new("type", "read-only arrays are not accepted"));
        }
        self.inner.vtyping_v(env, v, args, readonly)
    }

    fn vtyping_u(
        &self,
        env: &TypingEnv,
        u: &UAbs,
        store: &Store,
        args: &[Type],
        readonly: bool,
    ) -> Result<Footprint, Reject> {
        let mut fp = self.inner.vtyping_u(env, u, store, args, readonly)?;
        match self.clause {
            "bang_u" if readonly => {
                if let Some(&l) = fp.r.iter().next() {
                    fp.r.remove(&l);
                }
            }
            "no-alias" if !readonly => {
                if let Some(&l) = fp.w.iter().next() {
                    fp.r.insert(l);
                }
            }
            "valid" => {
                let past = first_past_end(u);
                if readonly {
                    fp.r.insert(past);
                } else {
                    fp.w.insert(past);
                }
            }
            "frame" if store.contains(first_past_end(u)) => {
                return Err(Reject::new("dangling", "neighbouring cell is in use"));
            }
            "read-only" if readonly => {
                fp = Footprint::writable(fp.r);
            }
            _ => {}
        }
        Ok(fp)
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
        self.inner.corr(env, u, store, v, args, readonly)
    }

    fn layout(&self, args: &[Type]) -> Option<Layout> {
        self.inner.layout(args)
    }

    fn gen_u(&self, rng: &mut dyn RngCore, store: &mut Store, max_len: u32) -> (UAbs, Vec<Type>) {
        self.inner.gen_u(rng, store, max_len)
    }

    fn gen_v(&self, rng: &mut dyn RngCore, max_len: u32) -> (VAbs, Vec<Type>) {
        self.inner.gen_v(rng, max_len)
    }
}
