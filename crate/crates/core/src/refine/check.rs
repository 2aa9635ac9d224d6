//! Randomised checks of each refinement step, run as forward simulations:
//! whenever the lower layer evaluates, the upper layer must evaluate to a
//! related result.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::gen::{embed, gen_program_with, random_value, GenConfig, Related};
use super::mono::{mono_value, monomorphise, Mono};
use crate::corpus;
use crate::dynsem::eval::Aliases;
use crate::dynsem::{
    corr, frame_violation, vtyping_u, vtyping_v, EvalError, Footprint, LocId, Semantics, Store,
    TypingEnv, UValue, VValue,
};
use crate::ffi::array::{put_u, put_v, u_array};
use crate::ffi::{check_abs_type_obligations, library_registry, ArrayType, Registry};
use crate::lowmachine::{
    ops, rel_hc, rel_vc, size_of, LowCtx, LowHeap, LowMachine, LowValue, DEFAULT_HEAP_BYTES,
};
use crate::seeding::trial_rng;
use crate::shallow::{fold_lib, rel_ps, SValue, ShallowEnv};
use crate::syntax::{Expr, Program, Type};
use crate::typecheck::typecheck_program;

/// Outcome of one randomised check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub theorem: String,
    pub trials: u64,
    pub failures: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CheckConfig {
    pub seed: u64,
    pub trials: u64,
    pub heap_bytes: u32,
    pub gen: GenConfig,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            seed: 0,
            trials: 1000,
            heap_bytes: DEFAULT_HEAP_BYTES,
            gen: GenConfig::default(),
        }
    }
}

/// Deliberate bugs, each aimed at one check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// `put` returns `()` at the value and update layers.
    IllTypedPut,
    /// Update-layer `put` copies the array and abandons the original.
    LeakingPut,
    /// Update-layer `put` also writes a cell it does not own.
    WildWritePut,
    /// Value-layer `put` writes one index too far.
    DivergentPut,
    /// The monomorphic program calls the wrong specialisation.
    WrongName,
    /// Shallow `fold` skips the last element of its range.
    ShallowFoldDropsLast,
    /// Machine `get` reads one index too far.
    LowGetOffByOne,
}

/// The library registry with `fault` planted.
pub fn faulty_registry(fault: Option<Fault>) -> Registry {
    let mut reg = library_registry();
    match fault {
        Some(Fault::IllTypedPut) => reg.map_entry("put", |mut e| {
            e.value = Arc::new(|_, _, _| Ok(VValue::Unit));
            e.update = Arc::new(|_, _, s, _| Ok((UValue::Unit, s)));
            e
        }),
        Some(Fault::LeakingPut) => reg.map_entry("put", |mut e| {
            e.update = Arc::new(|_, _, mut store: Store, arg| {
                let UValue::Prod(parts) = arg else {
                    return Err(EvalError::stuck("put: bad argument"));
                };
                let (elem, len, base) = u_array("put", &parts[0], &store)?;
                let cells: Vec<UValue> = (0..len as LocId)
                    .map(|i| store.get(base + i).cloned().ok_or(EvalError::Dangling(base + i)))
                    .collect::<Result<_, _>>()?;
                let nb = if cells.is_empty() {
                    store.reserve(1)
                } else {
                    store.alloc_block(cells)
                };
                let h = store.alloc(UValue::Abstract(crate::dynsem::UAbs::Array {
                    elem,
                    len,
                    base: nb,
                }));
                let i = parts[1].as_u32().unwrap_or(u32::MAX);
                if i < len {
                    store.set(nb + i as LocId, parts[2].clone());
                }
                Ok((UValue::Loc(h), store))
            });
            e
        }),
        Some(Fault::WildWritePut) => reg.map_entry("put", |mut e| {
            e.update = Arc::new(|call, ts, store, arg| {
                let (u, mut store) = put_u(call, ts, store, arg)?;
                let p = store.next_fresh();
                store.set(p, UValue::U32(0xdead));
                Ok((u, store))
            });
            e
        }),
        Some(Fault::DivergentPut) => reg.map_entry("put", |mut e| {
            e.value = Arc::new(|call, ts, arg| {
                let arg = match arg {
                    VValue::Prod(mut parts) if parts.len() == 3 => {
                        if let VValue::U32(i) = parts[1] {
                            parts[1] = VValue::U32(i.wrapping_add(1));
                        }
                        VValue::Prod(parts)
                    }
                    other => other,
                };
                put_v(call, ts, arg)
            });
            e
        }),
        Some(Fault::ShallowFoldDropsLast) => reg.map_entry("fold", |mut e| {
            e.shallow = Arc::new(|call, arg| {
                let arg = match arg {
                    SValue::Tuple(mut parts) if parts.len() == 6 => {
                        if let (SValue::List(xs), SValue::U32(to)) = (&parts[2], &parts[4]) {
                            let end = (*to).min(xs.len() as u32);
                            parts[4] = SValue::U32(end.saturating_sub(1));
                        }
                        SValue::Tuple(parts)
                    }
                    other => other,
                };
                fold_lib(call, arg)
            });
            e
        }),
        Some(Fault::LowGetOffByOne) => reg.map_entry("get", |mut e| {
            e.low = Arc::new(|call, ts, heap, arg| {
                let arg = match arg {
                    LowValue::Tuple(mut parts) if parts.len() == 3 => {
                        if let LowValue::U32(i) = parts[1] {
                            parts[1] = LowValue::U32(i.wrapping_add(1));
                        }
                        LowValue::Tuple(parts)
                    }
                    other => other,
                };
                ops::get_low(call, ts, heap, arg)
            });
            e
        }),
        Some(Fault::WrongName) | None => {}
    }
    reg
}

/// Runs `trials` independent trials, each with its own generator keyed by
/// `(seed, theorem, trial)`.
fn run_trials(
    theorem: &str,
    cfg: &CheckConfig,
    mut trial: impl FnMut(&mut ChaCha8Rng) -> Result<(), String>,
) -> CheckReport {
    let start = Instant::now();
    let mut failures = 0;
    let mut counterexample = None;
    for t in 0..cfg.trials {
        let mut rng = trial_rng(cfg.seed, theorem, t);
        if let Err(msg) = trial(&mut rng) {
            failures += 1;
            counterexample.get_or_insert_with(|| format!("trial {t}: {msg}"));
        }
    }
    CheckReport {
        theorem: theorem.to_string(),
        trials: cfg.trials,
        failures,
        seed: cfg.seed,
        counterexample,
        elapsed_ms: Some(start.elapsed().as_millis() as u64),
    }
}

fn subset(a: &BTreeSet<LocId>, b: &BTreeSet<LocId>) -> Result<(), String> {
    match a.difference(b).next() {
        Some(l) => Err(format!("read set grew: location {l} is new")),
        None => Ok(()),
    }
}

fn frame_ok(fi: &Footprint, si: &Store, fo: &Footprint, so: &Store) -> Result<(), String> {
    match frame_violation(&fi.w, si, &fo.w, so) {
        Some(v) => Err(format!("frame violated ({}) at location {}", v.clause, v.loc)),
        None => Ok(()),
    }
}

/// A generated program with `main` and an input related at every layer.
struct GenTrial {
    program: Program,
    arg: Type,
    ret: Type,
    input: Related,
}

fn gen_trial(rng: &mut ChaCha8Rng, cfg: &CheckConfig, reg: &Registry) -> Result<GenTrial, String> {
    let p = gen_program_with(rng, &cfg.gen);
    let program = typecheck_program(&p)
        .map_err(|e| format!("generated program does not typecheck: {e}"))?
        .program;
    let main = program.function("main").ok_or("no main")?;
    let (arg, ret) = (main.arg_ty.clone(), main.ret_ty.clone());
    let v = random_value(rng, &arg, cfg.gen.max_array_len, &[])?;
    let aliases = Aliases::new();
    let env = TypingEnv {
        program: &program,
        registry: reg,
        aliases: &aliases,
    };
    let input = embed(rng, &v, &arg, &env, &[], cfg.heap_bytes)?;
    Ok(GenTrial {
        program,
        arg,
        ret,
        input,
    })
}

fn shown(p: &Program) -> String {
    crate::syntax::pretty_print(p)
        .lines()
        .skip_while(|l| !l.starts_with("fun main") && !l.starts_with("fun h"))
        .collect::<Vec<_>>()
        .join(" / ")
}

/// Type preservation for both semantics on generated programs.
pub fn check_preservation(cfg: &CheckConfig, fault: Option<Fault>) -> CheckReport {
    let reg = faulty_registry(fault);
    run_trials("preservation", cfg, |rng| {
        let t = gen_trial(rng, cfg, &reg)?;
        let sem = Semantics::new(&t.program, &reg);
        let env = sem.typing_env();
        let ctx = |what: String| format!("{what}; input {}; program {}", t.input.v, shown(&t.program));
        let v = sem
            .call_v("main", &[], t.input.v.clone())
            .map_err(|e| ctx(format!("value semantics failed: {e}")))?;
        vtyping_v(&env, &v, &t.ret)
            .map_err(|r| ctx(format!("value result {v} is not of type {}: {r}", t.ret)))?;
        let (u, store) = sem
            .call_u("main", &[], t.input.u.clone(), t.input.store.clone())
            .map_err(|e| ctx(format!("update semantics failed: {e}")))?;
        vtyping_u(&env, &u, &store, &t.ret)
            .map_err(|r| ctx(format!("update result {u:?} is not of type {}: {r}", t.ret)))?;
        Ok(())
    })
}

/// Preservation plus the frame relation between input and output
/// writable sets.
pub fn check_frame(cfg: &CheckConfig, fault: Option<Fault>) -> CheckReport {
    let reg = faulty_registry(fault);
    run_trials("frame", cfg, |rng| {
        let t = gen_trial(rng, cfg, &reg)?;
        let sem = Semantics::new(&t.program, &reg);
        let env = sem.typing_env();
        let ctx = |what: String| format!("{what}; input {}; program {}", t.input.v, shown(&t.program));
        let fi = vtyping_u(&env, &t.input.u, &t.input.store, &t.arg)
            .map_err(|r| ctx(format!("input rejected: {r}")))?;
        let (u, store) = sem
            .call_u("main", &[], t.input.u.clone(), t.input.store.clone())
            .map_err(|e| ctx(format!("update semantics failed: {e}")))?;
        let fo = vtyping_u(&env, &u, &store, &t.ret)
            .map_err(|r| ctx(format!("update result {u:?} is not of type {}: {r}", t.ret)))?;
        subset(&fo.r, &fi.r).map_err(ctx)?;
        frame_ok(&fi, &t.input.store, &fo, &store).map_err(ctx)
    })
}

/// Whenever the update semantics evaluates, the value semantics does too
/// and the results correspond.
pub fn check_value_update(cfg: &CheckConfig, fault: Option<Fault>) -> CheckReport {
    let reg = faulty_registry(fault);
    run_trials("value-update", cfg, |rng| {
        let t = gen_trial(rng, cfg, &reg)?;
        let sem = Semantics::new(&t.program, &reg);
        let env = sem.typing_env();
        let ctx = |what: String| format!("{what}; input {}; program {}", t.input.v, shown(&t.program));
        let fi = corr(&env, &t.input.u, &t.input.store, &t.input.v, &t.arg)
            .map_err(|r| ctx(format!("inputs do not correspond: {r}")))?;
        let Ok((u, store)) = sem.call_u("main", &[], t.input.u.clone(), t.input.store.clone())
        else {
            return Ok(());
        };
        let v = sem
            .call_v("main", &[], t.input.v.clone())
            .map_err(|e| ctx(format!("update semantics succeeded but value semantics failed: {e}")))?;
        let fo = corr(&env, &u, &store, &v, &t.ret)
            .map_err(|r| ctx(format!("results {u:?} and {v} do not correspond: {r}")))?;
        subset(&fo.r, &fi.r).map_err(ctx)?;
        frame_ok(&fi, &t.input.store, &fo, &store).map_err(ctx)
    })
}

/// Shipped programs the end-to-end checks run on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    Sum,
    BinarySearch,
    /// `main (x : U32) -> U32 = 7`
    Literal,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::Sum, Case::BinarySearch, Case::Literal];

    pub fn name(self) -> &'static str {
        match self {
            Case::Sum => "sum",
            Case::BinarySearch => "binary_search",
            Case::Literal => "literal",
        }
    }

    pub fn entry(self) -> &'static str {
        match self {
            Case::Literal => "main",
            other => other.name(),
        }
    }

    pub fn program(self) -> Program {
        let p = match self {
            Case::Sum => corpus::sum_program(),
            Case::BinarySearch => corpus::binary_search_program(),
            Case::Literal => crate::syntax::parse_program(LITERAL).expect("literal program parses"),
        };
        typecheck_program(&p).expect("shipped program typechecks").program
    }

    /// A random input to the entry function: arrays up to `max_len`;
    /// binary search gets sorted arrays and a mix of present and absent
    /// keys.
    pub fn input(self, rng: &mut impl Rng, max_len: u32) -> VValue {
        match self {
            Case::Literal => VValue::U32(rng.gen()),
            Case::Sum => {
                let len = rng.gen_range(0..=max_len);
                VValue::u32_array(&(0..len).map(|_| rng.gen()).collect::<Vec<u32>>())
            }
            Case::BinarySearch => {
                let (xs, v) = sorted_with_key(rng, max_len);
                VValue::Prod(vec![VValue::u32_array(&xs), VValue::U32(v)])
            }
        }
    }

    fn shallow_env(self, reg: &Registry) -> ShallowEnv {
        let mut env = ShallowEnv::new(reg);
        if self == Case::Literal {
            env.insert("main", Arc::new(|_, _| Ok(SValue::U32(7))));
        }
        env
    }
}

const LITERAL: &str = "fun main (x : U32) -> U32 = 7";

/// A sorted array and a key that is present about half the time.
pub fn sorted_with_key(rng: &mut impl Rng, max_len: u32) -> (Vec<u32>, u32) {
    let len = rng.gen_range(0..=max_len);
    let spread = if rng.gen_bool(0.5) { 4 * len.max(1) } else { u32::MAX };
    let mut xs: Vec<u32> = (0..len).map(|_| rng.gen_range(0..=spread)).collect();
    xs.sort_unstable();
    let v = match xs.choose(rng) {
        Some(&x) if rng.gen_bool(0.5) => x,
        _ => rng.gen_range(0..=spread),
    };
    (xs, v)
}

/// Oracle for the sum program.
fn list_sum(v: &VValue) -> Option<u32> {
    let (_, items) = v.as_array()?;
    Some(items.iter().fold(0u32, |a, x| a.wrapping_add(x.as_u32().unwrap_or(0))))
}

/// Oracle for the binary search contract: an in-bounds index points at
/// the key, an out-of-bounds one means the key is absent.
fn search_contract(input: &VValue, result: &VValue) -> Result<(), String> {
    let VValue::Prod(parts) = input else {
        return Err("malformed input".into());
    };
    let (_, items) = parts[0].as_array().ok_or("malformed input")?;
    let v = parts[1].as_u32().ok_or("malformed input")?;
    let i = result.as_u32().ok_or_else(|| format!("result {result} is not a U32"))?;
    let present = items.iter().any(|x| x.as_u32() == Some(v));
    match items.get(i as usize) {
        Some(x) if x.as_u32() == Some(v) => Ok(()),
        Some(x) => Err(format!("index {i} holds {x}, not {v}")),
        None if i as usize == items.len() && !present => Ok(()),
        None if present => Err(format!("{v} is present but {i} was returned")),
        None => Err(format!("absent key should give length {}, got {i}", items.len())),
    }
}

fn case_oracle(case: Case, input: &VValue, result: &VValue) -> Result<(), String> {
    match case {
        Case::Sum => {
            let want = list_sum(input).ok_or("malformed input")?;
            if result.as_u32() == Some(want) {
                Ok(())
            } else {
                Err(format!("sum is {result}, list sum is {want}"))
            }
        }
        Case::BinarySearch => search_contract(input, result),
        Case::Literal => match result {
            VValue::U32(7) => Ok(()),
            other => Err(format!("literal program returned {other}")),
        },
    }
}

fn plant_wrong_name(m: &mut Mono) {
    let Some(victim) = m
        .names
        .iter()
        .find(|((_, ts), _)| !ts.is_empty())
        .map(|(_, n)| n.clone())
    else {
        return;
    };
    let Some(other) = m
        .program
        .functions
        .iter()
        .find(|f| f.name != victim && f.is_foreign())
        .map(|f| f.name.clone())
    else {
        return;
    };
    for f in &mut m.program.functions {
        if let crate::syntax::FunBody::Expr(e) = &mut f.body {
            *e = rename(e, &victim, &other);
        }
    }
}

fn rename(e: &Expr, from: &str, to: &str) -> Expr {
    let go = |e: &Expr| Box::new(rename(e, from, to));
    let n = |f: &String| if f == from { to.to_string() } else { f.clone() };
    match e {
        Expr::Lit(_) | Expr::Var(_) => e.clone(),
        Expr::Fun(f, ts) => Expr::Fun(n(f), ts.clone()),
        Expr::App(f, ts, a) => Expr::App(n(f), ts.clone(), go(a)),
        Expr::Let(p, b, k) => Expr::Let(p.clone(), go(b), go(k)),
        Expr::LetBang {
            vars,
            pat,
            bound,
            body,
        } => Expr::LetBang {
            vars: vars.clone(),
            pat: pat.clone(),
            bound: go(bound),
            body: go(body),
        },
        Expr::If(c, t, f) => Expr::If(go(c), go(t), go(f)),
        Expr::PrimOp(op, l, r) => Expr::PrimOp(*op, go(l), go(r)),
        Expr::Tuple(es) => Expr::Tuple(es.iter().map(|e| rename(e, from, to)).collect()),
    }
}

/// Monomorphised evaluation agrees with polymorphic evaluation.
pub fn check_mono(case: Case, cfg: &CheckConfig, fault: Option<Fault>) -> CheckReport {
    let reg = faulty_registry(fault);
    let poly = case.program();
    let mut m = monomorphise(&poly, &[case.entry()]).expect("shipped program monomorphises");
    if fault == Some(Fault::WrongName) {
        plant_wrong_name(&mut m);
    }
    let sem_p = Semantics::new(&poly, &reg);
    let sem_m = Semantics::new(&m.program, &reg).with_aliases(m.aliases.clone());
    run_trials(&format!("mono:{}", case.name()), cfg, |rng| {
        let v = case.input(rng, cfg.gen.max_array_len);
        let vm = mono_value(&m.names, &v).map_err(|e| e.to_string())?;
        let rp = sem_p
            .call_v(case.entry(), &[], v.clone())
            .map_err(|e| format!("polymorphic evaluation on {v} failed: {e}"))?;
        let rm = sem_m
            .call_v(case.entry(), &[], vm)
            .map_err(|e| format!("monomorphic evaluation on {v} failed: {e}"))?;
        let want = mono_value(&m.names, &rp).map_err(|e| e.to_string())?;
        if rm == want {
            Ok(())
        } else {
            Err(format!("on {v}: monomorphic {rm}, polymorphic {rp}"))
        }
    })
}

/// The shallow embedding agrees with polymorphic evaluation.
pub fn check_shallow(case: Case, cfg: &CheckConfig, fault: Option<Fault>) -> CheckReport {
    let reg = faulty_registry(fault);
    let poly = case.program();
    let sem = Semantics::new(&poly, &reg);
    let senv = case.shallow_env(&reg);
    run_trials(&format!("shallow:{}", case.name()), cfg, |rng| {
        let v = case.input(rng, cfg.gen.max_array_len);
        let s = crate::shallow::from_value(&v);
        let rs = senv
            .call(case.entry(), s)
            .map_err(|e| format!("shallow evaluation on {v} failed: {e}"))?;
        let rp = sem
            .call_v(case.entry(), &[], v.clone())
            .map_err(|e| format!("value evaluation on {v} failed: {e}"))?;
        if !rel_ps(&rs, &rp) {
            return Err(format!("on {v}: shallow {rs}, value {rp}"));
        }
        case_oracle(case, &v, &rp).map_err(|e| format!("on {v}: {e}"))
    })
}

pub const OPS: [&str; 6] = ["length", "get", "put", "fold", "mapaccum", "repeat"];

pub const BOUNDARIES: [&str; 3] = ["low-update", "update-value", "value-shallow"];

fn op_instances(op: &str) -> Vec<Vec<Type>> {
    let (u, b) = (Type::U32, Type::U8);
    match op {
        "length" | "get" | "put" => vec![vec![u], vec![b]],
        "fold" => vec![vec![u.clone(); 3], vec![b.clone(), u, b]],
        "mapaccum" => vec![vec![u; 3], vec![b; 3]],
        "repeat" => vec![vec![u.clone(), u.clone()], vec![Type::array(u.clone()), u]],
        _ => vec![],
    }
}

fn array_len(v: &VValue) -> u32 {
    v.as_array().map_or(0, |(_, xs)| xs.len() as u32)
}

/// An index: in bounds half the time when possible, otherwise past the
/// end, sometimes far past.
fn some_index(rng: &mut impl Rng, len: u32) -> u32 {
    if len > 0 && rng.gen_bool(0.5) {
        rng.gen_range(0..len)
    } else if rng.gen_bool(0.8) {
        len + rng.gen_range(0..4)
    } else {
        rng.gen_range(len..=u32::MAX)
    }
}

/// Steers the generic random argument toward interesting cases.
fn shape_op_arg(rng: &mut impl Rng, op: &str, v: VValue) -> VValue {
    let VValue::Prod(mut parts) = v else {
        return v;
    };
    match op {
        "get" | "put" => {
            let len = array_len(&parts[0]);
            parts[1] = VValue::U32(some_index(rng, len));
        }
        "fold" | "mapaccum" => {
            let len = array_len(&parts[2]);
            parts[3] = VValue::U32(some_index(rng, len + 1));
            parts[4] = VValue::U32(some_index(rng, len + 1));
        }
        "repeat" => parts[0] = VValue::U32(rng.gen_range(0..=128)),
        _ => {}
    }
    VValue::Prod(parts)
}

/// Helper functions eligible as higher-order arguments, with their types.
fn argument_functions(p: &Program) -> Vec<(String, Type)> {
    p.functions
        .iter()
        .filter(|f| !f.is_foreign() && !f.name.starts_with("drive_"))
        .map(|f| (f.name.clone(), f.fun_type()))
        .collect()
}

/// The byte image of a list of scalars, independent of the heap code.
fn encode(items: &[VValue]) -> Vec<u8> {
    let mut out = Vec::new();
    for x in items {
        match x {
            VValue::U32(n) => out.extend(n.to_le_bytes()),
            VValue::U8(n) => out.push(*n),
            VValue::Bool(b) => out.push(*b as u8),
            _ => {}
        }
    }
    out
}

/// `put` at the machine layer: the element block holds the input list with
/// index `i` replaced when in bounds, and is otherwise untouched.
fn put_bytes_oracle(input: &Related, heap: &LowHeap) -> Result<(), String> {
    let VValue::Prod(parts) = &input.v else {
        return Ok(());
    };
    let (elem, items) = parts[0].as_array().ok_or("put input is not an array")?;
    let i = parts[1].as_u32().ok_or("put index is not a U32")? as usize;
    let mut want: Vec<VValue> = items.as_ref().clone();
    if i < want.len() {
        want[i] = parts[2].clone();
    }
    let LowValue::Tuple(xs) = &input.low else {
        return Err("put machine input is not a tuple".into());
    };
    let LowValue::StructArray { vals, .. } = xs[0] else {
        return Err("put machine input has no array".into());
    };
    let size = size_of(elem).ok_or("boxed element")?;
    let got = heap
        .raw(vals, size * want.len() as u32)
        .ok_or("element block outside the heap")?;
    if got == encode(&want).as_slice() {
        Ok(())
    } else {
        Err(format!("element bytes {got:?} differ from the encoded list {want:?}"))
    }
}

/// Per-operation correspondence across one layer boundary.
pub fn check_corres(op: &str, boundary: &str, cfg: &CheckConfig, fault: Option<Fault>) -> CheckReport {
    let reg = faulty_registry(fault);
    let lib = typecheck_program(&corpus::libtest_program())
        .expect("helper program typechecks")
        .program;
    let m = monomorphise(&lib, &[]).expect("helper program monomorphises");
    let sem_p = Semantics::new(&lib, &reg);
    let sem_m = Semantics::new(&m.program, &reg).with_aliases(m.aliases.clone());
    let machine = LowMachine::new(&m.program, &reg, &m.aliases);
    let senv = ShallowEnv::new(&reg);
    let funs = argument_functions(&lib);
    let entry = reg.get(op).cloned();
    let instances = op_instances(op);
    run_trials(&format!("corres:{op}:{boundary}"), cfg, |rng| {
        let entry = entry.as_ref().ok_or_else(|| format!("`{op}` is not registered"))?;
        let targs = instances
            .choose(rng)
            .ok_or_else(|| format!("no instances of `{op}`"))?
            .clone();
        let Type::Fun(arg_t, ret_t) = entry.instantiate(&targs) else {
            return Err(format!("`{op}` is not a function"));
        };
        let v = random_value(rng, &arg_t, cfg.gen.max_array_len, &funs)?;
        let v = shape_op_arg(rng, op, v);
        let env = sem_m.typing_env();
        let input = embed(rng, &v, &arg_t, &env, machine.table(), cfg.heap_bytes)?;
        let at = |what: String| format!("{op}[{targs:?}] on {v}: {what}");
        match boundary {
            "low-update" => {
                let name = m
                    .names
                    .get(op, &targs)
                    .ok_or_else(|| at("no specialisation".into()))?;
                let (x, heap) = machine
                    .call(&name, input.low.clone(), input.heap.clone())
                    .map_err(|e| at(format!("machine failed: {e}")))?;
                let (u, store) = sem_m
                    .call_u(&name, &[], input.u.clone(), input.store.clone())
                    .map_err(|e| at(format!("update semantics failed: {e}")))?;
                let ctx = LowCtx {
                    store: &store,
                    amap: &input.amap,
                    table: machine.table(),
                };
                if !rel_vc(&ctx, &x, &u) {
                    return Err(at(format!("machine result {x:?} unrelated to {u:?}")));
                }
                rel_hc(&heap, &store, &input.amap).map_err(|e| at(format!("heaps unrelated: {e}")))?;
                if op == "put" {
                    put_bytes_oracle(&input, &heap).map_err(at)?;
                }
                Ok(())
            }
            "update-value" => {
                let env = sem_p.typing_env();
                let fi = corr(&env, &input.u, &input.store, &v, &arg_t)
                    .map_err(|r| at(format!("inputs do not correspond: {r}")))?;
                let (u, store) = sem_p
                    .call_u(op, &targs, input.u.clone(), input.store.clone())
                    .map_err(|e| at(format!("update semantics failed: {e}")))?;
                let rv = sem_p
                    .call_v(op, &targs, v.clone())
                    .map_err(|e| at(format!("value semantics failed: {e}")))?;
                let fo = corr(&env, &u, &store, &rv, &ret_t)
                    .map_err(|r| at(format!("results {u:?} and {rv} do not correspond: {r}")))?;
                subset(&fo.r, &fi.r).map_err(at)?;
                frame_ok(&fi, &input.store, &fo, &store).map_err(at)
            }
            "value-shallow" => {
                let rs = senv
                    .call(op, input.s.clone())
                    .map_err(|e| at(format!("shallow failed: {e}")))?;
                let rv = sem_p
                    .call_v(op, &targs, v.clone())
                    .map_err(|e| at(format!("value semantics failed: {e}")))?;
                if rel_ps(&rs, &rv) {
                    Ok(())
                } else {
                    Err(at(format!("shallow {rs} unrelated to value {rv}")))
                }
            }
            other => Err(format!("unknown boundary {other}")),
        }
    })
}

/// One run through all five layers per trial, checking every relation
/// between neighbouring layers and the case's oracle.
pub fn check_combined(case: Case, cfg: &CheckConfig, fault: Option<Fault>) -> CheckReport {
    let reg = faulty_registry(fault);
    let poly = case.program();
    let m = monomorphise(&poly, &[case.entry()]).expect("shipped program monomorphises");
    let sem_p = Semantics::new(&poly, &reg);
    let sem_m = Semantics::new(&m.program, &reg).with_aliases(m.aliases.clone());
    let machine = LowMachine::new(&m.program, &reg, &m.aliases);
    let senv = case.shallow_env(&reg);
    let f = poly.function(case.entry()).expect("entry exists");
    let (arg_t, ret_t) = (f.arg_ty.clone(), f.ret_ty.clone());
    run_trials(&format!("combined:{}", case.name()), cfg, |rng| {
        let v = case.input(rng, cfg.gen.max_array_len);
        let env = sem_m.typing_env();
        let input = embed(rng, &v, &arg_t, &env, machine.table(), cfg.heap_bytes)?;
        let at = |what: String| format!("on {v}: {what}");
        let fi = corr(&env, &input.u, &input.store, &mono_value(&m.names, &v).map_err(|e| e.to_string())?, &arg_t)
            .map_err(|r| at(format!("inputs do not correspond: {r}")))?;
        let (x, heap) = machine
            .call(case.entry(), input.low.clone(), input.heap.clone())
            .map_err(|e| at(format!("machine failed: {e}")))?;
        let (u, store) = sem_m
            .call_u(case.entry(), &[], input.u.clone(), input.store.clone())
            .map_err(|e| at(format!("update semantics failed: {e}")))?;
        let vm = sem_m
            .call_v(case.entry(), &[], mono_value(&m.names, &v).map_err(|e| e.to_string())?)
            .map_err(|e| at(format!("monomorphic value semantics failed: {e}")))?;
        let vp = sem_p
            .call_v(case.entry(), &[], v.clone())
            .map_err(|e| at(format!("polymorphic value semantics failed: {e}")))?;
        let s = senv
            .call(case.entry(), input.s.clone())
            .map_err(|e| at(format!("shallow failed: {e}")))?;
        if !rel_ps(&s, &vp) {
            return Err(at(format!("shallow {s} unrelated to value {vp}")));
        }
        if vm != mono_value(&m.names, &vp).map_err(|e| e.to_string())? {
            return Err(at(format!("monomorphic {vm} differs from polymorphic {vp}")));
        }
        let fo = corr(&sem_m.typing_env(), &u, &store, &vm, &ret_t)
            .map_err(|r| at(format!("update {u:?} does not correspond to {vm}: {r}")))?;
        subset(&fo.r, &fi.r).map_err(at)?;
        frame_ok(&fi, &input.store, &fo, &store).map_err(at)?;
        let ctx = LowCtx {
            store: &store,
            amap: &input.amap,
            table: machine.table(),
        };
        if !rel_vc(&ctx, &x, &u) {
            return Err(at(format!("machine result {x:?} unrelated to {u:?}")));
        }
        rel_hc(&heap, &store, &input.amap).map_err(|e| at(format!("heaps unrelated: {e}")))?;
        if case == Case::BinarySearch {
            same_elements(&input, &heap).map_err(at)?;
        }
        case_oracle(case, &v, &vp).map_err(at)
    })
}

/// The searched array's element bytes are identical before and after.
fn same_elements(input: &Related, after: &LowHeap) -> Result<(), String> {
    let LowValue::Tuple(xs) = &input.low else {
        return Err("machine input is not a tuple".into());
    };
    let LowValue::StructArray { len, vals } = xs[0] else {
        return Err("machine input has no array".into());
    };
    let before = input.heap.raw(vals, len * 4);
    if before.is_some() && before == after.raw(vals, len * 4) {
        Ok(())
    } else {
        Err(format!("element bytes at {vals:#x} changed"))
    }
}

/// Binary search calls its step function at most `⌈log2 n⌉ + 1` times on
/// length-`n` arrays, for `n` from 1 to 4096, even though it is given `n`
/// iterations of fuel.
pub fn check_early_exit(cfg: &CheckConfig) -> CheckReport {
    let reg = library_registry();
    let senv = ShallowEnv::new(&reg);
    run_trials("early-exit", cfg, |rng| {
        for k in 0..=12u32 {
            let n = 1u32 << k;
            let mut xs: Vec<u32> = (0..n).map(|_| rng.gen()).collect();
            xs.sort_unstable();
            let v = if rng.gen_bool(0.5) {
                xs[rng.gen_range(0..n as usize)]
            } else {
                rng.gen()
            };
            senv.reset_counts();
            let arg = SValue::Tuple(vec![SValue::u32_list(&xs), SValue::U32(v)]);
            senv.call("binary_search", arg)
                .map_err(|e| format!("n = {n}: {e}"))?;
            let steps = senv.calls("search");
            let bound = k as u64 + 1;
            if steps > bound {
                return Err(format!("n = {n}, key {v}: {steps} steps, bound {bound}"));
            }
        }
        Ok(())
    })
}

/// The abstract-type requirements for arrays, one report per clause.
pub fn check_obligations(cfg: &CheckConfig) -> Vec<CheckReport> {
    let start = Instant::now();
    let reports = check_abs_type_obligations(Arc::new(ArrayType), cfg.seed, cfg.trials);
    let elapsed = start.elapsed().as_millis() as u64;
    reports
        .into_iter()
        .map(|r| CheckReport {
            theorem: format!("obligations:{}", r.clause),
            trials: r.trials,
            failures: r.failures,
            seed: cfg.seed,
            counterexample: r.counterexample,
            elapsed_ms: Some(elapsed),
        })
        .collect()
}

/// Suite names accepted by [`run_suite`].
pub const SUITES: [&str; 9] = [
    "thm1",
    "thm2",
    "thm3",
    "thm4",
    "thm5",
    "corres",
    "combined",
    "obligations",
    "all",
];

/// Runs a named suite; `None` for an unknown name.
pub fn run_suite(suite: &str, cfg: &CheckConfig) -> Option<Vec<CheckReport>> {
    Some(match suite {
        "thm1" => vec![check_preservation(cfg, None)],
        "thm2" => vec![check_frame(cfg, None)],
        "thm3" => vec![check_value_update(cfg, None)],
        "thm4" => [Case::Sum, Case::BinarySearch, Case::Literal]
            .into_iter()
            .map(|c| check_mono(c, cfg, None))
            .collect(),
        "thm5" => Case::ALL.into_iter().map(|c| check_shallow(c, cfg, None)).collect(),
        "corres" => OPS
            .iter()
            .flat_map(|op| BOUNDARIES.iter().map(move |b| (*op, *b)))
            .map(|(op, b)| check_corres(op, b, cfg, None))
            .collect(),
        "combined" => {
            let mut out: Vec<CheckReport> =
                Case::ALL.into_iter().map(|c| check_combined(c, cfg, None)).collect();
            out.push(check_early_exit(cfg));
            out
        }
        "obligations" => check_obligations(cfg),
        "all" => SUITES[..8]
            .iter()
            .flat_map(|s| run_suite(s, cfg).expect("known suite"))
            .collect(),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(trials: u64) -> CheckConfig {
        CheckConfig {
            seed: 11,
            trials,
            heap_bytes: 1 << 16,
            gen: GenConfig::default(),
        }
    }

    #[test]
    fn search_contract_oracle() {
        let input = VValue::Prod(vec![VValue::u32_array(&[1, 3, 5]), VValue::U32(3)]);
        assert!(search_contract(&input, &VValue::U32(1)).is_ok());
        assert!(search_contract(&input, &VValue::U32(3)).is_err());
        let absent = VValue::Prod(vec![VValue::u32_array(&[1, 3, 5]), VValue::U32(4)]);
        assert!(search_contract(&absent, &VValue::U32(3)).is_ok());
        assert!(search_contract(&absent, &VValue::U32(0)).is_err());
    }

    #[test]
    fn encode_is_little_endian() {
        assert_eq!(encode(&[VValue::U32(0x0102_0304), VValue::U8(9)]), [4, 3, 2, 1, 9]);
    }

    #[test]
    fn clean_library_passes_small_runs() {
        let c = cfg(40);
        for r in [check_preservation(&c, None), check_frame(&c, None), check_value_update(&c, None)] {
            assert!(r.passed(), "{r:?}");
        }
        for case in Case::ALL {
            assert!(check_mono(case, &c, None).passed());
            assert!(check_shallow(case, &c, None).passed());
            let r = check_combined(case, &c, None);
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn zero_trials_pass() {
        let r = check_preservation(&cfg(0), None);
        assert_eq!((r.trials, r.failures), (0, 0));
    }

    #[test]
    fn every_op_boundary_passes() {
        for op in OPS {
            for b in BOUNDARIES {
                let r = check_corres(op, b, &cfg(60), None);
                assert!(r.passed(), "{r:?}");
            }
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let strip = |mut r: CheckReport| {
            r.elapsed_ms = None;
            r
        };
        let a = strip(check_frame(&cfg(20), None));
        let b = strip(check_frame(&cfg(20), None));
        assert_eq!(a, b);
    }

    fn caught(r: CheckReport) {
        assert!(r.failures > 0, "{} missed its planted fault", r.theorem);
        assert!(r.counterexample.is_some());
        eprintln!("{}: {}/{}", r.theorem, r.failures, r.trials);
    }

    #[test]
    fn planted_faults_are_caught_within_200_trials() {
        let c = cfg(200);
        caught(check_preservation(&c, Some(Fault::IllTypedPut)));
        caught(check_frame(&c, Some(Fault::LeakingPut)));
        caught(check_frame(&c, Some(Fault::WildWritePut)));
        caught(check_value_update(&c, Some(Fault::DivergentPut)));
        caught(check_mono(Case::Sum, &c, Some(Fault::WrongName)));
        caught(check_mono(Case::BinarySearch, &c, Some(Fault::WrongName)));
        caught(check_shallow(Case::Sum, &c, Some(Fault::ShallowFoldDropsLast)));
        caught(check_corres("get", "low-update", &c, Some(Fault::LowGetOffByOne)));
        caught(check_corres("put", "update-value", &c, Some(Fault::DivergentPut)));
        caught(check_corres("fold", "value-shallow", &c, Some(Fault::ShallowFoldDropsLast)));
        caught(check_combined(Case::BinarySearch, &c, Some(Fault::LowGetOffByOne)));
    }
}
