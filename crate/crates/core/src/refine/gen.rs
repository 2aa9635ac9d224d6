//! Random well-typed programs and related inputs for every layer.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus;
use crate::dynsem::{corr, LocId, Store, TypingEnv, UAbs, UValue, VValue};
use crate::lowmachine::{lay_out, rel_hc, rel_vc, to_low, AddrMap, LowCtx, LowHeap, LowValue};
use crate::seeding::trial_rng;
use crate::shallow::{from_value, rel_ps, SValue};
use crate::syntax::{BinOp, Expr, FunBody, FunDef, Lit, Pattern, Program, Type};

/// Bounds on generated programs and values.
#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub max_depth: usize,
    pub max_array_len: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_depth: 6,
            max_array_len: 64,
        }
    }
}

/// Library declarations and the small helper functions, without drivers.
pub fn prelude() -> Program {
    let mut p = corpus::libtest_program();
    p.functions.retain(|f| !f.name.starts_with("drive_"));
    p
}

/// Defined helpers in the prelude callable from prim-typed code.
const PRIM_HELPERS: [&str; 4] = ["add_obs", "count8", "reached", "plus"];

/// One link of a `let` spine.
enum Binding {
    Let(Pattern, Expr),
    Bang(String, Pattern, Expr),
}

impl Binding {
    fn wrap(self, body: Expr) -> Expr {
        match self {
            Binding::Let(p, e) => Expr::let_(p, e, body),
            Binding::Bang(a, p, e) => Expr::LetBang {
                vars: vec![a],
                pat: p,
                bound: Box::new(e),
                body: Box::new(body),
            },
        }
    }
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    fresh: usize,
    /// Shareable variables in scope.
    scope: Vec<(String, Type)>,
    /// Callable functions with prim or read-only parameters and a prim result.
    helpers: Vec<(String, Vec<Type>, Type)>,
}

fn prim_types() -> [Type; 3] {
    [Type::U32, Type::U8, Type::Bool]
}

fn tuple_or_single(mut es: Vec<Expr>) -> Expr {
    if es.len() == 1 {
        es.pop().expect("one")
    } else {
        Expr::Tuple(es)
    }
}

fn prod_or_single(mut ts: Vec<Type>) -> Type {
    if ts.len() == 1 {
        ts.pop().expect("one")
    } else {
        Type::Prod(ts)
    }
}

/// Whether `e` infers its own width once printed: a bare literal prints
/// the same at `U8` and `U32` and would infer as `U32`.
fn width_fixed(e: &Expr) -> bool {
    match e {
        Expr::Lit(Lit::U8(_) | Lit::U32(_)) => false,
        Expr::Lit(_) | Expr::Var(_) | Expr::Fun(..) | Expr::App(..) => true,
        Expr::PrimOp(op, l, r) if op.is_arith() => match **l {
            Expr::Lit(Lit::U8(_) | Lit::U32(_)) => width_fixed(r),
            _ => width_fixed(l),
        },
        Expr::PrimOp(..) => true,
        Expr::If(_, t, _) => width_fixed(t),
        Expr::Let(_, _, k) | Expr::LetBang { body: k, .. } => width_fixed(k),
        Expr::Tuple(es) => es.iter().all(width_fixed),
    }
}

impl<R: Rng> Gen<'_, R> {
    /// A prim expression for a position whose type is inferred. `U8`
    /// requests fall back to `U32` when no self-typing expression turns up.
    fn inferable(&mut self, t: &Type, budget: usize) -> (Type, Expr) {
        if *t != Type::U8 {
            return (t.clone(), self.prim(t, budget));
        }
        for _ in 0..4 {
            let e = self.prim(t, budget);
            if width_fixed(&e) {
                return (Type::U8, e);
            }
        }
        (Type::U32, self.prim(&Type::U32, budget))
    }

    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn lit(&mut self, t: &Type) -> Expr {
        Expr::Lit(match t {
            Type::Bool => Lit::Bool(self.rng.gen()),
            Type::U8 => Lit::U8(if self.rng.gen_bool(0.7) {
                self.rng.gen_range(0..16)
            } else {
                self.rng.gen()
            }),
            _ => Lit::U32(self.small_or_any()),
        })
    }

    fn small_or_any(&mut self) -> u32 {
        match self.rng.gen_range(0..10) {
            0..=6 => self.rng.gen_range(0..70),
            7 => u32::MAX - self.rng.gen_range(0..4),
            _ => self.rng.gen(),
        }
    }

    fn vars_of(&self, t: &Type) -> Vec<String> {
        self.scope
            .iter()
            .filter(|(_, u)| u == t)
            .map(|(x, _)| x.clone())
            .collect()
    }

    fn leaf(&mut self, t: &Type) -> Expr {
        let vs = self.vars_of(t);
        if !vs.is_empty() && self.rng.gen_bool(0.6) {
            Expr::Var(vs.choose(self.rng).expect("nonempty").clone())
        } else {
            self.lit(t)
        }
    }

    fn index(&mut self, budget: usize) -> Expr {
        if budget > 1 && self.rng.gen_bool(0.2) {
            self.prim(&Type::U32, budget)
        } else {
            Expr::u32(self.rng.gen_range(0..8))
        }
    }

    fn ro_array(&mut self, elem: &Type) -> Option<String> {
        self.vars_of(&Type::array_ro(elem.clone())).choose(self.rng).cloned()
    }

    /// A prim-typed expression of depth at most `budget`.
    fn prim(&mut self, t: &Type, budget: usize) -> Expr {
        if budget <= 1 {
            return self.leaf(t);
        }
        let b = budget - 1;
        match self.rng.gen_range(0..10) {
            0 | 1 => self.leaf(t),
            2 => {
                let c = self.prim(&Type::Bool, b);
                let x = self.prim(t, b);
                let y = self.prim(t, b);
                Expr::if_(c, x, y)
            }
            3 => {
                let bt = prim_types().choose(self.rng).expect("nonempty").clone();
                let (bt, bound) = self.inferable(&bt, b);
                let x = self.name("x");
                self.scope.push((x.clone(), bt));
                let body = self.prim(t, budget);
                self.scope.pop();
                Expr::let_(Pattern::Var(x), bound, body)
            }
            4 | 5 => self.operator(t, b),
            6 if budget >= 3 => self.helper_call(t, budget).unwrap_or_else(|| self.operator(t, b)),
            _ => self.library_call(t, budget).unwrap_or_else(|| self.operator(t, b)),
        }
    }

    fn operator(&mut self, t: &Type, b: usize) -> Expr {
        match t {
            Type::Bool => {
                if self.rng.gen_bool(0.3) {
                    let op = *[BinOp::And, BinOp::Or].choose(self.rng).expect("nonempty");
                    let l = self.prim(&Type::Bool, b);
                    let r = self.prim(&Type::Bool, b);
                    Expr::binop(op, l, r)
                } else {
                    let ops = [BinOp::Lt, BinOp::Gt, BinOp::Le, BinOp::Ge, BinOp::Eq, BinOp::Ne];
                    let op = *ops.choose(self.rng).expect("nonempty");
                    let at = if self.rng.gen_bool(0.7) { Type::U32 } else { Type::U8 };
                    let (at, l) = self.inferable(&at, b);
                    let r = self.prim(&at, b);
                    Expr::binop(op, l, r)
                }
            }
            _ => {
                let ops = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div];
                let op = *ops.choose(self.rng).expect("nonempty");
                let l = self.prim(t, b);
                let r = self.prim(t, b);
                Expr::binop(op, l, r)
            }
        }
    }

    fn helper_call(&mut self, t: &Type, budget: usize) -> Option<Expr> {
        let cands: Vec<_> = self
            .helpers
            .iter()
            .filter(|(_, ps, r)| r == t && ps.iter().all(|p| p.is_prim() || self.ro_ok(p)))
            .cloned()
            .collect();
        let (f, ps, _) = cands.choose(self.rng)?.clone();
        let sub = if ps.len() == 1 { budget - 1 } else { budget - 2 };
        let mut args = Vec::new();
        for p in &ps {
            args.push(match p.as_array() {
                Some((e, true)) => Expr::Var(self.ro_array(&e.clone())?),
                _ if *p == Type::Unit => Expr::Lit(Lit::Unit),
                _ => self.prim(p, sub),
            });
        }
        Some(Expr::app(&f, vec![], tuple_or_single(args)))
    }

    fn ro_ok(&self, t: &Type) -> bool {
        matches!(t.as_array(), Some((_, true))) && !self.vars_of(t).is_empty() || *t == Type::Unit
    }

    /// Library operations over read-only arrays in scope, or `repeat`.
    fn library_call(&mut self, t: &Type, budget: usize) -> Option<Expr> {
        let sub = budget.checked_sub(2).filter(|b| *b >= 1)?;
        match (t, self.rng.gen_range(0..4)) {
            (Type::U32, 0) => {
                let elem = [Type::U32, Type::U8].choose(self.rng)?.clone();
                let a = self.ro_array(&elem)?;
                Some(Expr::app("length", vec![elem], Expr::var(&a)))
            }
            (Type::U32 | Type::U8, 1) => {
                let a = self.ro_array(t)?;
                let i = self.index(sub);
                let d = self.prim(t, sub);
                Some(Expr::app("get", vec![t.clone()], Expr::Tuple(vec![Expr::var(&a), i, d])))
            }
            (Type::U32, 2) => {
                let (elem, f, obs) = if self.rng.gen_bool(0.5) {
                    (Type::U32, "add_obs", Type::U32)
                } else {
                    (Type::U8, "count8", Type::U8)
                };
                let a = self.ro_array(&elem)?;
                let acc = self.prim(&Type::U32, sub);
                let frm = self.index(sub);
                let to = self.index(sub);
                let k = self.prim(&obs, sub);
                Some(Expr::app(
                    "fold",
                    vec![elem, Type::U32, obs],
                    Expr::Tuple(vec![Expr::Fun(f.into(), vec![]), acc, Expr::var(&a), frm, to, k]),
                ))
            }
            (Type::U32, _) => {
                let n = Expr::u32(self.rng.gen_range(0..16));
                let acc = self.prim(&Type::U32, sub);
                let lim = self.prim(&Type::U32, sub);
                Some(Expr::app(
                    "repeat",
                    vec![Type::U32, Type::U32],
                    Expr::Tuple(vec![
                        n,
                        Expr::Fun("reached".into(), vec![]),
                        Expr::Fun("plus".into(), vec![]),
                        acc,
                        lim,
                    ]),
                ))
            }
            _ => None,
        }
    }

    /// One binding that consumes writable array `a` and rebinds it; needs
    /// `budget >= 4`.
    fn array_statement(&mut self, a: String, elem: Type, budget: usize) -> (Binding, String) {
        let sub = budget - 3;
        let a2 = self.name("a");
        match self.rng.gen_range(0..4) {
            0 => {
                let i = self.index(sub);
                let v = self.prim(&elem, sub);
                let e = Expr::app("put", vec![elem], Expr::Tuple(vec![Expr::var(&a), i, v]));
                (Binding::Let(Pattern::Var(a2.clone()), e), a2)
            }
            1 => {
                let (f, acc_t) = if elem == Type::U32 {
                    ("bump", Type::U32)
                } else {
                    ("bump8", Type::U8)
                };
                let acc = self.prim(&acc_t, sub);
                let frm = self.index(sub);
                let to = self.index(sub);
                let k = self.prim(&elem, sub);
                let e = Expr::app(
                    "mapaccum",
                    vec![elem.clone(), acc_t.clone(), elem],
                    Expr::Tuple(vec![Expr::Fun(f.into(), vec![]), acc, Expr::var(&a), frm, to, k]),
                );
                let x = self.name("x");
                self.scope.push((x.clone(), acc_t));
                let p = Pattern::Tuple(vec![Pattern::Var(a2.clone()), Pattern::Var(x)]);
                (Binding::Let(p, e), a2)
            }
            2 if elem == Type::U32 => {
                let n = Expr::u32(self.rng.gen_range(0..16));
                let k = self.prim(&Type::U32, sub);
                let e = Expr::app(
                    "repeat",
                    vec![Type::array(Type::U32), Type::U32],
                    Expr::Tuple(vec![
                        n,
                        Expr::Fun("arr_stop".into(), vec![]),
                        Expr::Fun("arr_step".into(), vec![]),
                        Expr::var(&a),
                        k,
                    ]),
                );
                (Binding::Let(Pattern::Var(a2.clone()), e), a2)
            }
            _ => {
                let t = prim_types().choose(self.rng).expect("nonempty").clone();
                self.scope.push((a.clone(), Type::array_ro(elem)));
                let (t, bound) = self.inferable(&t, budget - 1);
                self.scope.pop();
                let x = self.name("x");
                self.scope.push((x.clone(), t));
                (Binding::Bang(a.clone(), Pattern::Var(x), bound), a)
            }
        }
    }
}

/// A well-typed program from `seed` with expressions at most `size` deep
/// (capped at 6). Size 0 gives a single-literal `main`.
pub fn gen_program(seed: u64, size: usize) -> Program {
    let mut rng = trial_rng(seed, "gen_program", size as u64);
    gen_program_with(
        &mut rng,
        &GenConfig {
            max_depth: size.min(6),
            ..GenConfig::default()
        },
    )
}

/// A random value of `ty` from `seed`, placed at every layer.
pub fn gen_value(
    ty: &Type,
    seed: u64,
    env: &TypingEnv,
    table: &[String],
    heap_bytes: u32,
) -> Result<Related, String> {
    let mut rng = trial_rng(seed, "gen_value", 0);
    let v = random_value(&mut rng, ty, GenConfig::default().max_array_len, &[])?;
    embed(&mut rng, &v, ty, env, table, heap_bytes)
}

/// Generates a well-typed program whose last function `main` takes one to
/// four parameters. `max_depth == 0` yields `main (x : U32) -> U32 = n`.
pub fn gen_program_with<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Program {
    let mut program = prelude();
    if cfg.max_depth == 0 {
        program.functions.push(FunDef {
            name: "main".into(),
            tyvars: vec![],
            param: Pattern::var("x"),
            arg_ty: Type::U32,
            ret_ty: Type::U32,
            body: FunBody::Expr(Expr::u32(rng.gen())),
        });
        return program;
    }
    let depth = cfg.max_depth;
    let mut helpers: Vec<(String, Vec<Type>, Type)> = PRIM_HELPERS
        .iter()
        .map(|h| {
            let f = program.function(h).expect("prelude helper");
            let ps = match &f.arg_ty {
                Type::Prod(ts) => ts.clone(),
                t => vec![t.clone()],
            };
            (h.to_string(), ps, f.ret_ty.clone())
        })
        .collect();
    let mut g = Gen {
        rng,
        fresh: 0,
        scope: vec![],
        helpers: vec![],
    };
    for i in 0..g.rng.gen_range(0..3) {
        let n = g.rng.gen_range(1..=3);
        let ps: Vec<Type> = (0..n).map(|_| param_type(g.rng, false)).collect();
        let names: Vec<String> = (0..n).map(|k| format!("q{k}")).collect();
        let ret = prim_types().choose(g.rng).expect("nonempty").clone();
        g.scope = names.iter().cloned().zip(ps.iter().cloned()).collect();
        g.helpers = helpers.clone();
        let body = g.prim(&ret, depth);
        let name = format!("h{i}");
        program.functions.push(FunDef {
            name: name.clone(),
            tyvars: vec![],
            param: param_pattern(&names),
            arg_ty: prod_or_single(ps.clone()),
            ret_ty: ret.clone(),
            body: FunBody::Expr(body),
        });
        helpers.push((name, ps, ret));
    }
    g.helpers = helpers;
    let n = g.rng.gen_range(1..=4);
    let ps: Vec<Type> = (0..n).map(|_| param_type(g.rng, true)).collect();
    let names: Vec<String> = (0..n).map(|k| format!("p{k}")).collect();
    g.scope.clear();
    let mut linear: Vec<(String, Type)> = vec![];
    for (x, t) in names.iter().zip(&ps) {
        match t.as_array() {
            Some((e, false)) => linear.push((x.clone(), e.clone())),
            _ => g.scope.push((x.clone(), t.clone())),
        }
    }
    let mut spine: Vec<Binding> = vec![];
    for _ in 0..g.rng.gen_range(0..5) {
        if depth >= 4 && !linear.is_empty() && g.rng.gen_bool(0.7) {
            let k = g.rng.gen_range(0..linear.len());
            let (a, elem) = linear[k].clone();
            let (b, a2) = g.array_statement(a, elem, depth);
            linear[k].0 = a2;
            spine.push(b);
        } else if depth >= 2 {
            let t = prim_types().choose(g.rng).expect("nonempty").clone();
            let (t, e) = g.inferable(&t, depth - 1);
            let x = g.name("x");
            g.scope.push((x.clone(), t));
            spine.push(Binding::Let(Pattern::Var(x), e));
        }
    }
    let rt = prim_types().choose(g.rng).expect("nonempty").clone();
    let (mut body, ret_ty) = if linear.is_empty() || depth < 2 {
        (g.prim(&rt, depth), rt)
    } else {
        let mut es = vec![g.prim(&rt, depth - 1)];
        let mut ts = vec![rt];
        for (a, e) in &linear {
            es.push(Expr::var(a));
            ts.push(Type::array(e.clone()));
        }
        (Expr::Tuple(es), Type::Prod(ts))
    };
    for b in spine.into_iter().rev() {
        body = b.wrap(body);
    }
    program.functions.push(FunDef {
        name: "main".into(),
        tyvars: vec![],
        param: param_pattern(&names),
        arg_ty: prod_or_single(ps),
        ret_ty,
        body: FunBody::Expr(body),
    });
    program
}

fn param_pattern(names: &[String]) -> Pattern {
    if names.len() == 1 {
        Pattern::Var(names[0].clone())
    } else {
        Pattern::Tuple(names.iter().map(|n| Pattern::Var(n.clone())).collect())
    }
}

fn param_type<R: Rng>(rng: &mut R, writable: bool) -> Type {
    let elem = if rng.gen_bool(0.6) { Type::U32 } else { Type::U8 };
    match rng.gen_range(0..if writable { 7 } else { 5 }) {
        0 => Type::U32,
        1 => Type::U8,
        2 => Type::Bool,
        3 | 4 => Type::array_ro(elem),
        _ => Type::array(elem),
    }
}

/// A random value of type `t`. Function-typed positions are filled from
/// `funs` by exact type.
pub fn random_value<R: Rng>(
    rng: &mut R,
    t: &Type,
    max_len: u32,
    funs: &[(String, Type)],
) -> Result<VValue, String> {
    Ok(match t {
        Type::Unit => VValue::Unit,
        Type::Bool => VValue::Bool(rng.gen()),
        Type::U8 => VValue::U8(rng.gen()),
        Type::U32 => VValue::U32(match rng.gen_range(0..10) {
            0..=5 => rng.gen_range(0..70),
            6 => u32::MAX - rng.gen_range(0..4),
            _ => rng.gen(),
        }),
        Type::Prod(ts) => VValue::Prod(
            ts.iter()
                .map(|t| random_value(rng, t, max_len, funs))
                .collect::<Result<_, _>>()?,
        ),
        Type::Fun(..) => {
            let cands: Vec<_> = funs.iter().filter(|(_, ft)| ft == t).collect();
            let (f, _) = cands
                .choose(rng)
                .ok_or_else(|| format!("no function of type {t} to choose from"))?;
            VValue::fun(f)
        }
        Type::Abs { args, .. } => {
            let elem = args.first().ok_or("array without element type")?.clone();
            let len = rng.gen_range(0..=max_len);
            let items = (0..len)
                .map(|_| random_value(rng, &elem, max_len, funs))
                .collect::<Result<_, _>>()?;
            VValue::array(elem, items)
        }
        Type::Var(_) | Type::Bang(_) => return Err(format!("cannot generate a value of {t}")),
    })
}

/// One input seen at every layer, with the relations between them
/// established.
#[derive(Clone, Debug)]
pub struct Related {
    pub ty: Type,
    pub v: VValue,
    pub u: UValue,
    pub store: Store,
    pub s: SValue,
    pub low: LowValue,
    pub heap: LowHeap,
    pub amap: AddrMap,
}

/// Stores `v` at the update layer: every array gets an element block and a
/// header cell. Unrelated scalar cells are scattered around it.
pub fn embed<R: Rng>(
    rng: &mut R,
    v: &VValue,
    ty: &Type,
    env: &TypingEnv,
    table: &[String],
    heap_bytes: u32,
) -> Result<Related, String> {
    build(Some(rng), v, ty, env, table, heap_bytes)
}

/// Like [`embed`] but with nothing else in the store, so the result is
/// fully determined by `v`.
pub fn place(
    v: &VValue,
    ty: &Type,
    env: &TypingEnv,
    table: &[String],
    heap_bytes: u32,
) -> Result<Related, String> {
    build(None::<&mut rand_chacha::ChaCha8Rng>, v, ty, env, table, heap_bytes)
}

fn build<R: Rng>(
    mut rng: Option<&mut R>,
    v: &VValue,
    ty: &Type,
    env: &TypingEnv,
    table: &[String],
    heap_bytes: u32,
) -> Result<Related, String> {
    let mut store = Store::new();
    distractors(&mut rng, &mut store);
    let u = store_value(&mut rng, v, &mut store);
    distractors(&mut rng, &mut store);
    corr(env, &u, &store, v, ty).map_err(|r| format!("embedded input not related: {r}"))?;
    let (heap, amap) = lay_out(&store, heap_bytes).map_err(|e| format!("lay out: {e}"))?;
    let low = to_low(&u, &store, &amap, table).ok_or("no machine image of the input")?;
    let ctx = LowCtx {
        store: &store,
        amap: &amap,
        table,
    };
    if !rel_vc(&ctx, &low, &u) {
        return Err("machine input not related".into());
    }
    rel_hc(&heap, &store, &amap).map_err(|e| format!("machine heap not related: {e}"))?;
    let s = from_value(v);
    if !rel_ps(&s, v) {
        return Err("shallow input not related".into());
    }
    Ok(Related {
        ty: ty.clone(),
        v: v.clone(),
        u,
        store,
        s,
        low,
        heap,
        amap,
    })
}

fn distractors<R: Rng>(rng: &mut Option<&mut R>, store: &mut Store) {
    let Some(rng) = rng else {
        return;
    };
    for _ in 0..rng.gen_range(0..3) {
        let u = match rng.gen_range(0..3) {
            0 => UValue::U32(rng.gen()),
            1 => UValue::U8(rng.gen()),
            _ => UValue::Bool(rng.gen()),
        };
        store.alloc(u);
    }
}

fn store_value<R: Rng>(rng: &mut Option<&mut R>, v: &VValue, store: &mut Store) -> UValue {
    match v {
        VValue::Prod(vs) => UValue::Prod(vs.iter().map(|v| store_value(rng, v, store)).collect()),
        VValue::Fun(f, ts) => UValue::Fun(f.clone(), ts.clone()),
        VValue::Abstract(crate::dynsem::VAbs::Array { elem, items }) => {
            let base: LocId = if items.is_empty() {
                store.reserve(1)
            } else {
                store.alloc_block(items.iter().map(|x| UValue::from_prim(x).expect("unboxed")))
            };
            if rng.as_mut().is_some_and(|r| r.gen_bool(0.3)) {
                distractors(rng, store);
            }
            let header = UAbs::Array {
                elem: elem.clone(),
                len: items.len() as u32,
                base,
            };
            UValue::Loc(store.alloc(UValue::Abstract(header)))
        }
        prim => UValue::from_prim(prim).expect("prim"),
    }
}

/// Shorthand for an array of `u32`s at the value layer.
pub fn u32_array(xs: Vec<u32>) -> VValue {
    VValue::Abstract(crate::dynsem::VAbs::Array {
        elem: Type::U32,
        items: Arc::new(xs.into_iter().map(VValue::U32).collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsem::eval::Aliases;
    use crate::ffi::library_registry;
    use crate::syntax::{parse_program, pretty_print};
    use crate::typecheck::typecheck_program;

    #[test]
    fn generated_programs_typecheck_and_respect_depth() {
        let cfg = GenConfig::default();
        for t in 0..300 {
            let mut rng = trial_rng(1, "gen-test", t);
            let p = gen_program_with(&mut rng, &cfg);
            if let Err(e) = typecheck_program(&p) {
                panic!("trial {t}: {e}\n{}", pretty_print(&p));
            }
            for f in &p.functions {
                if let Some(b) = f.body() {
                    assert!(b.depth() <= cfg.max_depth, "{}: depth {}", f.name, b.depth());
                }
            }
        }
    }

    #[test]
    fn generated_programs_survive_printing() {
        for t in 0..50 {
            let mut rng = trial_rng(2, "gen-print", t);
            let p = gen_program_with(&mut rng, &GenConfig::default());
            let text = pretty_print(&p);
            let back = typecheck_program(&parse_program(&text).unwrap()).unwrap();
            assert_eq!(pretty_print(&back.program), text);
        }
    }

    #[test]
    fn size_zero_is_a_literal_main() {
        let p = gen_program(3, 0);
        let main = p.function("main").unwrap();
        assert!(matches!(main.body(), Some(Expr::Lit(_))));
        typecheck_program(&p).unwrap();
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        assert_eq!(gen_program(9, 6), gen_program(9, 6));
        assert_ne!(gen_program(9, 6), gen_program(10, 6));
    }

    #[test]
    fn gen_value_of_u32_agrees_at_every_layer() {
        let p = prelude();
        let reg = library_registry();
        let al = Aliases::new();
        let env = TypingEnv {
            program: &p,
            registry: &reg,
            aliases: &al,
        };
        let r = gen_value(&Type::U32, 5, &env, &[], 1 << 12).unwrap();
        let n = r.v.as_u32().unwrap();
        assert_eq!(r.u, UValue::U32(n));
        assert_eq!(r.low, LowValue::U32(n));
        assert_eq!(r.s, SValue::U32(n));
    }

    #[test]
    fn embedded_inputs_are_related_everywhere() {
        let p = prelude();
        let reg = library_registry();
        let al = Aliases::new();
        let env = TypingEnv {
            program: &p,
            registry: &reg,
            aliases: &al,
        };
        let t = Type::Prod(vec![
            Type::array(Type::U32),
            Type::U8,
            Type::array_ro(Type::U8),
        ]);
        for k in 0..100 {
            let mut rng = trial_rng(4, "embed", k);
            let v = random_value(&mut rng, &t, 64, &[]).unwrap();
            let r = embed(&mut rng, &v, &t, &env, &[], 1 << 16).unwrap();
            assert_eq!(r.ty, t);
        }
    }
}
