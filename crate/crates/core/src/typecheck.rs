//! Uniqueness type system.
//!
//! Contexts are split by usage tracking: a single left-to-right pass marks
//! linear variables as used, and `if` compares the usage each branch
//! produced. Integer literals are elaborated to `U8` where the expected
//! type demands it, so checking returns a rewritten expression.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::syntax::{BinOp, Expr, FunBody, Lit, Pattern, Program, Subst, Type, TypeScheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Linear,
    Shareable,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unbound type variable `{0}`")]
    UnboundTyVar(String),
    #[error("unknown abstract type `{0}`")]
    UnknownAbsType(String),
    #[error("abstract type `{name}` expects {expected} arguments, got {got}")]
    AbsArity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("linear variable `{0}` used more than once")]
    LinearUsedTwice(String),
    #[error("linear variable `{0}` is never used")]
    Discarded(String),
    #[error("a value of linear type {0} is discarded by a wildcard")]
    DiscardedWildcard(Type),
    #[error("branches consume different linear variables: {0:?} vs {1:?}")]
    BranchMismatch(Vec<String>, Vec<String>),
    #[error("type mismatch: expected {expected}, found {found}")]
    Mismatch { expected: Type, found: Type },
    #[error("operator `{op}` cannot be applied to {left} and {right}")]
    BadOperands { op: &'static str, left: Type, right: Type },
    #[error("pattern does not match type {0}")]
    PatternMismatch(Type),
    #[error("`{name}` expects {expected} type arguments, got {got}")]
    TypeArgArity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("let! variable `{0}` is not available")]
    LetBangUnavailable(String),
    #[error("result of a let! region has type {0}, which may leak a read-only reference")]
    LetBangEscape(Type),
    #[error("recursive call cycle through `{0}`")]
    Recursion(String),
    #[error("foreign declaration `{0}` must not bind a parameter")]
    ForeignParam(String),
    #[error("in `{function}`: {error}")]
    InFunction {
        function: String,
        error: Box<TypeError>,
    },
}

impl TypeError {
    fn within(self, function: &str) -> TypeError {
        TypeError::InFunction {
            function: function.to_string(),
            error: Box::new(self),
        }
    }

    /// The innermost error, without function context.
    pub fn root(&self) -> &TypeError {
        match self {
            TypeError::InFunction { error, .. } => error.root(),
            e => e,
        }
    }
}

/// Kind assumptions for type variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TyVarCtx {
    kinds: BTreeMap<String, Kind>,
}

impl TyVarCtx {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every variable assumed linear: the only assumption a function's
    /// type-variable list can express.
    pub fn linear<S: AsRef<str>>(vars: &[S]) -> Self {
        TyVarCtx {
            kinds: vars
                .iter()
                .map(|v| (v.as_ref().to_string(), Kind::Linear))
                .collect(),
        }
    }

    pub fn with(mut self, var: &str, kind: Kind) -> Self {
        self.kinds.insert(var.to_string(), kind);
        self
    }

    pub fn get(&self, var: &str) -> Option<Kind> {
        self.kinds.get(var).copied()
    }
}

pub fn bang_type(t: &Type) -> Type {
    t.bang()
}

pub fn kind_of(a: &TyVarCtx, t: &Type) -> Result<Kind, TypeError> {
    Ok(match t {
        Type::Unit | Type::Bool | Type::U8 | Type::U32 | Type::Fun(..) => Kind::Shareable,
        Type::Var(v) => a.get(v).ok_or_else(|| TypeError::UnboundTyVar(v.clone()))?,
        Type::Bang(inner) => {
            for v in inner.free_vars() {
                a.get(&v).ok_or(TypeError::UnboundTyVar(v))?;
            }
            Kind::Shareable
        }
        Type::Abs { args, readonly, .. } => {
            let mut k = if *readonly {
                Kind::Shareable
            } else {
                Kind::Linear
            };
            for arg in args {
                if kind_of(a, arg)? == Kind::Linear && !readonly {
                    k = Kind::Linear;
                }
            }
            k
        }
        Type::Prod(ts) => {
            let mut k = Kind::Shareable;
            for c in ts {
                if kind_of(a, c)? == Kind::Linear {
                    k = Kind::Linear;
                }
            }
            k
        }
    })
}

/// True if `t` mentions a read-only abstract type or a banged type variable,
/// i.e. a value of `t` may carry read-only references into the store.
fn carries_readonly(t: &Type) -> bool {
    match t {
        Type::Abs { readonly: true, .. } | Type::Bang(_) => true,
        Type::Abs { args, .. } => args.iter().any(carries_readonly),
        Type::Prod(ts) => ts.iter().any(carries_readonly),
        _ => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Usage {
    Available,
    Used,
    /// Temporarily read-only inside a `let!` region.
    Banged,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Entry {
    name: String,
    ty: Type,
    kind: Kind,
    usage: Usage,
}

/// Ordered variable context; later entries shadow earlier ones.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypingCtx {
    entries: Vec<Entry>,
}

impl TypingCtx {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, a: &TyVarCtx, name: &str, ty: Type) -> Result<(), TypeError> {
        let kind = kind_of(a, &ty)?;
        self.entries.push(Entry {
            name: name.to_string(),
            ty,
            kind,
            usage: Usage::Available,
        });
        Ok(())
    }

    pub fn usage(&self, name: &str) -> Option<Usage> {
        self.lookup(name).map(|i| self.entries[i].usage)
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        self.entries.iter().rposition(|e| e.name == name)
    }

    fn linear_used(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.kind == Kind::Linear && e.usage == Usage::Used)
            .map(|(i, _)| i)
            .collect()
    }

    fn names(&self, idx: &[usize]) -> Vec<String> {
        idx.iter().map(|&i| self.entries[i].name.clone()).collect()
    }

    fn unused_linear(&self, from: usize) -> Option<&Entry> {
        self.entries[from..]
            .iter()
            .find(|e| e.kind == Kind::Linear && e.usage == Usage::Available)
    }
}

/// Function signatures and declared abstract types a body is checked against.
pub struct Signatures<'p> {
    program: &'p Program,
}

impl<'p> Signatures<'p> {
    pub fn new(program: &'p Program) -> Self {
        Signatures { program }
    }

    fn scheme(&self, f: &str) -> Result<TypeScheme, TypeError> {
        self.program
            .function(f)
            .map(|d| d.scheme())
            .ok_or_else(|| TypeError::UnknownFunction(f.to_string()))
    }
}

/// Checks that `t` only mentions declared abstract types at the right
/// arity and type variables bound in `a`.
pub fn well_formed(program: &Program, a: &TyVarCtx, t: &Type) -> Result<(), TypeError> {
    match t {
        Type::Unit | Type::Bool | Type::U8 | Type::U32 => Ok(()),
        Type::Var(v) => a
            .get(v)
            .map(|_| ())
            .ok_or_else(|| TypeError::UnboundTyVar(v.clone())),
        Type::Bang(t) => well_formed(program, a, t),
        Type::Fun(x, y) => {
            well_formed(program, a, x)?;
            well_formed(program, a, y)
        }
        Type::Prod(ts) => ts.iter().try_for_each(|t| well_formed(program, a, t)),
        Type::Abs { name, args, .. } => {
            let decl = program
                .typedecl(name)
                .ok_or_else(|| TypeError::UnknownAbsType(name.clone()))?;
            if decl.params.len() != args.len() {
                return Err(TypeError::AbsArity {
                    name: name.clone(),
                    expected: decl.params.len(),
                    got: args.len(),
                });
            }
            args.iter().try_for_each(|t| well_formed(program, a, t))
        }
    }
}

struct Checker<'a, 'p> {
    sigs: &'a Signatures<'p>,
    tyvars: &'a TyVarCtx,
}

impl Checker<'_, '_> {
    fn instantiate(&self, f: &str, targs: &[Type]) -> Result<Type, TypeError> {
        let scheme = self.sigs.scheme(f)?;
        if scheme.vars.len() != targs.len() {
            return Err(TypeError::TypeArgArity {
                name: f.to_string(),
                expected: scheme.vars.len(),
                got: targs.len(),
            });
        }
        for t in targs {
            well_formed(self.sigs.program, self.tyvars, t)?;
        }
        let s: Subst = scheme.vars.iter().cloned().zip(targs.iter().cloned()).collect();
        Ok(scheme.ty.subst(&s))
    }

    fn use_var(&self, ctx: &mut TypingCtx, name: &str) -> Result<Type, TypeError> {
        let i = ctx
            .lookup(name)
            .ok_or_else(|| TypeError::UnboundVar(name.to_string()))?;
        let e = &mut ctx.entries[i];
        match e.usage {
            Usage::Banged => Ok(e.ty.bang()),
            Usage::Used => Err(TypeError::LinearUsedTwice(name.to_string())),
            Usage::Available => {
                if e.kind == Kind::Linear {
                    e.usage = Usage::Used;
                }
                Ok(e.ty.clone())
            }
        }
    }

    fn bind_pattern(
        &self,
        ctx: &mut TypingCtx,
        p: &Pattern,
        t: &Type,
    ) -> Result<(), TypeError> {
        match p {
            Pattern::Var(v) => ctx.bind(self.tyvars, v, t.clone()),
            Pattern::Wild => {
                if kind_of(self.tyvars, t)? == Kind::Linear {
                    Err(TypeError::DiscardedWildcard(t.clone()))
                } else {
                    Ok(())
                }
            }
            Pattern::Tuple(ps) => match t {
                Type::Prod(ts) if ts.len() == ps.len() => ps
                    .iter()
                    .zip(ts)
                    .try_for_each(|(p, t)| self.bind_pattern(ctx, p, t)),
                _ => Err(TypeError::PatternMismatch(t.clone())),
            },
        }
    }

    /// Binds `p` at `t`, checks `body`, then pops the binders, requiring
    /// every linear one to have been consumed.
    fn under_pattern<T>(
        &self,
        ctx: &mut TypingCtx,
        p: &Pattern,
        t: &Type,
        body: impl FnOnce(&mut TypingCtx) -> Result<T, TypeError>,
    ) -> Result<T, TypeError> {
        let mark = ctx.entries.len();
        self.bind_pattern(ctx, p, t)?;
        let out = body(ctx)?;
        if let Some(e) = ctx.unused_linear(mark) {
            return Err(TypeError::Discarded(e.name.clone()));
        }
        ctx.entries.truncate(mark);
        Ok(out)
    }

    fn infer(&self, ctx: &mut TypingCtx, e: &Expr) -> Result<(Type, Expr), TypeError> {
        self.go(ctx, e, None)
    }

    fn check(&self, ctx: &mut TypingCtx, e: &Expr, want: &Type) -> Result<Expr, TypeError> {
        let (t, e) = self.go(ctx, e, Some(want))?;
        if &t == want {
            Ok(e)
        } else {
            Err(TypeError::Mismatch {
                expected: want.clone(),
                found: t,
            })
        }
    }

    fn go(
        &self,
        ctx: &mut TypingCtx,
        e: &Expr,
        want: Option<&Type>,
    ) -> Result<(Type, Expr), TypeError> {
        match e {
            Expr::Lit(l) => Ok(match (l, want) {
                (Lit::U32(n), Some(Type::U8)) if *n <= u8::MAX as u32 => {
                    (Type::U8, Expr::Lit(Lit::U8(*n as u8)))
                }
                (Lit::Unit, _) => (Type::Unit, e.clone()),
                (Lit::Bool(_), _) => (Type::Bool, e.clone()),
                (Lit::U8(_), _) => (Type::U8, e.clone()),
                (Lit::U32(_), _) => (Type::U32, e.clone()),
            }),
            Expr::Var(v) => Ok((self.use_var(ctx, v)?, e.clone())),
            Expr::Fun(f, targs) => Ok((self.instantiate(f, targs)?, e.clone())),
            Expr::Tuple(es) => {
                let wants: Vec<Option<&Type>> = match want {
                    Some(Type::Prod(ts)) if ts.len() == es.len() => ts.iter().map(Some).collect(),
                    _ => vec![None; es.len()],
                };
                let mut tys = Vec::new();
                let mut out = Vec::new();
                for (x, w) in es.iter().zip(wants) {
                    let (t, x) = match w {
                        Some(w) => self.go(ctx, x, Some(w))?,
                        None => self.infer(ctx, x)?,
                    };
                    tys.push(t);
                    out.push(x);
                }
                Ok((Type::Prod(tys), Expr::Tuple(out)))
            }
            Expr::App(f, targs, arg) => {
                let (param, ret) = match self.instantiate(f, targs)? {
                    Type::Fun(p, r) => (*p, *r),
                    other => {
                        return Err(TypeError::Mismatch {
                            expected: Type::fun(Type::Unit, Type::Unit),
                            found: other,
                        })
                    }
                };
                let arg = self.check(ctx, arg, &param)?;
                Ok((ret, Expr::App(f.clone(), targs.clone(), Box::new(arg))))
            }
            Expr::Let(p, bound, body) => {
                let (bt, bound) = self.infer(ctx, bound)?;
                let (t, body) = self.under_pattern(ctx, p, &bt, |ctx| self.go(ctx, body, want))?;
                Ok((t, Expr::let_(p.clone(), bound, body)))
            }
            Expr::LetBang {
                vars,
                pat,
                bound,
                body,
            } => {
                let mut idx = Vec::new();
                for v in vars {
                    let i = ctx
                        .lookup(v)
                        .ok_or_else(|| TypeError::UnboundVar(v.clone()))?;
                    if ctx.entries[i].usage != Usage::Available {
                        return Err(TypeError::LetBangUnavailable(v.clone()));
                    }
                    ctx.entries[i].usage = Usage::Banged;
                    idx.push(i);
                }
                let res = self.infer(ctx, bound);
                for &i in &idx {
                    ctx.entries[i].usage = Usage::Available;
                }
                let (bt, bound) = res?;
                if kind_of(self.tyvars, &bt)? != Kind::Shareable || carries_readonly(&bt) {
                    return Err(TypeError::LetBangEscape(bt));
                }
                let (t, body) =
                    self.under_pattern(ctx, pat, &bt, |ctx| self.go(ctx, body, want))?;
                Ok((
                    t,
                    Expr::LetBang {
                        vars: vars.clone(),
                        pat: pat.clone(),
                        bound: Box::new(bound),
                        body: Box::new(body),
                    },
                ))
            }
            Expr::If(c, t, f) => {
                let c = self.check(ctx, c, &Type::Bool)?;
                let before = ctx.clone();
                let (tt, t) = self.go(ctx, t, want)?;
                let after_then = std::mem::replace(ctx, before);
                let f = self.check(ctx, f, &tt)?;
                let used_t = after_then.linear_used();
                let used_f = ctx.linear_used();
                if used_t != used_f {
                    return Err(TypeError::BranchMismatch(
                        after_then.names(&used_t),
                        ctx.names(&used_f),
                    ));
                }
                Ok((tt, Expr::if_(c, t, f)))
            }
            Expr::PrimOp(op, l, r) => self.primop(ctx, *op, l, r, want),
        }
    }

    fn primop(
        &self,
        ctx: &mut TypingCtx,
        op: BinOp,
        l: &Expr,
        r: &Expr,
        want: Option<&Type>,
    ) -> Result<(Type, Expr), TypeError> {
        let (lt, l, rt, r) = if op.is_logic() {
            let l = self.check(ctx, l, &Type::Bool)?;
            let r = self.check(ctx, r, &Type::Bool)?;
            (Type::Bool, l, Type::Bool, r)
        } else {
            let operand_want = if op.is_arith() {
                want.filter(|w| matches!(w, Type::U8 | Type::U32))
            } else {
                None
            };
            match operand_want {
                Some(w) => {
                    let l = self.check(ctx, l, w)?;
                    let r = self.check(ctx, r, w)?;
                    (w.clone(), l, w.clone(), r)
                }
                // infer the side that fixes the width, check the other
                None if matches!(l, Expr::Lit(Lit::U32(_))) => {
                    let (rt, r) = self.infer(ctx, r)?;
                    let (lt, l) = self.go(ctx, l, Some(&rt))?;
                    (lt, l, rt, r)
                }
                None => {
                    let (lt, l) = self.infer(ctx, l)?;
                    let (rt, r) = self.go(ctx, r, Some(&lt))?;
                    (lt, l, rt, r)
                }
            }
        };
        let bad = || TypeError::BadOperands {
            op: op.symbol(),
            left: lt.clone(),
            right: rt.clone(),
        };
        if lt != rt {
            return Err(bad());
        }
        let numeric = matches!(lt, Type::U8 | Type::U32);
        let result = match op {
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div if numeric => lt.clone(),
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge if numeric => Type::Bool,
            BinOp::Eq | BinOp::Ne if numeric || lt == Type::Bool => Type::Bool,
            BinOp::And | BinOp::Or => Type::Bool,
            _ => return Err(bad()),
        };
        Ok((result, Expr::binop(op, l, r)))
    }
}

/// Types `e` under `gamma`; every linear variable of `gamma` must be
/// consumed exactly once.
pub fn typecheck_expr(
    program: &Program,
    a: &TyVarCtx,
    gamma: &mut TypingCtx,
    e: &Expr,
) -> Result<Type, TypeError> {
    let sigs = Signatures::new(program);
    let c = Checker { sigs: &sigs, tyvars: a };
    let (t, _) = c.infer(gamma, e)?;
    if let Some(e) = gamma.unused_linear(0) {
        return Err(TypeError::Discarded(e.name.clone()));
    }
    Ok(t)
}

/// A program that passed [`typecheck_program`], with literals elaborated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedProgram {
    pub program: Program,
}

impl TypedProgram {
    pub fn signature(&self, f: &str) -> Option<TypeScheme> {
        self.program.function(f).map(|d| d.scheme())
    }
}

pub fn typecheck_program(p: &Program) -> Result<TypedProgram, TypeError> {
    let sigs = Signatures::new(p);
    let mut out = p.clone();
    for f in out.functions.iter_mut() {
        let a = TyVarCtx::linear(&f.tyvars);
        let wrap = |e: TypeError| e.within(&f.name);
        well_formed(p, &a, &f.arg_ty).map_err(wrap)?;
        well_formed(p, &a, &f.ret_ty).map_err(wrap)?;
        let body = match &f.body {
            FunBody::Foreign => {
                if f.param != Pattern::Wild {
                    return Err(TypeError::ForeignParam(f.name.clone()));
                }
                continue;
            }
            FunBody::Expr(b) => b,
        };
        let c = Checker {
            sigs: &sigs,
            tyvars: &a,
        };
        let mut ctx = TypingCtx::new();
        let body = c
            .under_pattern(&mut ctx, &f.param, &f.arg_ty, |ctx| {
                c.check(ctx, body, &f.ret_ty)
            })
            .map_err(wrap)?;
        f.body = FunBody::Expr(body);
    }
    check_acyclic(p)?;
    Ok(TypedProgram { program: out })
}

fn check_acyclic(p: &Program) -> Result<(), TypeError> {
    let edges: BTreeMap<&str, BTreeSet<String>> = p
        .functions
        .iter()
        .map(|f| {
            let mut s = BTreeSet::new();
            if let Some(b) = f.body() {
                b.referenced_functions(&mut s);
            }
            (f.name.as_str(), s)
        })
        .collect();
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        f: &'a str,
        edges: &'a BTreeMap<&'a str, BTreeSet<String>>,
        marks: &mut BTreeMap<&'a str, Mark>,
    ) -> Result<(), TypeError> {
        match marks.get(f) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => return Err(TypeError::Recursion(f.to_string())),
            None => {}
        }
        marks.insert(f, Mark::Active);
        if let Some(succ) = edges.get(f) {
            for g in succ {
                visit(g, edges, marks)?;
            }
        }
        marks.insert(f, Mark::Done);
        Ok(())
    }
    let mut marks = BTreeMap::new();
    for f in edges.keys() {
        visit(f, &edges, &mut marks)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_expr, parse_program};
    use proptest::prelude::*;

    const PRELUDE: &str = "abstract Array a\n\
        foreign length : (Array a)! -> U32\n\
        foreign put : (Array a, U32, a) -> Array a\n";

    fn prog(src: &str) -> Result<TypedProgram, TypeError> {
        typecheck_program(&parse_program(&format!("{PRELUDE}{src}")).unwrap())
    }

    fn root(r: Result<TypedProgram, TypeError>) -> TypeError {
        r.unwrap_err().root().clone()
    }

    #[test]
    fn kinds() {
        let a = TyVarCtx::new();
        assert_eq!(kind_of(&a, &Type::U32), Ok(Kind::Shareable));
        assert_eq!(kind_of(&a, &Type::array(Type::U32)), Ok(Kind::Linear));
        assert_eq!(kind_of(&a, &Type::array_ro(Type::U32)), Ok(Kind::Shareable));
        assert_eq!(
            kind_of(&a, &Type::var("a")),
            Err(TypeError::UnboundTyVar("a".into()))
        );
        let a = TyVarCtx::linear(&["a"]);
        assert_eq!(kind_of(&a, &Type::var("a")), Ok(Kind::Linear));
        assert_eq!(kind_of(&a, &Type::var("a").bang()), Ok(Kind::Shareable));
        assert_eq!(
            kind_of(&a, &Type::Prod(vec![Type::U32, Type::var("a")])),
            Ok(Kind::Linear)
        );
    }

    #[test]
    fn bang_examples() {
        assert_eq!(bang_type(&Type::U32), Type::U32);
        assert_eq!(
            bang_type(&Type::array(Type::U32)),
            Type::Abs {
                name: "Array".into(),
                args: vec![Type::U32],
                readonly: true
            }
        );
    }

    #[test]
    fn linear_pair_rejected() {
        let p = parse_program(PRELUDE).unwrap();
        let mut g = TypingCtx::new();
        let a = TyVarCtx::new();
        g.bind(&a, "x", Type::array(Type::U32)).unwrap();
        let e = parse_expr("(x, x)").unwrap();
        assert_eq!(
            typecheck_expr(&p, &a, &mut g, &e),
            Err(TypeError::LinearUsedTwice("x".into()))
        );
    }

    #[test]
    fn discarding_linear_rejected() {
        assert_eq!(
            root(prog("fun f (x : Array U32) -> U32 = 0")),
            TypeError::Discarded("x".into())
        );
        assert!(matches!(
            root(prog("fun f (x : Array U32) -> U32 = let _ = x in 0")),
            TypeError::DiscardedWildcard(_)
        ));
    }

    #[test]
    fn branches_must_agree() {
        assert!(prog(
            "fun f (x : Array U32, c : Bool) -> Array U32 = \
             if c then x else put[U32] (x, 0, 1)"
        )
        .is_ok());
        assert!(matches!(
            root(prog(
                "fun f (x : Array U32, y : Array U32, c : Bool) -> (Array U32, Array U32) = \
                 if c then (x, y) else (y, y)"
            )),
            TypeError::LinearUsedTwice(_)
        ));
        assert!(matches!(
            root(prog(
                "fun g (x : Array U32) -> U32 = let! (x) n = length[U32] x in let _ = put[U32] (x, 0, 1) in n\n"
            )),
            TypeError::DiscardedWildcard(_)
        ));
        assert!(matches!(
            root(prog(
                "fun f (x : Array U32, y : Array U32, c : Bool) -> Array U32 = \
                 if c then x else y"
            )),
            TypeError::BranchMismatch(..)
        ));
    }

    #[test]
    fn readonly_shared() {
        assert!(prog(
            "fun f (x : (Array U32)!) -> (U32, U32) = (length[U32] x, length[U32] x)"
        )
        .is_ok());
    }

    #[test]
    fn let_bang_region() {
        assert!(prog(
            "fun f (x : Array U32) -> (Array U32, U32) = \
             let! (x) n = length[U32] x in (put[U32] (x, 0, n), n)"
        )
        .is_ok());
        assert!(matches!(
            root(prog(
                "fun f (x : Array U32) -> (Array U32, U32) = \
                 let! (x) y = x in (x, length[U32] y)"
            )),
            TypeError::LetBangEscape(_)
        ));
        assert!(matches!(
            root(prog(
                "fun f (x : Array U32) -> Array U32 = \
                 let! (x) n = put[U32] (x, 0, 1) in x"
            )),
            TypeError::Mismatch { .. }
        ));
    }

    #[test]
    fn literal_elaboration() {
        let t = prog("fun f (x : U8) -> U8 = x + 3").unwrap();
        assert_eq!(
            t.program.function("f").unwrap().body(),
            Some(&Expr::binop(
                BinOp::Add,
                Expr::var("x"),
                Expr::Lit(Lit::U8(3))
            ))
        );
        assert!(prog("fun f (x : U8) -> Bool = 3 < x").is_ok());
        assert!(prog("fun f (x : U8) -> U8 = x + 300").is_err());
        assert!(prog("fun f (x : U8, y : U32) -> U32 = x + y").is_err());
    }

    #[test]
    fn type_arguments_required() {
        assert!(matches!(
            root(prog("fun f (x : (Array U32)!) -> U32 = length x")),
            TypeError::TypeArgArity { .. }
        ));
        assert!(matches!(
            root(prog("fun f (x : (Array U32)!) -> U32 = length[U8] x")),
            TypeError::Mismatch { .. }
        ));
    }

    #[test]
    fn polymorphic_bodies() {
        assert!(prog("fun id a (x : a) -> a = x").is_ok());
        assert!(matches!(
            root(prog("fun dup a (x : a) -> (a, a) = (x, x)")),
            TypeError::LinearUsedTwice(_)
        ));
        assert!(prog("fun dupr a (x : a!) -> (a!, a!) = (x, x)").is_ok());
        assert!(prog("fun wrap a (x : (Array a)!) -> U32 = length[a] x").is_ok());
        assert!(matches!(
            root(prog("fun bad (x : b) -> U32 = 0")),
            TypeError::UnboundTyVar(_)
        ));
    }

    #[test]
    fn recursion_rejected() {
        assert!(matches!(
            root(prog("fun f (x : U32) -> U32 = g x\nfun g (x : U32) -> U32 = f x")),
            TypeError::Recursion(_)
        ));
    }

    #[test]
    fn abstract_types_checked() {
        assert!(matches!(
            root(prog("fun f (x : Set U32) -> Set U32 = x")),
            TypeError::UnknownAbsType(_)
        ));
        assert!(matches!(
            root(prog("fun f (x : Array) -> Array = x")),
            TypeError::AbsArity { .. }
        ));
    }

    fn arb_type() -> impl Strategy<Value = Type> {
        let leaf = prop_oneof![
            Just(Type::Unit),
            Just(Type::Bool),
            Just(Type::U8),
            Just(Type::U32),
            Just(Type::var("a")),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(Type::Prod),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Type::fun(a, b)),
                inner.clone().prop_map(Type::array),
                inner.prop_map(|t| t.bang()),
            ]
        })
    }

    proptest! {
        #[test]
        fn banged_types_are_shareable(t in arb_type()) {
            let a = TyVarCtx::linear(&["a"]);
            prop_assert_eq!(kind_of(&a, &bang_type(&t)), Ok(Kind::Shareable));
        }

        #[test]
        fn weakening_with_shareable_binding(extra in prop_oneof![Just(Type::U32), Just(Type::array_ro(Type::U32)), Just(Type::Bool)]) {
            let p = parse_program(PRELUDE).unwrap();
            let a = TyVarCtx::new();
            for src in ["(x, x)", "put[U32] (x, 0, 1)", "length[U32] x", "1 + 2"] {
                let e = parse_expr(src).unwrap();
                let mut g1 = TypingCtx::new();
                g1.bind(&a, "x", Type::array(Type::U32)).unwrap();
                let mut g2 = g1.clone();
                g2.bind(&a, "unused", extra.clone()).unwrap();
                let r1 = typecheck_expr(&p, &a, &mut g1, &e);
                let r2 = typecheck_expr(&p, &a, &mut g2, &e);
                prop_assert_eq!(r1, r2);
            }
        }
    }
}
