//! Big-step evaluators for the value and update semantics.

use std::collections::BTreeMap;

use super::store::Store;
use super::typing::TypingEnv;
use super::value::{UValue, VValue};
use super::EvalError;
use crate::ffi::{CallU, CallV, ForeignFn, LinkError, Registry};
use crate::syntax::{BinOp, Expr, FunBody, FunDef, Lit, Pattern, Program, Subst, Type};

pub type VEnv = BTreeMap<String, VValue>;
pub type UEnv = BTreeMap<String, UValue>;

/// Specialised foreign names mapped to a registered name and type arguments.
pub type Aliases = BTreeMap<String, (String, Vec<Type>)>;

/// Primitive operators on literal values. Arithmetic wraps at the operand
/// width and division by zero yields zero.
pub fn apply_binop(op: BinOp, a: Lit, b: Lit) -> Option<Lit> {
    use BinOp::*;
    Some(match (a, b) {
        (Lit::U32(x), Lit::U32(y)) => match op {
            Add => Lit::U32(x.wrapping_add(y)),
            Sub => Lit::U32(x.wrapping_sub(y)),
            Mul => Lit::U32(x.wrapping_mul(y)),
            Div => Lit::U32(x.checked_div(y).unwrap_or(0)),
            _ => Lit::Bool(compare(op, x, y)?),
        },
        (Lit::U8(x), Lit::U8(y)) => match op {
            Add => Lit::U8(x.wrapping_add(y)),
            Sub => Lit::U8(x.wrapping_sub(y)),
            Mul => Lit::U8(x.wrapping_mul(y)),
            Div => Lit::U8(x.checked_div(y).unwrap_or(0)),
            _ => Lit::Bool(compare(op, x, y)?),
        },
        (Lit::Bool(x), Lit::Bool(y)) => match op {
            And => Lit::Bool(x && y),
            Or => Lit::Bool(x || y),
            Eq => Lit::Bool(x == y),
            Ne => Lit::Bool(x != y),
            _ => return None,
        },
        _ => return None,
    })
}

fn compare<T: Ord>(op: BinOp, x: T, y: T) -> Option<bool> {
    Some(match op {
        BinOp::Lt => x < y,
        BinOp::Gt => x > y,
        BinOp::Le => x <= y,
        BinOp::Ge => x >= y,
        BinOp::Eq => x == y,
        BinOp::Ne => x != y,
        _ => return None,
    })
}

fn v_lit(v: &VValue) -> Option<Lit> {
    Some(match v {
        VValue::Bool(b) => Lit::Bool(*b),
        VValue::U8(n) => Lit::U8(*n),
        VValue::U32(n) => Lit::U32(*n),
        VValue::Unit => Lit::Unit,
        _ => return None,
    })
}

fn u_lit(u: &UValue) -> Option<Lit> {
    Some(match u {
        UValue::Bool(b) => Lit::Bool(*b),
        UValue::U8(n) => Lit::U8(*n),
        UValue::U32(n) => Lit::U32(*n),
        UValue::Unit => Lit::Unit,
        _ => return None,
    })
}

/// What a function name resolves to.
pub enum Callee<'p> {
    Defined(&'p FunDef, Subst),
    Foreign(&'p ForeignFn, Vec<Type>),
}

/// A linked program: definitions, foreign registries and aliases.
#[derive(Clone)]
pub struct Semantics<'a> {
    pub program: &'a Program,
    pub registry: &'a Registry,
    pub aliases: Aliases,
}

impl<'a> Semantics<'a> {
    pub fn new(program: &'a Program, registry: &'a Registry) -> Self {
        Semantics {
            program,
            registry,
            aliases: Aliases::new(),
        }
    }

    pub fn with_aliases(mut self, aliases: Aliases) -> Self {
        self.aliases = aliases;
        self
    }

    pub fn link(&self) -> Result<(), LinkError> {
        self.registry.link(self.program, &self.aliases)
    }

    pub fn typing_env(&self) -> TypingEnv<'_> {
        TypingEnv {
            program: self.program,
            registry: self.registry,
            aliases: &self.aliases,
        }
    }

    pub fn resolve(&self, name: &str, targs: &[Type]) -> Result<Callee<'_>, EvalError> {
        match self.program.function(name) {
            Some(f) if !f.is_foreign() => {
                if f.tyvars.len() != targs.len() {
                    return Err(EvalError::stuck(format!(
                        "`{name}` expects {} type arguments, got {}",
                        f.tyvars.len(),
                        targs.len()
                    )));
                }
                let s = f.tyvars.iter().cloned().zip(targs.iter().cloned()).collect();
                Ok(Callee::Defined(f, s))
            }
            _ => {
                if let Some(e) = self.registry.get(name) {
                    if e.tyvars.len() != targs.len() {
                        return Err(EvalError::stuck(format!(
                            "`{name}` expects {} type arguments, got {}",
                            e.tyvars.len(),
                            targs.len()
                        )));
                    }
                    return Ok(Callee::Foreign(e, targs.to_vec()));
                }
                if let Some((base, ts)) = self.aliases.get(name) {
                    let e = self
                        .registry
                        .get(base)
                        .ok_or_else(|| EvalError::UnknownFunction(base.clone()))?;
                    return Ok(Callee::Foreign(e, ts.clone()));
                }
                Err(EvalError::UnknownFunction(name.to_string()))
            }
        }
    }

    /// Instantiated type of a function value.
    pub fn fun_type(&self, name: &str, targs: &[Type]) -> Result<Type, EvalError> {
        Ok(match self.resolve(name, targs)? {
            Callee::Defined(f, s) => f.fun_type().subst(&s),
            Callee::Foreign(e, ts) => e.instantiate(&ts),
        })
    }

    // value semantics

    pub fn eval_v(&self, env: &VEnv, e: &Expr) -> Result<VValue, EvalError> {
        let subst = Subst::new();
        let mut ev = VEval {
            sem: self,
            subst: &subst,
            scope: env.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        };
        ev.eval(e)
    }

    pub fn call_v(&self, name: &str, targs: &[Type], arg: VValue) -> Result<VValue, EvalError> {
        match self.resolve(name, targs)? {
            Callee::Defined(f, s) => {
                let body = f.body().expect("defined function has a body");
                let mut ev = VEval {
                    sem: self,
                    subst: &s,
                    scope: Vec::new(),
                };
                ev.bind(&f.param, arg)?;
                ev.eval(body)
            }
            Callee::Foreign(entry, ts) => {
                let caller = Caller::new(self, entry, &ts);
                (entry.value)(&caller, &ts, arg)
            }
        }
    }

    pub fn apply_v(&self, f: &VValue, arg: VValue) -> Result<VValue, EvalError> {
        match f {
            VValue::Fun(name, ts) => self.call_v(name, ts, arg),
            other => Err(EvalError::stuck(format!("applying non-function {other}"))),
        }
    }

    // update semantics

    pub fn eval_u(&self, env: &UEnv, store: Store, e: &Expr) -> Result<(UValue, Store), EvalError> {
        let subst = Subst::new();
        let mut ev = UEval {
            sem: self,
            subst: &subst,
            scope: env.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        };
        ev.eval(e, store)
    }

    pub fn call_u(
        &self,
        name: &str,
        targs: &[Type],
        arg: UValue,
        store: Store,
    ) -> Result<(UValue, Store), EvalError> {
        match self.resolve(name, targs)? {
            Callee::Defined(f, s) => {
                let body = f.body().expect("defined function has a body");
                let mut ev = UEval {
                    sem: self,
                    subst: &s,
                    scope: Vec::new(),
                };
                ev.bind(&f.param, arg)?;
                ev.eval(body, store)
            }
            Callee::Foreign(entry, ts) => {
                let caller = Caller::new(self, entry, &ts);
                (entry.update)(&caller, &ts, store, arg)
            }
        }
    }

    pub fn apply_u(
        &self,
        f: &UValue,
        arg: UValue,
        store: Store,
    ) -> Result<(UValue, Store), EvalError> {
        match f {
            UValue::Fun(name, ts) => self.call_u(name, ts, arg, store),
            other => Err(EvalError::stuck(format!("applying non-function {other:?}"))),
        }
    }
}

/// Callback handed to a foreign function: enforces that it only calls
/// functions of strictly lower order.
pub struct Caller<'s, 'a> {
    sem: &'s Semantics<'a>,
    name: String,
    order: u32,
}

impl<'s, 'a> Caller<'s, 'a> {
    fn new(sem: &'s Semantics<'a>, entry: &ForeignFn, targs: &[Type]) -> Self {
        Caller {
            sem,
            name: entry.name.clone(),
            order: entry.instantiate(targs).order(),
        }
    }

    fn check(&self, name: &str, targs: &[Type]) -> Result<(), EvalError> {
        let o = self.sem.fun_type(name, targs)?.order();
        if o >= self.order {
            return Err(EvalError::OrderViolation {
                caller: self.name.clone(),
                caller_order: self.order,
                callee: name.to_string(),
                callee_order: o,
            });
        }
        Ok(())
    }
}

impl CallV for Caller<'_, '_> {
    fn call_v(&self, f: &VValue, arg: VValue) -> Result<VValue, EvalError> {
        if let VValue::Fun(name, ts) = f {
            self.check(name, ts)?;
        }
        self.sem.apply_v(f, arg)
    }
}

impl CallU for Caller<'_, '_> {
    fn call_u(&self, f: &UValue, arg: UValue, store: Store) -> Result<(UValue, Store), EvalError> {
        if let UValue::Fun(name, ts) = f {
            self.check(name, ts)?;
        }
        self.sem.apply_u(f, arg, store)
    }
}

fn lookup<'e, V>(scope: &'e [(String, V)], x: &str) -> Result<&'e V, EvalError> {
    scope
        .iter()
        .rev()
        .find(|(k, _)| k == x)
        .map(|(_, v)| v)
        .ok_or_else(|| EvalError::UnboundVar(x.to_string()))
}

struct VEval<'s, 'a> {
    sem: &'s Semantics<'a>,
    subst: &'s Subst,
    scope: Vec<(String, VValue)>,
}

impl VEval<'_, '_> {
    fn bind(&mut self, p: &Pattern, v: VValue) -> Result<(), EvalError> {
        match (p, v) {
            (Pattern::Var(x), v) => self.scope.push((x.clone(), v)),
            (Pattern::Wild, _) => {}
            (Pattern::Tuple(ps), VValue::Prod(vs)) if ps.len() == vs.len() => {
                for (p, v) in ps.iter().zip(vs) {
                    self.bind(p, v)?;
                }
            }
            (p, v) => {
                return Err(EvalError::stuck(format!(
                    "pattern {p:?} does not match {v}"
                )))
            }
        }
        Ok(())
    }

    fn targs(&self, ts: &[Type]) -> Vec<Type> {
        ts.iter().map(|t| t.subst(self.subst)).collect()
    }

    fn eval(&mut self, e: &Expr) -> Result<VValue, EvalError> {
        match e {
            Expr::Lit(l) => Ok((*l).into()),
            Expr::Var(x) => lookup(&self.scope, x).cloned(),
            Expr::Fun(f, ts) => Ok(VValue::Fun(f.clone(), self.targs(ts))),
            Expr::Let(p, b, k) | Expr::LetBang {
                pat: p,
                bound: b,
                body: k,
                ..
            } => {
                let v = self.eval(b)?;
                let mark = self.scope.len();
                self.bind(p, v)?;
                let r = self.eval(k);
                self.scope.truncate(mark);
                r
            }
            Expr::If(c, t, f) => match self.eval(c)? {
                VValue::Bool(true) => self.eval(t),
                VValue::Bool(false) => self.eval(f),
                v => Err(EvalError::stuck(format!("if on non-boolean {v}"))),
            },
            Expr::PrimOp(op, l, r) => {
                let a = self.eval(l)?;
                let b = self.eval(r)?;
                v_lit(&a)
                    .zip(v_lit(&b))
                    .and_then(|(x, y)| apply_binop(*op, x, y))
                    .map(VValue::from)
                    .ok_or_else(|| EvalError::stuck(format!("{a} {} {b}", op.symbol())))
            }
            Expr::Tuple(es) => Ok(VValue::Prod(
                es.iter().map(|e| self.eval(e)).collect::<Result<_, _>>()?,
            )),
            Expr::App(f, ts, a) => {
                let arg = self.eval(a)?;
                self.sem.call_v(f, &self.targs(ts), arg)
            }
        }
    }
}

struct UEval<'s, 'a> {
    sem: &'s Semantics<'a>,
    subst: &'s Subst,
    scope: Vec<(String, UValue)>,
}

impl UEval<'_, '_> {
    fn bind(&mut self, p: &Pattern, v: UValue) -> Result<(), EvalError> {
        match (p, v) {
            (Pattern::Var(x), v) => self.scope.push((x.clone(), v)),
            (Pattern::Wild, _) => {}
            (Pattern::Tuple(ps), UValue::Prod(vs)) if ps.len() == vs.len() => {
                for (p, v) in ps.iter().zip(vs) {
                    self.bind(p, v)?;
                }
            }
            (p, v) => {
                return Err(EvalError::stuck(format!(
                    "pattern {p:?} does not match {v:?}"
                )))
            }
        }
        Ok(())
    }

    fn targs(&self, ts: &[Type]) -> Vec<Type> {
        ts.iter().map(|t| t.subst(self.subst)).collect()
    }

    fn eval(&mut self, e: &Expr, store: Store) -> Result<(UValue, Store), EvalError> {
        match e {
            Expr::Lit(l) => Ok(((*l).into(), store)),
            Expr::Var(x) => Ok((lookup(&self.scope, x)?.clone(), store)),
            Expr::Fun(f, ts) => Ok((UValue::Fun(f.clone(), self.targs(ts)), store)),
            Expr::Let(p, b, k) | Expr::LetBang {
                pat: p,
                bound: b,
                body: k,
                ..
            } => {
                let (v, store) = self.eval(b, store)?;
                let mark = self.scope.len();
                self.bind(p, v)?;
                let r = self.eval(k, store);
                self.scope.truncate(mark);
                r
            }
            Expr::If(c, t, f) => match self.eval(c, store)? {
                (UValue::Bool(true), store) => self.eval(t, store),
                (UValue::Bool(false), store) => self.eval(f, store),
                (v, _) => Err(EvalError::stuck(format!("if on non-boolean {v:?}"))),
            },
            Expr::PrimOp(op, l, r) => {
                let (a, store) = self.eval(l, store)?;
                let (b, store) = self.eval(r, store)?;
                let v = u_lit(&a)
                    .zip(u_lit(&b))
                    .and_then(|(x, y)| apply_binop(*op, x, y))
                    .map(UValue::from)
                    .ok_or_else(|| {
                        EvalError::stuck(format!("{a:?} {} {b:?}", op.symbol()))
                    })?;
                Ok((v, store))
            }
            Expr::Tuple(es) => {
                let mut store = store;
                let mut vs = Vec::with_capacity(es.len());
                for e in es {
                    let (v, s) = self.eval(e, store)?;
                    vs.push(v);
                    store = s;
                }
                Ok((UValue::Prod(vs), store))
            }
            Expr::App(f, ts, a) => {
                let (arg, store) = self.eval(a, store)?;
                self.sem.call_u(f, &self.targs(ts), arg, store)
            }
        }
    }
}

/// Whether `f` has a body to evaluate, as opposed to a registry entry.
pub fn is_defined(program: &Program, f: &str) -> bool {
    matches!(program.function(f).map(|d| &d.body), Some(FunBody::Expr(_)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::ffi::library_registry;

    #[test]
    fn binops_wrap_and_divide_by_zero() {
        assert_eq!(
            apply_binop(BinOp::Add, Lit::U32(u32::MAX), Lit::U32(2)),
            Some(Lit::U32(1))
        );
        assert_eq!(
            apply_binop(BinOp::Sub, Lit::U8(0), Lit::U8(1)),
            Some(Lit::U8(255))
        );
        assert_eq!(
            apply_binop(BinOp::Div, Lit::U32(7), Lit::U32(0)),
            Some(Lit::U32(0))
        );
        assert_eq!(apply_binop(BinOp::Add, Lit::U8(1), Lit::U32(1)), None);
        assert_eq!(apply_binop(BinOp::Lt, Lit::Bool(true), Lit::Bool(false)), None);
    }

    #[test]
    fn literal_in_empty_env() {
        let p = Program::default();
        let r = Registry::new();
        let sem = Semantics::new(&p, &r);
        assert_eq!(sem.eval_v(&VEnv::new(), &Expr::u32(5)).unwrap(), VValue::U32(5));
        let mut store = Store::new();
        store.set(3, UValue::Bool(true));
        let (u, s) = sem.eval_u(&UEnv::new(), store.clone(), &Expr::u32(5)).unwrap();
        assert_eq!(u, UValue::U32(5));
        assert_eq!(s, store);
    }

    #[test]
    fn add_at_three_four() {
        let p = corpus::sum_program();
        let r = library_registry();
        let sem = Semantics::new(&p, &r);
        let arg = VValue::Prod(vec![VValue::U32(3), VValue::U32(4), VValue::Unit]);
        assert_eq!(sem.call_v("add", &[], arg).unwrap(), VValue::U32(7));
    }

    #[test]
    fn unbound_variable_is_reported() {
        let p = Program::default();
        let r = Registry::new();
        let sem = Semantics::new(&p, &r);
        assert_eq!(
            sem.eval_v(&VEnv::new(), &Expr::var("x")),
            Err(EvalError::UnboundVar("x".into()))
        );
    }
}
