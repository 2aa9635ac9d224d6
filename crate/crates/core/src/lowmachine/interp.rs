//! Runs monomorphic programs on the machine layer. Every function gets a
//! numeric id: definitions in program order, then foreign declarations.

use super::heap::{ExecOutcome, Failed, LowHeap, LowValue};
use crate::dynsem::eval::{apply_binop, Aliases};
use crate::ffi::{CallLow, ForeignFn, Registry};
use crate::syntax::{Expr, FunDef, Lit, Pattern, Program, Type};

enum Target<'p> {
    Defined(&'p FunDef),
    Foreign(&'p ForeignFn, Vec<Type>),
}

pub struct LowMachine<'a> {
    program: &'a Program,
    registry: &'a Registry,
    aliases: &'a Aliases,
    table: Vec<String>,
}

fn stuck(msg: impl Into<String>) -> Failed {
    Failed::Stuck(msg.into())
}

fn to_lit(v: &LowValue) -> Option<Lit> {
    Some(match v {
        LowValue::Unit => Lit::Unit,
        LowValue::Bool(b) => Lit::Bool(*b),
        LowValue::U8(n) => Lit::U8(*n),
        LowValue::U32(n) => Lit::U32(*n),
        _ => return None,
    })
}

pub fn from_lit(l: Lit) -> LowValue {
    match l {
        Lit::Unit => LowValue::Unit,
        Lit::Bool(b) => LowValue::Bool(b),
        Lit::U8(n) => LowValue::U8(n),
        Lit::U32(n) => LowValue::U32(n),
    }
}

impl<'a> LowMachine<'a> {
    pub fn new(program: &'a Program, registry: &'a Registry, aliases: &'a Aliases) -> Self {
        let defined = program.functions.iter().filter(|f| !f.is_foreign());
        let foreign = program.functions.iter().filter(|f| f.is_foreign());
        let table = defined.chain(foreign).map(|f| f.name.clone()).collect();
        LowMachine {
            program,
            registry,
            aliases,
            table,
        }
    }

    /// Function names indexed by id.
    pub fn table(&self) -> &[String] {
        &self.table
    }

    pub fn fid(&self, name: &str) -> Option<u32> {
        self.table.iter().position(|n| n == name).map(|i| i as u32)
    }

    fn target(&self, name: &str) -> Result<Target<'_>, Failed> {
        let f = self
            .program
            .function(name)
            .ok_or_else(|| stuck(format!("unknown function `{name}`")))?;
        if !f.tyvars.is_empty() {
            return Err(stuck(format!("`{name}` is polymorphic")));
        }
        if !f.is_foreign() {
            return Ok(Target::Defined(f));
        }
        if let Some((base, targs)) = self.aliases.get(name) {
            let e = self
                .registry
                .get(base)
                .ok_or_else(|| stuck(format!("`{base}` is not registered")))?;
            return Ok(Target::Foreign(e, targs.clone()));
        }
        match self.registry.get(name) {
            Some(e) if e.tyvars.is_empty() => Ok(Target::Foreign(e, vec![])),
            _ => Err(stuck(format!("`{name}` has no machine implementation"))),
        }
    }

    fn order(&self, name: &str) -> Result<u32, Failed> {
        Ok(match self.target(name)? {
            Target::Defined(f) => f.fun_type().order(),
            Target::Foreign(e, ts) => e.instantiate(&ts).order(),
        })
    }

    /// Calls the function `name` on `arg`.
    pub fn call(&self, name: &str, arg: LowValue, heap: LowHeap) -> ExecOutcome {
        match self.target(name)? {
            Target::Defined(f) => {
                let mut scope = Vec::new();
                bind(&mut scope, &f.param, arg)?;
                let body = f.body().expect("defined function has a body");
                self.eval(&mut scope, body, heap)
            }
            Target::Foreign(e, ts) => {
                let caller = Caller {
                    machine: self,
                    name,
                    order: e.instantiate(&ts).order(),
                };
                (e.low)(&caller, &ts, heap, arg)
            }
        }
    }

    /// Evaluates a closed expression.
    pub fn eval_closed(&self, e: &Expr, heap: LowHeap) -> ExecOutcome {
        self.eval(&mut Vec::new(), e, heap)
    }

    fn eval(&self, scope: &mut Vec<(String, LowValue)>, e: &Expr, heap: LowHeap) -> ExecOutcome {
        match e {
            Expr::Lit(l) => Ok((from_lit(*l), heap)),
            Expr::Var(x) => {
                let v = scope
                    .iter()
                    .rev()
                    .find(|(k, _)| k == x)
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| stuck(format!("unbound `{x}`")))?;
                Ok((v, heap))
            }
            Expr::Fun(f, ts) => {
                if !ts.is_empty() {
                    return Err(stuck(format!("type arguments on `{f}` at the machine layer")));
                }
                let fid = self
                    .fid(f)
                    .ok_or_else(|| stuck(format!("`{f}` has no function id")))?;
                Ok((LowValue::FunId(fid), heap))
            }
            Expr::Let(p, b, k)
            | Expr::LetBang {
                pat: p,
                bound: b,
                body: k,
                ..
            } => {
                let (v, heap) = self.eval(scope, b, heap)?;
                let mark = scope.len();
                bind(scope, p, v)?;
                let r = self.eval(scope, k, heap);
                scope.truncate(mark);
                r
            }
            Expr::If(c, t, f) => match self.eval(scope, c, heap)? {
                (LowValue::Bool(true), heap) => self.eval(scope, t, heap),
                (LowValue::Bool(false), heap) => self.eval(scope, f, heap),
                (v, _) => Err(stuck(format!("if on {v:?}"))),
            },
            Expr::PrimOp(op, l, r) => {
                let (a, heap) = self.eval(scope, l, heap)?;
                let (b, heap) = self.eval(scope, r, heap)?;
                let v = to_lit(&a)
                    .zip(to_lit(&b))
                    .and_then(|(x, y)| apply_binop(*op, x, y))
                    .ok_or_else(|| stuck(format!("{a:?} {} {b:?}", op.symbol())))?;
                Ok((from_lit(v), heap))
            }
            Expr::Tuple(es) => {
                let mut heap = heap;
                let mut vs = Vec::with_capacity(es.len());
                for e in es {
                    let (v, h) = self.eval(scope, e, heap)?;
                    vs.push(v);
                    heap = h;
                }
                Ok((LowValue::Tuple(vs), heap))
            }
            Expr::App(f, ts, a) => {
                if !ts.is_empty() {
                    return Err(stuck(format!("type arguments on `{f}` at the machine layer")));
                }
                let (arg, heap) = self.eval(scope, a, heap)?;
                self.call(f, arg, heap)
            }
        }
    }
}

impl CallLow for LowMachine<'_> {
    fn dispatch(&self, fid: u32, arg: LowValue, heap: LowHeap) -> ExecOutcome {
        let name = self.table.get(fid as usize).ok_or(Failed::UnknownFid(fid))?;
        self.call(name, arg, heap)
    }
}

/// Dispatcher handed to foreign code; refuses calls that do not lower
/// the order.
struct Caller<'m, 'a> {
    machine: &'m LowMachine<'a>,
    name: &'m str,
    order: u32,
}

impl CallLow for Caller<'_, '_> {
    fn dispatch(&self, fid: u32, arg: LowValue, heap: LowHeap) -> ExecOutcome {
        let callee = self
            .machine
            .table
            .get(fid as usize)
            .ok_or(Failed::UnknownFid(fid))?;
        let o = self.machine.order(callee)?;
        if o >= self.order {
            return Err(stuck(format!(
                "`{}` (order {}) dispatched `{callee}` of order {o}",
                self.name, self.order
            )));
        }
        self.machine.call(callee, arg, heap)
    }
}

fn bind(scope: &mut Vec<(String, LowValue)>, p: &Pattern, v: LowValue) -> Result<(), Failed> {
    match (p, v) {
        (Pattern::Var(x), v) => scope.push((x.clone(), v)),
        (Pattern::Wild, _) => {}
        (Pattern::Tuple(ps), LowValue::Tuple(vs)) if ps.len() == vs.len() => {
            for (p, v) in ps.iter().zip(vs) {
                bind(scope, p, v)?;
            }
        }
        (p, v) => return Err(stuck(format!("pattern {p:?} does not match {v:?}"))),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffi::library_registry;
    use crate::syntax::parse_program;

    #[test]
    fn table_orders_definitions_first() {
        let p = parse_program(
            "foreign ext : U32 -> U32\nfun f (x : U32) -> U32 = x\nfun g (x : U32) -> U32 = f x",
        )
        .unwrap();
        let r = Registry::new();
        let al = Aliases::new();
        let m = LowMachine::new(&p, &r, &al);
        assert_eq!(m.table(), ["f", "g", "ext"]);
        assert_eq!(m.fid("ext"), Some(2));
    }

    #[test]
    fn dispatch_applies_defined_function() {
        let p = parse_program("fun add (x : U32, y : U32) -> U32 = x + y").unwrap();
        let r = library_registry();
        let al = Aliases::new();
        let m = LowMachine::new(&p, &r, &al);
        let heap = LowHeap::new(64);
        let arg = LowValue::Tuple(vec![LowValue::U32(3), LowValue::U32(4)]);
        let (v, h) = m.dispatch(0, arg.clone(), heap.clone()).unwrap();
        assert_eq!(v, LowValue::U32(7));
        assert_eq!(h, heap);
        assert_eq!(m.dispatch(999, arg, heap), Err(Failed::UnknownFid(999)));
    }
}
