//! Foreign-function registries for every layer, plus abstract types.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use thiserror::Error;

use crate::dynsem::{EvalError, Footprint, Store, TypingEnv, UAbs, UValue, VAbs, VValue};
use crate::lowmachine::{ExecOutcome, LowHeap, LowValue};
use crate::shallow::{SValue, ShallowError};
use crate::syntax::{Program, Subst, Type};

/// Calls back into the value semantics from a foreign function.
pub trait CallV {
    fn call_v(&self, f: &VValue, arg: VValue) -> Result<VValue, EvalError>;
}

/// Calls back into the update semantics from a foreign function.
pub trait CallU {
    fn call_u(&self, f: &UValue, arg: UValue, store: Store) -> Result<(UValue, Store), EvalError>;
}

/// Calls a function by identifier from machine code.
pub trait CallLow {
    fn dispatch(&self, fid: u32, arg: LowValue, heap: LowHeap) -> ExecOutcome;
}

/// Applies a shallow function value.
pub trait CallS {
    fn call_s(&self, f: &SValue, arg: SValue) -> Result<SValue, ShallowError>;
}

pub type ValueFn =
    Arc<dyn Fn(&dyn CallV, &[Type], VValue) -> Result<VValue, EvalError> + Send + Sync>;
pub type UpdateFn = Arc<
    dyn Fn(&dyn CallU, &[Type], Store, UValue) -> Result<(UValue, Store), EvalError> + Send + Sync,
>;
pub type LowFn = Arc<dyn Fn(&dyn CallLow, &[Type], LowHeap, LowValue) -> ExecOutcome + Send + Sync>;
pub type ShallowFn =
    Arc<dyn Fn(&dyn CallS, SValue) -> Result<SValue, ShallowError> + Send + Sync>;

/// One foreign function at all five layers. The value-semantics entry
/// serves both the monomorphic and the polymorphic layer.
#[derive(Clone)]
pub struct ForeignFn {
    pub name: String,
    pub tyvars: Vec<String>,
    pub arg: Type,
    pub ret: Type,
    /// Functions this entry is known to call; each must already be
    /// registered at a lower order.
    pub dispatches: Vec<String>,
    pub value: ValueFn,
    pub update: UpdateFn,
    pub low: LowFn,
    pub shallow: ShallowFn,
}

impl ForeignFn {
    pub fn fun_type(&self) -> Type {
        Type::fun(self.arg.clone(), self.ret.clone())
    }

    pub fn order(&self) -> u32 {
        self.fun_type().order()
    }

    pub fn instantiate(&self, targs: &[Type]) -> Type {
        let s: Subst = self.tyvars.iter().cloned().zip(targs.iter().cloned()).collect();
        self.fun_type().subst(&s)
    }
}

impl fmt::Debug for ForeignFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForeignFn")
            .field("name", &self.name)
            .field("tyvars", &self.tyvars)
            .field("type", &self.fun_type())
            .finish_non_exhaustive()
    }
}

/// Why a value failed a value-typing relation.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{clause}: {detail}")]
pub struct Reject {
    pub clause: &'static str,
    pub detail: String,
}

impl Reject {
    pub fn new(clause: &'static str, detail: impl Into<String>) -> Self {
        Reject {
            clause,
            detail: detail.into(),
        }
    }
}

/// Machine layout of an abstract type: a header region plus contiguous
/// elements of `elem_size` bytes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub header_bytes: u32,
    pub elem_size: u32,
}

/// User-supplied abstract type: value typing at both semantics, the
/// correspondence between them, generation and machine layout.
pub trait AbsTypeEntry: Send + Sync {
    fn tag(&self) -> &str;
    fn arity(&self) -> usize;
    fn vtyping_v(&self, env: &TypingEnv, v: &VAbs, args: &[Type], readonly: bool)
        -> Result<(), Reject>;
    fn vtyping_u(
        &self,
        env: &TypingEnv,
        u: &UAbs,
        store: &Store,
        args: &[Type],
        readonly: bool,
    ) -> Result<Footprint, Reject>;
    fn corr(
        &self,
        env: &TypingEnv,
        u: &UAbs,
        store: &Store,
        v: &VAbs,
        args: &[Type],
        readonly: bool,
    ) -> Result<Footprint, Reject>;
    fn layout(&self, args: &[Type]) -> Option<Layout>;
    /// A well-typed value allocated in `store`, with its type arguments.
    fn gen_u(&self, rng: &mut dyn RngCore, store: &mut Store, max_len: u32) -> (UAbs, Vec<Type>);
    fn gen_v(&self, rng: &mut dyn RngCore, max_len: u32) -> (VAbs, Vec<Type>);
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegisterError {
    #[error("`{0}` is already registered")]
    Duplicate(String),
    #[error("`{caller}` (order {caller_order}) dispatches `{callee}`, which is not registered")]
    UnknownDispatch {
        caller: String,
        caller_order: u32,
        callee: String,
    },
    #[error("`{caller}` (order {caller_order}) dispatches `{callee}` of order {callee_order}")]
    OrderViolation {
        caller: String,
        caller_order: u32,
        callee: String,
        callee_order: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("foreign function `{0}` has no registered implementation")]
    Missing(String),
    #[error("foreign function `{name}` is declared as {declared} but registered as {registered}")]
    Signature {
        name: String,
        declared: Type,
        registered: Type,
    },
    #[error("abstract type `{0}` has no registered implementation")]
    MissingType(String),
}

#[derive(Clone, Default)]
pub struct Registry {
    entries: BTreeMap<String, ForeignFn>,
    /// Functions defined in the language and made dispatchable, with order.
    declared: BTreeMap<String, u32>,
    abs_types: BTreeMap<String, Arc<dyn AbsTypeEntry>>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("entries", &self.entries.keys().collect::<Vec<_>>())
            .field("declared", &self.declared)
            .field("abs_types", &self.abs_types.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    fn order_of(&self, name: &str) -> Option<u32> {
        self.entries
            .get(name)
            .map(ForeignFn::order)
            .or_else(|| self.declared.get(name).copied())
    }

    /// Adds all layers of `entry` at once, after validating its order
    /// against the functions it dispatches.
    pub fn register(&mut self, entry: ForeignFn) -> Result<(), RegisterError> {
        if self.order_of(&entry.name).is_some() {
            return Err(RegisterError::Duplicate(entry.name));
        }
        let order = entry.order();
        for callee in &entry.dispatches {
            match self.order_of(callee) {
                None => {
                    return Err(RegisterError::UnknownDispatch {
                        caller: entry.name.clone(),
                        caller_order: order,
                        callee: callee.clone(),
                    })
                }
                Some(o) if o >= order => {
                    return Err(RegisterError::OrderViolation {
                        caller: entry.name.clone(),
                        caller_order: order,
                        callee: callee.clone(),
                        callee_order: o,
                    })
                }
                Some(_) => {}
            }
        }
        self.entries.insert(entry.name.clone(), entry);
        Ok(())
    }

    /// Records a function defined in the language as a dispatch target.
    pub fn declare_function(&mut self, name: &str, ty: &Type) -> Result<(), RegisterError> {
        if self.order_of(name).is_some() {
            return Err(RegisterError::Duplicate(name.to_string()));
        }
        self.declared.insert(name.to_string(), ty.order());
        Ok(())
    }

    pub fn register_abs_type(&mut self, entry: Arc<dyn AbsTypeEntry>) {
        self.abs_types.insert(entry.tag().to_string(), entry);
    }

    pub fn get(&self, name: &str) -> Option<&ForeignFn> {
        self.entries.get(name)
    }

    pub fn abs_type(&self, tag: &str) -> Option<&Arc<dyn AbsTypeEntry>> {
        self.abs_types.get(tag)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Replaces the entry for `name` through `f`; used to plant faults.
    pub fn map_entry(&mut self, name: &str, f: impl FnOnce(ForeignFn) -> ForeignFn) {
        if let Some(e) = self.entries.remove(name) {
            let e = f(e);
            self.entries.insert(name.to_string(), e);
        }
    }

    /// Checks every foreign declaration of `program` against the registry.
    /// `aliases` maps specialised names to a registered name and type
    /// arguments.
    pub fn link(
        &self,
        program: &Program,
        aliases: &BTreeMap<String, (String, Vec<Type>)>,
    ) -> Result<(), LinkError> {
        for t in &program.typedecls {
            if !self.abs_types.contains_key(&t.name) {
                return Err(LinkError::MissingType(t.name.clone()));
            }
        }
        for f in program.functions.iter().filter(|f| f.is_foreign()) {
            let declared = f.fun_type();
            let (entry, registered) = if let Some(e) = self.entries.get(&f.name) {
                let renaming: Subst = f
                    .tyvars
                    .iter()
                    .cloned()
                    .zip(e.tyvars.iter().map(|v| Type::Var(v.clone())))
                    .collect();
                if f.tyvars.len() != e.tyvars.len() {
                    return Err(LinkError::Signature {
                        name: f.name.clone(),
                        declared,
                        registered: e.fun_type(),
                    });
                }
                (e, (declared.subst(&renaming), e.fun_type()))
            } else if let Some((base, targs)) = aliases.get(&f.name) {
                let e = self
                    .entries
                    .get(base)
                    .ok_or_else(|| LinkError::Missing(base.clone()))?;
                (e, (declared.clone(), e.instantiate(targs)))
            } else {
                return Err(LinkError::Missing(f.name.clone()));
            };
            let (declared, registered) = registered;
            if declared != registered {
                return Err(LinkError::Signature {
                    name: entry.name.clone(),
                    declared,
                    registered,
                });
            }
        }
        Ok(())
    }
}
