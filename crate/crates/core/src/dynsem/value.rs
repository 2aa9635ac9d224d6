//! Runtime values of the value and update semantics.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::syntax::{Lit, Type};

/// Store locations. Opaque naturals; array elements occupy consecutive ids.
pub type LocId = u64;

/// Abstract values of the value semantics.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum VAbs {
    /// `VWA τ xs`: an array as an immutable list.
    Array { elem: Type, items: Arc<Vec<VValue>> },
}

impl VAbs {
    pub fn tag(&self) -> &'static str {
        match self {
            VAbs::Array { .. } => "Array",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum VValue {
    Unit,
    Bool(bool),
    U8(u8),
    U32(u32),
    Prod(Vec<VValue>),
    Fun(String, Vec<Type>),
    Abstract(VAbs),
}

impl VValue {
    pub fn array(elem: Type, items: Vec<VValue>) -> VValue {
        VValue::Abstract(VAbs::Array {
            elem,
            items: Arc::new(items),
        })
    }

    pub fn u32_array(items: &[u32]) -> VValue {
        VValue::array(Type::U32, items.iter().map(|&n| VValue::U32(n)).collect())
    }

    pub fn fun(name: &str) -> VValue {
        VValue::Fun(name.to_string(), vec![])
    }

    pub fn as_u32(&self) -> Option<u32> {
        match self {
            VValue::U32(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            VValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_array(&self) -> Option<(&Type, &Arc<Vec<VValue>>)> {
        match self {
            VValue::Abstract(VAbs::Array { elem, items }) => Some((elem, items)),
            _ => None,
        }
    }
}

impl From<Lit> for VValue {
    fn from(l: Lit) -> VValue {
        match l {
            Lit::Unit => VValue::Unit,
            Lit::Bool(b) => VValue::Bool(b),
            Lit::U8(n) => VValue::U8(n),
            Lit::U32(n) => VValue::U32(n),
        }
    }
}

impl fmt::Display for VValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VValue::Unit => write!(f, "()"),
            VValue::Bool(b) => write!(f, "{}", if *b { "True" } else { "False" }),
            VValue::U8(n) => write!(f, "{n}"),
            VValue::U32(n) => write!(f, "{n}"),
            VValue::Prod(vs) => {
                write!(f, "(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
            VValue::Fun(name, ts) => {
                write!(f, "{name}")?;
                if !ts.is_empty() {
                    let ts: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
                    write!(f, "[{}]", ts.join(", "))?;
                }
                Ok(())
            }
            VValue::Abstract(VAbs::Array { items, .. }) => {
                write!(f, "[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Abstract values of the update semantics.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum UAbs {
    /// `UWA τ len p`: element `i` lives at location `p + i`.
    Array { elem: Type, len: u32, base: LocId },
}

impl UAbs {
    pub fn tag(&self) -> &'static str {
        match self {
            UAbs::Array { .. } => "Array",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum UValue {
    Unit,
    Bool(bool),
    U8(u8),
    U32(u32),
    Prod(Vec<UValue>),
    Fun(String, Vec<Type>),
    Loc(LocId),
    Abstract(UAbs),
}

impl UValue {
    pub fn fun(name: &str) -> UValue {
        UValue::Fun(name.to_string(), vec![])
    }

    pub fn as_u32(&self) -> Option<u32> {
        match self {
            UValue::U32(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            UValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_loc(&self) -> Option<LocId> {
        match self {
            UValue::Loc(l) => Some(*l),
            _ => None,
        }
    }

    /// Converts a first-order, store-free value of the value semantics.
    pub fn from_prim(v: &VValue) -> Option<UValue> {
        Some(match v {
            VValue::Unit => UValue::Unit,
            VValue::Bool(b) => UValue::Bool(*b),
            VValue::U8(n) => UValue::U8(*n),
            VValue::U32(n) => UValue::U32(*n),
            VValue::Fun(f, ts) => UValue::Fun(f.clone(), ts.clone()),
            VValue::Prod(vs) => UValue::Prod(vs.iter().map(UValue::from_prim).collect::<Option<_>>()?),
            VValue::Abstract(_) => return None,
        })
    }

    /// Inverse of [`UValue::from_prim`].
    pub fn to_prim(&self) -> Option<VValue> {
        Some(match self {
            UValue::Unit => VValue::Unit,
            UValue::Bool(b) => VValue::Bool(*b),
            UValue::U8(n) => VValue::U8(*n),
            UValue::U32(n) => VValue::U32(*n),
            UValue::Fun(f, ts) => VValue::Fun(f.clone(), ts.clone()),
            UValue::Prod(us) => VValue::Prod(us.iter().map(UValue::to_prim).collect::<Option<_>>()?),
            UValue::Loc(_) | UValue::Abstract(_) => return None,
        })
    }
}

impl From<Lit> for UValue {
    fn from(l: Lit) -> UValue {
        match l {
            Lit::Unit => UValue::Unit,
            Lit::Bool(b) => UValue::Bool(b),
            Lit::U8(n) => UValue::U8(n),
            Lit::U32(n) => UValue::U32(n),
        }
    }
}

/// Read-only and writable locations reachable from a value.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Footprint {
    pub r: BTreeSet<LocId>,
    pub w: BTreeSet<LocId>,
}

impl Footprint {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty() && self.w.is_empty()
    }

    pub fn readonly(r: BTreeSet<LocId>) -> Self {
        Footprint { r, w: BTreeSet::new() }
    }

    pub fn writable(w: BTreeSet<LocId>) -> Self {
        Footprint { r: BTreeSet::new(), w }
    }

    pub fn all(&self) -> BTreeSet<LocId> {
        self.r.union(&self.w).copied().collect()
    }

    /// Combines the footprints of the components of a product. Components
    /// may share read-only locations; a writable location must not appear
    /// anywhere else.
    pub fn join(parts: impl IntoIterator<Item = Footprint>) -> Result<Footprint, LocId> {
        let mut acc = Footprint::empty();
        for p in parts {
            if let Some(&l) = p.w.iter().find(|l| acc.r.contains(l) || acc.w.contains(l)) {
                return Err(l);
            }
            if let Some(&l) = p.r.iter().find(|l| acc.w.contains(l)) {
                return Err(l);
            }
            acc.r.extend(p.r);
            acc.w.extend(p.w);
        }
        Ok(acc)
    }
}
