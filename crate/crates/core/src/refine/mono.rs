//! Monomorphisation: every instantiation `(f, τs)` reachable from the entry
//! points becomes its own monomorphic function.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::dynsem::eval::Aliases;
use crate::dynsem::VValue;
use crate::syntax::{Expr, FunBody, FunDef, Program, Subst, Type};

/// `(name, type arguments)` to the monomorphic name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NameMap {
    map: BTreeMap<(String, Vec<Type>), String>,
}

impl NameMap {
    /// Monomorphic name of an instance; uninstantiated names map to
    /// themselves unless overridden.
    pub fn get(&self, name: &str, targs: &[Type]) -> Option<String> {
        match self.map.get(&(name.to_string(), targs.to_vec())) {
            Some(m) => Some(m.clone()),
            None if targs.is_empty() => Some(name.to_string()),
            None => None,
        }
    }

    pub fn insert(&mut self, name: &str, targs: Vec<Type>, mono: String) {
        self.map.insert((name.to_string(), targs), mono);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, Vec<Type>), &String)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MonoError {
    #[error("unknown function `{0}`")]
    Unknown(String),
    #[error("`{name}` expects {expected} type arguments, got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("no monomorphic name for `{name}` at {targs:?}")]
    Unmapped { name: String, targs: Vec<Type> },
    #[error("`{0}` is polymorphic and cannot be an entry point")]
    PolymorphicRoot(String),
}

/// A monomorphised program with the map that produced it. `aliases` sends
/// each monomorphic foreign name to its registered polymorphic entry.
#[derive(Clone, Debug)]
pub struct Mono {
    pub program: Program,
    pub names: NameMap,
    pub aliases: Aliases,
}

fn fresh_name(base: &str, taken: &mut BTreeSet<String>) -> String {
    let mut k = 0;
    loop {
        let n = format!("{base}__{k}");
        if taken.insert(n.clone()) {
            return n;
        }
        k += 1;
    }
}

/// Monomorphises `program` starting from `roots`, or from every
/// monomorphic defined function when `roots` is empty.
pub fn monomorphise(program: &Program, roots: &[&str]) -> Result<Mono, MonoError> {
    let mut taken: BTreeSet<String> = program.functions.iter().map(|f| f.name.clone()).collect();
    let mut names = NameMap::default();
    let mut queue: VecDeque<(String, Vec<Type>)> = VecDeque::new();
    let roots: Vec<String> = if roots.is_empty() {
        program.entry_points().map(|f| f.name.clone()).collect()
    } else {
        roots.iter().map(|s| s.to_string()).collect()
    };
    for r in roots {
        let f = program.function(&r).ok_or_else(|| MonoError::Unknown(r.clone()))?;
        if !f.tyvars.is_empty() {
            return Err(MonoError::PolymorphicRoot(r));
        }
        if names.map.insert((r.clone(), vec![]), r.clone()).is_none() {
            queue.push_back((r, vec![]));
        }
    }
    let mut out: BTreeMap<String, FunDef> = BTreeMap::new();
    let mut aliases = Aliases::new();
    while let Some((name, targs)) = queue.pop_front() {
        let f = program
            .function(&name)
            .ok_or_else(|| MonoError::Unknown(name.clone()))?;
        let mono = names.get(&name, &targs).expect("queued");
        let s: Subst = f.tyvars.iter().cloned().zip(targs.iter().cloned()).collect();
        let body = match &f.body {
            FunBody::Foreign => {
                if !targs.is_empty() {
                    aliases.insert(mono.clone(), (name.clone(), targs.clone()));
                }
                FunBody::Foreign
            }
            FunBody::Expr(e) => {
                let e = e.subst_types(&s);
                let mut refs = Vec::new();
                collect_instances(&e, &mut refs);
                for (g, ts) in refs {
                    let gd = program.function(&g).ok_or_else(|| MonoError::Unknown(g.clone()))?;
                    if gd.tyvars.len() != ts.len() {
                        return Err(MonoError::Arity {
                            name: g,
                            expected: gd.tyvars.len(),
                            got: ts.len(),
                        });
                    }
                    if let Entry::Vacant(slot) = names.map.entry((g.clone(), ts.clone())) {
                        slot.insert(if ts.is_empty() {
                            g.clone()
                        } else {
                            fresh_name(&g, &mut taken)
                        });
                        queue.push_back((g, ts));
                    }
                }
                FunBody::Expr(mono_expr(&names, &e)?)
            }
        };
        out.insert(
            mono.clone(),
            FunDef {
                name: mono,
                tyvars: vec![],
                param: f.param.clone(),
                arg_ty: f.arg_ty.subst(&s),
                ret_ty: f.ret_ty.subst(&s),
                body,
            },
        );
    }
    // keep program order: each source function followed by its instances
    let mut functions = Vec::new();
    for f in &program.functions {
        for ((src, _), m) in names.iter() {
            if *src == f.name {
                if let Some(d) = out.remove(m) {
                    functions.push(d);
                }
            }
        }
    }
    Ok(Mono {
        program: Program {
            typedecls: program.typedecls.clone(),
            functions,
        },
        names,
        aliases,
    })
}

fn collect_instances(e: &Expr, out: &mut Vec<(String, Vec<Type>)>) {
    match e {
        Expr::Lit(_) | Expr::Var(_) => {}
        Expr::Fun(f, ts) => out.push((f.clone(), ts.clone())),
        Expr::App(f, ts, a) => {
            out.push((f.clone(), ts.clone()));
            collect_instances(a, out);
        }
        Expr::Let(_, b, k) | Expr::LetBang { bound: b, body: k, .. } => {
            collect_instances(b, out);
            collect_instances(k, out);
        }
        Expr::If(c, t, f) => {
            collect_instances(c, out);
            collect_instances(t, out);
            collect_instances(f, out);
        }
        Expr::PrimOp(_, l, r) => {
            collect_instances(l, out);
            collect_instances(r, out);
        }
        Expr::Tuple(es) => es.iter().for_each(|e| collect_instances(e, out)),
    }
}

/// Rewrites every instantiated reference through `names`.
pub fn mono_expr(names: &NameMap, e: &Expr) -> Result<Expr, MonoError> {
    let name = |f: &str, ts: &[Type]| {
        names
            .get(f, ts)
            .ok_or_else(|| MonoError::Unmapped {
                name: f.to_string(),
                targs: ts.to_vec(),
            })
    };
    let go = |e: &Expr| mono_expr(names, e).map(Box::new);
    Ok(match e {
        Expr::Lit(_) | Expr::Var(_) => e.clone(),
        Expr::Fun(f, ts) => Expr::Fun(name(f, ts)?, vec![]),
        Expr::App(f, ts, a) => Expr::App(name(f, ts)?, vec![], go(a)?),
        Expr::Let(p, b, k) => Expr::Let(p.clone(), go(b)?, go(k)?),
        Expr::LetBang {
            vars,
            pat,
            bound,
            body,
        } => Expr::LetBang {
            vars: vars.clone(),
            pat: pat.clone(),
            bound: go(bound)?,
            body: go(body)?,
        },
        Expr::If(c, t, f) => Expr::If(go(c)?, go(t)?, go(f)?),
        Expr::PrimOp(op, l, r) => Expr::PrimOp(*op, go(l)?, go(r)?),
        Expr::Tuple(es) => Expr::Tuple(
            es.iter()
                .map(|e| mono_expr(names, e))
                .collect::<Result<_, _>>()?,
        ),
    })
}

/// Renames function values; data is unchanged.
pub fn mono_value(names: &NameMap, v: &VValue) -> Result<VValue, MonoError> {
    Ok(match v {
        VValue::Fun(f, ts) => VValue::Fun(
            names
                .get(f, ts)
                .ok_or_else(|| MonoError::Unmapped {
                    name: f.clone(),
                    targs: ts.clone(),
                })?,
            vec![],
        ),
        VValue::Prod(vs) => VValue::Prod(
            vs.iter()
                .map(|v| mono_value(names, v))
                .collect::<Result<_, _>>()?,
        ),
        other => other.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::typecheck::typecheck_program;

    #[test]
    fn sum_instantiates_fold_once() {
        let m = monomorphise(&corpus::sum_program(), &[]).unwrap();
        assert!(m.program.functions.iter().all(|f| f.tyvars.is_empty()));
        let folds: Vec<_> = m.aliases.values().filter(|(b, _)| b == "fold").collect();
        assert_eq!(folds.len(), 1);
        typecheck_program(&m.program).unwrap();
    }

    #[test]
    fn mono_programs_have_no_type_arguments() {
        for p in [corpus::sum_program(), corpus::binary_search_program(), corpus::libtest_program()] {
            let m = monomorphise(&p, &[]).unwrap();
            for f in &m.program.functions {
                if let Some(b) = f.body() {
                    let mut refs = Vec::new();
                    collect_instances(b, &mut refs);
                    assert!(refs.iter().all(|(_, ts)| ts.is_empty()), "{}", f.name);
                }
            }
            typecheck_program(&m.program).unwrap();
        }
    }

    #[test]
    fn distinct_instances_get_distinct_names() {
        let m = monomorphise(&corpus::libtest_program(), &[]).unwrap();
        let gets: BTreeSet<_> = m
            .names
            .iter()
            .filter(|((f, _), _)| f == "get")
            .map(|(_, m)| m.clone())
            .collect();
        assert_eq!(gets.len(), 2);
    }

    #[test]
    fn unmapped_instance_is_an_error() {
        let e = Expr::App("fold".into(), vec![Type::U8], Box::new(Expr::u32(0)));
        assert!(matches!(
            mono_expr(&NameMap::default(), &e),
            Err(MonoError::Unmapped { .. })
        ));
    }

    #[test]
    fn mono_value_renames_functions() {
        let mut n = NameMap::default();
        n.insert("id", vec![Type::U32], "id__0".into());
        let v = VValue::Prod(vec![VValue::U32(1), VValue::Fun("id".into(), vec![Type::U32])]);
        assert_eq!(
            mono_value(&n, &v).unwrap(),
            VValue::Prod(vec![VValue::U32(1), VValue::fun("id__0")])
        );
    }
}
