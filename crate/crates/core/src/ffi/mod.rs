//! Foreign functions and abstract types: registries for every layer, the
//! array library, the loop combinator and the abstract-type obligations.

use std::sync::Arc;

pub mod array;
pub mod obligations;
pub mod registry;
pub mod repeat;

pub use array::ArrayType;
pub use obligations::{check_abs_type_obligations, planted_mutant, ObligationReport, CLAUSES};
pub use registry::{
    AbsTypeEntry, CallLow, CallS, CallU, CallV, ForeignFn, Layout, LinkError, LowFn,
    RegisterError, Registry, Reject, ShallowFn, UpdateFn, ValueFn,
};

use crate::lowmachine::ops;
use crate::shallow;
use crate::syntax::{parse_type, Type};

fn sig(src: &str) -> (Type, Type) {
    match parse_type(src).expect("library signature parses") {
        Type::Fun(a, r) => (*a, *r),
        other => panic!("library signature {other} is not a function type"),
    }
}

/// One entry per library function, in an order that respects dispatch.
pub fn library_entries() -> Vec<ForeignFn> {
    let entry = |name: &str,
                 tyvars: &[&str],
                 ty: &str,
                 value: ValueFn,
                 update: UpdateFn,
                 low: LowFn,
                 shallow: ShallowFn| {
        let (arg, ret) = sig(ty);
        ForeignFn {
            name: name.to_string(),
            tyvars: tyvars.iter().map(|s| s.to_string()).collect(),
            arg,
            ret,
            dispatches: Vec::new(),
            value,
            update,
            low,
            shallow,
        }
    };
    vec![
        entry(
            "length",
            &["a"],
            "(Array a)! -> U32",
            Arc::new(array::length_v),
            Arc::new(array::length_u),
            Arc::new(ops::length_low),
            Arc::new(shallow::length_lib),
        ),
        entry(
            "get",
            &["a"],
            "((Array a)!, U32, a!) -> a!",
            Arc::new(array::get_v),
            Arc::new(array::get_u),
            Arc::new(ops::get_low),
            Arc::new(shallow::get_lib),
        ),
        entry(
            "put",
            &["a"],
            "(Array a, U32, a) -> Array a",
            Arc::new(array::put_v),
            Arc::new(array::put_u),
            Arc::new(ops::put_low),
            Arc::new(shallow::put_lib),
        ),
        entry(
            "fold",
            &["a", "b", "c"],
            "((a!, b, c!) -> b, b, (Array a)!, U32, U32, c!) -> b",
            Arc::new(array::fold_v),
            Arc::new(array::fold_u),
            Arc::new(ops::fold_low),
            Arc::new(shallow::fold_lib),
        ),
        entry(
            "mapaccum",
            &["a", "b", "c"],
            "((a, b, c!) -> (a, b), b, Array a, U32, U32, c!) -> (Array a, b)",
            Arc::new(array::mapaccum_v),
            Arc::new(array::mapaccum_u),
            Arc::new(ops::mapaccum_low),
            Arc::new(shallow::mapaccum_lib),
        ),
        entry(
            "repeat",
            &["a", "b"],
            "(U32, (a!, b!) -> Bool, (a, b!) -> a, a, b!) -> a",
            Arc::new(repeat::repeat_v),
            Arc::new(repeat::repeat_u),
            Arc::new(ops::repeat_low),
            Arc::new(shallow::repeat_lib),
        ),
    ]
}

/// The array library and loop at every layer, plus the `Array` type.
pub fn library_registry() -> Registry {
    let mut r = Registry::new();
    r.register_abs_type(Arc::new(ArrayType));
    for e in library_entries() {
        r.register(e).expect("library entries register cleanly");
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::dynsem::eval::Aliases;

    #[test]
    fn library_matches_corpus_declarations() {
        let r = library_registry();
        for p in [corpus::array_lib(), corpus::sum_program(), corpus::binary_search_program()] {
            r.link(&p, &Aliases::new()).unwrap();
        }
    }

    #[test]
    fn link_rejects_signature_mismatch() {
        let r = library_registry();
        let p = crate::syntax::parse_program("abstract Array a\nforeign length : (Array a) -> U32")
            .unwrap();
        assert!(matches!(
            r.link(&p, &Aliases::new()),
            Err(LinkError::Signature { .. })
        ));
        let p = crate::syntax::parse_program("foreign nope : U32 -> U32").unwrap();
        assert_eq!(r.link(&p, &Aliases::new()), Err(LinkError::Missing("nope".into())));
    }

    #[test]
    fn link_accepts_alpha_renamed_declaration() {
        let r = library_registry();
        let p = crate::syntax::parse_program("abstract Array e\nforeign length : (Array t)! -> U32")
            .unwrap();
        r.link(&p, &Aliases::new()).unwrap();
    }

    fn stub(name: &str, ty: &str, dispatches: &[&str]) -> ForeignFn {
        let mut e = library_entries().remove(0);
        let (arg, ret) = sig(ty);
        e.name = name.to_string();
        e.tyvars = Type::fun(arg.clone(), ret.clone()).free_vars();
        e.arg = arg;
        e.ret = ret;
        e.dispatches = dispatches.iter().map(|s| s.to_string()).collect();
        e
    }

    #[test]
    fn registration_enforces_order_and_uniqueness() {
        let mut r = Registry::new();
        let add_ty = Type::fun(Type::Prod(vec![Type::U32, Type::U32, Type::Unit]), Type::U32);
        let folder = "((U32, U32, Unit) -> U32, U32) -> U32";
        assert!(matches!(
            r.register(stub("fold2", folder, &["add"])),
            Err(RegisterError::UnknownDispatch { .. })
        ));
        r.declare_function("add", &add_ty).unwrap();
        r.register(stub("fold2", folder, &["add"])).unwrap();
        assert_eq!(
            r.register(stub("fold2", folder, &[])),
            Err(RegisterError::Duplicate("fold2".into()))
        );
        assert!(matches!(
            r.register(stub("peer", folder, &["fold2"])),
            Err(RegisterError::OrderViolation { .. })
        ));
        assert_eq!(r.get("fold2").unwrap().order(), 2);
    }
}
