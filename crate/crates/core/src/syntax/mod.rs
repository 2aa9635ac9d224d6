//! Abstract syntax for the mini language.
//!
//! The same [`Program`] representation serves both the polymorphic deep
//! embedding (functions carry type-variable lists, calls carry type
//! arguments) and the monomorphic one produced by [`crate::refine::mono`]
//! (no type variables anywhere, no type arguments on calls).

mod parse;
mod pretty;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse_expr, parse_program, parse_type, ParseError};
pub use pretty::{pretty_print, print_expr, print_type};

/// Types of the language.
///
/// `Bang` only survives around type variables: [`Type::bang`] pushes the
/// operator through every concrete constructor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Type {
    Unit,
    Bool,
    U8,
    U32,
    Prod(Vec<Type>),
    Fun(Box<Type>, Box<Type>),
    Var(String),
    Abs {
        name: String,
        args: Vec<Type>,
        readonly: bool,
    },
    Bang(Box<Type>),
}

impl Type {
    pub fn fun(arg: Type, ret: Type) -> Type {
        Type::Fun(Box::new(arg), Box::new(ret))
    }

    pub fn var(name: &str) -> Type {
        Type::Var(name.to_string())
    }

    /// `Array τ`, writable.
    pub fn array(elem: Type) -> Type {
        Type::Abs {
            name: "Array".into(),
            args: vec![elem],
            readonly: false,
        }
    }

    /// `(Array τ)!`.
    pub fn array_ro(elem: Type) -> Type {
        Type::array(elem).bang()
    }

    pub fn is_prim(&self) -> bool {
        matches!(self, Type::Unit | Type::Bool | Type::U8 | Type::U32)
    }

    /// The `!` operator: abstract types become read-only and their
    /// parameters are banged recursively. Idempotent.
    pub fn bang(&self) -> Type {
        match self {
            Type::Unit | Type::Bool | Type::U8 | Type::U32 => self.clone(),
            Type::Prod(ts) => Type::Prod(ts.iter().map(Type::bang).collect()),
            // function values carry no store references
            Type::Fun(..) => self.clone(),
            Type::Var(_) => Type::Bang(Box::new(self.clone())),
            Type::Abs { name, args, .. } => Type::Abs {
                name: name.clone(),
                args: args.iter().map(Type::bang).collect(),
                readonly: true,
            },
            Type::Bang(t) => t.bang(),
        }
    }

    /// Type variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Type::Unit | Type::Bool | Type::U8 | Type::U32 => {}
            Type::Prod(ts) => ts.iter().for_each(|t| t.collect_vars(out)),
            Type::Fun(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Type::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Type::Abs { args, .. } => args.iter().for_each(|t| t.collect_vars(out)),
            Type::Bang(t) => t.collect_vars(out),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Capture-free substitution; re-normalises `!` around substituted
    /// variables. Variables missing from `subst` are left in place.
    pub fn subst(&self, subst: &Subst) -> Type {
        match self {
            Type::Unit | Type::Bool | Type::U8 | Type::U32 => self.clone(),
            Type::Prod(ts) => Type::Prod(ts.iter().map(|t| t.subst(subst)).collect()),
            Type::Fun(a, b) => Type::fun(a.subst(subst), b.subst(subst)),
            Type::Var(v) => subst.get(v).cloned().unwrap_or_else(|| self.clone()),
            Type::Abs {
                name,
                args,
                readonly,
            } => {
                let t = Type::Abs {
                    name: name.clone(),
                    args: args.iter().map(|t| t.subst(subst)).collect(),
                    readonly: false,
                };
                if *readonly {
                    t.bang()
                } else {
                    t
                }
            }
            Type::Bang(t) => t.subst(subst).bang(),
        }
    }

    /// Element type and read-only flag of an `Array` type.
    pub fn as_array(&self) -> Option<(&Type, bool)> {
        match self {
            Type::Abs {
                name,
                args,
                readonly,
            } if name == "Array" && args.len() == 1 => Some((&args[0], *readonly)),
            _ => None,
        }
    }

    /// Higher-order rank: data has order 0, a function has order one more
    /// than the highest-order function it accepts.
    pub fn order(&self) -> u32 {
        match self {
            Type::Fun(a, b) => (a.order() + 1).max(b.order()),
            Type::Prod(ts) => ts.iter().map(Type::order).max().unwrap_or(0),
            Type::Abs { args, .. } => args.iter().map(Type::order).max().unwrap_or(0),
            Type::Bang(t) => t.order(),
            _ => 0,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_type(self))
    }
}

pub type Subst = BTreeMap<String, Type>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstantiateError {
    #[error("expected {expected} type arguments, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("type argument {0} is not closed")]
    OpenArgument(Type),
    #[error("type variable `{0}` left uninstantiated")]
    Uninstantiated(String),
}

/// A type together with the variables it quantifies over, in binding order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeScheme {
    pub vars: Vec<String>,
    pub ty: Type,
}

impl TypeScheme {
    pub fn instantiate(&self, args: &[Type]) -> Result<Type, InstantiateError> {
        if args.len() != self.vars.len() {
            return Err(InstantiateError::Arity {
                expected: self.vars.len(),
                got: args.len(),
            });
        }
        if let Some(open) = args.iter().find(|a| !a.is_closed()) {
            return Err(InstantiateError::OpenArgument(open.clone()));
        }
        let subst: Subst = self.vars.iter().cloned().zip(args.iter().cloned()).collect();
        let out = self.ty.subst(&subst);
        match out.free_vars().into_iter().next() {
            Some(v) => Err(InstantiateError::Uninstantiated(v)),
            None => Ok(out),
        }
    }
}

/// Instantiates the free variables of `scheme`, taken in order of first
/// occurrence, with `args`.
pub fn instantiate_type(scheme: &Type, args: &[Type]) -> Result<Type, InstantiateError> {
    TypeScheme {
        vars: scheme.free_vars(),
        ty: scheme.clone(),
    }
    .instantiate(args)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lit {
    Unit,
    Bool(bool),
    U8(u8),
    U32(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub const ALL: [BinOp; 12] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Lt,
        BinOp::Gt,
        BinOp::Le,
        BinOp::Ge,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::And,
        BinOp::Or,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "/=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge | BinOp::Eq | BinOp::Ne => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div => 5,
        }
    }

    pub fn is_arith(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div)
    }

    pub fn is_logic(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pattern {
    Var(String),
    Wild,
    Tuple(Vec<Pattern>),
}

impl Pattern {
    pub fn var(name: &str) -> Pattern {
        Pattern::Var(name.to_string())
    }

    pub fn tuple<'a>(names: impl IntoIterator<Item = &'a str>) -> Pattern {
        Pattern::Tuple(names.into_iter().map(Pattern::var).collect())
    }

    /// Bound names, left to right.
    pub fn binders(&self) -> Vec<&str> {
        let mut out = Vec::new();
        fn go<'a>(p: &'a Pattern, out: &mut Vec<&'a str>) {
            match p {
                Pattern::Var(v) => out.push(v),
                Pattern::Wild => {}
                Pattern::Tuple(ps) => ps.iter().for_each(|p| go(p, out)),
            }
        }
        go(self, &mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Lit(Lit),
    Var(String),
    /// A top-level function used as a value.
    Fun(String, Vec<Type>),
    Let(Pattern, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    PrimOp(BinOp, Box<Expr>, Box<Expr>),
    Tuple(Vec<Expr>),
    /// Call of a top-level function; there are no closures.
    App(String, Vec<Type>, Box<Expr>),
    /// `let! (vars) pat = bound in body`: `vars` are read-only inside `bound`.
    LetBang {
        vars: Vec<String>,
        pat: Pattern,
        bound: Box<Expr>,
        body: Box<Expr>,
    },
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn u32(n: u32) -> Expr {
        Expr::Lit(Lit::U32(n))
    }

    pub fn app(f: &str, targs: Vec<Type>, arg: Expr) -> Expr {
        Expr::App(f.to_string(), targs, Box::new(arg))
    }

    pub fn let_(pat: Pattern, bound: Expr, body: Expr) -> Expr {
        Expr::Let(pat, Box::new(bound), Box::new(body))
    }

    pub fn if_(c: Expr, t: Expr, e: Expr) -> Expr {
        Expr::If(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn binop(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::PrimOp(op, Box::new(l), Box::new(r))
    }

    /// Nesting depth. A `let` spine counts as a block: each binding
    /// contributes one level for its bound expression, the continuation
    /// does not deepen.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Lit(_) | Expr::Var(_) | Expr::Fun(..) => 1,
            Expr::Let(_, b, k) => (1 + b.depth()).max(k.depth()),
            Expr::LetBang { bound, body, .. } => (1 + bound.depth()).max(body.depth()),
            Expr::If(c, t, e) => 1 + c.depth().max(t.depth()).max(e.depth()),
            Expr::PrimOp(_, l, r) => 1 + l.depth().max(r.depth()),
            Expr::Tuple(es) => 1 + es.iter().map(Expr::depth).max().unwrap_or(0),
            Expr::App(_, _, a) => 1 + a.depth(),
        }
    }

    /// Applies a type substitution to every type argument.
    pub fn subst_types(&self, s: &Subst) -> Expr {
        let go = |e: &Expr| Box::new(e.subst_types(s));
        match self {
            Expr::Lit(_) | Expr::Var(_) => self.clone(),
            Expr::Fun(f, ts) => Expr::Fun(f.clone(), ts.iter().map(|t| t.subst(s)).collect()),
            Expr::Let(p, b, k) => Expr::Let(p.clone(), go(b), go(k)),
            Expr::If(c, t, e) => Expr::If(go(c), go(t), go(e)),
            Expr::PrimOp(op, l, r) => Expr::PrimOp(*op, go(l), go(r)),
            Expr::Tuple(es) => Expr::Tuple(es.iter().map(|e| e.subst_types(s)).collect()),
            Expr::App(f, ts, a) => {
                Expr::App(f.clone(), ts.iter().map(|t| t.subst(s)).collect(), go(a))
            }
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
        }
    }

    /// Names of top-level functions referenced (called or used as values).
    pub fn referenced_functions(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Lit(_) | Expr::Var(_) => {}
            Expr::Fun(f, _) => {
                out.insert(f.clone());
            }
            Expr::App(f, _, a) => {
                out.insert(f.clone());
                a.referenced_functions(out);
            }
            Expr::Let(_, b, k) => {
                b.referenced_functions(out);
                k.referenced_functions(out);
            }
            Expr::LetBang { bound, body, .. } => {
                bound.referenced_functions(out);
                body.referenced_functions(out);
            }
            Expr::If(c, t, e) => {
                c.referenced_functions(out);
                t.referenced_functions(out);
                e.referenced_functions(out);
            }
            Expr::PrimOp(_, l, r) => {
                l.referenced_functions(out);
                r.referenced_functions(out);
            }
            Expr::Tuple(es) => es.iter().for_each(|e| e.referenced_functions(out)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_expr(self))
    }
}

/// `abstract Name a b ...`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub params: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FunBody {
    Expr(Expr),
    /// Semantics supplied by the foreign-function registries.
    Foreign,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunDef {
    pub name: String,
    pub tyvars: Vec<String>,
    /// Always [`Pattern::Wild`] for foreign declarations.
    pub param: Pattern,
    pub arg_ty: Type,
    pub ret_ty: Type,
    pub body: FunBody,
}

impl FunDef {
    pub fn is_foreign(&self) -> bool {
        matches!(self.body, FunBody::Foreign)
    }

    pub fn fun_type(&self) -> Type {
        Type::fun(self.arg_ty.clone(), self.ret_ty.clone())
    }

    pub fn scheme(&self) -> TypeScheme {
        TypeScheme {
            vars: self.tyvars.clone(),
            ty: self.fun_type(),
        }
    }

    pub fn body(&self) -> Option<&Expr> {
        match &self.body {
            FunBody::Expr(e) => Some(e),
            FunBody::Foreign => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub typedecls: Vec<TypeDecl>,
    pub functions: Vec<FunDef>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn typedecl(&self, name: &str) -> Option<&TypeDecl> {
        self.typedecls.iter().find(|t| t.name == name)
    }

    /// Monomorphic functions with bodies: the roots a caller may invoke
    /// directly.
    pub fn entry_points(&self) -> impl Iterator<Item = &FunDef> {
        self.functions
            .iter()
            .filter(|f| !f.is_foreign() && f.tyvars.is_empty())
    }

    /// The last monomorphic function with a body, if any.
    pub fn default_entry(&self) -> Option<&FunDef> {
        self.entry_points().last()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_type() -> impl Strategy<Value = Type> {
        let leaf = prop_oneof![
            Just(Type::Unit),
            Just(Type::Bool),
            Just(Type::U8),
            Just(Type::U32),
            prop_oneof![Just("a"), Just("b")].prop_map(Type::var),
        ];
        leaf.prop_recursive(5, 32, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(Type::Prod),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Type::fun(a, b)),
                (inner.clone(), any::<bool>()).prop_map(|(t, ro)| {
                    let a = Type::array(t);
                    if ro {
                        a.bang()
                    } else {
                        a
                    }
                }),
                inner.prop_map(|t| t.bang()),
            ]
        })
    }

    fn arb_closed() -> impl Strategy<Value = Type> {
        arb_type().prop_map(|t| {
            let s: Subst = [("a".to_string(), Type::U32), ("b".to_string(), Type::array(Type::U8))]
                .into_iter()
                .collect();
            t.subst(&s)
        })
    }

    #[test]
    fn instantiate_examples() {
        let f = Type::fun(Type::var("a"), Type::var("a"));
        assert_eq!(
            instantiate_type(&f, &[Type::U32]).unwrap(),
            Type::fun(Type::U32, Type::U32)
        );
        let arr = Type::array(Type::var("a"));
        assert_eq!(
            instantiate_type(&arr, &[Type::U32]).unwrap(),
            Type::array(Type::U32)
        );
        assert_eq!(
            instantiate_type(&Type::var("a"), &[]),
            Err(InstantiateError::Arity {
                expected: 1,
                got: 0
            })
        );
    }

    #[test]
    fn instantiate_rejects_open_args_and_leftover_vars() {
        let scheme = TypeScheme {
            vars: vec!["a".into()],
            ty: Type::Prod(vec![Type::var("a"), Type::var("b")]),
        };
        assert_eq!(
            scheme.instantiate(&[Type::U32]),
            Err(InstantiateError::Uninstantiated("b".into()))
        );
        assert!(matches!(
            scheme.instantiate(&[Type::var("c")]),
            Err(InstantiateError::OpenArgument(_))
        ));
    }

    #[test]
    fn bang_of_substituted_var_normalises() {
        let t = Type::var("a").bang();
        assert_eq!(t, Type::Bang(Box::new(Type::var("a"))));
        let s: Subst = [("a".to_string(), Type::array(Type::U32))].into_iter().collect();
        assert_eq!(t.subst(&s), Type::array_ro(Type::U32));
    }

    #[test]
    fn order_of_library_signatures() {
        let body = Type::fun(Type::Prod(vec![Type::U32, Type::U32]), Type::U32);
        assert_eq!(body.order(), 1);
        let fold = Type::fun(Type::Prod(vec![body, Type::U32]), Type::U32);
        assert_eq!(fold.order(), 2);
    }

    proptest! {
        #[test]
        fn bang_is_idempotent(t in arb_type()) {
            prop_assert_eq!(t.bang().bang(), t.bang());
        }

        #[test]
        fn instantiate_is_compositional_on_products(ts in prop::collection::vec(arb_type(), 2..4)) {
            let args = vec![Type::U32, Type::array(Type::U8)];
            let scheme_vars = vec!["a".to_string(), "b".to_string()];
            let inst = |t: &Type| TypeScheme { vars: scheme_vars.clone(), ty: t.clone() }.instantiate(&args).unwrap();
            let whole = inst(&Type::Prod(ts.clone()));
            let parts = Type::Prod(ts.iter().map(inst).collect());
            prop_assert_eq!(whole, parts);
        }

        #[test]
        fn substitution_leaves_no_vars(t in arb_closed()) {
            prop_assert!(t.is_closed());
        }
    }
}
