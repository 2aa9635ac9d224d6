//! Canonical source printer. Output re-parses to the same AST.

use std::fmt::Write as _;

use super::{BinOp, Expr, FunBody, FunDef, Lit, Pattern, Program, Type};

pub fn print_type(t: &Type) -> String {
    ty_arrow(t)
}

fn ty_arrow(t: &Type) -> String {
    match t {
        Type::Fun(a, b) => format!("{} -> {}", ty_postfix(a), ty_arrow(b)),
        _ => ty_postfix(t),
    }
}

fn ty_postfix(t: &Type) -> String {
    match t {
        Type::Abs {
            name,
            args,
            readonly: true,
        } => {
            if args.is_empty() {
                format!("{name}!")
            } else {
                let plain: Vec<Type> = args.iter().map(unbang).collect();
                format!("({})!", ty_app(name, &plain))
            }
        }
        Type::Bang(inner) => format!("{}!", ty_atom(inner)),
        Type::Abs {
            name,
            args,
            readonly: false,
        } if !args.is_empty() => ty_app(name, args),
        _ => ty_atom(t),
    }
}

/// Inverse of `!` on bang-normal types, so that printing `(A τ̄)!` and
/// re-parsing reproduces the banged arguments exactly once.
fn unbang(t: &Type) -> Type {
    match t {
        Type::Bang(inner) => unbang(inner),
        Type::Prod(ts) => Type::Prod(ts.iter().map(unbang).collect()),
        Type::Abs { name, args, .. } => Type::Abs {
            name: name.clone(),
            args: args.iter().map(unbang).collect(),
            readonly: false,
        },
        _ => t.clone(),
    }
}

fn ty_app(name: &str, args: &[Type]) -> String {
    let mut s = name.to_string();
    for a in args {
        s.push(' ');
        s.push_str(&ty_atom(a));
    }
    s
}

fn ty_atom(t: &Type) -> String {
    match t {
        Type::Unit => "Unit".into(),
        Type::Bool => "Bool".into(),
        Type::U8 => "U8".into(),
        Type::U32 => "U32".into(),
        Type::Var(v) => v.clone(),
        Type::Prod(ts) => format!(
            "({})",
            ts.iter().map(ty_arrow).collect::<Vec<_>>().join(", ")
        ),
        Type::Abs {
            name,
            args,
            readonly: false,
        } if args.is_empty() => name.clone(),
        _ => format!("({})", ty_arrow(t)),
    }
}

fn print_pattern(p: &Pattern) -> String {
    match p {
        Pattern::Var(v) => v.clone(),
        Pattern::Wild => "_".into(),
        Pattern::Tuple(ps) => format!(
            "({})",
            ps.iter().map(print_pattern).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn print_lit(l: &Lit) -> String {
    match l {
        Lit::Unit => "()".into(),
        Lit::Bool(true) => "True".into(),
        Lit::Bool(false) => "False".into(),
        Lit::U8(n) => n.to_string(),
        Lit::U32(n) => n.to_string(),
    }
}

fn type_args(ts: &[Type]) -> String {
    if ts.is_empty() {
        String::new()
    } else {
        format!(
            "[{}]",
            ts.iter().map(print_type).collect::<Vec<_>>().join(", ")
        )
    }
}

const PREC_APP: u8 = 6;
const PREC_ATOM: u8 = 7;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Let(..) | Expr::LetBang { .. } | Expr::If(..) => 0,
        Expr::PrimOp(op, ..) => op.precedence(),
        Expr::App(..) => PREC_APP,
        _ => PREC_ATOM,
    }
}

fn is_block(e: &Expr) -> bool {
    prec(e) == 0
}

/// Prints `e` on one line where possible; `let` and `if` forms break
/// across lines at `indent`.
fn expr_at(e: &Expr, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    match e {
        Expr::Let(p, b, k) => {
            let _ = write!(out, "let {} = ", print_pattern(p));
            bound(b, indent, out);
            let _ = write!(out, " in\n{pad}");
            expr_at(k, indent, out);
        }
        Expr::LetBang {
            vars,
            pat,
            bound: b,
            body,
        } => {
            let _ = write!(out, "let! ({}) {} = ", vars.join(" "), print_pattern(pat));
            bound(b, indent, out);
            let _ = write!(out, " in\n{pad}");
            expr_at(body, indent, out);
        }
        Expr::If(c, t, f) => {
            out.push_str("if ");
            operand(c, 1, indent, out);
            if is_block(t) || is_block(f) {
                let inner = indent + 2;
                let ipad = " ".repeat(inner);
                let _ = write!(out, "\n{ipad}then ");
                expr_at(t, inner + 5, out);
                let _ = write!(out, "\n{ipad}else ");
                expr_at(f, inner + 5, out);
            } else {
                out.push_str(" then ");
                expr_at(t, indent, out);
                out.push_str(" else ");
                expr_at(f, indent, out);
            }
        }
        _ => operand(e, 1, indent, out),
    }
}

fn bound(b: &Expr, indent: usize, out: &mut String) {
    if is_block(b) {
        let inner = indent + 2;
        let _ = write!(out, "(\n{}", " ".repeat(inner));
        expr_at(b, inner, out);
        let _ = write!(out, "\n{})", " ".repeat(indent));
    } else {
        expr_at(b, indent, out);
    }
}

/// Prints `e` in a position that requires precedence at least `min`.
fn operand(e: &Expr, min: u8, indent: usize, out: &mut String) {
    if prec(e) < min {
        out.push('(');
        expr_at(e, indent + 1, out);
        out.push(')');
        return;
    }
    match e {
        Expr::Lit(l) => out.push_str(&print_lit(l)),
        Expr::Var(v) => out.push_str(v),
        Expr::Fun(f, ts) => {
            out.push_str(f);
            out.push_str(&type_args(ts));
        }
        Expr::PrimOp(op, l, r) => {
            let p = op.precedence();
            let nonassoc = p == BinOp::Lt.precedence();
            operand(l, if nonassoc { p + 1 } else { p }, indent, out);
            let _ = write!(out, " {} ", op.symbol());
            operand(r, p + 1, indent, out);
        }
        Expr::App(f, ts, a) => {
            let _ = write!(out, "{f}{} ", type_args(ts));
            operand(a, PREC_ATOM, indent, out);
        }
        Expr::Tuple(es) => {
            out.push('(');
            for (i, x) in es.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr_at(x, indent + 1, out);
            }
            out.push(')');
        }
        Expr::Let(..) | Expr::LetBang { .. } | Expr::If(..) => expr_at(e, indent, out),
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr_at(e, 0, &mut s);
    s
}

fn params(f: &FunDef) -> String {
    match (&f.param, &f.arg_ty) {
        (Pattern::Wild, Type::Unit) => "()".into(),
        (Pattern::Tuple(ps), Type::Prod(ts)) if ps.len() == ts.len() => format!(
            "({})",
            ps.iter()
                .zip(ts)
                .map(|(p, t)| format!("{} : {}", print_pattern(p), print_type(t)))
                .collect::<Vec<_>>()
                .join(", ")
        ),
        (p, t) => format!("({} : {})", print_pattern(p), print_type(t)),
    }
}

fn print_fundef(f: &FunDef, out: &mut String) {
    let mut tyvars = String::new();
    for v in &f.tyvars {
        tyvars.push(' ');
        tyvars.push_str(v);
    }
    match &f.body {
        FunBody::Foreign => {
            let fty = f.fun_type();
            let shown = if fty.free_vars() == f.tyvars {
                String::new()
            } else {
                tyvars
            };
            let _ = writeln!(out, "foreign {}{shown} : {}", f.name, print_type(&fty));
        }
        FunBody::Expr(body) => {
            let _ = write!(
                out,
                "fun {}{tyvars} {} -> {} =",
                f.name,
                params(f),
                print_type(&f.ret_ty)
            );
            if is_block(body) {
                out.push_str("\n  ");
                expr_at(body, 2, out);
            } else {
                out.push(' ');
                expr_at(body, 2, out);
            }
            out.push('\n');
        }
    }
}

/// Renders a program in canonical concrete syntax.
pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    for t in &p.typedecls {
        out.push_str("abstract ");
        out.push_str(&t.name);
        for v in &t.params {
            out.push(' ');
            out.push_str(v);
        }
        out.push('\n');
    }
    for f in &p.functions {
        print_fundef(f, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse_expr, parse_program, parse_type};
    use super::*;

    #[test]
    fn empty_program_prints_nothing() {
        assert_eq!(pretty_print(&Program::default()), "");
    }

    #[test]
    fn foreign_decl_is_one_line() {
        let p = parse_program("foreign length : (Array a)! -> U32").unwrap();
        let s = pretty_print(&p);
        assert_eq!(s, "foreign length : (Array a)! -> U32\n");
    }

    #[test]
    fn foreign_decl_keeps_nonstandard_tyvar_order() {
        let p = parse_program("foreign swap b a : (a, b) -> (b, a)").unwrap();
        assert_eq!(p.functions[0].tyvars, vec!["b", "a"]);
        let s = pretty_print(&p);
        assert_eq!(parse_program(&s).unwrap(), p);
    }

    #[test]
    fn types_round_trip() {
        for src in [
            "(Array a)!",
            "Array (Array U32)",
            "(Array (Array U32)!)!",
            "(U32 -> U32) -> Bool",
            "((a!, b, c!) -> b, b, (Array a)!, U32, U32, c!) -> b",
            "a!",
            "Unit",
            "Array (a!)",
        ] {
            let t = parse_type(src).unwrap();
            assert_eq!(parse_type(&print_type(&t)).unwrap(), t, "{src}");
        }
    }

    #[test]
    fn exprs_round_trip() {
        for src in [
            "a - (b - c)",
            "(a < b) == c",
            "f (let x = 1 in x)",
            "(if a then b else c) + 1",
            "let x = (let y = 1 in y) in x",
            "if a then let x = 1 in x else 2",
            "let! (a) n = f a in (n, a)",
            "f[U32, (Array U32)!] (g, 0, ())",
            "g[U32]",
        ] {
            let e = parse_expr(src).unwrap();
            let printed = print_expr(&e);
            assert_eq!(parse_expr(&printed).unwrap(), e, "{src} => {printed}");
        }
    }
}
