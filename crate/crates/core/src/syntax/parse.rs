//! Lexer, recursive-descent parser and name resolution.

use std::collections::BTreeSet;

use thiserror::Error;

use super::{BinOp, Expr, FunBody, FunDef, Lit, Pattern, Program, Type, TypeDecl};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("duplicate definition of `{0}`")]
    Duplicate(String),
    #[error("unbound name `{name}` in `{function}`")]
    Unbound { name: String, function: String },
    #[error("duplicate binder `{name}` in a pattern of `{function}`")]
    DuplicateBinder { name: String, function: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u32),
    Abstract,
    Foreign,
    Fun,
    Let,
    LetBang,
    And,
    In,
    If,
    Then,
    Else,
    True,
    False,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Colon,
    Equals,
    Arrow,
    Bang,
    Bar,
    Underscore,
    Op(BinOp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Abstract => "abstract",
            Tok::Foreign => "foreign",
            Tok::Fun => "fun",
            Tok::Let => "let",
            Tok::LetBang => "let!",
            Tok::And => "and",
            Tok::In => "in",
            Tok::If => "if",
            Tok::Then => "then",
            Tok::Else => "else",
            Tok::True => "True",
            Tok::False => "False",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Equals => "=",
            Tok::Arrow => "->",
            Tok::Bang => "!",
            Tok::Bar => "|",
            Tok::Underscore => "_",
            Tok::Op(op) => op.symbol(),
            Tok::Ident(_) | Tok::Int(_) | Tok::Eof => "",
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| ParseError::Syntax { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        let peek = chars.get(i + 1).copied();
        let (tok, len) = if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            let n = text
                .parse::<u32>()
                .map_err(|_| err(line, col, format!("integer literal `{text}` out of range")))?;
            (Tok::Int(n), j - i)
        } else if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len()
                && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '\'')
            {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            let tok = match text.as_str() {
                "abstract" => Tok::Abstract,
                "foreign" => Tok::Foreign,
                "fun" => Tok::Fun,
                "let" if chars.get(j) == Some(&'!') => {
                    j += 1;
                    Tok::LetBang
                }
                "let" => Tok::Let,
                "and" => Tok::And,
                "in" => Tok::In,
                "if" => Tok::If,
                "then" => Tok::Then,
                "else" => Tok::Else,
                "True" => Tok::True,
                "False" => Tok::False,
                "_" => Tok::Underscore,
                _ => Tok::Ident(text),
            };
            (tok, j - i)
        } else {
            match (c, peek) {
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('<', Some('=')) => (Tok::Op(BinOp::Le), 2),
                ('>', Some('=')) => (Tok::Op(BinOp::Ge), 2),
                ('=', Some('=')) => (Tok::Op(BinOp::Eq), 2),
                ('/', Some('=')) => (Tok::Op(BinOp::Ne), 2),
                ('&', Some('&')) => (Tok::Op(BinOp::And), 2),
                ('|', Some('|')) => (Tok::Op(BinOp::Or), 2),
                ('+', _) => (Tok::Op(BinOp::Add), 1),
                ('-', _) => (Tok::Op(BinOp::Sub), 1),
                ('*', _) => (Tok::Op(BinOp::Mul), 1),
                ('/', _) => (Tok::Op(BinOp::Div), 1),
                ('<', _) => (Tok::Op(BinOp::Lt), 1),
                ('>', _) => (Tok::Op(BinOp::Gt), 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('[', _) => (Tok::LBrack, 1),
                (']', _) => (Tok::RBrack, 1),
                (',', _) => (Tok::Comma, 1),
                (':', _) => (Tok::Colon, 1),
                ('=', _) => (Tok::Equals, 1),
                ('!', _) => (Tok::Bang, 1),
                ('|', _) => (Tok::Bar, 1),
                _ => return Err(err(line, col, format!("unexpected character `{c}`"))),
            }
        };
        i += len;
        col += len;
        out.push(Spanned {
            tok,
            line: start_line,
            col: start_col,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

fn is_type_name(s: &str) -> bool {
    s.starts_with(|c: char| c.is_uppercase())
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let s = &self.toks[self.pos];
        Err(ParseError::Syntax {
            line: s.line,
            col: s.col,
            msg: msg.into(),
        })
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, ParseError> {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.unexpected(&format!("`{}`", t.text()))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("an identifier"),
        }
    }

    fn lower_ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_type_name(&s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected(what),
        }
    }

    fn tyvars(&mut self) -> Vec<String> {
        let mut vs = Vec::new();
        while let Tok::Ident(s) = self.peek() {
            if is_type_name(s) {
                break;
            }
            vs.push(s.clone());
            self.bump();
        }
        vs
    }

    // ---- types ----

    fn ty(&mut self) -> Result<Type, ParseError> {
        let arg = self.ty_postfix()?;
        if self.eat(&Tok::Arrow) {
            let ret = self.ty()?;
            Ok(Type::fun(arg, ret))
        } else {
            Ok(arg)
        }
    }

    fn ty_postfix(&mut self) -> Result<Type, ParseError> {
        let mut t = self.ty_app()?;
        while self.eat(&Tok::Bang) {
            t = t.bang();
        }
        Ok(t)
    }

    fn ty_app(&mut self) -> Result<Type, ParseError> {
        if let Tok::Ident(name) = self.peek().clone() {
            if is_type_name(&name) && prim_type(&name).is_none() {
                self.bump();
                let mut args = Vec::new();
                while self.starts_ty_atom() {
                    args.push(self.ty_atom()?);
                }
                return Ok(Type::Abs {
                    name,
                    args,
                    readonly: false,
                });
            }
        }
        self.ty_atom()
    }

    fn starts_ty_atom(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::LParen)
    }

    fn ty_atom(&mut self) -> Result<Type, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                if let Some(p) = prim_type(&name) {
                    Ok(p)
                } else if is_type_name(&name) {
                    Ok(Type::Abs {
                        name,
                        args: vec![],
                        readonly: false,
                    })
                } else {
                    Ok(Type::Var(name))
                }
            }
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    return Ok(Type::Unit);
                }
                let mut ts = vec![self.ty()?];
                while self.eat(&Tok::Comma) {
                    ts.push(self.ty()?);
                }
                self.expect(Tok::RParen)?;
                Ok(if ts.len() == 1 {
                    ts.pop().unwrap()
                } else {
                    Type::Prod(ts)
                })
            }
            _ => self.unexpected("a type"),
        }
    }

    // ---- patterns ----

    fn pattern(&mut self) -> Result<Pattern, ParseError> {
        match self.peek().clone() {
            Tok::Underscore => {
                self.bump();
                Ok(Pattern::Wild)
            }
            Tok::Ident(s) if !is_type_name(&s) => {
                self.bump();
                Ok(Pattern::Var(s))
            }
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    return Ok(Pattern::Wild);
                }
                let mut ps = vec![self.pattern()?];
                while self.eat(&Tok::Comma) {
                    ps.push(self.pattern()?);
                }
                self.expect(Tok::RParen)?;
                Ok(if ps.len() == 1 {
                    ps.pop().unwrap()
                } else {
                    Pattern::Tuple(ps)
                })
            }
            _ => self.unexpected("a pattern"),
        }
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Let => {
                self.bump();
                let mut binds = vec![self.binding()?];
                while self.eat(&Tok::And) {
                    binds.push(self.binding()?);
                }
                self.expect(Tok::In)?;
                let body = self.expr()?;
                Ok(binds
                    .into_iter()
                    .rev()
                    .fold(body, |k, (p, b)| Expr::let_(p, b, k)))
            }
            Tok::LetBang => {
                self.bump();
                self.expect(Tok::LParen)?;
                let mut vars = Vec::new();
                while !self.eat(&Tok::RParen) {
                    vars.push(self.lower_ident("a variable or `)`")?);
                }
                let pat = self.pattern()?;
                self.expect(Tok::Equals)?;
                let bound = self.expr()?;
                self.expect(Tok::In)?;
                let body = self.expr()?;
                Ok(Expr::LetBang {
                    vars,
                    pat,
                    bound: Box::new(bound),
                    body: Box::new(body),
                })
            }
            Tok::If => {
                self.bump();
                if self.peek() == &Tok::Bar {
                    return self.multiway_if();
                }
                let c = self.expr()?;
                self.expect(Tok::Then)?;
                let t = self.expr()?;
                self.expect(Tok::Else)?;
                let e = self.expr()?;
                Ok(Expr::if_(c, t, e))
            }
            _ => self.binary(0),
        }
    }

    fn binding(&mut self) -> Result<(Pattern, Expr), ParseError> {
        let p = self.pattern()?;
        self.expect(Tok::Equals)?;
        let e = self.expr()?;
        Ok((p, e))
    }

    fn multiway_if(&mut self) -> Result<Expr, ParseError> {
        let mut arms = Vec::new();
        loop {
            self.expect(Tok::Bar)?;
            if self.eat(&Tok::Else) {
                self.expect(Tok::Arrow)?;
                let last = self.expr()?;
                return Ok(arms
                    .into_iter()
                    .rev()
                    .fold(last, |e, (c, t)| Expr::if_(c, t, e)));
            }
            let c = self.expr()?;
            self.expect(Tok::Arrow)?;
            let t = self.expr()?;
            arms.push((c, t));
        }
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.application()?;
        loop {
            let op = match self.peek() {
                Tok::Op(op) if op.precedence() > min_prec => *op,
                _ => return Ok(lhs),
            };
            self.bump();
            let prec = op.precedence();
            let rhs = self.binary(prec)?;
            lhs = Expr::binop(op, lhs, rhs);
            // comparisons do not chain
            if prec == 3 {
                if let Tok::Op(next) = self.peek() {
                    if next.precedence() == 3 {
                        return self.error("comparison operators are non-associative");
                    }
                }
            }
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Int(_) | Tok::True | Tok::False | Tok::LParen | Tok::Ident(_)
        )
    }

    fn application(&mut self) -> Result<Expr, ParseError> {
        if let Tok::Ident(name) = self.peek().clone() {
            let has_targs = self.peek_at(1) == &Tok::LBrack;
            self.bump();
            let targs = if has_targs { self.type_args()? } else { vec![] };
            if self.starts_atom() {
                let arg = self.atom()?;
                return Ok(Expr::App(name, targs, Box::new(arg)));
            }
            return Ok(if has_targs {
                Expr::Fun(name, targs)
            } else {
                Expr::Var(name)
            });
        }
        self.atom()
    }

    fn type_args(&mut self) -> Result<Vec<Type>, ParseError> {
        self.expect(Tok::LBrack)?;
        let mut ts = vec![self.ty()?];
        while self.eat(&Tok::Comma) {
            ts.push(self.ty()?);
        }
        self.expect(Tok::RBrack)?;
        Ok(ts)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Lit(Lit::U32(n)))
            }
            Tok::True => {
                self.bump();
                Ok(Expr::Lit(Lit::Bool(true)))
            }
            Tok::False => {
                self.bump();
                Ok(Expr::Lit(Lit::Bool(false)))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek() == &Tok::LBrack {
                    let targs = self.type_args()?;
                    Ok(Expr::Fun(name, targs))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    return Ok(Expr::Lit(Lit::Unit));
                }
                let mut es = vec![self.expr()?];
                while self.eat(&Tok::Comma) {
                    es.push(self.expr()?);
                }
                self.expect(Tok::RParen)?;
                Ok(if es.len() == 1 {
                    es.pop().unwrap()
                } else {
                    Expr::Tuple(es)
                })
            }
            _ => self.unexpected("an expression"),
        }
    }

    // ---- top level ----

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut prog = Program::default();
        loop {
            match self.peek() {
                Tok::Eof => return Ok(prog),
                Tok::Abstract => {
                    self.bump();
                    let name = self.ident()?;
                    if !is_type_name(&name) {
                        return self.error("abstract type names start with an uppercase letter");
                    }
                    let params = self.tyvars();
                    prog.typedecls.push(TypeDecl { name, params });
                }
                Tok::Foreign => {
                    self.bump();
                    let name = self.lower_ident("a function name")?;
                    let explicit = self.tyvars();
                    self.expect(Tok::Colon)?;
                    let (arg_ty, ret_ty) = match self.ty()? {
                        Type::Fun(a, r) => (*a, *r),
                        _ => return self.error("foreign declarations need a function type"),
                    };
                    let fty = Type::fun(arg_ty.clone(), ret_ty.clone());
                    let tyvars = if explicit.is_empty() {
                        fty.free_vars()
                    } else {
                        explicit
                    };
                    prog.functions.push(FunDef {
                        name,
                        tyvars,
                        param: Pattern::Wild,
                        arg_ty,
                        ret_ty,
                        body: FunBody::Foreign,
                    });
                }
                Tok::Fun => {
                    self.bump();
                    let name = self.lower_ident("a function name")?;
                    let tyvars = self.tyvars();
                    let (param, arg_ty) = self.params()?;
                    self.expect(Tok::Arrow)?;
                    let ret_ty = self.ty()?;
                    self.expect(Tok::Equals)?;
                    let body = self.expr()?;
                    prog.functions.push(FunDef {
                        name,
                        tyvars,
                        param,
                        arg_ty,
                        ret_ty,
                        body: FunBody::Expr(body),
                    });
                }
                _ => return self.unexpected("`abstract`, `foreign` or `fun`"),
            }
        }
    }

    fn params(&mut self) -> Result<(Pattern, Type), ParseError> {
        self.expect(Tok::LParen)?;
        if self.eat(&Tok::RParen) {
            return Ok((Pattern::Wild, Type::Unit));
        }
        let mut ps = Vec::new();
        loop {
            let p = self.pattern()?;
            self.expect(Tok::Colon)?;
            let t = self.ty()?;
            ps.push((p, t));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        if ps.len() == 1 {
            Ok(ps.pop().unwrap())
        } else {
            let (pats, tys) = ps.into_iter().unzip();
            Ok((Pattern::Tuple(pats), Type::Prod(tys)))
        }
    }
}

fn prim_type(name: &str) -> Option<Type> {
    match name {
        "Unit" => Some(Type::Unit),
        "Bool" => Some(Type::Bool),
        "U8" => Some(Type::U8),
        "U32" => Some(Type::U32),
        _ => None,
    }
}

/// Parses a whole program and resolves names.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(src)?;
    let mut prog = p.program()?;
    resolve(&mut prog)?;
    Ok(prog)
}

/// Parses a type on its own.
pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    if p.peek() != &Tok::Eof {
        return p.unexpected("end of input");
    }
    Ok(t)
}

/// Parses an expression without resolving names: every identifier not in
/// call position stays a [`Expr::Var`].
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    if p.peek() != &Tok::Eof {
        return p.unexpected("end of input");
    }
    Ok(e)
}

fn resolve(prog: &mut Program) -> Result<(), ParseError> {
    let mut seen = BTreeSet::new();
    for t in &prog.typedecls {
        if !seen.insert(t.name.clone()) {
            return Err(ParseError::Duplicate(t.name.clone()));
        }
    }
    let mut funs = BTreeSet::new();
    for f in &prog.functions {
        if !funs.insert(f.name.clone()) {
            return Err(ParseError::Duplicate(f.name.clone()));
        }
    }
    for f in &mut prog.functions {
        let name = f.name.clone();
        check_binders(&f.param, &name)?;
        let scope: Vec<String> = f.param.binders().into_iter().map(String::from).collect();
        if let FunBody::Expr(body) = &mut f.body {
            let mut r = Resolver {
                funs: &funs,
                scope,
                function: &name,
            };
            r.expr(body)?;
        }
    }
    Ok(())
}

fn check_binders(p: &Pattern, function: &str) -> Result<(), ParseError> {
    let mut seen = BTreeSet::new();
    for b in p.binders() {
        if !seen.insert(b) {
            return Err(ParseError::DuplicateBinder {
                name: b.to_string(),
                function: function.to_string(),
            });
        }
    }
    Ok(())
}

struct Resolver<'a> {
    funs: &'a BTreeSet<String>,
    scope: Vec<String>,
    function: &'a str,
}

impl Resolver<'_> {
    fn unbound(&self, name: &str) -> ParseError {
        ParseError::Unbound {
            name: name.to_string(),
            function: self.function.to_string(),
        }
    }

    fn with_pattern(
        &mut self,
        p: &Pattern,
        body: &mut Expr,
    ) -> Result<(), ParseError> {
        check_binders(p, self.function)?;
        let mark = self.scope.len();
        self.scope
            .extend(p.binders().into_iter().map(String::from));
        let r = self.expr(body);
        self.scope.truncate(mark);
        r
    }

    fn expr(&mut self, e: &mut Expr) -> Result<(), ParseError> {
        match e {
            Expr::Lit(_) => Ok(()),
            Expr::Var(v) => {
                if self.scope.iter().any(|s| s == v) {
                    Ok(())
                } else if self.funs.contains(v) {
                    *e = Expr::Fun(std::mem::take(v), vec![]);
                    Ok(())
                } else {
                    Err(self.unbound(v))
                }
            }
            Expr::Fun(f, _) => {
                if self.funs.contains(f) {
                    Ok(())
                } else {
                    Err(self.unbound(f))
                }
            }
            Expr::App(f, _, a) => {
                if !self.funs.contains(f) {
                    return Err(self.unbound(f));
                }
                self.expr(a)
            }
            Expr::Let(p, b, k) => {
                self.expr(b)?;
                self.with_pattern(p, k)
            }
            Expr::LetBang {
                vars,
                pat,
                bound,
                body,
            } => {
                if let Some(v) = vars.iter().find(|v| !self.scope.contains(v)) {
                    return Err(self.unbound(v));
                }
                self.expr(bound)?;
                self.with_pattern(pat, body)
            }
            Expr::If(c, t, f) => {
                self.expr(c)?;
                self.expr(t)?;
                self.expr(f)
            }
            Expr::PrimOp(_, l, r) => {
                self.expr(l)?;
                self.expr(r)
            }
            Expr::Tuple(es) => es.iter_mut().try_for_each(|e| self.expr(e)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_definition() {
        let p = parse_program("fun add (x:U32, y:U32) -> U32 = x + y").unwrap();
        assert_eq!(p.functions.len(), 1);
        let f = &p.functions[0];
        assert_eq!(f.param, Pattern::tuple(["x", "y"]));
        assert_eq!(f.arg_ty, Type::Prod(vec![Type::U32, Type::U32]));
        assert_eq!(
            f.body(),
            Some(&Expr::binop(BinOp::Add, Expr::var("x"), Expr::var("y")))
        );
    }

    #[test]
    fn truncated_input_reports_end_of_input() {
        match parse_program("fun f") {
            Err(ParseError::Syntax { line, col, msg }) => {
                assert_eq!((line, col), (1, 6));
                assert!(msg.contains("end of input"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_unbound() {
        assert_eq!(
            parse_program("fun f (x : U32) -> U32 = x\nfun f (x : U32) -> U32 = x"),
            Err(ParseError::Duplicate("f".into()))
        );
        assert!(matches!(
            parse_program("fun f (x : U32) -> U32 = y"),
            Err(ParseError::Unbound { .. })
        ));
        assert!(matches!(
            parse_program("fun f (x : U32) -> U32 = g x"),
            Err(ParseError::Unbound { .. })
        ));
        assert!(matches!(
            parse_program("fun f ((x, x) : (U32, U32)) -> U32 = x"),
            Err(ParseError::DuplicateBinder { .. })
        ));
    }

    #[test]
    fn function_names_resolve_to_references() {
        let p = parse_program(
            "fun g (x : U32) -> U32 = x\nfun f (x : U32) -> (U32 -> U32, U32) = (g, x)",
        )
        .unwrap();
        assert_eq!(
            p.functions[1].body(),
            Some(&Expr::Tuple(vec![Expr::Fun("g".into(), vec![]), Expr::var("x")]))
        );
    }

    #[test]
    fn types_parse() {
        assert_eq!(parse_type("(Array a)!").unwrap(), Type::array_ro(Type::var("a")));
        assert_eq!(
            parse_type("U32 -> U32 -> Bool").unwrap(),
            Type::fun(Type::U32, Type::fun(Type::U32, Type::Bool))
        );
        assert_eq!(parse_type("()").unwrap(), Type::Unit);
        assert_eq!(
            parse_type("(a!, b)").unwrap(),
            Type::Prod(vec![Type::var("a").bang(), Type::var("b")])
        );
    }

    #[test]
    fn precedence() {
        let e = parse_expr("a + b * c < d && e || f").unwrap();
        let expected = Expr::binop(
            BinOp::Or,
            Expr::binop(
                BinOp::And,
                Expr::binop(
                    BinOp::Lt,
                    Expr::binop(
                        BinOp::Add,
                        Expr::var("a"),
                        Expr::binop(BinOp::Mul, Expr::var("b"), Expr::var("c")),
                    ),
                    Expr::var("d"),
                ),
                Expr::var("e"),
            ),
            Expr::var("f"),
        );
        assert_eq!(e, expected);
        assert!(parse_expr("a < b < c").is_err());
        assert_eq!(
            parse_expr("a - b - c").unwrap(),
            Expr::binop(
                BinOp::Sub,
                Expr::binop(BinOp::Sub, Expr::var("a"), Expr::var("b")),
                Expr::var("c")
            )
        );
    }

    #[test]
    fn multiway_if_desugars() {
        let a = parse_expr("if | x < v -> 1 | x > v -> 2 | else -> 3").unwrap();
        let b = parse_expr("if x < v then 1 else if x > v then 2 else 3").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn let_and_is_sequential() {
        let a = parse_expr("let m = 1 and x = m in x").unwrap();
        let b = parse_expr("let m = 1 in let x = m in x").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn let_bang() {
        let e = parse_expr("let! (a b) n = f a in n").unwrap();
        assert!(matches!(e, Expr::LetBang { ref vars, .. } if vars == &["a", "b"]));
    }

    #[test]
    fn comments_and_lines() {
        let p = parse_program("-- a comment\nabstract Array a\n-- another\n").unwrap();
        assert_eq!(p.typedecls.len(), 1);
        match parse_program("abstract Array a\nfun f (x : U32) -> U32 = $") {
            Err(ParseError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 26)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn literal_out_of_range() {
        assert!(parse_expr("4294967296").is_err());
        assert_eq!(parse_expr("4294967295").unwrap(), Expr::u32(u32::MAX));
    }
}
