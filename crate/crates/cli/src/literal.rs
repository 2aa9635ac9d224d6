//! Command-line literals: numbers, `True`/`False`, `()`, lists in brackets,
//! tuples in parentheses and bare function names. Parsed untyped, then
//! given a value at the entry function's parameter type.

use minicogent::dynsem::VValue;
use minicogent::syntax::Type;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Literal {
    Num(u64),
    Bool(bool),
    Name(String),
    List(Vec<Literal>),
    Tuple(Vec<Literal>),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), String> {
        match self.peek() {
            Some(d) if d == c => {
                self.pos += 1;
                Ok(())
            }
            Some(d) => Err(format!("expected `{}` at offset {}, found `{}`", c as char, self.pos, d as char)),
            None => Err(format!("expected `{}`, found end of input", c as char)),
        }
    }

    fn items(&mut self, close: u8) -> Result<Vec<Literal>, String> {
        let mut out = Vec::new();
        if self.peek() == Some(close) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.value()?);
            match self.peek() {
                Some(b',') => self.pos += 1,
                _ => {
                    self.expect(close)?;
                    return Ok(out);
                }
            }
        }
    }

    fn value(&mut self) -> Result<Literal, String> {
        match self.peek() {
            Some(b'[') => {
                self.pos += 1;
                Ok(Literal::List(self.items(b']')?))
            }
            Some(b'(') => {
                self.pos += 1;
                let mut xs = self.items(b')')?;
                Ok(if xs.len() == 1 { xs.remove(0) } else { Literal::Tuple(xs) })
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
                text.parse().map(Literal::Num).map_err(|_| format!("number `{text}` is too large"))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii word");
                Ok(match word {
                    "True" | "true" => Literal::Bool(true),
                    "False" | "false" => Literal::Bool(false),
                    _ => Literal::Name(word.to_string()),
                })
            }
            Some(c) => Err(format!("unexpected `{}` at offset {}", c as char, self.pos)),
            None => Err("empty literal".into()),
        }
    }
}

pub fn parse_literal(src: &str) -> Result<Literal, String> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    let v = p.value()?;
    match p.peek() {
        None => Ok(v),
        Some(c) => Err(format!("trailing `{}` at offset {}", c as char, p.pos)),
    }
}

/// The value `lit` denotes at type `ty`.
pub fn typed_value(lit: &Literal, ty: &Type) -> Result<VValue, String> {
    let mismatch = || format!("cannot read {} as {ty}", show(lit));
    match (lit, ty) {
        (_, Type::Bang(t)) => typed_value(lit, t),
        (Literal::Tuple(xs), Type::Unit) if xs.is_empty() => Ok(VValue::Unit),
        (Literal::Bool(b), Type::Bool) => Ok(VValue::Bool(*b)),
        (Literal::Num(n), Type::U8) => u8::try_from(*n)
            .map(VValue::U8)
            .map_err(|_| format!("{n} does not fit in U8")),
        (Literal::Num(n), Type::U32) => u32::try_from(*n)
            .map(VValue::U32)
            .map_err(|_| format!("{n} does not fit in U32")),
        (Literal::Tuple(xs), Type::Prod(ts)) if xs.len() == ts.len() => Ok(VValue::Prod(
            xs.iter()
                .zip(ts)
                .map(|(x, t)| typed_value(x, t))
                .collect::<Result<_, _>>()?,
        )),
        (Literal::Name(f), Type::Fun(..)) => Ok(VValue::fun(f)),
        (Literal::List(xs), t) => match t.as_array() {
            Some((elem, _)) => Ok(VValue::array(
                elem.clone(),
                xs.iter()
                    .map(|x| typed_value(x, elem))
                    .collect::<Result<_, _>>()?,
            )),
            None => Err(mismatch()),
        },
        _ => Err(mismatch()),
    }
}

fn show(lit: &Literal) -> String {
    let join = |xs: &[Literal]| xs.iter().map(show).collect::<Vec<_>>().join(", ");
    match lit {
        Literal::Num(n) => n.to_string(),
        Literal::Bool(b) => if *b { "True" } else { "False" }.to_string(),
        Literal::Name(s) => s.clone(),
        Literal::List(xs) => format!("[{}]", join(xs)),
        Literal::Tuple(xs) => format!("({})", join(xs)),
    }
}

/// Reads the command-line arguments as the entry parameter. Several
/// arguments fill the components of a tuple parameter in order.
pub fn entry_argument(args: &[String], ty: &Type) -> Result<VValue, String> {
    let lits = args
        .iter()
        .map(|a| parse_literal(a))
        .collect::<Result<Vec<_>, _>>()?;
    let lit = match lits.len() {
        0 => Literal::Tuple(vec![]),
        1 => lits.into_iter().next().expect("one literal"),
        _ => Literal::Tuple(lits),
    };
    typed_value(&lit, ty)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_literals() {
        assert_eq!(
            parse_literal("([1, 2], (True, f))").unwrap(),
            Literal::Tuple(vec![
                Literal::List(vec![Literal::Num(1), Literal::Num(2)]),
                Literal::Tuple(vec![Literal::Bool(true), Literal::Name("f".into())]),
            ])
        );
        assert_eq!(parse_literal("[]").unwrap(), Literal::List(vec![]));
        assert_eq!(parse_literal("(7)").unwrap(), Literal::Num(7));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_literal("[1, 2").is_err());
        assert!(parse_literal("1 2").is_err());
        assert!(parse_literal("-3").is_err());
        assert!(parse_literal("").is_err());
    }

    #[test]
    fn types_direct_the_reading() {
        let arr = Type::array_ro(Type::U8);
        assert_eq!(
            typed_value(&parse_literal("[1, 255]").unwrap(), &arr).unwrap(),
            VValue::array(Type::U8, vec![VValue::U8(1), VValue::U8(255)])
        );
        assert!(typed_value(&parse_literal("[256]").unwrap(), &arr).is_err());
        assert!(typed_value(&Literal::Bool(true), &Type::U32).is_err());
    }

    #[test]
    fn several_arguments_form_a_tuple() {
        let ty = Type::Prod(vec![Type::array_ro(Type::U32), Type::U32]);
        let v = entry_argument(&["[1,3,5,7]".into(), "5".into()], &ty).unwrap();
        assert_eq!(v, VValue::Prod(vec![VValue::u32_array(&[1, 3, 5, 7]), VValue::U32(5)]));
        assert_eq!(entry_argument(&[], &Type::Unit).unwrap(), VValue::Unit);
    }
}
