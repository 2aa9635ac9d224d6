//! Shipped example programs.

use crate::syntax::{parse_program, Program};

/// Declarations of the array and loop library.
pub const ARRAY_LIB: &str = include_str!("../corpus/array.cg");
/// Array summation through `fold`.
pub const SUM: &str = include_str!("../corpus/sum.cg");
/// Binary search through `repeat`, exiting early once the value is found.
pub const BINARY_SEARCH: &str = include_str!("../corpus/binsearch.cg");
/// Small monomorphic helpers usable as loop bodies, and one driver per
/// library operation instance.
pub const LIBTEST: &str = include_str!("../corpus/libtest.cg");

/// The binary search written with a multi-way `if` and `let ... and`; it
/// parses to the same program as [`BINARY_SEARCH`].
pub const BINARY_SEARCH_SUGARED: &str = "\
abstract Array a
foreign length : (Array a)! -> U32
foreign get : ((Array a)!, U32, a!) -> a!
foreign repeat : (U32, (a!, b!) -> Bool, (a, b!) -> a, a, b!) -> a
fun stop ((l, r, b) : (U32, U32, Bool), (arr, v) : ((Array U32)!, U32)) -> Bool = b || l >= r
fun search ((l, r, b) : (U32, U32, Bool), (arr, v) : ((Array U32)!, U32)) -> (U32, U32, Bool) =
  let m = l + (r - l) / 2 and
      x = get[U32] (arr, m, 0)
  in if | x < v -> (m + 1, r, b)
        | x > v -> (l, m, b)
        | else -> (m, r, True)
fun binary_search (arr : (Array U32)!, v : U32) -> U32 =
  let len = length[U32] arr and
      (l, r, b) = repeat[(U32, U32, Bool), ((Array U32)!, U32)] (len, stop, search, (0, len, False), (arr, v))
  in if b then l else len
";

pub fn sum_program() -> Program {
    parse_program(SUM).expect("shipped sum program parses")
}

pub fn binary_search_program() -> Program {
    parse_program(BINARY_SEARCH).expect("shipped binary search program parses")
}

pub fn libtest_program() -> Program {
    parse_program(LIBTEST).expect("shipped helper program parses")
}

pub fn array_lib() -> Program {
    parse_program(ARRAY_LIB).expect("shipped library declarations parse")
}

/// Every shipped source with a name, for round-trip and typing checks.
pub fn all() -> [(&'static str, &'static str); 4] {
    [
        ("array", ARRAY_LIB),
        ("sum", SUM),
        ("binsearch", BINARY_SEARCH),
        ("libtest", LIBTEST),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::pretty_print;
    use crate::typecheck::typecheck_program;

    fn strip(s: &str) -> String {
        s.chars().filter(|c| !c.is_whitespace()).collect()
    }

    #[test]
    fn corpus_prints_back_verbatim() {
        for (name, src) in all() {
            let p = parse_program(src).unwrap();
            let printed = pretty_print(&p);
            assert_eq!(strip(&printed), strip(src), "{name}:\n{printed}");
            assert_eq!(parse_program(&printed).unwrap(), p, "{name}");
        }
    }

    #[test]
    fn sugared_binary_search_is_the_same_program() {
        assert_eq!(
            parse_program(BINARY_SEARCH_SUGARED).unwrap(),
            binary_search_program()
        );
    }

    #[test]
    fn corpus_typechecks() {
        for (name, src) in all() {
            typecheck_program(&parse_program(src).unwrap())
                .unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn sum_has_two_functions_and_two_foreign_decls() {
        let p = sum_program();
        let foreign: Vec<_> = p.functions.iter().filter(|f| f.is_foreign()).collect();
        assert_eq!(foreign.len(), 2);
        assert_eq!(p.functions.len() - foreign.len(), 2);
    }
}
