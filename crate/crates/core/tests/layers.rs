//! Whole-pipeline properties of the shipped programs.

use minicogent::corpus;
use minicogent::dynsem::VValue;
use minicogent::refine::{walkthrough, Case};
use minicogent::shallow::{binary_search_s, sum_s};
use minicogent::syntax::{parse_program, pretty_print};
use minicogent::typecheck::typecheck_program;
use proptest::prelude::*;

const HEAP: u32 = 1 << 16;

#[test]
fn shipped_sources_typecheck_and_reprint() {
    for (name, src) in corpus::all() {
        let p = parse_program(src).unwrap_or_else(|e| panic!("{name}: {e}"));
        typecheck_program(&p).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(parse_program(&pretty_print(&p)).unwrap(), p, "{name}");
    }
}

#[test]
fn sugared_binary_search_is_the_same_program() {
    assert_eq!(
        parse_program(corpus::BINARY_SEARCH_SUGARED).unwrap(),
        corpus::binary_search_program()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sum_agrees_at_every_layer(xs in prop::collection::vec(any::<u32>(), 0..64)) {
        let w = walkthrough(Case::Sum, &VValue::u32_array(&xs), HEAP).unwrap();
        prop_assert!(w.all_hold(), "{:?}", w.verdicts);
        let want = sum_s(&xs).to_string();
        for l in &w.layers {
            prop_assert_eq!(&l.value, &want, "{}", l.layer);
        }
    }

    #[test]
    fn binary_search_agrees_with_a_linear_scan(
        mut xs in prop::collection::vec(0u32..200, 0..64),
        key in 0u32..200,
    ) {
        xs.sort_unstable();
        xs.dedup();
        let v = VValue::Prod(vec![VValue::u32_array(&xs), VValue::U32(key)]);
        let w = walkthrough(Case::BinarySearch, &v, HEAP).unwrap();
        prop_assert!(w.all_hold(), "{:?}", w.verdicts);
        let scan = xs.iter().position(|&x| x == key).unwrap_or(xs.len()) as u32;
        prop_assert_eq!(binary_search_s(&xs, key), scan);
        for l in &w.layers {
            prop_assert_eq!(&l.value, &scan.to_string(), "{}", l.layer);
        }
    }
}
