//! Executable refinement checks between the layers: generators of
//! programs and related inputs, monomorphisation, and randomised checks of
//! each correspondence.

pub mod check;
pub mod gen;
pub mod mono;
pub mod walkthrough;

pub use gen::{embed, gen_program, gen_program_with, gen_value, place, prelude, random_value, GenConfig, Related};
pub use mono::{mono_expr, mono_value, monomorphise, Mono, MonoError, NameMap};
pub use check::{
    check_combined, check_corres, check_early_exit, check_frame, check_mono, check_obligations,
    check_preservation, check_shallow, check_value_update, faulty_registry, run_suite, Case,
    CheckConfig, CheckReport, Fault, BOUNDARIES, OPS, SUITES,
};
pub use walkthrough::{heap_digest, reify_low, reify_u, store_digest, walkthrough, Walkthrough};
