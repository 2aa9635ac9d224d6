//! A miniature uniqueness-typed functional language with a value
//! semantics, an update semantics over an explicit store, a byte-addressed
//! machine layer and pure reference functions, plus randomised checkers
//! relating all of them.

#![allow(clippy::result_large_err)]

pub mod corpus;
pub mod dynsem;
pub mod ffi;
pub mod lowmachine;
pub mod refine;
pub mod seeding;
pub mod shallow;
pub mod syntax;
pub mod typecheck;
