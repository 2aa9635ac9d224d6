//! The machine layer standing in for C: a flat byte heap, machine-level
//! library operations with function-id dispatch, an interpreter for
//! monomorphic programs, and the machine/update relations.

pub mod heap;
pub mod interp;
pub mod ops;
pub mod relation;

pub use heap::{
    align_of, size_of, ExecOutcome, Failed, LowHeap, LowValue, Region, RegionKind,
    DEFAULT_HEAP_BYTES, HEADER_BYTES,
};
pub use interp::LowMachine;
pub use relation::{lay_out, rel_hc, rel_vc, to_low, AddrMap, HeapMismatch, LowCtx};
