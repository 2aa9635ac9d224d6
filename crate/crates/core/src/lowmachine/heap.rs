//! Flat 32-bit byte-addressed heap with an explicit allocation table.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::Type;

pub const DEFAULT_HEAP_BYTES: u32 = 1 << 20;
/// Size of an array header: `len` then `vals`, one word each.
pub const HEADER_BYTES: u32 = 8;
/// Allocation starts here so that address 0 is never valid.
const FIRST_ADDRESS: u32 = 16;

/// Undefined behaviour detected by the machine.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum Failed {
    #[error("access of {size} bytes at {addr:#x} is outside every allocation")]
    OutOfBounds { addr: u32, size: u32 },
    #[error("unaligned {size}-byte access at {addr:#x}")]
    Unaligned { addr: u32, size: u32 },
    #[error("address arithmetic overflowed")]
    Overflow,
    #[error("unknown function id {0}")]
    UnknownFid(u32),
    #[error("no array elements allocated at {0:#x}")]
    DanglingArray(u32),
    #[error("heap exhausted allocating {0} bytes")]
    Exhausted(u32),
    #[error("machine stuck: {0}")]
    Stuck(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RegionKind {
    /// An array header (`len`, `vals`).
    Header,
    /// Contiguous array elements of the given type.
    Elems(Type),
    /// A single scalar cell of the given type.
    Cell(Type),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Region {
    pub base: u32,
    pub len: u32,
    pub kind: RegionKind,
}

impl Region {
    fn end(&self) -> u64 {
        self.base as u64 + self.len as u64
    }

    fn covers(&self, addr: u32, size: u32) -> bool {
        addr >= self.base && addr as u64 + size as u64 <= self.end()
    }
}

/// Byte size of an unboxed element type.
pub fn size_of(t: &Type) -> Option<u32> {
    match t {
        Type::U32 => Some(4),
        Type::U8 | Type::Bool => Some(1),
        _ => None,
    }
}

pub fn align_of(t: &Type) -> Option<u32> {
    size_of(t)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowHeap {
    bytes: Vec<u8>,
    allocs: Vec<Region>,
    cursor: u32,
}

impl LowHeap {
    pub fn new(size: u32) -> Self {
        LowHeap {
            bytes: vec![0; size as usize],
            allocs: Vec::new(),
            cursor: FIRST_ADDRESS,
        }
    }

    pub fn size(&self) -> u32 {
        self.bytes.len() as u32
    }

    pub fn regions(&self) -> &[Region] {
        &self.allocs
    }

    pub fn region_at(&self, base: u32) -> Option<&Region> {
        self.allocs.iter().find(|r| r.base == base)
    }

    /// Bump allocation used by harnesses to lay out inputs; the machine
    /// operations themselves never allocate.
    pub fn alloc(&mut self, len: u32, align: u32, kind: RegionKind) -> Result<u32, Failed> {
        let align = align.max(1);
        let base = self
            .cursor
            .checked_add(align - 1)
            .ok_or(Failed::Exhausted(len))?
            / align
            * align;
        let end = base.checked_add(len).ok_or(Failed::Exhausted(len))?;
        if end as usize > self.bytes.len() {
            return Err(Failed::Exhausted(len));
        }
        self.cursor = end;
        self.allocs.push(Region { base, len, kind });
        Ok(base)
    }

    /// Leaves `n` bytes unallocated after the cursor.
    pub fn skip(&mut self, n: u32) {
        self.cursor = self.cursor.saturating_add(n);
    }

    /// The element region of an array of `len` values of `elem` at `vals`.
    pub fn elems_region(&self, elem: &Type, len: u32, vals: u32) -> Result<&Region, Failed> {
        let size = size_of(elem).ok_or_else(|| Failed::Stuck(format!("{elem} is not unboxed")))?;
        let bytes = len.checked_mul(size).ok_or(Failed::Overflow)?;
        self.allocs
            .iter()
            .find(|r| r.base == vals && r.len >= bytes && r.kind == RegionKind::Elems(elem.clone()))
            .ok_or(Failed::DanglingArray(vals))
    }

    fn check(&self, addr: u32, size: u32) -> Result<usize, Failed> {
        addr.checked_add(size).ok_or(Failed::Overflow)?;
        if !addr.is_multiple_of(size) {
            return Err(Failed::Unaligned { addr, size });
        }
        if !self.allocs.iter().any(|r| r.covers(addr, size)) {
            return Err(Failed::OutOfBounds { addr, size });
        }
        Ok(addr as usize)
    }

    pub fn read_word(&self, addr: u32) -> Result<u32, Failed> {
        let a = self.check(addr, 4)?;
        Ok(u32::from_le_bytes(self.bytes[a..a + 4].try_into().unwrap()))
    }

    pub fn write_word(mut self, addr: u32, val: u32) -> Result<LowHeap, Failed> {
        let a = self.check(addr, 4)?;
        self.bytes[a..a + 4].copy_from_slice(&val.to_le_bytes());
        Ok(self)
    }

    pub fn read_byte(&self, addr: u32) -> Result<u8, Failed> {
        let a = self.check(addr, 1)?;
        Ok(self.bytes[a])
    }

    pub fn write_byte(mut self, addr: u32, val: u8) -> Result<LowHeap, Failed> {
        let a = self.check(addr, 1)?;
        self.bytes[a] = val;
        Ok(self)
    }

    /// Raw bytes of `[addr, addr + len)`, regardless of allocation.
    pub fn raw(&self, addr: u32, len: u32) -> Option<&[u8]> {
        let end = (addr as usize).checked_add(len as usize)?;
        self.bytes.get(addr as usize..end)
    }

    /// Flips bits of one byte without any checks; for fault injection.
    pub fn corrupt_byte(&mut self, addr: u32, mask: u8) {
        if let Some(b) = self.bytes.get_mut(addr as usize) {
            *b ^= mask;
        }
    }

    /// Reads a scalar of type `t` at `addr`.
    pub fn read_scalar(&self, t: &Type, addr: u32) -> Result<LowValue, Failed> {
        match t {
            Type::U32 => self.read_word(addr).map(LowValue::U32),
            Type::U8 => self.read_byte(addr).map(LowValue::U8),
            Type::Bool => match self.read_byte(addr)? {
                0 => Ok(LowValue::Bool(false)),
                1 => Ok(LowValue::Bool(true)),
                b => Err(Failed::Stuck(format!("byte {b} is not a boolean"))),
            },
            other => Err(Failed::Stuck(format!("{other} is not a scalar type"))),
        }
    }

    pub fn write_scalar(self, addr: u32, v: &LowValue) -> Result<LowHeap, Failed> {
        match v {
            LowValue::U32(n) => self.write_word(addr, *n),
            LowValue::U8(n) => self.write_byte(addr, *n),
            LowValue::Bool(b) => self.write_byte(addr, *b as u8),
            other => Err(Failed::Stuck(format!("{other:?} is not a scalar"))),
        }
    }

    /// Hex dump, 16 bytes per line, of the lines that overlap an allocation.
    pub fn hex_dump(&self) -> String {
        let mut lines: Vec<u32> = Vec::new();
        for r in &self.allocs {
            if r.len == 0 {
                continue;
            }
            let first = r.base / 16;
            let last = (r.end() - 1) as u32 / 16;
            lines.extend(first..=last);
        }
        lines.sort_unstable();
        lines.dedup();
        let mut out = String::new();
        for l in lines {
            let start = (l * 16) as usize;
            let end = (start + 16).min(self.bytes.len());
            let _ = write!(out, "{:08x}:", start);
            for b in &self.bytes[start..end] {
                let _ = write!(out, " {b:02x}");
            }
            out.push('\n');
        }
        out
    }
}

impl Default for LowHeap {
    fn default() -> Self {
        LowHeap::new(DEFAULT_HEAP_BYTES)
    }
}

/// Machine-level values, standing in for C values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum LowValue {
    Unit,
    Bool(bool),
    U8(u8),
    U32(u32),
    /// `struct WArray { u32 len; T *vals; }`
    StructArray { len: u32, vals: u32 },
    Tuple(Vec<LowValue>),
    FunId(u32),
}

impl LowValue {
    pub fn as_u32(&self) -> Option<u32> {
        match self {
            LowValue::U32(n) => Some(*n),
            _ => None,
        }
    }
}

pub type ExecOutcome = Result<(LowValue, LowHeap), Failed>;

#[cfg(test)]
mod tests {
    use super::*;

    fn heap_with_words(n: u32) -> (LowHeap, u32) {
        let mut h = LowHeap::new(1024);
        let base = h.alloc(4 * n, 4, RegionKind::Elems(Type::U32)).unwrap();
        (h, base)
    }

    #[test]
    fn write_then_read() {
        let (h, base) = heap_with_words(2);
        let h = h.write_word(base + 4, 0xdead_beef).unwrap();
        assert_eq!(h.read_word(base + 4), Ok(0xdead_beef));
        assert_eq!(h.raw(base + 4, 4).unwrap(), &[0xef, 0xbe, 0xad, 0xde]);
    }

    #[test]
    fn read_at_heap_size_fails() {
        let (h, _) = heap_with_words(1);
        assert!(matches!(
            h.read_word(h.size()),
            Err(Failed::OutOfBounds { .. })
        ));
        assert_eq!(h.read_word(u32::MAX - 3), Err(Failed::Overflow));
    }

    #[test]
    fn unaligned_write_fails() {
        let (h, base) = heap_with_words(2);
        assert_eq!(
            h.write_word(base + 1, 1).unwrap_err(),
            Failed::Unaligned {
                addr: base + 1,
                size: 4
            }
        );
    }

    #[test]
    fn access_outside_allocation_fails() {
        let (h, base) = heap_with_words(1);
        assert!(matches!(
            h.read_word(base + 4),
            Err(Failed::OutOfBounds { .. })
        ));
    }

    #[test]
    fn allocations_are_aligned_and_disjoint() {
        let mut h = LowHeap::new(256);
        let a = h.alloc(3, 1, RegionKind::Elems(Type::U8)).unwrap();
        let b = h.alloc(8, 4, RegionKind::Header).unwrap();
        assert_eq!(b % 4, 0);
        assert!(b >= a + 3);
        assert_eq!(h.alloc(1000, 4, RegionKind::Header), Err(Failed::Exhausted(1000)));
    }

    #[test]
    fn hex_dump_lists_allocated_lines() {
        let (h, base) = heap_with_words(1);
        let h = h.write_word(base, 7).unwrap();
        let dump = h.hex_dump();
        assert_eq!(dump.lines().count(), 1);
        assert!(dump.starts_with("00000010: 07 00 00 00"), "{dump}");
    }
}
