//! The ultra-wide word RAM: `w`-bit word memory, `w²`-bit ultraword
//! instructions, scattered memory access and per-instruction accounting.
//!
//! Every instruction method charges exactly one unit to exactly one
//! [`CostCounter`] category. Word-level instructions operate on `u64` values
//! reduced modulo `2^w`; ultraword instructions operate on [`Ultraword`]s
//! produced by (and registered with) the same machine.

mod registers;
mod ultraword;

use std::fmt;
use std::ops::Sub;
use std::sync::Arc;

use serde::Serialize;

use self::registers::{RegisterFile, RegisterSlot};
pub(crate) use self::ultraword::{check_width, word_mask};
pub use self::ultraword::{Ultraword, MAX_W, MIN_W};
use crate::error::{Error, Result};
use crate::uwops::Constants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MachineMode {
    /// Addition, subtraction, shifts and boolean operations on ultrawords.
    Restricted,
    /// The restricted instruction set plus ultraword multiplication.
    Multiplication,
}

impl MachineMode {
    pub const ALL: [MachineMode; 2] = [MachineMode::Restricted, MachineMode::Multiplication];

    pub fn name(self) -> &'static str {
        match self {
            MachineMode::Restricted => "restricted",
            MachineMode::Multiplication => "mult",
        }
    }
}

impl fmt::Display for MachineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Executed-instruction tallies, one field per instruction category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct CostCounter {
    pub word_ops: u64,
    pub uw_ops: u64,
    pub uw_mul_ops: u64,
    pub scattered_reads: u64,
    pub scattered_writes: u64,
    pub word_mem_accesses: u64,
}

impl CostCounter {
    /// Total number of executed instructions of every kind.
    pub fn total(&self) -> u64 {
        self.word_ops
            + self.uw_ops
            + self.uw_mul_ops
            + self.scattered_reads
            + self.scattered_writes
            + self.word_mem_accesses
    }
}

impl Sub for CostCounter {
    type Output = CostCounter;

    fn sub(self, rhs: CostCounter) -> CostCounter {
        CostCounter {
            word_ops: self.word_ops - rhs.word_ops,
            uw_ops: self.uw_ops - rhs.uw_ops,
            uw_mul_ops: self.uw_mul_ops - rhs.uw_mul_ops,
            scattered_reads: self.scattered_reads - rhs.scattered_reads,
            scattered_writes: self.scattered_writes - rhs.scattered_writes,
            word_mem_accesses: self.word_mem_accesses - rhs.word_mem_accesses,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitOp {
    And,
    Or,
    Xor,
    Not,
}

pub struct Machine {
    mode: MachineMode,
    w: u32,
    memory: Vec<u64>,
    counters: CostCounter,
    registers: Arc<RegisterFile>,
    consts: Option<Constants>,
}

impl fmt::Debug for Machine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Machine")
            .field("mode", &self.mode)
            .field("w", &self.w)
            .field("memory_words", &self.memory.len())
            .field("counters", &self.counters)
            .field("live_registers", &self.registers.live())
            .finish()
    }
}

impl Machine {
    /// Creates a machine with `memory_words` zeroed words of memory.
    ///
    /// The word-parallelism constants are precomputed here and held in
    /// registers for the machine's lifetime; building them is not charged.
    pub fn new(mode: MachineMode, w: u32, memory_words: usize) -> Result<Self> {
        check_width(w)?;
        let mut machine = Machine {
            mode,
            w,
            memory: vec![0; memory_words],
            counters: CostCounter::default(),
            registers: Arc::default(),
            consts: None,
        };
        machine.consts = Some(Constants::build(&machine));
        machine.registers.reset_peak();
        Ok(machine)
    }

    pub fn mode(&self) -> MachineMode {
        self.mode
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    /// `2^w − 1`.
    pub fn word_mask(&self) -> u64 {
        word_mask(self.w)
    }

    /// `2^(w−1) − 1`: the largest value that leaves the test bit clear.
    pub fn value_mask(&self) -> u64 {
        word_mask(self.w - 1)
    }

    pub(crate) fn consts(&self) -> &Constants {
        self.consts
            .as_ref()
            .expect("constants are built in Machine::new")
    }

    // ---- accounting -------------------------------------------------------

    pub fn counters(&self) -> CostCounter {
        self.counters
    }

    pub fn reset_counters(&mut self) {
        self.counters = CostCounter::default();
    }

    /// Ultrawords currently occupying a register, including held constants.
    pub fn live_registers(&self) -> usize {
        self.registers.live()
    }

    /// Highest simultaneous register occupancy since the last [`Machine::reset_peak_registers`].
    pub fn peak_registers(&self) -> usize {
        self.registers.peak()
    }

    pub fn reset_peak_registers(&self) {
        self.registers.reset_peak();
    }

    /// Places an uncharged value in a register. Used for precomputed constants.
    pub fn constant(&self, words: &[u64]) -> Result<Ultraword> {
        let x = Ultraword::from_words(self.w, words)?;
        Ok(self.register(*x.buf()))
    }

    fn register(&self, words: [u64; MAX_W]) -> Ultraword {
        Ultraword::raw(self.w, words).with_slot(RegisterSlot::acquire(&self.registers))
    }

    fn check_operand(&self, x: &Ultraword) {
        assert_eq!(x.w(), self.w, "ultraword width does not match the machine");
    }

    // ---- memory (host side, uncharged) -----------------------------------

    pub fn memory(&self) -> &[u64] {
        &self.memory
    }

    pub fn memory_len(&self) -> usize {
        self.memory.len()
    }

    /// Copies `values` into memory starting at `addr` without charging any instruction.
    /// This models input that is already resident in memory.
    pub fn load_image(&mut self, addr: usize, values: &[u64]) -> Result<()> {
        let end = addr
            .checked_add(values.len())
            .filter(|&end| end <= self.memory.len())
            .ok_or(Error::AddressOutOfBounds {
                addr: (addr + values.len()) as u64,
                len: self.memory.len(),
            })?;
        if let Some(&bad) = values.iter().find(|&&v| v > self.word_mask()) {
            return Err(Error::InvalidInput(format!(
                "value {bad:#x} does not fit in {} bits",
                self.w
            )));
        }
        self.memory[addr..end].copy_from_slice(values);
        Ok(())
    }

    fn resolve(&self, addr: u64) -> Result<usize> {
        usize::try_from(addr)
            .ok()
            .filter(|&a| a < self.memory.len())
            .ok_or(Error::AddressOutOfBounds {
                addr,
                len: self.memory.len(),
            })
    }

    // ---- word instructions ------------------------------------------------

    fn word_op(&mut self, v: u64) -> u64 {
        self.counters.word_ops += 1;
        v & self.word_mask()
    }

    pub fn w_add(&mut self, a: u64, b: u64) -> u64 {
        self.word_op(a.wrapping_add(b))
    }

    pub fn w_sub(&mut self, a: u64, b: u64) -> u64 {
        self.word_op(a.wrapping_sub(b))
    }

    pub fn w_mul(&mut self, a: u64, b: u64) -> u64 {
        self.word_op(a.wrapping_mul(b))
    }

    pub fn w_and(&mut self, a: u64, b: u64) -> u64 {
        self.word_op(a & b)
    }

    pub fn w_or(&mut self, a: u64, b: u64) -> u64 {
        self.word_op(a | b)
    }

    /// Two's-complement negation modulo `2^w`.
    pub fn w_neg(&mut self, a: u64) -> u64 {
        self.word_op(a.wrapping_neg())
    }

    pub fn w_shl(&mut self, a: u64, k: u32) -> u64 {
        self.word_op(a.checked_shl(k).unwrap_or(0))
    }

    pub fn w_shr(&mut self, a: u64, k: u32) -> u64 {
        self.word_op(a.checked_shr(k).unwrap_or(0))
    }

    /// Count trailing zeros; `w` for a zero word.
    pub fn w_ctz(&mut self, a: u64) -> u64 {
        let a = a & self.word_mask();
        let tz = if a == 0 { self.w } else { a.trailing_zeros() };
        self.word_op(tz as u64)
    }

    /// Unsigned `a < b`.
    pub fn w_lt(&mut self, a: u64, b: u64) -> bool {
        self.counters.word_ops += 1;
        a < b
    }

    pub fn w_eq(&mut self, a: u64, b: u64) -> bool {
        self.counters.word_ops += 1;
        a == b
    }

    pub fn load_word(&mut self, addr: u64) -> Result<u64> {
        let a = self.resolve(addr)?;
        self.counters.word_mem_accesses += 1;
        Ok(self.memory[a])
    }

    pub fn store_word(&mut self, addr: u64, v: u64) -> Result<()> {
        let a = self.resolve(addr)?;
        if v > self.word_mask() {
            return Err(Error::InvalidInput(format!(
                "value {v:#x} does not fit in {} bits",
                self.w
            )));
        }
        self.counters.word_mem_accesses += 1;
        self.memory[a] = v;
        Ok(())
    }

    // ---- ultraword instructions -------------------------------------------

    fn uw_result(&mut self, words: [u64; MAX_W]) -> Ultraword {
        self.counters.uw_ops += 1;
        self.register(words)
    }

    fn zip(&self, x: &Ultraword, y: &Ultraword, f: impl Fn(u64, u64) -> u64) -> [u64; MAX_W] {
        self.check_operand(x);
        self.check_operand(y);
        let mask = self.word_mask();
        let mut out = [0; MAX_W];
        for (j, o) in out.iter_mut().enumerate().take(self.w as usize) {
            *o = f(x.buf()[j], y.buf()[j]) & mask;
        }
        out
    }

    pub fn uw_bitwise(&mut self, op: BitOp, x: &Ultraword, y: Option<&Ultraword>) -> Ultraword {
        match (op, y) {
            (BitOp::Not, _) => self.uw_not(x),
            (BitOp::And, Some(y)) => self.uw_and(x, y),
            (BitOp::Or, Some(y)) => self.uw_or(x, y),
            (BitOp::Xor, Some(y)) => self.uw_xor(x, y),
            (_, None) => panic!("{op:?} needs two operands"),
        }
    }

    pub fn uw_and(&mut self, x: &Ultraword, y: &Ultraword) -> Ultraword {
        let out = self.zip(x, y, |a, b| a & b);
        self.uw_result(out)
    }

    pub fn uw_or(&mut self, x: &Ultraword, y: &Ultraword) -> Ultraword {
        let out = self.zip(x, y, |a, b| a | b);
        self.uw_result(out)
    }

    pub fn uw_xor(&mut self, x: &Ultraword, y: &Ultraword) -> Ultraword {
        let out = self.zip(x, y, |a, b| a ^ b);
        self.uw_result(out)
    }

    pub fn uw_not(&mut self, x: &Ultraword) -> Ultraword {
        let out = self.zip(x, x, |a, _| !a);
        self.uw_result(out)
    }

    /// `(x + y) mod 2^(w²)`; carries ripple across word boundaries.
    pub fn uw_add(&mut self, x: &Ultraword, y: &Ultraword) -> Ultraword {
        self.check_operand(x);
        self.check_operand(y);
        let (w, mask) = (self.w, self.word_mask() as u128);
        let mut out = [0; MAX_W];
        let mut carry = 0u128;
        for (j, o) in out.iter_mut().enumerate().take(w as usize) {
            let s = x.buf()[j] as u128 + y.buf()[j] as u128 + carry;
            *o = (s & mask) as u64;
            carry = s >> w;
        }
        self.uw_result(out)
    }

    /// `(x − y) mod 2^(w²)`; borrows ripple across word boundaries.
    pub fn uw_sub(&mut self, x: &Ultraword, y: &Ultraword) -> Ultraword {
        self.check_operand(x);
        self.check_operand(y);
        let w = self.w as usize;
        let base = 1u128 << self.w;
        let mut out = [0; MAX_W];
        let mut borrow = 0u128;
        for (j, o) in out.iter_mut().enumerate().take(w) {
            let a = x.buf()[j] as u128;
            let b = y.buf()[j] as u128 + borrow;
            if a >= b {
                *o = (a - b) as u64;
                borrow = 0;
            } else {
                *o = (a + base - b) as u64;
                borrow = 1;
            }
        }
        self.uw_result(out)
    }

    /// Logical left shift of the whole `w²`-bit value by `k` bits, zero fill.
    ///
    /// Panics if `k > w²`.
    pub fn uw_shl(&mut self, x: &Ultraword, k: usize) -> Ultraword {
        self.check_operand(x);
        let out = shift_left(self.w, x.buf(), k);
        self.uw_result(out)
    }

    /// Logical right shift of the whole `w²`-bit value by `k` bits, zero fill.
    ///
    /// Panics if `k > w²`.
    pub fn uw_shr(&mut self, x: &Ultraword, k: usize) -> Ultraword {
        self.check_operand(x);
        let out = shift_right(self.w, x.buf(), k);
        self.uw_result(out)
    }

    /// `(x · y) mod 2^(w²)`. Only available on a multiplication machine.
    pub fn uw_mul(&mut self, x: &Ultraword, y: &Ultraword) -> Result<Ultraword> {
        if self.mode != MachineMode::Multiplication {
            return Err(Error::ModeViolation {
                instruction: "uw_mul",
                mode: self.mode,
            });
        }
        self.check_operand(x);
        self.check_operand(y);
        let w = self.w as usize;
        let mask = self.word_mask() as u128;
        let mut acc = [0u64; MAX_W];
        for i in 0..w {
            let a = x.buf()[i] as u128;
            if a == 0 {
                continue;
            }
            let mut carry = 0u128;
            for j in 0..w - i {
                // (2^w−1) + (2^w−1)² + (2^w−1) < 2^128 for w ≤ 64
                let t = acc[i + j] as u128 + a * y.buf()[j] as u128 + carry;
                acc[i + j] = (t & mask) as u64;
                carry = t >> self.w;
            }
        }
        self.counters.uw_mul_ops += 1;
        Ok(self.register(acc))
    }

    /// Moves a word into word 0 of a fresh ultraword (all other words zero).
    pub fn uw_from_word(&mut self, v: u64) -> Ultraword {
        let mut out = [0; MAX_W];
        out[0] = v & self.word_mask();
        self.uw_result(out)
    }

    /// Reads word `j` of an ultraword into a word register.
    pub fn uw_word(&mut self, x: &Ultraword, j: usize) -> u64 {
        self.check_operand(x);
        assert!(j < self.w as usize, "word index {j} out of range");
        self.counters.uw_ops += 1;
        x.buf()[j]
    }

    // ---- scattered access -------------------------------------------------

    /// `result⟨j⟩ = memory[addrs⟨j⟩]` for every word `j`, as one instruction.
    pub fn scattered_read(&mut self, addrs: &Ultraword) -> Result<Ultraword> {
        self.check_operand(addrs);
        let mut out = [0; MAX_W];
        for (j, &a) in addrs.words().iter().enumerate() {
            out[j] = self.memory[self.resolve(a)?];
        }
        self.counters.scattered_reads += 1;
        Ok(self.register(out))
    }

    /// `memory[addrs⟨j⟩] = values⟨j⟩` for every word `j`, as one instruction.
    ///
    /// Duplicate addresses must carry identical values; otherwise nothing is
    /// written and a conflict error is returned.
    pub fn scattered_write(&mut self, addrs: &Ultraword, values: &Ultraword) -> Result<()> {
        self.check_operand(addrs);
        self.check_operand(values);
        let mut targets: Vec<(usize, u64)> = addrs
            .words()
            .iter()
            .zip(values.words())
            .map(|(&a, &v)| Ok((self.resolve(a)?, v)))
            .collect::<Result<_>>()?;
        targets.sort_unstable();
        for pair in targets.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 != pair[1].1 {
                return Err(Error::ScatterConflict {
                    addr: pair[0].0 as u64,
                    first: pair[0].1,
                    second: pair[1].1,
                });
            }
        }
        for (a, v) in targets {
            self.memory[a] = v;
        }
        self.counters.scattered_writes += 1;
        Ok(())
    }
}

fn shift_left(w: u32, x: &[u64; MAX_W], k: usize) -> [u64; MAX_W] {
    let wu = w as usize;
    assert!(k <= wu * wu, "shift amount {k} exceeds {} bits", wu * wu);
    let (q, r) = (k / wu, k % wu);
    let mask = word_mask(w);
    let mut out = [0; MAX_W];
    for (src, slot) in out[q.min(wu)..wu].iter_mut().enumerate() {
        let mut v = (x[src] << r) & mask;
        if r > 0 && src > 0 {
            v |= x[src - 1] >> (wu - r);
        }
        *slot = v;
    }
    out
}

fn shift_right(w: u32, x: &[u64; MAX_W], k: usize) -> [u64; MAX_W] {
    let wu = w as usize;
    assert!(k <= wu * wu, "shift amount {k} exceeds {} bits", wu * wu);
    let (q, r) = (k / wu, k % wu);
    let mask = word_mask(w);
    let mut out = [0; MAX_W];
    for (j, slot) in out[..wu.saturating_sub(q)].iter_mut().enumerate() {
        let src = j + q;
        let mut v = x[src] >> r;
        if r > 0 && src + 1 < wu {
            v |= (x[src + 1] << (wu - r)) & mask;
        }
        *slot = v;
    }
    out
}
