//! Word-RAM Fenwick tree stored in machine memory.
//!
//! Slot `base + 0` is a permanent zero and slots `base + 1 ..= base + N`
//! hold `F[1..=N]`, where `F[i]` is the sum of `A` over `(i − 2^rmb(i), i]`.
//! All values are kept modulo `2^(w−1)` so the test bit of every stored word
//! stays clear. Every step of every operation runs as machine instructions,
//! which makes this the cost baseline for [`crate::psum`].

use crate::error::{Error, Result};
use crate::machine::{Machine, MachineMode};

/// Residue of a signed delta modulo `2^(w−1)`.
pub fn residue(delta: i64, w: u32) -> u64 {
    (delta as i128).rem_euclid(1i128 << (w - 1)) as u64
}

/// Position of the least significant set bit: isolate it with `x & −x`, then
/// count trailing zeros. Three word instructions.
pub fn rmb(m: &mut Machine, x: u64) -> Result<u32> {
    if x == 0 {
        return Err(Error::Domain("rmb(0) is undefined"));
    }
    let neg = m.w_neg(x);
    let low = m.w_and(x, neg);
    Ok(m.w_ctz(low) as u32)
}

/// Layout of a Fenwick array inside machine memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FenwickArray {
    base: usize,
    capacity: usize,
    len: usize,
}

impl FenwickArray {
    /// Places `values` as `A[1..=n]` at `base + 1`, zero-pads to the next
    /// power of two and transforms the region into `F` in place.
    ///
    /// Placing the input is free (the array is already in memory); the
    /// transformation is charged. `O(N)` instructions.
    pub fn build_in_place(m: &mut Machine, base: usize, values: &[u64]) -> Result<Self> {
        let len = values.len();
        if len == 0 {
            return Err(Error::InvalidInput("empty input array".into()));
        }
        if let Some((k, &v)) = values.iter().enumerate().find(|(_, &v)| v > m.value_mask()) {
            return Err(Error::InvalidInput(format!(
                "A[{}] = {v} sets the test bit of a {}-bit word",
                k + 1,
                m.w()
            )));
        }
        let capacity = len.next_power_of_two();
        let end = base + capacity;
        if end >= m.memory_len() {
            return Err(Error::Config(format!(
                "Fenwick array needs slots {base}..={end}, memory holds {} words",
                m.memory_len()
            )));
        }
        if end as u64 > m.value_mask() {
            return Err(Error::Config(format!(
                "address {end} does not fit below the test bit of a {}-bit word",
                m.w()
            )));
        }
        m.load_image(base, &[0])?;
        m.load_image(base + 1, values)?;
        m.load_image(base + 1 + len, &vec![0; capacity - len])?;

        let array = FenwickArray {
            base,
            capacity,
            len,
        };
        let value_mask = m.value_mask();
        let b = base as u64;
        let mut stride = 1u64;
        while stride < capacity as u64 {
            let mut i = 2 * stride;
            while i <= capacity as u64 {
                // F[i] ← F[i − stride] + F[i]
                let right = m.w_add(b, i);
                let left = m.w_sub(right, stride);
                let l = m.load_word(left)?;
                let r = m.load_word(right)?;
                let s = m.w_add(l, r);
                let s = m.w_and(s, value_mask);
                m.store_word(right, s)?;
                i += 2 * stride;
            }
            stride *= 2;
        }
        Ok(array)
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// Power-of-two capacity `N`.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Logical length `n`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `F[0..=N]` as stored, read without charge.
    pub fn slots<'m>(&self, m: &'m Machine) -> &'m [u64] {
        &m.memory()[self.base..=self.base + self.capacity]
    }

    fn check_index(&self, i: usize, allow_zero: bool) -> Result<()> {
        if i > self.len || (i == 0 && !allow_zero) {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.len,
            });
        }
        Ok(())
    }

    /// `A[1] + … + A[i]` modulo `2^(w−1)`, following `i ← i − 2^rmb(i)` down to 0.
    pub fn sum(&self, m: &mut Machine, i: usize) -> Result<u64> {
        self.check_index(i, true)?;
        let base = self.base as u64;
        let mut acc = 0;
        let mut idx = i as u64;
        while !m.w_eq(idx, 0) {
            let addr = m.w_add(base, idx);
            let f = m.load_word(addr)?;
            acc = m.w_add(acc, f);
            let neg = m.w_neg(idx);
            let low = m.w_and(idx, neg);
            idx = m.w_sub(idx, low);
        }
        Ok(m.w_and(acc, m.value_mask()))
    }

    /// Adds `delta` (a residue modulo `2^(w−1)`) to every `F[j]` on the path
    /// `j ← j + 2^rmb(j)` starting at `i`; indices above `N` end the walk.
    pub fn update(&self, m: &mut Machine, i: usize, delta: u64) -> Result<()> {
        self.check_index(i, false)?;
        let (base, cap, value_mask) = (self.base as u64, self.capacity as u64, m.value_mask());
        let delta = delta & value_mask;
        let mut idx = i as u64;
        while !m.w_lt(cap, idx) {
            let addr = m.w_add(base, idx);
            let f = m.load_word(addr)?;
            let f = m.w_add(f, delta);
            let f = m.w_and(f, value_mask);
            m.store_word(addr, f)?;
            let neg = m.w_neg(idx);
            let low = m.w_and(idx, neg);
            idx = m.w_add(idx, low);
        }
        Ok(())
    }

    /// `A[i] = sum(i) − sum(i−1)` modulo `2^(w−1)`.
    pub fn access(&self, m: &mut Machine, i: usize) -> Result<u64> {
        self.check_index(i, false)?;
        let hi = self.sum(m, i)?;
        let lo = self.sum(m, i - 1)?;
        let d = m.w_sub(hi, lo);
        Ok(m.w_and(d, m.value_mask()))
    }

    /// Smallest `i` with `sum(i) ≥ target`, by top-down descent over
    /// power-of-two strides. `None` when the total is below `target`.
    ///
    /// Assumes every `A[k]` is non-negative and the total stays below
    /// `2^(w−1)`; this is not checked.
    pub fn select(&self, m: &mut Machine, target: u64) -> Result<Option<usize>> {
        if target == 0 {
            return Err(Error::Domain("select(0) is undefined"));
        }
        let (base, cap) = (self.base as u64, self.capacity as u64);
        let mut pos = 0u64;
        let mut remaining = target;
        let mut step = cap;
        while !m.w_eq(step, 0) {
            let next = m.w_add(pos, step);
            if !m.w_lt(cap, next) {
                let addr = m.w_add(base, next);
                let f = m.load_word(addr)?;
                if m.w_lt(f, remaining) {
                    pos = next;
                    remaining = m.w_sub(remaining, f);
                }
            }
            step = m.w_shr(step, 1);
        }
        let found = pos as usize + 1;
        Ok((found <= self.len).then_some(found))
    }
}

/// A Fenwick array on a word-RAM machine of its own.
#[derive(Debug)]
pub struct FenwickTree {
    machine: Machine,
    array: FenwickArray,
}

impl FenwickTree {
    pub fn new(w: u32, values: &[u64]) -> Result<Self> {
        let words = values.len().max(1).next_power_of_two() + 1;
        let mut machine = Machine::new(MachineMode::Restricted, w, words)?;
        let array = FenwickArray::build_in_place(&mut machine, 0, values)?;
        Ok(FenwickTree { machine, array })
    }

    pub fn machine(&self) -> &Machine {
        &self.machine
    }

    pub fn machine_mut(&mut self) -> &mut Machine {
        &mut self.machine
    }

    pub fn array(&self) -> &FenwickArray {
        &self.array
    }

    pub fn len(&self) -> usize {
        self.array.len()
    }

    pub fn is_empty(&self) -> bool {
        self.array.is_empty()
    }

    pub fn slots(&self) -> &[u64] {
        self.array.slots(&self.machine)
    }

    pub fn sum(&mut self, i: usize) -> Result<u64> {
        self.array.sum(&mut self.machine, i)
    }

    pub fn update(&mut self, i: usize, delta: i64) -> Result<()> {
        let delta = residue(delta, self.machine.w());
        self.array.update(&mut self.machine, i, delta)
    }

    pub fn access(&mut self, i: usize) -> Result<u64> {
        self.array.access(&mut self.machine, i)
    }

    pub fn select(&mut self, target: u64) -> Result<Option<usize>> {
        self.array.select(&mut self.machine, target)
    }
}
