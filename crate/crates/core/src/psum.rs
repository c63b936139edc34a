//! In-place partial sums on the ultra-wide word RAM.
//!
//! The structure is a plain Fenwick array in machine memory plus a handful of
//! ultraword constants. `sum` and `update` never walk the Fenwick paths one
//! step at a time; instead the whole index sequence is computed inside one
//! ultraword:
//!
//! 1. broadcast `i` into the low `L` words and mask out the offsets: one
//!    power of two per word, at the bit positions that the sequential walk
//!    would clear (sum) or carry into (update);
//! 2. prefix-sum the offsets, keep the prefix at the offset positions, shift
//!    it up one word and subtract it from (sum) or add it to (update) the
//!    broadcast `i`, keeping only the words that hold a sequence element;
//! 3. translate to addresses and touch all of `F` with one scattered read
//!    (and one scattered write for update).
//!
//! Words that hold no sequence element are zero and therefore address the
//! pinned zero slot, so they contribute nothing to a sum and rewrite the zero
//! slot with zero during an update.
//!
//! With `L = ⌈log₂ N⌉ + 2` words, steps 1–3 cost `O(log L)` instructions on a
//! restricted machine (broadcast and prefix sum by doubling) and a constant
//! number on a multiplication machine.

use crate::error::{Error, Result};
use crate::fenwick::{self, residue, FenwickArray};
use crate::machine::{Machine, MachineMode, Ultraword};
use crate::uwops::TestBits;

/// How the raw sequence ultraword is reduced to its sequence words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SequenceMasking {
    /// Keep word 0 and the words just above each offset; zero the rest.
    #[default]
    Extract,
    /// Use the raw subtraction/addition result as is. Every word without an
    /// offset below it still holds `i`, so a sum reads `F[i]` several times.
    /// Only useful to demonstrate that failure.
    Literal,
}

/// Observes each intermediate ultraword of a pipeline, by row label.
pub type Observer<'a> = &'a mut dyn FnMut(&'static str, &Ultraword);

fn ignore(_: &'static str, _: &Ultraword) {}

/// Intermediate ultrawords of one sum or update pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub seq_len: usize,
    pub rows: Vec<(&'static str, Vec<u64>)>,
    /// Sequence elements in word order (including a terminal 0 for sums).
    pub sequence: Vec<u64>,
}

/// Per-structure constants, held in machine registers.
#[derive(Debug)]
struct Layout {
    seq_len: usize,
    masking: SequenceMasking,
    /// `M⟨j⟩ = 2^j` for `j = 0..=log₂ N`.
    sum_mask: Ultraword,
    /// `base` in every word.
    base_uw: Ultraword,
    /// `N` in words `0..L`.
    bound_uw: Ultraword,
}

enum Combine {
    Subtract,
    Add,
}

impl Layout {
    /// Steps 2 of both pipelines: prefix-sum the offsets, align them with the
    /// elements they produce, and combine with `I`. Returns the raw result
    /// and the test bits of the words that hold sequence elements.
    fn sequence_from_offsets(
        &self,
        m: &mut Machine,
        i_uw: &Ultraword,
        offsets: Ultraword,
        combine: Combine,
        obs: Observer<'_>,
    ) -> (Ultraword, TestBits) {
        let present = m.nonzero_mask(&offsets);
        let mut prefix = m.prefix_sum(&offsets, self.seq_len);
        drop(offsets);
        prefix = m.extract(&prefix, &present);
        obs("P", &prefix);
        let shifted = m.shift_words_left(&prefix, 1);
        drop(prefix);
        obs("P'", &shifted);
        let raw = match combine {
            Combine::Subtract => m.cw_sub(i_uw, &shifted),
            Combine::Add => m.cw_add(i_uw, &shifted),
        };
        drop(shifted);
        let above = m.test_bits_shift_left(&present, 1);
        drop(present);
        let first = m.word0_test_bit();
        let keep = m.test_bits_or(&first, &above);
        (raw, keep)
    }

    fn sum_offsets(&self, m: &mut Machine, i: u64, obs: Observer<'_>) -> (Ultraword, Ultraword) {
        let i_uw = m.broadcast(i, self.seq_len);
        obs("I", &i_uw);
        obs("M", &self.sum_mask);
        let offsets = m.uw_and(&i_uw, &self.sum_mask);
        obs("O", &offsets);
        (i_uw, offsets)
    }

    fn sum_sequence(&self, m: &mut Machine, i: u64, obs: Observer<'_>) -> (Ultraword, TestBits) {
        let (i_uw, offsets) = self.sum_offsets(m, i, obs);
        let (raw, keep) = self.sequence_from_offsets(m, &i_uw, offsets, Combine::Subtract, obs);
        drop(i_uw);
        let seq = match self.masking {
            SequenceMasking::Extract => {
                let seq = m.extract(&raw, &keep);
                drop(raw);
                seq
            }
            SequenceMasking::Literal => raw,
        };
        obs("S", &seq);
        obs("T", &keep);
        (seq, keep)
    }

    fn sum(&self, m: &mut Machine, i: u64, obs: Observer<'_>) -> Result<u64> {
        let (seq, keep) = self.sum_sequence(m, i, obs);
        drop(keep);
        let addrs = m.cw_add(&seq, &self.base_uw);
        drop(seq);
        let entries = m.scattered_read(&addrs)?;
        drop(addrs);
        obs("F'", &entries);
        let sums = m.prefix_sum(&entries, self.seq_len);
        drop(entries);
        Ok(m.uw_word(&sums, self.seq_len - 1))
    }

    fn update_offsets(
        &self,
        m: &mut Machine,
        i: u64,
        obs: Observer<'_>,
    ) -> Result<(Ultraword, Ultraword)> {
        let w = m.w() as u64;
        let i_uw = m.broadcast(i, self.seq_len);
        obs("I", &i_uw);
        let r = fenwick::rmb(m, i)? as u64;

        // zero bits of i at positions 0..=log₂ N ...
        let not_i = m.uw_not(&i_uw);
        let zeros = m.uw_and(&not_i, &self.sum_mask);
        drop(not_i);
        // ... strictly above rmb(i)
        let above_words = m.w_add(r, 1);
        let above_bits = m.w_mul(above_words, w);
        let ones = m.consts().all_ones.detached();
        let above = m.uw_shl(&ones, above_bits as usize);
        let carries = m.uw_and(&zeros, &above);
        drop((zeros, above));
        obs("Z", &carries);

        // plus 2^rmb(i) in word rmb(i)
        let low_bit = m.w_shl(1, r as u32);
        let mut low = m.uw_from_word(low_bit);
        let low_shift = m.w_mul(r, w);
        low = m.uw_shl(&low, low_shift as usize);
        let offsets = m.uw_or(&carries, &low);
        obs("O", &offsets);
        Ok((i_uw, offsets))
    }

    fn update_sequence(
        &self,
        m: &mut Machine,
        i: u64,
        obs: Observer<'_>,
    ) -> Result<(Ultraword, TestBits)> {
        let (i_uw, offsets) = self.update_offsets(m, i, obs)?;
        let (raw, keep) = self.sequence_from_offsets(m, &i_uw, offsets, Combine::Add, obs);
        drop(i_uw);
        obs("U'", &raw);
        let in_range = m.cw_ge(&self.bound_uw, &raw);
        let valid = match self.masking {
            SequenceMasking::Extract => m.test_bits_and(&keep, &in_range),
            SequenceMasking::Literal => in_range.clone(),
        };
        drop((keep, in_range));
        let seq = m.extract(&raw, &valid);
        drop(raw);
        obs("U", &seq);
        obs("V", &valid);
        Ok((seq, valid))
    }

    fn update(&self, m: &mut Machine, i: u64, delta: u64, obs: Observer<'_>) -> Result<()> {
        let (seq, valid) = self.update_sequence(m, i, obs)?;
        let addrs = m.cw_add(&seq, &self.base_uw);
        drop(seq);
        let entries = m.scattered_read(&addrs)?;
        obs("F'", &entries);
        let mut deltas = m.broadcast(delta, self.seq_len);
        deltas = m.extract(&deltas, &valid);
        drop(valid);
        obs("D", &deltas);
        let updated = m.cw_add(&entries, &deltas);
        drop((entries, deltas));
        obs("F''", &updated);
        m.scattered_write(&addrs, &updated)
    }
}

/// Partial sums over a Fenwick array, with sequences computed in ultrawords.
#[derive(Debug)]
pub struct PartialSumsUW {
    machine: Machine,
    array: FenwickArray,
    layout: Layout,
}

impl PartialSumsUW {
    /// Builds on a fresh machine with exactly enough memory, Fenwick array at address 0.
    pub fn new(mode: MachineMode, w: u32, values: &[u64]) -> Result<Self> {
        let words = values.len().max(1).next_power_of_two() + 1;
        Self::build(Machine::new(mode, w, words)?, 0, values)
    }

    /// Builds the Fenwick array at `base` on `machine` and precomputes the constants.
    pub fn build(machine: Machine, base: usize, values: &[u64]) -> Result<Self> {
        Self::build_with(machine, base, values, SequenceMasking::Extract)
    }

    pub fn build_with(
        mut machine: Machine,
        base: usize,
        values: &[u64],
        masking: SequenceMasking,
    ) -> Result<Self> {
        let w = machine.w() as usize;
        let capacity = values.len().max(1).next_power_of_two();
        let log_n = capacity.trailing_zeros() as usize;
        let seq_len = log_n + 2;
        if seq_len > w || log_n + 3 > w - 1 {
            return Err(Error::Config(format!(
                "capacity {capacity} needs {seq_len} sequence words and values up to 4N; \
                 w = {w} is too narrow"
            )));
        }
        let array = FenwickArray::build_in_place(&mut machine, base, values)?;
        let capacity = array.capacity() as u64;

        let diag: Vec<u64> = (0..=log_n).map(|j| 1u64 << j).collect();
        let layout = Layout {
            seq_len,
            masking,
            sum_mask: machine.constant(&diag)?,
            base_uw: machine.constant(&vec![base as u64; w])?,
            bound_uw: machine.constant(&vec![capacity; seq_len])?,
        };
        machine.reset_peak_registers();
        Ok(PartialSumsUW {
            machine,
            array,
            layout,
        })
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

    /// Sequence word budget `L = log₂ N + 2`.
    pub fn seq_len(&self) -> usize {
        self.layout.seq_len
    }

    /// `F[0..=N]` as stored.
    pub fn slots(&self) -> &[u64] {
        self.array.slots(&self.machine)
    }

    fn check_index(&self, i: usize, allow_zero: bool) -> Result<()> {
        if i > self.len() || (i == 0 && !allow_zero) {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// `O⟨j⟩ = 2^j` exactly where bit `j` of `i` is set.
    pub fn sum_offsets(&mut self, i: usize) -> Result<Ultraword> {
        self.check_index(i, false)?;
        let (_, offsets) = self
            .layout
            .sum_offsets(&mut self.machine, i as u64, &mut ignore);
        Ok(offsets)
    }

    /// The sum sequence of `i` in word order, every other word zero.
    pub fn sum_sequence(&mut self, i: usize) -> Result<Ultraword> {
        self.check_index(i, false)?;
        let (seq, _) = self
            .layout
            .sum_sequence(&mut self.machine, i as u64, &mut ignore);
        Ok(seq)
    }

    /// `A[1] + … + A[i]` modulo `2^(w−1)`.
    pub fn sum(&mut self, i: usize) -> Result<u64> {
        self.check_index(i, true)?;
        self.layout.sum(&mut self.machine, i as u64, &mut ignore)
    }

    /// `O⟨j⟩ = 2^j` for `j = rmb(i)` and for every zero bit of `i` above it, up to `log₂ N`.
    pub fn update_offsets(&mut self, i: usize) -> Result<Ultraword> {
        self.check_index(i, false)?;
        let (_, offsets) = self
            .layout
            .update_offsets(&mut self.machine, i as u64, &mut ignore)?;
        Ok(offsets)
    }

    /// The update sequence of `i` restricted to indices `≤ N`, and the test
    /// bits of the words holding it.
    pub fn update_sequence(&mut self, i: usize) -> Result<(Ultraword, TestBits)> {
        self.check_index(i, false)?;
        self.layout
            .update_sequence(&mut self.machine, i as u64, &mut ignore)
    }

    /// `A[i] += delta`, modulo `2^(w−1)`.
    pub fn update(&mut self, i: usize, delta: i64) -> Result<()> {
        let delta = residue(delta, self.machine.w());
        self.update_residue(i, delta)
    }

    /// `A[i] += delta` for a delta already reduced modulo `2^(w−1)`.
    pub fn update_residue(&mut self, i: usize, delta: u64) -> Result<()> {
        self.check_index(i, false)?;
        let delta = delta & self.machine.value_mask();
        self.layout
            .update(&mut self.machine, i as u64, delta, &mut ignore)
    }

    /// `A[i] = sum(i) − sum(i−1)` modulo `2^(w−1)`.
    pub fn access(&mut self, i: usize) -> Result<u64> {
        self.check_index(i, false)?;
        let hi = self.sum(i)?;
        let lo = self.sum(i - 1)?;
        let d = self.machine.w_sub(hi, lo);
        Ok(self.machine.w_and(d, self.machine.value_mask()))
    }

    /// Runs `sum(i)` and records every intermediate ultraword.
    pub fn trace_sum(&mut self, i: usize) -> Result<(u64, Trace)> {
        self.check_index(i, false)?;
        let mut rows = Vec::new();
        let mut keep = Vec::new();
        let total = self
            .layout
            .sum(&mut self.machine, i as u64, &mut |label, x| {
                if label == "T" {
                    keep = x.words().to_vec();
                } else {
                    rows.push((label, x.words().to_vec()));
                }
            })?;
        let seq = &rows
            .iter()
            .find(|(l, _)| *l == "S")
            .expect("S is observed")
            .1;
        let sequence = selected(seq, &keep);
        Ok((
            total,
            Trace {
                seq_len: self.seq_len(),
                rows,
                sequence,
            },
        ))
    }

    /// Runs `update(i, delta)` and records every intermediate ultraword.
    pub fn trace_update(&mut self, i: usize, delta: i64) -> Result<Trace> {
        self.check_index(i, false)?;
        let delta = residue(delta, self.machine.w());
        let mut rows = Vec::new();
        let mut valid = Vec::new();
        self.layout
            .update(&mut self.machine, i as u64, delta, &mut |label, x| {
                if label == "V" {
                    valid = x.words().to_vec();
                }
                rows.push((label, x.words().to_vec()));
            })?;
        let seq = &rows
            .iter()
            .find(|(l, _)| *l == "U")
            .expect("U is observed")
            .1;
        let sequence = selected(seq, &valid);
        Ok(Trace {
            seq_len: self.seq_len(),
            rows,
            sequence,
        })
    }
}

fn selected(words: &[u64], test_bits: &[u64]) -> Vec<u64> {
    words
        .iter()
        .zip(test_bits)
        .filter(|(_, &t)| t != 0)
        .map(|(&v, _)| v)
        .collect()
}
