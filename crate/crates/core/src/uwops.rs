//! Componentwise word-level parallelism built from machine instructions.
//!
//! Each word of an ultraword reserves its top bit (bit `w−1`) as a test bit.
//! Operands of the componentwise operations keep their test bits clear, so
//! carries and borrows never leak into neighbouring words. Every operation
//! here is a short, fixed sequence of machine instructions and is charged
//! exactly as issued.

use std::ops::Deref;

use crate::machine::{Machine, MachineMode, Ultraword};

/// Masks precomputed once per machine and held in registers.
#[derive(Debug)]
pub struct Constants {
    /// `(0^(w−1) 1)^w`
    pub low_ones: Ultraword,
    /// `(0 1^(w−1))^w`
    pub clear_test: Ultraword,
    /// `(1 0^(w−1))^w`
    pub test_only: Ultraword,
    /// Word `j` holds `2^j` for `j < w−1`.
    pub diag: Ultraword,
    pub all_ones: Ultraword,
    /// Multiplication machines only: masks splitting each word into a low
    /// half and the remaining value bits, see [`Machine::prefix_sum`].
    split: Option<SplitMasks>,
}

#[derive(Debug)]
struct SplitMasks {
    shift: u32,
    low: Ultraword,
    high: Ultraword,
}

impl Constants {
    pub(crate) fn build(m: &Machine) -> Self {
        let w = m.w() as usize;
        let test = 1u64 << (w - 1);
        let fill = |v: u64| m.constant(&vec![v; w]).expect("constant fits the width");
        let diag: Vec<u64> = (0..w - 1).map(|j| 1u64 << j).collect();
        let split = (m.mode() == MachineMode::Multiplication).then(|| {
            let shift = m.w() / 2;
            SplitMasks {
                shift,
                low: fill((1u64 << shift) - 1),
                high: fill(m.value_mask() & !((1u64 << shift) - 1)),
            }
        });
        Constants {
            low_ones: fill(1),
            clear_test: fill(test - 1),
            test_only: fill(test),
            diag: m.constant(&diag).expect("diagonal fits the width"),
            all_ones: fill(m.word_mask()),
            split,
        }
    }
}

/// An ultraword whose words are each either 0 or `2^(w−1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestBits(Ultraword);

impl TestBits {
    /// Wraps `x` if only test bits are set.
    pub fn new(x: Ultraword) -> Option<Self> {
        let value = (1u64 << (x.w() - 1)) - 1;
        x.words()
            .iter()
            .all(|&v| v & value == 0)
            .then_some(TestBits(x))
    }

    /// Word indices whose test bit is set.
    pub fn selected(&self) -> Vec<usize> {
        self.0
            .words()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn into_inner(self) -> Ultraword {
        self.0
    }
}

impl Deref for TestBits {
    type Target = Ultraword;

    fn deref(&self) -> &Ultraword {
        &self.0
    }
}

/// Doubling rounds needed to cover `len` words: `⌈log₂ len⌉`.
pub fn rounds(len: usize) -> u32 {
    len.max(1).next_power_of_two().trailing_zeros()
}

impl Machine {
    fn test_bits_clear_debug(&self, x: &Ultraword) {
        debug_assert!(x.test_bits_clear(), "operand has test bits set: {x:?}");
    }

    /// `result⟨j⟩ = (x⟨j⟩ + y⟨j⟩) mod 2^(w−1)`. Two instructions.
    pub fn cw_add(&mut self, x: &Ultraword, y: &Ultraword) -> Ultraword {
        self.test_bits_clear_debug(x);
        self.test_bits_clear_debug(y);
        let sum = self.uw_add(x, y);
        let mask = self.consts().clear_test.detached();
        self.uw_and(&sum, &mask)
    }

    /// [`Machine::cw_add`] that releases both operands' registers before the
    /// final mask, so the sum never needs more than three live temporaries.
    fn cw_add_consuming(&mut self, x: Ultraword, y: Ultraword) -> Ultraword {
        self.test_bits_clear_debug(&x);
        self.test_bits_clear_debug(&y);
        let sum = self.uw_add(&x, &y);
        drop((x, y));
        let mask = self.consts().clear_test.detached();
        self.uw_and(&sum, &mask)
    }

    /// `result⟨j⟩ = (x⟨j⟩ − y⟨j⟩) mod 2^(w−1)`. Three instructions.
    pub fn cw_sub(&mut self, x: &Ultraword, y: &Ultraword) -> Ultraword {
        let raw = self.guarded_sub(x, y);
        let mask = self.consts().clear_test.detached();
        self.uw_and(&raw, &mask)
    }

    /// `(x | TEST) − y`: per word `2^(w−1) + x⟨j⟩ − y⟨j⟩`, which never borrows.
    fn guarded_sub(&mut self, x: &Ultraword, y: &Ultraword) -> Ultraword {
        self.test_bits_clear_debug(x);
        self.test_bits_clear_debug(y);
        let test = self.consts().test_only.detached();
        let guarded = self.uw_or(x, &test);
        self.uw_sub(&guarded, y)
    }

    /// Test bit `j` set iff `x⟨j⟩ ≥ y⟨j⟩`. Three instructions.
    pub fn cw_ge(&mut self, x: &Ultraword, y: &Ultraword) -> TestBits {
        let raw = self.guarded_sub(x, y);
        let test = self.consts().test_only.detached();
        TestBits(self.uw_and(&raw, &test))
    }

    /// Keeps `x⟨j⟩` where test bit `j` of `t` is set and zeroes the other words.
    /// Three instructions.
    pub fn extract(&mut self, x: &Ultraword, t: &TestBits) -> Ultraword {
        self.test_bits_clear_debug(x);
        // T − (T >> (w−1)) turns each set test bit into 0 1^(w−1) without borrowing
        let low = self.uw_shr(t, self.w() as usize - 1);
        let mask = self.uw_sub(t, &low);
        drop(low);
        self.uw_and(x, &mask)
    }

    /// Test bit `j` set iff `x⟨j⟩ ≠ 0`. Three instructions.
    pub fn nonzero_mask(&mut self, x: &Ultraword) -> TestBits {
        let ones = self.consts().low_ones.detached();
        self.cw_ge(x, &ones)
    }

    pub fn test_bits_or(&mut self, a: &TestBits, b: &TestBits) -> TestBits {
        TestBits(self.uw_or(a, b))
    }

    pub fn test_bits_and(&mut self, a: &TestBits, b: &TestBits) -> TestBits {
        TestBits(self.uw_and(a, b))
    }

    pub fn test_bits_shift_left(&mut self, t: &TestBits, k: usize) -> TestBits {
        TestBits(self.shift_words_left(t, k))
    }

    /// The test bit of word 0 alone. One instruction.
    pub fn word0_test_bit(&mut self) -> TestBits {
        TestBits(self.uw_from_word(1 << (self.w() - 1)))
    }

    /// `result⟨j⟩ = x⟨j−k⟩` with zero fill. One instruction.
    pub fn shift_words_left(&mut self, x: &Ultraword, k: usize) -> Ultraword {
        assert!(k <= self.w() as usize);
        self.uw_shl(x, k * self.w() as usize)
    }

    /// `result⟨j⟩ = x⟨j+k⟩` with zero fill. One instruction.
    pub fn shift_words_right(&mut self, x: &Ultraword, k: usize) -> Ultraword {
        assert!(k <= self.w() as usize);
        self.uw_shr(x, k * self.w() as usize)
    }

    /// All-ones in words `0..len`, zero above. One instruction.
    pub fn length_mask(&mut self, len: usize) -> Ultraword {
        let w = self.w() as usize;
        assert!(len <= w);
        let ones = self.consts().all_ones.detached();
        self.uw_shr(&ones, (w - len) * w)
    }

    /// Zeroes every word at index `len` or above. Two instructions.
    pub fn truncate(&mut self, x: &Ultraword, len: usize) -> Ultraword {
        let mask = self.length_mask(len);
        self.uw_and(x, &mask)
    }

    /// `len` copies of `v` in words `0..len`.
    ///
    /// Restricted: `2·⌈log₂ len⌉ + 3` instructions (doubling by shift and or).
    /// Multiplication: 4 instructions (one multiplication by `(0^(w−1) 1)^w`).
    pub fn broadcast(&mut self, v: u64, len: usize) -> Ultraword {
        debug_assert!(
            v <= self.value_mask(),
            "broadcast value {v} uses the test bit"
        );
        assert!(len <= self.w() as usize);
        let mut acc = self.uw_from_word(v);
        match self.mode() {
            MachineMode::Restricted => {
                for r in 0..rounds(len) {
                    let shifted = self.shift_words_left(&acc, 1 << r);
                    acc = self.uw_or(&acc, &shifted);
                }
            }
            MachineMode::Multiplication => {
                let ones = self.consts().low_ones.detached();
                acc = self.uw_mul(&acc, &ones).expect("multiplication mode");
            }
        }
        self.truncate(&acc, len)
    }

    /// Inclusive prefix sum over words `0..len`, modulo `2^(w−1)` per word.
    ///
    /// `x` must have length `len` with test bits clear. Restricted:
    /// shift-and-add scan, `3·⌈log₂ len⌉ + 2` instructions. Multiplication:
    /// multiply by `(0^(w−1) 1)^w`, 11 instructions. The multiplication route
    /// sums the low and high halves of each word separately so no partial sum
    /// can carry into the next word, which keeps both routes bit-identical
    /// even when the true prefix sums exceed a word.
    pub fn prefix_sum(&mut self, x: &Ultraword, len: usize) -> Ultraword {
        self.test_bits_clear_debug(x);
        debug_assert!(x.has_length(len), "{x:?} longer than {len}");
        match self.mode() {
            MachineMode::Restricted => {
                let mut acc: Option<Ultraword> = None;
                for r in 0..rounds(len) {
                    let cur = acc.as_ref().unwrap_or(x);
                    let shifted = self.shift_words_left(cur, 1 << r);
                    acc = Some(match acc {
                        Some(a) => self.cw_add_consuming(a, shifted),
                        None => self.cw_add(x, &shifted),
                    });
                }
                self.truncate(acc.as_ref().unwrap_or(x), len)
            }
            MachineMode::Multiplication => {
                let split = self
                    .consts()
                    .split
                    .as_ref()
                    .expect("multiplication constants");
                let (shift, low_mask, high_mask) = (
                    split.shift as usize,
                    split.low.detached(),
                    split.high.detached(),
                );
                let ones = self.consts().low_ones.detached();

                let low = self.uw_and(x, &low_mask);
                let low_sums = self.uw_mul(&low, &ones).expect("multiplication mode");
                drop(low);

                let mut high = self.uw_and(x, &high_mask);
                high = self.uw_shr(&high, shift);
                let mut high_sums = self.uw_mul(&high, &ones).expect("multiplication mode");
                drop(high);
                // spilled bits land below `shift` in the next word; the mask drops them
                high_sums = self.uw_shl(&high_sums, shift);
                high_sums = self.uw_and(&high_sums, &high_mask);

                let total = self.cw_add_consuming(low_sums, high_sums);
                self.truncate(&total, len)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uw(words: &[u64]) -> Ultraword {
        Ultraword::from_words(8, words).unwrap()
    }

    fn machines() -> [Machine; 2] {
        MachineMode::ALL.map(|mode| Machine::new(mode, 8, 4).unwrap())
    }

    #[test]
    fn constants_have_the_expected_patterns() {
        let m = Machine::new(MachineMode::Restricted, 8, 0).unwrap();
        let c = m.consts();
        assert_eq!(c.low_ones.words(), &[1; 8]);
        assert_eq!(c.clear_test.words(), &[0x7f; 8]);
        assert_eq!(c.test_only.words(), &[0x80; 8]);
        assert_eq!(c.diag.words(), &[1, 2, 4, 8, 16, 32, 64, 0]);
        assert_eq!(c.all_ones.words(), &[0xff; 8]);
    }

    #[test]
    fn componentwise_add_and_sub() {
        for mut m in machines() {
            assert_eq!(m.cw_add(&uw(&[3, 1]), &uw(&[2, 2])), uw(&[5, 3]));
            assert_eq!(m.cw_add(&uw(&[127]), &uw(&[1])), uw(&[0]));
            assert_eq!(m.cw_sub(&uw(&[13, 13]), &uw(&[0, 1])), uw(&[13, 12]));
            assert_eq!(m.cw_sub(&uw(&[0]), &uw(&[1])), uw(&[127]));
        }
    }

    #[test]
    fn comparison_sets_test_bits() {
        let mut m = Machine::new(MachineMode::Restricted, 8, 0).unwrap();
        let before = m.counters().total();
        let t = m.cw_ge(&uw(&[5, 2]), &uw(&[3, 7]));
        assert_eq!(m.counters().total() - before, 3);
        assert_eq!(t.selected()[0], 0);
        assert_eq!(t.word(1), 0);
        assert_eq!(m.cw_ge(&uw(&[4]), &uw(&[4])).word(0), 0x80);
        assert_eq!(m.cw_ge(&uw(&[]), &uw(&[])).selected().len(), 8);
    }

    #[test]
    fn extraction() {
        let mut m = Machine::new(MachineMode::Restricted, 8, 0).unwrap();
        let x = uw(&[9, 7, 5]);
        let t = TestBits::new(uw(&[0x80, 0, 0x80])).unwrap();
        assert_eq!(m.extract(&x, &t), uw(&[9, 0, 5]));
        let all = TestBits::new(uw(&[0x80; 8])).unwrap();
        assert_eq!(m.extract(&x, &all), x);
        let none = TestBits::new(uw(&[])).unwrap();
        assert_eq!(m.extract(&x, &none), uw(&[]));
        assert!(TestBits::new(uw(&[1])).is_none());
    }

    #[test]
    fn nonzero_masks() {
        let mut m = Machine::new(MachineMode::Restricted, 8, 0).unwrap();
        assert_eq!(m.nonzero_mask(&uw(&[0, 5, 0, 1])).selected(), vec![1, 3]);
        assert!(m.nonzero_mask(&uw(&[])).selected().is_empty());
        let b = m.broadcast(1, 3);
        assert_eq!(m.nonzero_mask(&b).selected(), vec![0, 1, 2]);
    }

    #[test]
    fn broadcast_examples() {
        for mut m in machines() {
            assert_eq!(m.broadcast(13, 6), uw(&[13; 6]));
            assert_eq!(m.broadcast(0, 5), uw(&[]));
            assert_eq!(m.broadcast(5, 1), uw(&[5]));
            assert_eq!(m.broadcast(127, 8), uw(&[127; 8]));
        }
    }

    #[test]
    fn prefix_sum_examples() {
        for mut m in machines() {
            assert_eq!(m.prefix_sum(&uw(&[1, 0, 4, 8]), 4), uw(&[1, 1, 5, 13]));
            assert_eq!(m.prefix_sum(&uw(&[]), 8), uw(&[]));
            // wraps mod 2^7 identically in both modes
            assert_eq!(m.prefix_sum(&uw(&[100, 100, 100]), 3), uw(&[100, 72, 44]));
        }
    }

    #[test]
    fn word_shifts() {
        let mut m = Machine::new(MachineMode::Restricted, 8, 0).unwrap();
        assert_eq!(m.shift_words_left(&uw(&[1, 5, 13]), 1), uw(&[0, 1, 5, 13]));
        let x = uw(&[1, 2]);
        assert_eq!(m.shift_words_left(&x, 0), x);
        assert_eq!(m.shift_words_right(&x, 8), uw(&[]));
    }

    #[test]
    fn round_counts() {
        assert_eq!(
            (0..=9).map(rounds).collect::<Vec<_>>(),
            vec![0, 0, 1, 2, 2, 3, 3, 3, 3, 4]
        );
    }
}
