use std::fmt;

use super::registers::RegisterSlot;
use crate::error::{Error, Result};

/// Largest supported word width, in bits.
pub const MAX_W: usize = 64;
/// Smallest supported word width, in bits.
pub const MIN_W: usize = 8;

/// A `w²`-bit value viewed as `w` words of `w` bits each.
///
/// Word `j` occupies bits `j·w .. (j+1)·w` of the integer view, so word 0 is
/// the rightmost word. Ultrawords returned by a [`Machine`](super::Machine)
/// occupy one of its registers until dropped; values built directly with
/// [`Ultraword::from_words`] are plain data and do not.
pub struct Ultraword {
    w: u32,
    words: [u64; MAX_W],
    slot: Option<RegisterSlot>,
}

pub(crate) fn word_mask(w: u32) -> u64 {
    if w == 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

impl Ultraword {
    pub(crate) fn raw(w: u32, words: [u64; MAX_W]) -> Self {
        Ultraword {
            w,
            words,
            slot: None,
        }
    }

    pub(crate) fn with_slot(mut self, slot: RegisterSlot) -> Self {
        self.slot = Some(slot);
        self
    }

    pub(crate) fn buf(&self) -> &[u64; MAX_W] {
        &self.words
    }

    /// The all-zero ultraword for word width `w`.
    pub fn zero(w: u32) -> Self {
        check_width(w).expect("unsupported word width");
        Self::raw(w, [0; MAX_W])
    }

    /// Builds an ultraword from its low words (word 0 first); missing words are zero.
    pub fn from_words(w: u32, words: &[u64]) -> Result<Self> {
        check_width(w)?;
        if words.len() > w as usize {
            return Err(Error::InvalidInput(format!(
                "{} words given, an ultraword holds {w}",
                words.len()
            )));
        }
        let mask = word_mask(w);
        let mut buf = [0; MAX_W];
        for (j, &v) in words.iter().enumerate() {
            if v & !mask != 0 {
                return Err(Error::InvalidInput(format!(
                    "word {j} = {v:#x} does not fit in {w} bits"
                )));
            }
            buf[j] = v;
        }
        Ok(Self::raw(w, buf))
    }

    /// Builds an ultraword from the little-endian 64-bit limbs of its `w²`-bit integer value.
    /// Bits above `w²` are ignored.
    pub fn from_limbs(w: u32, limbs: &[u64]) -> Result<Self> {
        check_width(w)?;
        let mut buf = [0u64; MAX_W];
        let total = (w * w) as usize;
        for pos in 0..total.min(limbs.len() * 64) {
            if limbs[pos / 64] >> (pos % 64) & 1 == 1 {
                buf[pos / w as usize] |= 1 << (pos % w as usize);
            }
        }
        Ok(Self::raw(w, buf))
    }

    /// The `w²`-bit integer value as little-endian 64-bit limbs.
    pub fn to_limbs(&self) -> Vec<u64> {
        let total = (self.w * self.w) as usize;
        let mut limbs = vec![0u64; total.div_ceil(64)];
        for pos in 0..total {
            if self.bit(pos) {
                limbs[pos / 64] |= 1 << (pos % 64);
            }
        }
        limbs
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    pub fn words(&self) -> &[u64] {
        &self.words[..self.w as usize]
    }

    /// Word `j`, or 0 when `j ≥ w`.
    pub fn word(&self, j: usize) -> u64 {
        if j < self.w as usize {
            self.words[j]
        } else {
            0
        }
    }

    /// Bit `pos` of the integer view.
    pub fn bit(&self, pos: usize) -> bool {
        let w = self.w as usize;
        pos < w * w && self.words[pos / w] >> (pos % w) & 1 == 1
    }

    /// True when every word at index `len` or above is zero.
    pub fn has_length(&self, len: usize) -> bool {
        self.words().iter().skip(len).all(|&v| v == 0)
    }

    /// True when no word has its test bit (bit `w−1`) set.
    pub fn test_bits_clear(&self) -> bool {
        let test = 1u64 << (self.w - 1);
        self.words().iter().all(|&v| v & test == 0)
    }

    /// Whether this value currently occupies a machine register.
    pub fn is_register(&self) -> bool {
        self.slot.is_some()
    }

    /// A plain copy of the value that does not occupy a register.
    pub fn detached(&self) -> Self {
        Self::raw(self.w, self.words)
    }
}

pub(crate) fn check_width(w: u32) -> Result<()> {
    if (MIN_W as u32..=MAX_W as u32).contains(&w) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "word width {w} outside {MIN_W}..={MAX_W}"
        )))
    }
}

impl Clone for Ultraword {
    fn clone(&self) -> Self {
        Ultraword {
            w: self.w,
            words: self.words,
            slot: self.slot.clone(),
        }
    }
}

impl PartialEq for Ultraword {
    fn eq(&self, other: &Self) -> bool {
        self.w == other.w && self.words == other.words
    }
}

impl Eq for Ultraword {}

impl fmt::Debug for Ultraword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let top = self
            .words()
            .iter()
            .rposition(|&v| v != 0)
            .map_or(1, |j| j + 1);
        write!(f, "Ultraword(w={}, {:?})", self.w, &self.words[..top])
    }
}
