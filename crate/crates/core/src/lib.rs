//! A simulator for the ultra-wide word RAM and an in-place partial sums
//! structure that runs Fenwick-tree operations in `O(log log n)` ultraword
//! instructions (`O(1)` with ultraword multiplication).
//!
//! - [`machine`]: word and ultraword instructions, scattered memory access,
//!   instruction counters and register tracking.
//! - [`uwops`]: componentwise arithmetic, comparison, extraction, broadcast
//!   and prefix sums on top of the machine instructions.
//! - [`fenwick`]: the sequential word-RAM Fenwick tree (baseline and co-oracle).
//! - [`psum`]: the ultraword-parallel partial sums structure.
//! - [`cli`]: demo traces, differential fuzzing and instruction-count benches.

pub mod cli;
pub mod error;
pub mod fenwick;
pub mod machine;
pub mod psum;
pub mod sweep;
pub mod uwops;

pub use error::{Error, Result};
pub use fenwick::{FenwickArray, FenwickTree};
pub use machine::{CostCounter, Machine, MachineMode, Ultraword};
pub use psum::PartialSumsUW;
