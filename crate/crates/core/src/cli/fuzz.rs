//! Differential fuzzing: ultraword structure vs word-RAM Fenwick tree vs a flat array.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fenwick::{residue, FenwickTree};
use crate::machine::{Machine, MachineMode};
use crate::psum::{PartialSumsUW, SequenceMasking};
use crate::sweep::Execution;

#[derive(Debug, Clone)]
pub struct FuzzConfig {
    pub n: usize,
    pub ops: usize,
    pub seed: u64,
    pub modes: Vec<MachineMode>,
    pub w: u32,
    /// Independent runs with seeds `seed, seed+1, …`.
    pub shards: usize,
    pub masking: SequenceMasking,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub mode: MachineMode,
    pub seed: u64,
    /// 0-based index of the failing operation; `ops` when only the final
    /// memory comparison failed.
    pub op_index: usize,
    pub detail: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "divergence: mode={} seed={} op={}: {}",
            self.mode, self.seed, self.op_index, self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FuzzReport {
    Pass { runs: usize, ops: usize },
    Fail(Divergence),
}

/// The flat-array reference: `A[1..=n]` as residues modulo `2^(w−1)`.
#[derive(Debug, Clone)]
pub struct NaiveOracle {
    values: Vec<u64>,
    mask: u64,
}

impl NaiveOracle {
    pub fn new(w: u32, values: &[u64]) -> Self {
        NaiveOracle {
            values: values.to_vec(),
            mask: (1u64 << (w - 1)) - 1,
        }
    }

    pub fn sum(&self, i: usize) -> u64 {
        self.values[..i]
            .iter()
            .fold(0u64, |acc, &v| acc.wrapping_add(v) & self.mask)
    }

    pub fn access(&self, i: usize) -> u64 {
        self.values[i - 1]
    }

    pub fn update(&mut self, i: usize, delta: u64) {
        self.values[i - 1] = self.values[i - 1].wrapping_add(delta) & self.mask;
    }
}

/// Describes repeated non-zero sequence words, which make one scattered read
/// fetch the same slot several times.
pub fn duplicate_reads(ps: &mut PartialSumsUW, i: usize) -> Option<String> {
    let seq = ps.sum_sequence(i).ok()?;
    let mut words: Vec<u64> = seq.words().iter().copied().filter(|&v| v != 0).collect();
    words.sort_unstable();
    let dup = words.windows(2).find(|p| p[0] == p[1])?[0];
    let count = words.iter().filter(|&&v| v == dup).count();
    Some(format!(
        "duplicate read: F[{dup}] fetched {count} times by one scattered read"
    ))
}

/// Appends the first duplicate-read diagnosis among the sums `indices` depend on.
fn explain(ps: &mut PartialSumsUW, detail: String, indices: &[usize]) -> String {
    match indices
        .iter()
        .filter(|&&i| i > 0)
        .find_map(|&i| duplicate_reads(ps, i))
    {
        Some(d) => format!("{detail}; {d}"),
        None => detail,
    }
}

fn run_one(cfg: &FuzzConfig, mode: MachineMode, seed: u64) -> Result<Option<Divergence>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let value_mask = (1u64 << (cfg.w - 1)) - 1;
    let values: Vec<u64> = (0..cfg.n)
        .map(|_| rng.random::<u64>() & value_mask)
        .collect();

    let words = cfg.n.next_power_of_two() + 1;
    let mut ps =
        PartialSumsUW::build_with(Machine::new(mode, cfg.w, words)?, 0, &values, cfg.masking)?;
    let mut fw = FenwickTree::new(cfg.w, &values)?;
    let mut oracle = NaiveOracle::new(cfg.w, &values);

    let diverged = |op_index, detail: String| {
        Ok(Some(Divergence {
            mode,
            seed,
            op_index,
            detail,
        }))
    };

    for k in 0..cfg.ops {
        match rng.random_range(0..3) {
            0 => {
                let i = rng.random_range(0..=cfg.n);
                let got = ps.sum(i);
                let (base, expect) = (fw.sum(i)?, oracle.sum(i));
                if got.as_ref().ok() != Some(&expect) || base != expect {
                    let detail = format!("sum({i}): uwram={got:?} fenwick={base} oracle={expect}");
                    return diverged(k, explain(&mut ps, detail, &[i]));
                }
            }
            1 => {
                let i = rng.random_range(1..=cfg.n);
                let got = ps.access(i);
                let (base, expect) = (fw.access(i)?, oracle.access(i));
                if got.as_ref().ok() != Some(&expect) || base != expect {
                    let detail =
                        format!("access({i}): uwram={got:?} fenwick={base} oracle={expect}");
                    return diverged(k, explain(&mut ps, detail, &[i, i - 1]));
                }
            }
            _ => {
                let i = rng.random_range(1..=cfg.n);
                let delta: i64 = if rng.random_bool(0.5) {
                    rng.random_range(-1000..=1000)
                } else {
                    rng.random()
                };
                if let Err(e) = ps.update(i, delta) {
                    return diverged(k, format!("update({i}, {delta}): uwram error {e}"));
                }
                fw.update(i, delta)?;
                oracle.update(i, residue(delta, cfg.w));
            }
        }
    }
    if ps.slots() != fw.slots() {
        let first = (0..ps.slots().len())
            .find(|&j| ps.slots()[j] != fw.slots()[j])
            .expect("slices differ");
        return diverged(
            cfg.ops,
            format!(
                "final memory differs at F[{first}]: uwram={} fenwick={}",
                ps.slots()[first],
                fw.slots()[first]
            ),
        );
    }
    Ok(None)
}

/// Runs every `(mode, shard)` combination, each on its own machines.
pub fn run(cfg: &FuzzConfig, exec: Execution) -> Result<FuzzReport> {
    let jobs: Vec<(MachineMode, u64)> = cfg
        .modes
        .iter()
        .flat_map(|&mode| (0..cfg.shards as u64).map(move |s| (mode, cfg.seed.wrapping_add(s))))
        .collect();
    let results = exec.map(&jobs, |&(mode, seed)| run_one(cfg, mode, seed));
    for r in results {
        if let Some(d) = r? {
            return Ok(FuzzReport::Fail(d));
        }
    }
    Ok(FuzzReport::Pass {
        runs: jobs.len(),
        ops: cfg.ops * jobs.len(),
    })
}
