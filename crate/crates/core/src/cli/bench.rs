//! Instruction-count measurements for `sum` and `update`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::machine::MachineMode;
use crate::psum::PartialSumsUW;
use crate::sweep::Execution;

/// Sizes up to this bound are measured at every index; larger ones at a sample.
pub const EXHAUSTIVE_LIMIT: usize = 1024;
pub const SAMPLE_SIZE: usize = 1024;
const CHUNK: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Sum,
    Update,
}

/// One CSV row: worst case over the sampled indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BenchRecord {
    pub mode: &'static str,
    pub w: u32,
    pub n: usize,
    pub op: Op,
    pub isa_instructions: u64,
    pub scattered_reads: u64,
    pub scattered_writes: u64,
    pub peak_uw_registers: usize,
}

pub const CSV_HEADER: &str =
    "mode,w,n,op,isa_instructions,scattered_reads,scattered_writes,peak_uw_registers";

/// Min/max of every measured quantity over the sampled indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpStats {
    pub samples: usize,
    pub isa_min: u64,
    pub isa_max: u64,
    pub reads_min: u64,
    pub reads_max: u64,
    pub writes_min: u64,
    pub writes_max: u64,
    pub uw_mul_max: u64,
    pub peak_registers: usize,
}

impl OpStats {
    fn single(c: crate::machine::CostCounter, peak: usize) -> Self {
        OpStats {
            samples: 1,
            isa_min: c.total(),
            isa_max: c.total(),
            reads_min: c.scattered_reads,
            reads_max: c.scattered_reads,
            writes_min: c.scattered_writes,
            writes_max: c.scattered_writes,
            uw_mul_max: c.uw_mul_ops,
            peak_registers: peak,
        }
    }

    fn merge(self, o: OpStats) -> OpStats {
        OpStats {
            samples: self.samples + o.samples,
            isa_min: self.isa_min.min(o.isa_min),
            isa_max: self.isa_max.max(o.isa_max),
            reads_min: self.reads_min.min(o.reads_min),
            reads_max: self.reads_max.max(o.reads_max),
            writes_min: self.writes_min.min(o.writes_min),
            writes_max: self.writes_max.max(o.writes_max),
            uw_mul_max: self.uw_mul_max.max(o.uw_mul_max),
            peak_registers: self.peak_registers.max(o.peak_registers),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Measurement {
    pub mode: MachineMode,
    pub w: u32,
    pub n: usize,
    pub sum: OpStats,
    pub update: OpStats,
}

impl Measurement {
    pub fn records(&self) -> [BenchRecord; 2] {
        let row = |op, s: &OpStats| BenchRecord {
            mode: self.mode.name(),
            w: self.w,
            n: self.n,
            op,
            isa_instructions: s.isa_max,
            scattered_reads: s.reads_max,
            scattered_writes: s.writes_max,
            peak_uw_registers: s.peak_registers,
        };
        [row(Op::Sum, &self.sum), row(Op::Update, &self.update)]
    }
}

/// Indices measured for size `n`: all of `1..=n` up to [`EXHAUSTIVE_LIMIT`],
/// otherwise [`SAMPLE_SIZE`] seeded draws.
pub fn sample_indices(n: usize, seed: u64) -> Vec<usize> {
    if n <= EXHAUSTIVE_LIMIT {
        return (1..=n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).rotate_left(32));
    (0..SAMPLE_SIZE).map(|_| rng.random_range(1..=n)).collect()
}

fn input_values(n: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ n as u64);
    (0..n).map(|_| rng.random_range(0..1000)).collect()
}

fn measure_chunk(
    mode: MachineMode,
    w: u32,
    n: usize,
    seed: u64,
    indices: &[usize],
) -> Result<(OpStats, OpStats)> {
    let mut ps = PartialSumsUW::new(mode, w, &input_values(n, seed))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ indices[0] as u64);
    let mut sum: Option<OpStats> = None;
    let mut update: Option<OpStats> = None;
    for &i in indices {
        let delta = rng.random_range(-1000..=1000);
        for op in [Op::Sum, Op::Update] {
            let m = ps.machine_mut();
            m.reset_counters();
            m.reset_peak_registers();
            match op {
                Op::Sum => drop(ps.sum(i)?),
                Op::Update => ps.update(i, delta)?,
            }
            let m = ps.machine();
            let s = OpStats::single(m.counters(), m.peak_registers());
            let slot = if op == Op::Sum { &mut sum } else { &mut update };
            *slot = Some(slot.map_or(s, |acc| acc.merge(s)));
        }
    }
    Ok((
        sum.expect("non-empty chunk"),
        update.expect("non-empty chunk"),
    ))
}

/// Measures every `(mode, n)` pair. Work is split into independent chunks of
/// indices, each on its own machine, so the result does not depend on `exec`.
pub fn measure(
    modes: &[MachineMode],
    w: u32,
    sizes: &[usize],
    seed: u64,
    exec: Execution,
) -> Result<Vec<Measurement>> {
    let mut jobs = Vec::new();
    for (slot, (&mode, &n)) in modes
        .iter()
        .flat_map(|m| sizes.iter().map(move |n| (m, n)))
        .enumerate()
    {
        for chunk in sample_indices(n, seed).chunks(CHUNK) {
            jobs.push((slot, mode, n, chunk.to_vec()));
        }
    }
    let results = exec.map(&jobs, |(slot, mode, n, chunk)| {
        measure_chunk(*mode, w, *n, seed, chunk).map(|r| (*slot, *mode, *n, r))
    });

    let mut out: Vec<Measurement> = Vec::new();
    for r in results {
        let (slot, mode, n, (sum, update)) = r?;
        if let Some(m) = out.get_mut(slot) {
            m.sum = m.sum.merge(sum);
            m.update = m.update.merge(update);
        } else {
            out.push(Measurement {
                mode,
                w,
                n,
                sum,
                update,
            });
        }
    }
    Ok(out)
}

pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    if records.is_empty() {
        writer.write_record(CSV_HEADER.split(','))?;
    }
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

/// Right-aligned markdown table of the same columns as the CSV.
pub fn markdown(records: &[BenchRecord]) -> String {
    let header: Vec<&str> = CSV_HEADER.split(',').collect();
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.mode.to_string(),
                r.w.to_string(),
                r.n.to_string(),
                match r.op {
                    Op::Sum => "sum".into(),
                    Op::Update => "update".into(),
                },
                r.isa_instructions.to_string(),
                r.scattered_reads.to_string(),
                r.scattered_writes.to_string(),
                r.peak_uw_registers.to_string(),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: Vec<String>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let mut s = line(header.iter().map(|h| h.to_string()).collect());
    s += &line(
        widths
            .iter()
            .map(|&w| format!("{}:", "-".repeat(w - 1)))
            .collect(),
    );
    for r in rows {
        s += &line(r);
    }
    s
}
