//! Acceptance suite: one PASS/FAIL line per criterion, integer-exact.
//!
//! Run with `cargo test -p uwram --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uwram::cli::bench::{self, OpStats};
use uwram::fenwick::FenwickTree;
use uwram::machine::{Machine, MachineMode, Ultraword};
use uwram::sweep::Execution;
use uwram::uwops::rounds;
use uwram::{Error, PartialSumsUW};

/// Frozen restricted-mode cost constants: count ≤ a·⌈log₂ L⌉ + b.
const SUM_A: u64 = 8;
const SUM_B: u64 = 28;
const UPDATE_A: u64 = 7;
const UPDATE_B: u64 = 50;
/// Frozen prefix-sum constants: restricted ≤ a·⌈log₂ ℓ⌉ + b, multiplication exactly `PREFIX_MULT`.
const PREFIX_A: u64 = 3;
const PREFIX_B: u64 = 2;
const PREFIX_MULT: u64 = 11;
const REGISTER_BUDGET: usize = 16;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

fn nonzero_positions(x: &Ultraword) -> Vec<(usize, u64)> {
    x.words()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0)
        .map(|(j, &v)| (j, v))
        .collect()
}

fn walkthrough() -> Verdict {
    const A: [u64; 16] = [1, 2, 0, 1, 3, 1, 2, 1, 0, 1, 3, 4, 1, 2, 0, 5];
    let mut failures = Vec::new();
    for mode in MachineMode::ALL {
        let mut ps = PartialSumsUW::new(mode, 64, &A).unwrap();
        let mut check = |what: &str, ok: bool| {
            if !ok {
                failures.push(format!("{mode}: {what}"));
            }
        };
        let offsets = ps.sum_offsets(13).unwrap();
        check(
            "sum offsets",
            nonzero_positions(&offsets) == [(0, 1), (2, 4), (3, 8)],
        );
        let (_, trace) = ps.trace_sum(13).unwrap();
        check("sum sequence", trace.sequence == [13, 12, 8, 0]);
        let offsets = ps.update_offsets(13).unwrap();
        let values: Vec<u64> = nonzero_positions(&offsets).iter().map(|p| p.1).collect();
        check("update offsets", values == [1, 2, 16]);
        let (seq, valid) = ps.update_sequence(13).unwrap();
        let indices: Vec<u64> = valid.selected().iter().map(|&j| seq.word(j)).collect();
        check("update indices", indices == [13, 14, 16]);
        let f = ps.slots().to_vec();
        check("F[13], F[12], F[8]", (f[13], f[12], f[8]) == (1, 8, 11));
        check("sum(13)", ps.sum(13).unwrap() == 20);
        ps.update(13, 5).unwrap();
        let changed: Vec<(usize, u64)> = (0..f.len())
            .filter(|&j| ps.slots()[j] != f[j])
            .map(|j| (j, ps.slots()[j] - f[j]))
            .collect();
        check(
            "update(13, 5) delta",
            changed == [(13, 5), (14, 5), (16, 5)],
        );
    }
    if failures.is_empty() {
        verdict(true, "offsets {1,4,8} at words {0,2,3}; 13,12,8,0; {1,2,16}; {13,14,16}; sum(13)=20; F[13,14,16] += 5")
    } else {
        verdict(false, failures.join("; "))
    }
}

/// Aggregates over the criterion-2 workload, reused by criteria 5, 6 and 8.
#[derive(Default)]
struct Workload {
    mismatches: Vec<String>,
    peak_registers: usize,
    sums: u64,
    updates: u64,
    bad_sum_access: u64,
    bad_update_access: u64,
    restricted_uw_mul: u64,
}

impl Workload {
    fn merge(mut self, o: Workload) -> Workload {
        self.mismatches.extend(o.mismatches);
        self.peak_registers = self.peak_registers.max(o.peak_registers);
        self.sums += o.sums;
        self.updates += o.updates;
        self.bad_sum_access += o.bad_sum_access;
        self.bad_update_access += o.bad_update_access;
        self.restricted_uw_mul += o.restricted_uw_mul;
        self
    }
}

const UPDATES: usize = 1000;
const SWEEP_EVERY: usize = 10;

fn naive_sum(a: &[u64], i: usize, w: u32) -> u64 {
    (a[..i].iter().map(|&v| v as u128).sum::<u128>() % (1u128 << (w - 1))) as u64
}

fn equivalence_run(n: usize) -> Workload {
    let w = 16;
    let mask = (1u64 << (w - 1)) - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(0x00ac_ce55 + n as u64);
    let mut a: Vec<u64> = (0..n).map(|_| rng.random::<u64>() & mask).collect();
    let mut fw = FenwickTree::new(w, &a).unwrap();
    let mut uw: Vec<PartialSumsUW> = MachineMode::ALL
        .iter()
        .map(|&mode| PartialSumsUW::new(mode, w, &a).unwrap())
        .collect();
    let mut out = Workload::default();

    let sweep = |fw: &mut FenwickTree,
                 uw: &mut [PartialSumsUW],
                 a: &[u64],
                 out: &mut Workload,
                 when: usize| {
        for i in 0..=n {
            let expect = naive_sum(a, i, w);
            let base = fw.sum(i).unwrap();
            for ps in uw.iter_mut() {
                ps.machine_mut().reset_counters();
                let got = ps.sum(i).unwrap();
                let c = ps.machine().counters();
                out.sums += 1;
                if (c.scattered_reads, c.scattered_writes) != (1, 0) {
                    out.bad_sum_access += 1;
                }
                if got != expect || base != expect {
                    out.mismatches.push(format!(
                        "n={n} after {when} updates, {}: sum({i}) = {got}, fenwick {base}, naive {expect}",
                        ps.machine().mode()
                    ));
                }
            }
        }
    };

    sweep(&mut fw, &mut uw, &a, &mut out, 0);
    for k in 1..=UPDATES {
        let i = rng.random_range(1..=n);
        let delta: i64 = rng.random_range(-(1 << 20)..=1 << 20);
        fw.update(i, delta).unwrap();
        a[i - 1] = (a[i - 1] as i64 + delta).rem_euclid(1 << (w - 1)) as u64;
        for ps in uw.iter_mut() {
            ps.machine_mut().reset_counters();
            ps.update(i, delta).unwrap();
            let c = ps.machine().counters();
            out.updates += 1;
            if (c.scattered_reads, c.scattered_writes) != (1, 1) {
                out.bad_update_access += 1;
            }
        }
        if k % SWEEP_EVERY == 0 {
            sweep(&mut fw, &mut uw, &a, &mut out, k);
        }
    }
    for ps in &uw {
        if ps.slots() != fw.slots() {
            out.mismatches
                .push(format!("n={n} {}: final F differs", ps.machine().mode()));
        }
        out.peak_registers = out.peak_registers.max(ps.machine().peak_registers());
        if ps.machine().mode() == MachineMode::Restricted {
            out.restricted_uw_mul += ps.machine().counters().uw_mul_ops;
        }
    }
    out
}

fn oracle_equivalence(exec: Execution) -> (Verdict, Workload) {
    let sizes: Vec<usize> = (1..=64).collect();
    let load = exec
        .map(&sizes, |&n| equivalence_run(n))
        .into_iter()
        .fold(Workload::default(), Workload::merge);
    let v = match load.mismatches.first() {
        None => verdict(
            true,
            format!(
                "w=16, n=1..=64, both modes: {} sums equal to fenwick and naive; {UPDATES} updates per n; final F identical",
                load.sums
            ),
        ),
        Some(first) => verdict(false, format!("{} mismatches, first: {first}", load.mismatches.len())),
    };
    (v, load)
}

fn constant_across(stats: &[(usize, OpStats)]) -> Option<u64> {
    let v = stats[0].1.isa_min;
    stats
        .iter()
        .all(|(_, s)| s.isa_min == v && s.isa_max == v)
        .then_some(v)
}

fn mult_constant(exec: Execution) -> Verdict {
    let m = bench::measure(
        &[MachineMode::Multiplication],
        64,
        &[1 << 4, 1 << 8, 1 << 12],
        3,
        exec,
    )
    .unwrap();
    let sums: Vec<_> = m.iter().map(|x| (x.n, x.sum)).collect();
    let updates: Vec<_> = m.iter().map(|x| (x.n, x.update)).collect();
    match (constant_across(&sums), constant_across(&updates)) {
        (Some(s), Some(u)) => verdict(
            true,
            format!("n ∈ {{16, 256, 4096}}, every sampled i: sum = {s}, update = {u}"),
        ),
        _ => verdict(
            false,
            format!(
                "not constant: sum min/max {:?}, update min/max {:?}",
                sums.iter()
                    .map(|(n, s)| (n, s.isa_min, s.isa_max))
                    .collect::<Vec<_>>(),
                updates
                    .iter()
                    .map(|(n, s)| (n, s.isa_min, s.isa_max))
                    .collect::<Vec<_>>()
            ),
        ),
    }
}

fn restricted_loglog(exec: Execution) -> (Verdict, u64) {
    let sizes = [1usize << 3, 1 << 7, 1 << 15];
    let m = bench::measure(&[MachineMode::Restricted], 64, &sizes, 5, exec).unwrap();
    let uw_mul: u64 = m
        .iter()
        .map(|x| x.sum.uw_mul_max + x.update.uw_mul_max)
        .sum();
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, pick, a, b) in [
        (
            "sum",
            (|x: &bench::Measurement| x.sum) as fn(&bench::Measurement) -> OpStats,
            SUM_A,
            SUM_B,
        ),
        (
            "update",
            |x: &bench::Measurement| x.update,
            UPDATE_A,
            UPDATE_B,
        ),
    ] {
        let counts: Vec<u64> = m.iter().map(|x| pick(x).isa_max).collect();
        let (d1, d2) = (
            counts[1] as i64 - counts[0] as i64,
            counts[2] as i64 - counts[1] as i64,
        );
        ok &= d1 == d2 && d1 > 0;
        for (x, &c) in m.iter().zip(&counts) {
            let r = rounds(x.n.trailing_zeros() as usize + 2) as u64;
            ok &= c <= a * r + b;
        }
        notes.push(format!("{name} {counts:?} (≤ {a}·r+{b})"));
    }
    let ls: Vec<String> = sizes
        .iter()
        .map(|&n| (n.trailing_zeros() + 2).to_string())
        .collect();
    let detail = format!(
        "L = {}, r = ⌈log₂L⌉ = 3, 4, 5; {}",
        ls.join(", "),
        notes.join("; ")
    );
    (verdict(ok, detail), uw_mul)
}

fn scan(words: &[u64], w: u32) -> Vec<u64> {
    let mask = (1u64 << (w - 1)) - 1;
    let mut acc = 0;
    words
        .iter()
        .map(|&v| {
            acc = (acc + v) & mask;
            acc
        })
        .collect()
}

const PREFIX_TRIALS: usize = 10_000;

/// Returns mismatching cases and the worst cost excess per mode.
fn prefix_case(w: u32, len: usize) -> (Vec<String>, bool, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(((w as u64) << 8) | len as u64);
    let mask = (1u64 << (w - 1)) - 1;
    let mut r = Machine::new(MachineMode::Restricted, w, 0).unwrap();
    let mut m = Machine::new(MachineMode::Multiplication, w, 0).unwrap();
    let mut bad = Vec::new();
    let (mut r_ok, mut m_ok) = (true, true);
    let bound = PREFIX_A * rounds(len) as u64 + PREFIX_B;
    let mut words = vec![0u64; w as usize];
    for trial in 0..PREFIX_TRIALS {
        for v in &mut words[..len] {
            *v = match trial % 4 {
                0 => mask,
                1 => rng.random_range(0..16),
                _ => rng.random::<u64>() & mask,
            };
        }
        let x = Ultraword::from_words(w, &words).unwrap();
        r.reset_counters();
        m.reset_counters();
        let (a, b) = (r.prefix_sum(&x, len), m.prefix_sum(&x, len));
        r_ok &= r.counters().total() <= bound;
        m_ok &= m.counters().total() == PREFIX_MULT;
        let expect = scan(&words[..len], w);
        if a.words()[..len] != expect[..] || a != b || !a.has_length(len) {
            bad.push(format!("w={w} ℓ={len} trial {trial}"));
        }
    }
    (bad, r_ok, m_ok)
}

fn prefix_suite(exec: Execution) -> Verdict {
    let cases: Vec<(u32, usize)> = [8u32, 16, 64]
        .iter()
        .flat_map(|&w| (1..=w as usize).map(move |l| (w, l)))
        .collect();
    let results = exec.map(&cases, |&(w, l)| prefix_case(w, l));
    let bad: Vec<String> = results.iter().flat_map(|r| r.0.clone()).collect();
    let r_ok = results.iter().all(|r| r.1);
    let m_ok = results.iter().all(|r| r.2);
    let ok = bad.is_empty() && r_ok && m_ok;
    let detail = format!(
        "{} (w, ℓ) cases × {PREFIX_TRIALS} inputs: {} mismatches; restricted ≤ {PREFIX_A}·⌈log₂ℓ⌉+{PREFIX_B}: {r_ok}; multiplication = {PREFIX_MULT}: {m_ok}{}",
        cases.len(),
        bad.len(),
        bad.first().map(|b| format!(" (first: {b})")).unwrap_or_default()
    );
    verdict(ok, detail)
}

fn mode_enforcement(restricted_uw_mul: u64) -> Verdict {
    let mut m = Machine::new(MachineMode::Restricted, 16, 0).unwrap();
    let x = m.broadcast(3, 4);
    let before = m.counters();
    let rejected = matches!(m.uw_mul(&x, &x), Err(Error::ModeViolation { .. }));
    let uncharged = m.counters() == before;
    let ok = rejected && uncharged && restricted_uw_mul == 0 && m.counters().uw_mul_ops == 0;
    verdict(
        ok,
        format!(
            "restricted uw_mul rejected: {rejected}, uncharged: {uncharged}; uw_mul_ops over criteria 2 and 4 on restricted machines: {restricted_uw_mul}"
        ),
    )
}

fn main() -> ExitCode {
    let exec = Execution::default();
    let mut lines: Vec<(u8, &str, Verdict, f64)> = Vec::new();
    let mut timed = |id, name, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        lines.push((id, name, v, start.elapsed().as_secs_f64()));
    };

    let mut load = Workload::default();
    let mut loglog_mul = 0;
    timed(1, "walkthrough", &mut walkthrough);
    timed(2, "oracle equivalence", &mut || {
        let (v, l) = oracle_equivalence(exec);
        load = l;
        v
    });
    timed(3, "constant time (multiplication)", &mut || {
        mult_constant(exec)
    });
    timed(4, "log log n (restricted)", &mut || {
        let (v, mul) = restricted_loglog(exec);
        loglog_mul = mul;
        v
    });
    timed(5, "register budget", &mut || {
        verdict(
            load.peak_registers <= REGISTER_BUDGET && load.sums > 0,
            format!(
                "peak live ultraword registers {} ≤ {REGISTER_BUDGET}",
                load.peak_registers
            ),
        )
    });
    timed(6, "scattered access budget", &mut || {
        verdict(
            load.bad_sum_access == 0 && load.bad_update_access == 0 && load.updates > 0,
            format!(
                "{} sums at 1 read/0 writes, {} updates at 1 read/1 write; violations {} / {}",
                load.sums, load.updates, load.bad_sum_access, load.bad_update_access
            ),
        )
    });
    timed(7, "prefix sum properties", &mut || prefix_suite(exec));
    timed(8, "mode enforcement", &mut || {
        mode_enforcement(load.restricted_uw_mul + loglog_mul)
    });

    let mut all = true;
    for (id, name, v, secs) in &lines {
        all &= v.ok;
        let tag = if v.ok { "PASS" } else { "FAIL" };
        println!("criterion {id} {tag}  {name}: {}  [{secs:.2}s]", v.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
