//! Word-by-word traces of the sum and update pipelines.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::machine::MachineMode;
use crate::psum::{PartialSumsUW, Trace};

/// Rows holding test bits rather than values; set bits render as `*`.
const TEST_BIT_ROWS: [&str; 2] = ["T", "V"];

fn render_table(out: &mut String, trace: &Trace) {
    let len = trace.seq_len;
    let width = trace
        .rows
        .iter()
        .filter(|(l, _)| !TEST_BIT_ROWS.contains(l))
        .flat_map(|(_, words)| words[..len].iter().map(|v| v.to_string().len()))
        .max()
        .unwrap_or(1)
        .max(len.to_string().len())
        + 2;
    let _ = write!(out, "{:<6}", "word");
    for j in (0..len).rev() {
        let _ = write!(out, "{j:>width$}");
    }
    out.push('\n');
    for (label, words) in &trace.rows {
        let _ = write!(out, "{label:<6}");
        for j in (0..len).rev() {
            let cell = match words[j] {
                0 => String::new(),
                _ if TEST_BIT_ROWS.contains(label) => "*".into(),
                v => v.to_string(),
            };
            let _ = write!(out, "{cell:>width$}");
        }
        out.push('\n');
    }
}

fn join(values: &[u64]) -> String {
    values
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Builds `A[k] = 1` for `k = 1..=n` and traces `sum(i)` and `update(i, delta)`.
pub fn render(i: usize, n: usize, mode: MachineMode, w: u32, delta: i64) -> Result<String> {
    if n == 0 || i == 0 || i > n {
        return Err(Error::InvalidInput(format!(
            "need 1 ≤ i ≤ n, got i={i} n={n}"
        )));
    }
    let mut ps = PartialSumsUW::new(mode, w, &vec![1; n])?;
    let cap = ps.array().capacity();
    let mut out = String::new();

    let _ = writeln!(
        out,
        "A[k] = 1 for k = 1..={n}; N = {cap}; L = {} words; w = {w}; {mode} machine",
        ps.seq_len()
    );
    out.push_str("words are numbered right to left; blank words are zero\n\n");

    ps.machine_mut().reset_counters();
    let (total, trace) = ps.trace_sum(i)?;
    let cost = ps.machine().counters();
    let _ = writeln!(out, "sum({i})");
    render_table(&mut out, &trace);
    let _ = writeln!(out, "sum sequence: {}", join(&trace.sequence));
    let _ = writeln!(
        out,
        "sum({i}) = {total}  [{} instructions, {} scattered read]\n",
        cost.total(),
        cost.scattered_reads
    );

    ps.machine_mut().reset_counters();
    let trace = ps.trace_update(i, delta)?;
    let cost = ps.machine().counters();
    let _ = writeln!(out, "update({i}, {delta})");
    render_table(&mut out, &trace);
    let _ = writeln!(out, "update sequence: {}", join(&trace.sequence));
    let _ = writeln!(
        out,
        "[{} instructions, {} scattered read, {} scattered write]",
        cost.total(),
        cost.scattered_reads,
        cost.scattered_writes
    );
    Ok(out)
}
