//! Command-line harness: `demo`, `fuzz` and `bench`.
//!
//! Exit codes: 0 success, 1 property violation or runtime failure, 2 usage error.

pub mod bench;
pub mod demo;
pub mod fuzz;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::machine::MachineMode;
use crate::psum::SequenceMasking;
use crate::sweep::Execution;

#[derive(Debug, Parser)]
#[command(
    name = "uwram",
    version,
    about = "Ultra-wide word RAM partial sums simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Restricted,
    Mult,
}

impl From<ModeArg> for MachineMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Restricted => MachineMode::Restricted,
            ModeArg::Mult => MachineMode::Multiplication,
        }
    }
}

fn modes(arg: Option<ModeArg>) -> Vec<MachineMode> {
    match arg {
        Some(m) => vec![m.into()],
        None => MachineMode::ALL.to_vec(),
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace the sum and update pipelines word by word.
    Demo(DemoArgs),
    /// Compare the ultraword structure against the word-RAM tree and a flat array.
    Fuzz(FuzzArgs),
    /// Measure instruction counts per operation and write them as CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub i: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "restricted")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 64)]
    pub w: u32,
    #[arg(long, default_value_t = 5, allow_hyphen_values = true)]
    pub delta: i64,
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub ops: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Both modes when omitted.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, default_value_t = 16)]
    pub w: u32,
    /// Independent runs with consecutive seeds, spread over worker threads.
    #[arg(long, default_value_t = 1)]
    pub shards: usize,
    /// Skip the sequence extraction step (expected to fail; checks the fuzzer).
    #[arg(long)]
    pub literal_masking: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [16usize, 256, 4096])]
    pub sizes: Vec<usize>,
    /// Both modes when omitted.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, default_value_t = 64)]
    pub w: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also print an aligned markdown table to stdout.
    #[arg(long)]
    pub markdown: bool,
}

const USAGE: u8 = 2;
const VIOLATION: u8 = 1;

fn failure(e: &dyn std::fmt::Display, code: u8) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code)
}

fn code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::Config(_) | Error::IndexOutOfRange { .. } => USAGE,
        _ => VIOLATION,
    }
}

pub fn run_demo(args: &DemoArgs) -> ExitCode {
    match demo::render(args.i, args.n, args.mode.into(), args.w, args.delta) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => failure(&e, code_for(&e)),
    }
}

pub fn run_fuzz(args: &FuzzArgs) -> ExitCode {
    if args.n == 0 || args.shards == 0 {
        return failure(&"--n and --shards must be at least 1", USAGE);
    }
    let cfg = fuzz::FuzzConfig {
        n: args.n,
        ops: args.ops,
        seed: args.seed,
        modes: modes(args.mode),
        w: args.w,
        shards: args.shards,
        masking: if args.literal_masking {
            SequenceMasking::Literal
        } else {
            SequenceMasking::Extract
        },
    };
    match fuzz::run(&cfg, Execution::default()) {
        Ok(fuzz::FuzzReport::Pass { runs, ops }) => {
            println!(
                "pass: {runs} run(s), {ops} operations, n={} w={} seed={}",
                args.n, args.w, args.seed
            );
            ExitCode::SUCCESS
        }
        Ok(fuzz::FuzzReport::Fail(d)) => {
            println!("FAIL {d}");
            println!(
                "reproduce: uwram fuzz --n {} --ops {} --seed {} --mode {} --w {}{}",
                args.n,
                d.op_index + 1,
                d.seed,
                d.mode,
                args.w,
                if args.literal_masking {
                    " --literal-masking"
                } else {
                    ""
                }
            );
            ExitCode::from(VIOLATION)
        }
        Err(e) => failure(&e, code_for(&e)),
    }
}

pub fn run_bench(args: &BenchArgs) -> ExitCode {
    if args.sizes.contains(&0) {
        return failure(&"sizes must be at least 1", USAGE);
    }
    let measured = match bench::measure(
        &modes(args.mode),
        args.w,
        &args.sizes,
        args.seed,
        Execution::default(),
    ) {
        Ok(m) => m,
        Err(e) => return failure(&e, code_for(&e)),
    };
    let records: Vec<_> = measured.iter().flat_map(|m| m.records()).collect();
    let written = match &args.out {
        Some(path) => File::create(path)
            .map_err(csv::Error::from)
            .and_then(|f| bench::write_csv(&records, BufWriter::new(f))),
        None => bench::write_csv(&records, io::stdout().lock()),
    };
    if let Err(e) = written {
        return failure(&e, VIOLATION);
    }
    if args.markdown {
        print!("{}", bench::markdown(&records));
        let _ = io::stdout().flush();
    }
    ExitCode::SUCCESS
}

pub fn run(cli: &Cli) -> ExitCode {
    match &cli.command {
        Command::Demo(a) => run_demo(a),
        Command::Fuzz(a) => run_fuzz(a),
        Command::Bench(a) => run_bench(a),
    }
}

/// Entry point for the `uwram` binary.
pub fn main() -> ExitCode {
    match Cli::try_parse() {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            ExitCode::from(if e.use_stderr() { USAGE } else { 0 })
        }
    }
}
