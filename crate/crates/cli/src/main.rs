use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use dyniso_core::harness::{gen_scenario, parse_scenario, run_scenario, Mode, RunOptions};

#[derive(Parser)]
#[command(name = "dyniso", version, about = "Replay change sequences against the dynamic engines")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Matrix rank mod p
    Rank(RunArgs),
    /// Reachability queries
    Reach(RunArgs),
    /// Distance and path queries
    Dist(RunArgs),
    /// Matching size and witness through the series determinant
    MatchDet(RunArgs),
    /// Matching size through Tutte matrix rank
    MatchRank(RunArgs),
    /// Write a seeded random scenario
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    /// Check every answer against a brute-force oracle
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Batches per epoch before weights are redrawn
    #[arg(long)]
    epoch: Option<usize>,
    #[arg(long)]
    max_candidates: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    report: Format,
    /// Also recompute from scratch after every batch and report the speedup
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct GenArgs {
    /// rank, reach, dist, match-det or match-rank
    kind: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    batches: usize,
    #[arg(long, default_value_t = 4)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

fn run(mode: Mode, a: RunArgs) -> anyhow::Result<bool> {
    let text = std::fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let sc = parse_scenario(&text).with_context(|| format!("parsing {}", a.input.display()))?;
    let opts = RunOptions {
        seed: a.seed,
        epoch_len: a.epoch,
        max_candidates: a.max_candidates,
        verify: a.verify,
        timing: a.timing,
    };
    let report = run_scenario(&sc, mode, &opts)?;
    match a.report {
        Format::Json => print!("{}", report.to_jsonl()),
        Format::Text => print!("{}", report.to_text()),
    }
    Ok(report.ok())
}

fn main() -> anyhow::Result<ExitCode> {
    env_logger::init();
    let ok = match Cli::parse().cmd {
        Cmd::Rank(a) => run(Mode::Rank, a)?,
        Cmd::Reach(a) => run(Mode::Reach, a)?,
        Cmd::Dist(a) => run(Mode::Dist, a)?,
        Cmd::MatchDet(a) => run(Mode::MatchDet, a)?,
        Cmd::MatchRank(a) => run(Mode::MatchRank, a)?,
        Cmd::Gen(g) => {
            let kind: Mode = g.kind.parse()?;
            let text = gen_scenario(kind, g.n, g.batches, g.batch_size, g.seed)?;
            match g.output {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            true
        }
    };
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
