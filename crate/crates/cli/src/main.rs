use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use cubeint::context::{ExpectedLabels, ExpectedValues, SessionContext};
use cubeint::engine::DetailedCube;
use cubeint::harness::{generate_star, interestingness_vector, run_benchmark, AssessConfig, BenchConfig};
use cubeint::mdm::Schema;
use cubeint::peculiarity::{Aggregation, DistanceWeights};
use cubeint::{qlang, Exec};

#[derive(Parser)]
#[command(name = "cubeint", version, about = "Interestingness scores for OLAP queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one query against a session context.
    Assess(AssessArgs),
    /// Time the history and goal metrics over generated data.
    Bench(BenchArgs),
    /// Write a synthetic star schema.
    Gen(GenArgs),
}

#[derive(Args)]
struct AssessArgs {
    /// Directory of dimension CSVs, one file per dimension.
    #[arg(long)]
    schema: PathBuf,
    /// Dimension order; defaults to the CSV files sorted by name.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<String>>,
    #[arg(long)]
    facts: PathBuf,
    /// Session file with the query history.
    #[arg(long)]
    history: Option<PathBuf>,
    #[arg(long)]
    beliefs: Option<PathBuf>,
    /// One goal condition per line.
    #[arg(long)]
    goal: Option<PathBuf>,
    #[arg(long)]
    expected: Option<PathBuf>,
    #[arg(long)]
    expected_labels: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Reject label rules that leave gaps between intervals.
    #[arg(long)]
    strict_labels: bool,
    #[arg(long)]
    query: String,
    /// Groups or metrics to compute, e.g. `novelty,relevance.gbdsr`.
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    #[arg(long, default_value_t = 0.5)]
    pi: f64,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Filter, level and measure weights of the structural distance.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    weights: Option<Vec<f64>>,
    /// min, max, avg, median or knn:K.
    #[arg(long, default_value = "avg")]
    agg: String,
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "10000,100000,1000000")]
    base_sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    history_sizes: Vec<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Each repetition repeats a metric until this many milliseconds pass.
    #[arg(long, default_value_t = 5.0)]
    min_batch_ms: f64,
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// CSV stems in `dir`, skipping the fact file if it lives there too.
fn dimension_names(dir: &Path, facts: &Path, given: Option<Vec<String>>) -> Result<Vec<String>> {
    if let Some(names) = given {
        return Ok(names);
    }
    let facts = fs::canonicalize(facts).ok();
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if facts.is_some() && fs::canonicalize(&path).ok() == facts {
            continue;
        }
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                names.push(stem.to_string());
            }
        }
    }
    names.sort();
    if names.is_empty() {
        bail!("no dimension CSVs in {}", dir.display());
    }
    Ok(names)
}

fn write_json(out: Option<&Path>, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn assess(a: AssessArgs) -> Result<()> {
    let names = dimension_names(&a.schema, &a.facts, a.dims)?;
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let schema = Schema::load_dir(&a.schema, &refs).context("loading dimensions")?;
    let cube = DetailedCube::load(schema, &a.facts).context("loading facts")?;
    let q = qlang::query(&cube, &a.query).context("query")?;

    let mut ctx = SessionContext::default();
    if let Some(p) = &a.history {
        ctx.history = qlang::load_session(&cube, &read(p)?).context("history")?;
    }
    if let Some(p) = &a.beliefs {
        ctx.beliefs = qlang::load_beliefs(&cube, &read(p)?).context("beliefs")?;
    }
    if let Some(p) = &a.goal {
        ctx.goals = qlang::load_goals(cube.schema(), &read(p)?).context("goals")?;
    }
    if let Some(p) = &a.expected {
        ctx.expected = Some(ExpectedValues::from_csv(cube.schema(), read(p)?.as_bytes()).context("expected values")?);
    }
    if let Some(p) = &a.expected_labels {
        ctx.expected_labels =
            Some(ExpectedLabels::from_csv(cube.schema(), read(p)?.as_bytes()).context("expected labels")?);
    }
    if let Some(p) = &a.labels {
        ctx.labels = Some(qlang::load_label_rules(&read(p)?, a.strict_labels).context("label rules")?);
    }

    let weights = match a.weights.as_deref() {
        Some(&[f, l, m]) => DistanceWeights::new(f, l, m)?,
        Some(_) => bail!("--weights takes three numbers"),
        None => DistanceWeights::default(),
    };
    let Some(aggregation) = Aggregation::parse(&a.agg) else {
        bail!("unknown aggregation {:?}", a.agg);
    };
    let cfg = AssessConfig {
        metrics: a.metrics,
        pi: a.pi,
        k: a.k,
        weights,
        aggregation,
        exec: if a.sequential { Exec::Sequential } else { Exec::default() },
        ..AssessConfig::default()
    };
    let report = interestingness_vector(&cube, &q, &ctx, &cfg)?;
    for d in &report.diagnostics {
        eprintln!("note: {d}");
    }
    write_json(a.out.as_deref(), &report)
}

fn bench(a: BenchArgs) -> Result<()> {
    let cfg = BenchConfig {
        base_sizes: a.base_sizes,
        history_sizes: a.history_sizes,
        seed: a.seed,
        repetitions: a.reps,
        exec: if a.parallel { Exec::Parallel } else { Exec::Sequential },
        min_batch_ms: a.min_batch_ms,
    };
    if cfg.base_sizes.iter().chain(&cfg.history_sizes).any(|&n| n == 0) || cfg.repetitions == 0 {
        bail!("sizes and repetitions must be positive");
    }
    let report = run_benchmark(&cfg)?;
    for r in &report.ratios {
        eprintln!(
            "{:8} {:12} @{:<8} {:>8} -> {:<8} x{:<8.2} (linear x{:.2})",
            r.metric, r.axis, r.fixed, r.from, r.to, r.observed, r.linear
        );
    }
    write_json(a.out.as_deref(), &report)
}

fn gen(a: GenArgs) -> Result<()> {
    if a.rows == 0 {
        bail!("--rows must be positive");
    }
    generate_star(a.rows, a.seed).write(&a.out)?;
    eprintln!("wrote {} rows to {}", a.rows, a.out.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Assess(a) => assess(a),
        Command::Bench(a) => bench(a),
        Command::Gen(a) => gen(a),
    }
}
