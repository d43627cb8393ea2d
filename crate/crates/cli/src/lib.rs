//! The `asjq` command line.
//!
//! Exit codes: 0 success, 1 when `check` finds a verified-mode mismatch, 2 for
//! usage errors, 3 when a query, relation or output file cannot be read or
//! written.

pub mod bench;

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use asjq::algo::{run, Algorithm, AsjqOutput, Mode, RunConfig, DEFAULT_DELTA};
use asjq::datagen::{generate_pair, synthetic_query, Distribution, GenParams, JoinShape};
use asjq::io::{load_relation, parse_query, print_query, write_relation, write_report, write_results};
use asjq::model::{joined_dominates, validate_query, Relation, ValidatedQuery};
use asjq::oracle::brute_force_asjq;
use asjq::{AsjqError, JoinedTuple};
use clap::{Args, Parser, Subcommand};

use bench::{BenchConfig, Sweep};

#[derive(Parser, Debug)]
#[command(name = "asjq", version, about = "Aggregate skyline join queries over CSV relations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic instance: A.csv, B.csv and query.asjq.
    Gen(GenArgs),
    /// Evaluate a query.
    Run(RunArgs),
    /// Evaluate a query and compare the result with the brute-force oracle.
    Check(RunArgs),
    /// Sweep one generator parameter and time the algorithms.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Rows per relation.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Local attributes per relation.
    #[arg(long, default_value_t = 2)]
    local: usize,
    /// Aggregate attributes per relation.
    #[arg(long, default_value_t = 2)]
    agg: usize,
    /// Join key categories.
    #[arg(long, default_value_t = 10)]
    cats: u32,
    /// correlated, independent or anticorrelated.
    #[arg(long, default_value = "correlated")]
    dist: Distribution,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Join conditions: eq, eq-lt or lt.
    #[arg(long, default_value = "eq")]
    joins: JoinShape,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Query file; relation paths in it are relative to its directory.
    #[arg(long)]
    query: PathBuf,
    /// naive, msc, dominator, iterative, single or auto.
    #[arg(long, default_value = "auto")]
    algo: Algorithm,
    /// verified or paper.
    #[arg(long, default_value = "verified")]
    mode: Mode,
    /// Residual size at which layer peeling stops (iterative only).
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: usize,
    /// Result CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// L, G, N, C or D.
    #[arg(long)]
    sweep: Sweep,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    /// Instances per sweep value.
    #[arg(long, default_value_t = 3)]
    repeat: usize,
    /// Algorithms to time.
    #[arg(long, value_delimiter = ',', default_value = "msc,dominator,iterative")]
    algos: Vec<Algorithm>,
    #[arg(long, default_value = "verified")]
    mode: Mode,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: usize,
    /// Base N, L, G, C and distribution for the parameters not swept.
    #[arg(long, default_value_t = 40_000)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    local: usize,
    #[arg(long, default_value_t = 2)]
    agg: usize,
    #[arg(long, default_value_t = 10)]
    cats: u32,
    #[arg(long, default_value = "correlated")]
    dist: Distribution,
    /// Seed of the first repetition.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Sweep CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A bad argument combination that clap cannot detect.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<AsjqError>() {
        Some(AsjqError::InvalidParams(_) | AsjqError::Precondition(_)) => 2,
        _ => 3,
    }
}

/// Runs the command line and returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(&a).map(|_| 0),
        Command::Run(a) => run_cmd(&a).map(|_| 0),
        Command::Check(a) => check(&a),
        Command::Bench(a) => bench_cmd(&a).map(|_| 0),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Output file, or standard output.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn gen(a: &GenArgs) -> Result<()> {
    let params = GenParams::new(a.n, a.local, a.agg, a.cats, a.dist, a.seed).with_joins(a.joins);
    let (mut left, mut right) = generate_pair(&params)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    for rel in [&mut left, &mut right] {
        let file = format!("{}.csv", rel.schema.name);
        let mut w = create(&a.out.join(&file))?;
        write_relation(&mut w, rel)?;
        w.flush()?;
        rel.schema.source = Some(file);
    }
    let spec = synthetic_query(&left.schema, &right.schema, false);
    std::fs::write(a.out.join("query.asjq"), print_query(&spec))
        .with_context(|| format!("cannot write {}", a.out.join("query.asjq").display()))?;
    eprintln!("wrote A.csv, B.csv and query.asjq to {}", a.out.display());
    Ok(())
}

/// Parses a query file and loads both relations.
pub fn load_instance(path: &Path) -> Result<(ValidatedQuery, Relation, Relation)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AsjqError::Load { path: path.display().to_string(), message: e.to_string() })?;
    let spec = parse_query(&text).map_err(|e| anyhow::Error::new(e).context(path.display().to_string()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let load = |s: &asjq::RelationSchema| -> Result<Relation> {
        let src = s.source.as_deref().unwrap_or_default();
        Ok(load_relation(dir.join(src), s)?)
    };
    let left = load(&spec.left)?;
    let right = load(&spec.right)?;
    Ok((validate_query(spec)?, left, right))
}

fn evaluate(a: &RunArgs) -> Result<(ValidatedQuery, Relation, Relation, AsjqOutput)> {
    let (q, left, right) = load_instance(&a.query)?;
    let cfg = RunConfig::new(a.algo, a.mode).with_delta(a.delta);
    let out = run(&q, &left, &right, &cfg)?;
    let mut w = sink(a.out.as_deref())?;
    write_results(&mut w, &q, &out.tuples)?;
    w.flush()?;
    if let Some(p) = &a.report {
        let mut w = create(p)?;
        write_report(&mut w, &out.report)?;
        w.flush()?;
    }
    let r = &out.report;
    eprintln!(
        "{}: {} tuples ({} guaranteed, {} verified), {} phase-2 candidates, {:.1} ms",
        r.algorithm, r.cardinality, r.guaranteed, r.verified, r.phase2_candidates, r.wall_time_ms
    );
    Ok((q, left, right, out))
}

fn run_cmd(a: &RunArgs) -> Result<()> {
    evaluate(a).map(|_| ())
}

fn show(t: &JoinedTuple) -> String {
    let vals: Vec<String> = t.values.iter().map(f64::to_string).collect();
    format!("({}, {}) [{}]", t.left, t.right, vals.join(", "))
}

fn check(a: &RunArgs) -> Result<i32> {
    let (q, left, right, out) = evaluate(a)?;
    let oracle = brute_force_asjq(&q, &left, &right)?;
    if out.tuples == oracle {
        eprintln!("check: result matches the oracle ({} tuples)", oracle.len());
        return Ok(0);
    }
    let expected: HashSet<_> = oracle.iter().map(JoinedTuple::key).collect();
    let got: HashSet<_> = out.tuples.iter().map(JoinedTuple::key).collect();
    let missing: Vec<&JoinedTuple> = oracle.iter().filter(|t| !got.contains(&t.key())).collect();
    let extra: Vec<&JoinedTuple> = out.tuples.iter().filter(|t| !expected.contains(&t.key())).collect();
    eprintln!("check: {} missing, {} extra against the oracle", missing.len(), extra.len());
    if let Some(t) = missing.first() {
        eprintln!("  missing {}", show(t));
    }
    if let Some(t) = extra.first() {
        match oracle.iter().find(|o| joined_dominates(&q, o, t).unwrap_or(false)) {
            Some(d) => eprintln!("  extra {} is dominated by {}", show(t), show(d)),
            None => eprintln!("  extra {}", show(t)),
        }
    }
    if a.mode == Mode::PaperFaithful {
        eprintln!("check: paper mode, mismatch recorded");
        return Ok(0);
    }
    Ok(1)
}

fn bench_cmd(a: &BenchArgs) -> Result<()> {
    let mut cfg = BenchConfig::new(a.sweep, a.values.clone());
    cfg.repeat = a.repeat;
    cfg.algorithms = a.algos.clone();
    cfg.mode = a.mode;
    cfg.delta = a.delta;
    cfg.base = GenParams::new(a.n, a.local, a.agg, a.cats, a.dist, a.seed);
    if cfg.repeat == 0 {
        return Err(Usage("--repeat must be at least 1".into()).into());
    }
    for v in &cfg.values {
        cfg.point(v).map_err(|e| Usage(e.to_string()))?;
    }
    let mut w = csv::Writer::from_writer(sink(a.out.as_deref())?);
    bench::write_header(&mut w)?;
    let mut failed = None;
    let rows = bench::run_benchmark(&cfg, |row| {
        if failed.is_none() {
            failed = bench::write_row(&mut w, row).and_then(|_| Ok(w.flush()?)).err();
        }
    })?;
    if let Some(e) = failed {
        return Err(e.into());
    }
    w.flush()?;
    for (value, algo, ms) in bench::median_runtimes(&rows) {
        eprintln!("{}={value} {algo}: median {ms:.1} ms", cfg.sweep);
    }
    Ok(())
}
