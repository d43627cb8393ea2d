//! Parameter sweeps over generated data.
//!
//! Each sweep point starts from the base parameters, overrides one of them and
//! generates `repeat` fresh instances, seeded `seed, seed + 1, ...`. Every
//! requested algorithm runs on every instance and yields one row. Timing
//! covers the algorithm only; generation and output are excluded.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use asjq::algo::{run, Algorithm, Mode, RunConfig, DEFAULT_DELTA};
use asjq::datagen::{generate_pair, synthetic_query, Distribution, GenParams, JoinShape};
use asjq::model::validate_query;

/// The parameter a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    Locals,
    Aggregates,
    Size,
    Categories,
    Distribution,
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "L" | "l" => Ok(Sweep::Locals),
            "G" | "g" => Ok(Sweep::Aggregates),
            "N" | "n" => Ok(Sweep::Size),
            "C" | "c" => Ok(Sweep::Categories),
            "D" | "d" => Ok(Sweep::Distribution),
            _ => Err(format!("unknown sweep `{s}` (expected L, G, N, C or D)")),
        }
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sweep::Locals => "L",
            Sweep::Aggregates => "G",
            Sweep::Size => "N",
            Sweep::Categories => "C",
            Sweep::Distribution => "D",
        })
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub sweep: Sweep,
    pub values: Vec<String>,
    pub repeat: usize,
    /// Parameters the sweep starts from; its seed is the base seed.
    pub base: GenParams,
    pub algorithms: Vec<Algorithm>,
    pub mode: Mode,
    pub delta: usize,
}

impl BenchConfig {
    /// Defaults: L = 2, G = 2, N = 40000, C = 10, correlated, three repeats,
    /// the three optimized algorithms.
    pub fn new(sweep: Sweep, values: Vec<String>) -> Self {
        Self {
            sweep,
            values,
            repeat: 3,
            base: GenParams::new(40_000, 2, 2, 10, Distribution::Correlated, 1),
            algorithms: vec![Algorithm::Msc, Algorithm::Dominator, Algorithm::Iterative],
            mode: Mode::Verified,
            delta: DEFAULT_DELTA,
        }
    }

    /// Base parameters with the sweep value applied.
    pub fn point(&self, value: &str) -> Result<GenParams> {
        let mut p = self.base;
        let int = || -> Result<usize> {
            value.parse().with_context(|| format!("sweep {} value `{value}` is not an integer", self.sweep))
        };
        match self.sweep {
            Sweep::Locals => p.locals = int()?,
            Sweep::Aggregates => p.aggs = int()?,
            Sweep::Size => p.n = int()?,
            Sweep::Categories => p.categories = u32::try_from(int()?)?,
            Sweep::Distribution => p.dist = value.parse().map_err(anyhow::Error::msg)?,
        }
        if p.aggs == 0 {
            bail!("G must be at least 1");
        }
        if p.categories == 0 {
            bail!("C must be at least 1");
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub sweep_param: String,
    pub sweep_value: String,
    pub algo: String,
    pub mode: String,
    pub runtime_ms: f64,
    pub cardinality: usize,
    pub comparisons: u64,
    pub join_pairs: u64,
    pub seed: u64,
}

pub const HEADER: [&str; 9] = [
    "sweep_param",
    "sweep_value",
    "algo",
    "mode",
    "runtime_ms",
    "cardinality",
    "comparisons",
    "join_pairs",
    "seed",
];

/// Runs the sweep. `on_row` sees each row as soon as it is measured.
pub fn run_benchmark(cfg: &BenchConfig, mut on_row: impl FnMut(&BenchRow)) -> Result<Vec<BenchRow>> {
    if cfg.values.is_empty() {
        bail!("no sweep values");
    }
    if cfg.repeat == 0 {
        bail!("--repeat must be at least 1");
    }
    let points = cfg.values.iter().map(|v| cfg.point(v)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (value, params) in cfg.values.iter().zip(points) {
        for rep in 0..cfg.repeat {
            let seed = cfg.base.seed.wrapping_add(rep as u64);
            let params = params.with_seed(seed).with_joins(JoinShape::Equi);
            let (left, right) = generate_pair(&params)?;
            let q = validate_query(synthetic_query(&left.schema, &right.schema, false))?;
            for &algo in &cfg.algorithms {
                let rc = RunConfig::new(algo, cfg.mode).with_delta(cfg.delta);
                let start = Instant::now();
                let out = run(&q, &left, &right, &rc)
                    .with_context(|| format!("{algo} at {}={value}", cfg.sweep))?;
                let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
                let row = BenchRow {
                    sweep_param: cfg.sweep.to_string(),
                    sweep_value: value.clone(),
                    algo: algo.to_string(),
                    mode: cfg.mode.to_string(),
                    runtime_ms,
                    cardinality: out.report.cardinality,
                    comparisons: out.report.comparisons,
                    join_pairs: out.report.join_pairs,
                    seed,
                };
                on_row(&row);
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Median runtime per (sweep value, algorithm), in first-seen order.
pub fn median_runtimes(rows: &[BenchRow]) -> Vec<(String, String, f64)> {
    let mut groups: Vec<(String, String, Vec<f64>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|g| g.0 == r.sweep_value && g.1 == r.algo) {
            Some(g) => g.2.push(r.runtime_ms),
            None => groups.push((r.sweep_value.clone(), r.algo.clone(), vec![r.runtime_ms])),
        }
    }
    groups
        .into_iter()
        .map(|(v, a, mut t)| {
            t.sort_by(f64::total_cmp);
            let m = t.len() / 2;
            let median = if t.len() % 2 == 1 { t[m] } else { (t[m - 1] + t[m]) / 2.0 };
            (v, a, median)
        })
        .collect()
}

pub fn write_header<W: Write>(w: &mut csv::Writer<W>) -> csv::Result<()> {
    w.write_record(HEADER)
}

pub fn write_row<W: Write>(w: &mut csv::Writer<W>, r: &BenchRow) -> csv::Result<()> {
    w.write_record([
        r.sweep_param.clone(),
        r.sweep_value.clone(),
        r.algo.clone(),
        r.mode.clone(),
        format!("{:.3}", r.runtime_ms),
        r.cardinality.to_string(),
        r.comparisons.to_string(),
        r.join_pairs.to_string(),
        r.seed.to_string(),
    ])
}
