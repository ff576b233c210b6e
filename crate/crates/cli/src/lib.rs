//! Solve, bench, generate and trace-aggregation commands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use dprlns::hrgcn::HrgcnWeights;
use dprlns::io::{generate_synthetic, read_instance, take_prefix, write_instance, GeneratorParams, SolutionDoc};
use dprlns::search::{lns_run, Operator, SearchConfig, SearchResult};
use dprlns::trace::{aggregate, read_csv, write_aggregate_csv, write_csv, TraceRow};
use dprlns::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const THREADS_ENV: &str = "DPRLNS_THREADS";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, missing inputs or unloadable configuration (exit 2).
    Usage(String),
    /// Anything that went wrong while running (exit 1).
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<dprlns::Error> for CliError {
    fn from(e: dprlns::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "dprlns", version, about = "CVRPTW large neighborhood search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance and report the best cost found.
    Solve(SolveArgs),
    /// Run every operator over every manifest instance and seed.
    Bench(BenchArgs),
    /// Write synthetic instances in the native format.
    Generate(GenerateArgs),
    /// Average trace CSVs iteration by iteration.
    Traces(TracesArgs),
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 150)]
    pub iters: usize,
    #[arg(long)]
    pub anchors: Option<usize>,
    /// Weight bundle, required by dpr_neural.
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Keep only the first N customers.
    #[arg(long)]
    pub customers: Option<usize>,
    #[arg(long, default_value = "rand")]
    pub op: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Solution document path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trace CSV path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Comma-separated operators.
    #[arg(long, default_value = "rand,dpr_random")]
    pub op: String,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of consecutive seeds per instance.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Directory for summary.csv and runs.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for one trace CSV per run.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 25)]
    pub customers: usize,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Master seed; instance seeds are drawn from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probability that a customer gets an unconstrained window.
    #[arg(long, default_value_t = 0.3)]
    pub p_start: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TracesArgs {
    /// Trace CSVs written by `solve --trace` or `bench --trace`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Aggregate CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses arguments and runs the command; clap handles help and version itself.
pub fn run_from<I, T>(args: I) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.to_string().trim_end().to_string())),
    };
    match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Generate(a) => cmd_generate(&a),
        Command::Traces(a) => cmd_traces(&a),
    }
}

pub fn load_instance(path: &Path, customers: Option<usize>) -> CliResult<Instance> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("instance file not found: {}", path.display())));
    }
    let inst = read_instance(path)
        .map_err(|e| CliError::Usage(format!("cannot load {}: {e}", path.display())))?;
    match customers {
        Some(n) => take_prefix(&inst, n).map_err(|e| CliError::Usage(e.to_string())),
        None => Ok(inst),
    }
}

fn parse_ops(list: &str) -> CliResult<Vec<Operator>> {
    let ops: Vec<Operator> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e: dprlns::Error| CliError::Usage(e.to_string())))
        .collect::<CliResult<_>>()?;
    if ops.is_empty() {
        return Err(CliError::Usage("no operator given".into()));
    }
    Ok(ops)
}

/// Template config shared by every run of a command; `operator` and `seed` are set per run.
fn base_config(args: &SearchArgs, ops: &[Operator]) -> CliResult<SearchConfig> {
    let weights = match &args.weights {
        Some(path) if path.is_file() => Some(Arc::new(HrgcnWeights::load(path).map_err(|e| {
            CliError::Usage(format!("cannot load weights {}: {e}", path.display()))
        })?)),
        Some(path) => {
            return Err(CliError::Usage(format!("weights file not found: {}", path.display())));
        }
        None if ops.contains(&Operator::DprNeural) => {
            return Err(CliError::Usage("--op dpr_neural requires --weights".into()));
        }
        None => None,
    };
    let cfg = SearchConfig {
        iterations: args.iters,
        n_anchors: args.anchors,
        weights,
        ..Default::default()
    };
    for &op in ops {
        SearchConfig { operator: op, ..cfg.clone() }
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(cfg)
}

fn write_trace(path: &Path, rows: &[TraceRow]) -> anyhow::Result<()> {
    let file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_csv(rows, file)?;
    Ok(())
}

pub fn cmd_solve(a: &SolveArgs) -> CliResult<()> {
    let ops = parse_ops(&a.op)?;
    if ops.len() != 1 {
        return Err(CliError::Usage("solve takes a single --op".into()));
    }
    let cfg = SearchConfig {
        operator: ops[0],
        seed: a.seed,
        ..base_config(&a.search, &ops)?
    };
    let inst = load_instance(&a.instance, a.customers)?;
    let res = lns_run(&inst, &cfg).context("search failed")?;
    println!(
        "instance {} op {} seed {} cost {} vehicles {} initial {} runtime_ms {:.3}",
        inst.name(),
        cfg.operator,
        cfg.seed,
        res.best_cost,
        res.best.n_vehicles(),
        res.initial_cost,
        res.runtime.as_secs_f64() * 1e3
    );
    if let Some(out) = &a.out {
        let doc = SolutionDoc::new(&inst, &res.best).context("cannot build solution document")?;
        let text = serde_json::to_string_pretty(&doc).context("cannot serialize solution")?;
        fs::write(out, text + "\n").with_context(|| format!("cannot write {}", out.display()))?;
    }
    if let Some(path) = &a.trace {
        write_trace(path, &res.trace)?;
    }
    Ok(())
}

/// One `scale path [customers]` line of a bench manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub scale: String,
    pub path: PathBuf,
    pub customers: Option<usize>,
}

/// Blank lines and `#` comments are ignored; relative paths resolve against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> CliResult<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let customers = match fields.as_slice() {
            [_, _] => None,
            [_, _, n] => Some(n.parse().map_err(|_| {
                CliError::Usage(format!("manifest line {}: bad customer count {n:?}", i + 1))
            })?),
            _ => {
                return Err(CliError::Usage(format!(
                    "manifest line {}: expected `scale path [customers]`",
                    i + 1
                )));
            }
        };
        entries.push(ManifestEntry {
            scale: fields[0].to_string(),
            path: base.join(fields[1]),
            customers,
        });
    }
    if entries.is_empty() {
        return Err(CliError::Usage("manifest lists no instances".into()));
    }
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub scale: String,
    pub instance: String,
    pub op: String,
    pub seed: u64,
    pub initial_cost: f64,
    pub best_cost: f64,
    pub vehicles: usize,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub scale: String,
    pub op: String,
    pub runs: usize,
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub runs: Vec<RunRecord>,
    pub summary: Vec<GroupSummary>,
    /// `(scale, op, message)` for groups aborted by a failed run.
    pub failures: Vec<(String, String, String)>,
    pub traces: Vec<Vec<TraceRow>>,
}

/// Worker pool sized by `DPRLNS_THREADS` when set, rayon's default otherwise.
pub fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("thread pool: {e}")))
}

/// Runs every (instance, operator, seed) combination. Runs sharing an
/// instance and seed start from the same initial solution.
pub fn run_bench(
    instances: &[(String, Instance)],
    ops: &[Operator],
    seeds: &[u64],
    base: &SearchConfig,
) -> BenchReport {
    let jobs: Vec<(usize, Operator, u64)> = instances
        .iter()
        .enumerate()
        .flat_map(|(i, _)| ops.iter().flat_map(move |&op| seeds.iter().map(move |&s| (i, op, s))))
        .collect();
    let results: Vec<(usize, Operator, u64, dprlns::Result<SearchResult>)> = jobs
        .into_par_iter()
        .map(|(i, op, seed)| {
            let cfg = SearchConfig {
                operator: op,
                seed,
                ..base.clone()
            };
            (i, op, seed, lns_run(&instances[i].1, &cfg))
        })
        .collect();

    let mut scales: Vec<&str> = Vec::new();
    for (scale, _) in instances {
        if !scales.contains(&scale.as_str()) {
            scales.push(scale);
        }
    }
    let mut report = BenchReport {
        runs: Vec::new(),
        summary: Vec::new(),
        failures: Vec::new(),
        traces: Vec::new(),
    };
    for &scale in &scales {
        for &op in ops {
            let group: Vec<&(usize, Operator, u64, dprlns::Result<SearchResult>)> = results
                .iter()
                .filter(|(i, o, _, _)| *o == op && instances[*i].0 == scale)
                .collect();
            if let Some((i, _, seed, Err(e))) = group.iter().find(|r| r.3.is_err()) {
                report.failures.push((
                    scale.to_string(),
                    op.to_string(),
                    format!("{} seed {seed}: {e}", instances[*i].1.name()),
                ));
                continue;
            }
            let mut costs = Vec::with_capacity(group.len());
            for (i, _, seed, res) in group {
                let res = res.as_ref().expect("failures handled above");
                costs.push(res.best_cost);
                report.runs.push(RunRecord {
                    scale: scale.to_string(),
                    instance: instances[*i].1.name().to_string(),
                    op: op.to_string(),
                    seed: *seed,
                    initial_cost: res.initial_cost,
                    best_cost: res.best_cost,
                    vehicles: res.best.n_vehicles(),
                    runtime_ms: res.runtime.as_secs_f64() * 1e3,
                });
                report.traces.push(res.trace.clone());
            }
            let (mean, stddev) = mean_std(&costs);
            report.summary.push(GroupSummary {
                scale: scale.to_string(),
                op: op.to_string(),
                runs: costs.len(),
                mean,
                stddev,
            });
        }
    }
    report
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Scales as rows, operators as columns, `mean ± stddev` cells.
pub fn render_table(summary: &[GroupSummary], ops: &[Operator]) -> String {
    let mut scales: Vec<&str> = Vec::new();
    for g in summary {
        if !scales.contains(&g.scale.as_str()) {
            scales.push(&g.scale);
        }
    }
    let cell = |scale: &str, op: &Operator| {
        summary
            .iter()
            .find(|g| g.scale == scale && g.op == op.name())
            .map_or_else(|| "failed".to_string(), |g| format!("{:.2} ± {:.2}", g.mean, g.stddev))
    };
    let scale_w = scales.iter().map(|s| s.len()).chain([5]).max().unwrap_or(5);
    let widths: Vec<usize> = ops
        .iter()
        .map(|op| {
            scales
                .iter()
                .map(|s| cell(s, op).chars().count())
                .chain([op.name().len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let _ = write!(out, "{:<scale_w$}", "scale");
    for (op, w) in ops.iter().zip(&widths) {
        let _ = write!(out, "  {:>w$}", op.name());
    }
    out.push('\n');
    for s in &scales {
        let _ = write!(out, "{s:<scale_w$}");
        for (op, w) in ops.iter().zip(&widths) {
            let c = cell(s, op);
            let pad = w.saturating_sub(c.chars().count());
            let _ = write!(out, "  {}{c}", " ".repeat(pad));
        }
        out.push('\n');
    }
    out
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_bench(a: &BenchArgs) -> CliResult<()> {
    let ops = parse_ops(&a.op)?;
    let base = base_config(&a.search, &ops)?;
    if a.seeds == 0 {
        return Err(CliError::Usage("--seeds must be >= 1".into()));
    }
    if !a.manifest.is_file() {
        return Err(CliError::Usage(format!("manifest not found: {}", a.manifest.display())));
    }
    let text = fs::read_to_string(&a.manifest)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", a.manifest.display())))?;
    let dir = a.manifest.parent().unwrap_or(Path::new("."));
    let instances = parse_manifest(&text, dir)?
        .into_iter()
        .map(|e| Ok((e.scale, load_instance(&e.path, e.customers)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let seeds: Vec<u64> = (a.seed..a.seed + a.seeds).collect();

    let pool = thread_pool()?;
    let report = pool.install(|| run_bench(&instances, &ops, &seeds, &base));

    print!("{}", render_table(&report.summary, &ops));
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        write_rows(&dir.join("summary.csv"), &report.summary)?;
        write_rows(&dir.join("runs.csv"), &report.runs)?;
    }
    if let Some(dir) = &a.trace {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for (run, rows) in report.runs.iter().zip(&report.traces) {
            let name = format!("{}_{}_{}.csv", run.instance, run.op, run.seed);
            write_trace(&dir.join(name), rows)?;
        }
    }
    if !report.failures.is_empty() {
        for (scale, op, msg) in &report.failures {
            eprintln!("group {scale}/{op} aborted: {msg}");
        }
        return Err(CliError::Runtime(anyhow::anyhow!(
            "{} benchmark group(s) failed",
            report.failures.len()
        )));
    }
    Ok(())
}

/// Instance seeds drawn from the master seed, one per file.
pub fn derived_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..count).map(|_| rng.gen::<u32>() as u64).collect()
}

pub fn cmd_generate(a: &GenerateArgs) -> CliResult<()> {
    let params: Vec<GeneratorParams> = derived_seeds(a.seed, a.count)
        .into_iter()
        .map(|seed| GeneratorParams {
            n_customers: a.customers,
            p_start: a.p_start,
            seed,
        })
        .collect();
    for p in &params {
        p.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    for p in &params {
        let inst = generate_synthetic(p).context("generator failed")?;
        let path = a.out.join(format!("{}.json", inst.name()));
        write_instance(&path, &inst).with_context(|| format!("cannot write {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}

pub fn cmd_traces(a: &TracesArgs) -> CliResult<()> {
    let mut traces = Vec::with_capacity(a.inputs.len());
    for path in &a.inputs {
        if !path.is_file() {
            return Err(CliError::Usage(format!("trace file not found: {}", path.display())));
        }
        let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        traces.push(read_csv(file).with_context(|| format!("cannot parse {}", path.display()))?);
    }
    let rows = aggregate(&traces).context("cannot aggregate traces")?;
    match &a.out {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            write_aggregate_csv(&rows, file)?;
        }
        None => write_aggregate_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}
