use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use pcmsim::harness::{
    self, Execution, ExperimentSpec, GenPattern, GenSpec, OutputFormat, RunReport, TraceSource,
};
use pcmsim::trace::{trace_stats, DEFAULT_REUSE_CAP};
use pcmsim::{AccessKind, CacheConfig, CostModel, MultilevelConfig, PolicyKind};

#[derive(Parser, Debug)]
#[command(name = "pcmsim", version, about = "Write-aware LLC replacement policy simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Replay one trace under one policy.
    Run(RunArgs),
    /// Replay one trace under several policies and normalize to LRU.
    Compare(CompareArgs),
    /// Write a synthetic trace.
    Gen(GenArgs),
    /// Print statistics for a trace.
    Stats(StatsArgs),
    /// Validate a freshness/dirtiness level table file.
    Levels(LevelsArgs),
}

#[derive(Args, Debug, Clone)]
struct CacheArgs {
    /// Total capacity in KiB; the set count is derived from it unless --sets is given.
    #[arg(long, default_value_t = 512)]
    size_kb: usize,
    #[arg(long)]
    sets: Option<usize>,
    #[arg(long, default_value_t = 16)]
    ways: usize,
    #[arg(long, default_value_t = 64)]
    line_size: usize,
    #[arg(long)]
    flush_at_end: bool,
    #[arg(long, default_value_t = 2)]
    rrpv_bits: u32,
    #[arg(long, default_value_t = 10)]
    write_weight: u32,
    #[arg(long, default_value_t = 32)]
    dueling_sets: usize,
    #[arg(long, default_value_t = 10)]
    psel_bits: u32,
    /// LDF sub-block size in bytes.
    #[arg(long, default_value_t = 8)]
    subblock_size: usize,
    #[arg(long, default_value_t = 32)]
    brrip_epsilon: u32,
    #[arg(long, default_value_t = 15)]
    hit_cycles: u64,
    #[arg(long, default_value_t = 1024)]
    read_latency: u64,
    #[arg(long, default_value_t = 4096)]
    write_latency: u64,
}

impl CacheArgs {
    fn config(&self, policy: PolicyKind) -> Result<CacheConfig> {
        let mut cfg = match self.sets {
            Some(sets) => CacheConfig::new(sets, self.ways, self.line_size, policy),
            None => CacheConfig::from_size_kb(self.size_kb, self.ways, self.line_size, policy)?,
        };
        cfg.flush_at_end = self.flush_at_end;
        cfg.params.rrpv_bits = self.rrpv_bits;
        cfg.params.write_weight = self.write_weight;
        cfg.params.dueling_sets = self.dueling_sets;
        cfg.params.psel_bits = self.psel_bits;
        cfg.params.subblock_bytes = self.subblock_size;
        cfg.params.brrip_epsilon_denominator = self.brrip_epsilon;
        cfg.validate()?;
        Ok(cfg)
    }

    fn cost(&self) -> CostModel {
        CostModel {
            hit_cycles: self.hit_cycles,
            read_latency_cycles: self.read_latency,
            write_latency_cycles: self.write_latency,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum GenName {
    Scan,
    Loop,
    Zipf,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum KindArg {
    Read,
    Write,
}

#[derive(Args, Debug, Clone)]
struct SourceArgs {
    /// Trace file (`R|W <address>` per line).
    #[arg(long, conflicts_with = "gen")]
    trace: Option<PathBuf>,
    /// Synthetic generator.
    #[arg(long = "gen", value_enum)]
    gen: Option<GenName>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    gen_params: GenParams,
}

#[derive(Args, Debug, Clone)]
struct GenParams {
    /// scan: lines to touch; zipf: distinct lines.
    #[arg(long, default_value_t = 16384)]
    lines: u64,
    /// scan: address stride in bytes.
    #[arg(long, default_value_t = 64)]
    stride: u64,
    /// scan: access kind.
    #[arg(long, value_enum, default_value = "read")]
    kind: KindArg,
    /// loop: hot lines revisited every iteration.
    #[arg(long, default_value_t = 12288)]
    hot: u64,
    /// loop: fresh single-use lines per iteration.
    #[arg(long, default_value_t = 1024)]
    cold: u64,
    #[arg(long, default_value_t = 10)]
    iterations: u64,
    /// zipf: total accesses.
    #[arg(long, default_value_t = 100_000)]
    accesses: u64,
    #[arg(long, default_value_t = 1.0)]
    zipf_s: f64,
    #[arg(long, default_value_t = 0.5)]
    write_fraction: f64,
    /// Randomize intra-line offsets.
    #[arg(long)]
    jitter: bool,
}

impl SourceArgs {
    fn source(&self, line_size: u64) -> Result<TraceSource> {
        match (&self.trace, self.gen) {
            (Some(p), None) => Ok(TraceSource::File(p.clone())),
            (None, Some(g)) => Ok(TraceSource::Generated(self.gen_spec(g, line_size)?)),
            _ => bail!(UsageError("exactly one of --trace or --gen is required".into())),
        }
    }

    fn gen_spec(&self, g: GenName, line_size: u64) -> Result<GenSpec> {
        let p = &self.gen_params;
        if !(0.0..=1.0).contains(&p.write_fraction) {
            bail!(UsageError(format!("--write-fraction must be in [0, 1], got {}", p.write_fraction)));
        }
        if p.zipf_s < 0.0 {
            bail!(UsageError(format!("--zipf-s must be >= 0, got {}", p.zipf_s)));
        }
        let pattern = match g {
            GenName::Scan => GenPattern::Scan {
                lines: p.lines,
                stride_bytes: p.stride,
                kind: match p.kind {
                    KindArg::Read => AccessKind::Read,
                    KindArg::Write => AccessKind::Write,
                },
            },
            GenName::Loop => GenPattern::Loop {
                hot_lines: p.hot,
                cold_lines: p.cold,
                iterations: p.iterations,
                write_fraction: p.write_fraction,
            },
            GenName::Zipf => {
                if p.lines == 0 {
                    bail!(UsageError("--lines must be >= 1".into()));
                }
                GenPattern::Zipf {
                    lines: p.lines,
                    accesses: p.accesses,
                    zipf_s: p.zipf_s,
                    write_fraction: p.write_fraction,
                }
            }
        };
        Ok(GenSpec { pattern, line_size, jitter: p.jitter })
    }
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    #[arg(long, default_value = "json")]
    format: OutputFormat,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value = "MAC")]
    policy: PolicyKind,
    #[command(flatten)]
    cache: CacheArgs,
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Comma-separated policies; LRU is added as the baseline if missing.
    #[arg(long, value_delimiter = ',', default_value = "LRU,SRRIP,BRRIP,DRRIPW,LDF,RWA,MAC")]
    policy: Vec<PolicyKind>,
    /// Run policies one after another instead of in parallel.
    #[arg(long)]
    serial: bool,
    #[command(flatten)]
    cache: CacheArgs,
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long = "gen", value_enum)]
    gen: GenName,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    line_size: u64,
    #[command(flatten)]
    gen_params: GenParams,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long, default_value_t = 64)]
    line_size: u64,
    /// Reuse-distance histogram buckets.
    #[arg(long, default_value_t = DEFAULT_REUSE_CAP)]
    reuse_cap: usize,
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LevelsArgs {
    /// Table file with `fl dl fdl` rows.
    #[arg(long)]
    table: PathBuf,
    #[arg(long, default_value_t = 16)]
    ways: u32,
    #[arg(long, default_value_t = 64)]
    line_size: u32,
}

/// Bad flag combinations detected after clap parsing; exit code 1.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };

    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Levels(a) => cmd_levels(a),
    }
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cache = a.cache.config(a.policy).map_err(|e| UsageError(e.to_string()))?;
    let spec = ExperimentSpec {
        source: a.source.source(cache.line_size_bytes as u64)?,
        cache,
        seed: a.source.seed,
        cost: a.cache.cost(),
        format: a.output.format,
        out: a.output.out.clone(),
    };
    let metrics = harness::run_experiment(&spec)?;
    let body = RunReport::new(&spec, metrics).render(spec.format)?;
    harness::write_output(&body, spec.out.as_deref())?;
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let cache = a.cache.config(PolicyKind::Lru).map_err(|e| UsageError(e.to_string()))?;
    let source = a.source.source(cache.line_size_bytes as u64)?;
    let trace = harness::load_trace(&source, a.source.seed)?;
    log::info!("comparing {} policies on {} accesses", a.policy.len(), trace.len());
    let execution = if a.serial { Execution::Serial } else { Execution::Parallel };
    let report = harness::compare(&a.policy, &trace, &cache, &a.cache.cost(), a.source.seed, execution)?;
    harness::emit_report(&report, a.output.format, a.output.out.as_deref())?;
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let src = SourceArgs { trace: None, gen: Some(a.gen), seed: a.seed, gen_params: a.gen_params };
    let trace = src.gen_spec(a.gen, a.line_size)?.generate(a.seed);
    harness::write_output(&trace.to_text(), a.out.as_deref())?;
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Result<()> {
    let source = a.source.source(a.line_size)?;
    let trace = harness::load_trace(&source, a.source.seed)?;
    let stats = trace_stats(&trace, a.line_size, a.reuse_cap);
    let mut body = serde_json::to_string_pretty(&stats)?;
    body.push('\n');
    harness::write_output(&body, a.out.as_deref())?;
    Ok(())
}

fn cmd_levels(a: LevelsArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.table)
        .with_context(|| format!("reading {}", a.table.display()))?;
    let cfg = MultilevelConfig::from_table_text(&text, a.ways, a.line_size)
        .with_context(|| format!("parsing {}", a.table.display()))?;
    match cfg.validate() {
        Ok(()) => {
            println!("ok: n1={} n2={} n_total={}", cfg.n1, cfg.n2, cfg.n_total);
            Ok(())
        }
        Err(violations) => {
            for v in &violations {
                println!("violation: {v}");
            }
            bail!("{} violation(s) in {}", violations.len(), a.table.display())
        }
    }
}
