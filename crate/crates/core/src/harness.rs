//! Experiment runner and LRU-normalized comparison reports.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{normalize, stall_cycles, AccessKind, Cache, CacheError, Metrics, NormalizeError};
use crate::config::{CacheConfig, CostModel, PolicyKind, PolicyParams};
use crate::trace::{self, Trace, TraceError, TraceMeta, TraceStats, DEFAULT_REUSE_CAP};

pub const TOOL_NAME: &str = "pcmsim";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Column order of the comparison CSV.
pub const CSV_COLUMNS: [&str; 11] = [
    "policy",
    "hits",
    "misses",
    "pcm_reads",
    "pcm_writes",
    "flush_writes",
    "hit_ratio",
    "stall_cycles",
    "norm_writes",
    "norm_hit_ratio",
    "norm_cycles",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(format!("unknown format '{s}' (expected json or csv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "lowercase")]
pub enum GenPattern {
    Scan { lines: u64, stride_bytes: u64, kind: AccessKind },
    Loop { hot_lines: u64, cold_lines: u64, iterations: u64, write_fraction: f64 },
    Zipf { lines: u64, accesses: u64, zipf_s: f64, write_fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub pattern: GenPattern,
    pub line_size: u64,
    /// Randomize intra-line offsets (exercises LDF sub-blocks).
    pub jitter: bool,
}

impl GenSpec {
    pub fn generate(&self, seed: u64) -> Trace {
        let t = match self.pattern {
            GenPattern::Scan { lines, stride_bytes, kind } => trace::gen_scan(lines, stride_bytes, kind),
            GenPattern::Loop { hot_lines, cold_lines, iterations, write_fraction } => {
                trace::gen_loop_working_set(hot_lines, cold_lines, iterations, write_fraction, self.line_size, seed)
            }
            GenPattern::Zipf { lines, accesses, zipf_s, write_fraction } => {
                trace::gen_zipf_mixed(lines, accesses, zipf_s, write_fraction, self.line_size, seed)
            }
        };
        if self.jitter {
            trace::with_offset_jitter(t, self.line_size, seed)
        } else {
            t
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceSource {
    File(PathBuf),
    Generated(GenSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub cache: CacheConfig,
    pub source: TraceSource,
    pub seed: u64,
    pub cost: CostModel,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot open trace {path}: {source}")]
    OpenTrace { path: PathBuf, source: io::Error },
    #[error("trace {path}: {source}")]
    Trace { path: PathBuf, source: TraceError },
    #[error("invalid configuration: {0}")]
    Config(#[from] CacheError),
    #[error("invalid configuration: {0}")]
    Cost(#[from] crate::config::ConfigError),
    #[error("policy {policy} failed: {source}")]
    Run { policy: PolicyKind, source: CacheError },
    #[error("policy {policy}: {source}")]
    Normalize { policy: PolicyKind, source: NormalizeError },
    #[error("writing {path}: {source}")]
    Output { path: String, source: io::Error },
    #[error("serializing report: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub fn load_trace(source: &TraceSource, seed: u64) -> Result<Trace, HarnessError> {
    match source {
        TraceSource::Generated(g) => Ok(g.generate(seed)),
        TraceSource::File(path) => {
            let f = File::open(path).map_err(|e| HarnessError::OpenTrace { path: path.clone(), source: e })?;
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            trace::parse_trace(BufReader::new(f), &name)
                .map_err(|e| HarnessError::Trace { path: path.clone(), source: e })
        }
    }
}

/// Replays `trace` through a fresh cache. Flushes at the end when the config asks for it.
pub fn run_trace(config: &CacheConfig, trace: &Trace, seed: u64) -> Result<Metrics, CacheError> {
    let mut cache = Cache::new(config.clone(), seed)?;
    for a in &trace.accesses {
        cache.access(*a);
    }
    if config.flush_at_end {
        cache.flush();
    }
    Ok(*cache.metrics())
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Metrics, HarnessError> {
    spec.cost.validate()?;
    let trace = load_trace(&spec.source, spec.seed)?;
    log::info!("replaying {} accesses under {}", trace.len(), spec.cache.policy);
    run_trace(&spec.cache, &trace, spec.seed).map_err(|e| HarnessError::Run { policy: spec.cache.policy, source: e })
}

/// Geometry and parameters echoed into reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub num_sets: usize,
    pub num_ways: usize,
    pub line_size_bytes: usize,
    pub params: PolicyParams,
    pub flush_at_end: bool,
}

impl From<&CacheConfig> for ConfigEcho {
    fn from(c: &CacheConfig) -> Self {
        Self {
            num_sets: c.num_sets,
            num_ways: c.num_ways,
            line_size_bytes: c.line_size_bytes,
            params: c.params.clone(),
            flush_at_end: c.flush_at_end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub policy: PolicyKind,
    pub hits: u64,
    pub misses: u64,
    pub pcm_reads: u64,
    pub pcm_writes: u64,
    pub flush_writes: u64,
    pub hit_ratio: f64,
    pub stall_cycles: u64,
    pub norm_writes: f64,
    /// `None` when LRU had no hits.
    pub norm_hit_ratio: Option<f64>,
    pub norm_cycles: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub tool: String,
    pub version: String,
    pub config: ConfigEcho,
    pub cost: CostModel,
    pub seed: u64,
    pub trace: TraceMeta,
    pub trace_stats: TraceStats,
    /// Sorted by `norm_writes` ascending; ties keep request order.
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Serial,
    Parallel,
}

/// Runs every policy on the same trace and normalizes against LRU, which is
/// added as a row if `policies` does not already contain it.
pub fn compare(
    policies: &[PolicyKind],
    trace: &Trace,
    config: &CacheConfig,
    cost: &CostModel,
    seed: u64,
    execution: Execution,
) -> Result<ComparisonReport, HarnessError> {
    cost.validate()?;
    let mut requested: Vec<PolicyKind> = policies.to_vec();
    if !requested.contains(&PolicyKind::Lru) {
        requested.insert(0, PolicyKind::Lru);
    }
    let cfg_for = |p: PolicyKind| config.clone().with_policy(p);
    let results: Vec<Result<Metrics, CacheError>> = match execution {
        Execution::Serial => requested.iter().map(|&p| run_trace(&cfg_for(p), trace, seed)).collect(),
        Execution::Parallel => std::thread::scope(|s| {
            let handles: Vec<_> = requested
                .iter()
                .map(|&p| {
                    let cfg = cfg_for(p);
                    s.spawn(move || run_trace(&cfg, trace, seed))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("policy run panicked")).collect()
        }),
    };
    let mut metrics = Vec::with_capacity(requested.len());
    for (&p, r) in requested.iter().zip(results) {
        metrics.push((p, r.map_err(|e| HarnessError::Run { policy: p, source: e })?));
    }
    let baseline = metrics
        .iter()
        .find(|(p, _)| *p == PolicyKind::Lru)
        .map(|(_, m)| *m)
        .expect("LRU is always run");

    let mut rows = Vec::with_capacity(metrics.len());
    for (policy, m) in metrics {
        let n = normalize(&m, &baseline, cost).map_err(|e| HarnessError::Normalize { policy, source: e })?;
        rows.push(ReportRow {
            policy,
            hits: m.hits,
            misses: m.misses,
            pcm_reads: m.pcm_reads,
            pcm_writes: m.pcm_writes,
            flush_writes: m.flush_writes,
            hit_ratio: m.hit_ratio(),
            stall_cycles: stall_cycles(&m, cost),
            norm_writes: n.writes,
            norm_hit_ratio: n.hit_ratio,
            norm_cycles: n.stall_cycles,
        });
    }
    rows.sort_by(|a, b| a.norm_writes.total_cmp(&b.norm_writes));

    Ok(ComparisonReport {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        config: config.into(),
        cost: *cost,
        seed,
        trace: trace.meta.clone(),
        trace_stats: trace::trace_stats(trace, config.line_size_bytes as u64, DEFAULT_REUSE_CAP),
        rows,
    })
}

pub fn report_to_csv(report: &ComparisonReport) -> String {
    let mut s = CSV_COLUMNS.join(",");
    s.push('\n');
    for r in &report.rows {
        let norm_hr = r.norm_hit_ratio.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.policy,
            r.hits,
            r.misses,
            r.pcm_reads,
            r.pcm_writes,
            r.flush_writes,
            r.hit_ratio,
            r.stall_cycles,
            r.norm_writes,
            norm_hr,
            r.norm_cycles
        );
    }
    s
}

pub fn report_to_json(report: &ComparisonReport) -> Result<String, HarnessError> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn render_report(report: &ComparisonReport, format: OutputFormat) -> Result<String, HarnessError> {
    match format {
        OutputFormat::Csv => Ok(report_to_csv(report)),
        OutputFormat::Json => report_to_json(report),
    }
}

/// Writes `body` to `out`, or to stdout when `out` is `None`.
pub fn write_output(body: &str, out: Option<&Path>) -> Result<(), HarnessError> {
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| HarnessError::Output { path: path.display().to_string(), source: e }),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| HarnessError::Output { path: "<stdout>".into(), source: e })
        }
    }
}

pub fn emit_report(report: &ComparisonReport, format: OutputFormat, out: Option<&Path>) -> Result<(), HarnessError> {
    write_output(&render_report(report, format)?, out)
}

/// Single-run summary emitted by `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub policy: PolicyKind,
    pub config: ConfigEcho,
    pub cost: CostModel,
    pub seed: u64,
    pub metrics: Metrics,
    pub hit_ratio: f64,
    pub stall_cycles: u64,
}

impl RunReport {
    pub fn new(spec: &ExperimentSpec, metrics: Metrics) -> Self {
        Self {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            policy: spec.cache.policy,
            config: (&spec.cache).into(),
            cost: spec.cost,
            seed: spec.seed,
            metrics,
            hit_ratio: metrics.hit_ratio(),
            stall_cycles: stall_cycles(&metrics, &spec.cost),
        }
    }

    pub fn render(&self, format: OutputFormat) -> Result<String, HarnessError> {
        match format {
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(self)?;
                s.push('\n');
                Ok(s)
            }
            OutputFormat::Csv => {
                let m = &self.metrics;
                Ok(format!(
                    "policy,hits,misses,pcm_reads,pcm_writes,flush_writes,hit_ratio,stall_cycles\n{},{},{},{},{},{},{},{}\n",
                    self.policy, m.hits, m.misses, m.pcm_reads, m.pcm_writes, m.flush_writes, self.hit_ratio, self.stall_cycles
                ))
            }
        }
    }
}
