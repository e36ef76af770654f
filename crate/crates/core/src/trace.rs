//! Trace text format, synthetic generators and trace statistics.
//!
//! One access per line: `R 0x1a40` or `W 4096`. Lines starting with `#`
//! are comments; blank lines are ignored.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{Access, AccessKind};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TraceMeta {
    pub name: String,
    pub seed: Option<u64>,
    /// Free-form generator parameters, echoed into reports.
    pub params: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub meta: TraceMeta,
    pub accesses: Vec<Access>,
}

impl Trace {
    pub fn new(meta: TraceMeta, accesses: Vec<Access>) -> Self {
        Self { meta, accesses }
    }

    pub fn len(&self) -> usize {
        self.accesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accesses.is_empty()
    }

    /// Serializes to the text format with a `#` header carrying the metadata.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.accesses.len() * 12 + 64);
        let _ = writeln!(s, "# trace: {}", self.meta.name);
        if let Some(seed) = self.meta.seed {
            let _ = writeln!(s, "# seed: {seed}");
        }
        if !self.meta.params.is_empty() {
            let _ = writeln!(s, "# params: {}", self.meta.params);
        }
        for a in &self.accesses {
            s.push_str(&format_access(a));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceLine {
    Access(Access),
    Comment,
    Blank,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("reading trace: {0}")]
    Io(#[from] std::io::Error),
}

pub fn format_access(a: &Access) -> String {
    let k = match a.kind {
        AccessKind::Read => 'R',
        AccessKind::Write => 'W',
    };
    format!("{k} {:#x}", a.address)
}

/// Parses one physical line; `line_no` is only used in error messages.
pub fn parse_trace_line(text: &str, line_no: usize) -> Result<TraceLine, TraceError> {
    let body = text.trim();
    if body.is_empty() {
        return Ok(TraceLine::Blank);
    }
    if body.starts_with('#') {
        return Ok(TraceLine::Comment);
    }
    let err = |msg: String| TraceError::Parse { line: line_no, msg };
    let mut fields = body.split_whitespace();
    let kind = match fields.next() {
        Some("R") | Some("r") => AccessKind::Read,
        Some("W") | Some("w") => AccessKind::Write,
        Some(other) => return Err(err(format!("unknown access kind '{other}' (expected R or W)"))),
        None => unreachable!("non-empty line has a first field"),
    };
    let addr_text = fields.next().ok_or_else(|| err("missing address".into()))?;
    if let Some(extra) = fields.next() {
        return Err(err(format!("unexpected trailing field '{extra}'")));
    }
    let address = match addr_text.strip_prefix("0x").or_else(|| addr_text.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => addr_text.parse::<u64>(),
    }
    .map_err(|e| err(format!("bad address '{addr_text}': {e}")))?;
    Ok(TraceLine::Access(Access { kind, address }))
}

pub fn parse_trace<R: BufRead>(reader: R, name: &str) -> Result<Trace, TraceError> {
    let mut accesses = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        if let TraceLine::Access(a) = parse_trace_line(&line?, i + 1)? {
            accesses.push(a);
        }
    }
    Ok(Trace::new(TraceMeta { name: name.to_string(), ..Default::default() }, accesses))
}

/// `lines` addresses `0, stride, 2·stride, …`, each touched once.
pub fn gen_scan(lines: u64, stride_bytes: u64, kind: AccessKind) -> Trace {
    let accesses = (0..lines)
        .map(|i| Access { kind, address: i * stride_bytes })
        .collect();
    Trace::new(
        TraceMeta {
            name: "scan".into(),
            seed: None,
            params: format!("lines={lines} stride={stride_bytes} kind={kind:?}"),
        },
        accesses,
    )
}

/// Each iteration walks every hot line (each access a write with probability
/// `write_fraction`), then reads a fresh batch of `cold_lines` never seen
/// before. Hot lines occupy line indices `0..hot_lines`; cold lines follow.
pub fn gen_loop_working_set(
    hot_lines: u64,
    cold_lines: u64,
    iterations: u64,
    write_fraction: f64,
    line_size: u64,
    seed: u64,
) -> Trace {
    let p = write_fraction.clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accesses = Vec::with_capacity(((hot_lines + cold_lines) * iterations) as usize);
    for it in 0..iterations {
        for h in 0..hot_lines {
            let kind = if rng.random_bool(p) { AccessKind::Write } else { AccessKind::Read };
            accesses.push(Access { kind, address: h * line_size });
        }
        let cold_base = hot_lines + it * cold_lines;
        for c in 0..cold_lines {
            accesses.push(Access::read((cold_base + c) * line_size));
        }
    }
    Trace::new(
        TraceMeta {
            name: "loop".into(),
            seed: Some(seed),
            params: format!(
                "hot={hot_lines} cold={cold_lines} iterations={iterations} write_fraction={write_fraction} line={line_size}"
            ),
        },
        accesses,
    )
}

/// Line indices drawn from Zipf(`zipf_s`) over `1..=lines` (`s = 0` is uniform);
/// rank 1 is line 0.
pub fn gen_zipf_mixed(
    lines: u64,
    accesses: u64,
    zipf_s: f64,
    write_fraction: f64,
    line_size: u64,
    seed: u64,
) -> Trace {
    let p = write_fraction.clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zipf = Zipf::new(lines.max(1) as f64, zipf_s.max(0.0)).expect("n >= 1 and s >= 0");
    let out = (0..accesses)
        .map(|_| {
            let rank = zipf.sample(&mut rng) as u64;
            let kind = if rng.random_bool(p) { AccessKind::Write } else { AccessKind::Read };
            Access { kind, address: (rank - 1) * line_size }
        })
        .collect();
    Trace::new(
        TraceMeta {
            name: "zipf".into(),
            seed: Some(seed),
            params: format!(
                "lines={lines} accesses={accesses} s={zipf_s} write_fraction={write_fraction} line={line_size}"
            ),
        },
        out,
    )
}

/// Replaces every address's intra-line offset with a random one so that
/// sub-block dirtiness varies.
pub fn with_offset_jitter(mut trace: Trace, line_size: u64, seed: u64) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6a09_e667_f3bc_c908);
    for a in &mut trace.accesses {
        let base = a.address - a.address % line_size;
        a.address = base + rng.random_range(0..line_size);
    }
    trace.meta.params.push_str(" jitter=on");
    trace
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub total_accesses: u64,
    pub write_fraction: f64,
    pub unique_lines: u64,
    /// Distinct lines referenced at least twice.
    pub working_set_lines: u64,
    /// `reuse_histogram[d]` counts re-references with stack distance `d`
    /// (distinct lines touched in between), for `d < cap`.
    pub reuse_histogram: Vec<u64>,
    /// Re-references with stack distance `>= cap`.
    pub reuse_overflow: u64,
    /// First references (infinite distance).
    pub cold_references: u64,
}

pub const DEFAULT_REUSE_CAP: usize = 64;

pub fn trace_stats(t: &Trace, line_size: u64, cap: usize) -> TraceStats {
    let mut writes = 0u64;
    let mut hist = vec![0u64; cap];
    let mut overflow = 0u64;
    let mut cold = 0u64;
    let mut seen: HashSet<u64> = HashSet::new();
    let mut refs: HashMap<u64, u32> = HashMap::new();
    // LRU stack, MRU at the end
    let mut stack: Vec<u64> = Vec::new();
    for a in &t.accesses {
        if a.is_write() {
            writes += 1;
        }
        let line = a.address / line_size;
        *refs.entry(line).or_default() += 1;
        if seen.insert(line) {
            cold += 1;
        } else {
            let pos = stack.iter().rposition(|&l| l == line).expect("seen lines are on the stack");
            let distance = stack.len() - 1 - pos;
            match hist.get_mut(distance) {
                Some(b) => *b += 1,
                None => overflow += 1,
            }
            stack.remove(pos);
        }
        stack.push(line);
    }
    let total = t.accesses.len() as u64;
    TraceStats {
        total_accesses: total,
        write_fraction: if total == 0 { 0.0 } else { writes as f64 / total as f64 },
        unique_lines: seen.len() as u64,
        working_set_lines: refs.values().filter(|&&n| n > 1).count() as u64,
        reuse_histogram: hist,
        reuse_overflow: overflow,
        cold_references: cold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        assert_eq!(
            parse_trace_line("R 0x1a40", 1).unwrap(),
            TraceLine::Access(Access::read(0x1a40))
        );
        assert_eq!(parse_trace_line("  W 4096 ", 1).unwrap(), TraceLine::Access(Access::write(4096)));
        assert_eq!(parse_trace_line("# header", 1).unwrap(), TraceLine::Comment);
        assert_eq!(parse_trace_line("   ", 1).unwrap(), TraceLine::Blank);
        match parse_trace_line("X 0x10", 7) {
            Err(TraceError::Parse { line: 7, .. }) => {}
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_trace_line("R", 1).is_err());
        assert!(parse_trace_line("R 0xzz", 1).is_err());
        assert!(parse_trace_line("R 1 2", 1).is_err());
        assert!(parse_trace_line("R -5", 1).is_err());
    }

    #[test]
    fn parse_reader_reports_line_number() {
        let text = "# t\nR 0x0\n\nW 0x40\nQ 1\n";
        match parse_trace(text.as_bytes(), "t") {
            Err(TraceError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        let t = parse_trace("R 0x0\nW 64\n".as_bytes(), "t").unwrap();
        assert_eq!(t.accesses, vec![Access::read(0), Access::write(64)]);
    }

    #[test]
    fn scan_examples() {
        let t = gen_scan(3, 64, AccessKind::Read);
        assert_eq!(t.accesses, vec![Access::read(0), Access::read(0x40), Access::read(0x80)]);
        assert_eq!(gen_scan(1, 64, AccessKind::Write).accesses, vec![Access::write(0)]);
        assert_eq!(trace_stats(&gen_scan(10, 64, AccessKind::Read), 64, 8).unique_lines, 10);
    }

    #[test]
    fn loop_examples() {
        let t = gen_loop_working_set(2, 0, 2, 0.0, 64, 9);
        assert_eq!(
            t.accesses,
            vec![Access::read(0), Access::read(64), Access::read(0), Access::read(64)]
        );
        let scan = gen_loop_working_set(0, 3, 1, 0.0, 64, 9);
        assert_eq!(scan.accesses, gen_scan(3, 64, AccessKind::Read).accesses);
        let all_w = gen_loop_working_set(4, 2, 3, 1.0, 64, 9);
        for (i, a) in all_w.accesses.iter().enumerate() {
            assert_eq!(a.is_write(), i % 6 < 4);
        }
        // cold batches never repeat
        let t = gen_loop_working_set(1, 2, 3, 0.0, 64, 0);
        let lines: Vec<u64> = t.accesses.iter().map(|a| a.address / 64).collect();
        assert_eq!(lines, vec![0, 1, 2, 0, 3, 4, 0, 5, 6]);
    }

    #[test]
    fn zipf_examples() {
        let t = gen_zipf_mixed(1, 5, 1.3, 0.0, 64, 3);
        assert_eq!(t.accesses, vec![Access::read(0); 5]);
        let t = gen_zipf_mixed(10, 10_000, 0.0, 0.5, 64, 3);
        let wf = trace_stats(&t, 64, 8).write_fraction;
        assert!((wf - 0.5).abs() <= 0.05, "write fraction {wf}");
        assert!(t.accesses.iter().all(|a| a.address / 64 < 10));
        assert_eq!(t, gen_zipf_mixed(10, 10_000, 0.0, 0.5, 64, 3));
        assert_ne!(t.accesses, gen_zipf_mixed(10, 10_000, 0.0, 0.5, 64, 4).accesses);
    }

    #[test]
    fn zipf_skew_favors_low_ranks() {
        let t = gen_zipf_mixed(100, 20_000, 1.2, 0.0, 64, 11);
        let first = t.accesses.iter().filter(|a| a.address == 0).count();
        let last = t.accesses.iter().filter(|a| a.address == 99 * 64).count();
        assert!(first > 10 * last.max(1), "first={first} last={last}");
    }

    #[test]
    fn stats_examples() {
        let empty = trace_stats(&Trace::default(), 64, 4);
        assert_eq!(empty.total_accesses, 0);
        assert_eq!(empty.write_fraction, 0.0);
        assert_eq!(empty.unique_lines, 0);
        assert_eq!(empty.reuse_histogram, vec![0; 4]);

        let scan = trace_stats(&gen_scan(5, 64, AccessKind::Read), 64, 4);
        assert_eq!((scan.unique_lines, scan.cold_references), (5, 5));
        assert_eq!(scan.reuse_histogram.iter().sum::<u64>() + scan.reuse_overflow, 0);

        let aba = Trace::new(TraceMeta::default(), vec![Access::read(0), Access::read(64), Access::read(0)]);
        let s = trace_stats(&aba, 64, 4);
        assert_eq!(s.reuse_histogram, vec![0, 1, 0, 0]);
        assert_eq!(s.working_set_lines, 1);
    }

    #[test]
    fn stats_overflow_bucket() {
        // a b c d a with cap 2: distance 3 overflows
        let t = Trace::new(TraceMeta::default(), [0, 1, 2, 3, 0].map(|l| Access::read(l * 64)).to_vec());
        let s = trace_stats(&t, 64, 2);
        assert_eq!((s.reuse_histogram.clone(), s.reuse_overflow), (vec![0, 0], 1));
    }

    #[test]
    fn jitter_keeps_lines() {
        let t = gen_loop_working_set(8, 8, 4, 0.5, 64, 1);
        let j = with_offset_jitter(t.clone(), 64, 1);
        assert!(t.accesses.iter().zip(&j.accesses).all(|(a, b)| a.address / 64 == b.address / 64 && a.kind == b.kind));
        assert!(j.accesses.iter().any(|a| a.address % 64 != 0));
    }

    #[test]
    fn text_round_trip() {
        let t = gen_zipf_mixed(50, 200, 0.8, 0.3, 64, 5);
        let back = parse_trace(t.to_text().as_bytes(), "zipf").unwrap();
        assert_eq!(back.accesses, t.accesses);
    }
}
