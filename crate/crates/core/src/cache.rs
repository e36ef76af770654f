//! Policy-agnostic set-associative cache engine.
//!
//! The engine owns tags, valid/dirty bits and a strict per-set recency
//! permutation (rank 0 = MRU). Replacement policies plug in through
//! [`ReplacementPolicy`] and only ever see one set at a time through a
//! [`SetView`]. The model is write-allocate and write-back: evicting a dirty
//! line is the only source of PCM writes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{CacheConfig, ConfigError, CostModel};
use crate::policy::{self, ReplacementPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessKind {
    /// Load or store from the upper level.
    Read,
    /// Write-back from the upper level.
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Access {
    pub kind: AccessKind,
    pub address: u64,
}

impl Access {
    pub fn read(address: u64) -> Self {
        Self { kind: AccessKind::Read, address }
    }

    pub fn write(address: u64) -> Self {
        Self { kind: AccessKind::Write, address }
    }

    pub fn is_write(&self) -> bool {
        self.kind == AccessKind::Write
    }
}

/// Per-line replacement metadata. LDF's sub-block bitmaps live in the policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolicyMeta {
    #[default]
    None,
    /// MAC protection level, 1 (safest) ..= 4.
    Fdl(u8),
    /// RRIP re-reference prediction value.
    Rrpv(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LineState {
    pub tag: u64,
    pub valid: bool,
    pub dirty: bool,
    /// Rank in the set's recency chain, 0 = MRU. Meaningless when invalid.
    pub recency: usize,
    pub meta: PolicyMeta,
}

impl LineState {
    pub fn fdl(&self) -> Option<u8> {
        match self.meta {
            PolicyMeta::Fdl(f) => Some(f),
            _ => None,
        }
    }

    pub fn rrpv(&self) -> Option<u8> {
        match self.meta {
            PolicyMeta::Rrpv(r) => Some(r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvictionEvent {
    pub set_index: usize,
    pub way: usize,
    pub was_dirty: bool,
    pub evicted_tag: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
    /// Dirty evictions during the run.
    pub pcm_writes: u64,
    /// Miss fills.
    pub pcm_reads: u64,
    /// Dirty lines written back by an end-of-run flush.
    pub flush_writes: u64,
}

impl Metrics {
    pub fn hit_ratio(&self) -> f64 {
        if self.accesses == 0 {
            0.0
        } else {
            self.hits as f64 / self.accesses as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessOutcome {
    pub hit: bool,
    pub set_index: usize,
    pub way: usize,
    pub eviction: Option<EvictionEvent>,
}

/// Splits a byte address into `(set_index, tag)`.
pub fn decompose_address(address: u64, config: &CacheConfig) -> (usize, u64) {
    let line = address / config.line_size_bytes as u64;
    let sets = config.num_sets as u64;
    ((line % sets) as usize, line / sets)
}

/// Latency proxy: hits, miss fills and dirty write-backs weighted by the cost model.
pub fn stall_cycles(m: &Metrics, cost: &CostModel) -> u64 {
    m.hits * cost.hit_cycles
        + m.pcm_reads * cost.read_latency_cycles
        + m.pcm_writes * cost.write_latency_cycles
}

/// A policy's counters relative to a baseline run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedReport {
    pub writes: f64,
    /// `None` when the baseline hit ratio is zero.
    pub hit_ratio: Option<f64>,
    pub stall_cycles: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("cannot normalize: baseline {0} is zero")]
    ZeroBaseline(&'static str),
}

pub fn normalize(
    m: &Metrics,
    baseline: &Metrics,
    cost: &CostModel,
) -> Result<NormalizedReport, NormalizeError> {
    if baseline.pcm_writes == 0 {
        return Err(NormalizeError::ZeroBaseline("pcm_writes"));
    }
    if baseline.accesses == 0 {
        return Err(NormalizeError::ZeroBaseline("accesses"));
    }
    let base_cycles = stall_cycles(baseline, cost);
    if base_cycles == 0 {
        return Err(NormalizeError::ZeroBaseline("stall_cycles"));
    }
    let base_hr = baseline.hit_ratio();
    Ok(NormalizedReport {
        writes: m.pcm_writes as f64 / baseline.pcm_writes as f64,
        hit_ratio: (base_hr > 0.0).then(|| m.hit_ratio() / base_hr),
        stall_cycles: stall_cycles(m, cost) as f64 / base_cycles as f64,
    })
}

/// Mutable window onto one set, handed to replacement policies.
pub struct SetView<'a> {
    lines: &'a mut [LineState],
}

impl<'a> SetView<'a> {
    pub fn new(lines: &'a mut [LineState]) -> Self {
        Self { lines }
    }

    pub fn ways(&self) -> usize {
        self.lines.len()
    }

    pub fn lines(&self) -> &[LineState] {
        self.lines
    }

    pub fn line(&self, way: usize) -> &LineState {
        &self.lines[way]
    }

    pub fn set_meta(&mut self, way: usize, meta: PolicyMeta) {
        self.lines[way].meta = meta;
    }

    pub fn is_full(&self) -> bool {
        self.lines.iter().all(|l| l.valid)
    }

    /// Valid way with the largest recency rank among those matching `pred`.
    pub fn lru_where(&self, pred: impl Fn(&LineState) -> bool) -> Option<usize> {
        self.lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.valid && pred(l))
            .max_by_key(|(_, l)| l.recency)
            .map(|(w, _)| w)
    }

    pub fn lru_way(&self) -> Option<usize> {
        self.lru_where(|_| true)
    }

    /// Moves a valid way to rank 0, shifting the lines that were above it.
    pub fn move_to_mru(&mut self, way: usize) {
        debug_assert!(self.lines[way].valid);
        let old = self.lines[way].recency;
        for l in self.lines.iter_mut().filter(|l| l.valid && l.recency < old) {
            l.recency += 1;
        }
        self.lines[way].recency = 0;
    }

    fn invalidate(&mut self, way: usize) {
        let old = self.lines[way].recency;
        for l in self.lines.iter_mut().filter(|l| l.valid && l.recency > old) {
            l.recency -= 1;
        }
        self.lines[way] = LineState::default();
    }

    fn install(&mut self, way: usize, tag: u64, dirty: bool) {
        debug_assert!(!self.lines[way].valid);
        for l in self.lines.iter_mut().filter(|l| l.valid) {
            l.recency += 1;
        }
        self.lines[way] = LineState {
            tag,
            valid: true,
            dirty,
            recency: 0,
            meta: PolicyMeta::None,
        };
    }
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// A single-level write-back, write-allocate cache driven by a replacement policy.
pub struct Cache {
    config: CacheConfig,
    lines: Vec<LineState>,
    policy: Box<dyn ReplacementPolicy>,
    metrics: Metrics,
}

impl Cache {
    /// Builds a cache running the policy named in `config`; `seed` feeds any
    /// randomized insertion (BRRIP, DRRIP-W).
    pub fn new(config: CacheConfig, seed: u64) -> Result<Self, CacheError> {
        config.validate()?;
        let policy = policy::build(&config, seed);
        Ok(Self::with_policy(config, policy))
    }

    pub fn with_policy(config: CacheConfig, policy: Box<dyn ReplacementPolicy>) -> Self {
        let lines = vec![LineState::default(); config.num_sets * config.num_ways];
        Self {
            config,
            lines,
            policy,
            metrics: Metrics::default(),
        }
    }

    pub fn config(&self) -> &CacheConfig {
        &self.config
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn policy(&self) -> &dyn ReplacementPolicy {
        self.policy.as_ref()
    }

    pub fn set(&self, set_index: usize) -> &[LineState] {
        let w = self.config.num_ways;
        &self.lines[set_index * w..(set_index + 1) * w]
    }

    pub fn lines(&self) -> &[LineState] {
        &self.lines
    }

    pub fn access(&mut self, a: Access) -> AccessOutcome {
        let (set_index, tag) = decompose_address(a.address, &self.config);
        let ways = self.config.num_ways;
        let line_offset = (a.address % self.config.line_size_bytes as u64) as usize;
        let lines = &mut self.lines[set_index * ways..(set_index + 1) * ways];
        let mut set = SetView::new(lines);
        self.metrics.accesses += 1;

        if let Some(way) = set.lines().iter().position(|l| l.valid && l.tag == tag) {
            self.metrics.hits += 1;
            self.policy.on_hit(set_index, &mut set, way, a.kind, line_offset);
            if a.is_write() {
                set.lines[way].dirty = true;
            }
            set.move_to_mru(way);
            return AccessOutcome { hit: true, set_index, way, eviction: None };
        }

        self.metrics.misses += 1;
        self.metrics.pcm_reads += 1;
        let mut eviction = None;
        let way = match set.lines().iter().position(|l| !l.valid) {
            Some(free) => free,
            None => {
                let victim = self.policy.select_victim(set_index, &mut set);
                let line = set.line(victim);
                let event = EvictionEvent {
                    set_index,
                    way: victim,
                    was_dirty: line.dirty,
                    evicted_tag: line.tag,
                };
                if event.was_dirty {
                    self.metrics.pcm_writes += 1;
                }
                self.policy.on_evict(&event);
                set.invalidate(victim);
                eviction = Some(event);
                victim
            }
        };
        set.install(way, tag, a.is_write());
        self.policy.on_fill(set_index, &mut set, way, a.kind, line_offset);
        AccessOutcome { hit: false, set_index, way, eviction }
    }

    /// Writes back and drops every valid line. Dirty lines count as
    /// `flush_writes`, never as `pcm_writes`.
    pub fn flush(&mut self) -> Vec<EvictionEvent> {
        let ways = self.config.num_ways;
        let mut events = Vec::new();
        for (i, line) in self.lines.iter_mut().enumerate() {
            if line.valid && line.dirty {
                events.push(EvictionEvent {
                    set_index: i / ways,
                    way: i % ways,
                    was_dirty: true,
                    evicted_tag: line.tag,
                });
            }
            *line = LineState::default();
        }
        self.metrics.flush_writes += events.len() as u64;
        self.policy.reset();
        events
    }
}
