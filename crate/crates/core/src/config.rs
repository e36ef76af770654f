//! Cache geometry, policy selection and the latency cost model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Replacement policies the engine can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PolicyKind {
    Lru,
    Srrip,
    Brrip,
    Drripw,
    Ldf,
    Rwa,
    Mac,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::Lru,
        PolicyKind::Srrip,
        PolicyKind::Brrip,
        PolicyKind::Drripw,
        PolicyKind::Ldf,
        PolicyKind::Rwa,
        PolicyKind::Mac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Lru => "LRU",
            PolicyKind::Srrip => "SRRIP",
            PolicyKind::Brrip => "BRRIP",
            PolicyKind::Drripw => "DRRIPW",
            PolicyKind::Ldf => "LDF",
            PolicyKind::Rwa => "RWA",
            PolicyKind::Mac => "MAC",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        match upper.as_str() {
            "LRU" => Ok(PolicyKind::Lru),
            // the plain "RRIP" label of the comparison tables is SRRIP
            "SRRIP" | "RRIP" => Ok(PolicyKind::Srrip),
            "BRRIP" => Ok(PolicyKind::Brrip),
            "DRRIPW" | "DRRIP-W" => Ok(PolicyKind::Drripw),
            "LDF" => Ok(PolicyKind::Ldf),
            "RWA" => Ok(PolicyKind::Rwa),
            "MAC" => Ok(PolicyKind::Mac),
            _ => Err(ConfigError::UnknownPolicy(s.to_string())),
        }
    }
}

/// Tunables shared by the RRIP family, DRRIP-W dueling and LDF sub-blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub rrpv_bits: u32,
    /// PSEL increment per dirty eviction in a dedicated set.
    pub write_weight: u32,
    /// Dedicated sets per dueling flavor (clamped to half the set count).
    pub dueling_sets: usize,
    pub psel_bits: u32,
    pub subblock_bytes: usize,
    /// BRRIP inserts at `max_rrpv - 1` with probability `1 / brrip_epsilon_denominator`.
    pub brrip_epsilon_denominator: u32,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            rrpv_bits: 2,
            write_weight: 10,
            dueling_sets: 32,
            psel_bits: 10,
            subblock_bytes: 8,
            brrip_epsilon_denominator: 32,
        }
    }
}

impl PolicyParams {
    pub fn max_rrpv(&self) -> u8 {
        ((1u32 << self.rrpv_bits) - 1) as u8
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheConfig {
    pub num_sets: usize,
    pub num_ways: usize,
    pub line_size_bytes: usize,
    pub policy: PolicyKind,
    pub params: PolicyParams,
    /// Flush dirty lines at the end of a run and report them as `flush_writes`.
    pub flush_at_end: bool,
}

impl Default for CacheConfig {
    /// 512 KiB, 16-way, 64 B lines: 512 sets.
    fn default() -> Self {
        Self::from_size_kb(512, 16, 64, PolicyKind::Lru)
            .expect("default geometry is valid")
    }
}

impl CacheConfig {
    pub fn new(num_sets: usize, num_ways: usize, line_size_bytes: usize, policy: PolicyKind) -> Self {
        Self {
            num_sets,
            num_ways,
            line_size_bytes,
            policy,
            params: PolicyParams::default(),
            flush_at_end: false,
        }
    }

    /// Derives the set count from a total capacity in KiB.
    pub fn from_size_kb(
        size_kb: usize,
        num_ways: usize,
        line_size_bytes: usize,
        policy: PolicyKind,
    ) -> Result<Self, ConfigError> {
        let per_set = num_ways
            .checked_mul(line_size_bytes)
            .filter(|&b| b > 0)
            .ok_or(ConfigError::Geometry("ways × line size must be positive".into()))?;
        let bytes = size_kb * 1024;
        if bytes == 0 || !bytes.is_multiple_of(per_set) {
            return Err(ConfigError::Geometry(format!(
                "{size_kb} KiB is not a whole number of {num_ways}-way sets of {line_size_bytes} B lines"
            )));
        }
        let cfg = Self::new(bytes / per_set, num_ways, line_size_bytes, policy);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_policy(mut self, policy: PolicyKind) -> Self {
        self.policy = policy;
        self
    }

    pub fn capacity_lines(&self) -> usize {
        self.num_sets * self.num_ways
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("num_sets", self.num_sets),
            ("num_ways", self.num_ways),
            ("line_size_bytes", self.line_size_bytes),
        ] {
            if v == 0 || !v.is_power_of_two() {
                return Err(ConfigError::NotPowerOfTwo { name, value: v });
            }
        }
        let p = &self.params;
        if !(1..=7).contains(&p.rrpv_bits) {
            return Err(ConfigError::Param(format!("rrpv_bits must be in 1..=7, got {}", p.rrpv_bits)));
        }
        if !(1..=31).contains(&p.psel_bits) {
            return Err(ConfigError::Param(format!("psel_bits must be in 1..=31, got {}", p.psel_bits)));
        }
        if p.brrip_epsilon_denominator == 0 {
            return Err(ConfigError::Param("brrip_epsilon_denominator must be positive".into()));
        }
        if p.subblock_bytes == 0
            || !p.subblock_bytes.is_power_of_two()
            || p.subblock_bytes > self.line_size_bytes
        {
            return Err(ConfigError::Param(format!(
                "subblock_bytes must be a power of two no larger than the line ({} B), got {}",
                self.line_size_bytes, p.subblock_bytes
            )));
        }
        Ok(())
    }
}

/// Latencies used by the stall-cycle proxy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub hit_cycles: u64,
    pub read_latency_cycles: u64,
    pub write_latency_cycles: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            hit_cycles: 15,
            read_latency_cycles: 1024,
            write_latency_cycles: 4096,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.hit_cycles == 0 || self.read_latency_cycles == 0 || self.write_latency_cycles == 0 {
            return Err(ConfigError::Param("cost model latencies must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{name} must be a positive power of two, got {value}")]
    NotPowerOfTwo { name: &'static str, value: usize },
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid policy parameter: {0}")]
    Param(String),
    #[error("unknown policy '{0}' (expected one of LRU, SRRIP, BRRIP, DRRIPW, LDF, RWA, MAC)")]
    UnknownPolicy(String),
}
