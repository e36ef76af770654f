//! Trace-driven last-level cache simulator for comparing write-aware
//! replacement policies on PCM-backed main memory.
//!
//! The [`cache`] engine is policy-agnostic; [`policy`] holds LRU, the RRIP
//! family (SRRIP, BRRIP, DRRIP-W, RWA, LDF) and MAC. [`multilevel`] describes
//! the freshness/dirtiness level grids MAC is an instance of, [`trace`] reads
//! and generates access streams, and [`harness`] runs experiments and builds
//! LRU-normalized reports.

pub mod cache;
pub mod config;
pub mod harness;
pub mod multilevel;
pub mod policy;
pub mod trace;

pub use cache::{
    decompose_address, normalize, stall_cycles, Access, AccessKind, AccessOutcome, Cache, EvictionEvent,
    LineState, Metrics, NormalizedReport, PolicyMeta,
};
pub use config::{CacheConfig, CostModel, PolicyKind, PolicyParams};
pub use multilevel::{Level, MultilevelConfig};
pub use trace::{Trace, TraceStats};
