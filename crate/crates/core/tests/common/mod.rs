#![allow(dead_code)]

pub mod naive;

use pcmsim::harness::{GenPattern, GenSpec};
use pcmsim::{Access, AccessKind, Cache, CacheConfig, EvictionEvent, Metrics};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Replays a trace through the engine, returning eviction sequence and final metrics.
pub fn engine_replay(cfg: &CacheConfig, seed: u64, trace: &[Access]) -> (Vec<EvictionEvent>, Metrics) {
    let mut cache = Cache::new(cfg.clone(), seed).expect("valid config");
    let mut evictions = Vec::new();
    for a in trace {
        if let Some(ev) = cache.access(*a).eviction {
            evictions.push(ev);
        }
    }
    if cfg.flush_at_end {
        cache.flush();
    }
    (evictions, *cache.metrics())
}

/// A random trace of `len` accesses drawn from one of the synthetic
/// generators, sized relative to `capacity_lines`, with jittered offsets.
pub fn mixed_trace(seed: u64, len: u64, capacity_lines: u64, line_size: u64) -> Vec<Access> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wf = rng.random_range(0.0..=1.0);
    let pattern = match rng.random_range(0..3) {
        0 => GenPattern::Zipf {
            lines: rng.random_range(capacity_lines / 2..=capacity_lines * 4).max(1),
            accesses: len,
            zipf_s: rng.random_range(0.0..1.5),
            write_fraction: wf,
        },
        1 => {
            let hot = rng.random_range(capacity_lines / 2..=capacity_lines * 2).max(1);
            let cold = rng.random_range(0..=capacity_lines / 2);
            GenPattern::Loop {
                hot_lines: hot,
                cold_lines: cold,
                iterations: len.div_ceil(hot + cold),
                write_fraction: wf,
            }
        }
        _ => {
            // interleave a scan with a small zipf hot set
            let mut out = Vec::with_capacity(len as usize);
            let hot = capacity_lines.max(2);
            let mut next_cold = hot * 4;
            while (out.len() as u64) < len {
                let w = rng.random_bool(wf);
                let kind = if w { AccessKind::Write } else { AccessKind::Read };
                let line = if rng.random_bool(0.3) {
                    next_cold += 1;
                    next_cold
                } else {
                    rng.random_range(0..hot)
                };
                let offset = rng.random_range(0..line_size);
                out.push(Access { kind, address: line * line_size + offset });
            }
            return out;
        }
    };
    let spec = GenSpec { pattern, line_size, jitter: true };
    let mut accesses = spec.generate(rng.random()).accesses;
    accesses.truncate(len as usize);
    accesses
}
