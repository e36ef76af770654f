//! RRIP-family baselines: SRRIP, BRRIP, write-driven DRRIP (DRRIP-W), RWA
//! and SRRIP with least-dirty-first victim tie-breaking (LDF).
//!
//! The RRIP mechanics follow the original re-reference interval prediction
//! design: hit-priority promotion to 0, victim search that ages the whole set
//! until some line reaches `max_rrpv`, lowest way index wins ties.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cache::{AccessKind, EvictionEvent, PolicyMeta, SetView};
use crate::config::{CacheConfig, PolicyKind, PolicyParams};

use super::ReplacementPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertFlavor {
    Srrip,
    Brrip,
    RwaRead,
    RwaWrite,
}

/// Insertion RRPV. BRRIP draws `rng.random_range(0..epsilon_denominator)` once
/// per insertion and takes the rare `max_rrpv - 1` branch on 0.
pub fn rrip_insert_value<R: Rng>(flavor: InsertFlavor, max_rrpv: u8, epsilon_denominator: u32, rng: &mut R) -> u8 {
    let long = max_rrpv.saturating_sub(1);
    match flavor {
        InsertFlavor::Srrip | InsertFlavor::RwaRead => long,
        InsertFlavor::RwaWrite => 0,
        InsertFlavor::Brrip => {
            if rng.random_range(0..epsilon_denominator) == 0 {
                long
            } else {
                max_rrpv
            }
        }
    }
}

pub fn rrip_promote(_current: u8) -> u8 {
    0
}

/// Ages `rrpvs` until one reaches `max_rrpv`; returns the lowest such way and
/// the number of aging rounds applied.
pub fn rrip_victim(rrpvs: &mut [u8], max_rrpv: u8) -> (usize, u32) {
    let rounds = age_to_max(rrpvs, max_rrpv);
    let way = rrpvs.iter().position(|&r| r == max_rrpv).expect("aging reaches max");
    (way, rounds)
}

fn age_to_max(rrpvs: &mut [u8], max_rrpv: u8) -> u32 {
    assert!(!rrpvs.is_empty(), "victim search on an empty set");
    let top = *rrpvs.iter().max().expect("non-empty");
    let rounds = max_rrpv.saturating_sub(top);
    if rounds > 0 {
        for r in rrpvs.iter_mut() {
            *r += rounds;
        }
    }
    rounds as u32
}

/// LDF victim: same aging as [`rrip_victim`], then the candidate at
/// `max_rrpv` with the fewest dirty sub-blocks (lowest index on ties).
pub fn ldf_victim(rrpvs: &mut [u8], dirty_counts: &[u32], max_rrpv: u8) -> usize {
    assert_eq!(rrpvs.len(), dirty_counts.len());
    age_to_max(rrpvs, max_rrpv);
    rrpvs
        .iter()
        .zip(dirty_counts)
        .enumerate()
        .filter(|(_, (&r, _))| r == max_rrpv)
        .min_by_key(|(w, (_, &d))| (d, *w))
        .map(|(w, _)| w)
        .expect("aging reaches max")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetRole {
    SrripDedicated,
    BrripDedicated,
    Follower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DuelFlavor {
    Srrip,
    Brrip,
}

/// Set-dueling state steered by dirty evictions instead of misses.
#[derive(Debug, Clone)]
pub struct DuelState {
    psel: u32,
    psel_max: u32,
    midpoint: u32,
    write_weight: u32,
    roles: Vec<SetRole>,
}

impl DuelState {
    /// Splits the sets into `num_sets / d` constituencies, where `d` is
    /// `dueling_sets` clamped to half the set count. Constituency `c` dedicates
    /// offset `c mod k` to SRRIP and offset `(c + k/2) mod k` to BRRIP,
    /// `k` being the constituency size (always ≥ 2, so the two never collide).
    pub fn new(num_sets: usize, dueling_sets: usize, psel_bits: u32, write_weight: u32) -> Self {
        let dedicated = dueling_sets.min(num_sets / 2);
        let mut roles = vec![SetRole::Follower; num_sets];
        if let Some(k) = num_sets.checked_div(dedicated) {
            for (i, role) in roles.iter_mut().enumerate() {
                let (c, off) = (i / k, i % k);
                if c >= dedicated {
                    continue;
                }
                if off == c % k {
                    *role = SetRole::SrripDedicated;
                } else if off == (c % k + k / 2) % k {
                    *role = SetRole::BrripDedicated;
                }
            }
        }
        let midpoint = 1u32 << (psel_bits - 1);
        Self {
            psel: midpoint,
            psel_max: (1u32 << psel_bits) - 1,
            midpoint,
            write_weight,
            roles,
        }
    }

    pub fn psel(&self) -> u32 {
        self.psel
    }

    pub fn psel_max(&self) -> u32 {
        self.psel_max
    }

    pub fn set_psel(&mut self, psel: u32) {
        self.psel = psel.min(self.psel_max);
    }

    pub fn role(&self, set_index: usize) -> SetRole {
        self.roles[set_index]
    }

    pub fn roles(&self) -> &[SetRole] {
        &self.roles
    }

    /// Followers use SRRIP while PSEL sits below its midpoint.
    pub fn flavor_for_set(&self, set_index: usize) -> DuelFlavor {
        match self.roles[set_index] {
            SetRole::SrripDedicated => DuelFlavor::Srrip,
            SetRole::BrripDedicated => DuelFlavor::Brrip,
            SetRole::Follower => {
                if self.psel < self.midpoint {
                    DuelFlavor::Srrip
                } else {
                    DuelFlavor::Brrip
                }
            }
        }
    }

    /// A dirty eviction in a dedicated set charges that set's flavor.
    pub fn record_eviction(&mut self, event: &EvictionEvent) {
        if !event.was_dirty {
            return;
        }
        match self.roles[event.set_index] {
            SetRole::SrripDedicated => {
                self.psel = self.psel.saturating_add(self.write_weight).min(self.psel_max)
            }
            SetRole::BrripDedicated => self.psel = self.psel.saturating_sub(self.write_weight),
            SetRole::Follower => {}
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("byte offset {offset} outside a {line_size}-byte line")]
pub struct OffsetOutOfRange {
    pub offset: usize,
    pub line_size: usize,
}

/// Per-line dirty sub-block bitmaps for LDF.
#[derive(Debug, Clone)]
pub struct SubblockState {
    subblock_bytes: usize,
    line_size: usize,
    words_per_line: usize,
    bits: Vec<u64>,
    counts: Vec<u32>,
}

impl SubblockState {
    pub fn new(lines: usize, line_size: usize, subblock_bytes: usize) -> Self {
        let per_line = line_size / subblock_bytes;
        let words_per_line = per_line.div_ceil(64);
        Self {
            subblock_bytes,
            line_size,
            words_per_line,
            bits: vec![0; lines * words_per_line],
            counts: vec![0; lines],
        }
    }

    pub fn mark_dirty(&mut self, slot: usize, byte_offset: usize) -> Result<(), OffsetOutOfRange> {
        if byte_offset >= self.line_size {
            return Err(OffsetOutOfRange { offset: byte_offset, line_size: self.line_size });
        }
        let bit = byte_offset / self.subblock_bytes;
        let word = &mut self.bits[slot * self.words_per_line + bit / 64];
        let mask = 1u64 << (bit % 64);
        if *word & mask == 0 {
            *word |= mask;
            self.counts[slot] += 1;
        }
        Ok(())
    }

    pub fn clear(&mut self, slot: usize) {
        let base = slot * self.words_per_line;
        self.bits[base..base + self.words_per_line].fill(0);
        self.counts[slot] = 0;
    }

    pub fn clear_all(&mut self) {
        self.bits.fill(0);
        self.counts.fill(0);
    }

    pub fn dirty_count(&self, slot: usize) -> u32 {
        self.counts[slot]
    }

    pub fn bitmap(&self, slot: usize) -> &[u64] {
        let base = slot * self.words_per_line;
        &self.bits[base..base + self.words_per_line]
    }
}

#[derive(Debug, Clone)]
enum Variant {
    Srrip,
    Brrip,
    Drripw(DuelState),
    Rwa,
    Ldf(SubblockState),
}

/// One struct for the five RRIP-based baselines; they differ only in insertion
/// and victim tie-breaking.
#[derive(Debug, Clone)]
pub struct RripPolicy {
    variant: Variant,
    max_rrpv: u8,
    epsilon_denominator: u32,
    ways: usize,
    rng: ChaCha8Rng,
}

impl RripPolicy {
    pub fn new(config: &CacheConfig, seed: u64) -> Self {
        let p: &PolicyParams = &config.params;
        let variant = match config.policy {
            PolicyKind::Srrip => Variant::Srrip,
            PolicyKind::Brrip => Variant::Brrip,
            PolicyKind::Drripw => Variant::Drripw(DuelState::new(
                config.num_sets,
                p.dueling_sets,
                p.psel_bits,
                p.write_weight,
            )),
            PolicyKind::Rwa => Variant::Rwa,
            PolicyKind::Ldf => Variant::Ldf(SubblockState::new(
                config.capacity_lines(),
                config.line_size_bytes,
                p.subblock_bytes,
            )),
            other => panic!("{other} is not an RRIP-family policy"),
        };
        Self {
            variant,
            max_rrpv: p.max_rrpv(),
            epsilon_denominator: p.brrip_epsilon_denominator,
            ways: config.num_ways,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn duel(&self) -> Option<&DuelState> {
        match &self.variant {
            Variant::Drripw(d) => Some(d),
            _ => None,
        }
    }

    pub fn subblocks(&self) -> Option<&SubblockState> {
        match &self.variant {
            Variant::Ldf(s) => Some(s),
            _ => None,
        }
    }

    fn insert_flavor(&self, set_index: usize, kind: AccessKind) -> InsertFlavor {
        match &self.variant {
            Variant::Srrip | Variant::Ldf(_) => InsertFlavor::Srrip,
            Variant::Brrip => InsertFlavor::Brrip,
            Variant::Drripw(duel) => match duel.flavor_for_set(set_index) {
                DuelFlavor::Srrip => InsertFlavor::Srrip,
                DuelFlavor::Brrip => InsertFlavor::Brrip,
            },
            Variant::Rwa => match kind {
                AccessKind::Read => InsertFlavor::RwaRead,
                AccessKind::Write => InsertFlavor::RwaWrite,
            },
        }
    }

    fn mark_write(&mut self, slot: usize, kind: AccessKind, line_offset: usize) {
        if let (Variant::Ldf(sub), AccessKind::Write) = (&mut self.variant, kind) {
            sub.mark_dirty(slot, line_offset)
                .expect("engine passes in-line offsets");
        }
    }
}

fn rrpv_of(set: &SetView<'_>, way: usize) -> u8 {
    set.line(way).rrpv().expect("valid RRIP line carries an RRPV")
}

impl ReplacementPolicy for RripPolicy {
    fn kind(&self) -> PolicyKind {
        match self.variant {
            Variant::Srrip => PolicyKind::Srrip,
            Variant::Brrip => PolicyKind::Brrip,
            Variant::Drripw(_) => PolicyKind::Drripw,
            Variant::Rwa => PolicyKind::Rwa,
            Variant::Ldf(_) => PolicyKind::Ldf,
        }
    }

    fn on_hit(&mut self, set_index: usize, set: &mut SetView<'_>, way: usize, kind: AccessKind, line_offset: usize) {
        let promoted = rrip_promote(rrpv_of(set, way));
        set.set_meta(way, PolicyMeta::Rrpv(promoted));
        self.mark_write(set_index * self.ways + way, kind, line_offset);
    }

    fn on_fill(&mut self, set_index: usize, set: &mut SetView<'_>, way: usize, kind: AccessKind, line_offset: usize) {
        let flavor = self.insert_flavor(set_index, kind);
        let rrpv = rrip_insert_value(flavor, self.max_rrpv, self.epsilon_denominator, &mut self.rng);
        set.set_meta(way, PolicyMeta::Rrpv(rrpv));
        self.mark_write(set_index * self.ways + way, kind, line_offset);
    }

    fn select_victim(&mut self, set_index: usize, set: &mut SetView<'_>) -> usize {
        let mut rrpvs: Vec<u8> = (0..set.ways()).map(|w| rrpv_of(set, w)).collect();
        let victim = match &self.variant {
            Variant::Ldf(sub) => {
                let base = set_index * self.ways;
                let counts: Vec<u32> = (0..set.ways()).map(|w| sub.dirty_count(base + w)).collect();
                ldf_victim(&mut rrpvs, &counts, self.max_rrpv)
            }
            _ => rrip_victim(&mut rrpvs, self.max_rrpv).0,
        };
        for (w, r) in rrpvs.into_iter().enumerate() {
            set.set_meta(w, PolicyMeta::Rrpv(r));
        }
        victim
    }

    fn on_evict(&mut self, event: &EvictionEvent) {
        let ways = self.ways;
        match &mut self.variant {
            Variant::Drripw(duel) => duel.record_eviction(event),
            Variant::Ldf(sub) => sub.clear(event.set_index * ways + event.way),
            _ => {}
        }
    }

    fn reset(&mut self) {
        if let Variant::Ldf(sub) = &mut self.variant {
            sub.clear_all();
        }
    }
}
