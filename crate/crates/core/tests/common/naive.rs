//! Deliberately naive reference simulator.
//!
//! Every policy rule is written out step by step against an explicit
//! MRU-first recency list. Nothing here calls into the engine's policy code;
//! only plain data types (Access, EvictionEvent, Metrics, CacheConfig) and
//! the seeded RNG construction are shared.

use pcmsim::{Access, AccessKind, CacheConfig, EvictionEvent, Metrics, PolicyKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
struct Entry {
    tag: u64,
    dirty: bool,
    rrpv: u32,
    fdl: u32,
    sub_dirty: Vec<bool>,
}

#[derive(Clone, Debug)]
struct NaiveSet {
    ways: Vec<Option<Entry>>,
    /// Way indices, most recently used first.
    order: Vec<usize>,
}

impl NaiveSet {
    fn touch(&mut self, way: usize) {
        self.order.retain(|&w| w != way);
        self.order.insert(0, way);
    }

    fn forget(&mut self, way: usize) {
        self.order.retain(|&w| w != way);
    }

    /// Least recent way whose FDL equals `level`: the last one in `order`.
    fn lru_at_level(&self, level: u32) -> Option<usize> {
        let mut found = None;
        for &w in &self.order {
            if self.ways[w].as_ref().unwrap().fdl == level {
                found = Some(w);
            }
        }
        found
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Role {
    Srrip,
    Brrip,
    Follower,
}

pub struct NaiveCache {
    cfg: CacheConfig,
    sets: Vec<NaiveSet>,
    pub metrics: Metrics,
    pub evictions: Vec<EvictionEvent>,
    rng: ChaCha8Rng,
    psel: u32,
    roles: Vec<Role>,
    max_rrpv: u32,
}

impl NaiveCache {
    pub fn new(cfg: &CacheConfig, seed: u64) -> Self {
        let sets = (0..cfg.num_sets)
            .map(|_| NaiveSet { ways: vec![None; cfg.num_ways], order: Vec::new() })
            .collect();
        // dueling roles: split sets into `d` groups of `k`; group c dedicates
        // its c-th member (mod k) to SRRIP and the member half a group later to BRRIP
        let mut roles = vec![Role::Follower; cfg.num_sets];
        let mut d = cfg.params.dueling_sets;
        if d > cfg.num_sets / 2 {
            d = cfg.num_sets / 2;
        }
        if let Some(k) = cfg.num_sets.checked_div(d) {
            for c in 0..d {
                let s = c * k + (c % k);
                let b = c * k + ((c % k) + k / 2) % k;
                roles[s] = Role::Srrip;
                roles[b] = Role::Brrip;
            }
        }
        Self {
            cfg: cfg.clone(),
            sets,
            metrics: Metrics::default(),
            evictions: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            psel: 1 << (cfg.params.psel_bits - 1),
            roles,
            max_rrpv: (1 << cfg.params.rrpv_bits) - 1,
        }
    }

    fn subblocks(&self) -> usize {
        self.cfg.line_size_bytes / self.cfg.params.subblock_bytes
    }

    pub fn access(&mut self, a: Access) {
        let line_size = self.cfg.line_size_bytes as u64;
        let line_no = a.address / line_size;
        let set_index = (line_no % self.cfg.num_sets as u64) as usize;
        let tag = line_no / self.cfg.num_sets as u64;
        let offset = (a.address % line_size) as usize;
        let is_write = a.kind == AccessKind::Write;
        self.metrics.accesses += 1;

        // hit?
        let mut hit_way = None;
        for (w, e) in self.sets[set_index].ways.iter().enumerate() {
            if let Some(e) = e {
                if e.tag == tag {
                    hit_way = Some(w);
                }
            }
        }
        if let Some(w) = hit_way {
            self.metrics.hits += 1;
            let policy = self.cfg.policy;
            let sub = self.cfg.params.subblock_bytes;
            let e = self.sets[set_index].ways[w].as_mut().unwrap();
            match policy {
                PolicyKind::Mac => {
                    // hit: FL becomes 1. dirty before, or write hit → FDL 1; else 2
                    let dirty_before = e.fdl == 1 || e.fdl == 3;
                    e.fdl = if dirty_before || is_write { 1 } else { 2 };
                }
                PolicyKind::Lru => {}
                _ => e.rrpv = 0,
            }
            if is_write {
                e.dirty = true;
                if policy == PolicyKind::Ldf {
                    e.sub_dirty[offset / sub] = true;
                }
            }
            self.sets[set_index].touch(w);
            return;
        }

        self.metrics.misses += 1;
        self.metrics.pcm_reads += 1;
        let mut target = None;
        for w in 0..self.cfg.num_ways {
            if self.sets[set_index].ways[w].is_none() {
                target = Some(w);
                break;
            }
        }
        let way = match target {
            Some(w) => w,
            None => {
                let victim = self.choose_victim(set_index);
                let old = self.sets[set_index].ways[victim].take().unwrap();
                self.sets[set_index].forget(victim);
                let ev = EvictionEvent { set_index, way: victim, was_dirty: old.dirty, evicted_tag: old.tag };
                if old.dirty {
                    self.metrics.pcm_writes += 1;
                    if self.cfg.policy == PolicyKind::Drripw {
                        let max = (1u32 << self.cfg.params.psel_bits) - 1;
                        match self.roles[set_index] {
                            Role::Srrip => {
                                self.psel += self.cfg.params.write_weight;
                                if self.psel > max {
                                    self.psel = max;
                                }
                            }
                            Role::Brrip => {
                                if self.psel >= self.cfg.params.write_weight {
                                    self.psel -= self.cfg.params.write_weight;
                                } else {
                                    self.psel = 0;
                                }
                            }
                            Role::Follower => {}
                        }
                    }
                }
                self.evictions.push(ev);
                victim
            }
        };

        let mut e = Entry { tag, dirty: is_write, rrpv: 0, fdl: 0, sub_dirty: vec![false; self.subblocks()] };
        let long = self.max_rrpv - 1;
        match self.cfg.policy {
            PolicyKind::Lru => {}
            PolicyKind::Mac => e.fdl = if is_write { 3 } else { 4 },
            PolicyKind::Srrip | PolicyKind::Ldf => e.rrpv = long,
            PolicyKind::Rwa => e.rrpv = if is_write { 0 } else { long },
            PolicyKind::Brrip => e.rrpv = self.bimodal(),
            PolicyKind::Drripw => {
                let use_srrip = match self.roles[set_index] {
                    Role::Srrip => true,
                    Role::Brrip => false,
                    Role::Follower => self.psel < (1 << (self.cfg.params.psel_bits - 1)),
                };
                e.rrpv = if use_srrip { long } else { self.bimodal() };
            }
        }
        if is_write && self.cfg.policy == PolicyKind::Ldf {
            e.sub_dirty[offset / self.cfg.params.subblock_bytes] = true;
        }
        self.sets[set_index].ways[way] = Some(e);
        self.sets[set_index].touch(way);
    }

    fn bimodal(&mut self) -> u32 {
        let draw: u32 = self.rng.random_range(0..self.cfg.params.brrip_epsilon_denominator);
        if draw == 0 {
            self.max_rrpv - 1
        } else {
            self.max_rrpv
        }
    }

    fn choose_victim(&mut self, set_index: usize) -> usize {
        let max = self.max_rrpv;
        let set = &mut self.sets[set_index];
        match self.cfg.policy {
            PolicyKind::Lru => *set.order.last().unwrap(),
            PolicyKind::Srrip | PolicyKind::Brrip | PolicyKind::Drripw | PolicyKind::Rwa => loop {
                for w in 0..set.ways.len() {
                    if set.ways[w].as_ref().unwrap().rrpv == max {
                        return w;
                    }
                }
                for e in set.ways.iter_mut() {
                    e.as_mut().unwrap().rrpv += 1;
                }
            },
            PolicyKind::Ldf => loop {
                let mut best: Option<(usize, usize)> = None;
                for w in 0..set.ways.len() {
                    let e = set.ways[w].as_ref().unwrap();
                    if e.rrpv == max {
                        let n = e.sub_dirty.iter().filter(|&&b| b).count();
                        if best.is_none() || n < best.unwrap().1 {
                            best = Some((w, n));
                        }
                    }
                }
                if let Some((w, _)) = best {
                    return w;
                }
                for e in set.ways.iter_mut() {
                    e.as_mut().unwrap().rrpv += 1;
                }
            },
            PolicyKind::Mac => {
                // a. any level 4 → its LRU
                if let Some(v) = set.lru_at_level(4) {
                    return v;
                }
                // b. any level 3 → its LRU; LRU of level 2 → MRU with FDL 4;
                //    then LRU of level 1 → MRU with FDL 3
                if let Some(v) = set.lru_at_level(3) {
                    if let Some(w) = set.lru_at_level(2) {
                        set.ways[w].as_mut().unwrap().fdl = 4;
                        set.touch(w);
                    }
                    if let Some(w) = set.lru_at_level(1) {
                        set.ways[w].as_mut().unwrap().fdl = 3;
                        set.touch(w);
                    }
                    return v;
                }
                // c. any level 2 → its LRU; LRU of level 1 → MRU with FDL 3
                if let Some(v) = set.lru_at_level(2) {
                    if let Some(w) = set.lru_at_level(1) {
                        set.ways[w].as_mut().unwrap().fdl = 3;
                        set.touch(w);
                    }
                    return v;
                }
                // d. all level 1 → global LRU
                *set.order.last().unwrap()
            }
        }
    }

    pub fn finish(&mut self) {
        if self.cfg.flush_at_end {
            for set in &mut self.sets {
                for e in set.ways.iter_mut() {
                    if let Some(x) = e.take() {
                        if x.dirty {
                            self.metrics.flush_writes += 1;
                        }
                    }
                }
                set.order.clear();
            }
        }
    }
}

/// Replays a trace, returning eviction sequence and final metrics.
pub fn replay(cfg: &CacheConfig, seed: u64, trace: &[Access]) -> (Vec<EvictionEvent>, Metrics) {
    let mut c = NaiveCache::new(cfg, seed);
    for a in trace {
        c.access(*a);
    }
    c.finish();
    (c.evictions, c.metrics)
}
