//! Replacement policies and the hook contract the engine drives them through.

pub mod lru;
pub mod mac;
pub mod rrip;

use crate::cache::{AccessKind, EvictionEvent, SetView};
use crate::config::{CacheConfig, PolicyKind};

pub use lru::LruPolicy;
pub use mac::MacPolicy;
pub use rrip::RripPolicy;

/// Hooks invoked by [`crate::cache::Cache`].
///
/// The engine maintains tags, dirty bits and the recency chain itself: on a
/// hit it sets the dirty bit for writes and moves the line to MRU *after*
/// `on_hit` returns; on a fill the line is already installed at MRU when
/// `on_fill` runs. Policies keep their own per-line state in
/// [`crate::cache::PolicyMeta`] or in side tables indexed by
/// `set_index * ways + way`.
pub trait ReplacementPolicy: Send {
    fn kind(&self) -> PolicyKind;

    /// `line_offset` is the byte offset of the access within the line.
    fn on_hit(&mut self, set_index: usize, set: &mut SetView<'_>, way: usize, kind: AccessKind, line_offset: usize);

    fn on_fill(&mut self, set_index: usize, set: &mut SetView<'_>, way: usize, kind: AccessKind, line_offset: usize);

    /// Picks the way to evict from a full set. May rewrite metadata and
    /// recency of other lines (RRIP aging, MAC demotions).
    fn select_victim(&mut self, set_index: usize, set: &mut SetView<'_>) -> usize;

    fn on_evict(&mut self, _event: &EvictionEvent) {}

    /// Drops side-table state after a flush. Learned state such as PSEL is kept.
    fn reset(&mut self) {}
}

/// Instantiates the policy selected by `config.policy`.
pub fn build(config: &CacheConfig, seed: u64) -> Box<dyn ReplacementPolicy> {
    match config.policy {
        PolicyKind::Lru => Box::new(LruPolicy),
        PolicyKind::Mac => Box::new(MacPolicy::new()),
        PolicyKind::Srrip
        | PolicyKind::Brrip
        | PolicyKind::Drripw
        | PolicyKind::Ldf
        | PolicyKind::Rwa => Box::new(RripPolicy::new(config, seed)),
    }
}
