use crate::cache::{AccessKind, LineState, SetView};
use crate::config::PolicyKind;

use super::ReplacementPolicy;

/// Least recently used. Uses only the engine's recency chain.
#[derive(Debug, Default, Clone, Copy)]
pub struct LruPolicy;

/// Way with the maximal recency rank. The set must be non-empty and full.
pub fn lru_victim(lines: &[LineState]) -> usize {
    lines
        .iter()
        .enumerate()
        .filter(|(_, l)| l.valid)
        .max_by_key(|(_, l)| l.recency)
        .map(|(w, _)| w)
        .expect("lru_victim on an empty set")
}

impl ReplacementPolicy for LruPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Lru
    }

    fn on_hit(&mut self, _: usize, _: &mut SetView<'_>, _: usize, _: AccessKind, _: usize) {}

    fn on_fill(&mut self, _: usize, _: &mut SetView<'_>, _: usize, _: AccessKind, _: usize) {}

    fn select_victim(&mut self, _: usize, set: &mut SetView<'_>) -> usize {
        lru_victim(set.lines())
    }
}
