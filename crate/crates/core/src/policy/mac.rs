//! MAC: four protection levels (FDL 1..=4) over a global per-set LRU chain.
//!
//! | FDL | FL | DL | meaning              |
//! |-----|----|----|----------------------|
//! | 1   | 1  | 1  | recently used, dirty |
//! | 2   | 1  | 2  | recently used, clean |
//! | 3   | 2  | 1  | stale, dirty         |
//! | 4   | 2  | 2  | stale, clean         |
//!
//! Larger FDL means lower protection. Dirty lines only ever hold FDL 1 or 3,
//! so a dirty line is never evicted while a stale clean line exists.

use thiserror::Error;

use crate::cache::{AccessKind, LineState, PolicyMeta, SetView};
use crate::config::PolicyKind;

use super::ReplacementPolicy;

pub const FDL_HOT_DIRTY: u8 = 1;
pub const FDL_HOT_CLEAN: u8 = 2;
pub const FDL_STALE_DIRTY: u8 = 3;
pub const FDL_STALE_CLEAN: u8 = 4;

/// FDL of a newly filled line. New lines always start stale.
pub fn mac_insert(kind: AccessKind) -> u8 {
    match kind {
        AccessKind::Read => FDL_STALE_CLEAN,
        AccessKind::Write => FDL_STALE_DIRTY,
    }
}

/// FDL after a hit: the line becomes fresh, and dirty if it was dirty or the hit is a write.
pub fn mac_promote(current_fdl: u8, kind: AccessKind) -> u8 {
    let was_dirty = matches!(current_fdl, FDL_HOT_DIRTY | FDL_STALE_DIRTY);
    if was_dirty || kind == AccessKind::Write {
        FDL_HOT_DIRTY
    } else {
        FDL_HOT_CLEAN
    }
}

/// What the victim search sees of one way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MacWay {
    pub valid: bool,
    pub dirty: bool,
    pub fdl: u8,
    pub recency: usize,
}

impl From<&LineState> for MacWay {
    fn from(l: &LineState) -> Self {
        Self {
            valid: l.valid,
            dirty: l.dirty,
            fdl: l.fdl().unwrap_or(0),
            recency: l.recency,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Demotion {
    pub way: usize,
    pub new_fdl: u8,
    pub move_to_mru: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VictimChoice {
    pub victim: usize,
    /// Applied in order; later MRU moves end up more recent.
    pub demotions: Vec<Demotion>,
}

/// Demotion targets used in steps b and c.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DemotionRule {
    /// Stale-ify within the group: clean 2 → 4, dirty 1 → 3.
    #[default]
    WithinGroup,
    /// The alternative listing: 2 → 3 and 1 → 2. Crosses dirty groups, kept
    /// only so tests can show that it breaks the dirty ⇔ {1, 3} invariant.
    CrossGroup,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MacError {
    #[error("victim selection requires a full set")]
    SetNotFull,
    #[error("invalid FDL {fdl} in way {way}")]
    BadFdl { way: usize, fdl: u8 },
    #[error("overhead needs positive inputs, got ways={ways} line={line_size_bytes}")]
    NonPositive { ways: usize, line_size_bytes: usize },
}

/// Level-LRU of FDL `level`: the valid way at that level with the largest rank.
fn level_lru(set: &[MacWay], level: u8) -> Option<usize> {
    set.iter()
        .enumerate()
        .filter(|(_, w)| w.valid && w.fdl == level)
        .max_by_key(|(_, w)| w.recency)
        .map(|(i, _)| i)
}

pub fn mac_select_victim(set: &[MacWay]) -> Result<VictimChoice, MacError> {
    select_victim_with(set, DemotionRule::WithinGroup)
}

pub fn select_victim_with(set: &[MacWay], rule: DemotionRule) -> Result<VictimChoice, MacError> {
    if set.is_empty() || set.iter().any(|w| !w.valid) {
        return Err(MacError::SetNotFull);
    }
    if let Some((way, w)) = set.iter().enumerate().find(|(_, w)| !(1..=4).contains(&w.fdl)) {
        return Err(MacError::BadFdl { way, fdl: w.fdl });
    }
    let lru = [1, 2, 3, 4].map(|level| level_lru(set, level));
    let [hot_dirty, hot_clean, stale_dirty, stale_clean] = lru;
    let (clean_target, dirty_target) = match rule {
        DemotionRule::WithinGroup => (FDL_STALE_CLEAN, FDL_STALE_DIRTY),
        DemotionRule::CrossGroup => (FDL_STALE_DIRTY, FDL_HOT_CLEAN),
    };
    let demote = |way: Option<usize>, new_fdl| {
        way.map(|way| Demotion { way, new_fdl, move_to_mru: true })
    };

    let choice = if let Some(victim) = stale_clean {
        VictimChoice { victim, demotions: Vec::new() }
    } else if let Some(victim) = stale_dirty {
        let demotions = [demote(hot_clean, clean_target), demote(hot_dirty, dirty_target)]
            .into_iter()
            .flatten()
            .collect();
        VictimChoice { victim, demotions }
    } else if let Some(victim) = hot_clean {
        VictimChoice {
            victim,
            demotions: demote(hot_dirty, dirty_target).into_iter().collect(),
        }
    } else {
        // everything is FDL 1
        let victim = hot_dirty.expect("full set with all levels empty");
        VictimChoice { victim, demotions: Vec::new() }
    };
    Ok(choice)
}

/// Extra bits of a MAC set over an LRU set, in percent, for the 16-way,
/// 4-bit-position accounting: 6 / (line_size_bytes · ways + 8) · 100.
pub fn mac_metadata_overhead(ways: usize, line_size_bytes: usize) -> Result<f64, MacError> {
    if ways == 0 || line_size_bytes == 0 {
        return Err(MacError::NonPositive { ways, line_size_bytes });
    }
    Ok(100.0 * 6.0 / (line_size_bytes as f64 * ways as f64 + 8.0))
}

#[derive(Debug, Default, Clone)]
pub struct MacPolicy {
    rule: DemotionRule,
    scratch: Vec<MacWay>,
}

impl MacPolicy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_rule(rule: DemotionRule) -> Self {
        Self { rule, scratch: Vec::new() }
    }
}

impl ReplacementPolicy for MacPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Mac
    }

    fn on_hit(&mut self, _: usize, set: &mut SetView<'_>, way: usize, kind: AccessKind, _: usize) {
        let fdl = set.line(way).fdl().expect("valid MAC line carries an FDL");
        set.set_meta(way, PolicyMeta::Fdl(mac_promote(fdl, kind)));
    }

    fn on_fill(&mut self, _: usize, set: &mut SetView<'_>, way: usize, kind: AccessKind, _: usize) {
        set.set_meta(way, PolicyMeta::Fdl(mac_insert(kind)));
    }

    fn select_victim(&mut self, _: usize, set: &mut SetView<'_>) -> usize {
        self.scratch.clear();
        self.scratch.extend(set.lines().iter().map(MacWay::from));
        let choice = select_victim_with(&self.scratch, self.rule)
            .expect("engine only asks for victims in full, labelled sets");
        for d in &choice.demotions {
            set.set_meta(d.way, PolicyMeta::Fdl(d.new_fdl));
            if d.move_to_mru {
                set.move_to_mru(d.way);
            }
        }
        choice.victim
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn way(fdl: u8, recency: usize) -> MacWay {
        MacWay { valid: true, dirty: matches!(fdl, 1 | 3), fdl, recency }
    }

    #[test]
    fn insertion_rule() {
        assert_eq!(mac_insert(AccessKind::Read), 4);
        assert_eq!(mac_insert(AccessKind::Write), 3);
        assert_eq!(mac_insert(AccessKind::Write), mac_insert(AccessKind::Write));
    }

    #[test]
    fn promotion_examples() {
        assert_eq!(mac_promote(3, AccessKind::Read), 1);
        assert_eq!(mac_promote(4, AccessKind::Write), 1);
        assert_eq!(mac_promote(2, AccessKind::Read), 2);
    }

    #[test]
    fn step_d_all_hot_dirty() {
        let set = [way(1, 1), way(1, 3), way(1, 0), way(1, 2)];
        assert_eq!(
            mac_select_victim(&set).unwrap(),
            VictimChoice { victim: 1, demotions: vec![] }
        );
    }

    #[test]
    fn step_a_prefers_stale_clean() {
        let set = [way(4, 0), way(3, 3), way(2, 2), way(1, 1)];
        assert_eq!(mac_select_victim(&set).unwrap().victim, 0);
        assert!(mac_select_victim(&set).unwrap().demotions.is_empty());
        // LRU among several level-4 lines
        let set = [way(4, 0), way(4, 2), way(1, 3), way(4, 1)];
        assert_eq!(mac_select_victim(&set).unwrap().victim, 1);
    }

    #[test]
    fn step_b_demotes_both_hot_levels() {
        let set = [way(3, 1), way(3, 3), way(2, 0), way(1, 2)];
        let c = mac_select_victim(&set).unwrap();
        assert_eq!(c.victim, 1);
        assert_eq!(
            c.demotions,
            vec![
                Demotion { way: 2, new_fdl: 4, move_to_mru: true },
                Demotion { way: 3, new_fdl: 3, move_to_mru: true },
            ]
        );
    }

    #[test]
    fn step_b_skips_empty_levels() {
        let set = [way(3, 1), way(3, 0), way(1, 3), way(1, 2)];
        let c = mac_select_victim(&set).unwrap();
        assert_eq!(c.victim, 0);
        assert_eq!(c.demotions, vec![Demotion { way: 2, new_fdl: 3, move_to_mru: true }]);
    }

    #[test]
    fn step_c_demotes_hot_dirty() {
        let set = [way(2, 1), way(2, 2), way(1, 0), way(1, 3)];
        let c = mac_select_victim(&set).unwrap();
        assert_eq!(c.victim, 1);
        assert_eq!(c.demotions, vec![Demotion { way: 3, new_fdl: 3, move_to_mru: true }]);
    }

    #[test]
    fn cross_group_listing_differs() {
        let set = [way(3, 1), way(3, 3), way(2, 0), way(1, 2)];
        let c = select_victim_with(&set, DemotionRule::CrossGroup).unwrap();
        assert_eq!(c.victim, 1);
        assert_eq!(c.demotions[0].new_fdl, 3);
        assert_eq!(c.demotions[1].new_fdl, 2);
    }

    #[test]
    fn contract_errors() {
        let mut set = [way(1, 0), way(4, 1)];
        set[1].valid = false;
        assert_eq!(mac_select_victim(&set), Err(MacError::SetNotFull));
        assert_eq!(mac_select_victim(&[]), Err(MacError::SetNotFull));
        assert_eq!(
            mac_select_victim(&[way(1, 0), MacWay { fdl: 5, ..way(1, 1) }]),
            Err(MacError::BadFdl { way: 1, fdl: 5 })
        );
    }

    #[test]
    fn overhead_formula() {
        assert!((mac_metadata_overhead(16, 64).unwrap() - 0.58).abs() < 0.01);
        assert!((mac_metadata_overhead(16, 128).unwrap() - 0.2918).abs() < 1e-3);
        assert!((mac_metadata_overhead(1, 1).unwrap() - 66.666).abs() < 1e-2);
        assert!(mac_metadata_overhead(0, 64).is_err());
    }
}
