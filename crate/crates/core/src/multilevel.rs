//! Freshness × dirtiness level grids.
//!
//! A configuration splits lines into `n1` freshness levels (FL) and `n2`
//! dirtiness levels (DL); every (FL, DL) pair maps to one combined level
//! (FDL) in `1..=n_total`. A line's FDL may only move among the FDLs sharing
//! its DL (its *group*) unless its dirtiness changes. MAC is the 2 × 2
//! instance returned by [`MultilevelConfig::mac`].
//!
//! Tables can be loaded from plain text, one `fl dl fdl` triple per row:
//!
//! ```text
//! # optional header directives
//! n1 2
//! n2 2
//! 1 1 1
//! 1 2 2
//! 2 1 3
//! 2 2 4
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One cell of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Level {
    pub fl: u32,
    pub dl: u32,
    pub fdl: u32,
}

impl Level {
    pub fn new(fl: u32, dl: u32, fdl: u32) -> Self {
        Self { fl, dl, fdl }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultilevelConfig {
    pub n1: u32,
    pub n2: u32,
    pub n_total: u32,
    /// `(fl, dl) → fdl`.
    pub correspondence: BTreeMap<(u32, u32), u32>,
    pub ways: u32,
    pub bytes_per_block: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `1 ≤ n1 ≤ ways`.
    FreshLevelsOutOfBounds { n1: u32, ways: u32 },
    /// `1 ≤ n2 ≤ bytes_per_block + 1`.
    DirtyLevelsOutOfBounds { n2: u32, bytes_per_block: u32 },
    /// `n_total = n1 × n2`.
    TotalMismatch { n_total: u32, n1: u32, n2: u32 },
    /// Grid cell without an FDL.
    MissingCell { fl: u32, dl: u32 },
    /// Entry whose FL or DL lies outside the grid.
    CellOutsideGrid { fl: u32, dl: u32 },
    /// FDL outside `1..=n_total`.
    FdlOutOfRange { fl: u32, dl: u32, fdl: u32 },
    /// FDL assigned to more than one cell.
    DuplicateFdl { fdl: u32 },
    /// FDL in `1..=n_total` never assigned.
    UnusedFdl { fdl: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::FreshLevelsOutOfBounds { n1, ways } => {
                write!(f, "fresh-level bound: need 1 <= n1 <= ways, got n1={n1}, ways={ways}")
            }
            Violation::DirtyLevelsOutOfBounds { n2, bytes_per_block } => write!(
                f,
                "dirty-level bound: need 1 <= n2 <= B+1, got n2={n2}, B={bytes_per_block}"
            ),
            Violation::TotalMismatch { n_total, n1, n2 } => {
                write!(f, "total levels: n_total={n_total} != n1*n2={}", n1 * n2)
            }
            Violation::MissingCell { fl, dl } => write!(f, "no FDL for (fl={fl}, dl={dl})"),
            Violation::CellOutsideGrid { fl, dl } => {
                write!(f, "entry (fl={fl}, dl={dl}) lies outside the grid")
            }
            Violation::FdlOutOfRange { fl, dl, fdl } => {
                write!(f, "(fl={fl}, dl={dl}) maps to out-of-range FDL {fdl}")
            }
            Violation::DuplicateFdl { fdl } => write!(f, "FDL {fdl} assigned more than once"),
            Violation::UnusedFdl { fdl } => write!(f, "FDL {fdl} never assigned"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MultilevelError {
    #[error("fl={fl} or dl={dl} outside the {n1}x{n2} grid")]
    OutOfRange { fl: u32, dl: u32, n1: u32, n2: u32 },
    #[error("no FDL {0} in the correspondence table")]
    UnknownFdl(u32),
    #[error("level triple {0:?} disagrees with the correspondence table")]
    Inconsistent(Level),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransitionError {
    #[error(transparent)]
    Inconsistent(#[from] MultilevelError),
    #[error("FDL {from} -> {to} leaves dirty group {from_dl} without a dirtiness change")]
    CrossesGroup { from: u32, to: u32, from_dl: u32 },
}

impl MultilevelConfig {
    /// Builds a config whose `n_total` is `n1 × n2`.
    pub fn new(
        n1: u32,
        n2: u32,
        correspondence: BTreeMap<(u32, u32), u32>,
        ways: u32,
        bytes_per_block: u32,
    ) -> Self {
        Self { n1, n2, n_total: n1 * n2, correspondence, ways, bytes_per_block }
    }

    /// The 2 × 2 MAC grid: FDL 1 = (1,1), 2 = (1,2), 3 = (2,1), 4 = (2,2),
    /// with DL 1 = dirty and DL 2 = clean.
    pub fn mac(ways: u32, bytes_per_block: u32) -> Self {
        let table = [((1, 1), 1), ((1, 2), 2), ((2, 1), 3), ((2, 2), 4)].into_iter().collect();
        Self::new(2, 2, table, ways, bytes_per_block)
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut v = Vec::new();
        if self.n1 < 1 || self.n1 > self.ways {
            v.push(Violation::FreshLevelsOutOfBounds { n1: self.n1, ways: self.ways });
        }
        if self.n2 < 1 || self.n2 as u64 > self.bytes_per_block as u64 + 1 {
            v.push(Violation::DirtyLevelsOutOfBounds { n2: self.n2, bytes_per_block: self.bytes_per_block });
        }
        if self.n_total as u64 != self.n1 as u64 * self.n2 as u64 {
            v.push(Violation::TotalMismatch { n_total: self.n_total, n1: self.n1, n2: self.n2 });
        }
        for fl in 1..=self.n1 {
            for dl in 1..=self.n2 {
                if !self.correspondence.contains_key(&(fl, dl)) {
                    v.push(Violation::MissingCell { fl, dl });
                }
            }
        }
        let mut uses: BTreeMap<u32, u32> = BTreeMap::new();
        for (&(fl, dl), &fdl) in &self.correspondence {
            if fl < 1 || fl > self.n1 || dl < 1 || dl > self.n2 {
                v.push(Violation::CellOutsideGrid { fl, dl });
            }
            if fdl < 1 || fdl > self.n_total {
                v.push(Violation::FdlOutOfRange { fl, dl, fdl });
            }
            *uses.entry(fdl).or_default() += 1;
        }
        for (&fdl, &n) in &uses {
            if n > 1 {
                v.push(Violation::DuplicateFdl { fdl });
            }
        }
        for fdl in 1..=self.n_total {
            if !uses.contains_key(&fdl) {
                v.push(Violation::UnusedFdl { fdl });
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    pub fn fdl_of(&self, fl: u32, dl: u32) -> Result<u32, MultilevelError> {
        if fl < 1 || fl > self.n1 || dl < 1 || dl > self.n2 {
            return Err(MultilevelError::OutOfRange { fl, dl, n1: self.n1, n2: self.n2 });
        }
        self.correspondence
            .get(&(fl, dl))
            .copied()
            .ok_or(MultilevelError::OutOfRange { fl, dl, n1: self.n1, n2: self.n2 })
    }

    /// Inverse lookup. Unique for validated configs.
    pub fn level_of(&self, fdl: u32) -> Result<Level, MultilevelError> {
        self.correspondence
            .iter()
            .find(|(_, &f)| f == fdl)
            .map(|(&(fl, dl), _)| Level { fl, dl, fdl })
            .ok_or(MultilevelError::UnknownFdl(fdl))
    }

    fn check_consistent(&self, l: Level) -> Result<(), MultilevelError> {
        match self.fdl_of(l.fl, l.dl) {
            Ok(f) if f == l.fdl => Ok(()),
            _ => Err(MultilevelError::Inconsistent(l)),
        }
    }

    /// A move is legal if it stays within its DL group, or if the caller
    /// reports that the line's dirtiness genuinely changed.
    pub fn check_transition(
        &self,
        old: Level,
        new: Level,
        dirtiness_changed: bool,
    ) -> Result<(), TransitionError> {
        self.check_consistent(old)?;
        self.check_consistent(new)?;
        if old.dl == new.dl || dirtiness_changed {
            Ok(())
        } else {
            Err(TransitionError::CrossesGroup { from: old.fdl, to: new.fdl, from_dl: old.dl })
        }
    }

    /// Parses a table file. `n1`/`n2`/`nt` directives are optional; missing
    /// ones are inferred from the table (`nt` defaults to `n1 × n2`).
    pub fn from_table_text(text: &str, ways: u32, bytes_per_block: u32) -> Result<Self, MultilevelError> {
        let (mut n1, mut n2, mut nt) = (None, None, None);
        let mut table = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            let num = |s: &str| {
                s.parse::<u32>()
                    .map_err(|_| MultilevelError::Parse { line, msg: format!("'{s}' is not a non-negative integer") })
            };
            match fields.as_slice() {
                ["n1", v] => n1 = Some(num(v)?),
                ["n2", v] => n2 = Some(num(v)?),
                ["nt", v] | ["n_total", v] => nt = Some(num(v)?),
                [fl, dl, fdl] => {
                    let key = (num(fl)?, num(dl)?);
                    if table.insert(key, num(fdl)?).is_some() {
                        return Err(MultilevelError::Parse {
                            line,
                            msg: format!("cell (fl={}, dl={}) listed twice", key.0, key.1),
                        });
                    }
                }
                _ => {
                    return Err(MultilevelError::Parse {
                        line,
                        msg: format!("expected 'fl dl fdl' or a directive, got '{body}'"),
                    })
                }
            }
        }
        let n1 = n1.unwrap_or_else(|| table.keys().map(|k| k.0).max().unwrap_or(0));
        let n2 = n2.unwrap_or_else(|| table.keys().map(|k| k.1).max().unwrap_or(0));
        Ok(Self {
            n1,
            n2,
            n_total: nt.unwrap_or(n1 * n2),
            correspondence: table,
            ways,
            bytes_per_block,
        })
    }

    pub fn to_table_text(&self) -> String {
        let mut s = format!("n1 {}\nn2 {}\nnt {}\n", self.n1, self.n2, self.n_total);
        for (&(fl, dl), fdl) in &self.correspondence {
            s.push_str(&format!("{fl} {dl} {fdl}\n"));
        }
        s
    }
}
