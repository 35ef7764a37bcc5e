//! Weakly hard real-time dropout constraints.
//!
//! A constraint restricts which reception patterns a feedback channel may
//! produce. Patterns are binary sequences where `1` is a received input at a
//! sampling instant and `0` a dropout. All three supported kinds are window
//! constraints: they hold iff every window of `m` consecutive entries meets a
//! local condition.
//!
//! | kind        | text          | window condition                         |
//! |-------------|---------------|------------------------------------------|
//! | `AnyNinM`   | `any:n/m`     | at least `n` ones                        |
//! | `RowNinM`   | `row:n/m`     | a run of at least `n` consecutive ones   |
//! | `NoRowMiss` | `norowmiss:n/m` | no run of `n` consecutive zeros        |
//!
//! Finite sequences are checked on fully contained windows only, so a
//! sequence shorter than `m` satisfies every constraint.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Largest window length accepted by [`Constraint::new`].
pub const MAX_WINDOW: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKind {
    AnyNinM,
    RowNinM,
    NoRowMiss,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; 3] = [Self::AnyNinM, Self::RowNinM, Self::NoRowMiss];

    fn keyword(self) -> &'static str {
        match self {
            Self::AnyNinM => "any",
            Self::RowNinM => "row",
            Self::NoRowMiss => "norowmiss",
        }
    }
}

/// A window constraint `kind(n, m)` with `1 <= n <= m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    kind: ConstraintKind,
    n: u32,
    m: u32,
}

impl Constraint {
    pub fn new(kind: ConstraintKind, n: u32, m: u32) -> Result<Self> {
        if n == 0 || n > m {
            return invalid(format!("constraint requires 1 <= n <= m, got n = {n}, m = {m}"));
        }
        if m > MAX_WINDOW {
            return invalid(format!("window length {m} exceeds the supported maximum {MAX_WINDOW}"));
        }
        Ok(Self { kind, n, m })
    }

    pub fn any(n: u32, m: u32) -> Result<Self> {
        Self::new(ConstraintKind::AnyNinM, n, m)
    }

    pub fn row(n: u32, m: u32) -> Result<Self> {
        Self::new(ConstraintKind::RowNinM, n, m)
    }

    pub fn no_row_miss(n: u32, m: u32) -> Result<Self> {
        Self::new(ConstraintKind::NoRowMiss, n, m)
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Window length.
    pub fn m(&self) -> u32 {
        self.m
    }

    /// Checks the local condition on one window of exactly `m` entries.
    pub fn window_ok(&self, window: &[bool]) -> bool {
        debug_assert_eq!(window.len(), self.m as usize);
        let n = self.n as usize;
        match self.kind {
            ConstraintKind::AnyNinM => window.iter().filter(|&&b| b).count() >= n,
            ConstraintKind::RowNinM => longest_run(window, true) >= n,
            ConstraintKind::NoRowMiss => longest_run(window, false) < n,
        }
    }

    /// Checks the window that ends at the last entry of `seq`, if it exists.
    pub(crate) fn last_window_ok(&self, seq: &[bool]) -> bool {
        let m = self.m as usize;
        seq.len() < m || self.window_ok(&seq[seq.len() - m..])
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}/{}", self.kind.keyword(), self.n, self.m)
    }
}

impl FromStr for Constraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_err = |position: usize, expected: &str| Error::Parse {
            position,
            expected: expected.to_string(),
        };
        let colon = s
            .find(':')
            .ok_or_else(|| parse_err(s.len(), "':' after constraint kind"))?;
        let kind = match s[..colon].trim().to_ascii_lowercase().as_str() {
            "any" => ConstraintKind::AnyNinM,
            "row" => ConstraintKind::RowNinM,
            "norowmiss" => ConstraintKind::NoRowMiss,
            _ => return Err(parse_err(0, "one of 'any', 'row', 'norowmiss'")),
        };
        let rest = &s[colon + 1..];
        let slash = rest
            .find('/')
            .ok_or_else(|| parse_err(s.len(), "'/' between n and m"))?;
        let n_pos = colon + 1;
        let m_pos = n_pos + slash + 1;
        let n: u32 = rest[..slash]
            .trim()
            .parse()
            .map_err(|_| parse_err(n_pos, "positive integer n"))?;
        let m: u32 = rest[slash + 1..]
            .trim()
            .parse()
            .map_err(|_| parse_err(m_pos, "positive integer m"))?;
        Constraint::new(kind, n, m)
    }
}

/// Finite reception pattern: `true` = input received, `false` = dropout.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BinarySeq(pub Vec<bool>);

impl BinarySeq {
    pub fn from_bits(bits: &[u8]) -> Self {
        Self(bits.iter().map(|&b| b != 0).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Lengths between consecutive ones, measured in sampling periods.
    /// Leading zeros and the entries after the last one are ignored.
    pub fn gaps(&self) -> Vec<u32> {
        let ones: Vec<usize> = self
            .0
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| b.then_some(k))
            .collect();
        ones.windows(2).map(|p| (p[1] - p[0]) as u32).collect()
    }
}

impl fmt::Display for BinarySeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, &b) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Returns true iff every fully contained window of `seq` meets `c`.
pub fn satisfies(seq: &[bool], c: &Constraint) -> Result<bool> {
    if seq.is_empty() {
        return invalid("cannot check an empty sequence");
    }
    Ok(seq.windows(c.m as usize).all(|w| c.window_ok(w)))
}

/// Maximum number of consecutive dropouts a satisfying sequence may contain.
pub fn max_consecutive_losses(c: &Constraint) -> u32 {
    match c.kind {
        ConstraintKind::NoRowMiss => c.n - 1,
        ConstraintKind::AnyNinM => c.m - c.n,
        // 2^m windows; past this the closed form (window 1^n 0^(m-n)) is used.
        ConstraintKind::RowNinM if c.m <= 20 => max_zero_run_in_windows(c),
        ConstraintKind::RowNinM => c.m - c.n,
    }
}

/// Largest zero run inside any single satisfying window of length `m`.
pub(crate) fn max_zero_run_in_windows(c: &Constraint) -> u32 {
    let m = c.m as usize;
    let mut window = vec![false; m];
    let mut best = 0;
    for mask in 0u64..(1u64 << m) {
        for (k, slot) in window.iter_mut().enumerate() {
            *slot = mask >> k & 1 == 1;
        }
        if c.window_ok(&window) {
            best = best.max(longest_run(&window, false));
        }
    }
    best as u32
}

/// Finite-horizon decision of "every sequence satisfying `c1` also satisfies
/// `c2`", by exhaustive search over sequences of length `horizon`.
///
/// Requires `horizon >= 2 * max(m1, m2)`; at that length every window
/// relation between the two constraints is exercised.
pub fn is_harder(c1: &Constraint, c2: &Constraint, horizon: usize) -> Result<bool> {
    let needed = 2 * c1.m.max(c2.m) as usize;
    if horizon < needed {
        return invalid(format!("hardness horizon {horizon} is below 2*max(m1, m2) = {needed}"));
    }
    Ok(find_separating_sequence(c1, c2, horizon).is_none())
}

/// A sequence of length `horizon` that satisfies `c1` but violates `c2`.
pub fn find_separating_sequence(
    c1: &Constraint,
    c2: &Constraint,
    horizon: usize,
) -> Option<BinarySeq> {
    let mut prefix = Vec::with_capacity(horizon);
    let mut witness = None;
    for_each_satisfying(c1, horizon, &mut prefix, &mut |s| {
        if s.windows(c2.m as usize).all(|w| c2.window_ok(w)) {
            true
        } else {
            witness = Some(BinarySeq(s.to_vec()));
            false
        }
    });
    witness
}

/// Depth-first enumeration of every length-`len` extension of `prefix`
/// satisfying `c`. The visitor returns `false` to stop early; the return value
/// reports whether the search ran to completion.
pub(crate) fn for_each_satisfying(
    c: &Constraint,
    len: usize,
    prefix: &mut Vec<bool>,
    visit: &mut dyn FnMut(&[bool]) -> bool,
) -> bool {
    if prefix.len() == len {
        return visit(prefix);
    }
    for bit in [true, false] {
        prefix.push(bit);
        let keep_going = !c.last_window_ok(prefix) || for_each_satisfying(c, len, prefix, visit);
        prefix.pop();
        if !keep_going {
            return false;
        }
    }
    true
}

pub(crate) fn longest_run(bits: &[bool], value: bool) -> usize {
    let mut best = 0;
    let mut cur = 0;
    for &b in bits {
        if b == value {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best
}
