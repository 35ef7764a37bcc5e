//! Stability certificates for sampled loops under WHRT dropouts.
//!
//! A [`ParameterTable`] assigns emulation parameters to every possible gap
//! `i = 1..=w+1` between receptions. The certificate holds when
//!
//! * (a) `i h < t_max(gamma_i, Lambda_i)` for every row, and
//! * (b) every walk `P` in `S(G, c_walk)` has
//!   `sum_theta l_theta max{-eps_l, 2(L_l - Lambda_l)} < 0`.
//!
//! The factor `h` multiplies every term of (b) and is left out, so (b) does
//! not depend on the sampling period.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::constraints::{max_consecutive_losses, Constraint};
use crate::emulation::{t_max, EmulationParams};
use crate::error::{invalid, Error, Result};
use crate::graph::{NodeId, WhrtGraph};
use crate::walks::{visit_walk_set, Walk};

pub use crate::system::{
    check_assumption2, FeasibilityReport, GridSpec, Poly, ScalarPolySystem, GRID_CAVEAT,
};

/// Relative slack applied to every strict inequality.
pub const STRICT_GUARD: f64 = 1e-9;

/// Emulation parameters indexed by gap length, starting at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterTable {
    rows: Vec<EmulationParams>,
}

impl ParameterTable {
    /// Row `k` of `rows` is used for gap `k + 1`.
    pub fn new(rows: Vec<EmulationParams>) -> Result<Self> {
        if rows.is_empty() {
            return invalid("no parameter rows");
        }
        Ok(Self { rows })
    }

    /// Builds a table from `(gap, params)` pairs in any order. Gaps must be
    /// unique and cover `1..=k` without holes.
    pub fn from_indexed(mut rows: Vec<(u32, EmulationParams)>) -> Result<Self> {
        if rows.is_empty() {
            return invalid("no parameter rows");
        }
        if rows.iter().any(|&(i, _)| i == 0) {
            return invalid("gap index must be ≥ 1");
        }
        rows.sort_by_key(|&(i, _)| i);
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return invalid(format!("duplicate gap index {}", w[0].0));
        }
        for (k, &(i, _)) in rows.iter().enumerate() {
            if i as usize != k + 1 {
                return invalid(format!("missing row for gap index {}", k + 1));
            }
        }
        Self::new(rows.into_iter().map(|(_, p)| p).collect())
    }

    /// The same parameters for gaps `1..=len`.
    pub fn uniform(params: EmulationParams, len: usize) -> Result<Self> {
        Self::new(vec![params; len])
    }

    /// The reference parameters for the scalar example system and the
    /// `any:17/20` constraint.
    pub fn reference_example() -> Self {
        let row = |gamma, lambda, epsilon| {
            EmulationParams::new(gamma, 2.0, lambda, epsilon).expect("positive constants")
        };
        Self {
            rows: vec![
                row(5.77, 2.75, 1.5),
                row(2.38, 2.25, 0.5),
                row(2.00, 1.0, -2.0),
                row(2.00, 0.001, -4.0),
            ],
        }
    }

    /// Parses whitespace-separated rows `i gamma L Lambda epsilon`. Text
    /// after `#` is ignored. Errors carry the 1-based line number.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut seen = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |what: &str| Error::Parse {
                position: line_no,
                expected: format!("{what} (line {line_no})"),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(err("five fields `i gamma L Lambda epsilon`"));
            }
            let i: u32 = fields[0].parse().map_err(|_| err("integer gap index"))?;
            if i == 0 {
                return Err(err("gap index must be ≥ 1"));
            }
            let mut nums = [0.0; 4];
            for (slot, name, s) in [
                (0, "gamma", fields[1]),
                (1, "L", fields[2]),
                (2, "Lambda", fields[3]),
                (3, "epsilon", fields[4]),
            ] {
                nums[slot] = s.parse().map_err(|_| err(&format!("real number for {name}")))?;
            }
            if let Some(prev) = seen.insert(i, line_no) {
                return Err(err(&format!("unique gap index ({i} already defined on line {prev})")));
            }
            let p = EmulationParams::new(nums[0], nums[1], nums[2], nums[3]).map_err(|e| {
                err(&format!("valid parameters: {e}"))
            })?;
            rows.push((i, p));
        }
        Self::from_indexed(rows)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# i gamma L Lambda epsilon\n");
        for (i, p) in self.indexed() {
            s.push_str(&format!("{i} {} {} {} {}\n", p.gamma, p.l, p.lambda, p.epsilon));
        }
        s
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[EmulationParams] {
        &self.rows
    }

    pub fn row(&self, gap: u32) -> Option<&EmulationParams> {
        (gap as usize).checked_sub(1).and_then(|k| self.rows.get(k))
    }

    pub fn indexed(&self) -> impl Iterator<Item = (u32, &EmulationParams)> {
        self.rows.iter().enumerate().map(|(k, p)| (k as u32 + 1, p))
    }

    /// `l max{-eps_l, 2(L_l - Lambda_l)}` for every gap `l`.
    pub fn walk_terms(&self) -> Vec<f64> {
        self.indexed().map(|(l, p)| l as f64 * p.decay_exponent()).collect()
    }
}

/// `t_max(gamma, L) / (w + 1)`: the sampling bound obtained by treating every
/// gap of up to `w + 1` periods with one parameter set with `Lambda = L`.
pub fn max_dropout_bound(c: &Constraint, gamma: f64, l: f64) -> Result<f64> {
    Ok(t_max(gamma, l)? / (max_consecutive_losses(c) + 1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleCheck {
    pub gap: u32,
    /// `i h`
    pub elapsed: f64,
    pub t_max: f64,
    pub holds: bool,
}

fn strictly_below(a: f64, b: f64) -> bool {
    a <= b * (1.0 - STRICT_GUARD)
}

fn sample_checks(table: &ParameterTable, h: f64) -> Vec<SampleCheck> {
    table
        .indexed()
        .map(|(gap, p)| {
            let elapsed = gap as f64 * h;
            let t_max = p.t_max();
            SampleCheck {
                gap,
                elapsed,
                t_max,
                holds: strictly_below(elapsed, t_max),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Condition (a) fails for this gap.
    SampleBound { gap: u32, elapsed: f64, t_max: f64 },
    /// Condition (b) fails; the walk is the first violator in walk order.
    WalkSum { walk: Walk, sum: f64 },
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SampleBound { gap, elapsed, t_max } => write!(
                f,
                "sample bound violated at gap i={gap}: i*h = {elapsed:.9} >= t_max = {t_max:.9}"
            ),
            Self::WalkSum { walk, sum } => {
                write!(f, "walk sum {sum:.9} is not negative for walk {walk}")
            }
        }
    }
}

/// Aggregate of `sum l max{..}` over a walk set.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkSumSummary {
    pub walk_count: usize,
    /// Lexicographically first walk attaining the maximum sum.
    pub worst_walk: Walk,
    pub worst_sum: f64,
    pub first_violation: Option<(Walk, f64)>,
    /// Distinct sums with their multiplicities, ascending by sum.
    pub histogram: Vec<(f64, usize)>,
}

impl WalkSumSummary {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

struct StartSummary {
    count: usize,
    worst: Option<(Walk, f64)>,
    violation: Option<(Walk, f64)>,
    label_counts: BTreeMap<Vec<u32>, usize>,
}

fn summarize_start(
    g: &WhrtGraph,
    c_walk: u32,
    terms: &[f64],
    start: NodeId,
) -> Result<StartSummary> {
    let mut out = StartSummary {
        count: 0,
        worst: None,
        violation: None,
        label_counts: BTreeMap::new(),
    };
    let mut counts = vec![0u32; terms.len()];
    visit_walk_set(g, c_walk, &[start], &mut |s, path, cost| {
        out.count += 1;
        counts.iter_mut().for_each(|c| *c = 0);
        let (mut sum, mut scale) = (0.0, 0.0);
        for &e in path {
            let l = g.edges()[e].label as usize;
            counts[l - 1] += 1;
            sum += terms[l - 1];
            scale += terms[l - 1].abs();
        }
        *out.label_counts.entry(counts.clone()).or_insert(0) += 1;
        let walk = || Walk {
            start: s,
            edges: path.to_vec(),
            cost,
        };
        if out.worst.as_ref().map_or(true, |(_, best)| sum > *best) {
            out.worst = Some((walk(), sum));
        }
        if out.violation.is_none() && !(sum < -STRICT_GUARD * scale) {
            out.violation = Some((walk(), sum));
        }
    })?;
    Ok(out)
}

/// Evaluates condition (b) over every walk of `S(g, c_walk)` from `starts`.
/// Start nodes are processed in parallel and merged in start order, so the
/// result does not depend on scheduling.
pub fn walk_sum_summary(
    g: &WhrtGraph,
    c_walk: u32,
    table: &ParameterTable,
    starts: &[NodeId],
) -> Result<WalkSumSummary> {
    if (g.max_label() as usize) > table.len() {
        return invalid(format!(
            "graph has gap label {} but the table only covers gaps up to {}",
            g.max_label(),
            table.len()
        ));
    }
    if c_walk == 0 {
        return invalid("c_walk must be at least 1");
    }
    let mut starts = starts.to_vec();
    starts.sort_unstable();
    starts.dedup();
    if starts.is_empty() {
        return invalid("walk enumeration needs at least one start node");
    }
    let terms = table.walk_terms();
    let parts: Vec<StartSummary> = starts
        .par_iter()
        .map(|&s| summarize_start(g, c_walk, &terms, s))
        .collect::<Result<_>>()?;

    let mut walk_count = 0;
    let mut worst: Option<(Walk, f64)> = None;
    let mut violation = None;
    let mut label_counts: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    for part in parts {
        walk_count += part.count;
        if let Some((w, s)) = part.worst {
            if worst.as_ref().map_or(true, |(_, best)| s > *best) {
                worst = Some((w, s));
            }
        }
        if violation.is_none() {
            violation = part.violation;
        }
        for (k, v) in part.label_counts {
            *label_counts.entry(k).or_insert(0) += v;
        }
    }
    let (worst_walk, worst_sum) = worst.ok_or_else(|| Error::InvalidInput("walk set is empty".into()))?;
    let mut by_sum: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for (counts, n) in label_counts {
        let sum: f64 = counts.iter().zip(&terms).map(|(&c, &t)| c as f64 * t).sum();
        // Orders floats by their total order; equal sums merge.
        let key = {
            let bits = sum.to_bits();
            if sum.is_sign_negative() { !bits } else { bits | (1 << 63) }
        };
        by_sum.entry(key).or_insert((sum, 0)).1 += n;
    }
    Ok(WalkSumSummary {
        walk_count,
        worst_walk,
        worst_sum,
        first_violation: violation,
        histogram: by_sum.into_values().collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub constraint: Constraint,
    pub h: f64,
    pub c_walk: u32,
    /// Worst-case run of consecutive losses.
    pub w: u32,
    pub table: ParameterTable,
    pub certified: bool,
    pub sample_checks: Vec<SampleCheck>,
    pub walk_sums: WalkSumSummary,
    /// Some row with `epsilon > 0` exists.
    pub has_decaying_row: bool,
    /// Certified average decay rate over walk windows, per second.
    pub k3: Option<f64>,
    pub failures: Vec<Failure>,
}

impl Certificate {
    /// Longest window spanned by one walk, `h (c_walk + w)`.
    pub fn window_span(&self) -> f64 {
        self.h * (self.c_walk + self.w) as f64
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "constraint        {}", self.constraint)?;
        writeln!(f, "sampling period   h = {:.9} s", self.h)?;
        writeln!(f, "walk budget       c_walk = {}", self.c_walk)?;
        writeln!(f, "max losses        w = {}", self.w)?;
        writeln!(f, "verdict           {}", if self.certified { "CERTIFIED" } else { "NOT CERTIFIED" })?;
        writeln!(f)?;
        writeln!(f, "sample bound i*h < t_max(gamma_i, Lambda_i):")?;
        writeln!(f, "  {:>3} {:>10} {:>10} {:>10} {:>10} {:>14} {:>14}  ok", "i", "gamma", "L", "Lambda", "epsilon", "i*h", "t_max")?;
        for (chk, (_, p)) in self.sample_checks.iter().zip(self.table.indexed()) {
            writeln!(
                f,
                "  {:>3} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>14.9} {:>14.9}  {}",
                chk.gap,
                p.gamma,
                p.l,
                p.lambda,
                p.epsilon,
                chk.elapsed,
                chk.t_max,
                if chk.holds { "yes" } else { "NO" }
            )?;
        }
        writeln!(f)?;
        let ws = &self.walk_sums;
        writeln!(f, "walk sums over S(G, c_walk):")?;
        writeln!(f, "  walks             {}", ws.walk_count)?;
        writeln!(f, "  max sum           {:.9}", ws.worst_sum)?;
        writeln!(f, "  max sum times h   {:.9}", ws.worst_sum * self.h)?;
        writeln!(f, "  worst walk        {}", ws.worst_walk)?;
        writeln!(f, "  condition holds   {}", if ws.holds() { "yes" } else { "NO" })?;
        match self.k3 {
            Some(k3) => writeln!(f, "decay constant    k3 = {k3:.9} 1/s over windows of at most {:.9} s", self.window_span())?,
            None => writeln!(f, "decay constant    k3 = n/a")?,
        }
        for fail in &self.failures {
            writeln!(f, "failure: {fail}")?;
        }
        Ok(())
    }
}

fn check_table(c: &Constraint, table: &ParameterTable) -> Result<u32> {
    let w = max_consecutive_losses(c);
    if table.len() != w as usize + 1 {
        return invalid(format!(
            "constraint {c} allows gaps up to {} but the table has {} rows",
            w + 1,
            table.len()
        ));
    }
    Ok(w)
}

/// Decides the walk-sum certificate, using every node of `g` as a
/// possible window start.
pub fn theorem1_certify(
    c: &Constraint,
    h: f64,
    c_walk: u32,
    table: &ParameterTable,
    g: &WhrtGraph,
) -> Result<Certificate> {
    let starts: Vec<NodeId> = g.nodes().collect();
    theorem1_certify_from(c, h, c_walk, table, g, &starts)
}

pub fn theorem1_certify_from(
    c: &Constraint,
    h: f64,
    c_walk: u32,
    table: &ParameterTable,
    g: &WhrtGraph,
    starts: &[NodeId],
) -> Result<Certificate> {
    if !(h > 0.0 && h.is_finite()) {
        return invalid(format!("sampling period must be positive, got {h}"));
    }
    let w = check_table(c, table)?;
    let walk_sums = walk_sum_summary(g, c_walk, table, starts)?;
    certificate_from_parts(c, h, c_walk, w, table, walk_sums)
}

fn certificate_from_parts(
    c: &Constraint,
    h: f64,
    c_walk: u32,
    w: u32,
    table: &ParameterTable,
    walk_sums: WalkSumSummary,
) -> Result<Certificate> {
    let checks = sample_checks(table, h);
    let mut failures: Vec<Failure> = checks
        .iter()
        .filter(|chk| !chk.holds)
        .map(|chk| Failure::SampleBound {
            gap: chk.gap,
            elapsed: chk.elapsed,
            t_max: chk.t_max,
        })
        .collect();
    if let Some((walk, sum)) = &walk_sums.first_violation {
        failures.push(Failure::WalkSum {
            walk: walk.clone(),
            sum: *sum,
        });
    }
    let certified = failures.is_empty();
    let k3 = certified.then(|| {
        let span = h * (c_walk + w) as f64;
        -(h * walk_sums.worst_sum).exp_m1() / span
    });
    Ok(Certificate {
        constraint: *c,
        h,
        c_walk,
        w,
        table: table.clone(),
        certified,
        sample_checks: checks,
        has_decaying_row: table.rows().iter().any(|p| p.epsilon > 0.0),
        walk_sums,
        k3,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxStep {
    /// Largest certifiable sampling period, or 0.
    pub h: f64,
    /// Row whose sample bound is tight.
    pub limiting_gap: Option<u32>,
    pub reason: Option<String>,
}

/// Largest `h` passing condition (a), provided (b) holds.
pub fn max_certifiable_h(
    c: &Constraint,
    c_walk: u32,
    table: &ParameterTable,
    g: &WhrtGraph,
) -> Result<MaxStep> {
    check_table(c, table)?;
    let starts: Vec<NodeId> = g.nodes().collect();
    let sums = walk_sum_summary(g, c_walk, table, &starts)?;
    if let Some((walk, sum)) = sums.first_violation {
        return Ok(MaxStep {
            h: 0.0,
            limiting_gap: None,
            reason: Some(format!("walk sum {sum:.9} is not negative for walk {walk}")),
        });
    }
    Ok(max_step_for_table(table))
}

fn max_step_for_table(table: &ParameterTable) -> MaxStep {
    let (gap, bound) = table
        .indexed()
        .map(|(i, p)| (i, p.t_max() / i as f64))
        .fold((1, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let mut h = bound * (1.0 - STRICT_GUARD);
    while !sample_checks(table, h).iter().all(|c| c.holds) {
        h -= h * f64::EPSILON;
    }
    MaxStep {
        h,
        limiting_gap: Some(gap),
        reason: None,
    }
}

/// Candidate values for [`search_parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    pub gammas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Extra points evaluated before the grid.
    pub seeds: Vec<EmulationParams>,
    pub feasibility: GridSpec,
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            gammas: linspace(0.5, 8.0, 76),
            epsilons: linspace(-8.0, 4.0, 1201),
            lambdas: linspace(0.001, 5.001, 501),
            seeds: Vec::new(),
            feasibility: GridSpec { nx: 201, ne: 201, ..GridSpec::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchRow {
    pub gap: u32,
    pub best: Option<EmulationParams>,
    /// `max{-epsilon, 2(L - Lambda)}` of `best`, or infinity.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub rows: Vec<SearchRow>,
}

impl SearchOutcome {
    pub fn table(&self) -> Option<ParameterTable> {
        let rows: Option<Vec<_>> = self.rows.iter().map(|r| r.best).collect();
        ParameterTable::new(rows?).ok()
    }
}

/// Grid search for each gap `i = 1..=w+1` over `(gamma, epsilon, Lambda)`
/// with `L = sys.l`. A point qualifies when both hybrid Lyapunov
/// inequalities hold on the feasibility grid and `t_max > i h`; among those
/// the one with the smallest `max{-epsilon, 2(L - Lambda)}` wins. Among equal
/// objectives the smallest admissible `epsilon` is returned.
pub fn search_parameters(
    sys: &ScalarPolySystem,
    c: &Constraint,
    h: f64,
    grid: &SearchGrid,
) -> Result<SearchOutcome> {
    if grid.gammas.is_empty() || grid.epsilons.is_empty() || grid.lambdas.is_empty() {
        return invalid("search grid is empty");
    }
    if !(h > 0.0 && h.is_finite()) {
        return invalid(format!("sampling period must be positive, got {h}"));
    }
    grid.feasibility.validate()?;
    let l = sys.l;
    let mut epsilons = grid.epsilons.clone();
    epsilons.sort_by(f64::total_cmp);
    epsilons.dedup();

    let feasible = |gamma: f64, eps: f64| -> Result<bool> {
        let p = EmulationParams::new(gamma, l, l, eps)?;
        Ok(check_assumption2(sys, &p, &grid.feasibility)?.feasible)
    };
    // The V inequality only loosens as epsilon decreases (V > 0), so the
    // feasible epsilons for a gamma form a prefix of the sorted grid.
    let eps_star: Vec<Option<f64>> = grid
        .gammas
        .iter()
        .map(|&gamma| -> Result<Option<f64>> {
            if !feasible(gamma, epsilons[0])? {
                return Ok(None);
            }
            let (mut lo, mut hi) = (0, epsilons.len());
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if feasible(gamma, epsilons[mid])? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(Some(epsilons[lo]))
        })
        .collect::<Result<_>>()?;
    let seeds: Vec<(EmulationParams, bool)> = grid
        .seeds
        .iter()
        .map(|s| Ok((*s, check_assumption2(sys, s, &grid.feasibility)?.feasible)))
        .collect::<Result<_>>()?;

    let w = max_consecutive_losses(c);
    let mut rows = Vec::new();
    for gap in 1..=w + 1 {
        let elapsed = gap as f64 * h;
        let mut best: Option<(EmulationParams, f64)> = None;
        let mut offer = |p: EmulationParams, obj: f64| {
            if best.as_ref().map_or(true, |(_, b)| obj < *b) {
                best = Some((p, obj));
            }
        };
        for &(s, ok) in &seeds {
            if ok && strictly_below(elapsed, s.t_max()) {
                offer(s, s.decay_exponent());
            }
        }
        for (&gamma, star) in grid.gammas.iter().zip(&eps_star) {
            let Some(star) = *star else { continue };
            for &lambda in &grid.lambdas {
                if !(lambda > 0.0) || !strictly_below(elapsed, t_max(gamma, lambda)?) {
                    continue;
                }
                let objective = (-star).max(2.0 * (l - lambda));
                let eps = epsilons
                    .iter()
                    .copied()
                    .find(|&e| -e <= objective)
                    .unwrap_or(star);
                offer(EmulationParams::new(gamma, l, lambda, eps)?, objective);
            }
        }
        rows.push(SearchRow {
            gap,
            objective: best.map_or(f64::INFINITY, |b| b.1),
            best: best.map(|b| b.0),
        });
    }
    Ok(SearchOutcome { rows })
}
