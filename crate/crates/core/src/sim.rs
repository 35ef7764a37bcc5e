//! Simulation of the sampled loop with packet dropouts, and trace-level
//! checks of the decay bounds.
//!
//! The state is `(x, e)` with `x' = f(x, e)` and `e' = -f(x, e)`. A
//! transmission is attempted every `h` seconds; on reception `e` is reset
//! to zero, so the controller acts on the freshest sample `x + e`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::certify::{walk_sum_summary, ParameterTable};
use crate::constraints::{satisfies, BinarySeq};
use crate::emulation::{lambda_for_span, solve_phi, u_value};
use crate::error::{invalid, Error, Result};
use crate::graph::{NodeId, WhrtGraph};
use crate::system::ScalarPolySystem;
use crate::walks::Walk;

/// Integration steps per sampling period must be at least this.
pub const MIN_STEPS_PER_PERIOD: usize = 50;

/// Magnitude of `x` or `e` treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

/// Relative tolerance of the per-interval bound checks.
pub const BOUND_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum SequenceMode {
    /// Uniformly random outgoing edge at every step.
    Random { seed: u64 },
    /// Chains the walk-sum maximizers from each reached node.
    Worst { table: ParameterTable, c_walk: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeqSource {
    Explicit(BinarySeq),
    Graph { graph: WhrtGraph, mode: SequenceMode },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdsConfig {
    pub sys: ScalarPolySystem,
    pub h: f64,
    pub x0: f64,
    pub source: SeqSource,
    pub t_end: f64,
    /// `h / dt`; at least [`MIN_STEPS_PER_PERIOD`].
    pub steps_per_period: usize,
}

impl DdsConfig {
    pub fn dt(&self) -> f64 {
        self.h / self.steps_per_period as f64
    }

    /// Number of whole sampling periods covering `[0, t_end]`.
    pub fn periods(&self) -> usize {
        (self.t_end / self.h * (1.0 - 1e-12)).ceil() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return invalid(format!("sampling period must be positive, got {}", self.h));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return invalid(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.steps_per_period < MIN_STEPS_PER_PERIOD {
            return invalid(format!(
                "need at least {MIN_STEPS_PER_PERIOD} steps per sampling period, got {}",
                self.steps_per_period
            ));
        }
        if !self.x0.is_finite() {
            return invalid("x0 must be finite");
        }
        Ok(())
    }

    /// The transmission outcomes for periods `0..=periods()`.
    pub fn resolve_sequence(&self) -> Result<BinarySeq> {
        let len = self.periods() + 1;
        let seq = match &self.source {
            SeqSource::Explicit(s) => {
                if s.len() < len {
                    return invalid(format!(
                        "sequence has {} entries but {len} are needed to reach t_end",
                        s.len()
                    ));
                }
                BinarySeq(s.bits()[..len].to_vec())
            }
            SeqSource::Graph { graph, mode } => gen_sequence_from_graph(graph, mode, len)?,
        };
        if !seq.bits()[0] {
            return invalid("sequence must start with a reception");
        }
        Ok(seq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub e: f64,
    pub v: f64,
    /// Marks the post-reset sample at a reception instant.
    pub received: bool,
}

/// Immutable simulation output. At a reception instant after `t = 0` two
/// samples share the same `t`: the pre-reset state, then the reset state.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub h: f64,
    pub steps_per_period: usize,
    pub sequence: BinarySeq,
    pub samples: Vec<Sample>,
    pub receptions: Vec<f64>,
    /// Index into `samples` of the post-reset sample of each reception.
    pub reception_samples: Vec<usize>,
}

impl SimTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,e,V,received\n");
        for p in &self.samples {
            s.push_str(&format!(
                "{:.9e},{:.9e},{:.9e},{:.9e},{}\n",
                p.t, p.x, p.e, p.v, p.received as u8
            ));
        }
        s
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trace is never empty")
    }

    /// Gap of every completed inter-reception interval, in periods.
    pub fn gaps(&self) -> Vec<u32> {
        self.receptions
            .windows(2)
            .map(|w| ((w[1] - w[0]) / self.h).round() as u32)
            .collect()
    }
}

fn rk4_step(sys: &ScalarPolySystem, x: f64, e: f64, dt: f64) -> (f64, f64) {
    let rate = |x: f64, e: f64| {
        let f = sys.flow(x, e);
        (f, -f)
    };
    let (a1, b1) = rate(x, e);
    let (a2, b2) = rate(x + 0.5 * dt * a1, e + 0.5 * dt * b1);
    let (a3, b3) = rate(x + 0.5 * dt * a2, e + 0.5 * dt * b2);
    let (a4, b4) = rate(x + dt * a3, e + dt * b3);
    (
        x + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
        e + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
    )
}

/// Fixed-step RK4 with steps subdividing every sampling period exactly.
pub fn simulate(cfg: &DdsConfig) -> Result<SimTrace> {
    cfg.validate()?;
    let seq = cfg.resolve_sequence()?;
    let (h, n) = (cfg.h, cfg.steps_per_period);
    let dt = cfg.dt();
    let periods = cfg.periods();
    let sys = &cfg.sys;

    let mut samples = Vec::with_capacity(periods * (n + 1) + 1);
    let mut receptions = Vec::new();
    let mut reception_samples = Vec::new();
    let (mut x, mut e) = (cfg.x0, 0.0);
    for k in 0..=periods {
        let t0 = k as f64 * h;
        if seq.bits()[k] {
            if k > 0 {
                samples.push(Sample { t: t0, x, e, v: sys.v(x), received: false });
            }
            e = 0.0;
            receptions.push(t0);
            reception_samples.push(samples.len());
            samples.push(Sample { t: t0, x, e, v: sys.v(x), received: true });
        } else if k > 0 {
            samples.push(Sample { t: t0, x, e, v: sys.v(x), received: false });
        } else {
            unreachable!("sequence starts with a reception");
        }
        if k == periods {
            break;
        }
        for j in 1..=n {
            (x, e) = rk4_step(sys, x, e, dt);
            let magnitude = x.abs().max(e.abs());
            if !(magnitude <= DIVERGENCE_LIMIT) {
                return Err(Error::Divergence {
                    t: t0 + j as f64 * dt,
                    magnitude,
                });
            }
            if j < n {
                samples.push(Sample {
                    t: t0 + j as f64 * dt,
                    x,
                    e,
                    v: sys.v(x),
                    received: false,
                });
            }
        }
    }
    Ok(SimTrace {
        h,
        steps_per_period: n,
        sequence: seq,
        samples,
        receptions,
        reception_samples,
    })
}

/// Runs independent simulations concurrently; results keep input order.
pub fn simulate_batch(cfgs: &[DdsConfig]) -> Vec<Result<SimTrace>> {
    cfgs.par_iter().map(simulate).collect()
}

fn push_gap(seq: &mut Vec<bool>, label: u32) {
    seq.extend(std::iter::repeat(false).take(label as usize - 1));
    seq.push(true);
}

/// Produces `length` transmission outcomes starting with a reception,
/// following edges from the initial node of `g`. The result is checked
/// against the graph's constraint when one is attached.
pub fn gen_sequence_from_graph(g: &WhrtGraph, mode: &SequenceMode, length: usize) -> Result<BinarySeq> {
    if length == 0 {
        return invalid("sequence length must be positive");
    }
    if g.edges().is_empty() {
        return invalid("graph has no edges");
    }
    let mut seq = vec![true];
    let mut at = g.initial();
    match mode {
        SequenceMode::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            while seq.len() < length {
                let out = g.outgoing(at);
                if out.is_empty() {
                    return invalid(format!("node {at} has no outgoing edge"));
                }
                let e = g.edges()[out[rng.gen_range(0..out.len())]];
                push_gap(&mut seq, e.label);
                at = e.to;
            }
        }
        SequenceMode::Worst { table, c_walk } => {
            let maximizers = worst_walks(g, table, *c_walk)?;
            while seq.len() < length {
                let walk = maximizers[at]
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput(format!("no walk leaves node {at}")))?;
                for label in walk.labels(g) {
                    push_gap(&mut seq, label);
                }
                at = walk.end(g);
            }
        }
    }
    seq.truncate(length);
    if let Some(c) = g.constraint() {
        if !satisfies(&seq, c)? {
            return Err(Error::InvalidInput(format!(
                "generated sequence violates {c}; the graph does not match its constraint"
            )));
        }
    }
    Ok(BinarySeq(seq))
}

/// Per start node, the lexicographically first walk maximizing the walk sum.
pub fn worst_walks(g: &WhrtGraph, table: &ParameterTable, c_walk: u32) -> Result<Vec<Option<Walk>>> {
    g.nodes()
        .collect::<Vec<NodeId>>()
        .par_iter()
        .map(|&s| {
            if g.outgoing(s).is_empty() {
                return Ok(None);
            }
            Ok(Some(walk_sum_summary(g, c_walk, table, &[s])?.worst_walk))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalCheck {
    pub start: f64,
    pub end: f64,
    pub gap: u32,
    pub v_start: f64,
    pub v_end: f64,
    /// `exp(max{-eps, 2(L - Lambda)} (end - start)) V(start)`
    pub bound: f64,
    pub end_ok: bool,
    /// `V(t) <= k1 V(start)` on the interval.
    pub interior_ok: bool,
    /// Largest `U(t) / (exp(d (t - start)) V(start))`, when the interval is
    /// shorter than `t_max`.
    pub u_ratio: Option<f64>,
}

impl IntervalCheck {
    pub fn u_ok(&self) -> bool {
        self.u_ratio.map_or(true, |r| r <= 1.0 + BOUND_TOLERANCE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub intervals: Vec<IntervalCheck>,
}

impl BoundReport {
    pub fn end_pass_fraction(&self) -> f64 {
        if self.intervals.is_empty() {
            return 1.0;
        }
        self.intervals.iter().filter(|c| c.end_ok).count() as f64 / self.intervals.len() as f64
    }

    pub fn all_interior_ok(&self) -> bool {
        self.intervals.iter().all(|c| c.interior_ok)
    }

    pub fn all_u_ok(&self) -> bool {
        self.intervals.iter().all(IntervalCheck::u_ok)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:>14} {:>4} {:>16} {:>16} {:>16} {:>6} {:>8} {:>12}\n",
            "start", "gap", "V(start)", "V(end)", "bound", "end", "inside", "U ratio"
        );
        for c in &self.intervals {
            s.push_str(&format!(
                "{:>14.9} {:>4} {:>16.9e} {:>16.9e} {:>16.9e} {:>6} {:>8} {:>12}\n",
                c.start,
                c.gap,
                c.v_start,
                c.v_end,
                c.bound,
                if c.end_ok { "ok" } else { "FAIL" },
                if c.interior_ok { "ok" } else { "FAIL" },
                c.u_ratio.map_or("n/a".into(), |r| format!("{r:.9}")),
            ));
        }
        s.push_str(&format!("end-bound pass fraction {:.9}\n", self.end_pass_fraction()));
        s
    }
}

fn within(value: f64, bound: f64) -> bool {
    value <= bound * (1.0 + BOUND_TOLERANCE)
}

/// Checks, on every completed inter-reception interval of gap `i`, the
/// exponential bound with row `i` of `table`, the interior bound with
/// `k1 = max{exp(d T), 1}`, and the same bound for `U = V + gamma phi e^2`.
pub fn validate_prop2_bounds(trace: &SimTrace, table: &ParameterTable) -> Result<BoundReport> {
    let mut intervals = Vec::new();
    for (z, w) in trace.reception_samples.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let start = trace.receptions[z];
        let end = trace.receptions[z + 1];
        let gap = ((end - start) / trace.h).round() as u32;
        let p = table
            .row(gap)
            .ok_or_else(|| Error::InvalidInput(format!("no parameter row for observed gap {gap}")))?;
        let d = p.decay_exponent();
        let span = end - start;
        let v_start = trace.samples[a].v;
        // The sample before `b` is the pre-reset state at `end`.
        let v_end = trace.samples[b - 1].v;
        let bound = (d * span).exp() * v_start;
        let k1 = (d * span).exp().max(1.0);
        let inside = &trace.samples[a..b];
        let interior_ok = inside.iter().all(|s| within(s.v, k1 * v_start));

        let limit = p.t_max();
        let u_ratio = if span < limit && v_start > 0.0 {
            let lambda = lambda_for_span(0.5 * (span + limit), p.gamma, p.lambda)?;
            let dt = span / (gap as usize * trace.steps_per_period) as f64;
            let phi = solve_phi(lambda, p.gamma, p.lambda, span, dt)?;
            debug_assert_eq!(phi.len(), inside.len());
            let mut worst: f64 = 0.0;
            for (s, ph) in inside.iter().zip(&phi) {
                let u = u_value(s.v, s.e.abs(), p.gamma, ph.phi);
                worst = worst.max(u / ((d * (s.t - start)).exp() * v_start));
            }
            Some(worst)
        } else {
            None
        };
        intervals.push(IntervalCheck {
            start,
            end,
            gap,
            v_start,
            v_end,
            bound,
            end_ok: within(v_end, bound),
            interior_ok,
            u_ratio,
        });
    }
    Ok(BoundReport { intervals })
}

/// Window boundaries: starting at the first reception, the next boundary
/// is the first reception at which the accumulated gap reaches `c_walk`.
pub fn window_times(trace: &SimTrace, c_walk: u32) -> Vec<f64> {
    let mut out = Vec::new();
    let Some(&first) = trace.receptions.first() else {
        return out;
    };
    out.push(first);
    let mut acc = 0;
    for (gap, &t) in trace.gaps().into_iter().zip(&trace.receptions[1..]) {
        acc += gap;
        if acc >= c_walk {
            out.push(t);
            acc = 0;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowCheck {
    pub start: f64,
    pub end: f64,
    /// `V(x) + |e|` at the window boundaries.
    pub vn_start: f64,
    pub vn_end: f64,
    /// Largest `V(x) + |e|` inside the window.
    pub vn_peak: f64,
    /// Largest `V(x)` inside the window.
    pub v_peak: f64,
}

impl WindowCheck {
    /// Strict decrease, or both ends at the equilibrium.
    pub fn decreased(&self) -> bool {
        self.vn_end < self.vn_start || (self.vn_start == 0.0 && self.vn_end == 0.0)
    }

    /// `vn_peak / vn_start`, or 1 at the equilibrium. Near the origin
    /// `|e|` dominates `V`, so this ratio is not uniformly bounded.
    pub fn peak_ratio(&self) -> f64 {
        if self.vn_start == 0.0 {
            1.0
        } else {
            self.vn_peak / self.vn_start
        }
    }

    /// `v_peak / V(start)`; `e` vanishes at window boundaries.
    pub fn v_peak_ratio(&self) -> f64 {
        if self.vn_start == 0.0 {
            1.0
        } else {
            self.v_peak / self.vn_start
        }
    }

    /// `vn_end <= exp(-k3 (end - start)) vn_start`, with relative tolerance.
    pub fn meets_rate(&self, k3: f64, tol: f64) -> bool {
        self.vn_end <= (-k3 * (self.end - self.start)).exp() * self.vn_start * (1.0 + tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowReport {
    pub windows: Vec<WindowCheck>,
}

impl WindowReport {
    pub fn all_decrease(&self) -> bool {
        self.windows.iter().all(WindowCheck::decreased)
    }

    pub fn max_peak_ratio(&self) -> f64 {
        self.windows.iter().map(WindowCheck::peak_ratio).fold(1.0, f64::max)
    }

    pub fn max_v_peak_ratio(&self) -> f64 {
        self.windows.iter().map(WindowCheck::v_peak_ratio).fold(1.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:>14} {:>14} {:>16} {:>16} {:>14} {:>9}\n",
            "start", "end", "Vn(start)", "Vn(end)", "V peak ratio", "decrease"
        );
        for w in &self.windows {
            s.push_str(&format!(
                "{:>14.9} {:>14.9} {:>16.9e} {:>16.9e} {:>14.9} {:>9}\n",
                w.start,
                w.end,
                w.vn_start,
                w.vn_end,
                w.v_peak_ratio(),
                if w.decreased() { "yes" } else { "NO" }
            ));
        }
        s
    }
}

/// Compares `V_n = V(x) + |e|` across consecutive window boundaries, which
/// must be reception instants in increasing order.
pub fn validate_prop1_windows(trace: &SimTrace, window_times: &[f64]) -> Result<WindowReport> {
    let tol = 1e-9 * trace.h;
    let mut idx = Vec::with_capacity(window_times.len());
    for &t in window_times {
        let z = trace
            .receptions
            .iter()
            .position(|&r| (r - t).abs() <= tol)
            .ok_or_else(|| Error::InvalidInput(format!("window time {t} is not a reception instant")))?;
        if let Some(&prev) = idx.last() {
            if z <= prev {
                return invalid("window times must be strictly increasing");
            }
        }
        idx.push(z);
    }
    let vn = |s: &Sample| s.v + s.e.abs();
    let windows = idx
        .windows(2)
        .map(|w| {
            let a = trace.reception_samples[w[0]];
            let b = trace.reception_samples[w[1]];
            WindowCheck {
                start: trace.receptions[w[0]],
                end: trace.receptions[w[1]],
                vn_start: vn(&trace.samples[a]),
                vn_end: vn(&trace.samples[b]),
                vn_peak: trace.samples[a..=b].iter().map(vn).fold(0.0, f64::max),
                v_peak: trace.samples[a..=b].iter().map(|s| s.v).fold(0.0, f64::max),
            }
        })
        .collect();
    Ok(WindowReport { windows })
}
