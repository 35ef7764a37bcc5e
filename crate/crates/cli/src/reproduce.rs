//! End-to-end run of the scalar example with the `any:17/20` constraint.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use whrt_core::certify::{
    check_assumption2, max_certifiable_h, max_dropout_bound, theorem1_certify, ParameterTable,
};
use whrt_core::graph::build_graph;
use whrt_core::sim::{
    simulate, validate_prop1_windows, validate_prop2_bounds, window_times, DdsConfig, SeqSource,
    SequenceMode,
};
use whrt_core::{Constraint, GridSpec, ScalarPolySystem};

use crate::{write_file, CliResult, Verdict};

const H: f64 = 0.195;
const C_WALK: u32 = 20;
const REFERENCE_TMAX: [f64; 4] = [0.211, 0.428, 0.605, 0.787];
const REFERENCE_BASELINE: f64 = 0.125;
const REFERENCE_RATIO: f64 = 1.56;

struct Table<'a> {
    out: &'a mut dyn Write,
}

impl Table<'_> {
    fn row(&mut self, what: &str, reference: &str, computed: &str, status: &str) -> std::io::Result<()> {
        writeln!(self.out, "{what:<40} {reference:>12} {computed:>16}  {status}")
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "DIFFERS"
    }
}

pub(crate) fn run(output_dir: Option<&Path>, out: &mut dyn Write) -> CliResult<Verdict> {
    let started = Instant::now();
    let c = Constraint::any(17, 20)?;
    let sys = ScalarPolySystem::example(1.0);
    let table = ParameterTable::reference_example();
    let g = build_graph(&c)?.with_constraint(c);

    let mut t = Table { out };
    t.row("quantity", "reference", "computed", "status")?;
    t.row(&format!("graph of {c}: nodes / edges"), "-", &format!("{} / {}", g.node_count(), g.edges().len()), "")?;
    for ((i, p), reference) in table.indexed().zip(REFERENCE_TMAX) {
        let v = p.t_max();
        t.row(
            &format!("t_max(gamma_{i}={}, Lambda_{i}={})", p.gamma, p.lambda),
            &format!("{reference:.3}"),
            &format!("{v:.9}"),
            mark((v - reference).abs() <= 1e-3),
        )?;
    }
    let grid = GridSpec::default();
    let mut feasible = true;
    for (i, p) in table.indexed() {
        let r = check_assumption2(&sys, p, &grid)?;
        feasible &= r.feasible;
        t.row(
            &format!("row {i} feasible on [-5,5]^2 (margin)"),
            "yes",
            &format!("{:.6e}", r.v_margin.min(r.w_margin)),
            mark(r.feasible),
        )?;
    }
    let base = max_dropout_bound(&c, 2.0, 2.0)?;
    t.row("baseline h < t_max(2,2)/(w+1)", &format!("{REFERENCE_BASELINE:.3}"), &format!("{base:.9}"), mark((base - REFERENCE_BASELINE).abs() <= 1e-6))?;
    let cert = theorem1_certify(&c, H, C_WALK, &table, &g)?;
    t.row(&format!("certified at h = {H}"), "yes", if cert.certified { "yes" } else { "no" }, mark(cert.certified))?;
    t.row("walks in S(G, 20)", "-", &cert.walk_sums.walk_count.to_string(), "")?;
    t.row("max walk sum (h factored out)", "< 0", &format!("{:.9}", cert.walk_sums.worst_sum), mark(cert.walk_sums.worst_sum < 0.0))?;
    t.row("decay constant k3 [1/s]", "> 0", &cert.k3.map_or("n/a".into(), |k| format!("{k:.9}")), mark(cert.k3.is_some()))?;
    let step = max_certifiable_h(&c, C_WALK, &table, &g)?;
    t.row("max certifiable h", &format!(">= {H}"), &format!("{:.9}", step.h), mark(step.h >= H))?;
    let ratio = step.h / base;
    t.row("improvement over baseline", &format!(">= {REFERENCE_RATIO}"), &format!("{ratio:.9}"), mark(ratio >= REFERENCE_RATIO))?;
    let at_020 = theorem1_certify(&c, 0.20, C_WALK, &table, &g)?;
    t.row("certified at h = 0.20", "no", if at_020.certified { "yes" } else { "no" }, mark(!at_020.certified))?;

    let cfg = DdsConfig {
        sys,
        h: H,
        x0: 1.0,
        source: SeqSource::Graph {
            graph: g.clone(),
            mode: SequenceMode::Worst { table: table.clone(), c_walk: C_WALK },
        },
        t_end: 60.0,
        steps_per_period: 50,
    };
    let trace = simulate(&cfg)?;
    let bounds = validate_prop2_bounds(&trace, &table)?;
    let windows = validate_prop1_windows(&trace, &window_times(&trace, C_WALK))?;
    let frac = bounds.end_pass_fraction();
    t.row("worst-case run: interval bound pass rate", ">= 0.99", &format!("{frac:.9}"), mark(frac >= 0.99))?;
    let decreasing = windows.windows.iter().filter(|w| w.decreased()).count();
    t.row(
        "worst-case run: decreasing windows",
        "all",
        &format!("{decreasing}/{}", windows.windows.len()),
        mark(windows.all_decrease()),
    )?;
    t.row("worst-case run: V at t = 60 s", "-", &format!("{:.6e}", trace.last().v), "")?;
    writeln!(t.out, "elapsed {:.3} s", started.elapsed().as_secs_f64())?;

    if let Some(dir) = output_dir {
        std::fs::create_dir_all(dir)?;
        write_file(&dir.join("params.cfg"), &table.to_text())?;
        write_file(&dir.join("trace.csv"), &trace.to_csv())?;
        write_file(&dir.join("walk_sums.csv"), &crate::histogram_csv(&cert.walk_sums.histogram))?;
        write_file(&dir.join("graph.txt"), &g.to_adjacency())?;
    }
    let reproduced = cert.certified
        && !at_020.certified
        && ratio >= REFERENCE_RATIO
        && feasible
        && windows.all_decrease()
        && frac >= 0.99;
    Ok(Verdict::from_bool(reproduced))
}
