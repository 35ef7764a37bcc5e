//! `whrt` command-line frontend.
//!
//! Exit codes: 0 on success (or a positive verdict), 1 on a negative verdict
//! (not certified, infeasible, failed validation), 2 on usage, parse, I/O or
//! numerical errors.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use whrt_core::certify::{
    check_assumption2, max_certifiable_h, search_parameters, theorem1_certify,
    walk_sum_summary, ParameterTable, SearchGrid,
};
use whrt_core::emulation::{t_max_with_branch, t_tilde_max};
use whrt_core::graph::{build_graph, validate_graph};
use whrt_core::sim::{
    simulate, validate_prop1_windows, validate_prop2_bounds, window_times, DdsConfig, SeqSource,
    SequenceMode, MIN_STEPS_PER_PERIOD,
};
use whrt_core::walks::{enumerate_walk_set_capped, visit_walk_set, Walk, DEFAULT_WALK_CAP};
use whrt_core::{BinarySeq, Constraint, EmulationParams, GridSpec, Poly, ScalarPolySystem, WhrtGraph};

mod reproduce;

/// Environment variable selecting the worker thread count.
pub const THREADS_ENV: &str = "WHRT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "whrt", version, about = "Stability certificates for sampled loops with weakly-hard dropouts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build, validate and export the graph of a constraint
    Graph(GraphArgs),
    /// Dump the walk set S(G, c_walk)
    Walks(WalksArgs),
    /// Evaluate the emulation bound t_max(gamma, Lambda)
    Tmax(TmaxArgs),
    /// Grid check of the hybrid Lyapunov inequalities
    Feasibility(FeasibilityArgs),
    /// Decide the walk-sum stability certificate
    Certify(CertifyArgs),
    /// Simulate the sampled loop and check the decay bounds along the trace
    Simulate(SimulateArgs),
    /// Rerun the scalar example end to end and compare with reference values
    ReproducePaper(ReproduceArgs),
}

#[derive(Debug, Args)]
struct GraphSource {
    /// Constraint such as any:17/20, row:2/5 or norowmiss:3/5
    #[arg(long)]
    constraint: Option<Constraint>,
    /// Load the graph from an adjacency file instead of building it
    #[arg(long, value_name = "PATH")]
    graph: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GraphArgs {
    #[command(flatten)]
    source: GraphSource,
    /// Compare the graph language with brute force up to this length
    #[arg(long, value_name = "HORIZON")]
    validate: Option<usize>,
    /// Write the adjacency export here
    #[arg(long, short, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Write a Graphviz rendering here
    #[arg(long, value_name = "PATH")]
    dot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StartSet {
    /// Every node
    All,
    /// Only the initial node
    Initial,
}

#[derive(Debug, Args)]
struct WalksArgs {
    #[command(flatten)]
    source: GraphSource,
    #[arg(long)]
    cwalk: u32,
    #[arg(long, value_enum, default_value_t = StartSet::All)]
    starts: StartSet,
    /// Refuse to dump more walks than this
    #[arg(long, default_value_t = DEFAULT_WALK_CAP)]
    cap: usize,
    /// Write the dump here instead of stdout
    #[arg(long, short, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Only print the count and cost range
    #[arg(long)]
    summary: bool,
}

#[derive(Debug, Args)]
struct TmaxArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long = "lambda-cap")]
    lambda_cap: f64,
    /// Also evaluate t_tilde_max for this lambda in (0, 1)
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = 5.0)]
    x_bound: f64,
    #[arg(long, default_value_t = 5.0)]
    e_bound: f64,
    #[arg(long, default_value_t = 500)]
    nx: usize,
    #[arg(long, default_value_t = 500)]
    ne: usize,
}

impl GridArgs {
    fn spec(&self) -> GridSpec {
        GridSpec {
            x_bound: self.x_bound,
            e_bound: self.e_bound,
            nx: self.nx,
            ne: self.ne,
        }
    }
}

#[derive(Debug, Args)]
struct FeasibilityArgs {
    /// `example`, `example(d2)` or `poly:p=..;kappa=..;V=..;q=..;L=..`
    #[arg(long, default_value = "example")]
    system: String,
    /// Check every row of this parameter file
    #[arg(long, value_name = "PATH", conflicts_with_all = ["gamma", "epsilon"])]
    params: Option<PathBuf>,
    #[arg(long, required_unless_present = "params")]
    gamma: Option<f64>,
    #[arg(long, required_unless_present = "params", allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// Defaults to the system's L
    #[arg(long)]
    l: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[command(flatten)]
    source: GraphSource,
    #[arg(long)]
    h: f64,
    #[arg(long)]
    cwalk: u32,
    /// Parameter file with rows `i gamma L Lambda epsilon`
    #[arg(long, value_name = "PATH", required_unless_present = "search")]
    params: Option<PathBuf>,
    /// System the parameters refer to; used for the feasibility check and search
    #[arg(long, default_value = "example")]
    system: String,
    /// Also grid-check every table row against the system
    #[arg(long)]
    check_feasibility: bool,
    /// Find the table by grid search instead of reading it
    #[arg(long)]
    search: bool,
    /// Write the walk-sum histogram as CSV
    #[arg(long, value_name = "PATH")]
    histogram: Option<PathBuf>,
    /// Write the table used (useful with --search)
    #[arg(long, value_name = "PATH")]
    write_params: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SequenceKind {
    /// Chain the walk-sum maximizers
    Worst,
    /// Random walk through the graph
    Random,
    /// Use --bits
    Explicit,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: GraphSource,
    #[arg(long, default_value = "example")]
    system: String,
    #[arg(long)]
    h: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    x0: f64,
    #[arg(long, default_value_t = 60.0)]
    t_end: f64,
    /// Integration steps per sampling period
    #[arg(long, default_value_t = MIN_STEPS_PER_PERIOD)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = SequenceKind::Worst)]
    sequence: SequenceKind,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Comma-separated outcomes for --sequence explicit, e.g. 1,0,1,1
    #[arg(long)]
    bits: Option<String>,
    #[arg(long, value_name = "PATH")]
    params: Option<PathBuf>,
    #[arg(long)]
    cwalk: Option<u32>,
    /// Trace CSV destination
    #[arg(long, short, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// Write the trace, histogram and parameter files here
    #[arg(long, value_name = "DIR")]
    output_dir: Option<PathBuf>,
}

/// Error reported with exit code 2.
#[derive(Debug)]
pub struct CliError(String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<whrt_core::Error> for CliError {
    fn from(e: whrt_core::Error) -> Self {
        Self(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self(format!("i/o error: {e}"))
    }
}

type CliResult<T> = Result<T, CliError>;

fn fail<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError(msg.into()))
}

/// Outcome of a subcommand that completed without error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    fn code(self) -> i32 {
        match self {
            Self::Pass => 0,
            Self::Fail => 1,
        }
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "error: {e}");
        return 2;
    }
    match dispatch(cli.command, out) {
        Ok(v) => v.code(),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    if n == 0 {
        return fail(format!("{THREADS_ENV} must be a positive integer, got 0"));
    }
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> CliResult<Verdict> {
    match cmd {
        Command::Graph(a) => cmd_graph(a, out),
        Command::Walks(a) => cmd_walks(a, out),
        Command::Tmax(a) => cmd_tmax(a, out),
        Command::Feasibility(a) => cmd_feasibility(a, out),
        Command::Certify(a) => cmd_certify(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::ReproducePaper(a) => reproduce::run(a.output_dir.as_deref(), out),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError(format!("cannot write {}: {e}", path.display())))
}

/// Reads a parameter file with rows `i gamma L Lambda epsilon`.
pub fn parse_params_file(path: &Path) -> CliResult<ParameterTable> {
    let text = read(path)?;
    ParameterTable::parse(&text).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

/// Parses a system selector: `example`, `example(d2)`, or
/// `poly:p=c0,c1,..;kappa=..;V=..;q=..;L=value` with ascending coefficients.
pub fn parse_system(text: &str) -> CliResult<ScalarPolySystem> {
    let text = text.trim();
    if text == "example" {
        return Ok(ScalarPolySystem::example(1.0));
    }
    if let Some(inner) = text.strip_prefix("example(").and_then(|s| s.strip_suffix(')')) {
        let d2: f64 = inner
            .trim()
            .parse()
            .map_err(|_| CliError(format!("system selector, column 9: expected a number, got {inner:?}")))?;
        return Ok(ScalarPolySystem::example(d2));
    }
    let Some(body) = text.strip_prefix("poly:") else {
        return fail(format!(
            "system selector, column 1: expected `example`, `example(d2)` or `poly:...`, got {text:?}"
        ));
    };
    let mut fields: [Option<Poly>; 4] = Default::default();
    let mut l = None;
    let mut column = "poly:".len() + 1;
    for part in body.split(';') {
        let col = column;
        column += part.len() + 1;
        if part.trim().is_empty() {
            continue;
        }
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| CliError(format!("system selector, column {col}: expected key=value")))?;
        let key = key.trim();
        if key == "L" {
            l = Some(value.trim().parse::<f64>().map_err(|_| {
                CliError(format!("system selector, column {col}: L must be a number"))
            })?);
            continue;
        }
        let slot = match key {
            "p" => 0,
            "kappa" => 1,
            "V" => 2,
            "q" => 3,
            _ => return fail(format!("system selector, column {col}: unknown key {key:?}")),
        };
        let coeffs = value
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError(format!("system selector, column {col}: bad coefficient list for {key}")))?;
        fields[slot] = Some(Poly::new(coeffs));
    }
    let [p, kappa, v, q] = fields;
    let missing = |k: &str| CliError(format!("system selector: missing key {k}"));
    Ok(ScalarPolySystem::new(
        p.ok_or_else(|| missing("p"))?,
        kappa.ok_or_else(|| missing("kappa"))?,
        v.ok_or_else(|| missing("V"))?,
        q.ok_or_else(|| missing("q"))?,
        l.ok_or_else(|| missing("L"))?,
    )?)
}

fn load_graph(src: &GraphSource) -> CliResult<(Constraint, WhrtGraph)> {
    match (&src.graph, src.constraint) {
        (Some(path), explicit) => {
            let g = WhrtGraph::from_adjacency(&read(path)?)
                .map_err(|e| CliError(format!("{}: {e}", path.display())))?;
            let c = match (explicit, g.constraint()) {
                (Some(c), Some(stored)) if c != *stored => {
                    return fail(format!("graph file is for {stored}, not {c}"))
                }
                (Some(c), _) => c,
                (None, Some(stored)) => *stored,
                (None, None) => return fail("graph file has no constraint line; pass --constraint"),
            };
            Ok((c, g.with_constraint(c)))
        }
        (None, Some(c)) => Ok((c, build_graph(&c)?.with_constraint(c))),
        (None, None) => fail("either --constraint or --graph is required"),
    }
}

fn cmd_graph(a: GraphArgs, out: &mut dyn Write) -> CliResult<Verdict> {
    let (c, g) = load_graph(&a.source)?;
    writeln!(out, "constraint {c}")?;
    writeln!(out, "nodes {}", g.node_count())?;
    writeln!(out, "edges {}", g.edges().len())?;
    writeln!(out, "max label {}", g.max_label())?;
    if let Some(path) = &a.output {
        write_file(path, &g.to_adjacency())?;
    } else if a.dot.is_none() && g.edges().len() <= 64 {
        write!(out, "{}", g.to_adjacency())?;
    }
    if let Some(path) = &a.dot {
        write_file(path, &g.to_dot())?;
    }
    let Some(horizon) = a.validate else {
        return Ok(Verdict::Pass);
    };
    let r = validate_graph(&g, &c, horizon);
    writeln!(out, "validation horizon {horizon}")?;
    writeln!(out, "  generated patterns   {}", r.generated_patterns)?;
    writeln!(out, "  admissible patterns  {}", r.admissible_patterns)?;
    writeln!(out, "  soundness failures   {}", r.soundness_counterexamples.len())?;
    if r.completeness_checked {
        writeln!(out, "  completeness failures {}", r.completeness_counterexamples.len())?;
    } else {
        writeln!(out, "  completeness not checked (horizon below 2m)")?;
    }
    for issue in &r.structural {
        writeln!(out, "  structural: {issue}")?;
    }
    for s in r.soundness_counterexamples.iter().take(5) {
        writeln!(out, "  unsound: {s}")?;
    }
    for s in r.completeness_counterexamples.iter().take(5) {
        writeln!(out, "  missing: {s}")?;
    }
    writeln!(out, "validation {}", if r.passed() { "pass" } else { "FAIL" })?;
    Ok(Verdict::from_bool(r.passed()))
}

fn cmd_walks(a: WalksArgs, out: &mut dyn Write) -> CliResult<Verdict> {
    let (c, g) = load_graph(&a.source)?;
    let starts: Vec<usize> = match a.starts {
        StartSet::All => g.nodes().collect(),
        StartSet::Initial => vec![g.initial()],
    };
    if a.summary {
        let (mut count, mut lo, mut hi) = (0usize, u32::MAX, 0);
        visit_walk_set(&g, a.cwalk, &starts, &mut |_, _, cost| {
            count += 1;
            lo = lo.min(cost);
            hi = hi.max(cost);
        })?;
        writeln!(out, "constraint {c}")?;
        writeln!(out, "walks {count}")?;
        if count > 0 {
            writeln!(out, "cost range {lo}..={hi}")?;
        }
        return Ok(Verdict::Pass);
    }
    let walks = enumerate_walk_set_capped(&g, a.cwalk, &starts, a.cap)?;
    let mut text = format!("# S(G, {}) for {c}: {} walks\n", a.cwalk, walks.len());
    for w in &walks {
        text.push_str(&w.to_string());
        text.push('\n');
    }
    match &a.output {
        Some(path) => {
            write_file(path, &text)?;
            writeln!(out, "wrote {} walks to {}", walks.len(), path.display())?;
        }
        None => write!(out, "{text}")?,
    }
    Ok(Verdict::Pass)
}

/// Parses a walk dump written by `walks`.
pub fn parse_walk_dump(g: &WhrtGraph, text: &str) -> CliResult<Vec<Walk>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(k, l)| Walk::parse_line(g, l).map_err(|e| CliError(format!("line {}: {e}", k + 1))))
        .collect()
}

fn cmd_tmax(a: TmaxArgs, out: &mut dyn Write) -> CliResult<Verdict> {
    let (t, branch) = t_max_with_branch(a.gamma, a.lambda_cap)?;
    writeln!(out, "t_max {t:.9}")?;
    writeln!(out, "branch {branch}")?;
    if let Some(lambda) = a.lambda {
        writeln!(out, "t_tilde_max {:.9}", t_tilde_max(lambda, a.gamma, a.lambda_cap)?)?;
    }
    Ok(Verdict::Pass)
}

fn cmd_feasibility(a: FeasibilityArgs, out: &mut dyn Write) -> CliResult<Verdict> {
    let sys = parse_system(&a.system)?;
    let grid = a.grid.spec();
    let rows: Vec<(String, EmulationParams)> = match &a.params {
        Some(path) => parse_params_file(path)?
            .indexed()
            .map(|(i, p)| (format!("row i={i}"), *p))
            .collect(),
        None => {
            let l = a.l.unwrap_or(sys.l);
            let p = EmulationParams::new(a.gamma.unwrap_or_default(), l, l, a.epsilon.unwrap_or_default())?;
            vec![("parameters".to_string(), p)]
        }
    };
    let mut all = true;
    for (name, p) in rows {
        let r = check_assumption2(&sys, &p, &grid)?;
        writeln!(out, "{name}: gamma {:.6} L {:.6} epsilon {:.6}", p.gamma, p.l, p.epsilon)?;
        writeln!(out, "{r}")?;
        all &= r.feasible;
    }
    Ok(Verdict::from_bool(all))
}

fn histogram_csv(hist: &[(f64, usize)]) -> String {
    let mut s = String::from("walk_sum,count\n");
    for (sum, n) in hist {
        s.push_str(&format!("{sum:.9e},{n}\n"));
    }
    s
}

fn cmd_certify(a: CertifyArgs, out: &mut dyn Write) -> CliResult<Verdict> {
    let (c, g) = load_graph(&a.source)?;
    let sys = parse_system(&a.system)?;
    let table = if a.search {
        let mut grid = SearchGrid::default();
        if let Some(path) = &a.params {
            grid.seeds = parse_params_file(path)?.rows().to_vec();
        }
        let found = search_parameters(&sys, &c, a.h, &grid)?;
        for row in &found.rows {
            match &row.best {
                Some(p) => writeln!(
                    out,
                    "search i={}: gamma {:.6} Lambda {:.6} epsilon {:.6} objective {:.6}",
                    row.gap, p.gamma, p.lambda, p.epsilon, row.objective
                )?,
                None => writeln!(out, "search i={}: infeasible on the grid", row.gap)?,
            }
        }
        match found.table() {
            Some(t) => t,
            None => {
                writeln!(out, "verdict           NOT CERTIFIED (no feasible parameters on the search grid)")?;
                return Ok(Verdict::Fail);
            }
        }
    } else {
        parse_params_file(a.params.as_deref().expect("clap requires --params without --search"))?
    };
    if let Some(path) = &a.write_params {
        write_file(path, &table.to_text())?;
    }
    let cert = theorem1_certify(&c, a.h, a.cwalk, &table, &g)?;
    write!(out, "{cert}")?;
    let mut ok = cert.certified;
    if a.check_feasibility {
        writeln!(out)?;
        for (i, p) in table.indexed() {
            let r = check_assumption2(&sys, p, &GridSpec::default())?;
            writeln!(out, "row i={i}: {}", if r.feasible { "feasible" } else { "INFEASIBLE" })?;
            writeln!(out, "{r}")?;
            ok &= r.feasible;
        }
    }
    let step = max_certifiable_h(&c, a.cwalk, &table, &g)?;
    match &step.reason {
        None => writeln!(out, "max certifiable h {:.9} s (tight at i={})", step.h, step.limiting_gap.unwrap_or(0))?,
        Some(why) => writeln!(out, "max certifiable h 0 ({why})")?,
    }
    if let Some(path) = &a.histogram {
        write_file(path, &histogram_csv(&cert.walk_sums.histogram))?;
    }
    Ok(Verdict::from_bool(ok))
}

fn parse_bits(text: &str) -> CliResult<BinarySeq> {
    let mut bits = Vec::new();
    let mut column = 1;
    for tok in text.split(',') {
        match tok.trim() {
            "1" => bits.push(true),
            "0" => bits.push(false),
            other => return fail(format!("--bits, column {column}: expected 0 or 1, got {other:?}")),
        }
        column += tok.len() + 1;
    }
    Ok(BinarySeq(bits))
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> CliResult<Verdict> {
    let sys = parse_system(&a.system)?;
    let table = a.params.as_deref().map(parse_params_file).transpose()?;
    let needs_graph = a.sequence != SequenceKind::Explicit;
    let loaded = if needs_graph || a.source.constraint.is_some() || a.source.graph.is_some() {
        Some(load_graph(&a.source)?)
    } else {
        None
    };
    let source = match a.sequence {
        SequenceKind::Explicit => {
            let Some(bits) = &a.bits else {
                return fail("--sequence explicit needs --bits");
            };
            SeqSource::Explicit(parse_bits(bits)?)
        }
        SequenceKind::Random => SeqSource::Graph {
            graph: loaded.as_ref().expect("graph loaded").1.clone(),
            mode: SequenceMode::Random { seed: a.seed },
        },
        SequenceKind::Worst => {
            let (Some(table), Some(c_walk)) = (&table, a.cwalk) else {
                return fail("--sequence worst needs --params and --cwalk");
            };
            SeqSource::Graph {
                graph: loaded.as_ref().expect("graph loaded").1.clone(),
                mode: SequenceMode::Worst { table: table.clone(), c_walk },
            }
        }
    };
    let cfg = DdsConfig {
        sys,
        h: a.h,
        x0: a.x0,
        source,
        t_end: a.t_end,
        steps_per_period: a.steps,
    };
    let trace = simulate(&cfg)?;
    if let Some(path) = &a.output {
        write_file(path, &trace.to_csv())?;
    }
    let last = trace.last();
    writeln!(out, "samples {}", trace.samples.len())?;
    writeln!(out, "receptions {}", trace.receptions.len())?;
    writeln!(out, "final t {:.9} x {:.9e} V {:.9e}", last.t, last.x, last.v)?;
    let mut ok = true;
    if let Some(table) = &table {
        let bounds = validate_prop2_bounds(&trace, table)?;
        write!(out, "{}", bounds.to_text())?;
        writeln!(out, "interior bound {}", if bounds.all_interior_ok() { "holds" } else { "VIOLATED" })?;
        writeln!(out, "U bound {}", if bounds.all_u_ok() { "holds" } else { "VIOLATED" })?;
        ok &= bounds.end_pass_fraction() >= 0.99;
    }
    if let Some(c_walk) = a.cwalk {
        let windows = validate_prop1_windows(&trace, &window_times(&trace, c_walk))?;
        write!(out, "{}", windows.to_text())?;
        writeln!(out, "windows decrease {}", if windows.all_decrease() { "yes" } else { "NO" })?;
        ok &= windows.all_decrease();
    }
    if let (Some(table), Some(c_walk), Some((_, g))) = (&table, a.cwalk, &loaded) {
        let starts: Vec<usize> = g.nodes().collect();
        let sums = walk_sum_summary(g, c_walk, table, &starts)?;
        writeln!(out, "max walk sum {:.9}", sums.worst_sum)?;
    }
    Ok(Verdict::from_bool(ok))
}
