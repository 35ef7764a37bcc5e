use whrt_core::certify::{theorem1_certify, ParameterTable};
use whrt_core::constraints::satisfies;
use whrt_core::graph::build_graph;
use whrt_core::sim::{
    gen_sequence_from_graph, simulate, simulate_batch, validate_prop1_windows, validate_prop2_bounds,
    window_times, DdsConfig, SeqSource, SequenceMode,
};
use whrt_core::{BinarySeq, Constraint, Error, Poly, ScalarPolySystem};

fn worst_config(h: f64, x0: f64, t_end: f64, n: usize) -> DdsConfig {
    let c = Constraint::any(17, 20).unwrap();
    DdsConfig {
        sys: ScalarPolySystem::example(1.0),
        h,
        x0,
        source: SeqSource::Graph {
            graph: build_graph(&c).unwrap(),
            mode: SequenceMode::Worst {
                table: ParameterTable::reference_example(),
                c_walk: 20,
            },
        },
        t_end,
        steps_per_period: n,
    }
}

fn explicit(bits: Vec<bool>, h: f64, x0: f64, t_end: f64, n: usize) -> DdsConfig {
    DdsConfig {
        sys: ScalarPolySystem::example(1.0),
        h,
        x0,
        source: SeqSource::Explicit(BinarySeq(bits)),
        t_end,
        steps_per_period: n,
    }
}

// Explicit midpoint integration of the same reset system at a much finer step.
fn midpoint_oracle(sys: &ScalarPolySystem, bits: &[bool], h: f64, x0: f64, sub: usize) -> Vec<f64> {
    let dt = h / sub as f64;
    let (mut x, mut e) = (x0, 0.0);
    let mut out = Vec::new();
    for &b in bits {
        if b {
            e = 0.0;
        }
        out.push(x);
        for _ in 0..sub {
            let f1 = sys.flow(x, e);
            let (xm, em) = (x + 0.5 * dt * f1, e - 0.5 * dt * f1);
            let f2 = sys.flow(xm, em);
            x += dt * f2;
            e -= dt * f2;
        }
    }
    out
}

fn boundary_states(trace: &whrt_core::sim::SimTrace) -> Vec<f64> {
    let mut out = vec![trace.samples[0].x];
    let n = trace.steps_per_period;
    let mut k = 1;
    for s in &trace.samples[1..] {
        let expected = k as f64 * trace.h;
        if (s.t - expected).abs() < 1e-9 && !s.received {
            out.push(s.x);
            k += 1;
        }
    }
    assert!(out.len() >= trace.samples.len() / (n + 1));
    out
}

#[test]
fn matches_independent_integrator() {
    let bits = [true, false, false, true, true, false, true, false, false, false, true, true, true];
    let cfg = explicit(bits.to_vec(), 0.195, 1.3, 0.195 * 12.0, 100);
    let trace = simulate(&cfg).unwrap();
    let ours = boundary_states(&trace);
    let oracle = midpoint_oracle(&cfg.sys, &bits, 0.195, 1.3, 20_000);
    assert_eq!(ours.len(), 13);
    for (k, (a, b)) in ours.iter().zip(&oracle).enumerate() {
        assert!((a - b).abs() < 1e-8, "period {k}: {a} vs {b}");
    }
}

#[test]
fn rk4_converges_at_fourth_order() {
    for (x0, t_end) in [(1.0, 5.0), (1.5, 2.0)] {
        let end = |n| simulate(&worst_config(0.195, x0, t_end, n)).unwrap().last().x;
        let (a, b, c) = (end(50), end(100), end(200));
        let order = ((a - b) / (b - c)).abs().log2();
        assert!(order >= 3.5, "x0 {x0}: order {order}");
    }
}

#[test]
fn resets_and_continuity() {
    let trace = simulate(&worst_config(0.195, 1.0, 20.0, 50)).unwrap();
    assert_eq!(trace.reception_samples.len(), trace.receptions.len());
    for (k, &i) in trace.reception_samples.iter().enumerate() {
        let s = trace.samples[i];
        assert!(s.received);
        assert_eq!(s.e, 0.0);
        assert!((s.t - trace.receptions[k]).abs() < 1e-12);
        if i > 0 {
            let pre = trace.samples[i - 1];
            assert!(!pre.received);
            assert_eq!(pre.t, s.t);
            assert_eq!(pre.x, s.x);
        }
    }
    assert!(trace.samples.windows(2).all(|w| w[0].t <= w[1].t));
    let c = Constraint::any(17, 20).unwrap();
    assert!(satisfies(trace.sequence.bits(), &c).unwrap());
    let rebuilt: u32 = trace.gaps().iter().sum();
    assert_eq!(rebuilt as usize + 1, trace.sequence.bits().iter().rposition(|&b| b).unwrap() + 1);
    assert!(trace.to_csv().starts_with("t,x,e,V,received\n"));
}

#[test]
fn equilibrium_is_preserved() {
    let trace = simulate(&worst_config(0.195, 0.0, 10.0, 50)).unwrap();
    assert!(trace.samples.iter().all(|s| s.x == 0.0 && s.e == 0.0 && s.v == 0.0));
    let bounds = validate_prop2_bounds(&trace, &ParameterTable::reference_example()).unwrap();
    assert_eq!(bounds.end_pass_fraction(), 1.0);
    let windows = validate_prop1_windows(&trace, &window_times(&trace, 20)).unwrap();
    assert!(windows.all_decrease());
}

#[test]
fn random_sequences_respect_constraint() {
    for text in ["any:17/20", "row:2/5", "norowmiss:3/6", "any:1/4"] {
        let c: Constraint = text.parse().unwrap();
        let g = build_graph(&c).unwrap();
        for seed in 0..20 {
            let seq = gen_sequence_from_graph(&g, &SequenceMode::Random { seed }, 300).unwrap();
            assert_eq!(seq.len(), 300);
            assert!(seq.bits()[0]);
            assert!(satisfies(seq.bits(), &c).unwrap(), "{text} seed {seed}");
        }
        let a = gen_sequence_from_graph(&g, &SequenceMode::Random { seed: 7 }, 200).unwrap();
        let b = gen_sequence_from_graph(&g, &SequenceMode::Random { seed: 7 }, 200).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn certified_runs_meet_decay_bounds() {
    let c = Constraint::any(17, 20).unwrap();
    let g = build_graph(&c).unwrap();
    let table = ParameterTable::reference_example();
    let cert = theorem1_certify(&c, 0.195, 20, &table, &g).unwrap();
    let k3 = cert.k3.unwrap();
    let mut cfgs = vec![worst_config(0.195, 1.0, 60.0, 50)];
    for seed in 0..4 {
        let mut cfg = worst_config(0.195, 1.0 + 0.5 * seed as f64, 40.0, 50);
        cfg.source = SeqSource::Graph { graph: g.clone(), mode: SequenceMode::Random { seed } };
        cfgs.push(cfg);
    }
    for (k, trace) in simulate_batch(&cfgs).into_iter().enumerate() {
        let trace = trace.unwrap();
        let bounds = validate_prop2_bounds(&trace, &table).unwrap();
        assert_eq!(bounds.end_pass_fraction(), 1.0, "run {k}\n{}", bounds.to_text());
        assert!(bounds.all_interior_ok(), "run {k}");
        assert!(bounds.all_u_ok(), "run {k}");
        let windows = validate_prop1_windows(&trace, &window_times(&trace, 20)).unwrap();
        assert!(windows.windows.len() >= 5);
        assert!(windows.all_decrease(), "run {k}\n{}", windows.to_text());
        assert!(windows.windows.iter().all(|w| w.meets_rate(k3, 1e-2)), "run {k}");
    }
}

#[test]
fn fast_sampling_is_monotone() {
    let bits = vec![true; 2001];
    let trace = simulate(&explicit(bits, 1e-3, 2.0, 2.0, 50)).unwrap();
    for w in trace.samples.windows(2) {
        assert!(w[1].v <= w[0].v * (1.0 + 1e-9) + 1e-15, "V rose at t = {}", w[1].t);
    }
    assert!(trace.last().v < trace.samples[0].v);
}

#[test]
fn uncertified_runs_report_or_diverge() {
    let c = Constraint::any(17, 20).unwrap();
    let g = build_graph(&c).unwrap();
    let cert = theorem1_certify(&c, 1.0, 20, &ParameterTable::reference_example(), &g).unwrap();
    assert!(!cert.certified);
    match simulate(&worst_config(1.0, 1.0, 60.0, 50)) {
        Ok(trace) => {
            assert!(trace.samples.iter().all(|s| s.x.is_finite() && s.e.is_finite()));
            let bounds = validate_prop2_bounds(&trace, &ParameterTable::reference_example()).unwrap();
            assert_eq!(bounds.intervals.len(), trace.receptions.len() - 1);
        }
        Err(Error::Divergence { .. }) => {}
        Err(other) => panic!("{other}"),
    }
    let sys = ScalarPolySystem::new(
        Poly::new([0.0, 0.0, 1.0]),
        Poly::default(),
        Poly::new([0.0, 0.0, 1.0]),
        Poly::new([0.0, 1.0]),
        1.0,
    )
    .unwrap();
    let cfg = DdsConfig { sys, ..explicit(vec![true; 40], 0.5, 1.0, 10.0, 50) };
    let r = simulate(&cfg);
    assert!(matches!(r, Err(Error::Divergence { t, .. }) if t <= 1.02), "{r:?}");
}

#[test]
fn rejects_bad_configs() {
    let ok = explicit(vec![true; 11], 0.1, 1.0, 1.0, 50);
    assert!(simulate(&ok).is_ok());
    assert!(matches!(simulate(&DdsConfig { steps_per_period: 49, ..ok.clone() }), Err(Error::InvalidInput(_))));
    assert!(matches!(simulate(&DdsConfig { h: 0.0, ..ok.clone() }), Err(Error::InvalidInput(_))));
    assert!(matches!(simulate(&DdsConfig { t_end: 5.0, ..ok.clone() }), Err(Error::InvalidInput(_))));
    let mut late = vec![true; 11];
    late[0] = false;
    assert!(simulate(&explicit(late, 0.1, 1.0, 1.0, 50)).is_err());
}
