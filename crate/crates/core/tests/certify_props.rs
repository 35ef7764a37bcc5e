use whrt_core::certify::{
    check_assumption2, max_certifiable_h, max_dropout_bound, search_parameters, theorem1_certify,
    Failure, ParameterTable, SearchGrid,
};
use whrt_core::emulation::t_max;
use whrt_core::graph::build_graph;
use whrt_core::walks::enumerate_walk_set;
use whrt_core::{Constraint, EmulationParams, Error, GridSpec, ScalarPolySystem};

fn any_17_20() -> (Constraint, whrt_core::WhrtGraph) {
    let c = Constraint::any(17, 20).unwrap();
    (c, build_graph(&c).unwrap())
}

#[test]
fn reference_table_certifies_at_0195() {
    let (c, g) = any_17_20();
    let table = ParameterTable::reference_example();
    let cert = theorem1_certify(&c, 0.195, 20, &table, &g).unwrap();
    assert!(cert.certified, "{cert}");
    assert!(cert.k3.unwrap() > 0.0);
    assert!(cert.failures.is_empty());
    assert!(cert.has_decaying_row);
    // Terms per gap are -1.5, -1, 6, 16; the worst walk packs one 3 and one 4.
    assert_eq!(cert.walk_sums.worst_sum, -2.0);
    let mut labels: Vec<u32> = cert.walk_sums.worst_walk.labels(&g).collect();
    labels.sort_unstable();
    assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 16);
    assert_eq!(&labels[16..], &[3, 4]);
    let span = 0.195 * 23.0;
    assert!((cert.k3.unwrap() - (1.0 - (-2.0f64 * 0.195).exp()) / span).abs() < 1e-12);
}

#[test]
fn reference_table_fails_at_020_on_gap_4() {
    let (c, g) = any_17_20();
    let cert = theorem1_certify(&c, 0.20, 20, &ParameterTable::reference_example(), &g).unwrap();
    assert!(!cert.certified);
    assert!(cert.k3.is_none());
    match &cert.failures[..] {
        [Failure::SampleBound { gap: 4, elapsed, t_max }] => {
            assert!((elapsed - 0.8).abs() < 1e-12);
            assert!(*t_max < 0.8 && *t_max > 0.78);
        }
        other => panic!("unexpected failures {other:?}"),
    }
}

#[test]
fn max_step_and_ratio() {
    let (c, g) = any_17_20();
    let table = ParameterTable::reference_example();
    let step = max_certifiable_h(&c, 20, &table, &g).unwrap();
    let expected = table
        .indexed()
        .map(|(i, p)| t_max(p.gamma, p.lambda).unwrap() / i as f64)
        .fold(f64::INFINITY, f64::min);
    assert!(step.h < expected && step.h > expected * (1.0 - 1e-8));
    assert!((step.h - 0.1967).abs() < 1e-3);
    assert!(step.h >= 0.195);
    let base = max_dropout_bound(&c, 2.0, 2.0).unwrap();
    assert!((base - 0.125).abs() < 1e-6);
    assert!(step.h / base >= 1.56);
    assert!(theorem1_certify(&c, step.h, 20, &table, &g).unwrap().certified);
}

#[test]
fn walk_condition_is_h_independent() {
    let c = Constraint::row(3, 7).unwrap();
    let g = build_graph(&c).unwrap();
    let w = whrt_core::constraints::max_consecutive_losses(&c) as usize;
    let all: Vec<usize> = g.nodes().collect();
    let tables = [
        vec![(1.5, 2.5, 1.0), (2.0, 2.2, 0.5), (2.0, 1.0, -1.0), (2.0, 0.5, -2.0), (2.0, 0.5, -3.0)],
        vec![(1.5, 2.5, 0.2), (2.0, 2.2, 0.1), (2.0, 1.0, -1.0), (2.0, 0.5, -2.0), (2.0, 0.5, -3.0)],
    ];
    for rows in tables {
        let table = ParameterTable::new(
            rows[..=w]
                .iter()
                .map(|&(gamma, cap, eps)| EmulationParams::new(gamma, 2.0, cap, eps).unwrap())
                .collect(),
        )
        .unwrap();
        let walks = enumerate_walk_set(&g, 12, &all).unwrap();
        for h in [0.01, 0.1, 1.0] {
            // Direct evaluation with the factor h kept in every term.
            let with_h = walks.iter().all(|walk| {
                walk.labels(&g)
                    .map(|l| {
                        let p = table.row(l).unwrap();
                        h * l as f64 * (-p.epsilon).max(2.0 * (p.l - p.lambda))
                    })
                    .sum::<f64>()
                    < 0.0
            });
            let cert = theorem1_certify(&c, h, 12, &table, &g).unwrap();
            assert_eq!(cert.walk_sums.holds(), with_h, "h = {h}");
        }
    }
}

#[test]
fn certification_is_monotone_in_h() {
    let (c, g) = any_17_20();
    let table = ParameterTable::reference_example();
    let step = max_certifiable_h(&c, 20, &table, &g).unwrap();
    for k in 1..=20 {
        let h = step.h * k as f64 / 20.0;
        assert!(theorem1_certify(&c, h, 20, &table, &g).unwrap().certified, "h = {h}");
    }
}

#[test]
fn no_row_miss_matches_max_dropout_baseline() {
    for w in 1..=3u32 {
        for m in w + 1..=w + 4 {
            let c = Constraint::no_row_miss(w + 1, m).unwrap();
            let g = build_graph(&c).unwrap();
            assert_eq!(whrt_core::constraints::max_consecutive_losses(&c), w);
            // Lambda slightly above L keeps every walk term strictly negative.
            let p = EmulationParams::new(2.0, 2.0, 2.2, 0.5).unwrap();
            let table = ParameterTable::uniform(p, w as usize + 1).unwrap();
            let bound = max_dropout_bound(&c, 2.0, 2.2).unwrap();
            for c_walk in [1, 5, 9] {
                let below = theorem1_certify(&c, bound * (1.0 - 1e-6), c_walk, &table, &g).unwrap();
                let above = theorem1_certify(&c, bound * (1.0 + 1e-6), c_walk, &table, &g).unwrap();
                assert!(below.certified, "{c} c_walk {c_walk}");
                assert!(!above.certified, "{c} c_walk {c_walk}");
                let step = max_certifiable_h(&c, c_walk, &table, &g).unwrap();
                assert!((step.h - bound).abs() <= 2e-9 * bound);
            }
        }
    }
}

#[test]
fn all_decaying_rows_certify_small_h() {
    for text in ["any:3/5", "row:2/6", "norowmiss:3/4"] {
        let c: Constraint = text.parse().unwrap();
        let g = build_graph(&c).unwrap();
        let w = whrt_core::constraints::max_consecutive_losses(&c) as usize;
        let table = ParameterTable::new(
            (0..=w).map(|k| EmulationParams::new(1.0 + k as f64, 1.0, 1.5 + k as f64, 0.3).unwrap()).collect(),
        )
        .unwrap();
        let cert = theorem1_certify(&c, 1e-4, 7, &table, &g).unwrap();
        assert!(cert.certified, "{text}");
        assert!(cert.walk_sums.histogram.iter().all(|&(s, _)| s < 0.0));
    }
}

#[test]
fn negative_verdicts_carry_witnesses() {
    let (c, g) = any_17_20();
    let mut rows = ParameterTable::reference_example().rows().to_vec();
    rows[0].epsilon = 0.5;
    rows[0].lambda = 2.25;
    let cert = theorem1_certify(&c, 0.1, 20, &ParameterTable::new(rows).unwrap(), &g).unwrap();
    assert!(!cert.certified);
    let Some(Failure::WalkSum { walk, sum }) = cert.failures.first() else {
        panic!("{:?}", cert.failures);
    };
    assert!(*sum >= 0.0);
    assert!((20..=23).contains(&walk.cost));
}

#[test]
fn table_size_must_match() {
    let (c, g) = any_17_20();
    let mut rows = ParameterTable::reference_example().rows().to_vec();
    rows.pop();
    let short = ParameterTable::new(rows).unwrap();
    assert!(matches!(theorem1_certify(&c, 0.1, 20, &short, &g), Err(Error::InvalidInput(_))));
    assert!(matches!(max_certifiable_h(&c, 20, &short, &g), Err(Error::InvalidInput(_))));
}

#[test]
fn reference_rows_feasible_and_low_gain_infeasible() {
    let sys = ScalarPolySystem::example(1.0);
    let grid = GridSpec::default();
    for p in ParameterTable::reference_example().rows() {
        let r = check_assumption2(&sys, p, &grid).unwrap();
        assert!(r.feasible, "{p:?}: {r}");
        assert_eq!(r.points, 250_000);
    }
    let bad = EmulationParams::new(1.0, 2.0, 2.0, 1.5).unwrap();
    let r = check_assumption2(&sys, &bad, &grid).unwrap();
    assert!(!r.feasible);
    let (x, e) = r.v_witness;
    let lhs = sys.v_grad(x) * sys.flow(x, e);
    let rhs = -1.5 * sys.v(x) - sys.h_of(x).powi(2) + e * e;
    assert!(lhs > rhs);
    assert!(r.to_string().contains("not a sum-of-squares certificate"));
}

#[test]
fn gain_two_needs_nonpositive_epsilon() {
    let sys = ScalarPolySystem::example(1.0);
    let grid = GridSpec::default();
    let ok = EmulationParams::new(2.0, 2.0, 1.0, 0.0).unwrap();
    assert!(check_assumption2(&sys, &ok, &grid).unwrap().feasible);
    let too_much = EmulationParams::new(2.0, 2.0, 1.0, 0.01).unwrap();
    assert!(!check_assumption2(&sys, &too_much, &grid).unwrap().feasible);
}

fn small_search_grid() -> SearchGrid {
    SearchGrid {
        gammas: (2..=16).map(|k| 0.5 * k as f64).collect(),
        epsilons: (0..=120).map(|k| -8.0 + 0.1 * k as f64).collect(),
        lambdas: (0..=60).map(|k| 0.001 + 0.05 * k as f64).collect(),
        seeds: ParameterTable::reference_example().rows().to_vec(),
        feasibility: GridSpec { nx: 121, ne: 121, ..GridSpec::default() },
    }
}

#[test]
fn search_does_at_least_as_well_as_reference() {
    let sys = ScalarPolySystem::example(1.0);
    let c = Constraint::any(17, 20).unwrap();
    let out = search_parameters(&sys, &c, 0.195, &small_search_grid()).unwrap();
    let reference = ParameterTable::reference_example();
    assert_eq!(out.rows.len(), 4);
    for (row, p) in out.rows.iter().zip(reference.rows()) {
        let best = row.best.expect("feasible row");
        assert!(row.objective <= p.decay_exponent() + 1e-12, "gap {}", row.gap);
        assert!(row.gap as f64 * 0.195 < t_max(best.gamma, best.lambda).unwrap());
        assert_eq!(best.l, sys.l);
    }
    assert!(out.rows[3].best.unwrap().epsilon < 0.0);
    let table = out.table().unwrap();
    let g = build_graph(&c).unwrap();
    assert!(theorem1_certify(&c, 0.195, 20, &table, &g).unwrap().certified);
}

#[test]
fn search_reports_infeasible_for_huge_h() {
    let sys = ScalarPolySystem::example(1.0);
    let c = Constraint::any(2, 3).unwrap();
    let out = search_parameters(&sys, &c, 50.0, &small_search_grid()).unwrap();
    assert!(out.rows.iter().all(|r| r.best.is_none() && r.objective.is_infinite()));
    assert!(out.table().is_none());
    let mut empty = small_search_grid();
    empty.gammas.clear();
    assert!(matches!(search_parameters(&sys, &c, 0.1, &empty), Err(Error::InvalidInput(_))));
}
