//! Acceptance suite: closed-form oracles, identity checks, and property
//! sweeps, one test per criterion. Each test prints a PASS line with the
//! measured worst case once its assertions hold.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use qgraph::{
    brute_force_transmission, counting_function, enumerate_orbits, find_spectrum, orbit_sum,
    secular_determinant, solve_families, specht_bound, star_s3_secular_oracle,
    star_transmission_oracle, trace_power, vertex_bc_residual, Convention, DiscreteGraph, Error,
    GeneralCondition, Leads, MetricGraph, ScanConfig, VertexCondition,
};
use qgraph::evolution::evolution_map;
use qgraph::similarity::{specht_check, SpechtOptions, Verdict};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn interval(len: f64) -> MetricGraph {
    let g = DiscreteGraph::new(2, &[(0, 1)]).unwrap();
    MetricGraph::closed(g, vec![len]).unwrap()
}

/// Star with `leaves` leaves: center 0, leaves 1..=leaves.
fn star(lengths: &[f64], leads: Option<Leads>) -> MetricGraph {
    let n = lengths.len() + 1;
    let edges: Vec<(usize, usize)> = (1..n).map(|j| (0, j)).collect();
    let g = DiscreteGraph::new(n, &edges).unwrap();
    MetricGraph::new(g, lengths.to_vec(), leads).unwrap()
}

fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let m = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
        c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    m.qr().q()
}

fn general_from_unitary(n: usize, k_ref: f64, rng: &mut ChaCha8Rng) -> VertexCondition {
    VertexCondition::General(GeneralCondition::from_unitary(&random_unitary(n, rng), k_ref).unwrap())
}

/// Criterion 1: Dirichlet interval roots sit at n pi, n = 1..10, within
/// 1e-8, validated against the closed form zeta = 1 - e^{2ikl}.
#[test]
fn criterion_01_interval_spectrum_oracle() {
    let g = interval(1.0);
    let bcs = vec![VertexCondition::Dirichlet; 2];
    let mut cfg = ScanConfig::new(0.1, 33.0, 3000).unwrap();
    cfg.refine_tolerance = 1e-12;
    let points = find_spectrum(&g, &bcs, &cfg).unwrap();
    assert_eq!(points.len(), 10, "expected 10 roots below 33.0");
    let mut worst = 0.0f64;
    for (n, p) in points.iter().enumerate() {
        let expect = (n + 1) as f64 * PI;
        let err = (p.k - expect).abs();
        worst = worst.max(err);
        assert!(err < 1e-8, "root {} vs {expect} (err {err:.2e})", p.k);
        assert_eq!(p.multiplicity, 1);
        // Independent oracle: the hand-derived determinant at the root.
        let zeta = c(1.0, 0.0) - c(0.0, 2.0 * p.k).exp();
        assert!(zeta.norm() < 1e-7);
    }
    println!("ACCEPTANCE 01 interval spectrum oracle: PASS (worst |k - n pi| = {worst:.2e})");
}

/// Criterion 2: the secular determinants of both factor orderings agree
/// pointwise on 1000-point grids for random stars and cyclic graphs.
#[test]
fn criterion_02_secular_determinant_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let mut cases: Vec<(MetricGraph, Vec<VertexCondition>)> = Vec::new();
    for leaves in [2usize, 3, 4] {
        let lengths: Vec<f64> = (0..leaves).map(|_| 0.6 + rng.gen::<f64>()).collect();
        let g = star(&lengths, None);
        let mut bcs = vec![VertexCondition::Kirchhoff];
        for i in 0..leaves {
            bcs.push(match i % 3 {
                0 => VertexCondition::Neumann,
                1 => VertexCondition::Dirichlet,
                _ => general_from_unitary(1, 1.3, &mut rng),
            });
        }
        cases.push((g, bcs));
    }
    let triangle = DiscreteGraph::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
    cases.push((
        MetricGraph::closed(triangle, vec![1.0, 0.8, 1.3]).unwrap(),
        vec![
            VertexCondition::Kirchhoff,
            general_from_unitary(2, 0.9, &mut rng),
            VertexCondition::Kirchhoff,
        ],
    ));
    let square = DiscreteGraph::new(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
    cases.push((
        MetricGraph::closed(square, vec![1.0, 0.7, 1.2, 0.9]).unwrap(),
        vec![VertexCondition::Kirchhoff; 4],
    ));

    let mut worst = 0.0f64;
    for (g, bcs) in &cases {
        for i in 0..1000 {
            let k = 0.2 + 19.8 * i as f64 / 999.0;
            let zs = secular_determinant(g, bcs, k, Convention::SchrodingerOrder).unwrap();
            let zg = secular_determinant(g, bcs, k, Convention::GreensOrder).unwrap();
            let rel = (zs - zg).norm() / (1.0 + zs.norm());
            worst = worst.max(rel);
            assert!(rel < 1e-10, "k = {k}: {zs} vs {zg}");
        }
    }
    println!("ACCEPTANCE 02 secular determinant identity: PASS (worst rel diff = {worst:.2e})");
}

/// Criterion 3: det(1 - U^G) on the closed S_3 equals the three-orbit
/// closed form to 1e-12, for the named kinds and random general conditions.
#[test]
fn criterion_03_star_closed_form() {
    let g = star(&[1.0, 0.8], None);
    let mut suites: Vec<Vec<VertexCondition>> = vec![
        vec![VertexCondition::Dirichlet; 3],
        vec![VertexCondition::Neumann; 3],
        vec![VertexCondition::Kirchhoff; 3],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    for _ in 0..5 {
        suites.push(vec![
            general_from_unitary(2, 1.1, &mut rng),
            general_from_unitary(1, 1.1, &mut rng),
            general_from_unitary(1, 1.1, &mut rng),
        ]);
    }
    let mut worst = 0.0f64;
    for bcs in &suites {
        for i in 0..500 {
            let k = 0.15 + 14.0 * i as f64 / 499.0;
            let det = secular_determinant(&g, bcs, k, Convention::GreensOrder).unwrap();
            let oracle = star_s3_secular_oracle(&g, bcs, k).unwrap();
            let rel = (det - oracle).norm() / (1.0 + det.norm());
            worst = worst.max(rel);
            assert!(rel < 1e-12, "k = {k}: {det} vs {oracle}");
        }
    }
    println!("ACCEPTANCE 03 S_3 closed form: PASS (worst rel diff = {worst:.2e})");
}

/// Criterion 4: the family-system transmission equals the star closed form
/// to 1e-10 relative on stars with 2..4 leaves over 500 k-points.
#[test]
fn criterion_04_greens_function_oracle() {
    let mut worst = 0.0f64;
    for lengths in [
        vec![1.0, 0.8],
        vec![1.0, 0.8, 1.3],
        vec![0.7, 1.0, 1.1, 0.9],
    ] {
        let n = lengths.len() + 1;
        let g = star(
            &lengths,
            Some(Leads {
                entrance: 0,
                exit: n - 1,
            }),
        );
        let mut bcs = vec![VertexCondition::Neumann; n];
        bcs[0] = VertexCondition::Kirchhoff;
        bcs[n - 1] = VertexCondition::Kirchhoff;
        for i in 0..500 {
            let k = 0.2 + 12.0 * i as f64 / 499.0;
            let system = solve_families(&g, &bcs, k).unwrap().t;
            let oracle = star_transmission_oracle(&g, &bcs, k).unwrap();
            let rel = (system - oracle).norm() / (1.0 + system.norm());
            worst = worst.max(rel);
            assert!(rel < 1e-10, "leaves = {}, k = {k}", lengths.len());
        }
    }
    println!("ACCEPTANCE 04 Green's-function star oracle: PASS (worst rel diff = {worst:.2e})");
}

/// Random connected two-lead graph with up to `max_n` vertices.
fn random_open_graph(rng: &mut ChaCha8Rng, max_n: usize) -> (MetricGraph, Vec<VertexCondition>) {
    let n = 2 + rng.gen_range(0..=(max_n - 2));
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for v in 1..n {
        let parent = rng.gen_range(0..v);
        edges.push((parent, v));
    }
    for _ in 0..rng.gen_range(0..n) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            let e = (a.min(b), a.max(b));
            if !edges.contains(&e) {
                edges.push(e);
            }
        }
    }
    let topo = DiscreteGraph::new(n, &edges).unwrap();
    let lengths: Vec<f64> = (0..topo.edge_count()).map(|_| 0.5 + rng.gen::<f64>()).collect();
    let entrance = rng.gen_range(0..n);
    let exit = (entrance + 1 + rng.gen_range(0..n - 1)) % n;
    let graph = MetricGraph::new(topo, lengths, Some(Leads { entrance, exit })).unwrap();

    let mut bcs = Vec::with_capacity(n);
    for v in 0..n {
        let degree = graph.topology().degree(v)
            + usize::from(v == entrance || v == exit);
        bcs.push(match rng.gen_range(0..4) {
            0 => VertexCondition::Kirchhoff,
            1 => VertexCondition::Neumann,
            2 => VertexCondition::Dirichlet,
            _ => general_from_unitary(degree, 0.5 + rng.gen::<f64>() * 5.0, rng),
        });
    }
    (graph, bcs)
}

/// Criterion 5: |T|^2 + |R|^2 = 1 within 1e-8 on 20 random two-lead graphs
/// times 100 wavenumbers.
#[test]
fn criterion_05_flux_conservation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let mut worst = 0.0f64;
    for graph_idx in 0..20 {
        let (g, bcs) = random_open_graph(&mut rng, 6);
        for point in 0..100 {
            let mut k = 0.3 + rng.gen::<f64>() * 11.0;
            // An isolated perfect resonance can make the system singular;
            // a small perturbation moves off it.
            let result = loop {
                match solve_families(&g, &bcs, k) {
                    Ok(res) => break res,
                    Err(Error::SingularSystem { .. }) => k += 1e-6,
                    Err(other) => panic!("graph {graph_idx}, point {point}: {other}"),
                }
            };
            let err = (result.flux() - 1.0).abs();
            worst = worst.max(err);
            assert!(err < 1e-8, "graph {graph_idx}, k = {k}: flux {}", result.flux());
        }
    }
    println!("ACCEPTANCE 05 flux conservation: PASS (worst |flux - 1| = {worst:.2e})");
}

/// Criterion 6: the truncated path sum converges monotonically to the
/// family-system amplitude on the two-mirror interval, reaching 1e-6
/// relative error by cutoff 60 l.
#[test]
fn criterion_06_path_sum_convergence() {
    let topo = DiscreteGraph::new(2, &[(0, 1)]).unwrap();
    let g = MetricGraph::new(topo, vec![1.0], Some(Leads { entrance: 0, exit: 1 })).unwrap();
    let k = 1.7;
    let theta = 0.8f64; // interior reflection cos(theta) ~ 0.7 per mirror
    let mirror = DMatrix::<Complex64>::from_row_slice(
        2,
        2,
        &[
            c(theta.cos(), 0.0),
            c(0.0, theta.sin()),
            c(0.0, theta.sin()),
            c(theta.cos(), 0.0),
        ],
    );
    let bc = VertexCondition::General(GeneralCondition::from_unitary(&mirror, k).unwrap());
    let bcs = vec![bc.clone(), bc];
    let exact = solve_families(&g, &bcs, k).unwrap().t;

    let mut last_err = f64::INFINITY;
    let mut final_rel = f64::NAN;
    for cutoff in (1..=60).step_by(2) {
        let brute = brute_force_transmission(&g, &bcs, k, cutoff as f64).unwrap();
        assert!(!brute.truncated);
        let err = (brute.amplitude - exact).norm();
        assert!(
            err <= last_err + 1e-14,
            "cutoff {cutoff}: error {err:.3e} rose above {last_err:.3e}"
        );
        last_err = err;
        final_rel = err / exact.norm();
    }
    assert!(final_rel < 1e-6, "relative error {final_rel:.3e} at cutoff 60 l");
    println!("ACCEPTANCE 06 path-sum convergence: PASS (rel error {final_rel:.2e} at cutoff 60)");
}

/// Criterion 7: the two evolution maps are unitarily similar on stars with
/// 1..4 leaves, 20 random (lengths, k) draws each: word-trace verdict
/// "similar" and eigenvalue residual < 1e-10 in every draw.
#[test]
fn criterion_07_unitary_equivalence_specht() {
    let mut rng = ChaCha8Rng::seed_from_u64(1007);
    let mut worst_eigen = 0.0f64;
    for leaves in 1..=4usize {
        let dim = 2 * leaves;
        // Full theoretical bound where the word set stays small; truncated
        // (still paired with the eigenvalue check) above that.
        let cap = if dim <= 4 { None } else { Some(12) };
        for draw in 0..20 {
            let lengths: Vec<f64> = (0..leaves).map(|_| 0.5 + rng.gen::<f64>()).collect();
            let g = star(&lengths, None);
            let bcs = vec![VertexCondition::Kirchhoff; leaves + 1];
            let k = 0.4 + rng.gen::<f64>() * 9.0;
            let us = evolution_map(&g, &bcs, k, Convention::SchrodingerOrder).unwrap();
            let ug = evolution_map(&g, &bcs, k, Convention::GreensOrder).unwrap();
            let opts = SpechtOptions {
                max_length: cap,
                ..Default::default()
            };
            let report = specht_check(&us.matrix, &ug.matrix, &opts).unwrap();
            assert_eq!(
                report.verdict,
                Verdict::Similar,
                "leaves = {leaves}, draw = {draw}: max trace diff {:.3e}",
                report.max_trace_difference
            );
            assert!(
                report.eigen.residual < 1e-10,
                "leaves = {leaves}, draw = {draw}: eigen residual {:.3e}",
                report.eigen.residual
            );
            if dim <= 4 {
                assert!(report.exhaustive);
                assert!(report.max_length_used == specht_bound(dim).unwrap().floor() as usize);
            }
            worst_eigen = worst_eigen.max(report.eigen.residual);
        }
    }
    println!(
        "ACCEPTANCE 07 unitary equivalence (Specht + eigenvalues): PASS \
         (worst eigen residual = {worst_eigen:.2e})"
    );
}

/// Criterion 8: orbit sums reproduce tr U^nu to 1e-10 for nu <= 8, and odd
/// traces vanish exactly on stars.
#[test]
fn criterion_08_trace_orbit_oracle() {
    let k = 0.9;
    let mut rng = ChaCha8Rng::seed_from_u64(1008);
    let star3 = star(&[1.0, 0.8], None);
    let star4 = star(&[1.0, 0.7, 1.3], None);
    let triangle = {
        let topo = DiscreteGraph::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        MetricGraph::closed(topo, vec![1.0, 0.8, 1.3]).unwrap()
    };
    let cases: Vec<(&MetricGraph, Vec<VertexCondition>)> = vec![
        (
            &star3,
            vec![
                general_from_unitary(2, k, &mut rng),
                VertexCondition::Neumann,
                VertexCondition::Dirichlet,
            ],
        ),
        (
            &star4,
            vec![
                VertexCondition::Kirchhoff,
                VertexCondition::Neumann,
                VertexCondition::Dirichlet,
                VertexCondition::Neumann,
            ],
        ),
        (&triangle, vec![VertexCondition::Kirchhoff; 3]),
    ];
    let mut worst = 0.0f64;
    for (g, bcs) in &cases {
        for nu in 1..=8 {
            let orbits = enumerate_orbits(g, bcs, k, nu).unwrap();
            let from_orbits = orbit_sum(&orbits, k);
            let from_matrix = trace_power(g, bcs, k, nu).unwrap();
            let err = (from_orbits - from_matrix).norm();
            worst = worst.max(err);
            assert!(err < 1e-10, "nu = {nu}: {from_orbits} vs {from_matrix}");
        }
    }
    for g in [&star3, &star4] {
        let bcs = vec![VertexCondition::Kirchhoff; g.vertex_count()];
        for nu in [1usize, 3, 5, 7] {
            let tr = trace_power(g, &bcs, k, nu).unwrap();
            assert_eq!(tr.re, 0.0, "tr U^{nu} real part");
            assert_eq!(tr.im, 0.0, "tr U^{nu} imaginary part");
        }
    }
    println!("ACCEPTANCE 08 trace/orbit oracle: PASS (worst orbit-sum error = {worst:.2e})");
}

/// Criterion 9: the truncated counting function tracks the computed
/// staircase within 0.15 at midpoints (the smooth term counts the k = 0
/// constant mode of Neumann-class graphs, so the staircase carries a +1),
/// and the smooth slope is L / 2 pi to 1e-12.
#[test]
fn criterion_09_trace_formula_counting() {
    let nu_max = 200;
    let cases: Vec<(MetricGraph, Vec<VertexCondition>, &str)> = vec![
        (
            interval(1.0),
            vec![VertexCondition::Neumann; 2],
            "Neumann interval",
        ),
        (
            star(&[1.0, 1.0], None),
            vec![
                VertexCondition::Kirchhoff,
                VertexCondition::Neumann,
                VertexCondition::Neumann,
            ],
            "equilateral star",
        ),
    ];
    let mut worst = 0.0f64;
    for (g, bcs, name) in &cases {
        let cfg = ScanConfig::new(0.05, 14.0, 1200).unwrap();
        let points = find_spectrum(g, bcs, &cfg).unwrap();
        assert!(points.len() >= 4, "{name}: too few roots");
        // Midpoints between consecutive roots, plus one below the first.
        let mut mids = vec![0.5 * (cfg.k_min + points[0].k)];
        for w in points.windows(2) {
            mids.push(0.5 * (w[0].k + w[1].k));
        }
        let staircase = |k: f64| -> f64 {
            // +1: the smooth term counts the constant zero mode.
            1.0 + points
                .iter()
                .take_while(|p| p.k <= k)
                .map(|p| p.multiplicity as f64)
                .sum::<f64>()
        };
        let sf = counting_function(g, bcs, &mids, nu_max).unwrap();
        for (i, &mid) in mids.iter().enumerate() {
            let err = (sf.n_total[i] - staircase(mid)).abs();
            worst = worst.max(err);
            assert!(err < 0.15, "{name}: N({mid}) = {} vs {}", sf.n_total[i], staircase(mid));
        }
        let slope = (sf.n_smooth[mids.len() - 1] - sf.n_smooth[0])
            / (mids[mids.len() - 1] - mids[0]);
        assert!(
            (slope - sf.total_length / (2.0 * PI)).abs() < 1e-12,
            "{name}: smooth slope"
        );
    }
    println!("ACCEPTANCE 09 trace-formula counting: PASS (worst midpoint error = {worst:.3})");
}

/// Criterion 10: recovered wave amplitudes a = S p satisfy the vertex
/// conditions to 1e-6 at every computed root of the mini-suite.
#[test]
fn criterion_10_wavefunction_recovery() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let cases: Vec<(MetricGraph, Vec<VertexCondition>, &str)> = vec![
        (
            interval(1.0),
            vec![VertexCondition::Dirichlet; 2],
            "Dirichlet interval",
        ),
        (
            interval(1.0),
            vec![VertexCondition::Neumann; 2],
            "Neumann interval",
        ),
        (
            star(&[1.0, 1.0, 1.0], None),
            vec![
                VertexCondition::Kirchhoff,
                VertexCondition::Dirichlet,
                VertexCondition::Dirichlet,
                VertexCondition::Dirichlet,
            ],
            "equilateral star, degenerate roots",
        ),
        (
            star(&[1.0, 0.7, 1.3], None),
            vec![
                general_from_unitary(3, 2.0, &mut rng),
                VertexCondition::Neumann,
                VertexCondition::Dirichlet,
                general_from_unitary(1, 2.0, &mut rng),
            ],
            "random star, general conditions",
        ),
    ];
    let mut worst = 0.0f64;
    let mut total_roots = 0usize;
    for (g, bcs, name) in &cases {
        let cfg = ScanConfig::new(0.1, 12.0, 1000).unwrap();
        let points = find_spectrum(g, bcs, &cfg).unwrap();
        assert!(!points.is_empty(), "{name}: no roots found");
        for point in &points {
            total_roots += 1;
            for a in &point.a_vectors {
                let residual = vertex_bc_residual(g, bcs, point.k, a).unwrap();
                worst = worst.max(residual);
                assert!(
                    residual < 1e-6,
                    "{name}: residual {residual:.3e} at k = {}",
                    point.k
                );
            }
        }
    }
    println!(
        "ACCEPTANCE 10 wavefunction recovery: PASS \
         ({total_roots} roots, worst vertex residual = {worst:.2e})"
    );
}
