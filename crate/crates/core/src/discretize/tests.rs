use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::geometry::{build_weight, BumpSpec, EndCondition, SurfaceSpec, Truncation};

fn flat(cells: usize) -> (MetricProfile, Grid) {
    let p = build_weight(&SurfaceSpec::flat_cylinder(PI), &Truncation::default()).unwrap();
    let (a, b) = p.chart();
    (p, Grid::uniform(a, b, cells).unwrap())
}

fn bumped() -> MetricProfile {
    let spec = SurfaceSpec::cusp_funnel().with_bump(BumpSpec { center: 2.5, radius: 1.2, amplitude: 0.2 });
    build_weight(&spec, &Truncation::default()).unwrap()
}

#[test]
fn flat_strip_mode_zero() {
    let (p, g) = flat(2000);
    let op = assemble_mode_operator(&p, 0, &g).unwrap();
    assert_eq!(op.multiplicity(), 1);
    let ev = op.symmetrized().eigenvalues_below(30.0, 1e-14);
    assert!((ev[0] - 1.0).abs() < 1e-5);
    for (k, l) in ev.iter().enumerate().take(5) {
        let exact = ((k + 1) * (k + 1)) as f64;
        assert!((l - exact).abs() / exact < 1e-4);
    }
}

#[test]
fn mode_shift_is_exact_for_unit_weight() {
    let (p, g) = flat(500);
    let e0 = assemble_mode_operator(&p, 0, &g).unwrap().symmetrized().eigenvalues_below(200.0, 1e-15);
    let e3 = assemble_mode_operator(&p, 3, &g).unwrap().symmetrized().eigenvalues_below(209.0, 1e-15);
    assert_eq!(e0.len(), e3.len());
    for (a, b) in e0.iter().zip(&e3) {
        assert!((b - a - 9.0).abs() < 1e-10 * b, "{a} {b}");
    }
}

#[test]
fn cusp_refinement_is_second_order() {
    let first = |cells: usize| {
        let g = Grid::uniform(1.0, 40.0, cells).unwrap();
        let w: Vec<f64> = g.nodes().iter().map(|s| 1.0 / (s * s)).collect();
        let op = operator::assemble(&g, &w, 0, EndCondition::Dirichlet, EndCondition::Dirichlet).unwrap();
        op.symmetrized().eigenvalues_below(10.0, 1e-15)[0]
    };
    let (l1, l2, l3) = (first(500), first(1000), first(2000));
    let p = ((l1 - l2) / (l2 - l3)).log2();
    assert!((p - 2.0).abs() < 0.1, "exponent {p}");
}

#[test]
fn flat_cylinder_matches_enumeration() {
    let (p, g) = flat(4000);
    let sys = solve_modes(&p, &g, 10.0).unwrap();
    let mut exact = Vec::new();
    for k in 1..=4i32 {
        for m in -4..=4i32 {
            let l = (k * k + m * m) as f64;
            if l <= 10.0 {
                exact.push(l);
            }
        }
    }
    exact.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let computed = sys.sorted_eigenvalues();
    assert_eq!(computed.len(), exact.len());
    for (c, e) in computed.iter().zip(&exact) {
        assert!((c - e).abs() / e < 1e-5);
    }
    assert!(sys.iter().all(|(_, _, l)| l <= 10.0));
    assert_eq!(sys.mode_cutoff, 4);
}

#[test]
fn symmetrized_and_pencil_routes_agree() {
    let p = bumped();
    let g = Grid::adapted(&p, 800, 0.5).unwrap();
    for m in [0, 1, 5] {
        let op = assemble_mode_operator(&p, m, &g).unwrap();
        let a = op.symmetrized().eigenvalues_below(300.0, 1e-14);
        let b = op.pencil_eigenvalues_below(300.0, 1e-14);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-10 * y, "m={m}: {x} vs {y}");
        }
    }
}

#[test]
fn enlarging_dirichlet_truncation_lowers_eigenvalues() {
    let spec = SurfaceSpec::cusp_funnel().with_bump(BumpSpec { center: 2.5, radius: 1.2, amplitude: 0.2 });
    let big = build_weight(&spec, &Truncation::default()).unwrap();
    let small = build_weight(&spec, &Truncation { funnel_distance: 2.0, ..Truncation::default() }).unwrap();
    let g = Grid::adapted(&big, 800, 0.5).unwrap();
    let (gs, ps) = g.restrict_to(&small).unwrap();
    let a = solve_modes(&big, &g, 200.0).unwrap();
    let b = solve_modes(&ps, &gs, 200.0).unwrap();
    for (ma, mb) in a.modes.iter().zip(&b.modes) {
        assert!(ma.eigenvalues.len() >= mb.eigenvalues.len());
        for (x, y) in ma.eigenvalues.iter().zip(&mb.eigenvalues) {
            assert!(x <= y, "mode {}: {x} > {y}", ma.mode);
        }
    }
}

#[test]
fn eigenvectors_are_mass_orthonormal_with_small_residual() {
    let p = bumped();
    let g = Grid::adapted(&p, 600, 0.5).unwrap();
    let sys = solve_modes_with(&p, &g, &SolveOptions::new(200.0).with_eigenvectors()).unwrap();
    assert!(sys.has_eigenvectors());
    let c = sys.dual_cells();
    let (l, r) = p.conditions();
    for ms in sys.modes.iter().filter(|ms| [0, 1, 3, 10].contains(&ms.mode)) {
        let vecs = ms.eigenvectors.as_ref().unwrap();
        let op = operator::assemble(&g, &sys.weights, ms.mode, l, r).unwrap();
        for i in 0..vecs.len() {
            for j in 0..=i {
                let ip: f64 = (0..c.len()).map(|k| vecs[i][k] * vecs[j][k] * sys.weights[k] * c[k]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-8, "mode {} ({i},{j}): {ip}", ms.mode);
            }
            let u = &vecs[i][op.first_node..op.first_node + op.dim()];
            assert!(op.relative_residual(ms.eigenvalues[i], u) < 1e-9);
        }
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let p = bumped();
    let g = Grid::adapted(&p, 400, 0.5).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| solve_modes(&p, &g, 150.0).unwrap());
    let b = three.install(|| solve_modes(&p, &g, 150.0).unwrap());
    assert_eq!(a, b);
}

#[test]
fn resolution_capacity_is_flagged() {
    let (p, g) = flat(40);
    assert!(matches!(solve_modes(&p, &g, 1e4), Err(Error::ResolutionExceeded { .. })));
    assert!(solve_modes(&p, &g, 0.0).is_err());
    let (_, wrong) = flat(50);
    let moved = Grid::uniform(0.0, 1.0, 50).unwrap();
    assert!(solve_modes(&p, &moved, 10.0).is_err());
    assert!(solve_modes(&p, &wrong, 10.0).is_ok());
}

#[test]
fn csv_export_lists_every_eigenvalue() {
    let (p, g) = flat(200);
    let sys = solve_modes(&p, &g, 10.0).unwrap();
    let mut buf = Vec::new();
    sys.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + sys.iter().count());
    assert!(text.starts_with("m,index,multiplicity,lambda\n0,1,1,"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn spectra_respect_cutoff_and_variational_bound(amp in -0.5f64..0.5, center in 1.9f64..2.9) {
        let spec = SurfaceSpec::cusp_funnel().with_bump(BumpSpec { center, radius: 0.8, amplitude: amp });
        let p = build_weight(&spec, &Truncation::default()).unwrap();
        let g = Grid::adapted(&p, 300, 0.5).unwrap();
        let sys = solve_modes(&p, &g, 80.0).unwrap();
        let wmax = sys.weights.iter().cloned().fold(0.0, f64::max);
        for ms in &sys.modes {
            prop_assert!(ms.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(ms.eigenvalues.iter().all(|&l| l <= 80.0));
            if let Some(&l1) = ms.eigenvalues.first() {
                prop_assert!(l1 >= (ms.mode as f64).powi(2) / wmax);
            }
        }
        prop_assert!((sys.mode_cutoff as f64).powi(2) / wmax > 80.0);
    }
}
