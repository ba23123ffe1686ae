use proptest::prelude::*;
use relspec_core::discretize::{solve_modes, Grid};
use relspec_core::geometry::{build_weight, max_weight_ratio, BumpSpec, EndModel, SurfaceSpec, Truncation};
use relspec_core::oracle::finite_matrix_relative_det;
use relspec_core::spectral::relative_trace_series;
use relspec_core::zeta::{finite_spectra_determinant, ZetaOptions};

fn bumped() -> SurfaceSpec {
    SurfaceSpec::cusp_funnel().with_bump(BumpSpec { center: 2.5, radius: 1.2, amplitude: 0.2 })
}

#[test]
fn zero_surgery_is_the_cusp() {
    let t = Truncation::default();
    let cusp = build_weight(&bumped(), &t).unwrap();
    let cap0 = build_weight(&bumped().with_right(EndModel::filled_cap(0.0)), &t).unwrap();
    let nodes = Grid::adapted(&cusp, 500, 0.5).unwrap().nodes().to_vec();
    assert_eq!(cusp.sample(&nodes), cap0.sample(&nodes));
}

#[test]
fn surgery_never_increases_the_weight() {
    let t = Truncation::default();
    let cusp = build_weight(&bumped(), &t).unwrap();
    let grid = Grid::adapted(&cusp, 500, 0.5).unwrap();
    for eps in [0.05, 0.3, 1.0] {
        let cap = build_weight(&bumped().with_right(EndModel::filled_cap(eps)), &t).unwrap();
        let (g, cap) = grid.restrict_to(&cap).unwrap();
        assert!(max_weight_ratio(&cap, &cusp, g.nodes()) <= 1.0, "eps {eps}");
    }
}

#[test]
fn positive_bump_gives_positive_relative_trace() {
    let t = Truncation::default();
    let pa = build_weight(&bumped(), &t).unwrap();
    let pb = build_weight(&bumped().with_bump(BumpSpec { amplitude: 0.0, ..bumped().bump }), &t).unwrap();
    let grid = Grid::adapted(&pb, 800, 0.5).unwrap();
    let a = solve_modes(&pa, &grid, 300.0).unwrap();
    let b = solve_modes(&pb, &grid, 300.0).unwrap();
    let s = relative_trace_series(&a, &b, &[1.0, 5.0, 20.0]).unwrap();
    // a positive bump enlarges the area, so the relative trace is positive
    assert!(s.values.iter().all(|&v| v > 0.0), "{:?}", s.values);
    let same = relative_trace_series(&a, &a, &[0.1, 1.0]).unwrap();
    assert!(same.values.iter().all(|&v| v == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn pipeline_determinant_matches_products(
        a in prop::collection::vec(0.3f64..10.0, 3..25),
        seed in prop::collection::vec(0.3f64..10.0, 25),
    ) {
        let b = &seed[..a.len()];
        let exact = finite_matrix_relative_det(&a, b).unwrap();
        let r = finite_spectra_determinant(&a, b, &ZetaOptions::default()).unwrap();
        prop_assert!(((r.determinant - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn relative_determinant_is_antisymmetric_in_log(
        a in prop::collection::vec(0.3f64..10.0, 3..15),
        seed in prop::collection::vec(0.3f64..10.0, 15),
    ) {
        let b = &seed[..a.len()];
        let ab = finite_matrix_relative_det(&a, b).unwrap();
        let ba = finite_matrix_relative_det(b, &a).unwrap();
        prop_assert!((ab * ba - 1.0).abs() < 1e-12);
    }
}
