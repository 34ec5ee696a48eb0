use lagfib::geom::identity_map;
use lagfib::models::{model_by_name, FibrationModel, ModelParams};
use lagfib::verify::checks::dist_periodic;
use lagfib::verify::{
    fiber_fixed_count, fixed_locus_census, flow_fidelity, verify_fiber_preserving,
    verify_involution, verify_pullback, CensusOptions, FixedCountOptions, SampleCloud,
};
use proptest::prelude::*;

fn model(name: &str) -> FibrationModel {
    model_by_name(name, &ModelParams::default()).unwrap()
}

#[test]
fn clouds_are_reproducible_from_the_seed() {
    let m = model("positive_proper");
    let a = SampleCloud::regular(&m, 50, 9, 1e-4, 1e-3).unwrap();
    let b = SampleCloud::regular(&m, 50, 9, 1e-4, 1e-3).unwrap();
    let c = SampleCloud::regular(&m, 50, 10, 1e-4, 1e-3).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.points, c.points);
}

#[test]
fn conjugation_passes_the_triple_check_exactly() {
    let m = model("nodal");
    let cloud = SampleCloud::regular(&m, 300, 1, 1e-4, 1e-3).unwrap();
    let phi = |x: &lagfib::geom::PhasePoint| m.involution(x);
    assert_eq!(verify_fiber_preserving(&m, phi, &cloud).unwrap().max, 0.0);
    assert_eq!(
        verify_involution(phi, &cloud, &m.periodic).unwrap().max,
        0.0
    );
    let r = verify_pullback(&m.involution_symmetry().map, &cloud, -1.0).unwrap();
    assert!(r.within(1e-12), "{}", r.max);
}

#[test]
fn identity_is_caught_by_the_anti_symplectic_check() {
    let m = model("harvey_lawson");
    let cloud = SampleCloud::regular(&m, 50, 2, 1e-4, 1e-3).unwrap();
    let r = verify_pullback(&identity_map(m.ambient_dim()), &cloud, -1.0).unwrap();
    assert!(r.max > 1.0);
}

#[test]
fn nodal_fibres_carry_four_fixed_points() {
    let m = model("nodal");
    let sym = m.involution_symmetry();
    for b in [[0.6, -0.3], [-1.2, 0.8]] {
        let fc = fiber_fixed_count(&m, sym, &b, FixedCountOptions::default()).unwrap();
        assert_eq!(fc.count, 4, "{b:?}: {:?}", fc.points);
        for p in &fc.points {
            let x = m.point(p.clone()).unwrap();
            let y = m.involution(&x).unwrap();
            assert!(p.iter().zip(&y.coords).all(|(u, v)| (u - v).abs() < 1e-9));
            let fb = m.eval(&x).unwrap();
            assert!(fb.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-9));
        }
    }
}

#[test]
fn focus_focus_flows_match_their_closed_forms() {
    let m = model("ff_nonproper");
    let starts = vec![vec![0.5, 0.2, -0.3, 0.4], vec![1.1, -0.6, 0.2, 0.9]];
    let fid = flow_fidelity(&m, &starts, &[-2.0, -0.5, 1.0, 2.0]).unwrap();
    assert!(fid.g1_error <= 1e-8 && fid.g2_error <= 1e-8, "{fid:?}");
    assert!(fid.energy_drift <= 1e-10, "{fid:?}");
}

#[test]
fn nodal_census_finds_three_components_and_two_sections() {
    let m = model("nodal");
    let opts = CensusOptions {
        n_samples: 40_000,
        seed: 5,
        ..Default::default()
    };
    let r = fixed_locus_census(&m, m.involution_symmetry(), &m.region, &opts).unwrap();
    assert_eq!(
        r.component_count,
        3,
        "{:?}",
        r.components
            .iter()
            .map(|c| c.sample_count)
            .collect::<Vec<_>>()
    );
    assert_eq!(r.section_count(), 2);
}

proptest! {
    #[test]
    fn periodic_distance_ignores_whole_turns(a in -10.0f64..10.0, k in -4i32..4, d in -0.1f64..0.1) {
        let p = std::f64::consts::TAU;
        let x = [0.0, a];
        let y = [0.0, a + k as f64 * p + d];
        prop_assert!((dist_periodic(&x, &y, &[(1, p)]) - d.abs()).abs() < 1e-9);
        prop_assert!(dist_periodic(&x, &y, &[]) >= d.abs() - 1e-12);
    }
}
