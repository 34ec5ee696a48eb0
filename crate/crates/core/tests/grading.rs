use lagfib::geom::{ChartId, Frame, PhasePoint};
use lagfib::grading::{
    grading_census, h_involution_residual, intersection_index, mod2, phase_distance,
    phase_of_plane, rotated_real_plane, HolomorphicVolume,
};
use lagfib::models::{model_by_name, FibrationModel, ModelParams};
use proptest::prelude::*;

fn model(name: &str) -> FibrationModel {
    model_by_name(name, &ModelParams::default()).unwrap()
}

/// Index of diagonal rotated planes graded by their angle sums: each
/// factor contributes `frac(bⱼ − aⱼ) − (bⱼ − aⱼ)`.
fn diagonal_index_oracle(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| -(y - x).floor()).sum()
}

/// Applies a real rotation by `gamma` in the first two complex coordinates.
fn rotate(frame: &Frame, gamma: f64) -> Frame {
    let (c, s) = (gamma.cos(), gamma.sin());
    let vectors = frame
        .vectors
        .iter()
        .map(|v| {
            let mut w = v.clone();
            for part in 0..2 {
                let (x, y) = (v[part], v[2 + part]);
                w[part] = c * x - s * y;
                w[2 + part] = s * x + c * y;
            }
            w
        })
        .collect();
    Frame {
        base: frame.base.clone(),
        vectors,
    }
}

fn angles(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0f64..2.0, n)
}

fn transverse(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| {
        let d = (y - x).rem_euclid(1.0);
        d > 1e-3 && d < 1.0 - 1e-3
    })
}

#[test]
fn real_and_imaginary_planes() {
    for n in 1..=4 {
        let re = rotated_real_plane(n, &vec![0.0; n]).unwrap();
        let im = rotated_real_plane(n, &vec![0.5; n]).unwrap();
        assert!(phase_distance(re.theta, 0.0, 2.0) < 1e-12);
        assert_eq!(im.theta, n as f64 / 2.0);
        assert!(intersection_index(&re, &im).unwrap().abs() < 1e-9);
    }
}

#[test]
fn logarithmic_form_is_the_toric_default() {
    assert_eq!(
        HolomorphicVolume::for_model(&model("toric_reference")),
        HolomorphicVolume::logarithmic(2)
    );
    assert_eq!(
        HolomorphicVolume::for_model(&model("nodal")),
        HolomorphicVolume::standard(2)
    );
}

#[test]
fn phase_needs_a_complex_chart() {
    let base = PhasePoint::new(ChartId::FocusFocus, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let frame = Frame {
        base,
        vectors: vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]],
    };
    assert!(phase_of_plane(&HolomorphicVolume::standard(2), &frame).is_err());
}

#[test]
fn involution_grading_data_on_the_nodal_model() {
    let m = model("nodal");
    let g = grading_census(&m, &HolomorphicVolume::for_model(&m), 40, 3).unwrap();
    assert!(g.section_samples > 0 && g.fixed_samples > 0);
    // real sections have integer phase; fixed fibres have phase n/2
    assert!(g.section_deviation < 1e-9, "{g:?}");
    assert!(g.fixed_fiber_deviation < 1e-9, "{g:?}");
    assert!(g.shift_deviation < 1e-9, "{g:?}");
    let x = [0.3, -0.4, 0.8, 0.1];
    let sym = m.involution_symmetry();
    assert!(h_involution_residual(sym, &HolomorphicVolume::for_model(&m), &x).unwrap() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mod2_lands_in_range(t in -1e6f64..1e6) {
        let r = mod2(t);
        prop_assert!((0.0..2.0).contains(&r));
        prop_assert!(phase_distance(r, t, 2.0) < 1e-9);
    }

    #[test]
    fn diagonal_index_matches_the_angle_oracle(a in angles(3), b in angles(3)) {
        prop_assume!(transverse(&a, &b));
        let p = rotated_real_plane(3, &a).unwrap();
        let q = rotated_real_plane(3, &b).unwrap();
        let i = intersection_index(&p, &q).unwrap();
        prop_assert!((i - diagonal_index_oracle(&a, &b)).abs() < 1e-9, "{i}");
        prop_assert!((i - i.round()).abs() < 1e-9);
    }

    #[test]
    fn index_duality(n in 1usize..4, a in angles(3), b in angles(3)) {
        let (a, b) = (&a[..n], &b[..n]);
        prop_assume!(transverse(a, b));
        let p = rotated_real_plane(n, a).unwrap();
        let q = rotated_real_plane(n, b).unwrap();
        let d = intersection_index(&p, &q).unwrap() + intersection_index(&q, &p).unwrap();
        prop_assert!((d - n as f64).abs() < 1e-9, "{d}");
    }

    #[test]
    fn index_is_unchanged_by_a_common_rotation(a in angles(2), b in angles(2), gamma in -3.0f64..3.0) {
        prop_assume!(transverse(&a, &b));
        let omega = HolomorphicVolume::standard(2);
        let p = rotated_real_plane(2, &a).unwrap();
        let q = rotated_real_plane(2, &b).unwrap();
        let mut p2 = phase_of_plane(&omega, &rotate(&p.frame, gamma)).unwrap();
        let mut q2 = phase_of_plane(&omega, &rotate(&q.frame, gamma)).unwrap();
        // a real rotation has determinant one, so phases do not move and
        // the lifts carry over
        prop_assert!(phase_distance(p.theta, p2.theta, 2.0) < 1e-9);
        prop_assert!(phase_distance(q.theta, q2.theta, 2.0) < 1e-9);
        p2.theta = p.theta;
        q2.theta = q.theta;
        let i = intersection_index(&p, &q).unwrap();
        let j = intersection_index(&p2, &q2).unwrap();
        prop_assert!((i - j).abs() < 1e-9);
    }
}
