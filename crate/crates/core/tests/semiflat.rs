use lagfib::models::{model_by_name, ModelParams};
use lagfib::semiflat::{
    build_theta, iota_h, lattice_mismatch, lattice_probe, minus_id, nodal_period_oracle, reduce,
    section_translation, theta_negation, translate, FiberPoint, LatticeOptions, OneForm,
    Polynomial, SemiflatChart, Term, Turn,
};
use lagfib::GeomError;
use proptest::prelude::*;

fn potential() -> Polynomial {
    Polynomial {
        terms: vec![
            Term {
                coeff: 0.5,
                powers: vec![2, 0],
            },
            Term {
                coeff: -0.25,
                powers: vec![1, 1],
            },
            Term {
                coeff: 0.1,
                powers: vec![0, 3],
            },
        ],
    }
}

fn nodal_base() -> impl Strategy<Value = Vec<f64>> {
    (0.05f64..0.9, -3.1f64..3.1).prop_map(|(r, a)| vec![r * a.cos(), r * a.sin()])
}

#[test]
fn charts_parse_from_json_and_reject_wrong_dimensions() {
    let c = SemiflatChart::from_json(r#"{"name":"t","n":2,"periods":"torus"}"#).unwrap();
    assert_eq!(
        c,
        SemiflatChart {
            name: "t".into(),
            ..SemiflatChart::torus(2)
        }
    );
    assert!(matches!(
        SemiflatChart::from_json(r#"{"name":"bad","n":3,"periods":"nodal"}"#),
        Err(GeomError::Config(_))
    ));
}

#[test]
fn nodal_periods_are_closed() {
    let chart = SemiflatChart::nodal(potential());
    for b in [[0.3, 0.2], [-0.5, 0.1], [0.1, -0.7]] {
        for i in 0..2 {
            assert!(chart.period_curl(i, &b).abs() < 1e-6);
        }
        assert!(chart.period_matrix(&b).unwrap().determinant().abs() > 1e-3);
    }
}

#[test]
fn non_closed_translations_are_refused() {
    let chart = SemiflatChart::torus(2);
    let p = FiberPoint::new(&chart, &[0.1, 0.2], &[0.3, 0.4]).unwrap();
    let twist = OneForm::new("twist", |b: &[f64]| vec![-b[1], b[0]]);
    assert!(matches!(
        section_translation(&chart, &twist, &p),
        Err(GeomError::NotClosed { .. })
    ));
    let exact = OneForm::exact(potential());
    assert!(section_translation(&chart, &exact, &p).is_ok());
}

#[test]
fn probed_lattice_matches_the_quadrature_periods() {
    let m = model_by_name("nodal", &ModelParams::default()).unwrap();
    let sigma = m.section("s_plus").unwrap();
    let b = [0.3, 0.2];
    let probed = lattice_probe(&m, sigma, &b, LatticeOptions::default()).unwrap();
    let oracle = nodal_period_oracle(&b).unwrap();
    assert!(lattice_mismatch(&probed, &oracle) < 1e-6);

    // the conjugation is Θ ∘ (−id) ∘ Θ⁻¹ on this fibre
    for xi in [[0.7, -1.2], [2.1, 0.4], [-1.5, 2.5]] {
        let x = build_theta(&m, sigma, &b, &xi).unwrap();
        let y = theta_negation(&m, sigma, &x.coords, &probed).unwrap();
        let c = m.involution(&x).unwrap();
        let gap = y
            .coords
            .iter()
            .zip(&c.coords)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-5, "{xi:?}: {gap}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn turns_form_an_exact_group(x in -5.0f64..5.0, y in -5.0f64..5.0) {
        let (a, b) = (Turn::from_f64(x), Turn::from_f64(y));
        prop_assert_eq!(a + b - b, a);
        prop_assert_eq!(-(-a), a);
        prop_assert_eq!(Turn::from_f64(-x), -a);
        prop_assert_eq!((a + -a).value(), 0.0);
        let v = a.value();
        prop_assert!((0.0..1.0).contains(&v));
        let d = (v - x.rem_euclid(1.0)).abs();
        prop_assert!(d.min(1.0 - d) < 1e-12);
    }

    #[test]
    fn negation_and_reflection_are_exact_involutions(b in nodal_base(), alpha in proptest::collection::vec(-4.0f64..4.0, 2)) {
        let chart = SemiflatChart::nodal(potential());
        let p = FiberPoint::new(&chart, &b, &alpha).unwrap();
        prop_assert_eq!(&minus_id(&chart, &minus_id(&chart, &p).unwrap()).unwrap().turns, &p.turns);
        prop_assert_eq!(&iota_h(&chart, &iota_h(&chart, &p).unwrap()).unwrap().turns, &p.turns);
    }

    #[test]
    fn periods_reduce_to_zero(b in nodal_base(), k in -3i32..3, l in -3i32..3) {
        let chart = SemiflatChart::nodal(potential());
        let (l1, l2) = (chart.period(0, &b), chart.period(1, &b));
        let v: Vec<f64> = (0..2).map(|i| k as f64 * l1[i] + l as f64 * l2[i]).collect();
        let r = reduce(&chart, &b, &v).unwrap();
        prop_assert!(r.iter().all(|c| c.min(1.0 - c) < 1e-9), "{r:?}");
    }

    #[test]
    fn translations_commute_with_negation_up_to_sign(b in nodal_base(), alpha in proptest::collection::vec(-4.0f64..4.0, 2), c in -1.0f64..1.0) {
        // −id ∘ T_η = T_{−η} ∘ −id, exactly on the turn grid
        let chart = SemiflatChart::nodal(Polynomial::zero());
        let eta = OneForm::constant(vec![c, 0.5 * c]);
        let p = FiberPoint::new(&chart, &b, &alpha).unwrap();
        let lhs = minus_id(&chart, &translate(&chart, &eta, &p).unwrap()).unwrap();
        let rhs = translate(&chart, &eta.scaled(-1.0), &minus_id(&chart, &p).unwrap()).unwrap();
        prop_assert_eq!(lhs.turns, rhs.turns);
    }

    #[test]
    fn polynomial_gradient_matches_differences(b in proptest::collection::vec(-2.0f64..2.0, 2)) {
        let h = potential();
        let g = h.gradient(&b);
        for i in 0..2 {
            let mut p = b.clone();
            let mut m = b.clone();
            p[i] += 1e-5;
            m[i] -= 1e-5;
            let fd = (h.value(&p) - h.value(&m)) / 2e-5;
            prop_assert!((fd - g[i]).abs() < 1e-7);
        }
    }
}
