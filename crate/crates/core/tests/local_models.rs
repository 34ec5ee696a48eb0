use lagfib::geom::pullback_residual;
use lagfib::models::focus_focus::{from_point, q, scale, to_point};
use lagfib::models::thin_leg::{
    phi_h, phi_h_inverse, phi_h_one_leg_exact, psi, psi_inverse, ThinLegParams,
};
use lagfib::models::{
    catalog, model_by_name, FibrationModel, GroupElement, ModelParams, SymmetryKind, MODEL_NAMES,
};
use lagfib::GeomError;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(name: &str) -> FibrationModel {
    model_by_name(name, &ModelParams::default()).unwrap()
}

fn base_samples(m: &FibrationModel, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            m.base_region
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo..hi))
                .collect()
        })
        .collect()
}

#[test]
fn catalog_resolves_every_name() {
    let all = catalog();
    assert_eq!(all.len(), MODEL_NAMES.len());
    for (m, name) in all.iter().zip(MODEL_NAMES) {
        assert_eq!(m.name, name);
        assert_eq!(m.ambient_dim(), 2 * m.base_dim);
        assert_eq!(m.region.len(), m.ambient_dim());
        assert!(
            m.symmetries.iter().any(|s| s.involution),
            "{name} has no involution"
        );
    }
    assert!(matches!(
        model_by_name("klein_bottle", &ModelParams::default()),
        Err(GeomError::UnknownModel(_))
    ));
}

#[test]
fn sections_land_in_their_fibres() {
    for m in catalog().iter().filter(|m| !m.flow_built) {
        for sigma in &m.sections {
            let mut tested = 0;
            for b in base_samples(m, 200, 3) {
                if !sigma.in_domain(&b) {
                    continue;
                }
                let x = sigma.eval(&b).unwrap();
                let fb = m.fibration.eval(&x).unwrap();
                let err = fb
                    .iter()
                    .zip(&b)
                    .map(|(p, q)| (p - q).abs())
                    .fold(0.0, f64::max);
                assert!(err < 1e-10, "{}/{} at {b:?}: {err}", m.name, sigma.name);
                tested += 1;
            }
            assert!(tested > 20, "{}/{} domain too thin", m.name, sigma.name);
        }
    }
}

#[test]
fn declared_symmetry_kinds_match_the_pullback_sign() {
    for m in catalog()
        .iter()
        .filter(|m| !m.flow_built && m.name != "toric_reference")
    {
        let s = m.chart.symplectic();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for sym in &m.symmetries {
            let mut checked = 0;
            while checked < 20 {
                let x: Vec<f64> = m
                    .region
                    .iter()
                    .map(|&(lo, hi)| rng.random_range(lo..hi))
                    .collect();
                if !m.in_domain(&x) {
                    continue;
                }
                let r = pullback_residual(&s, &sym.map, &x, sym.kind.sign()).unwrap();
                assert!(r < 1e-9, "{}/{}: {r}", m.name, sym.name);
                checked += 1;
            }
        }
    }
}

#[test]
fn nodal_cstar_action_preserves_fibres() {
    let m = model("nodal");
    let x = m.point(vec![0.4, 0.2, -0.5, 0.3]).unwrap();
    let g = GroupElement::cstar(Complex64::from_polar(1.3, 0.7)).unwrap();
    let y = m.group_action(&g, &x).unwrap();
    let (b, c) = (m.eval(&x).unwrap(), m.eval(&y).unwrap());
    // the |τ| part is a midpoint flow
    assert!(
        b.iter().zip(&c).all(|(p, q)| (p - q).abs() < 1e-6),
        "{b:?} {c:?}"
    );
    assert!(matches!(
        m.group_action(&GroupElement::r_t2(0.1, 0.2, 0.3), &x),
        Err(GeomError::KindMismatch { .. })
    ));
}

#[test]
fn positive_torus_action_has_period_one() {
    let m = model("positive_proper");
    let x = m.point(vec![0.3, -0.1, 0.5, 0.2, -0.4, 0.6]).unwrap();
    let y = m
        .group_action(&GroupElement::r_t2(0.0, 1.0, 1.0), &x)
        .unwrap();
    assert!(x
        .coords
        .iter()
        .zip(&y.coords)
        .all(|(p, q)| (p - q).abs() < 1e-12));
    let z = m
        .group_action(&GroupElement::r_t2(0.0, 0.5, 0.0), &x)
        .unwrap();
    assert!(x
        .coords
        .iter()
        .zip(&z.coords)
        .any(|(p, q)| (p - q).abs() > 1e-3));
}

#[test]
fn thin_leg_involution_is_flow_built_and_anti_symplectic() {
    let m = model("negative_thin");
    assert!(m.flow_built);
    let sym = m.involution_symmetry();
    assert_eq!(sym.kind, SymmetryKind::AntiSymplectic);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn focus_focus_scaling_keeps_the_quadratic(
        r in 0.2f64..3.0, a in -3.0f64..3.0,
        z in proptest::collection::vec(-2.0f64..2.0, 4),
    ) {
        let zz = [Complex64::new(z[0], z[1]), Complex64::new(z[2], z[3])];
        let tau = Complex64::from_polar(r, a);
        let w = scale(tau, zz).unwrap();
        // q = z₁z̄₂ is invariant
        let want = q(zz);
        prop_assert!((q(w) - want).norm() < 1e-10 * (1.0 + want.norm()));
        let back = from_point(&to_point(w));
        prop_assert!((back[0] - w[0]).norm() == 0.0 && (back[1] - w[1]).norm() == 0.0);
    }

    #[test]
    fn psi_is_inverted_exactly_up_to_rounding(w in proptest::collection::vec(-3.0f64..3.0, 4)) {
        let u = [Complex64::new(w[0], w[1]), Complex64::new(w[2], w[3])];
        let v = psi(psi_inverse(u));
        prop_assert!((v[0] - u[0]).norm() < 1e-14 && (v[1] - u[1]).norm() < 1e-14);
    }

    #[test]
    fn thin_leg_flow_matches_the_exact_exponential(w in proptest::collection::vec(-0.8f64..0.8, 4)) {
        let params = ThinLegParams::default();
        let u = [Complex64::new(w[0], w[1]), Complex64::new(w[2], w[3])];
        let exact = phi_h_one_leg_exact(u, params.eps);
        let err = |v: [Complex64; 2]| (v[0] - exact[0]).norm().max((v[1] - exact[1]).norm());
        let flown = phi_h(u, &params).unwrap();
        let fine = phi_h(u, &ThinLegParams { steps: 4 * params.steps, ..params }).unwrap();
        prop_assert!(err(flown) < 1e-5);
        // second order: four times the steps, about a sixteenth of the error
        prop_assert!(err(fine) < err(flown) / 8.0 || err(fine) < 1e-10, "{} {}", err(flown), err(fine));
        let back = phi_h_inverse(flown, &params).unwrap();
        prop_assert!((back[0] - u[0]).norm() < 1e-8 && (back[1] - u[1]).norm() < 1e-8);
    }
}
