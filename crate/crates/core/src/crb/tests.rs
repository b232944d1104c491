use super::*;
use crate::special::hyp1f1;
use approx::assert_relative_eq;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mat3_rel(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    ScaledFisher::Second(*a).max_rel_diff(&ScaledFisher::Second(*b))
}

#[test]
fn vacuum_first_fisher_is_identity() {
    let f = fisher_hom_first(&StateModel::vacuum()).unwrap();
    let ScaledFisher::First(m) = f else { panic!() };
    assert!((m - Matrix2::identity()).abs().max() < 1e-14);
    assert_relative_eq!(scrb_hom_first(&StateModel::vacuum()), 2.0);
    assert_relative_eq!(scrb_het_first(&StateModel::vacuum()), 2.0);
}

#[test]
fn fock_first_order_bounds() {
    for n in [0u32, 1, 4, 17] {
        let s = StateModel::fock(n);
        let nf = n as f64;
        let ScaledFisher::First(m) = fisher_hom_first(&s).unwrap() else { panic!() };
        assert!((m - Matrix2::identity() / (2.0 * nf + 1.0)).abs().max() < 1e-14);
        assert_relative_eq!(scrb_hom_first(&s), 2.0 * (2.0 * nf + 1.0), max_relative = 1e-12);
        assert_relative_eq!(scrb_het_first(&s), 2.0 * (nf + 1.0), max_relative = 1e-12);
        assert_relative_eq!(gamma1(&s), (nf + 1.0) / (2.0 * nf + 1.0), max_relative = 1e-12);
    }
}

#[test]
fn squeezed_first_order_trace_inverse() {
    let s = StateModel::gaussian(FirstMoments::default(), CovarianceMatrix::diag(0.25, 1.0)).unwrap();
    let f = fisher_hom_first(&s).unwrap();
    assert_relative_eq!(f.trace_inverse().unwrap(), 2.25, max_relative = 1e-12);
    assert_relative_eq!(scrb_hom_first(&s), 2.25, max_relative = 1e-12);
}

#[test]
fn even_coherent_first_order_closed_form() {
    let a0 = 1.3f64;
    let a = a0 * a0;
    let b = a * a.tanh() + 0.5;
    let s = StateModel::even_coherent(c(a0, 0.0)).unwrap();
    assert_relative_eq!(scrb_hom_first(&s), 2.0 * (b + (b * b - a * a).sqrt()), max_relative = 1e-12);
    let f = fisher_hom_first(&s).unwrap();
    assert_relative_eq!(f.trace_inverse().unwrap(), scrb_hom_first(&s), max_relative = 1e-10);
}

#[test]
fn photon_added_first_order_closed_forms() {
    for (a0, m) in [(0.7f64, 1u32), (1.5, 4), (0.2, 0)] {
        let x = a0 * a0;
        let mf = m as f64;
        let f = |a: f64, b: f64| hyp1f1(a, b, x);
        let a = -x * (mf + 1.0) / (2.0 * f(mf + 1.0, 1.0).powi(2))
            * (2.0 * (mf + 1.0) * f(mf + 2.0, 2.0).powi(2) - (mf + 2.0) * f(mf + 1.0, 1.0) * f(mf + 3.0, 3.0));
        let b = mf + 0.5
            - x * mf * f(mf + 1.0, 2.0) / f(mf + 1.0, 1.0).powi(2) * (f(mf + 1.0, 1.0) + mf * f(mf + 1.0, 2.0));
        let s = StateModel::photon_added(c(a0, 0.0), m).unwrap();
        assert_relative_eq!(scrb_hom_first(&s), 2.0 * (b + (b * b - a * a).sqrt()), max_relative = 1e-10);
        let het = 2.0 * (a + (mf + 1.0) * f(mf + 2.0, 2.0) / f(mf + 1.0, 1.0));
        assert_relative_eq!(scrb_het_first(&s), het, max_relative = 1e-10);
    }
}

#[test]
fn fock_second_fisher_closed_form() {
    for n in [0u32, 1, 3, 10] {
        let s = StateModel::fock(n);
        let nf = n as f64;
        let k = 1.0 / (4.0 * (nf * nf + nf + 1.0));
        let expect = Matrix3::new(3.0, 0.0, 1.0, 0.0, 2.0, 0.0, 1.0, 0.0, 3.0) * k;
        let ScaledFisher::Second(q) = fisher_hom_second(&s, Method::Quadrature).unwrap() else { panic!() };
        let ScaledFisher::Second(cf) = fisher_hom_second(&s, Method::ClosedForm).unwrap() else { panic!() };
        assert!(mat3_rel(&q, &expect) < 1e-12);
        assert!(mat3_rel(&cf, &expect) < 1e-14);
    }
}

#[test]
fn exact_second_order_constants() {
    let vac = StateModel::vacuum();
    assert_relative_eq!(gamma2(&vac).unwrap(), 1.2, max_relative = 1e-12);
    assert_relative_eq!(gamma2(&StateModel::fock(1)).unwrap(), 16.0 / 15.0, max_relative = 1e-12);
    assert_relative_eq!(scrb_het_second(&StateModel::fock(2)), 30.0, max_relative = 1e-12);
    assert_relative_eq!(scrb_het_second(&vac), 6.0, max_relative = 1e-12);
    for n in 0..=50u32 {
        let s = StateModel::fock(n);
        let nf = n as f64;
        let (h, m) = scrb_hom_second(&s).unwrap();
        assert_eq!(m, Method::ClosedForm);
        assert_relative_eq!(h, 5.0 * (nf * nf + nf + 1.0), max_relative = 1e-12);
        assert_relative_eq!(scrb_het_second(&s), 2.0 * (nf + 1.0) * (nf + 3.0), max_relative = 1e-12);
    }
}

#[test]
fn coherent_crossover_constants() {
    let a0 = (5.0f64 / 32.0).sqrt();
    let s = StateModel::coherent(c(a0, 0.0)).unwrap();
    assert_relative_eq!(scrb_hom_second(&s).unwrap().0, 63.0 / 8.0, max_relative = 1e-12);
    assert_relative_eq!(scrb_het_second(&s), 63.0 / 8.0, max_relative = 1e-12);
    let q = fisher_hom_second(&s, Method::Quadrature).unwrap().trace_inverse().unwrap();
    assert_relative_eq!(q, 63.0 / 8.0, max_relative = 1e-10);
    // Large-amplitude form 3 + 12 x + 2 sqrt(1 + 8 x).
    for a0 in [0.2f64, 1.0, 3.0] {
        let x = a0 * a0;
        let s = StateModel::coherent(c(a0, 0.0)).unwrap();
        assert_relative_eq!(
            scrb_hom_second(&s).unwrap().0,
            3.0 + 12.0 * x + 2.0 * (1.0 + 8.0 * x).sqrt(),
            max_relative = 1e-12
        );
    }
}

#[test]
fn displaced_fock_het_second() {
    // 2(m+1)(m+3+6 a^2): m=1, a0=1 gives 40.
    let s = StateModel::displaced_fock(c(1.0, 0.0), 1).unwrap();
    assert_relative_eq!(scrb_het_second(&s), 40.0, max_relative = 1e-12);
}

#[test]
fn thermal_central_gaussian() {
    let mu = 3.0;
    let s = StateModel::thermal(mu).unwrap();
    let (h, m) = scrb_hom_second(&s).unwrap();
    assert_eq!(m, Method::ClosedForm);
    // var(X_theta^2) = mu^2/2 for all theta, so H2,hom = 10 var.
    let q = fisher_hom_second(&s, Method::Quadrature).unwrap().trace_inverse().unwrap();
    assert_relative_eq!(h, q, max_relative = 1e-10);
    assert_relative_eq!(h, 5.0 * mu * mu, max_relative = 1e-10);
}

#[test]
fn photon_added_small_amplitude_expansion() {
    let s = StateModel::photon_added(c(0.05, 0.0), 1).unwrap();
    let (h, m) = scrb_hom_second(&s).unwrap();
    assert_eq!(m, Method::Quadrature);
    assert_relative_eq!(h, 15.15, max_relative = 1e-4);
    assert!(fisher_hom_second(&s, Method::ClosedForm).is_err());
}

#[test]
fn noncentral_gaussian_spec_example() {
    let r0 = FirstMoments::new(0.3, -0.2);
    let g = CovarianceMatrix::diag(0.6, 0.5);
    let s = StateModel::gaussian(r0, g).unwrap();
    let ScaledFisher::Second(q) = fisher_hom_second(&s, Method::Quadrature).unwrap() else { panic!() };
    let cf = gaussian_fisher_second(r0, g);
    assert!(mat3_rel(&q, &cf) < 1e-10, "{q} vs {cf}");
}

#[test]
fn noncentral_reduces_to_central() {
    let g = CovarianceMatrix::symmetric(0.9, 0.3, 0.6);
    let central = gaussian_fisher_second(FirstMoments::default(), g);
    let tiny = gaussian_fisher_second(FirstMoments::new(1e-5, 2e-5), g);
    assert!(mat3_rel(&central, &tiny) < 1e-8);
    let s = StateModel::gaussian(FirstMoments::default(), g).unwrap();
    let ScaledFisher::Second(q) = fisher_hom_second(&s, Method::Quadrature).unwrap() else { panic!() };
    assert!(mat3_rel(&q, &central) < 1e-12);
}

#[test]
fn isotropic_noncentral_branches() {
    for (r0, g) in [
        (FirstMoments::new(0.8, 0.1), CovarianceMatrix::scalar(0.7)),
        // w2 = w3 = 0: anisotropy of G cancels that of r r^T.
        (FirstMoments::new(0.0, 0.5), CovarianceMatrix::diag(0.9, 0.65)),
    ] {
        let s = StateModel::gaussian(r0, g).unwrap();
        let ScaledFisher::Second(q) = fisher_hom_second(&s, Method::Quadrature).unwrap() else { panic!() };
        assert!(mat3_rel(&q, &gaussian_fisher_second(r0, g)) < 1e-10);
    }
}

#[test]
fn ml_families_match_quadrature() {
    let states = [
        StateModel::even_coherent(c(0.8, 0.4)).unwrap(),
        StateModel::odd_coherent(c(1.1, -0.7)).unwrap(),
        StateModel::odd_coherent(c(0.05, 0.0)).unwrap(),
        StateModel::displaced_fock(c(0.6, 0.9), 3).unwrap(),
        StateModel::displaced_fock(c(2.0, 0.0), 0).unwrap(),
    ];
    for s in &states {
        let ScaledFisher::Second(q) = fisher_hom_second(s, Method::Quadrature).unwrap() else { panic!() };
        let ScaledFisher::Second(cf) = fisher_hom_second(s, Method::ClosedForm).unwrap() else { panic!() };
        assert!(mat3_rel(&q, &cf) < 1e-9, "{s}: {q} vs {cf}");
        let (h, _) = scrb_hom_second(s).unwrap();
        assert_relative_eq!(h, ScaledFisher::Second(q).trace_inverse().unwrap(), max_relative = 1e-9);
    }
}

#[test]
fn het_second_closed_forms_match_moments() {
    let states = [
        StateModel::gaussian(FirstMoments::new(0.4, -1.2), CovarianceMatrix::symmetric(1.1, 0.2, 0.5)).unwrap(),
        StateModel::fock(7),
        StateModel::even_coherent(c(0.9, 0.0)).unwrap(),
        StateModel::odd_coherent(c(0.3, 1.0)).unwrap(),
        StateModel::displaced_fock(c(1.4, 0.2), 4).unwrap(),
        StateModel::photon_added(c(0.8, 0.0), 1).unwrap(),
        StateModel::photon_added(c(1.7, 0.3), 6).unwrap(),
    ];
    for s in &states {
        let h = s.husimi_moments();
        let from_moments = h.var_x2() + h.var_p2() + 2.0 * h.var_xp();
        let cf = scrb_het_second_closed_form(s).unwrap();
        assert_relative_eq!(from_moments, cf, max_relative = 1e-8);
        assert_relative_eq!(scrb_het_second(s), cf, max_relative = 1e-8);
    }
}

#[test]
fn crb_report_is_consistent() {
    let s = StateModel::displaced_fock(c(0.5, 0.0), 2).unwrap();
    let r = crb_report(&s).unwrap();
    assert_eq!(r.gamma1, r.h1_het / r.h1_hom);
    assert_eq!(r.gamma2, r.h2_het / r.h2_hom);
    assert_eq!(r.methods.h2_hom, Method::ClosedForm);
    let r = crb_report(&StateModel::photon_added(c(0.5, 0.0), 2).unwrap()).unwrap();
    assert_eq!(r.methods.h2_hom, Method::Quadrature);
}

#[test]
fn crossovers() {
    let Crossover::At { alpha0, h2 } = find_crossover(AmplitudeFamily::Coherent, DEFAULT_CROSSOVER_BRACKET).unwrap()
    else {
        panic!()
    };
    assert!((alpha0 - (5.0f64 / 32.0).sqrt()).abs() < 1e-9);
    assert_relative_eq!(h2, 7.875, max_relative = 1e-8);
    let Crossover::At { alpha0, .. } = find_crossover(AmplitudeFamily::DisplacedFock(1), DEFAULT_CROSSOVER_BRACKET).unwrap()
    else {
        panic!()
    };
    let expect = 0.5 * (19.0f64 / 3.0 - 2.0 * 87f64.sqrt() / 3.0).sqrt();
    assert!((alpha0 - expect).abs() < 1e-9, "{alpha0} vs {expect}");
    assert_eq!(
        find_crossover(AmplitudeFamily::DisplacedFock(2), DEFAULT_CROSSOVER_BRACKET).unwrap(),
        Crossover::AlwaysBelowUnity
    );
}

#[test]
fn photon_added_m0_minimum() {
    let min = minimize_gamma2(AmplitudeFamily::PhotonAdded(0), None).unwrap();
    let expect_a = (13.0 + 3.0 * 21f64.sqrt()).sqrt() / 4.0;
    assert!((min.alpha0 - expect_a).abs() < 1e-6);
    assert_relative_eq!(min.gamma2, 3.0 * (6.0 - 21f64.sqrt()) / 5.0, max_relative = 1e-10);
}

#[test]
fn minimize_scalar_parabola_and_edge() {
    let (x, f) = minimize_scalar(|x| Ok((x - 1.3).powi(2) + 2.0), 0.0, 5.0, 50).unwrap();
    assert!((x - 1.3).abs() < 1e-7);
    assert_relative_eq!(f, 2.0);
    let (x, _) = minimize_scalar(Ok, 0.0, 1.0, 10).unwrap();
    assert!(x.abs() < 1e-9);
}

#[test]
fn periodic_average_trig() {
    let v = periodic_average(|t| Ok([t.cos().powi(2), (2.0 * t).cos(), 1.0 / (2.0 + (2.0 * t).cos())])).unwrap();
    assert_relative_eq!(v[0], 0.5, epsilon = 1e-15);
    assert!(v[1].abs() < 1e-15);
    assert_relative_eq!(v[2], 1.0 / 3f64.sqrt(), max_relative = 1e-14);
}

#[test]
fn degenerate_variance_is_reported() {
    // A state with vanishing var(X_theta) is unphysical; feed the engine a
    // formally singular Gaussian directly.
    let s = StateModel::Gaussian { r0: FirstMoments::default(), g: CovarianceMatrix::symmetric(0.0, 0.0, 1.0) };
    assert!(matches!(fisher_hom_first(&s), Err(Error::DegenerateVariance { .. })));
}

fn arb_gaussian() -> impl Strategy<Value = (FirstMoments, CovarianceMatrix)> {
    (-2.0..2.0f64, -2.0..2.0f64, 0.05..3.0f64, 1.0..3.0f64, 0.0..PI).prop_map(|(rx, rp, lam_ln, mu, phi)| {
        let lam = lam_ln.exp().min(8.0);
        let g = crate::phase_space::gaussian_cov_from_shape(&crate::phase_space::GaussianShape::new(mu, lam, phi).unwrap())
            .unwrap();
        (FirstMoments::new(rx, rp), g)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gaussian_closed_form_matches_quadrature((r0, g) in arb_gaussian()) {
        let s = StateModel::gaussian(r0, g).unwrap();
        let ScaledFisher::Second(q) = fisher_hom_second(&s, Method::Quadrature).unwrap() else { unreachable!() };
        let cf = gaussian_fisher_second(r0, g);
        prop_assert!(mat3_rel(&q, &cf) < 1e-8, "{} vs {}", q, cf);
    }

    #[test]
    fn gamma2_rotation_invariant(a in 0.0..2.5f64, phase in 0.0..std::f64::consts::TAU, m in 0u32..4, fam in 0usize..3) {
        let base = match fam {
            0 => StateModel::displaced_fock(c(a, 0.0), m).unwrap(),
            1 => StateModel::photon_added(c(a, 0.0), m).unwrap(),
            _ => StateModel::even_coherent(c(a + 0.1, 0.0)).unwrap(),
        };
        let rot = base.rotated(phase);
        let (h0, _) = scrb_hom_second(&base).unwrap();
        let (h1, _) = scrb_hom_second(&rot).unwrap();
        prop_assert!((h0 - h1).abs() <= 1e-9 * h0);
        let (k0, k1) = (scrb_het_second(&base), scrb_het_second(&rot));
        prop_assert!((k0 - k1).abs() <= 1e-9 * k0);
    }

    #[test]
    fn gaussian_gamma2_rotation_invariant((r0, g) in arb_gaussian(), phi in 0.0..PI) {
        let s = StateModel::gaussian(r0, g).unwrap();
        let r = StateModel::gaussian(r0.rotated(phi), g.rotated(phi)).unwrap();
        let (a, b) = (gamma2(&s).unwrap(), gamma2(&r).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }
}

#[test]
fn gaussian_closed_form_small_displacement() {
    let g = CovarianceMatrix::symmetric(3.428554978411328, 2.767213469278454, 2.63051056357396);
    for e in [0.1, 1e-2, 1e-3, 3e-4, 1e-5, 1e-7] {
        let r0 = FirstMoments::new(0.6 * e, 0.4 * e);
        let s = StateModel::gaussian(r0, g).unwrap();
        let ScaledFisher::Second(q) = fisher_hom_second(&s, Method::Quadrature).unwrap() else { unreachable!() };
        assert!(mat3_rel(&q, &gaussian_fisher_second(r0, g)) < 1e-12, "e = {e}");
    }
}
