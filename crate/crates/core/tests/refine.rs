mod common;

use std::f64::consts::PI;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use pvmra::algnum::AlgebraicElement;
use pvmra::linalg::{int, Rational};
use pvmra::poly;
use pvmra::refine::{self, Dilation, MahlerMethod, MaskSpec, RefinementMask};
use pvmra::{Error, Tolerances};

const LEHMER: [f64; 11] = [1.0, 1.0, 0.0, -1.0, -1.0, -1.0, -1.0, -1.0, 0.0, 1.0, 1.0];
/// M(1 + x + y) = exp(3√3 L(χ_{-3}, 2) / 4π).
const SMYTH: f64 = 1.381_356_444_518_497;

fn bernoulli() -> RefinementMask {
    refine::bernoulli(&ctx(GOLDEN))
}

/// (1 + e(y) + e(φy)) / 3 with λ = φ: rank 2, P = (1 + z_1 + z_2)/3.
fn two_frequency() -> RefinementMask {
    let g = ctx(GOLDEN);
    refine::build_mask(
        Dilation::Algebraic(g),
        vec![Complex64::new(PHI / 3.0, 0.0); 3],
        vec![vec![int(0), int(0)], vec![int(1), int(0)], vec![int(0), int(1)]],
    )
    .unwrap()
}

fn example_masks() -> Vec<(&'static str, RefinementMask)> {
    vec![
        ("haar", refine::haar()),
        ("cantor", refine::cantor()),
        ("golden-mean", refine::golden_mean_mask()),
        ("bernoulli", bernoulli()),
        ("two-frequency", two_frequency()),
    ]
}

#[test]
fn classical_masks_are_univariate() {
    let half = vec![Complex64::new(0.5, 0.0); 2];
    for m in [refine::haar(), refine::cantor(), bernoulli()] {
        assert_eq!(m.rank(), 1);
        assert_eq!(m.univariate_polynomial().unwrap(), half);
    }
    assert_eq!(refine::cantor().basis_values(), &[2.0]);
    assert_eq!(two_frequency().rank(), 2);
}

#[test]
fn jensen_values() {
    let half = refine::mahler_univariate(&poly::from_real(&[0.5, 0.5])).unwrap();
    assert!((half.value - 0.5).abs() < 1e-12);
    let lehmer = refine::mahler_univariate(&poly::from_real(&LEHMER)).unwrap();
    assert!((lehmer.value - 1.17628).abs() < 1e-5);
    assert!((lehmer.value - 1.176_280_818_259_917_5).abs() < 1e-12);
    let gm = refine::mahler_univariate(&poly::from_real(&[1.0, 1.0, -1.0])).unwrap();
    assert!((gm.value - PHI).abs() < 1e-12);
}

#[test]
fn mask_mahler_measures() {
    assert!((refine::mahler_mask(&refine::haar()).unwrap().value - 0.5).abs() < 1e-12);
    assert!((refine::mahler_mask(&refine::golden_mean_mask()).unwrap().value - PHI).abs() < 1e-12);
    for (_, m) in example_masks() {
        if let Some(p) = m.univariate_polynomial() {
            assert_eq!(refine::mahler_mask(&m).unwrap(), refine::mahler_univariate(&p).unwrap());
        }
    }
}

#[test]
fn torus_quadrature_matches_univariate_limit() {
    let r = refine::mahler_mask(&two_frequency()).unwrap();
    assert_eq!(r.method, MahlerMethod::TorusQuadrature);
    let limit = r.univariate_limit.unwrap();
    assert!((r.value - limit).abs() < 1e-4, "{} vs {limit}", r.value);
    assert!((r.value - SMYTH / 3.0).abs() < 1e-8, "{}", r.value);
}

#[test]
fn rho_table() {
    assert!((refine::rho(&refine::haar()).unwrap() - 1.0).abs() < 1e-10);
    assert!((refine::rho(&refine::cantor()).unwrap() - 2f64.ln() / 3f64.ln()).abs() < 1e-10);
    assert!((refine::rho(&bernoulli()).unwrap() - 1.44042).abs() < 1e-5);
    let gm = refine::rho(&refine::golden_mean_mask()).unwrap();
    assert!((gm + 0.69424).abs() < 1e-5, "{gm}");
}

#[test]
fn rho_sign_follows_mahler_measure() {
    for (name, m) in example_masks() {
        let mm = refine::mahler_mask(&m).unwrap().value;
        let r = refine::rho(&m).unwrap();
        if mm < 1.0 {
            assert!(r > 0.0, "{name}");
        } else if mm > 1.0 {
            assert!(r < 0.0, "{name}");
        }
    }
}

#[test]
fn hat_special_values() {
    for (_, m) in example_masks() {
        assert_eq!(refine::fourier_hat(&m, 0.0, 1e-13), Complex64::new(1.0, 0.0));
    }
    let h = refine::haar();
    assert!((refine::fourier_hat(&h, 0.5, 1e-13).norm() - 2.0 / PI).abs() < 1e-12);
    assert!(matches!(refine::fourier_hat_checked(&h, 1.0, 1e-13), Err(Error::ZeroHit { .. })));
}

#[test]
fn product_length_grows_with_y() {
    let m = bernoulli();
    let a = refine::product_length(&m, 1.0, 1e-13);
    let b = refine::product_length(&m, 1e6, 1e-13);
    assert!(b > a);
}

#[test]
fn mask_json_round_trip() {
    for (name, m) in example_masks() {
        let spec = m.to_spec();
        let text = spec.to_json();
        let back = MaskSpec::from_json(&text).unwrap();
        assert_eq!(back, spec, "{name}");
        let rebuilt = back.build(Tolerances::default()).unwrap();
        for y in [0.1, 1.7, -3.3] {
            assert_eq!(rebuilt.eval(y), m.eval(y), "{name}");
        }
    }
}

#[test]
fn mask_json_by_hand() {
    let text = r#"{"lambda": {"poly": [-1, -1]}, "coeffs": [[0.8090169943749475, 0], [0.8090169943749475, 0]],
                   "translations": [[0, 0], ["1/1", 0]]}"#;
    let m = MaskSpec::from_json(text).unwrap().build(Tolerances::default()).unwrap();
    assert!((refine::rho(&m).unwrap() - 2f64.ln() / PHI.ln()).abs() < 1e-10);
    assert!(MaskSpec::from_json(r#"{"lambda": {"real": 2}, "coeffs": [[1, 0]], "translations": [[0]]}"#)
        .unwrap()
        .build(Tolerances::default())
        .is_err());
}

#[test]
fn mean_log_mask_haar() {
    let target = 0.5f64.ln();
    let a = refine::mean_log_mask(&refine::haar(), 1e3, 16).unwrap();
    let b = refine::mean_log_mask(&refine::haar(), 1e4, 16).unwrap();
    assert!((b.value - target).abs() < 0.01);
    assert!((b.value - target).abs() < (a.value - target).abs());
}

#[test]
fn mean_log_mask_constant() {
    let m = refine::build_mask(Dilation::Real(2.0), vec![Complex64::new(2.0, 0.0)], vec![vec![int(0)]]).unwrap();
    assert_eq!(refine::mean_log_mask(&m, 100.0, 8).unwrap().value, 0.0);
}

#[test]
fn mean_log_mask_convergence_band() {
    for (name, m) in example_masks() {
        let target = refine::mahler_mask(&m).unwrap().value.ln();
        let coarse = (refine::mean_log_mask(&m, 250.0, 16).unwrap().value - target).abs();
        let fine = (refine::mean_log_mask(&m, 1000.0, 16).unwrap().value - target).abs();
        assert!(fine <= 2.0 * coarse + 0.02, "{name}: {coarse} -> {fine}");
    }
}

#[test]
fn mean_log_mask_bernoulli_approach() {
    let m = bernoulli();
    let target = 0.5f64.ln();
    let a = (refine::mean_log_mask(&m, 1e3, 16).unwrap().value - target).abs();
    let b = (refine::mean_log_mask(&m, 1e4, 16).unwrap().value - target).abs();
    assert!(b <= a + 0.02 && b < 0.02, "{a} -> {b}");
}

#[test]
fn mean_log_hat_bernoulli_trend() {
    // the finite-L value approaches -ρ = -1.4404 at rate 1/ln L; at φ^20 it is
    // still about 0.16 away
    let m = bernoulli();
    let target = -2f64.ln() / PHI.ln();
    let errs: Vec<f64> = [12, 16, 20]
        .iter()
        .map(|&p| (refine::mean_log_hat(&m, PHI.powi(p), 16).unwrap().value - target).abs())
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    assert!(errs[2] < 0.16, "{errs:?}");
}

#[test]
fn mean_log_hat_needs_large_l() {
    assert!(refine::mean_log_hat(&refine::haar(), 3.0, 16).is_err());
}

#[test]
fn sublevel_haar_closed_form() {
    let v = [0.1, 0.3, 0.5, 0.9];
    let r = refine::sublevel_measure(&refine::haar(), &v, 100.0, 1_000_000).unwrap();
    for p in &r.points {
        let exact = 200.0 * (1.0 - 2.0 * p.v.acos() / PI);
        assert!((p.measure / exact - 1.0).abs() < 0.02, "v = {}: {} vs {exact}", p.v, p.measure);
    }
    let full = refine::sublevel_measure(&refine::haar(), &[1.0], 100.0, 10_000).unwrap();
    assert!((full.points[0].measure - 200.0).abs() < 1e-9);
}

#[test]
fn sublevel_golden_mean_constant_is_stable() {
    let v = [1.1, 1.3, 1.6, 2.0];
    let r = refine::sublevel_measure(&refine::golden_mean_mask(), &v, 100.0, 200_000).unwrap();
    assert!(r.stable, "{r:?}");
    assert!(r.constant > 0.0);
}

#[test]
fn erdos_golden_bernoulli() {
    let m = bernoulli();
    let g = ctx(GOLDEN);
    let seq = refine::erdos_sequence(&m, &AlgebraicElement::one(&g), 40).unwrap();
    assert!(seq.plateau < 1e-6, "{}", seq.plateau);
    assert!(seq.terms[40].modulus > 0.0);

    let zero = refine::erdos_sequence(&m, &AlgebraicElement::zero(&g), 10).unwrap();
    assert!(zero.terms.iter().all(|t| t.value == Complex64::new(1.0, 0.0)));
}

#[test]
fn erdos_exact_and_float_agree() {
    let m = bernoulli();
    let g = ctx(GOLDEN);
    for alpha in [vec![1, 0], vec![0, 1], vec![2, -1]] {
        let a = AlgebraicElement::from_integers(&g, &alpha).unwrap();
        let exact = refine::erdos_sequence(&m, &a, 20).unwrap();
        let float = refine::erdos_sequence_float(&m, a.value(), 20).unwrap();
        for (x, y) in exact.terms.iter().zip(&float.terms) {
            assert!((x.value - y.value).norm() < 1e-8, "{alpha:?} k = {}", x.k);
        }
    }
}

#[test]
fn exact_phases_follow_lucas_numbers() {
    // φ^k = L_k - (-1/φ)^k, so frac(φ^k) is frac(-(-1/φ)^k)
    let g = ctx(GOLDEN);
    let phases = refine::exact_phases(&bernoulli(), &AlgebraicElement::one(&g), 40).unwrap();
    for (k, ph) in phases.iter().enumerate() {
        let small = (-1.0 / PHI).powi(k as i32);
        let expect = (-small).rem_euclid(1.0);
        let d = (ph[1] - expect).abs();
        assert!(d.min(1.0 - d) < 1e-12, "k = {k}");
        assert_eq!(ph[0], 0.0);
    }
}

#[test]
fn erdos_haar_hits_zero() {
    assert!(matches!(refine::erdos_sequence_float(&refine::haar(), 1.0, 10), Err(Error::ZeroHit { .. })));
}

#[test]
fn orbits() {
    let m = bernoulli();
    let z = Rational::from_integer(0.into());
    let o = refine::orbit_mean(&m, &[z.clone(), z.clone()], 10).unwrap();
    assert_eq!((o.cycle_length, o.preperiod), (1, 0));
    assert_eq!(o.mean, 0.0);

    let third = Rational::new(1.into(), 3.into());
    let o = refine::orbit_mean(&m, &[third, z], 1000).unwrap();
    assert!(o.mean.is_finite());
    assert!(o.preperiod + o.cycle_length <= 9);
    assert!(matches!(
        refine::orbit_mean(&m, &[Rational::new(1.into(), 1009.into()), Rational::new(2.into(), 1009.into())], 5),
        Err(Error::OrbitBudgetExceeded(5))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn functional_equation(y in -3.0f64..3.0, k in 0usize..=8, which in 0usize..5) {
        let (_, m) = example_masks().swap_remove(which);
        let lam = m.lambda();
        let mut rhs = refine::fourier_hat(&m, y, 1e-15);
        for j in 0..k {
            rhs *= m.eval(y * lam.powi(j as i32));
        }
        let lhs = refine::fourier_hat(&m, y * lam.powi(k as i32), 1e-15);
        prop_assert!((lhs - rhs).norm() < 1e-10, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn exponent_representation(y in -50.0f64..50.0, which in 0usize..5) {
        let (_, m) = example_masks().swap_remove(which);
        prop_assert!((m.eval(y) - m.eval_via_exponents(y)).norm() < 1e-12);
    }

    #[test]
    fn haar_hat_closed_form(y in 0.01f64..20.0) {
        let exact = ((PI * y).sin() / (PI * y)).abs();
        prop_assert!((refine::fourier_hat(&refine::haar(), y, 1e-15).norm() - exact).abs() < 1e-10);
    }
}
