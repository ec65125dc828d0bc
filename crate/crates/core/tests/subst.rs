mod common;

use std::collections::BTreeSet;

use common::*;
use pvmra::qlat::{self, WindowVector};
use pvmra::subst::{self, SubstitutionRule};
use pvmra::Error;

fn golden_rule() -> SubstitutionRule {
    subst::derive_rule(&ctx(GOLDEN), &WindowVector::uniform(2, 1.0), 60.0).unwrap()
}

/// Preimages of 𝔏(σ) in the half-open interval spanned by 0 and λᵏc_1.
fn oracle(rule: &SubstitutionRule, k: usize) -> BTreeSet<Vec<i64>> {
    let c = rule.context().unwrap();
    let end = c.lambda().powi(k as i32) * rule.types[0].length;
    let q = qlat::generate(&c, &rule.window, end.abs() + 2.0).unwrap();
    let (lo, hi) = if end > 0.0 { (0.0, end) } else { (end, 0.0) };
    q.points()
        .iter()
        .filter(|p| p.value >= lo - 1e-9 && p.value < hi - 1e-9)
        .map(|p| p.preimage.clone())
        .collect()
}

fn expanded(rule: &SubstitutionRule, k: usize) -> BTreeSet<Vec<i64>> {
    subst::expand(rule, k).unwrap().into_iter().map(|p| p.preimage).collect()
}

#[test]
fn golden_rule_shape() {
    let rule = golden_rule();
    rule.validate().unwrap();
    assert_eq!(rule.types[0].gap, vec![0, 1]);
    let lengths: BTreeSet<u64> = rule.types.iter().map(|t| (t.length * 1e9).round() as u64).collect();
    assert_eq!(lengths.len(), 3, "underlying gaps 1/φ, 1, φ");
    assert!((rule.perron_root().unwrap() - PHI).abs() < 1e-9);
}

#[test]
fn expand_zero_is_origin() {
    let rule = golden_rule();
    let p = subst::expand(&rule, 0).unwrap();
    assert_eq!(p.len(), 1);
    assert_eq!((p[0].value, p[0].preimage.clone()), (0.0, vec![0, 0]));
}

#[test]
fn golden_oracle_equivalence() {
    let rule = golden_rule();
    for k in 0..=22 {
        let e = expanded(&rule, k);
        assert!(e.len() <= 100_000);
        assert_eq!(e, oracle(&rule, k), "k = {k}");
    }
}

#[test]
fn negative_golden_oracle_equivalence() {
    let c = ctx(&[-1, 1]);
    assert!(c.lambda() < 0.0);
    let rule = subst::derive_rule(&c, &WindowVector::uniform(2, 1.0), 60.0).unwrap();
    assert!((rule.perron_root().unwrap() - c.lambda().abs()).abs() < 1e-9);
    for k in 0..=14 {
        assert_eq!(expanded(&rule, k), oracle(&rule, k), "k = {k}");
    }
}

#[test]
fn growth_ratio_is_phi() {
    let rule = golden_rule();
    for k in 11..20 {
        let a = subst::expand(&rule, k).unwrap().len() as f64;
        let b = subst::expand(&rule, k + 1).unwrap().len() as f64;
        assert!((b / a / PHI - 1.0).abs() < 0.01, "k = {k}: {}", b / a);
    }
}

#[test]
fn exact_length_partition() {
    let rule = golden_rule();
    let c = rule.context().unwrap();
    for (t, dec) in rule.types.iter().zip(&rule.decompositions) {
        let mut cursor = vec![0, 0];
        for ch in dec {
            assert_eq!(ch.offset, cursor);
            cursor = qlat::add_preimages(&cursor, &rule.types[ch.child].gap);
        }
        assert_eq!(cursor, qlat::inflate_preimage(&c, &t.gap));
    }
}

#[test]
fn tampered_rule_is_rejected() {
    let mut rule = golden_rule();
    rule.decompositions[0].pop();
    assert!(rule.validate().is_err());
    let text = rule.to_json();
    assert!(SubstitutionRule::from_json(&text).is_err());
}

#[test]
fn vector_mask_counts() {
    let rule = golden_rule();
    let mask = subst::vector_mask(&rule).unwrap();
    let children: usize = rule.decompositions.iter().map(Vec::len).sum();
    assert_eq!(subst::mask_weight(&mask), children);
    for (j, dec) in rule.decompositions.iter().enumerate() {
        let row: usize = mask.iter().map(|m| m.matrix[j].iter().map(|&v| v as usize).sum::<usize>()).sum();
        assert_eq!(row, dec.len());
    }
    assert!(mask.iter().all(|m| m.matrix.iter().flatten().all(|&v| v <= 1)));
}

#[test]
fn vector_mask_reconstruction() {
    let rule = golden_rule();
    let r = subst::check_reconstruction(&rule, 100, 1).unwrap();
    assert_eq!((r.samples, r.mismatches, r.non_binary), (100, 0, 0));

    let mask = subst::vector_mask(&rule).unwrap();
    let x = rule.types[0].length / 3.0;
    for (lhs, rhs) in subst::reconstruct_at(&rule, &mask, PHI, x) {
        assert_eq!(lhs, rhs);
    }

    let minus = subst::derive_rule(&ctx(&[-1, 1]), &WindowVector::uniform(2, 1.0), 60.0).unwrap();
    assert_eq!(subst::check_reconstruction(&minus, 100, 2).unwrap().mismatches, 0);
}

#[test]
fn reconstruction_is_seeded() {
    let rule = golden_rule();
    assert_eq!(
        subst::check_reconstruction(&rule, 50, 9).unwrap(),
        subst::check_reconstruction(&rule, 50, 9).unwrap()
    );
}

#[test]
fn json_round_trip() {
    let rule = golden_rule();
    let text = rule.to_json();
    let back = SubstitutionRule::from_json(&text).unwrap();
    assert_eq!(back.to_json(), text);
    assert_eq!(expanded(&back, 12), expanded(&rule, 12));
}

#[test]
fn budget_and_preconditions() {
    let rule = golden_rule();
    assert!(matches!(subst::expand_with_budget(&rule, 30, 1000), Err(Error::Overflow { .. })));
    assert!(matches!(
        subst::derive_rule(&ctx(&[2, -4]), &WindowVector::uniform(2, 1.0), 60.0),
        Err(Error::NotUnitConstant)
    ));
}

#[test]
fn plastic_disc_window_has_no_consistent_rule() {
    let r = subst::derive_rule(&ctx(PLASTIC), &WindowVector::uniform(3, 1.0), 100.0);
    assert!(matches!(r, Err(Error::OccurrenceInconsistent(_))), "{r:?}");
}

#[test]
fn incidence_spectral_radius() {
    assert!((subst::spectral_radius(&[vec![1, 1], vec![1, 0]]).unwrap() - PHI).abs() < 1e-12);
    assert!((subst::spectral_radius(&[vec![0, 1, 0], vec![0, 0, 1], vec![1, 1, 0]]).unwrap() - 1.324717957244746).abs() < 1e-12);
}
