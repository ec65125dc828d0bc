#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use pvmra::algnum::MinPolyContext;
use pvmra::qlat::WindowVector;

pub const PHI: f64 = 1.618_033_988_749_895;
pub const GOLDEN: &[i64] = &[-1, -1];
pub const PLASTIC: &[i64] = &[-1, -1, 0];
pub const QUARTIC: &[i64] = &[-1, 0, 0, -1];

pub fn ctx(c: &[i64]) -> Arc<MinPolyContext> {
    MinPolyContext::new(c).unwrap()
}

/// Test lattices: golden, plastic and quartic contexts with a few windows.
pub fn lattice_matrix() -> Vec<(Arc<MinPolyContext>, WindowVector, f64)> {
    let mut out = Vec::new();
    for s in [0.6, 1.0, 1.7] {
        out.push((ctx(GOLDEN), WindowVector::uniform(2, s), 60.0));
        out.push((ctx(PLASTIC), WindowVector::uniform(3, s), 60.0));
        out.push((ctx(QUARTIC), WindowVector::uniform(4, s), 40.0));
    }
    out
}

/// Golden 𝔏(σ) ∩ [-L, L] by scanning every ℓ with |ℓ_i| <= 40, written out
/// directly from x = ℓ_0 + ℓ_1 φ and x' = ℓ_0 - ℓ_1 / φ. Points within `band`
/// of the window or of ±L are left out, matching the generator's exclusion.
pub fn golden_brute_force(sigma: f64, half_width: f64, band: f64) -> BTreeSet<Vec<i64>> {
    let mut out = BTreeSet::new();
    for a in -40i64..=40 {
        for b in -40i64..=40 {
            let x = a as f64 + b as f64 * PHI;
            let conj = a as f64 - b as f64 / PHI;
            if x.abs() <= half_width - band && sigma - conj.abs() >= band {
                out.insert(vec![a, b]);
            }
        }
    }
    out
}
