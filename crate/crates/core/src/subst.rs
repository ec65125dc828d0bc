//! Substitution rules on the gaps of a quasilattice.
//!
//! A rule is read off a generated point set: each tile [x, x + c) is inflated
//! by λ and the points of 𝔏(σ) inside the image split it into child tiles.
//! Tiles are typed by their gap together with `r` neighbouring gaps on each
//! side (the collar). The collar radius is raised until every type
//! decomposes the same way at every observed occurrence.
//!
//! Positions, offsets and gap lengths are integer preimages in the power basis
//! of Z[λ], so all bookkeeping is exact.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algnum::{rational_to_f64, MinPolyContext};
use crate::error::{Error, Result};
use crate::linalg::{int, Rational};
use crate::poly;
use crate::qlat::{
    add_preimages, embed_integer, gap_alphabet, generate, inflate_preimage, sub_preimages, Quasilattice,
    WindowVector,
};

pub const MIN_OCCURRENCES: usize = 3;
pub const DEFAULT_MAX_COLLAR: usize = 3;
pub const DEFAULT_EXPAND_BUDGET: usize = 10_000_000;

/// A tile type: its gap and the gaps around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileType {
    /// Preimage of the gap length c_j.
    pub gap: Vec<i64>,
    /// Gaps at positions -r..=r around the tile; `collar[r] == gap`.
    pub collar: Vec<Vec<i64>>,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Child {
    /// Offset from the left end of the inflated tile.
    pub offset: Vec<i64>,
    pub child: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubstitutionRule {
    /// Coefficients c_0..c_{n-1} of the minimal polynomial.
    pub poly: Vec<i64>,
    pub window: WindowVector,
    pub collar_radius: usize,
    /// Type 0 is the tile [0, c_1) at the origin.
    pub types: Vec<TileType>,
    pub decompositions: Vec<Vec<Child>>,
    /// Occurrences that were compared for each type.
    pub occurrences: Vec<usize>,
    #[serde(skip)]
    ctx: Option<Arc<MinPolyContext>>,
}

#[derive(Debug, Clone, Copy)]
pub struct DeriveOptions {
    pub max_collar: usize,
    pub min_occurrences: usize,
}

impl Default for DeriveOptions {
    fn default() -> Self {
        DeriveOptions { max_collar: DEFAULT_MAX_COLLAR, min_occurrences: MIN_OCCURRENCES }
    }
}

pub fn derive_rule(ctx: &Arc<MinPolyContext>, window: &WindowVector, probe: f64) -> Result<SubstitutionRule> {
    derive_rule_with(ctx, window, probe, DeriveOptions::default())
}

type Collar = Vec<Vec<i64>>;
type Decomposition = Vec<(Vec<i64>, Collar)>;

#[derive(Debug, Clone, Copy)]
struct Occurrences {
    count: usize,
    /// Every occurrence has the origin inside its collar.
    near_origin: bool,
}

type Seen = BTreeMap<Collar, BTreeMap<Decomposition, Occurrences>>;

/// Collar of radius r around gap i (points i, i+1), if it fits in the range.
fn collar_at(q: &Quasilattice, i: usize, r: usize) -> Option<Collar> {
    let pts = q.points();
    if i < r || i + r + 1 >= pts.len() {
        return None;
    }
    (i - r..=i + r)
        .map(|t| Some(sub_preimages(&pts[t + 1].preimage, &pts[t].preimage)))
        .collect()
}

/// Image of tile i under λ as an index range [i0, i1) of gaps, with the
/// preimage of its left end.
fn image_range(ctx: &MinPolyContext, q: &Quasilattice, i: usize) -> Option<(usize, usize)> {
    let pts = q.points();
    let a = inflate_preimage(ctx, &pts[i].preimage);
    let b = inflate_preimage(ctx, &pts[i + 1].preimage);
    let (ia, ib) = (q.index_of(&a)?, q.index_of(&b)?);
    Some(if ia < ib { (ia, ib) } else { (ib, ia) })
}

fn describe(d: &Decomposition) -> String {
    let parts: Vec<String> = d.iter().map(|(o, c)| format!("{o:?}:{:?}", c[c.len() / 2])).collect();
    format!("[{}]", parts.join(", "))
}

pub fn derive_rule_with(
    ctx: &Arc<MinPolyContext>,
    window: &WindowVector,
    probe: f64,
    opts: DeriveOptions,
) -> Result<SubstitutionRule> {
    if !ctx.unit_constant() {
        return Err(Error::NotUnitConstant);
    }
    if !ctx.is_pv() {
        return Err(Error::NotPv);
    }
    window.validate(ctx)?;
    let small = generate(ctx, window, probe)?;
    let q = generate(ctx, window, 2.0 * probe)?;
    let before: Vec<Vec<i64>> = gap_alphabet(&small, 0.0)?.into_iter().map(|g| g.preimage).collect();
    let after: Vec<Vec<i64>> = gap_alphabet(&q, 0.0)?.into_iter().map(|g| g.preimage).collect();
    if before != after {
        return Err(Error::AlphabetUnstable { before: before.len(), after: after.len() });
    }
    let origin = q
        .index_of(&vec![0; ctx.degree()])
        .ok_or(Error::TooFewPoints { found: 0, needed: 1 })?;
    if origin + 1 >= q.len() {
        return Err(Error::TooFewPoints { found: q.len(), needed: 2 });
    }

    let mut last_conflict = String::new();
    for r in 0..=opts.max_collar {
        // type -> decomposition -> count
        let mut seen: Seen = BTreeMap::new();
        for i in 0..q.len() - 1 {
            let Some(key) = collar_at(&q, i, r) else { continue };
            let Some((i0, i1)) = image_range(ctx, &q, i) else { continue };
            let left = &q.points()[i0].preimage;
            let mut dec = Vec::with_capacity(i1 - i0);
            for t in i0..i1 {
                match collar_at(&q, t, r) {
                    Some(c) => dec.push((sub_preimages(&q.points()[t].preimage, left), c)),
                    None => break,
                }
            }
            if dec.len() != i1 - i0 {
                continue;
            }
            let near_origin = i <= origin + r && origin <= i + r + 1;
            let slot = seen.entry(key).or_default().entry(dec).or_insert(Occurrences { count: 0, near_origin: true });
            slot.count += 1;
            slot.near_origin &= near_origin;
        }
        let conflicts: Vec<String> = seen
            .iter()
            .filter(|(_, v)| v.len() > 1)
            .map(|(k, v)| {
                let alts: Vec<String> =
                    v.iter().map(|(d, o)| format!("{} x{}", describe(d), o.count)).collect();
                format!("gap {:?} at collar {r}: {}", k[r], alts.join(" vs "))
            })
            .collect();
        if !conflicts.is_empty() {
            last_conflict = conflicts.join("; ");
            continue;
        }
        let Some(origin_key) = collar_at(&q, origin, r) else {
            return Err(Error::TooFewPoints { found: q.len(), needed: 2 * r + 2 });
        };
        if !seen.contains_key(&origin_key) {
            return Err(Error::TooFewOccurrences { tile: 0, found: 0, needed: opts.min_occurrences });
        }
        return assemble(ctx, window, r, origin_key, seen, opts.min_occurrences);
    }
    Err(Error::OccurrenceInconsistent(last_conflict))
}

fn assemble(
    ctx: &Arc<MinPolyContext>,
    window: &WindowVector,
    r: usize,
    origin_key: Collar,
    seen: Seen,
    min_occurrences: usize,
) -> Result<SubstitutionRule> {
    let value = |p: &[i64]| embed_integer(ctx, p)[0].re;
    // keep the types reachable from the origin tile
    let mut reachable: BTreeMap<&Collar, ()> = BTreeMap::new();
    let mut stack = vec![&origin_key];
    while let Some(k) = stack.pop() {
        if reachable.insert(k, ()).is_some() {
            continue;
        }
        if let Some(decs) = seen.get(k) {
            for (_, c) in decs.keys().next().expect("nonempty") {
                stack.push(c);
            }
        }
    }
    let mut keys: Vec<&Collar> = seen
        .keys()
        .filter(|k| **k != origin_key && reachable.contains_key(k))
        .collect();
    keys.sort_by(|a, b| value(&a[r]).total_cmp(&value(&b[r])).then_with(|| a.cmp(b)));
    keys.insert(0, &origin_key);
    let index: HashMap<&Collar, usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();

    let mut types = Vec::with_capacity(keys.len());
    let mut decompositions = Vec::with_capacity(keys.len());
    let mut occurrences = Vec::with_capacity(keys.len());
    for (t, key) in keys.iter().enumerate() {
        let Some(decs) = seen.get(*key) else {
            return Err(Error::TooFewOccurrences { tile: t, found: 0, needed: min_occurrences });
        };
        let (dec, occ) = decs.iter().next().expect("nonempty");
        let count = occ.count;
        // a configuration around the origin can be singular and occur only
        // once; its decomposition is still read off exactly
        if count < min_occurrences && !occ.near_origin {
            return Err(Error::TooFewOccurrences { tile: t, found: count, needed: min_occurrences });
        }
        let mut children = Vec::with_capacity(dec.len());
        for (offset, collar) in dec {
            let &child = index.get(collar).ok_or(Error::TooFewOccurrences {
                tile: t,
                found: 0,
                needed: min_occurrences,
            })?;
            children.push(Child { offset: offset.clone(), child });
        }
        types.push(TileType { gap: key[r].clone(), collar: (*key).clone(), length: value(&key[r]) });
        decompositions.push(children);
        occurrences.push(count);
    }
    let rule = SubstitutionRule {
        poly: ctx.coeffs().to_vec(),
        window: window.clone(),
        collar_radius: r,
        types,
        decompositions,
        occurrences,
        ctx: Some(Arc::clone(ctx)),
    };
    rule.validate()?;
    Ok(rule)
}

impl SubstitutionRule {
    pub fn context(&self) -> Result<Arc<MinPolyContext>> {
        match &self.ctx {
            Some(c) => Ok(Arc::clone(c)),
            None => MinPolyContext::new(&self.poly),
        }
    }

    pub fn type_count(&self) -> usize {
        self.types.len()
    }

    /// Check the exact length equation, the abutting of children and index ranges.
    pub fn validate(&self) -> Result<()> {
        let ctx = self.context()?;
        let n = ctx.degree();
        let m = self.types.len();
        if m == 0 || self.decompositions.len() != m {
            return Err(Error::InvalidArgument("rule needs one decomposition per type".into()));
        }
        let positive = ctx.lambda() > 0.0;
        for (j, (ty, dec)) in self.types.iter().zip(&self.decompositions).enumerate() {
            if ty.gap.len() != n {
                return Err(Error::InvalidArgument(format!("type {j}: gap has wrong dimension")));
            }
            let mut expected = vec![0i64; n];
            for (k, c) in dec.iter().enumerate() {
                if c.child >= m {
                    return Err(Error::InvalidArgument(format!("type {j}: child index {} out of range", c.child)));
                }
                if c.offset != expected {
                    return Err(Error::InvalidArgument(format!(
                        "type {j}: child {k} at {:?} does not abut previous tile ({expected:?})",
                        c.offset
                    )));
                }
                expected = add_preimages(&expected, &self.types[c.child].gap);
            }
            let mut image = inflate_preimage(&ctx, &ty.gap);
            if !positive {
                image.iter_mut().for_each(|v| *v = -*v);
            }
            if expected != image {
                return Err(Error::InvalidArgument(format!(
                    "type {j}: children sum to {expected:?}, |lambda| c_j is {image:?}"
                )));
            }
        }
        Ok(())
    }

    /// Child counts: `m[j][i]` copies of type i inside the inflation of type j.
    pub fn incidence_matrix(&self) -> Vec<Vec<u64>> {
        let m = self.types.len();
        self.decompositions
            .iter()
            .map(|dec| {
                let mut row = vec![0u64; m];
                for c in dec {
                    row[c.child] += 1;
                }
                row
            })
            .collect()
    }

    /// Spectral radius of the incidence matrix.
    pub fn perron_root(&self) -> Result<f64> {
        spectral_radius(&self.incidence_matrix())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut rule: SubstitutionRule =
            serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("rule JSON: {e}")))?;
        let ctx = MinPolyContext::new(&rule.poly)?;
        rule.window.validate(&ctx)?;
        for ty in &mut rule.types {
            ty.length = embed_integer(&ctx, &ty.gap)[0].re;
        }
        rule.ctx = Some(ctx);
        rule.validate()?;
        Ok(rule)
    }
}

/// Characteristic polynomial of an integer matrix (Faddeev–LeVerrier over Q),
/// coefficients from the constant term upward.
pub fn characteristic_polynomial(a: &[Vec<u64>]) -> Vec<Rational> {
    let n = a.len();
    let a: Vec<Vec<Rational>> = a.iter().map(|r| r.iter().map(|&v| int(v as i64)).collect()).collect();
    let mut coeffs = vec![Rational::zero(); n + 1];
    coeffs[n] = Rational::one();
    let mut m = vec![vec![Rational::zero(); n]; n];
    for k in 1..=n {
        // m <- a m + c_{n-k+1} I
        let mut next = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = Rational::zero();
                for l in 0..n {
                    if !a[i][l].is_zero() && !m[l][j].is_zero() {
                        s += &a[i][l] * &m[l][j];
                    }
                }
                next[i][j] = s;
            }
            next[i][i] += &coeffs[n - k + 1];
        }
        m = next;
        let mut tr = Rational::zero();
        for i in 0..n {
            for l in 0..n {
                if !a[i][l].is_zero() && !m[l][i].is_zero() {
                    tr += &a[i][l] * &m[l][i];
                }
            }
        }
        coeffs[n - k] = -tr / int(k as i64);
    }
    coeffs
}

/// Largest modulus among the eigenvalues of a nonnegative integer matrix.
pub fn spectral_radius(a: &[Vec<u64>]) -> Result<f64> {
    let cp: Vec<Complex64> =
        characteristic_polynomial(a).iter().map(|c| Complex64::new(rational_to_f64(c), 0.0)).collect();
    let roots = poly::roots(&cp)?;
    Ok(roots
        .into_iter()
        .map(|z| poly::polish(&cp, z, 5).norm())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpandedPoint {
    pub value: f64,
    pub preimage: Vec<i64>,
}

pub fn expand(rule: &SubstitutionRule, k: usize) -> Result<Vec<ExpandedPoint>> {
    expand_with_budget(rule, k, DEFAULT_EXPAND_BUDGET)
}

/// Left endpoints of the tiles of λᵏ[0, c_1) after k substitution steps.
pub fn expand_with_budget(rule: &SubstitutionRule, k: usize, budget: usize) -> Result<Vec<ExpandedPoint>> {
    let ctx = rule.context()?;
    let positive = ctx.lambda() > 0.0;
    let mut tiles: Vec<(Vec<i64>, usize)> = vec![(vec![0; ctx.degree()], 0)];
    for _ in 0..k {
        let count: usize = tiles.iter().map(|(_, t)| rule.decompositions[*t].len()).sum();
        if count > budget {
            return Err(Error::Overflow { count, budget });
        }
        let mut next = Vec::with_capacity(count);
        for (left, t) in &tiles {
            let anchor = if positive { left.clone() } else { add_preimages(left, &rule.types[*t].gap) };
            let base = inflate_preimage(&ctx, &anchor);
            for c in &rule.decompositions[*t] {
                next.push((add_preimages(&base, &c.offset), c.child));
            }
        }
        tiles = next;
    }
    let mut out: Vec<ExpandedPoint> = tiles
        .into_iter()
        .map(|(p, _)| ExpandedPoint { value: embed_integer(&ctx, &p)[0].re, preimage: p })
        .collect();
    out.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.preimage.cmp(&b.preimage)));
    Ok(out)
}

/// One matrix of the vector refinement equation
/// χ_{I_j}(x) = Σ_τ Σ_i a_τ[j][i] χ_{I_i}(λx - τ), with I_j = [0, c_j).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaskMatrix {
    /// τ relative to λ·0.
    pub offset: Vec<i64>,
    pub offset_value: f64,
    pub matrix: Vec<Vec<u8>>,
}

/// Group the children of every type by absolute offset τ.
pub fn vector_mask(rule: &SubstitutionRule) -> Result<Vec<MaskMatrix>> {
    let ctx = rule.context()?;
    let positive = ctx.lambda() > 0.0;
    let m = rule.types.len();
    let mut by_offset: BTreeMap<Vec<i64>, Vec<Vec<u8>>> = BTreeMap::new();
    for (j, dec) in rule.decompositions.iter().enumerate() {
        // left end of λ[0, c_j) is 0 for λ > 0 and λ c_j otherwise
        let base = if positive { vec![0; ctx.degree()] } else { inflate_preimage(&ctx, &rule.types[j].gap) };
        for c in dec {
            let tau = add_preimages(&base, &c.offset);
            by_offset.entry(tau).or_insert_with(|| vec![vec![0u8; m]; m])[j][c.child] = 1;
        }
    }
    let mut out: Vec<MaskMatrix> = by_offset
        .into_iter()
        .map(|(offset, matrix)| MaskMatrix { offset_value: embed_integer(&ctx, &offset)[0].re, offset, matrix })
        .collect();
    out.sort_by(|a, b| a.offset_value.total_cmp(&b.offset_value));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub samples: usize,
    pub mismatches: usize,
    /// Samples where a side was neither 0 nor 1.
    pub non_binary: usize,
}

/// Compare both sides of the vector refinement equation at one point.
pub fn reconstruct_at(rule: &SubstitutionRule, mask: &[MaskMatrix], lambda: f64, x: f64) -> Vec<(u32, u32)> {
    let m = rule.types.len();
    let mut rhs = vec![0u32; m];
    for term in mask {
        let y = lambda * x - term.offset_value;
        for j in 0..m {
            for i in 0..m {
                if term.matrix[j][i] == 1 && 0.0 <= y && y < rule.types[i].length {
                    rhs[j] += 1;
                }
            }
        }
    }
    (0..m)
        .map(|j| (u32::from(0.0 <= x && x < rule.types[j].length), rhs[j]))
        .collect()
}

/// Random-point check of the vector refinement equation away from breakpoints.
pub fn check_reconstruction(rule: &SubstitutionRule, samples: usize, seed: u64) -> Result<ReconstructionReport> {
    let ctx = rule.context()?;
    let lambda = ctx.lambda();
    let mask = vector_mask(rule)?;
    let cmax = rule.types.iter().map(|t| t.length).fold(0.0, f64::max);
    let mut breaks: Vec<f64> = vec![0.0];
    breaks.extend(rule.types.iter().map(|t| t.length));
    for term in &mask {
        for t in &rule.types {
            breaks.push(term.offset_value / lambda);
            breaks.push((term.offset_value + t.length) / lambda);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ReconstructionReport { samples: 0, mismatches: 0, non_binary: 0 };
    while report.samples < samples {
        let x = rng.gen_range(-0.5 * cmax..1.5 * cmax);
        if breaks.iter().any(|b| (x - b).abs() < 1e-9) {
            continue;
        }
        report.samples += 1;
        let pairs = reconstruct_at(rule, &mask, lambda, x);
        if pairs.iter().any(|(l, r)| l != r) {
            report.mismatches += 1;
        }
        if pairs.iter().any(|(_, r)| *r > 1) {
            report.non_binary += 1;
        }
    }
    Ok(report)
}

/// Total count of ones over all matrices.
pub fn mask_weight(mask: &[MaskMatrix]) -> usize {
    mask.iter().flat_map(|t| t.matrix.iter().flatten()).filter(|&&v| v == 1).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Arc<MinPolyContext> {
        MinPolyContext::new(&[-1, -1]).unwrap()
    }

    #[test]
    fn golden_rule_is_exact() {
        let rule = derive_rule(&golden(), &WindowVector::new(vec![0.0, 1.0]), 50.0).unwrap();
        assert!(rule.type_count() >= 2);
        rule.validate().unwrap();
        let q = generate(&golden(), &WindowVector::new(vec![0.0, 1.0]), 5.0).unwrap();
        let o = q.index_of(&[0, 0]).unwrap();
        assert_eq!(rule.types[0].gap, q.points()[o + 1].preimage);
        assert!((rule.perron_root().unwrap() - golden().lambda()).abs() < 1e-9);
    }

    #[test]
    fn expand_base_case() {
        let rule = derive_rule(&golden(), &WindowVector::new(vec![0.0, 1.0]), 50.0).unwrap();
        let p = expand(&rule, 0).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].preimage, vec![0, 0]);
    }

    #[test]
    fn non_unit_rejected() {
        let ctx = MinPolyContext::new(&[2, -4]).unwrap();
        let err = derive_rule(&ctx, &WindowVector::new(vec![0.0, 1.0]), 20.0).unwrap_err();
        assert!(matches!(err, Error::NotUnitConstant));
    }

    #[test]
    fn charpoly_of_fibonacci_matrix() {
        let cp = characteristic_polynomial(&[vec![1, 1], vec![1, 0]]);
        assert_eq!(cp, vec![int(-1), int(-1), int(1)]);
        let r = spectral_radius(&[vec![1, 1], vec![1, 0]]).unwrap();
        assert!((r - 1.618_033_988_749_895).abs() < 1e-14);
    }

    #[test]
    fn overflow_guard() {
        let rule = derive_rule(&golden(), &WindowVector::new(vec![0.0, 1.0]), 50.0).unwrap();
        assert!(matches!(expand_with_budget(&rule, 20, 100), Err(Error::Overflow { .. })));
    }
}
