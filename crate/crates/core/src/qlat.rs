//! Cut-and-project quasilattices
//! 𝔏(σ) = { (Vᵀℓ)_1 : ℓ ∈ Zⁿ, |(Vᵀℓ)_j| < σ_j for j >= 2 }
//! and empirical checks of their lattice-like properties: group laws, minimal
//! gap, relative density, inflation symmetry, finite gap alphabet and the
//! Meyer property.
//!
//! A point is identified by its integer preimage ℓ, i.e. its coordinates in
//! the power basis of Z[λ]. Every set comparison below is done on preimages;
//! floats are only used for ordering and for the window test.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algnum::MinPolyContext;
use crate::error::{Error, Result};
use crate::linalg;

pub const DEFAULT_CELL_BUDGET: f64 = 1e8;

/// Window bounds σ_1..σ_n on the conjugate embeddings, σ_1 = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowVector(pub Vec<f64>);

impl WindowVector {
    pub fn new(values: Vec<f64>) -> Self {
        WindowVector(values)
    }

    /// [0, s, s, ..., s].
    pub fn uniform(n: usize, s: f64) -> Self {
        let mut v = vec![s; n];
        v[0] = 0.0;
        WindowVector(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Admissibility: σ_1 = 0, σ_j > 0 otherwise, equal bounds on each complex
    /// conjugate pair.
    pub fn validate(&self, ctx: &MinPolyContext) -> Result<()> {
        let n = ctx.degree();
        if self.0.len() != n {
            return Err(Error::InadmissibleWindow(format!("expected {n} entries, got {}", self.0.len())));
        }
        if self.0[0] != 0.0 {
            return Err(Error::InadmissibleWindow("sigma_1 must be 0".into()));
        }
        for j in 1..n {
            let s = self.0[j];
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InadmissibleWindow(format!("sigma_{} = {s} must be positive", j + 1)));
            }
            let p = ctx.conjugate_partner(j);
            if p != j && self.0[p] != s {
                return Err(Error::InadmissibleWindow(format!(
                    "conjugate pair ({}, {}) has unequal bounds",
                    j.min(p) + 1,
                    j.max(p) + 1
                )));
            }
        }
        Ok(())
    }

    /// Componentwise σ <= ξ.
    pub fn le(&self, other: &WindowVector) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &WindowVector) -> WindowVector {
        WindowVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, f: f64) -> WindowVector {
        WindowVector(self.0.iter().map(|a| a * f).collect())
    }

    /// ∏_{j>=2} σ_j^{-1}: lower bound on |x| for nonzero x ∈ 𝔏(σ).
    pub fn nonzero_bound(&self) -> f64 {
        self.0[1..].iter().map(|s| 1.0 / s).product()
    }

    /// 2^{1-n} ∏_{j>=2} σ_j^{-1}: lower bound on the distance between points.
    pub fn min_gap_bound(&self) -> f64 {
        self.nonzero_bound() * 2f64.powi(1 - self.0.len() as i32)
    }
}

/// |det V| ∏ σ_j^{-1}: any L above this contains a nonzero point in (-L, L).
pub fn minkowski_half_width(ctx: &MinPolyContext, window: &WindowVector) -> f64 {
    let r = ctx.roots();
    let mut det = 1.0;
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            det *= (r[i] - r[j]).norm();
        }
    }
    det * window.nonzero_bound()
}

/// Conjugate embeddings of an integer preimage.
pub fn embed_integer(ctx: &MinPolyContext, preimage: &[i64]) -> Vec<Complex64> {
    ctx.roots()
        .iter()
        .map(|&z| preimage.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c as f64))
        .collect()
}

/// min_{j>=2} (σ_j - |y_j|); positive iff strictly inside the window.
pub fn window_margin(window: &WindowVector, embedding: &[Complex64]) -> f64 {
    embedding[1..]
        .iter()
        .zip(&window.0[1..])
        .map(|(y, s)| s - y.norm())
        .fold(f64::INFINITY, f64::min)
}

/// λ·ℓ in preimage coordinates: Cᵀℓ.
pub fn inflate_preimage(ctx: &MinPolyContext, preimage: &[i64]) -> Vec<i64> {
    let n = preimage.len();
    let c = ctx.coeffs();
    (0..n)
        .map(|k| (if k > 0 { preimage[k - 1] } else { 0 }) - c[k] * preimage[n - 1])
        .collect()
}

/// λ^{-1}·ℓ for unit λ, the inverse of [`inflate_preimage`].
pub fn deflate_preimage(ctx: &MinPolyContext, preimage: &[i64]) -> Option<Vec<i64>> {
    let n = preimage.len();
    let c = ctx.coeffs();
    if c[0].abs() != 1 {
        return None;
    }
    // invert new_k = l_{k-1} - c_k l_{n-1}
    let top = -preimage[0] * c[0];
    let mut out = vec![0; n];
    out[n - 1] = top;
    for k in 1..n {
        out[k - 1] = preimage[k] + c[k] * top;
    }
    Some(out)
}

pub fn add_preimages(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub_preimages(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QPoint {
    pub value: f64,
    pub preimage: Vec<i64>,
    /// min_j (σ_j - |(Vᵀℓ)_j|).
    pub margin: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct GenerateOptions {
    pub cell_budget: f64,
    /// Exclusion band around the window boundary and around ±L.
    pub boundary_tol: Option<f64>,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions { cell_budget: DEFAULT_CELL_BUDGET, boundary_tol: None }
    }
}

/// 𝔏(σ) ∩ [-L, L], sorted, with undecidable near-boundary candidates removed.
#[derive(Debug, Clone)]
pub struct Quasilattice {
    ctx: Arc<MinPolyContext>,
    window: WindowVector,
    half_width: f64,
    points: Vec<QPoint>,
    skipped: Vec<f64>,
    index: HashMap<Vec<i64>, usize>,
}

pub fn generate(ctx: &Arc<MinPolyContext>, window: &WindowVector, half_width: f64) -> Result<Quasilattice> {
    generate_with(ctx, window, half_width, GenerateOptions::default())
}

/// Enumerate ℓ_1..ℓ_{n-1} over the bounding box of
/// X = (Vᵀ)^{-1}[(-L, L) × ∏(-σ_j, σ_j)], solve each embedding constraint for
/// the admissible ℓ_0 and keep the candidates inside X.
pub fn generate_with(
    ctx: &Arc<MinPolyContext>,
    window: &WindowVector,
    half_width: f64,
    opts: GenerateOptions,
) -> Result<Quasilattice> {
    window.validate(ctx)?;
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::InvalidArgument(format!("half width must be positive, got {half_width}")));
    }
    let tol = opts.boundary_tol.unwrap_or(ctx.tolerances().boundary);
    let n = ctx.degree();
    let roots = ctx.roots();
    let powers: Vec<Vec<Complex64>> =
        roots.iter().map(|&z| (0..n).map(|i| z.powu(i as u32)).collect()).collect();

    // real form of Vᵀ: one row per real embedding, Re/Im rows per complex pair
    let mut rows = Vec::with_capacity(n);
    let mut bounds = Vec::with_capacity(n);
    let mut j = 0;
    while j < n {
        let bound = if j == 0 { half_width } else { window.0[j] };
        if roots[j].im == 0.0 {
            rows.push(powers[j].iter().map(|z| z.re).collect::<Vec<_>>());
            bounds.push(bound);
            j += 1;
        } else {
            rows.push(powers[j].iter().map(|z| z.re).collect());
            rows.push(powers[j].iter().map(|z| z.im).collect());
            bounds.push(bound);
            bounds.push(bound);
            j += 2;
        }
    }
    let inv = linalg::invert(&rows)
        .ok_or_else(|| Error::InvalidArgument("Vandermonde matrix is singular".into()))?;
    let extent: Vec<i64> = inv
        .iter()
        .map(|row| {
            let h: f64 = row.iter().zip(&bounds).map(|(a, b)| a.abs() * b).sum();
            (h + 1e-9).ceil() as i64
        })
        .collect();
    // ℓ_0 is solved for directly, so the work is the ℓ_1..ℓ_{n-1} box plus
    // the number of candidates, about vol(X)
    let volume: f64 = bounds.iter().map(|b| 2.0 * (b + tol)).product::<f64>() / linalg::det_f64(&rows).abs();
    let cells: f64 = extent[1..].iter().map(|&e| (2 * e + 1) as f64).product::<f64>().max(volume);
    if cells > opts.cell_budget {
        return Err(Error::WindowTooLarge { cells, budget: opts.cell_budget });
    }
    let radius: Vec<f64> =
        (0..n).map(|j| if j == 0 { half_width } else { window.0[j] } + tol).collect();

    let slabs: Vec<i64> = (-extent[1]..=extent[1]).collect();
    let per_slab: Vec<(Vec<QPoint>, Vec<f64>)> = slabs
        .par_iter()
        .map(|&l1| {
            let mut found = Vec::new();
            let mut skipped = Vec::new();
            let mut l = vec![0i64; n];
            l[1] = l1;
            for k in 2..n {
                l[k] = -extent[k];
            }
            loop {
                // every embedding confines ℓ_0 to an interval
                let (mut lo, mut hi) = (-extent[0] as f64, extent[0] as f64);
                for (j, p) in powers.iter().enumerate() {
                    let w: Complex64 = l[1..].iter().zip(&p[1..]).map(|(&c, &z)| z * c as f64).sum();
                    let h2 = radius[j] * radius[j] - w.im * w.im;
                    if h2 < 0.0 {
                        hi = lo - 1.0;
                        break;
                    }
                    let h = h2.sqrt();
                    lo = lo.max(-w.re - h);
                    hi = hi.min(-w.re + h);
                }
                let mut l0 = lo.ceil() as i64;
                while l0 as f64 <= hi {
                    l[0] = l0;
                    let y: Vec<Complex64> = powers
                        .iter()
                        .map(|p| l.iter().zip(p).map(|(&c, &z)| z * c as f64).sum())
                        .collect();
                    let value = y[0].re;
                    let margin = window_margin(window, &y);
                    if value.abs() < half_width + tol && margin > -tol {
                        if margin >= tol && value.abs() <= half_width - tol {
                            found.push(QPoint { value, preimage: l.clone(), margin });
                        } else {
                            skipped.push(value);
                        }
                    }
                    l0 += 1;
                }
                // odometer over coordinates 2..n
                let mut k = n - 1;
                loop {
                    if k <= 1 {
                        return (found, skipped);
                    }
                    if l[k] < extent[k] {
                        l[k] += 1;
                        break;
                    }
                    l[k] = -extent[k];
                    k -= 1;
                }
            }
        })
        .collect();

    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (p, s) in per_slab {
        points.extend(p);
        skipped.extend(s);
    }
    points.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.preimage.cmp(&b.preimage)));
    skipped.sort_by(f64::total_cmp);
    let index = points.iter().enumerate().map(|(i, p)| (p.preimage.clone(), i)).collect();
    Ok(Quasilattice {
        ctx: Arc::clone(ctx),
        window: window.clone(),
        half_width,
        points,
        skipped,
        index,
    })
}

impl Quasilattice {
    pub fn context(&self) -> &Arc<MinPolyContext> {
        &self.ctx
    }

    pub fn window(&self) -> &WindowVector {
        &self.window
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> &[QPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of candidates excluded because they sat within the boundary band.
    pub fn boundary_skipped(&self) -> usize {
        self.skipped.len()
    }

    pub fn skipped_values(&self) -> &[f64] {
        &self.skipped
    }

    pub fn index_of(&self, preimage: &[i64]) -> Option<usize> {
        self.index.get(preimage).copied()
    }

    pub fn contains(&self, preimage: &[i64]) -> bool {
        self.index.contains_key(preimage)
    }

    /// Index range of the points with |value| <= L - margin.
    pub fn interior_range(&self, margin: f64) -> std::ops::Range<usize> {
        let lim = self.half_width - margin;
        let lo = self.points.partition_point(|p| p.value < -lim);
        let hi = self.points.partition_point(|p| p.value <= lim);
        lo..hi.max(lo)
    }

    pub fn interior(&self, margin: f64) -> &[QPoint] {
        &self.points[self.interior_range(margin)]
    }

    /// Index of the point nearest to `x` (ties go left).
    pub fn nearest(&self, x: f64) -> Option<usize> {
        if self.points.is_empty() {
            return None;
        }
        let i = self.points.partition_point(|p| p.value < x);
        match i {
            0 => Some(0),
            i if i == self.points.len() => Some(i - 1),
            i => {
                if x - self.points[i - 1].value <= self.points[i].value - x {
                    Some(i - 1)
                } else {
                    Some(i)
                }
            }
        }
    }

    /// CSV dump: value, l_0..l_{n-1}, margin with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.ctx.degree();
        let mut out = String::from("value");
        for i in 0..n {
            let _ = write!(out, ",l_{i}");
        }
        out.push_str(",margin\n");
        for p in &self.points {
            let _ = write!(out, "{}", fmt17(p.value));
            for c in &p.preimage {
                let _ = write!(out, ",{c}");
            }
            let _ = writeln!(out, ",{}", fmt17(p.margin));
        }
        out
    }

    /// One-row SVG rendering of the point set.
    pub fn to_svg(&self) -> String {
        let w = 1000.0;
        let scale = w / (2.0 * self.half_width);
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"40\">\n<line x1=\"0\" y1=\"20\" x2=\"{w}\" y2=\"20\" stroke=\"#999\"/>\n"
        );
        for p in &self.points {
            let _ = writeln!(
                out,
                "<circle cx=\"{:.3}\" cy=\"20\" r=\"2\"/>",
                (p.value + self.half_width) * scale
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Format with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON report shape shared by all lattice checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub lemma: String,
    pub violations: usize,
    pub details: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapLetter {
    pub value: f64,
    pub preimage: Vec<i64>,
    pub multiplicity: usize,
}

/// Distinct consecutive differences among points with |x| <= L - margin,
/// keyed by exact preimage difference.
pub fn gap_alphabet(q: &Quasilattice, margin: f64) -> Result<Vec<GapLetter>> {
    let range = q.interior_range(margin);
    if range.len() < 2 {
        return Err(Error::TooFewPoints { found: range.len(), needed: 2 });
    }
    let mut counts: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    for i in range.start..range.end - 1 {
        let d = sub_preimages(&q.points[i + 1].preimage, &q.points[i].preimage);
        *counts.entry(d).or_default() += 1;
    }
    let mut letters: Vec<GapLetter> = counts
        .into_iter()
        .map(|(preimage, multiplicity)| {
            let value = embed_integer(&q.ctx, &preimage)[0].re;
            GapLetter { value, preimage, multiplicity }
        })
        .collect();
    letters.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(letters)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupLawReport {
    /// Whether σ <= ξ or ξ <= σ held, so that inclusion was tested.
    pub comparable: bool,
    pub inclusion_checked: usize,
    pub inclusion_violations: usize,
    /// For incomparable windows: a point of 𝔏(σ) outside 𝔏(ξ) was observed.
    pub non_inclusion_witness: bool,
    pub sums_checked: usize,
    pub sum_violations: usize,
    pub sums_undecided: usize,
    /// Fraction of 𝔏(σ+ξ) ∩ [-L/2, L/2] reached by a sum x + y.
    pub coverage: f64,
}

impl GroupLawReport {
    pub fn violations(&self) -> usize {
        self.inclusion_violations + self.sum_violations
    }

    pub fn report(&self) -> CheckReport {
        CheckReport {
            lemma: "group-laws".into(),
            violations: self.violations(),
            details: vec![serde_json::to_value(self).expect("serializable")],
        }
    }
}

/// Check 0 ∈ 𝔏, monotonicity in the window and 𝔏(σ) + 𝔏(ξ) ⊆ 𝔏(σ + ξ) on
/// [-L/2, L/2]; the reverse inclusion is only reported as coverage.
pub fn check_group_laws(
    ctx: &Arc<MinPolyContext>,
    sigma: &WindowVector,
    xi: &WindowVector,
    half_width: f64,
) -> Result<GroupLawReport> {
    sigma.validate(ctx)?;
    xi.validate(ctx)?;
    let tol = ctx.tolerances().boundary;
    let a = generate(ctx, sigma, half_width)?;
    let b = generate(ctx, xi, half_width)?;
    let sum_window = sigma.add(xi);
    let s = generate(ctx, &sum_window, half_width)?;
    let inner = half_width / 2.0;

    let (small, big, comparable) = if sigma.le(xi) {
        (&a, &b, true)
    } else if xi.le(sigma) {
        (&b, &a, true)
    } else {
        (&a, &b, false)
    };
    let mut inclusion_checked = 0;
    let mut inclusion_violations = 0;
    let mut witness = false;
    for p in small.interior(inner) {
        inclusion_checked += 1;
        let inside = big.contains(&p.preimage);
        if comparable && !inside {
            inclusion_violations += 1;
        }
        if !inside {
            witness = true;
        }
    }

    let mut sums_checked = 0;
    let mut sum_violations = 0;
    let mut undecided = 0;
    let mut hit: HashSet<usize> = HashSet::new();
    for x in a.points() {
        for y in b.points() {
            if (x.value + y.value).abs() > inner {
                continue;
            }
            sums_checked += 1;
            let z = add_preimages(&x.preimage, &y.preimage);
            if let Some(i) = s.index_of(&z) {
                hit.insert(i);
                continue;
            }
            let m = window_margin(&sum_window, &embed_integer(ctx, &z));
            if m.abs() < tol {
                undecided += 1;
            } else {
                sum_violations += 1;
            }
        }
    }
    let target = s.interior_range(inner);
    let covered = target.clone().filter(|i| hit.contains(i)).count();
    let coverage = if target.is_empty() { 1.0 } else { covered as f64 / target.len() as f64 };
    Ok(GroupLawReport {
        comparable,
        inclusion_checked,
        inclusion_violations,
        non_inclusion_witness: witness,
        sums_checked,
        sum_violations,
        sums_undecided: undecided,
        coverage,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InflationReport {
    pub checked: usize,
    /// Images that left the window or were missing from the generated set.
    pub violations: usize,
    pub min_image_margin: f64,
    /// Images violating the shrunken window [0, |λ_2|σ_2, ..., |λ_n|σ_n].
    pub shrunk_window_violations: usize,
    /// Points of 𝔏(shrunken σ) whose preimage under λ is missing from 𝔏(σ).
    pub surjectivity_violations: usize,
}

impl InflationReport {
    pub fn report(&self) -> CheckReport {
        CheckReport {
            lemma: "inflation".into(),
            violations: self.violations + self.shrunk_window_violations + self.surjectivity_violations,
            details: vec![serde_json::to_value(self).expect("serializable")],
        }
    }
}

/// λ𝔏(σ) = 𝔏([0, |λ_2|σ_2, ..., |λ_n|σ_n]) ⊆ 𝔏(σ), checked point by point via
/// the exact action ℓ ↦ Cᵀℓ.
pub fn check_inflation(q: &Quasilattice) -> Result<InflationReport> {
    let ctx = &q.ctx;
    if !ctx.unit_constant() {
        return Err(Error::NotUnitConstant);
    }
    let tol = ctx.tolerances().boundary;
    let lambda = ctx.lambda();
    let moduli: Vec<f64> = ctx.roots().iter().map(|z| z.norm()).collect();
    let shrunk = WindowVector(q.window.0.iter().zip(&moduli).map(|(s, m)| s * m).collect());
    let mut report = InflationReport {
        checked: 0,
        violations: 0,
        min_image_margin: f64::INFINITY,
        shrunk_window_violations: 0,
        surjectivity_violations: 0,
    };
    for p in &q.points {
        if (lambda * p.value).abs() > q.half_width - tol {
            continue;
        }
        report.checked += 1;
        let image = inflate_preimage(ctx, &p.preimage);
        let y = embed_integer(ctx, &image);
        let m = window_margin(&q.window, &y);
        report.min_image_margin = report.min_image_margin.min(m);
        if m <= 0.0 || !q.contains(&image) {
            report.violations += 1;
        }
        // |λ_j y_j| < |λ_j| σ_j up to rounding in the recomputed embedding
        if window_margin(&shrunk, &y) < -1e-12 * (1.0 + y.iter().map(|c| c.norm()).fold(0.0, f64::max)) {
            report.shrunk_window_violations += 1;
        }
    }
    for p in &q.points {
        if p.value.abs() > q.half_width - tol {
            continue;
        }
        let y = embed_integer(ctx, &p.preimage);
        if window_margin(&shrunk, &y) < tol {
            continue;
        }
        let pre = deflate_preimage(ctx, &p.preimage).ok_or(Error::NotUnitConstant)?;
        if !q.contains(&pre) {
            report.surjectivity_violations += 1;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeyerReport {
    pub pairs_checked: usize,
    pub violations: usize,
    /// Distinct corrections x + y - w (preimages), sorted.
    pub corrections: Vec<Vec<i64>>,
    /// Longest chain of consecutive 𝔏(2σ) gaps needed between w and x + y.
    pub max_steps: usize,
    /// Size of the gap alphabet of 𝔏(2σ).
    pub double_window_alphabet: usize,
}

impl MeyerReport {
    pub fn report(&self) -> CheckReport {
        CheckReport {
            lemma: "meyer".into(),
            violations: self.violations,
            details: vec![json!({
                "pairs_checked": self.pairs_checked,
                "correction_count": self.corrections.len(),
                "corrections": self.corrections,
                "max_steps": self.max_steps,
                "double_window_alphabet": self.double_window_alphabet,
            })],
        }
    }
}

/// 𝔏 + 𝔏 ⊆ 𝔏 + F: for x, y in [-L/2, L/2] with x + y there too, take the
/// nearest w ∈ 𝔏(σ) and express x + y - w as a walk of consecutive gaps of
/// 𝔏(2σ). A violation is a pair for which the walk cannot be formed.
pub fn check_meyer(q: &Quasilattice) -> Result<MeyerReport> {
    let inner = q.half_width / 2.0;
    let pts = q.interior(inner);
    if pts.len() < 2 {
        return Err(Error::TooFewPoints { found: pts.len(), needed: 2 });
    }
    let doubled = generate(&q.ctx, &q.window.scale(2.0), q.half_width)?;
    let letters: HashSet<Vec<i64>> =
        gap_alphabet(&doubled, 0.0)?.into_iter().map(|g| g.preimage).collect();
    let mut corrections: HashSet<Vec<i64>> = HashSet::new();
    let mut report = MeyerReport {
        pairs_checked: 0,
        violations: 0,
        corrections: Vec::new(),
        max_steps: 0,
        double_window_alphabet: letters.len(),
    };
    for x in pts {
        for y in pts {
            let zv = x.value + y.value;
            if zv.abs() > inner {
                continue;
            }
            report.pairs_checked += 1;
            let z = add_preimages(&x.preimage, &y.preimage);
            let w = &q.points[q.nearest(zv).expect("nonempty")];
            let (Some(iz), Some(iw)) = (doubled.index_of(&z), doubled.index_of(&w.preimage)) else {
                report.violations += 1;
                continue;
            };
            let (lo, hi) = (iz.min(iw), iz.max(iw));
            let ok = (lo..hi).all(|i| {
                letters.contains(&sub_preimages(
                        &doubled.points[i + 1].preimage,
                        &doubled.points[i].preimage,
                    ))
            });
            if !ok {
                report.violations += 1;
                continue;
            }
            report.max_steps = report.max_steps.max(hi - lo);
            corrections.insert(sub_preimages(&z, &w.preimage));
        }
    }
    let mut c: Vec<Vec<i64>> = corrections.into_iter().collect();
    c.sort_by(|a, b| {
        let va = embed_integer(&q.ctx, a)[0].re;
        let vb = embed_integer(&q.ctx, b)[0].re;
        va.total_cmp(&vb).then_with(|| a.cmp(b))
    });
    report.corrections = c;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeloneReport {
    pub min_gap: f64,
    pub max_gap: f64,
    /// 2^{1-n} ∏ σ_j^{-1}.
    pub lower_bound: f64,
    /// Gaps below the lower bound (minus tolerance).
    pub violations: usize,
}

impl DeloneReport {
    pub fn report(&self) -> CheckReport {
        CheckReport {
            lemma: "delone".into(),
            violations: self.violations,
            details: vec![serde_json::to_value(self).expect("serializable")],
        }
    }
}

/// Smallest and largest consecutive gap. The minimum is compared against the
/// uniform-discreteness bound; the maximum is an observed estimate of the
/// relative-density constant.
pub fn delone_constants(q: &Quasilattice) -> Result<DeloneReport> {
    if q.points.len() < 2 {
        return Err(Error::TooFewPoints { found: q.points.len(), needed: 2 });
    }
    let bound = q.window.min_gap_bound();
    let tol = q.ctx.tolerances().boundary;
    let mut min_gap = f64::INFINITY;
    let mut max_gap = 0.0f64;
    let mut violations = 0;
    for i in 0..q.points.len() - 1 {
        let g = q.points[i + 1].value - q.points[i].value;
        min_gap = min_gap.min(g);
        max_gap = max_gap.max(g);
        if g < bound - tol {
            violations += 1;
        }
    }
    Ok(DeloneReport { min_gap, max_gap, lower_bound: bound, violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PHI: f64 = 1.618_033_988_749_895;

    fn golden() -> Arc<MinPolyContext> {
        MinPolyContext::new(&[-1, -1]).unwrap()
    }

    fn golden_window(s: f64) -> WindowVector {
        WindowVector::new(vec![0.0, s])
    }

    #[test]
    fn window_validation() {
        let g = golden();
        assert!(golden_window(1.0).validate(&g).is_ok());
        assert!(WindowVector::new(vec![0.1, 1.0]).validate(&g).is_err());
        assert!(WindowVector::new(vec![0.0, 0.0]).validate(&g).is_err());
        assert!(WindowVector::new(vec![0.0, 1.0, 1.0]).validate(&g).is_err());
        let p = MinPolyContext::new(&[-1, -1, 0]).unwrap();
        assert!(WindowVector::new(vec![0.0, 1.0, 1.0]).validate(&p).is_ok());
        let err = WindowVector::new(vec![0.0, 1.0, 0.9]).validate(&p).unwrap_err();
        assert!(matches!(err, Error::InadmissibleWindow(_)));
    }

    #[test]
    fn origin_and_symmetry() {
        let q = generate(&golden(), &golden_window(1.0), 5.0).unwrap();
        assert!(q.contains(&[0, 0]));
        for p in q.points() {
            let neg: Vec<i64> = p.preimage.iter().map(|c| -c).collect();
            let j = q.index_of(&neg).expect("negation present");
            assert_eq!(q.points()[j].value, -p.value);
        }
        for w in q.points().windows(2) {
            assert!(w[0].value < w[1].value);
        }
    }

    #[test]
    fn nonzero_points_are_far_from_origin() {
        let q = generate(&golden(), &golden_window(1.0), 5.0).unwrap();
        for p in q.points().iter().filter(|p| p.preimage != [0, 0]) {
            assert!(p.value.abs() >= 1.0);
        }
    }

    #[test]
    fn inflation_refuses_non_unit() {
        let ctx = MinPolyContext::new(&[2, -4]).unwrap();
        let q = generate(&ctx, &golden_window(1.0), 10.0).unwrap();
        assert!(matches!(check_inflation(&q), Err(Error::NotUnitConstant)));
    }

    #[test]
    fn inflation_fixes_origin() {
        let g = golden();
        assert_eq!(inflate_preimage(&g, &[0, 0]), vec![0, 0]);
        assert_eq!(inflate_preimage(&g, &[0, 1]), vec![1, 1]);
        assert_eq!(deflate_preimage(&g, &[1, 1]), Some(vec![0, 1]));
    }

    #[test]
    fn budget_guard() {
        let opts = GenerateOptions { cell_budget: 10.0, boundary_tol: None };
        let err = generate_with(&golden(), &golden_window(1.0), 100.0, opts).unwrap_err();
        assert!(matches!(err, Error::WindowTooLarge { .. }));
    }

    #[test]
    fn too_few_points() {
        let q = generate(&golden(), &golden_window(1.0), 0.5).unwrap();
        assert_eq!(q.len(), 1);
        assert!(matches!(gap_alphabet(&q, 0.0), Err(Error::TooFewPoints { .. })));
        assert!(matches!(delone_constants(&q), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn group_laws_identity_case() {
        let g = golden();
        let r = check_group_laws(&g, &golden_window(0.8), &golden_window(0.8), 30.0).unwrap();
        assert!(r.comparable);
        assert_eq!(r.inclusion_violations, 0);
        assert_eq!(r.sum_violations, 0);
    }

    #[test]
    fn meyer_zero_pair() {
        let q = generate(&golden(), &golden_window(1.0), 20.0).unwrap();
        let r = check_meyer(&q).unwrap();
        assert!(r.corrections.contains(&vec![0, 0]));
    }

    #[test]
    fn csv_layout() {
        let q = generate(&golden(), &golden_window(1.0), 2.0).unwrap();
        let csv = q.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("value,l_0,l_1,margin"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 4);
        // 17 significant digits: d.dddddddddddddddde±x
        let mantissa = row[0].trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.replace('.', "").len(), 17);
        let v: f64 = row[0].parse().unwrap();
        assert_eq!(v, q.points()[0].value);
        assert!(q.to_svg().starts_with("<svg"));
    }

    #[test]
    fn golden_gap_ratio_phi() {
        let q = generate(&golden(), &golden_window(PHI / 2.0), 50.0).unwrap();
        let gaps = gap_alphabet(&q, 5.0).unwrap();
        assert_eq!(gaps.len(), 2);
        assert!((gaps[1].value / gaps[0].value - PHI).abs() < 1e-9);
    }
}
