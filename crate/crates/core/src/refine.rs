//! Refinement masks A(y) = |λ|^{-1} Σ a_j e^{2πiτ_j y}, the infinite product
//! f̂(y) = ∏_{k>=1} A(yλ^{-k}), Mahler measures and the averages of ln|A| and
//! ln|f̂| that they control, plus Erdős-type sequences f̂(αλᵏ) and orbit means.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algnum::{frac_rational, rational_to_f64, AlgebraicElement, MinPolyContext};
use crate::error::{Error, Result};
use crate::linalg::{self, Rational};
use crate::poly;
use crate::tol::Tolerances;

/// Samples per chunk in the parallel integrators; fixed so that the
/// reduction order, and hence the result, does not depend on thread count.
const CHUNK: usize = 1 << 14;
/// Largest torus grid (total points) tried before giving up.
const MAX_TORUS_POINTS: usize = 1 << 24;
pub const DEFAULT_TAIL_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub enum Dilation {
    Algebraic(Arc<MinPolyContext>),
    Real(f64),
}

impl Dilation {
    pub fn value(&self) -> f64 {
        match self {
            Dilation::Algebraic(ctx) => ctx.lambda(),
            Dilation::Real(x) => *x,
        }
    }

    /// Number of rational coordinates per translation.
    pub fn coordinate_count(&self) -> usize {
        match self {
            Dilation::Algebraic(ctx) => ctx.degree(),
            Dilation::Real(_) => 1,
        }
    }

    pub fn context(&self) -> Option<&Arc<MinPolyContext>> {
        match self {
            Dilation::Algebraic(ctx) => Some(ctx),
            Dilation::Real(_) => None,
        }
    }
}

/// A validated refinement mask with its exponent representation
/// τ_j = Σ_d E_{jd} r_d + shift·r, E >= 0.
#[derive(Debug, Clone)]
pub struct RefinementMask {
    dilation: Dilation,
    coeffs: Vec<Complex64>,
    translations: Vec<Vec<Rational>>,
    tau: Vec<f64>,
    basis: Vec<Vec<Rational>>,
    basis_values: Vec<f64>,
    exponents: Vec<Vec<i64>>,
    shift: Vec<i64>,
    tol: Tolerances,
}

fn coordinate_value(dilation: &Dilation, coords: &[Rational]) -> f64 {
    match dilation {
        Dilation::Real(_) => rational_to_f64(&coords[0]),
        Dilation::Algebraic(ctx) => {
            let lam = ctx.lambda();
            coords.iter().rev().fold(0.0, |acc, c| acc * lam + rational_to_f64(c))
        }
    }
}

pub fn build_mask(dilation: Dilation, coeffs: Vec<Complex64>, translations: Vec<Vec<Rational>>) -> Result<RefinementMask> {
    let tol = match &dilation {
        Dilation::Algebraic(ctx) => *ctx.tolerances(),
        Dilation::Real(_) => Tolerances::default(),
    };
    build_mask_with(dilation, coeffs, translations, tol)
}

pub fn build_mask_with(
    dilation: Dilation,
    coeffs: Vec<Complex64>,
    translations: Vec<Vec<Rational>>,
    tol: Tolerances,
) -> Result<RefinementMask> {
    let lambda = dilation.value();
    if !(lambda.abs() > 1.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("|lambda| must exceed 1, got {lambda}")));
    }
    if coeffs.is_empty() || coeffs.len() != translations.len() {
        return Err(Error::InvalidArgument(format!(
            "{} coefficients for {} translations",
            coeffs.len(),
            translations.len()
        )));
    }
    if let Some(j) = coeffs.iter().position(|a| a.norm() == 0.0) {
        return Err(Error::ZeroCoefficient(j));
    }
    let dim = dilation.coordinate_count();
    if let Some(j) = translations.iter().position(|t| t.len() != dim) {
        return Err(Error::InvalidArgument(format!("translation {j} needs {dim} coordinates")));
    }
    let tau: Vec<f64> = translations.iter().map(|t| coordinate_value(&dilation, t)).collect();
    for j in 1..tau.len() {
        if !(tau[j] > tau[j - 1]) {
            return Err(Error::NonIncreasingTranslations(j));
        }
    }
    let sum: Complex64 = coeffs.iter().sum();
    if (sum - lambda.abs()).norm() > tol.mask * lambda.abs().max(1.0) {
        return Err(Error::SumRuleViolated { sum: format!("{}{:+}i", sum.re, sum.im), expected: lambda.abs() });
    }

    // integer row lattice of the common-denominator translations
    let den = translations
        .iter()
        .flatten()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let rows: Vec<Vec<BigInt>> = translations
        .iter()
        .map(|t| t.iter().map(|q| (q * Rational::from_integer(den.clone())).to_integer()).collect())
        .collect();
    let lat = linalg::row_lattice(&rows);
    let basis: Vec<Vec<Rational>> = lat
        .basis
        .iter()
        .map(|b| b.iter().map(|v| Rational::new(v.clone(), den.clone())).collect())
        .collect();
    let d = basis.len();
    let raw: Vec<Vec<i64>> = lat
        .coefficients
        .iter()
        .map(|row| row.iter().map(|v| v.to_i64()).collect::<Option<Vec<i64>>>())
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InvalidArgument("exponents exceed 64-bit range".into()))?;
    let shift: Vec<i64> = (0..d).map(|k| raw.iter().map(|e| e[k]).min().unwrap_or(0)).collect();
    let exponents = raw
        .iter()
        .map(|e| e.iter().zip(&shift).map(|(a, s)| a - s).collect())
        .collect();
    let basis_values = basis.iter().map(|b| coordinate_value(&dilation, b)).collect();
    Ok(RefinementMask { dilation, coeffs, translations, tau, basis, basis_values, exponents, shift, tol })
}

impl RefinementMask {
    pub fn dilation(&self) -> &Dilation {
        &self.dilation
    }

    pub fn lambda(&self) -> f64 {
        self.dilation.value()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn translations(&self) -> &[Vec<Rational>] {
        &self.translations
    }

    pub fn translation_values(&self) -> &[f64] {
        &self.tau
    }

    /// Q-rank d of the translations.
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Rational>] {
        &self.basis
    }

    pub fn basis_values(&self) -> &[f64] {
        &self.basis_values
    }

    pub fn exponents(&self) -> &[Vec<i64>] {
        &self.exponents
    }

    pub fn shift(&self) -> &[i64] {
        &self.shift
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn set_tolerances(&mut self, tol: Tolerances) {
        self.tol = tol;
    }

    /// A(y) from the defining sum.
    pub fn eval(&self, y: f64) -> Complex64 {
        let s: Complex64 = self
            .coeffs
            .iter()
            .zip(&self.tau)
            .map(|(a, t)| a * Complex64::cis(TAU * t * y))
            .sum();
        s / self.lambda().abs()
    }

    /// A(y) through the exponent representation: e^{2πi(shift·r)y} P(e^{2πi r y}).
    pub fn eval_via_exponents(&self, y: f64) -> Complex64 {
        let z: Vec<Complex64> = self.basis_values.iter().map(|r| Complex64::cis(TAU * r * y)).collect();
        let phase: f64 = self.shift.iter().zip(&self.basis_values).map(|(s, r)| *s as f64 * r).sum();
        self.eval_trig(&z) * Complex64::cis(TAU * phase * y)
    }

    /// P at a point of (C*)^d.
    pub fn eval_trig(&self, z: &[Complex64]) -> Complex64 {
        let s: Complex64 = self
            .coeffs
            .iter()
            .zip(&self.exponents)
            .map(|(a, e)| e.iter().zip(z).fold(*a, |acc, (&k, &zk)| acc * zk.powi(k as i32)))
            .sum();
        s / self.lambda().abs()
    }

    /// Coefficients of P for d <= 1, constant term first.
    pub fn univariate_polynomial(&self) -> Option<Vec<Complex64>> {
        if self.rank() > 1 {
            return None;
        }
        self.specialize(&[1])
    }

    /// Coefficients of P(z^{k_1}, ..., z^{k_d}).
    pub fn specialize(&self, k: &[i64]) -> Option<Vec<Complex64>> {
        let deg: Vec<i64> = self
            .exponents
            .iter()
            .map(|e| e.iter().zip(k).map(|(a, b)| a * b).sum())
            .collect();
        let top = *deg.iter().max()?;
        let mut c = vec![Complex64::new(0.0, 0.0); top as usize + 1];
        for (a, e) in self.coeffs.iter().zip(deg) {
            c[e as usize] += a / self.lambda().abs();
        }
        Some(c)
    }

    /// Σ |a_j| / |λ|.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm()).sum::<f64>() / self.lambda().abs()
    }

    pub fn to_spec(&self) -> MaskSpec {
        MaskSpec {
            lambda: match &self.dilation {
                Dilation::Algebraic(ctx) => LambdaSpec::Poly(ctx.coeffs().to_vec()),
                Dilation::Real(x) => LambdaSpec::Real(*x),
            },
            coeffs: self.coeffs.iter().map(|a| [a.re, a.im]).collect(),
            translations: self
                .translations
                .iter()
                .map(|t| t.iter().map(|q| RationalText::Text(q.to_string())).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaSpec {
    Poly(Vec<i64>),
    Real(f64),
}

/// A rational written either as an integer or as the text "p/q".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalText {
    Int(i64),
    Text(String),
}

impl RationalText {
    pub fn parse(&self) -> Result<Rational> {
        match self {
            RationalText::Int(v) => Ok(linalg::int(*v)),
            RationalText::Text(s) => Rational::from_str(s.trim())
                .map_err(|_| Error::InvalidArgument(format!("not a rational number: {s:?}"))),
        }
    }
}

/// Mask file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub lambda: LambdaSpec,
    pub coeffs: Vec<[f64; 2]>,
    pub translations: Vec<Vec<RationalText>>,
}

impl MaskSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("mask JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn build(&self, tol: Tolerances) -> Result<RefinementMask> {
        let dilation = match &self.lambda {
            LambdaSpec::Poly(c) => Dilation::Algebraic(MinPolyContext::with_options(c, 64, tol)?),
            LambdaSpec::Real(x) => Dilation::Real(*x),
        };
        let coeffs = self.coeffs.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        let translations = self
            .translations
            .iter()
            .map(|t| t.iter().map(RationalText::parse).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        build_mask_with(dilation, coeffs, translations, tol)
    }
}

/// Haar: λ = 2, a = (1, 1), τ = (0, 1).
pub fn haar() -> RefinementMask {
    real_mask(2.0, &[1.0, 1.0], &[0, 1])
}

/// Uniform measure on the ternary Cantor set: λ = 3, a = (3/2, 3/2), τ = (0, 2).
pub fn cantor() -> RefinementMask {
    real_mask(3.0, &[1.5, 1.5], &[0, 2])
}

/// Mask 1 + e^{2πiy} - e^{4πiy} with λ = 2.
pub fn golden_mean_mask() -> RefinementMask {
    real_mask(2.0, &[2.0, 2.0, -2.0], &[0, 1, 2])
}

/// Bernoulli convolution for a Pisot λ: a = (|λ|/2, |λ|/2), τ = (0, 1).
pub fn bernoulli(ctx: &Arc<MinPolyContext>) -> RefinementMask {
    let n = ctx.degree();
    let h = ctx.lambda().abs() / 2.0;
    let mut one = vec![Rational::zero(); n];
    one[0] = Rational::one();
    build_mask(
        Dilation::Algebraic(Arc::clone(ctx)),
        vec![Complex64::new(h, 0.0); 2],
        vec![vec![Rational::zero(); n], one],
    )
    .expect("Bernoulli mask is valid")
}

fn real_mask(lambda: f64, a: &[f64], tau: &[i64]) -> RefinementMask {
    build_mask(
        Dilation::Real(lambda),
        a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        tau.iter().map(|&t| vec![linalg::int(t)]).collect(),
    )
    .expect("built-in mask is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MahlerMethod {
    Jensen,
    TorusQuadrature,
    UnivariateLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MahlerResult {
    pub value: f64,
    pub method: MahlerMethod,
    pub error_estimate: f64,
    /// For d >= 2, the univariate-specialization value it was compared with.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub univariate_limit: Option<f64>,
}

pub fn mahler_univariate(coeffs: &[Complex64]) -> Result<MahlerResult> {
    let (value, error_estimate) = poly::mahler_jensen(coeffs)?;
    Ok(MahlerResult { value, method: MahlerMethod::Jensen, error_estimate, univariate_limit: None })
}

/// M(A) = M(P). Exact via Jensen for d <= 1; for d >= 2 a torus grid with
/// doubling, compared against M(P(z, z^k, z^{k^2}, ...)).
pub fn mahler_mask(mask: &RefinementMask) -> Result<MahlerResult> {
    if let Some(p) = mask.univariate_polynomial() {
        return mahler_univariate(&p);
    }
    let (log_m, change) = torus_log_mean(mask)?;
    let value = log_m.exp();
    let limit = univariate_limit(mask)?;
    Ok(MahlerResult {
        value,
        method: MahlerMethod::TorusQuadrature,
        error_estimate: value * change + (value - limit).abs(),
        univariate_limit: Some(limit),
    })
}

/// Mean of ln|P| over a midpoint grid on the d-torus, doubled until the
/// change drops below tol_mahler. Returns (mean, last change).
fn torus_log_mean(mask: &RefinementMask) -> Result<(f64, f64)> {
    let d = mask.rank();
    let clip = mask.tol.v_clip.ln();
    let grid = |n: usize| -> f64 {
        let total = n.pow(d as u32);
        let chunks: Vec<f64> = (0..total.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut s = 0.0;
                let mut z = vec![Complex64::new(0.0, 0.0); d];
                for idx in c * CHUNK..((c + 1) * CHUNK).min(total) {
                    let mut rest = idx;
                    for zk in z.iter_mut() {
                        let i = rest % n;
                        rest /= n;
                        *zk = Complex64::cis(TAU * (i as f64 + 0.5) / n as f64);
                    }
                    let v = mask.eval_trig(&z).norm();
                    s += if v > 0.0 { v.ln().max(clip) } else { clip };
                }
                s
            })
            .collect();
        chunks.iter().sum::<f64>() / total as f64
    };
    let mut n = 32usize;
    let mut prev = grid(n);
    let mut change = f64::INFINITY;
    while n.pow(d as u32) * (1 << d) <= MAX_TORUS_POINTS {
        n *= 2;
        let cur = grid(n);
        change = (cur - prev).abs();
        prev = cur;
        if change <= mask.tol.mahler {
            return Ok((cur, change));
        }
    }
    Err(Error::QuadratureNonconvergent { change, points: n.pow(d as u32) })
}

/// M(P(z^{k_1}, ..., z^{k_d})) with k = (1, k, k², ...), k chosen so the
/// specialized degree stays near 2000.
fn univariate_limit(mask: &RefinementMask) -> Result<f64> {
    let d = mask.rank() as i32;
    let emax = mask.exponents.iter().flatten().copied().max().unwrap_or(1).max(1) as f64;
    let k = ((2000.0 / emax).powf(1.0 / (d - 1) as f64).floor() as i64).max(2);
    let ks: Vec<i64> = (0..d).map(|i| k.pow(i as u32)).collect();
    let p = mask.specialize(&ks).expect("nonempty mask");
    Ok(poly::mahler_jensen(&p)?.0)
}

/// ρ(f) = -ln M(A) / ln|λ|.
pub fn rho(mask: &RefinementMask) -> Result<f64> {
    Ok(rho_from(mask, &mahler_mask(mask)?))
}

pub fn rho_from(mask: &RefinementMask, m: &MahlerResult) -> f64 {
    -m.value.ln() / mask.lambda().abs().ln()
}

/// Number of factors K with C|y||λ|^{-K}/(|λ|-1) <= tail_tol.
pub fn product_length(mask: &RefinementMask, y: f64, tail_tol: f64) -> usize {
    let lam = mask.lambda().abs();
    let c = TAU / lam
        * mask
            .coeffs
            .iter()
            .zip(&mask.tau)
            .map(|(a, t)| a.norm() * t.abs())
            .sum::<f64>();
    let bound = c * y.abs() / (lam - 1.0);
    if bound <= tail_tol {
        return 1;
    }
    ((bound / tail_tol).ln() / lam.ln()).ceil().max(1.0) as usize
}

/// f̂(y) = ∏_{k=1}^{K} A(yλ^{-k}).
pub fn fourier_hat(mask: &RefinementMask, y: f64, tail_tol: f64) -> Complex64 {
    if y == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let k = product_length(mask, y, tail_tol);
    hat_product(mask, y, k)
}

fn hat_product(mask: &RefinementMask, y: f64, k: usize) -> Complex64 {
    let inv = 1.0 / mask.lambda();
    let mut u = y;
    let mut out = Complex64::new(1.0, 0.0);
    for _ in 0..k {
        u *= inv;
        out *= mask.eval(u);
    }
    out
}

/// As [`fourier_hat`], failing with ZeroHit{j = -k} if a factor A(yλ^{-k}) vanishes.
pub fn fourier_hat_checked(mask: &RefinementMask, y: f64, tail_tol: f64) -> Result<Complex64> {
    if y == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let k = product_length(mask, y, tail_tol);
    let inv = 1.0 / mask.lambda();
    let mut u = y;
    let mut out = Complex64::new(1.0, 0.0);
    for j in 1..=k {
        u *= inv;
        let a = mask.eval(u);
        if a.norm() < mask.tol.zero {
            return Err(Error::ZeroHit { j: -(j as i64) });
        }
        out *= a;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanLog {
    pub value: f64,
    pub samples: usize,
    /// Samples where |A| fell below tol_zero and ln(v_clip) was used.
    pub clipped: usize,
}

/// Trapezoid sum of `f` over [a, b] with `intervals` steps, in fixed chunks.
fn trapezoid<F>(a: f64, b: f64, intervals: usize, f: F) -> (f64, usize)
where
    F: Fn(f64) -> (f64, bool) + Sync,
{
    let h = (b - a) / intervals as f64;
    let total = intervals + 1;
    let parts: Vec<(f64, usize)> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut s = 0.0;
            let mut clipped = 0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(total) {
                let (v, clip) = f(a + i as f64 * h);
                let w = if i == 0 || i == intervals { 0.5 } else { 1.0 };
                s += w * v;
                clipped += usize::from(clip);
            }
            (s, clipped)
        })
        .collect();
    let s: f64 = parts.iter().map(|p| p.0).sum();
    (s * h, parts.iter().map(|p| p.1).sum())
}

fn clipped_log(v: f64, tol: &Tolerances) -> (f64, bool) {
    if v < tol.zero {
        (tol.v_clip.ln(), true)
    } else {
        (v.ln(), false)
    }
}

/// (1/2L) ∫_{-L}^{L} ln|A| by the trapezoid rule with floor(2L·spu) + 1
/// intervals, so the step is incommensurate with integer periods.
pub fn mean_log_mask(mask: &RefinementMask, half_width: f64, samples_per_unit: usize) -> Result<MeanLog> {
    if !(half_width >= 1.0) {
        return Err(Error::InvalidArgument(format!("L must be at least 1, got {half_width}")));
    }
    if samples_per_unit == 0 {
        return Err(Error::InvalidArgument("samples per unit must be positive".into()));
    }
    let n = (2.0 * half_width * samples_per_unit as f64).floor() as usize + 1;
    let tol = mask.tol;
    let (integral, clipped) =
        trapezoid(-half_width, half_width, n, |y| clipped_log(mask.eval(y).norm(), &tol));
    if clipped == n + 1 {
        return Err(Error::AllSamplesClipped);
    }
    Ok(MeanLog { value: integral / (2.0 * half_width), samples: n + 1, clipped })
}

/// (1/(2L ln L)) ∫_{-L}^{L} ln|f̂|, integrated shell by shell over
/// [0, 1], [|λ|^s, |λ|^{s+1}] ∩ [0, L] and their mirror images.
pub fn mean_log_hat(mask: &RefinementMask, half_width: f64, samples_per_unit: usize) -> Result<MeanLog> {
    let lam = mask.lambda().abs();
    if !(half_width >= lam * lam) {
        return Err(Error::InvalidArgument(format!("L must be at least |lambda|^2 = {}", lam * lam)));
    }
    if samples_per_unit == 0 {
        return Err(Error::InvalidArgument("samples per unit must be positive".into()));
    }
    let mut edges = vec![0.0, 1.0];
    while *edges.last().expect("nonempty") < half_width {
        let next = (edges.last().expect("nonempty") * lam).min(half_width);
        edges.push(next);
    }
    let tol = mask.tol;
    let mut integral = 0.0;
    let mut samples = 0;
    let mut clipped = 0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let k = product_length(mask, b, DEFAULT_TAIL_TOL);
        let n = ((b - a) * samples_per_unit as f64).floor() as usize + 1;
        for sign in [1.0, -1.0] {
            let (s, c) = trapezoid(a, b, n, |y| {
                // f̂ is small on large sets, so only underflow is clipped here
                let v = hat_product(mask, sign * y, k).norm();
                (v.max(tol.v_clip).ln(), v < tol.v_clip)
            });
            integral += s;
            samples += n + 1;
            clipped += c;
        }
    }
    if clipped == samples {
        return Err(Error::AllSamplesClipped);
    }
    Ok(MeanLog { value: integral / (2.0 * half_width * half_width.ln()), samples, clipped })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SublevelPoint {
    pub v: f64,
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SublevelReport {
    pub points: Vec<SublevelPoint>,
    /// sup over the grid of μ / (L v^{1/(m-1)}) at L and at 2L.
    pub constant: f64,
    pub constant_doubled: f64,
    /// The two constants agree within a factor 2.
    pub stable: bool,
}

fn sublevel_at(mask: &RefinementMask, v_grid: &[f64], half_width: f64, samples: usize) -> Vec<f64> {
    let h = 2.0 * half_width / samples as f64;
    let counts: Vec<Vec<usize>> = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut cnt = vec![0usize; v_grid.len()];
            for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let a = mask.eval(-half_width + (i as f64 + 0.5) * h).norm();
                let first = v_grid.partition_point(|&v| v < a);
                for k in cnt.iter_mut().skip(first) {
                    *k += 1;
                }
            }
            cnt
        })
        .collect();
    (0..v_grid.len())
        .map(|k| counts.iter().map(|c| c[k]).sum::<usize>() as f64 * h)
        .collect()
}

/// Grid estimates of μ{y ∈ [-L, L] : |A(y)| <= v} with the fitted constant
/// of the bound μ <= L c v^{1/(m-1)}.
pub fn sublevel_measure(mask: &RefinementMask, v_grid: &[f64], half_width: f64, samples: usize) -> Result<SublevelReport> {
    if v_grid.is_empty() || v_grid[0] <= 0.0 || v_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("v grid must be positive and increasing".into()));
    }
    if samples < 10_000 {
        return Err(Error::InvalidArgument(format!("need at least 10000 samples, got {samples}")));
    }
    if !(half_width > 0.0) {
        return Err(Error::InvalidArgument("L must be positive".into()));
    }
    let m = mask.coeffs.len();
    let fit = |mu: &[f64], l: f64| -> f64 {
        if m < 2 {
            return 0.0;
        }
        let p = 1.0 / (m - 1) as f64;
        mu.iter().zip(v_grid).map(|(u, v)| u / (l * v.powf(p))).fold(0.0, f64::max)
    };
    let mu = sublevel_at(mask, v_grid, half_width, samples);
    let mu2 = sublevel_at(mask, v_grid, 2.0 * half_width, 2 * samples);
    let constant = fit(&mu, half_width);
    let constant_doubled = fit(&mu2, 2.0 * half_width);
    let stable = if constant == 0.0 {
        constant_doubled == 0.0
    } else {
        let r = constant_doubled / constant;
        (0.5..=2.0).contains(&r)
    };
    Ok(SublevelReport {
        points: v_grid.iter().zip(mu).map(|(&v, measure)| SublevelPoint { v, measure }).collect(),
        constant,
        constant_doubled,
        stable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErdosTerm {
    pub k: usize,
    pub value: Complex64,
    pub modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErdosSequence {
    pub terms: Vec<ErdosTerm>,
    /// Largest relative change of |f̂| over the last five steps.
    pub plateau: f64,
}

/// Translations as integer coordinates in Z[λ] together with the context.
fn integral_translations(mask: &RefinementMask) -> Result<(Arc<MinPolyContext>, Vec<AlgebraicElement>)> {
    let ctx = mask.dilation.context().ok_or(Error::NotPv)?;
    if !ctx.is_pv() {
        return Err(Error::NotPv);
    }
    let tau = mask
        .translations
        .iter()
        .map(|t| AlgebraicElement::new(ctx, t.clone()))
        .collect::<Result<Vec<_>>>()?;
    if tau.iter().any(|t| !t.is_integral()) {
        return Err(Error::NotIntegral);
    }
    Ok((Arc::clone(ctx), tau))
}

/// Phases frac(τ_i α λ^j), j = 0..=k_max, from exact traces minus the small
/// conjugates: x = Tr(x) - Σ_{l>=2} σ_l(x).
pub fn exact_phases(mask: &RefinementMask, alpha: &AlgebraicElement, k_max: usize) -> Result<Vec<Vec<f64>>> {
    let (ctx, tau) = integral_translations(mask)?;
    if !Arc::ptr_eq(&ctx, alpha.context()) && ctx.coeffs() != alpha.context().coeffs() {
        return Err(Error::ContextMismatch);
    }
    let n = ctx.degree();
    let c = ctx.coeffs();
    let roots = ctx.roots();
    let mut phases = vec![vec![0.0; tau.len()]; k_max + 1];
    for (i, t) in tau.iter().enumerate() {
        let gamma = AlgebraicElement::new(&ctx, t.coords().to_vec())?.mul(&AlgebraicElement::new(
            &ctx,
            alpha.coords().to_vec(),
        )?)?;
        // traces t_j = Tr(γλ^j) obey t_{j+n} = -Σ c_i t_{j+i}
        let mut tr: Vec<Rational> = Vec::with_capacity(k_max + n);
        let mut g = gamma.clone();
        for _ in 0..n.min(k_max + 1) {
            tr.push(g.trace());
            g = g.mul_generator();
        }
        while tr.len() < k_max + 1 {
            let j = tr.len() - n;
            let next = (0..n).fold(Rational::zero(), |acc, l| acc - &tr[j + l] * linalg::int(c[l]));
            tr.push(next);
        }
        let conj = gamma.embed();
        let mut small: Vec<Complex64> = conj[1..].to_vec();
        for (j, t) in tr.iter().enumerate().take(k_max + 1) {
            let s: f64 = small.iter().map(|z| z.re).sum();
            phases[j][i] = (rational_to_f64(&frac_rational(t)) - s).rem_euclid(1.0);
            for (z, r) in small.iter_mut().zip(&roots[1..]) {
                *z *= r;
            }
        }
    }
    Ok(phases)
}

fn mask_at_phases(mask: &RefinementMask, phases: &[f64]) -> Complex64 {
    let s: Complex64 = mask.coeffs.iter().zip(phases).map(|(a, p)| a * Complex64::cis(TAU * p)).sum();
    s / mask.lambda().abs()
}

fn plateau(terms: &[ErdosTerm]) -> f64 {
    let start = terms.len().saturating_sub(6);
    terms[start..]
        .windows(2)
        .map(|w| (w[1].modulus - w[0].modulus).abs() / w[1].modulus.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// f̂(αλᵏ) for k = 0..=k_max via f̂(αλᵏ) = f̂(α) ∏_{j<k} A(αλʲ), with every
/// A(αλʲ) evaluated at exactly reduced phases.
pub fn erdos_sequence(mask: &RefinementMask, alpha: &AlgebraicElement, k_max: usize) -> Result<ErdosSequence> {
    let phases = exact_phases(mask, alpha, k_max)?;
    let mut value = fourier_hat_checked(mask, alpha.value(), DEFAULT_TAIL_TOL)?;
    let mut terms = Vec::with_capacity(k_max + 1);
    for (k, ph) in phases.iter().enumerate() {
        terms.push(ErdosTerm { k, value, modulus: value.norm() });
        if k == k_max {
            break;
        }
        let a = mask_at_phases(mask, ph);
        if a.norm() < mask.tol.zero {
            return Err(Error::ZeroHit { j: k as i64 });
        }
        value *= a;
    }
    let plateau = plateau(&terms);
    Ok(ErdosSequence { terms, plateau })
}

/// The same sequence with A evaluated at the floating point value αλʲ.
pub fn erdos_sequence_float(mask: &RefinementMask, alpha: f64, k_max: usize) -> Result<ErdosSequence> {
    let lam = mask.lambda();
    let mut value = fourier_hat_checked(mask, alpha, DEFAULT_TAIL_TOL)?;
    let mut y = alpha;
    let mut terms = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        terms.push(ErdosTerm { k, value, modulus: value.norm() });
        if k == k_max {
            break;
        }
        let a = mask.eval(y);
        if a.norm() < mask.tol.zero {
            return Err(Error::ZeroHit { j: k as i64 });
        }
        value *= a;
        y *= lam;
    }
    let plateau = plateau(&terms);
    Ok(ErdosSequence { terms, plateau })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitMean {
    pub cycle_length: usize,
    pub preperiod: usize,
    pub mean: f64,
    /// Common denominator of the starting state.
    pub denominator: String,
}

/// Seed q_i = Tr(λ^i α), i = 0..n-1.
pub fn orbit_seed(alpha: &AlgebraicElement) -> Vec<Rational> {
    let n = alpha.context().degree();
    let mut g = alpha.clone();
    (0..n)
        .map(|_| {
            let t = g.trace();
            g = g.mul_generator();
            t
        })
        .collect()
}

/// |λ|^{-1} Σ a_j e^{2πi t_j·x} on the n-torus, t_j the integer coordinates
/// of τ_j.
fn torus_mask(mask: &RefinementMask, coords: &[Vec<i64>], x: &[f64]) -> Complex64 {
    let s: Complex64 = mask
        .coeffs
        .iter()
        .zip(coords)
        .map(|(a, t)| a * Complex64::cis(TAU * t.iter().zip(x).map(|(k, v)| *k as f64 * v).sum::<f64>()))
        .sum();
    s / mask.lambda().abs()
}

pub const DEFAULT_ORBIT_BUDGET: usize = 1_000_000;

/// Iterate x ↦ Cx mod 1 exactly from q until a state repeats; the mean of
/// ln|P_trig| over the cycle.
pub fn orbit_mean(mask: &RefinementMask, q: &[Rational], budget: usize) -> Result<OrbitMean> {
    let (ctx, tau) = integral_translations(mask)?;
    let n = ctx.degree();
    if q.len() != n {
        return Err(Error::InvalidArgument(format!("orbit seed needs {n} entries")));
    }
    let coords: Vec<Vec<i64>> = tau
        .iter()
        .map(|t| t.i64_coords().ok_or(Error::NotIntegral))
        .collect::<Result<_>>()?;
    let comp = ctx.companion();
    let denominator = q.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let mut state: Vec<Rational> = q.iter().map(frac_rational).collect();
    let mut seen: HashMap<Vec<Rational>, usize> = HashMap::new();
    let mut logs: Vec<f64> = Vec::new();
    for step in 0..budget {
        if let Some(&first) = seen.get(&state) {
            let cycle = &logs[first..];
            let mean = cycle.iter().sum::<f64>() / cycle.len() as f64;
            return Ok(OrbitMean {
                cycle_length: step - first,
                preperiod: first,
                mean,
                denominator: denominator.to_string(),
            });
        }
        let x: Vec<f64> = state.iter().map(rational_to_f64).collect();
        let v = torus_mask(mask, &coords, &x).norm();
        if v < mask.tol.zero {
            return Err(Error::ZeroOnOrbit { index: step });
        }
        logs.push(v.ln());
        let next: Vec<Rational> = comp
            .iter()
            .map(|row| {
                let s = row
                    .iter()
                    .zip(&state)
                    .filter(|(c, _)| **c != 0)
                    .fold(Rational::zero(), |acc, (c, v)| acc + v * linalg::int(*c));
                frac_rational(&s)
            })
            .collect();
        seen.insert(std::mem::replace(&mut state, next), step);
    }
    Err(Error::OrbitBudgetExceeded(budget))
}

#[cfg(test)]
mod tests {
    use super::*;

    const PHI: f64 = 1.618_033_988_749_895;

    #[test]
    fn classical_masks_have_rank_one() {
        let h = haar();
        assert_eq!(h.rank(), 1);
        assert_eq!(h.exponents(), &[vec![0], vec![1]]);
        let c = cantor();
        assert_eq!(c.basis_values(), &[2.0]);
        assert_eq!(c.exponents(), &[vec![0], vec![1]]);
        let p = c.univariate_polynomial().unwrap();
        assert_eq!(p, vec![Complex64::new(0.5, 0.0); 2]);
    }

    #[test]
    fn validation_errors() {
        let one = || vec![linalg::int(0)];
        let err = build_mask(Dilation::Real(2.0), vec![Complex64::new(1.0, 0.0)], vec![one()]).unwrap_err();
        assert!(matches!(err, Error::SumRuleViolated { .. }));
        let err = build_mask(
            Dilation::Real(2.0),
            vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)],
            vec![one(), vec![linalg::int(1)]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::ZeroCoefficient(1)));
        let err = build_mask(
            Dilation::Real(2.0),
            vec![Complex64::new(1.0, 0.0); 2],
            vec![vec![linalg::int(1)], one()],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonIncreasingTranslations(1)));
    }

    #[test]
    fn negative_exponents_are_shifted() {
        let m = build_mask(
            Dilation::Real(2.0),
            vec![Complex64::new(1.0, 0.0); 2],
            vec![vec![linalg::int(-3)], vec![linalg::int(-1)]],
        )
        .unwrap();
        assert!(m.exponents().iter().flatten().all(|&e| e >= 0));
        for y in [0.1, 0.37, 2.9] {
            assert!((m.eval(y) - m.eval_via_exponents(y)).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_mask() {
        let m = build_mask(Dilation::Real(2.0), vec![Complex64::new(2.0, 0.0)], vec![vec![linalg::int(0)]]).unwrap();
        assert_eq!(m.rank(), 0);
        assert_eq!(mahler_mask(&m).unwrap().value, 1.0);
        assert_eq!(mean_log_mask(&m, 10.0, 4).unwrap().value, 0.0);
    }

    #[test]
    fn hat_at_zero_and_half() {
        let h = haar();
        assert_eq!(fourier_hat(&h, 0.0, 1e-13), Complex64::new(1.0, 0.0));
        assert!((fourier_hat(&h, 0.5, 1e-13).norm() - 2.0 / std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn haar_alpha_one_hits_zero() {
        assert!(matches!(fourier_hat_checked(&haar(), 1.0, 1e-13), Err(Error::ZeroHit { j: -1 })));
    }

    #[test]
    fn bernoulli_rho() {
        let ctx = MinPolyContext::new(&[-1, -1]).unwrap();
        let r = rho(&bernoulli(&ctx)).unwrap();
        assert!((r - 2f64.ln() / PHI.ln()).abs() < 1e-12);
    }

    #[test]
    fn orbit_of_zero_is_fixed() {
        let ctx = MinPolyContext::new(&[-1, -1]).unwrap();
        let o = orbit_mean(&bernoulli(&ctx), &[Rational::zero(), Rational::zero()], 10).unwrap();
        assert_eq!((o.cycle_length, o.preperiod), (1, 0));
        assert!(o.mean.abs() < 1e-15);
    }
}
