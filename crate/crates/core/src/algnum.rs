//! Arithmetic in Q(λ) for a real algebraic integer λ given by its minimal
//! polynomial: conjugate embeddings, the companion / Vandermonde pair, exact
//! traces and norms, and the nearest-integer sequence of a Pisot number.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Rational};
use crate::poly;
use crate::tol::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "PV")]
    Pv,
    #[serde(rename = "Salem")]
    Salem,
    #[serde(rename = "neither")]
    Neither,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Pv => "PV",
            Classification::Salem => "Salem",
            Classification::Neither => "neither",
        })
    }
}

/// On-disk form of a context. Roots are always re-derived on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSpec {
    /// c_0..c_{n-1} of z^n + c_{n-1} z^{n-1} + ... + c_0.
    pub coeffs: Vec<i64>,
    #[serde(default = "default_precision")]
    pub precision_bits: u32,
}

fn default_precision() -> u32 {
    64
}

/// A monic irreducible integer polynomial together with its roots and the
/// matrices built from them.
///
/// `roots[0]` is the real root of largest modulus. The remaining roots follow
/// in decreasing modulus, real roots before complex ones of equal modulus and
/// each complex pair stored adjacently with the positive imaginary part first.
#[derive(Debug, Clone)]
pub struct MinPolyContext {
    coeffs: Vec<i64>,
    precision_bits: u32,
    roots: Vec<Complex64>,
    companion: Vec<Vec<i64>>,
    vandermonde: Vec<Vec<Complex64>>,
    classification: Classification,
    unit_constant: bool,
    tol: Tolerances,
    warnings: Vec<String>,
}

impl MinPolyContext {
    pub fn new(coeffs: &[i64]) -> Result<Arc<Self>> {
        Self::with_options(coeffs, 64, Tolerances::default())
    }

    /// Build from the full coefficient list, constant term first and the
    /// leading coefficient last.
    pub fn from_full_coefficients(full: &[i64]) -> Result<Arc<Self>> {
        match full.last() {
            Some(1) => Self::new(&full[..full.len() - 1]),
            Some(_) => Err(Error::NonMonic),
            None => Err(Error::DegreeTooSmall { min: 2, got: 0 }),
        }
    }

    pub fn from_spec(spec: &ContextSpec, tol: Tolerances) -> Result<Arc<Self>> {
        Self::with_options(&spec.coeffs, spec.precision_bits, tol)
    }

    pub fn with_options(coeffs: &[i64], precision_bits: u32, tol: Tolerances) -> Result<Arc<Self>> {
        let n = coeffs.len();
        if n < 2 {
            return Err(Error::DegreeTooSmall { min: 2, got: n });
        }
        if precision_bits == 0 || precision_bits > 64 {
            return Err(Error::InvalidArgument(format!(
                "precision_bits must be in 1..=64 (f64 working precision), got {precision_bits}"
            )));
        }
        if coeffs[0] == 0 {
            return Err(Error::ZeroConstantTerm);
        }
        if let Some(r) = rational_root(coeffs) {
            return Err(Error::RationalRootFound(r));
        }
        let mut warnings = Vec::new();
        if n > 3 {
            warnings.push(
                "irreducibility of degree >= 4 polynomials is assumed, not verified".to_string(),
            );
        }

        let roots = find_roots(coeffs, &tol)?;
        let lead = roots[0];
        let max_conj = roots[1..].iter().map(|z| z.norm()).fold(0.0, f64::max);
        let classification = if lead.norm() > 1.0 && max_conj < 1.0 - tol.unit {
            Classification::Pv
        } else if lead.norm() > 1.0
            && max_conj <= 1.0 + tol.unit
            && roots[1..].iter().any(|z| (z.norm() - 1.0).abs() <= tol.unit)
        {
            Classification::Salem
        } else {
            Classification::Neither
        };
        if classification == Classification::Pv && max_conj > 1.0 - 1e3 * tol.unit {
            warnings.push(format!("PV margin {:e} is close to the tolerance band", 1.0 - max_conj));
        }

        let companion = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i + 1 < n { i64::from(j == i + 1) } else { -coeffs[j] })
                    .collect()
            })
            .collect();
        let vandermonde = (0..n).map(|i| roots.iter().map(|z| z.powu(i as u32)).collect()).collect();

        Ok(Arc::new(MinPolyContext {
            coeffs: coeffs.to_vec(),
            precision_bits,
            roots,
            companion,
            vandermonde,
            classification,
            unit_constant: coeffs[0].abs() == 1,
            tol,
            warnings,
        }))
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    /// The distinguished real root λ = λ_1.
    pub fn lambda(&self) -> f64 {
        self.roots[0].re
    }

    /// max_{j >= 2} |λ_j|.
    pub fn max_conjugate_modulus(&self) -> f64 {
        self.roots[1..].iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Distance of the largest conjugate modulus below 1 (negative if above).
    pub fn pv_margin(&self) -> f64 {
        1.0 - self.max_conjugate_modulus()
    }

    pub fn classification(&self) -> Classification {
        self.classification
    }

    pub fn is_pv(&self) -> bool {
        self.classification == Classification::Pv
    }

    pub fn unit_constant(&self) -> bool {
        self.unit_constant
    }

    pub fn companion(&self) -> &[Vec<i64>] {
        &self.companion
    }

    pub fn vandermonde(&self) -> &[Vec<Complex64>] {
        &self.vandermonde
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn spec(&self) -> ContextSpec {
        ContextSpec { coeffs: self.coeffs.clone(), precision_bits: self.precision_bits }
    }

    /// Index of the partner of root `j` (itself for real roots).
    pub fn conjugate_partner(&self, j: usize) -> usize {
        let z = self.roots[j];
        if z.im == 0.0 {
            j
        } else if z.im > 0.0 {
            j + 1
        } else {
            j - 1
        }
    }

    /// Relative size of C^k V - V D^k, scaled by the largest entry of V D^k.
    pub fn companion_identity_residual(&self, k: u32) -> f64 {
        let n = self.degree();
        let c: Vec<Vec<Complex64>> = self
            .companion
            .iter()
            .map(|row| row.iter().map(|&v| Complex64::new(v as f64, 0.0)).collect())
            .collect();
        let mut left = self.vandermonde.clone();
        for _ in 0..k {
            left = (0..n)
                .map(|i| (0..n).map(|j| (0..n).map(|l| c[i][l] * left[l][j]).sum()).collect())
                .collect();
        }
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let right = self.vandermonde[i][j] * self.roots[j].powu(k);
                worst = worst.max((left[i][j] - right).norm());
                scale = scale.max(right.norm());
            }
        }
        worst / scale.max(1.0)
    }

    /// |Λ(λ_j)| for every root.
    pub fn root_residuals(&self) -> Vec<f64> {
        let full = full_complex(&self.coeffs);
        self.roots.iter().map(|&z| poly::eval(&full, z).norm()).collect()
    }

    fn same_field(&self, other: &MinPolyContext) -> bool {
        self.coeffs == other.coeffs
    }
}

fn full_complex(coeffs: &[i64]) -> Vec<Complex64> {
    coeffs
        .iter()
        .map(|&c| Complex64::new(c as f64, 0.0))
        .chain(std::iter::once(Complex64::new(1.0, 0.0)))
        .collect()
}

/// Rational root test for a monic integer polynomial: any rational root is an
/// integer dividing c_0.
fn rational_root(coeffs: &[i64]) -> Option<i64> {
    let c0 = coeffs[0].unsigned_abs();
    let eval = |x: i64| -> bool {
        let x = BigInt::from(x);
        let mut acc = BigInt::one();
        for &c in coeffs.iter().rev() {
            acc = acc * &x + BigInt::from(c);
        }
        acc.is_zero()
    };
    let mut d = 1u64;
    while d * d <= c0 {
        if c0 % d == 0 {
            for cand in [d, c0 / d] {
                let cand = cand as i64;
                for x in [cand, -cand] {
                    if eval(x) {
                        return Some(x);
                    }
                }
            }
        }
        d += 1;
    }
    None
}

fn find_roots(coeffs: &[i64], tol: &Tolerances) -> Result<Vec<Complex64>> {
    let full = full_complex(coeffs);
    let raw = poly::roots(&full)?;
    let mut real = Vec::new();
    let mut upper = Vec::new();
    let mut lower_count = 0usize;
    for z in raw {
        let z = poly::polish(&full, z, 8);
        if z.im.abs() <= 1e-7 * z.norm().max(1.0) {
            let z = poly::polish(&full, Complex64::new(z.re, 0.0), 8);
            real.push(Complex64::new(z.re, 0.0));
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower_count += 1;
        }
    }
    if upper.len() != lower_count {
        return Err(Error::RootFindingDiverged { iterations: 0 });
    }
    for z in real.iter().chain(upper.iter()) {
        if poly::eval(&full, *z).norm() > tol.root * poly::eval_scale(&full, *z).max(1.0) {
            return Err(Error::RootFindingDiverged { iterations: 0 });
        }
    }
    let dominant = real
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
        .ok_or(Error::NoDominantRealRoot)?;
    let lead = real.remove(dominant);
    let others_max = real.iter().chain(upper.iter()).map(|z| z.norm()).fold(0.0, f64::max);
    if others_max >= lead.norm() - tol.unit {
        return Err(Error::NoDominantRealRoot);
    }

    // (modulus, is_complex, value) ordering
    let mut rest: Vec<(f64, bool, Complex64)> = real
        .into_iter()
        .map(|z| (z.norm(), false, z))
        .chain(upper.into_iter().map(|z| (z.norm(), true, z)))
        .collect();
    rest.sort_by(|a, b| {
        b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(b.2.re.total_cmp(&a.2.re))
    });
    let mut roots = vec![lead];
    for (_, is_complex, z) in rest {
        roots.push(z);
        if is_complex {
            roots.push(z.conj());
        }
    }
    Ok(roots)
}

/// Arithmetic operation selector for [`elem_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

/// An exact element q_0 + q_1 λ + ... + q_{n-1} λ^{n-1} of Q(λ).
#[derive(Clone)]
pub struct AlgebraicElement {
    ctx: Arc<MinPolyContext>,
    coords: Vec<Rational>,
}

impl fmt::Debug for AlgebraicElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|q| q.to_string()).collect();
        write!(f, "AlgebraicElement[{}]", parts.join(", "))
    }
}

impl PartialEq for AlgebraicElement {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.same_field(&other.ctx) && self.coords == other.coords
    }
}

impl Eq for AlgebraicElement {}

impl Hash for AlgebraicElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.coords.hash(state);
    }
}

impl AlgebraicElement {
    pub fn new(ctx: &Arc<MinPolyContext>, coords: Vec<Rational>) -> Result<Self> {
        if coords.len() != ctx.degree() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coordinates, got {}",
                ctx.degree(),
                coords.len()
            )));
        }
        Ok(AlgebraicElement { ctx: Arc::clone(ctx), coords })
    }

    pub fn from_integers(ctx: &Arc<MinPolyContext>, coords: &[i64]) -> Result<Self> {
        Self::new(ctx, coords.iter().map(|&c| linalg::int(c)).collect())
    }

    pub fn from_big_integers(ctx: &Arc<MinPolyContext>, coords: &[BigInt]) -> Result<Self> {
        Self::new(ctx, coords.iter().map(|c| Rational::from_integer(c.clone())).collect())
    }

    pub fn zero(ctx: &Arc<MinPolyContext>) -> Self {
        AlgebraicElement { ctx: Arc::clone(ctx), coords: vec![Rational::zero(); ctx.degree()] }
    }

    pub fn one(ctx: &Arc<MinPolyContext>) -> Self {
        Self::rational(ctx, Rational::one())
    }

    pub fn rational(ctx: &Arc<MinPolyContext>, q: Rational) -> Self {
        let mut e = Self::zero(ctx);
        e.coords[0] = q;
        e
    }

    /// λ itself.
    pub fn generator(ctx: &Arc<MinPolyContext>) -> Self {
        let mut e = Self::zero(ctx);
        e.coords[1] = Rational::one();
        e
    }

    /// λ^{-1} = -(λ^{n-1} + c_{n-1} λ^{n-2} + ... + c_1) / c_0.
    pub fn generator_inverse(ctx: &Arc<MinPolyContext>) -> Self {
        let n = ctx.degree();
        let c0 = linalg::int(ctx.coeffs[0]);
        let coords = (0..n)
            .map(|i| {
                let c = if i + 1 < n { linalg::int(ctx.coeffs[i + 1]) } else { Rational::one() };
                -c / &c0
            })
            .collect();
        AlgebraicElement { ctx: Arc::clone(ctx), coords }
    }

    pub fn context(&self) -> &Arc<MinPolyContext> {
        &self.ctx
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    /// Membership in Z[λ]: all coordinates are integers.
    pub fn is_integral(&self) -> bool {
        self.coords.iter().all(|q| q.is_integer())
    }

    pub fn integer_coords(&self) -> Option<Vec<BigInt>> {
        self.is_integral().then(|| self.coords.iter().map(|q| q.to_integer()).collect())
    }

    pub fn i64_coords(&self) -> Option<Vec<i64>> {
        self.integer_coords()?.iter().map(ToPrimitive::to_i64).collect()
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.ctx.same_field(&other.ctx) {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect();
        Ok(AlgebraicElement { ctx: Arc::clone(&self.ctx), coords })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect();
        Ok(AlgebraicElement { ctx: Arc::clone(&self.ctx), coords })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut acc = Self::zero(&self.ctx);
        let mut shifted = other.clone();
        for (i, q) in self.coords.iter().enumerate() {
            if !q.is_zero() {
                for (a, b) in acc.coords.iter_mut().zip(&shifted.coords) {
                    *a += q * b;
                }
            }
            if i + 1 < self.coords.len() {
                shifted = shifted.mul_generator();
            }
        }
        Ok(acc)
    }

    pub fn neg(&self) -> Self {
        AlgebraicElement { ctx: Arc::clone(&self.ctx), coords: self.coords.iter().map(|q| -q).collect() }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        AlgebraicElement { ctx: Arc::clone(&self.ctx), coords: self.coords.iter().map(|c| c * q).collect() }
    }

    /// λ · self, i.e. the transposed companion matrix applied to the coordinates.
    pub fn mul_generator(&self) -> Self {
        let n = self.coords.len();
        let top = &self.coords[n - 1];
        let coords = (0..n)
            .map(|k| {
                let carried = if k > 0 { self.coords[k - 1].clone() } else { Rational::zero() };
                carried - linalg::int(self.ctx.coeffs[k]) * top
            })
            .collect();
        AlgebraicElement { ctx: Arc::clone(&self.ctx), coords }
    }

    /// λ^k · self for any integer k (negative powers go through λ^{-1}).
    pub fn mul_generator_pow(&self, k: i64) -> Self {
        if k >= 0 {
            (0..k).fold(self.clone(), |acc, _| acc.mul_generator())
        } else {
            let inv = Self::generator_inverse(&self.ctx);
            (0..-k).fold(self.clone(), |acc, _| acc.mul(&inv).expect("same context"))
        }
    }

    /// Conjugate embeddings: component j is q_0 + q_1 λ_j + ... + q_{n-1} λ_j^{n-1}.
    pub fn embed(&self) -> Vec<Complex64> {
        let q: Vec<f64> = self.coords.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
        self.ctx
            .roots
            .iter()
            .map(|&z| q.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c))
            .collect()
    }

    /// Real value under the distinguished embedding.
    pub fn value(&self) -> f64 {
        self.embed()[0].re
    }

    /// Matrix of multiplication by `self` on the power basis (column i is the
    /// coordinate vector of self · λ^i).
    pub fn multiplication_matrix(&self) -> Vec<Vec<Rational>> {
        let n = self.coords.len();
        let mut cols = Vec::with_capacity(n);
        let mut col = self.clone();
        for i in 0..n {
            cols.push(col.coords.clone());
            if i + 1 < n {
                col = col.mul_generator();
            }
        }
        (0..n).map(|r| (0..n).map(|c| cols[c][r].clone()).collect()).collect()
    }

    /// Exact trace and norm from the multiplication matrix.
    pub fn trace_and_norm(&self) -> (Rational, Rational) {
        let m = self.multiplication_matrix();
        let trace = (0..m.len()).fold(Rational::zero(), |acc, i| acc + &m[i][i]);
        (trace, linalg::det(&m))
    }

    pub fn trace(&self) -> Rational {
        self.trace_and_norm().0
    }
}

/// Apply `op` to two elements of the same field.
pub fn elem_arith(a: &AlgebraicElement, b: &AlgebraicElement, op: ArithOp) -> Result<AlgebraicElement> {
    match op {
        ArithOp::Add => a.add(b),
        ArithOp::Sub => a.sub(b),
        ArithOp::Mul => a.mul(b),
    }
}

/// One term of the nearest-integer sequence of λ^k α.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PvNormTerm {
    pub k: usize,
    /// n_k = Tr(λ^k α), an integer.
    pub nearest: BigInt,
    /// |λ^k α - n_k|.
    pub distance: f64,
}

/// For a Pisot λ and α ∈ Z[λ]: n_k = Tr(λ^k α) exactly and the distance
/// |λ^k α - n_k| = |Σ_{j>=2} λ_j^k α_j| evaluated from the small conjugates,
/// which keeps full relative accuracy where the float value of λ^k α would not.
pub fn pvnorm_sequence(alpha: &AlgebraicElement, k_max: usize) -> Result<Vec<PvNormTerm>> {
    let ctx = alpha.context();
    if !ctx.is_pv() {
        return Err(Error::NotPv);
    }
    if !alpha.is_integral() {
        return Err(Error::NotIntegral);
    }
    let conj = alpha.embed();
    let mut power = alpha.clone();
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let trace = power.trace();
        debug_assert!(trace.is_integer());
        let tail: Complex64 =
            (1..ctx.degree()).map(|j| ctx.roots[j].powi(k as i32) * conj[j]).sum();
        out.push(PvNormTerm { k, nearest: trace.to_integer(), distance: tail.norm() });
        power = power.mul_generator();
    }
    Ok(out)
}

/// Reduce an exact rational modulo 1 into [0, 1).
pub fn frac_rational(q: &Rational) -> Rational {
    q - Rational::from_integer(q.numer().div_floor(q.denom()))
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// |q| as f64.
pub fn abs_f64(q: &BigRational) -> f64 {
    rational_to_f64(&q.abs())
}
