//! Multiresolution nesting W_k ⊂ W_{k+1} at the level of lattice
//! inclusions, and piecewise-constant projection onto the grids λ^{-k}𝔏(σ).

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::algnum::MinPolyContext;
use crate::error::{Error, Result};
use crate::qlat::{
    add_preimages, deflate_preimage, embed_integer, fmt17, generate, inflate_preimage, window_margin, Quasilattice,
    WindowVector,
};

/// ξ = [0, (1 - |λ_2|)σ_2, ..., (1 - |λ_n|)σ_n].
pub fn derive_xi(ctx: &MinPolyContext, sigma: &WindowVector) -> Result<WindowVector> {
    if !ctx.unit_constant() {
        return Err(Error::NotUnitConstant);
    }
    sigma.validate(ctx)?;
    let xi = WindowVector::new(
        sigma
            .values()
            .iter()
            .zip(ctx.roots())
            .enumerate()
            .map(|(j, (s, z))| if j == 0 { 0.0 } else { (1.0 - z.norm()) * s })
            .collect(),
    );
    xi.validate(ctx)?;
    Ok(xi)
}

/// max_j | |λ_j|σ_j + ξ_j - σ_j |.
pub fn window_identity_residual(ctx: &MinPolyContext, sigma: &WindowVector, xi: &WindowVector) -> f64 {
    (1..ctx.degree())
        .map(|j| (ctx.roots()[j].norm() * sigma.values()[j] + xi.values()[j] - sigma.values()[j]).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct MraConfig {
    ctx: Arc<MinPolyContext>,
    sigma: WindowVector,
    xi: WindowVector,
    translations: Vec<Vec<i64>>,
}

impl MraConfig {
    /// Requires every translation to lie in 𝔏(ξ) with margin above tol_boundary.
    pub fn new(ctx: &Arc<MinPolyContext>, sigma: WindowVector, translations: Vec<Vec<i64>>) -> Result<Self> {
        let cfg = Self::unchecked(ctx, sigma, translations)?;
        let tol = ctx.tolerances().boundary;
        for (j, t) in cfg.translations.iter().enumerate() {
            let m = window_margin(&cfg.xi, &embed_integer(ctx, t));
            if m <= tol {
                return Err(Error::InvalidArgument(format!(
                    "translation {j} {t:?} is not inside L(xi) (margin {m:e})"
                )));
            }
        }
        Ok(cfg)
    }

    /// Skips the 𝔏(ξ) membership test; used to build negative controls.
    pub fn unchecked(ctx: &Arc<MinPolyContext>, sigma: WindowVector, translations: Vec<Vec<i64>>) -> Result<Self> {
        let xi = derive_xi(ctx, &sigma)?;
        let n = ctx.degree();
        if let Some(j) = translations.iter().position(|t| t.len() != n) {
            return Err(Error::InvalidArgument(format!("translation {j} needs {n} coordinates")));
        }
        Ok(MraConfig { ctx: Arc::clone(ctx), sigma, xi, translations })
    }

    pub fn context(&self) -> &Arc<MinPolyContext> {
        &self.ctx
    }

    pub fn sigma(&self) -> &WindowVector {
        &self.sigma
    }

    pub fn xi(&self) -> &WindowVector {
        &self.xi
    }

    pub fn translations(&self) -> &[Vec<i64>] {
        &self.translations
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestingReport {
    pub violations: usize,
    pub checked_pairs: usize,
    pub min_margin: f64,
    /// Pairs with |margin| below tol_boundary, counted neither way.
    pub undecided: usize,
    /// Counts of margins in ten equal bins over [0, max σ_j].
    pub histogram: Vec<usize>,
}

/// λτ + τ_j ∈ 𝔏(σ) for every τ ∈ 𝔏(σ) ∩ [-L/|λ|, L/|λ|] and every τ_j.
pub fn check_nesting(cfg: &MraConfig, half_width: f64) -> Result<NestingReport> {
    let ctx = &cfg.ctx;
    let q = generate(ctx, &cfg.sigma, half_width / ctx.lambda().abs())?;
    let tol = ctx.tolerances().boundary;
    let top = cfg.sigma.values()[1..].iter().copied().fold(0.0, f64::max);
    let margins: Vec<f64> = q
        .points()
        .par_iter()
        .flat_map_iter(|p| {
            let base = inflate_preimage(ctx, &p.preimage);
            cfg.translations
                .iter()
                .map(move |t| window_margin(&cfg.sigma, &embed_integer(ctx, &add_preimages(&base, t))))
                .collect::<Vec<_>>()
        })
        .collect();
    let mut report = NestingReport {
        violations: 0,
        checked_pairs: margins.len(),
        min_margin: f64::INFINITY,
        undecided: 0,
        histogram: vec![0; 10],
    };
    for m in margins {
        report.min_margin = report.min_margin.min(m);
        if m < -tol {
            report.violations += 1;
        } else if m <= tol {
            report.undecided += 1;
        }
        if m >= 0.0 {
            let bin = ((m / top) * 10.0).floor() as usize;
            report.histogram[bin.min(9)] += 1;
        }
    }
    Ok(report)
}

/// A point of 𝔏(σ) \ 𝔏(ξ) close to the σ boundary, found by enumeration;
/// used as an oversized translation in negative controls.
pub fn find_outside_xi(ctx: &Arc<MinPolyContext>, sigma: &WindowVector, half_width: f64) -> Result<Vec<i64>> {
    let xi = derive_xi(ctx, sigma)?;
    let q = generate(ctx, sigma, half_width)?;
    q.points()
        .iter()
        .filter(|p| window_margin(&xi, &embed_integer(ctx, &p.preimage)) < 0.0)
        .min_by(|a, b| a.margin.total_cmp(&b.margin).then_with(|| a.preimage.cmp(&b.preimage)))
        .map(|p| p.preimage.clone())
        .ok_or(Error::TooFewPoints { found: 0, needed: 1 })
}

/// Breakpoint λ^{-k}ℓ of a level-k grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breakpoint {
    pub value: f64,
    pub preimage: Vec<i64>,
}

/// λ^{-k}𝔏(σ) ∩ λ^{-k}[-L, L], sorted, with exact preimages.
pub fn breakpoints(q: &Quasilattice, k: usize) -> Result<Vec<Breakpoint>> {
    let ctx = q.context();
    let mut out = q
        .points()
        .iter()
        .map(|p| {
            let mut pre = p.preimage.clone();
            for _ in 0..k {
                pre = deflate_preimage(ctx, &pre).ok_or(Error::NotUnitConstant)?;
            }
            Ok(Breakpoint { value: embed_integer(ctx, &pre)[0].re, preimage: pre })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(out)
}

/// A function constant on each interval [b_i, b_{i+1}) of a level-k grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseConstant {
    pub level: usize,
    pub breakpoints: Vec<Breakpoint>,
    /// values[i] holds on [breakpoints[i], breakpoints[i+1]).
    pub values: Vec<f64>,
    /// Intervals without samples, filled from the nearest sampled interval.
    pub filled: Vec<usize>,
}

impl PiecewiseConstant {
    pub fn eval(&self, x: f64) -> Option<f64> {
        let i = self.breakpoints.partition_point(|b| b.value <= x);
        if i == 0 || i == self.breakpoints.len() {
            return None;
        }
        Some(self.values[i - 1])
    }

    pub fn is_breakpoint(&self, x: f64, tol: f64) -> bool {
        let i = self.breakpoints.partition_point(|b| b.value < x);
        [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter_map(|j| self.breakpoints.get(j))
            .any(|b| (b.value - x).abs() <= tol)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.filled
            .iter()
            .map(|i| format!("interval {i} had no samples; filled from nearest neighbour"))
            .collect()
    }

    /// CSV: breakpoint, value (the last breakpoint closes the final interval).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("breakpoint,value\n");
        for (i, b) in self.breakpoints.iter().enumerate() {
            let v = self.values.get(i).map_or(String::new(), |v| fmt17(*v));
            let _ = writeln!(out, "{},{v}", fmt17(b.value));
        }
        out
    }
}

/// Average the samples on each interval of λ^{-k}𝔏(σ) that meets the
/// sample range. Intervals whose samples all agree take that value exactly.
pub fn project_pc(q: &Quasilattice, samples: &[(f64, f64)], k: usize) -> Result<PiecewiseConstant> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let all = breakpoints(q, k)?;
    let covers = matches!((all.first(), all.last()), (Some(a), Some(b)) if a.value <= lo && b.value > hi);
    if !covers {
        return Err(Error::GridDoesNotCover {
            lo: all.first().map_or(f64::NAN, |b| b.value),
            hi: all.last().map_or(f64::NAN, |b| b.value),
            min: lo,
            max: hi,
        });
    }
    let start = all.partition_point(|b| b.value <= lo) - 1;
    let end = all.partition_point(|b| b.value <= hi) + 1;
    let bps: Vec<Breakpoint> = all[start..end].to_vec();
    let m = bps.len() - 1;
    let mut sums = vec![0.0; m];
    let mut counts = vec![0usize; m];
    let mut firsts: Vec<Option<f64>> = vec![None; m];
    let mut uniform = vec![true; m];
    for &(x, v) in samples {
        let i = bps.partition_point(|b| b.value <= x) - 1;
        sums[i] += v;
        counts[i] += 1;
        match firsts[i] {
            None => firsts[i] = Some(v),
            Some(f) if f != v => uniform[i] = false,
            _ => {}
        }
    }
    let mut values: Vec<Option<f64>> = (0..m)
        .map(|i| match (counts[i], firsts[i]) {
            (0, _) => None,
            (_, Some(f)) if uniform[i] => Some(f),
            (c, _) => Some(sums[i] / c as f64),
        })
        .collect();
    let sampled: Vec<usize> = (0..m).filter(|&i| values[i].is_some()).collect();
    let mut filled = Vec::new();
    for i in 0..m {
        if values[i].is_none() {
            let j = sampled[sampled.partition_point(|&s| s < i).min(sampled.len() - 1)];
            let left = sampled.iter().rev().find(|&&s| s < i).copied();
            let nearest = match left {
                Some(l) if i - l <= j.abs_diff(i) => l,
                _ => j,
            };
            values[i] = values[nearest];
            filled.push(i);
        }
    }
    Ok(PiecewiseConstant {
        level: k,
        breakpoints: bps,
        values: values.into_iter().map(|v| v.expect("filled")).collect(),
        filled,
    })
}
