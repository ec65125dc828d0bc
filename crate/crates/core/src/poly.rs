//! Simultaneous polynomial root finding (Aberth–Ehrlich) and Jensen-formula
//! Mahler measures.
//!
//! Coefficient slices are ordered from the constant term upward.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 2000;

/// Horner evaluation of p and p' at `z`.
pub fn eval_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

pub fn eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Σ |c_i| |z|^i, the scale against which a residual |p(z)| is judged.
pub fn eval_scale(coeffs: &[Complex64], z: Complex64) -> f64 {
    let r = z.norm();
    coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
}

/// Drop high-order zero coefficients.
fn trim(coeffs: &[Complex64]) -> &[Complex64] {
    let mut end = coeffs.len();
    while end > 0 && coeffs[end - 1] == Complex64::new(0.0, 0.0) {
        end -= 1;
    }
    &coeffs[..end]
}

/// All complex roots of a polynomial, with multiplicity.
///
/// Uses the Aberth–Ehrlich iteration from points on a circle whose radius is
/// the geometric mean of the root moduli. Fails only when the iteration neither
/// converges nor reaches a backward-stable residual.
pub fn roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let coeffs = trim(coeffs);
    if coeffs.is_empty() {
        return Err(Error::ZeroPolynomial);
    }
    // roots at the origin
    let zeros_at_origin = coeffs.iter().take_while(|c| c.norm() == 0.0).count();
    let reduced = &coeffs[zeros_at_origin..];
    let n = reduced.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
    if n == 0 {
        return Ok(out);
    }
    let lead = reduced[n];
    let monic: Vec<Complex64> = reduced.iter().map(|&c| c / lead).collect();
    if n == 1 {
        out.push(-monic[0]);
        return Ok(out);
    }

    let radius = monic[0].norm().powf(1.0 / n as f64).max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(radius, theta)
        })
        .collect();

    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let mut max_step = 0.0f64;
        for k in 0..n {
            let (p, dp) = eval_with_derivative(&monic, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| {
                    let d = z[k] - z[j];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[k] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
            }
        }
        if max_step < 4.0 * f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        let backward_ok = z
            .iter()
            .all(|&zk| eval(&monic, zk).norm() <= 1e3 * f64::EPSILON * eval_scale(&monic, zk));
        if !backward_ok {
            return Err(Error::RootFindingDiverged { iterations: MAX_ITERATIONS });
        }
    }
    out.extend(z);
    Ok(out)
}

/// A few Newton steps; stops early once the update stalls.
pub fn polish(coeffs: &[Complex64], mut z: Complex64, steps: usize) -> Complex64 {
    for _ in 0..steps {
        let (p, dp) = eval_with_derivative(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        if !step.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= f64::EPSILON * z.norm().max(1.0) {
            break;
        }
    }
    z
}

/// Newton-based distance estimate |p(z)/p'(z)| from `z` to the nearest root.
pub fn root_error(coeffs: &[Complex64], z: Complex64) -> f64 {
    let (p, dp) = eval_with_derivative(coeffs, z);
    if p.norm() == 0.0 {
        0.0
    } else if dp.norm() == 0.0 {
        f64::INFINITY
    } else {
        (p / dp).norm()
    }
}

/// Mahler measure of a univariate polynomial by Jensen's formula,
/// M = |c| ∏ max(1, |ω_j|). Returns (value, error estimate).
pub fn mahler_jensen(coeffs: &[Complex64]) -> Result<(f64, f64)> {
    let coeffs = trim(coeffs);
    if coeffs.is_empty() {
        return Err(Error::ZeroPolynomial);
    }
    let lead = coeffs[coeffs.len() - 1].norm();
    let zs = roots(coeffs)?;
    let mut log_m = lead.ln();
    let mut rel_err = 0.0;
    for z in zs {
        let z = polish(coeffs, z, 3);
        let r = z.norm();
        let e = root_error(coeffs, z);
        if r > 1.0 {
            log_m += r.ln();
        }
        if r + e > 1.0 {
            rel_err += e / r.max(1.0);
        }
    }
    let m = log_m.exp();
    Ok((m, m * rel_err))
}

pub fn from_real(coeffs: &[f64]) -> Vec<Complex64> {
    coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn quadratic_roots() {
        let r = sorted_re(roots(&from_real(&[-1.0, -1.0, 1.0])).unwrap());
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((r[0].re + 1.0 / phi).abs() < 1e-14);
        assert!((r[1].re - phi).abs() < 1e-14);
        assert!(r[0].im.abs() < 1e-14);
    }

    #[test]
    fn roots_at_origin_and_multiple() {
        // z^2 (z - 1)^3
        let r = roots(&from_real(&[0.0, 0.0, -1.0, 3.0, -3.0, 1.0])).unwrap();
        assert_eq!(r.len(), 5);
        assert_eq!(r.iter().filter(|z| z.norm() == 0.0).count(), 2);
        assert!(r.iter().filter(|z| z.norm() != 0.0).all(|z| (z - 1.0).norm() < 1e-4));
    }

    #[test]
    fn zero_polynomial_rejected() {
        assert!(matches!(roots(&from_real(&[0.0, 0.0])), Err(Error::ZeroPolynomial)));
        assert!(matches!(mahler_jensen(&[]), Err(Error::ZeroPolynomial)));
    }

    #[test]
    fn jensen_by_hand() {
        // 1 + z - z^2 has roots (1 ± √5)/2 and leading coefficient -1
        let (m, err) = mahler_jensen(&from_real(&[1.0, 1.0, -1.0])).unwrap();
        assert!((m - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-13);
        assert!(err < 1e-10);
        let (half, _) = mahler_jensen(&from_real(&[0.5, 0.5])).unwrap();
        assert!((half - 0.5).abs() < 1e-15);
    }

    #[test]
    fn high_degree_trinomial() {
        // 1 + z + z^400 has every root close to the unit circle
        let mut c = vec![0.0; 401];
        c[0] = 1.0;
        c[1] = 1.0;
        c[400] = 1.0;
        let r = roots(&from_real(&c)).unwrap();
        assert_eq!(r.len(), 400);
        let cc = from_real(&c);
        for z in r {
            assert!(eval(&cc, z).norm() < 1e-9 * eval_scale(&cc, z));
        }
    }
}
