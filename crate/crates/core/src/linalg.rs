//! Small dense linear algebra: exact rational determinants and ranks, integer
//! row-lattice bases, and a floating point inverse for enumeration bounds.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rational = BigRational;

/// Determinant by fraction-exact Gaussian elimination.
pub fn det(matrix: &[Vec<Rational>]) -> Rational {
    let n = matrix.len();
    let mut a: Vec<Vec<Rational>> = matrix.to_vec();
    let mut sign = Rational::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Rational::zero();
        };
        if pivot != col {
            a.swap(pivot, col);
            sign = -sign;
        }
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &a[col][col];
            for c in col..n {
                let delta = &f * &a[col][c];
                a[r][c] -= delta;
            }
        }
    }
    (0..n).fold(sign, |acc, i| acc * &a[i][i])
}

/// Rank over Q.
pub fn rank(matrix: &[Vec<Rational>]) -> usize {
    let mut a: Vec<Vec<Rational>> = matrix.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    for col in 0..cols {
        let Some(pivot) = (r..rows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(pivot, r);
        for i in r + 1..rows {
            if a[i][col].is_zero() {
                continue;
            }
            let f = &a[i][col] / &a[r][col];
            for c in col..cols {
                let delta = &f * &a[r][c];
                a[i][c] -= delta;
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// A Z-basis of the row lattice of an integer matrix, together with the
/// integer coordinates of every input row in that basis.
#[derive(Debug, Clone)]
pub struct RowLattice {
    /// Basis rows in echelon form.
    pub basis: Vec<Vec<BigInt>>,
    /// `coefficients[i][k]` is the weight of `basis[k]` in input row `i`.
    pub coefficients: Vec<Vec<BigInt>>,
}

/// Echelon-form Z-basis of the lattice spanned by `rows` (Euclidean reduction).
pub fn row_lattice(rows: &[Vec<BigInt>]) -> RowLattice {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<BigInt>> = rows.to_vec();
    let mut r = 0;
    let mut pivots = Vec::new();
    for col in 0..n {
        if r == m {
            break;
        }
        loop {
            // smallest nonzero entry in this column at or below row r
            let best = (r..m)
                .filter(|&i| !a[i][col].is_zero())
                .min_by(|&i, &j| a[i][col].abs().cmp(&a[j][col].abs()));
            let Some(best) = best else { break };
            a.swap(best, r);
            let mut done = true;
            for i in r + 1..m {
                if a[i][col].is_zero() {
                    continue;
                }
                let q = a[i][col].div_floor(&a[r][col]);
                for c in col..n {
                    let delta = &q * &a[r][c];
                    a[i][c] -= delta;
                }
                if !a[i][col].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if !a[r][col].is_zero() {
            if a[r][col].is_negative() {
                for c in col..n {
                    a[r][c] = -&a[r][c];
                }
            }
            pivots.push(col);
            r += 1;
        }
    }
    let basis: Vec<Vec<BigInt>> = a.into_iter().take(r).collect();
    let coefficients = rows
        .iter()
        .map(|row| {
            let mut rest = row.clone();
            let mut coeff = vec![BigInt::zero(); basis.len()];
            for (k, &p) in pivots.iter().enumerate() {
                let (q, rem) = rest[p].div_rem(&basis[k][p]);
                debug_assert!(rem.is_zero(), "row outside the lattice");
                for c in 0..n {
                    let delta = &q * &basis[k][c];
                    rest[c] -= delta;
                }
                coeff[k] = q;
            }
            debug_assert!(rest.iter().all(Zero::is_zero));
            coeff
        })
        .collect();
    RowLattice { basis, coefficients }
}

/// Inverse of a small real matrix by Gauss–Jordan with partial pivoting.
pub fn invert(matrix: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(pivot, col);
        let p = a[col][col];
        for c in 0..2 * n {
            a[col][c] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Determinant of a small real matrix by elimination with partial pivoting.
pub fn det_f64(matrix: &[Vec<f64>]) -> f64 {
    let n = matrix.len();
    let mut a = matrix.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).expect("square");
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    det
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}
