//! Feasibility of small linear systems over the non-negative orthant.
//!
//! Phase one of the simplex method: add one artificial variable per row and
//! minimize their sum. Pivoting uses Bland's rule, so it terminates without
//! anti-cycling safeguards.

use alloc::vec;

use crate::error::{Error, Result};
use crate::math::abs;
use crate::matrix::Matrix;

const PIVOT_TOL: f64 = 1e-12;

/// Whether `A y = b` has a solution with `y >= 0`.
pub fn nonnegative_solution_exists(a: &Matrix, b: &[f64]) -> Result<bool> {
    let (p, q) = a.dim();
    if b.len() != p {
        return Err(Error::DimensionMismatch {
            expected: (p, 1),
            got: (b.len(), 1),
        });
    }
    let w = q + p + 1;
    let rhs = w - 1;
    let mut tab = vec![0.0; (p + 1) * w];
    let scale = 1.0 + b.iter().map(|x| abs(*x)).sum::<f64>();
    for r in 0..p {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..q {
            tab[r * w + c] = sign * a[(r, c)];
        }
        tab[r * w + q + r] = 1.0;
        tab[r * w + rhs] = sign * b[r];
    }
    // reduced costs of sum(artificials) expressed in the non-basic variables
    for c in (0..q).chain(core::iter::once(rhs)) {
        let s: f64 = (0..p).map(|r| tab[r * w + c]).sum();
        tab[p * w + c] = -s;
    }
    let mut basis: alloc::vec::Vec<usize> = (q..q + p).collect();

    while let Some(enter) = (0..q + p).find(|&c| tab[p * w + c] < -PIVOT_TOL) {
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..p {
            let coef = tab[r * w + enter];
            if coef > PIVOT_TOL {
                let ratio = tab[r * w + rhs] / coef;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - PIVOT_TOL || (abs(ratio - lratio) <= PIVOT_TOL && basis[r] < basis[lr]) {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        // phase one is bounded below by zero, so a missing leaving row cannot happen
        let Some((row, _)) = leave else { break };
        pivot(&mut tab, w, p, row, enter);
        basis[row] = enter;
    }
    let infeasibility = -tab[p * w + rhs];
    Ok(infeasibility <= 1e-9 * scale)
}

fn pivot(tab: &mut [f64], w: usize, p: usize, row: usize, col: usize) {
    let piv = tab[row * w + col];
    for c in 0..w {
        tab[row * w + c] /= piv;
    }
    for r in 0..=p {
        if r == row {
            continue;
        }
        let f = tab[r * w + col];
        if f != 0.0 {
            for c in 0..w {
                tab[r * w + c] -= f * tab[row * w + c];
            }
        }
    }
}

/// Whether `A x = b` has a solution with every `x_i >= eps`.
pub fn solution_at_least(a: &Matrix, b: &[f64], eps: f64) -> Result<bool> {
    let (p, q) = a.dim();
    if b.len() != p {
        return Err(Error::DimensionMismatch {
            expected: (p, 1),
            got: (b.len(), 1),
        });
    }
    // x = eps + y
    let shifted: alloc::vec::Vec<f64> = (0..p)
        .map(|r| b[r] - eps * (0..q).map(|c| a[(r, c)]).sum::<f64>())
        .collect();
    nonnegative_solution_exists(a, &shifted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_cases() {
        let a = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        assert!(nonnegative_solution_exists(&a, &[1.0]).unwrap());
        assert!(!nonnegative_solution_exists(&a, &[-1.0]).unwrap());
        assert!(nonnegative_solution_exists(&a, &[0.0]).unwrap());
        assert!(!solution_at_least(&a, &[0.0], 1e-9).unwrap());

        let a = Matrix::from_rows(&[[1.0, -1.0], [1.0, 1.0]]).unwrap();
        // x - y = 3, x + y = 1 -> y = -1
        assert!(!nonnegative_solution_exists(&a, &[3.0, 1.0]).unwrap());
        assert!(nonnegative_solution_exists(&a, &[0.5, 1.0]).unwrap());
    }

    #[test]
    fn redundant_rows() {
        let a = Matrix::from_rows(&[[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 1.0, 1.0]]).unwrap();
        assert!(nonnegative_solution_exists(&a, &[2.0, 4.0, 1.0]).unwrap());
        assert!(!nonnegative_solution_exists(&a, &[2.0, 5.0, 1.0]).unwrap());
    }

    #[test]
    fn dimension_checked() {
        let a = Matrix::filled(2, 2, 1.0);
        assert!(nonnegative_solution_exists(&a, &[1.0]).is_err());
    }
}
