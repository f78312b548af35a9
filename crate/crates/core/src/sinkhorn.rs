//! Forward entropy-regularized transport via Sinkhorn scaling.
//!
//! Alternating row and column normalization of a positive kernel converges
//! to the unique matrix `diag(d_row) K diag(d_col)` with the prescribed
//! marginals. The scalings are kept as logs and every normalization is a
//! log-sum-exp, so kernels like `exp(-10 C)` do not under/overflow.

use alloc::vec::Vec;

use crate::crossratio::cr_equivalent;
use crate::error::{Error, Result};
use crate::math::{abs, exp, ln, log_sum_exp};
use crate::matrix::{kernel_from_cost, CostMatrix, Coupling, Kernel, Marginals, Matrix, ScalingPair};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornOptions {
    /// Stop once the L1 distance of row sums to `mu` after a column pass is at most this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornResult {
    pub coupling: Coupling,
    pub scaling: ScalingPair,
    /// Full row+column passes performed.
    pub iterations: usize,
    /// L1 row-marginal residual at exit.
    pub residual: f64,
}

impl AsRef<Matrix> for Kernel {
    fn as_ref(&self) -> &Matrix {
        self.matrix()
    }
}

impl AsRef<Matrix> for Matrix {
    fn as_ref(&self) -> &Matrix {
        self
    }
}

/// Scales `kernel` to marginals `marg`.
pub fn sinkhorn(kernel: impl AsRef<Matrix>, marg: &Marginals, opts: &SinkhornOptions) -> Result<SinkhornResult> {
    let k = kernel.as_ref();
    k.require_positive("kernel")?;
    let (m, n) = k.dim();
    if marg.mu().len() != m || marg.nu().len() != n {
        return Err(Error::DimensionMismatch {
            expected: (m, n),
            got: (marg.mu().len(), marg.nu().len()),
        });
    }
    if !(opts.tol > 0.0) {
        return Err(crate::error::invalid("tolerance must be positive"));
    }

    let log_k = k.map(ln);
    let log_mu: Vec<f64> = marg.mu().iter().map(|&x| ln(x)).collect();
    let log_nu: Vec<f64> = marg.nu().iter().map(|&x| ln(x)).collect();
    let mut u = alloc::vec![0.0; m];
    let mut v = alloc::vec![0.0; n];
    let mut residual = f64::INFINITY;

    for iter in 1..=opts.max_iter {
        for i in 0..m {
            let row = log_k.row(i);
            u[i] = log_mu[i] - log_sum_exp(row.iter().zip(&v).map(|(lk, vj)| lk + vj));
        }
        for j in 0..n {
            v[j] = log_nu[j] - log_sum_exp((0..m).map(|i| log_k[(i, j)] + u[i]));
        }
        let plan = Matrix::from_fn(m, n, |i, j| exp(log_k[(i, j)] + u[i] + v[j]));
        residual = plan.row_sums().iter().zip(marg.mu()).map(|(s, t)| abs(s - t)).sum();
        if residual <= opts.tol {
            return Ok(SinkhornResult {
                coupling: Coupling::new(plan)?,
                scaling: ScalingPair {
                    d_row: u.iter().map(|&x| exp(x)).collect(),
                    d_col: v.iter().map(|&x| exp(x)).collect(),
                },
                iterations: iter,
                residual,
            });
        }
    }
    let last = Matrix::from_fn(m, n, |i, j| exp(log_k[(i, j)] + u[i] + v[j]));
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual,
        last,
    })
}

/// Whether `exp(-lambda C)` has the cross-ratios of `t` within `tol` (log space).
pub fn is_on_manifold(cost: &CostMatrix, t: &Coupling, lambda: f64, tol: f64) -> Result<bool> {
    let k = kernel_from_cost(cost, lambda)?;
    cr_equivalent(k.matrix(), t.matrix()?, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossratio::max_log_ratio_gap;
    use crate::matrix::cost_from_kernel;
    use std::vec;

    const LN2: f64 = core::f64::consts::LN_2;

    fn example_one() -> (Kernel, Marginals) {
        (
            Kernel::from_rows(&[[1.0, 0.5], [0.25, 1.0]]).unwrap(),
            Marginals::new(vec![0.375, 0.625], vec![0.375, 0.625]).unwrap(),
        )
    }

    #[test]
    fn example_one_converges_in_one_pass() {
        let (k, marg) = example_one();
        let out = sinkhorn(&k, &marg, &SinkhornOptions::default()).unwrap();
        let want = Matrix::from_rows(&[[0.25, 0.125], [0.125, 0.5]]).unwrap();
        assert!(out.coupling.matrix().unwrap().max_abs_diff(&want) <= 1e-12);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn uniform_kernel_uniform_plan() {
        let k = Matrix::filled(3, 4, 0.7);
        let out = sinkhorn(&k, &Marginals::uniform(3, 4), &SinkhornOptions::default()).unwrap();
        for &x in out.coupling.matrix().unwrap().as_slice() {
            assert!((x - 1.0 / 12.0).abs() < 1e-15);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let k = Matrix::from_rows(&[[1.0, 1e-8], [1e-8, 1.0]]).unwrap();
        let marg = Marginals::new(vec![0.9, 0.1], vec![0.1, 0.9]).unwrap();
        let opts = SinkhornOptions {
            tol: 1e-14,
            max_iter: 3,
        };
        match sinkhorn(&k, &marg, &opts) {
            Err(Error::NotConverged {
                iterations,
                residual,
                last,
            }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-14);
                assert_eq!(last.dim(), (2, 2));
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn marginal_shape_checked() {
        let k = Matrix::filled(2, 3, 1.0);
        assert!(matches!(
            sinkhorn(&k, &Marginals::uniform(2, 2), &SinkhornOptions::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn scaling_reproduces_plan() {
        let k = Matrix::from_rows(&[[0.9, 0.2, 0.4], [0.1, 0.5, 0.3], [0.6, 0.7, 0.05]]).unwrap();
        let marg = Marginals::new(vec![0.2, 0.5, 0.3], vec![0.4, 0.4, 0.2]).unwrap();
        let out = sinkhorn(
            &k,
            &marg,
            &SinkhornOptions {
                tol: 1e-13,
                max_iter: 10_000,
            },
        )
        .unwrap();
        let rebuilt = out.scaling.apply(&k);
        assert!(rebuilt.max_abs_diff(out.coupling.matrix().unwrap()) < 1e-13);
    }

    #[test]
    fn manifold_membership() {
        let c = CostMatrix::from_rows(&[[0.0, LN2], [2.0 * LN2, 0.0]]).unwrap();
        let t = Coupling::from_rows(&[[0.25, 0.125], [0.125, 0.5]]).unwrap();
        assert!(is_on_manifold(&c, &t, 1.0, 1e-12).unwrap());

        // C' = [[ln a * 1, ln a * 2], [ln b * 4, ln b * 1]], i.e. K' = diag(1/a, 1/b) K
        let (a, b) = (2.0f64, 3.0f64);
        let shifted = CostMatrix::from_rows(&[[a.ln(), a.ln() + LN2], [b.ln() + 2.0 * LN2, b.ln()]]).unwrap();
        assert!(is_on_manifold(&shifted, &t, 1.0, 1e-12).unwrap());

        let mut bumped = c.matrix().clone();
        bumped[(0, 1)] += 0.1;
        let bumped = CostMatrix::new(bumped).unwrap();
        assert!(!is_on_manifold(&bumped, &t, 1.0, 1e-9).unwrap());
        let k = kernel_from_cost(&bumped, 1.0).unwrap();
        let gap = max_log_ratio_gap(k.matrix(), t.matrix().unwrap()).unwrap();
        assert!((gap - 0.1).abs() < 1e-12);
    }

    #[test]
    fn solver_output_is_on_manifold() {
        let k = Kernel::from_rows(&[[0.9, 0.2, 0.4], [0.1, 0.5, 0.3]]).unwrap();
        let marg = Marginals::new(vec![0.6, 0.4], vec![0.2, 0.3, 0.5]).unwrap();
        let out = sinkhorn(&k, &marg, &SinkhornOptions::default()).unwrap();
        let plan = Kernel::new(out.coupling.matrix().unwrap().clone()).unwrap();
        let c = cost_from_kernel(&plan, 2.0).unwrap();
        assert!(is_on_manifold(&c, &out.coupling, 2.0, 1e-9).unwrap());
    }
}
