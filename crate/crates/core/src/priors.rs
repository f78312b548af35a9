//! Prior log-densities over costs and kernels.
//!
//! Dirichlet densities are returned without their normalizing constant;
//! samplers only consume differences of log-densities at fixed `alpha`.
//! [`dirichlet_log_normalizer`] supplies the constant when a calibrated
//! value is needed.

use alloc::format;

use crate::error::{invalid, Error, Result};
use crate::math::{ln, ln_gamma, sqrt};
use crate::matrix::{CostMatrix, Kernel, Matrix};

/// Tolerance on the simplex constraints (`sum c = cost_sum`, unit column sums).
pub const DOMAIN_TOL: f64 = 1e-8;

/// A log-density value, or a point outside the prior's support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogDensity {
    Finite(f64),
    OutOfDomain,
}

impl LogDensity {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Finite(x) => Some(x),
            Self::OutOfDomain => None,
        }
    }

    pub fn is_in_domain(self) -> bool {
        matches!(self, Self::Finite(_))
    }
}

/// Dirichlet concentration, either shared by every entry or given per entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Alpha {
    Scalar(f64),
    Matrix(Matrix),
}

impl Alpha {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        match self {
            Self::Scalar(a) => *a,
            Self::Matrix(m) => m[(i, j)],
        }
    }

    pub fn validate(&self, dim: (usize, usize)) -> Result<()> {
        match self {
            Self::Scalar(a) if *a > 0.0 && a.is_finite() => Ok(()),
            Self::Scalar(a) => Err(invalid(format!("alpha must be positive, got {a}"))),
            Self::Matrix(m) => {
                if m.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: m.dim(),
                    });
                }
                m.require_positive("alpha")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    /// Dirichlet over the whole cost matrix divided by `cost_sum`.
    P1DirichletCost,
    /// Independent Dirichlet per kernel column.
    P2ColumnDirichletKernel,
    /// `exp(-beta * || gamma (C - C^T) ||_F)` over square costs.
    GibbsSymmetricCost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub kind: PriorKind,
    pub alpha: Alpha,
    pub beta: f64,
    pub gamma_weight: f64,
    pub cost_sum: f64,
}

impl PriorSpec {
    pub fn p1(alpha: Alpha, cost_sum: f64) -> Self {
        Self {
            kind: PriorKind::P1DirichletCost,
            alpha,
            beta: 1.0,
            gamma_weight: 1.0,
            cost_sum,
        }
    }

    pub fn p2(alpha: Alpha) -> Self {
        Self {
            kind: PriorKind::P2ColumnDirichletKernel,
            alpha,
            beta: 1.0,
            gamma_weight: 1.0,
            cost_sum: 1.0,
        }
    }

    pub fn gibbs(beta: f64, gamma_weight: f64) -> Self {
        Self {
            kind: PriorKind::GibbsSymmetricCost,
            alpha: Alpha::Scalar(1.0),
            beta,
            gamma_weight,
            cost_sum: 1.0,
        }
    }

    /// Checks the fields that `kind` consults against an `m x n` problem.
    pub fn validate(&self, dim: (usize, usize)) -> Result<()> {
        match self.kind {
            PriorKind::P1DirichletCost => {
                self.alpha.validate(dim)?;
                if !(self.cost_sum > 0.0 && self.cost_sum.is_finite()) {
                    return Err(invalid("cost_sum must be positive"));
                }
            }
            PriorKind::P2ColumnDirichletKernel => self.alpha.validate(dim)?,
            PriorKind::GibbsSymmetricCost => {
                if dim.0 != dim.1 {
                    return Err(invalid("symmetric Gibbs prior needs a square matrix"));
                }
                if !(self.beta > 0.0) || !(self.gamma_weight > 0.0) {
                    return Err(invalid("beta and gamma_weight must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Unnormalized Dirichlet log-density of `C / cost_sum` over all `m n` entries.
pub fn log_prior_p1(cost: &CostMatrix, alpha: &Alpha, cost_sum: f64) -> LogDensity {
    let c = cost.matrix();
    let total: f64 = c.sum();
    if crate::math::abs(total - cost_sum) > DOMAIN_TOL {
        return LogDensity::OutOfDomain;
    }
    let mut acc = 0.0;
    for i in 0..c.rows() {
        for j in 0..c.cols() {
            let x = c[(i, j)];
            if !(x > 0.0) {
                return LogDensity::OutOfDomain;
            }
            acc += (alpha.at(i, j) - 1.0) * ln(x / cost_sum);
        }
    }
    LogDensity::Finite(acc)
}

/// Sum over columns of the unnormalized Dirichlet log-density of each column.
pub fn log_prior_p2(kernel: &Kernel, alpha: &Alpha) -> LogDensity {
    let k = kernel.matrix();
    for s in k.col_sums() {
        if crate::math::abs(s - 1.0) > DOMAIN_TOL {
            return LogDensity::OutOfDomain;
        }
    }
    let mut acc = 0.0;
    for i in 0..k.rows() {
        for j in 0..k.cols() {
            let x = k[(i, j)];
            if !(x > 0.0 && x < 1.0) {
                return LogDensity::OutOfDomain;
            }
            acc += (alpha.at(i, j) - 1.0) * ln(x);
        }
    }
    LogDensity::Finite(acc)
}

/// `-beta * gamma * ||C - C^T||_F`.
pub fn log_prior_gibbs_sym(cost: &CostMatrix, beta: f64, gamma_weight: f64) -> Result<f64> {
    let c = cost.matrix();
    if c.rows() != c.cols() {
        return Err(invalid(format!(
            "symmetric Gibbs prior needs a square matrix, got {}x{}",
            c.rows(),
            c.cols()
        )));
    }
    Ok(-beta * gamma_weight * asymmetry_norm(c))
}

/// `||C - C^T||_F` for a square matrix.
pub fn asymmetry_norm(c: &Matrix) -> f64 {
    let n = c.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = c[(i, j)] - c[(j, i)];
            s += 2.0 * d * d;
        }
    }
    sqrt(s)
}

/// `ln Gamma(sum alpha) - sum ln Gamma(alpha)` over the given concentrations.
pub fn dirichlet_log_normalizer(alpha: impl Iterator<Item = f64> + Clone) -> f64 {
    let total: f64 = alpha.clone().sum();
    ln_gamma(total) - alpha.map(ln_gamma).sum::<f64>()
}

/// [`log_prior_p1`] including the Dirichlet normalizing constant
/// (density of `C / cost_sum` on the simplex).
pub fn log_prior_p1_normalized(cost: &CostMatrix, alpha: &Alpha, cost_sum: f64) -> LogDensity {
    let c = cost.matrix();
    let (m, n) = c.dim();
    match log_prior_p1(cost, alpha, cost_sum) {
        LogDensity::Finite(x) => {
            let a = (0..m * n).map(|idx| alpha.at(idx / n, idx % n));
            LogDensity::Finite(x + dirichlet_log_normalizer(a))
        }
        LogDensity::OutOfDomain => LogDensity::OutOfDomain,
    }
}

/// [`log_prior_p2`] including each column's Dirichlet normalizing constant.
pub fn log_prior_p2_normalized(kernel: &Kernel, alpha: &Alpha) -> LogDensity {
    let k = kernel.matrix();
    match log_prior_p2(kernel, alpha) {
        LogDensity::Finite(x) => {
            let constant: f64 = (0..k.cols())
                .map(|j| dirichlet_log_normalizer((0..k.rows()).map(|i| alpha.at(i, j))))
                .sum();
            LogDensity::Finite(x + constant)
        }
        LogDensity::OutOfDomain => LogDensity::OutOfDomain,
    }
}
