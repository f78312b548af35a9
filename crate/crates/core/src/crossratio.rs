//! Cross-ratio invariants of positive matrices.
//!
//! `r_ijkl(A) = a_ik a_jl / (a_il a_jk)` is unchanged by positive diagonal
//! scaling on either side, and two positive matrices are diagonally
//! equivalent exactly when all their cross-ratios agree. The anchored family
//! `r_{0,j,0,k}` for `j >= 1, k >= 1` is a basis: every other cross-ratio is a
//! product of its members.
//!
//! In cost space each basis element is a linear equation
//! `c_ik + c_jl - c_il - c_jk = -ln r_ijkl(T) / lambda`, so the costs
//! compatible with a plan form an affine subspace of codimension
//! `(m - 1)(n - 1)`; plans with different cross-ratios give parallel subspaces.
//! All arithmetic here is done on logs.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky, cholesky_solve, dot};
use crate::math::{abs, exp, ln, sqrt};
use crate::matrix::{Coupling, Matrix, ScalingPair};

/// Row pair `(i, j)` and column pair `(k, l)` defining `r_ijkl`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quadruple {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
}

impl Quadruple {
    pub const fn new(i: usize, j: usize, k: usize, l: usize) -> Self {
        Self { i, j, k, l }
    }

    /// Whether entry `(r, c)` enters this cross-ratio.
    pub fn touches(&self, r: usize, c: usize) -> bool {
        (r == self.i || r == self.j) && (c == self.k || c == self.l)
    }

    fn check(&self, m: &Matrix) -> Result<()> {
        let (rows, cols) = m.dim();
        for (r, c) in [(self.i, self.k), (self.j, self.l)] {
            if r >= rows || c >= cols {
                return Err(Error::IndexOutOfRange(r, c));
            }
        }
        if self.i == self.j || self.k == self.l {
            return Err(invalid("cross-ratio needs distinct rows and distinct columns"));
        }
        Ok(())
    }

    fn log_ratio_unchecked(&self, m: &Matrix) -> f64 {
        ln(m[(self.i, self.k)]) + ln(m[(self.j, self.l)]) - ln(m[(self.i, self.l)]) - ln(m[(self.j, self.k)])
    }

    /// Signed entries of the cost-space equation normal, as `((row, col), coefficient)`.
    pub fn normal(&self) -> [((usize, usize), f64); 4] {
        [
            ((self.i, self.k), 1.0),
            ((self.j, self.l), 1.0),
            ((self.i, self.l), -1.0),
            ((self.j, self.k), -1.0),
        ]
    }
}

/// `m_ik m_jl / (m_il m_jk)`.
pub fn cross_ratio(m: &Matrix, i: usize, j: usize, k: usize, l: usize) -> Result<f64> {
    log_cross_ratio(m, i, j, k, l).map(exp)
}

pub fn log_cross_ratio(m: &Matrix, i: usize, j: usize, k: usize, l: usize) -> Result<f64> {
    let q = Quadruple::new(i, j, k, l);
    q.check(m)?;
    for (r, c) in [(i, k), (j, l), (i, l), (j, k)] {
        if !(m[(r, c)] > 0.0) {
            return Err(invalid("cross-ratio entries must be positive"));
        }
    }
    Ok(q.log_ratio_unchecked(m))
}

/// The anchored basis `{r_{0,j,0,k} : j in 1..m, k in 1..n}` in row-major order.
pub fn anchored_quadruples(m: usize, n: usize) -> Vec<Quadruple> {
    let mut out = Vec::with_capacity(m.saturating_sub(1) * n.saturating_sub(1));
    for j in 1..m {
        for k in 1..n {
            out.push(Quadruple::new(0, j, 0, k));
        }
    }
    out
}

/// Consecutive 2x2 minors `{r_{i,i+1,k,k+1}}`, also a basis.
pub fn adjacent_quadruples(m: usize, n: usize) -> Vec<Quadruple> {
    let mut out = Vec::with_capacity(m.saturating_sub(1) * n.saturating_sub(1));
    for i in 0..m.saturating_sub(1) {
        for k in 0..n.saturating_sub(1) {
            out.push(Quadruple::new(i, i + 1, k, k + 1));
        }
    }
    out
}

/// Log cross-ratios of a strictly positive matrix for each quadruple.
pub fn log_ratios(m: &Matrix, quads: &[Quadruple]) -> Result<Vec<f64>> {
    m.require_positive("matrix")?;
    quads
        .iter()
        .map(|q| {
            q.check(m)?;
            Ok(q.log_ratio_unchecked(m))
        })
        .collect()
}

/// Gram matrix `N N^T` of the cost-space normals of `quads`.
pub fn normal_gram(quads: &[Quadruple]) -> Matrix {
    let q = quads.len();
    Matrix::from_fn(q, q, |a, b| {
        let mut s = 0.0;
        for (pa, ca) in quads[a].normal() {
            for (pb, cb) in quads[b].normal() {
                if pa == pb {
                    s += ca * cb;
                }
            }
        }
        s
    })
}

/// Anchored cross-ratio basis of an `m x n` positive matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossRatioBasis {
    /// `(m-1) x (n-1)`; entry `(j-1, k-1)` is `r_{0,j,0,k}`.
    pub values: Matrix,
    pub log_values: Matrix,
}

impl CrossRatioBasis {
    /// Number of basis elements, `(m - 1)(n - 1)`.
    pub fn len(&self) -> usize {
        self.values.as_slice().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn log_anchor(&self, j: usize, k: usize) -> f64 {
        if j == 0 || k == 0 {
            0.0
        } else {
            self.log_values[(j - 1, k - 1)]
        }
    }

    /// Any `ln r_ijkl` rebuilt from basis entries:
    /// `ln r_ijkl = b(i,k) + b(j,l) - b(i,l) - b(j,k)` with `b(0, .) = b(., 0) = 0`.
    pub fn reconstruct_log(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.log_anchor(i, k) + self.log_anchor(j, l) - self.log_anchor(i, l) - self.log_anchor(j, k)
    }

    pub fn reconstruct(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        exp(self.reconstruct_log(i, j, k, l))
    }
}

pub fn basis(m: &Matrix) -> Result<CrossRatioBasis> {
    m.require_positive("matrix")?;
    let (rows, cols) = m.dim();
    if rows < 2 || cols < 2 {
        return Err(invalid("cross-ratios need at least a 2x2 matrix"));
    }
    let log_values = Matrix::from_fn(rows - 1, cols - 1, |j, k| {
        Quadruple::new(0, j + 1, 0, k + 1).log_ratio_unchecked(m)
    });
    Ok(CrossRatioBasis {
        values: log_values.map(exp),
        log_values,
    })
}

/// Largest absolute difference of anchored log cross-ratios.
pub fn max_log_ratio_gap(a: &Matrix, b: &Matrix) -> Result<f64> {
    a.require_same_dim(b)?;
    let ba = basis(a)?;
    let bb = basis(b)?;
    Ok(ba.log_values.max_abs_diff(&bb.log_values))
}

/// `A ~ B` iff every basis log cross-ratio agrees within `tol`.
pub fn cr_equivalent(a: &Matrix, b: &Matrix, tol: f64) -> Result<bool> {
    Ok(max_log_ratio_gap(a, b)? <= tol)
}

/// Default log-space tolerance for [`scaling_factors`].
pub const SCALING_TOL: f64 = 1e-9;

/// Recovers `(D^r, D^c)` with `A = D^r B D^c`, gauge-fixed to `d_row[0] = 1`.
///
/// Fits `ln a_ij - ln b_ij = u_i + v_j`; fails with [`Error::NotEquivalent`]
/// when the fit leaves a log residual above `tol`.
pub fn scaling_factors_with_tol(a: &Matrix, b: &Matrix, tol: f64) -> Result<ScalingPair> {
    a.require_same_dim(b)?;
    a.require_positive("A")?;
    b.require_positive("B")?;
    let (m, n) = a.dim();
    let g = Matrix::from_fn(m, n, |i, j| ln(a[(i, j)]) - ln(b[(i, j)]));
    // u_0 = 0, v_j = g_0j, u_i = mean_j (g_ij - v_j)
    let v: Vec<f64> = (0..n).map(|j| g[(0, j)]).collect();
    let u: Vec<f64> = (0..m)
        .map(|i| {
            if i == 0 {
                0.0
            } else {
                (0..n).map(|j| g[(i, j)] - v[j]).sum::<f64>() / n as f64
            }
        })
        .collect();
    let mut residual = 0.0f64;
    for i in 0..m {
        for j in 0..n {
            residual = residual.max(abs(g[(i, j)] - u[i] - v[j]));
        }
    }
    if residual > tol {
        return Err(Error::NotEquivalent { residual });
    }
    Ok(ScalingPair {
        d_row: u.into_iter().map(exp).collect(),
        d_col: v.into_iter().map(exp).collect(),
    })
}

pub fn scaling_factors(a: &Matrix, b: &Matrix) -> Result<ScalingPair> {
    scaling_factors_with_tol(a, b, SCALING_TOL)
}

/// How [`iot_distance`] combines the offsets between two parallel subspaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceConvention {
    /// Minimum-norm Euclidean distance between the affine subspaces.
    #[default]
    Euclidean,
    /// Unnormalized log-offsets of the consecutive-minor equations combined
    /// through the Gram matrix of their unit normals (law of cosines). On the
    /// 2x3 case this is `sqrt(d1^2 + d2^2 - d1 d2)`.
    Paper,
}

/// Distance between the cost subspaces of `t1` and `t2`, scaled by `1 / lambda`.
pub fn iot_distance(t1: &Coupling, t2: &Coupling, lambda: f64, convention: DistanceConvention) -> Result<f64> {
    let a = t1.matrix()?;
    let b = t2.matrix()?;
    a.require_same_dim(b)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda must be positive"));
    }
    let (m, n) = a.dim();
    let d = match convention {
        DistanceConvention::Euclidean => {
            let quads = anchored_quadruples(m, n);
            let delta = offset_gap(a, b, &quads)?;
            let gram = normal_gram(&quads);
            let l = cholesky(&gram).ok_or_else(|| invalid("basis normals are degenerate"))?;
            let x = cholesky_solve(&l, &delta);
            sqrt(dot(&delta, &x).max(0.0))
        }
        DistanceConvention::Paper => {
            let quads = adjacent_quadruples(m, n);
            let delta = offset_gap(a, b, &quads)?;
            // unit normals: each normal has four +-1 entries, norm 2
            let gram = normal_gram(&quads).map(|g| g / 4.0);
            let q = delta.len();
            let mut s = 0.0;
            for x in 0..q {
                for y in 0..q {
                    s += delta[x] * gram[(x, y)] * delta[y];
                }
            }
            sqrt(s.max(0.0))
        }
    };
    Ok(d / lambda)
}

fn offset_gap(a: &Matrix, b: &Matrix, quads: &[Quadruple]) -> Result<Vec<f64>> {
    let la = log_ratios(a, quads)?;
    let lb = log_ratios(b, quads)?;
    Ok(la.iter().zip(&lb).map(|(x, y)| x - y).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sinkhorn::{sinkhorn, SinkhornOptions};
    use crate::Marginals;

    fn hyperplane_t() -> Matrix {
        Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 3.0, 1.0]]).unwrap()
    }

    #[test]
    fn hyperplane_example_ratios() {
        let t = hyperplane_t();
        let r1212 = cross_ratio(&t, 0, 1, 0, 1).unwrap();
        let r1213 = cross_ratio(&t, 0, 1, 0, 2).unwrap();
        let r1223 = cross_ratio(&t, 0, 1, 1, 2).unwrap();
        assert!((r1212 - 0.75).abs() < 1e-15);
        assert!((r1213 - 1.0 / 6.0).abs() < 1e-15);
        assert!((r1223 - 2.0 / 9.0).abs() < 1e-15);
        assert!((r1213 - r1212 * r1223).abs() < 1e-15);

        let b = basis(&t).unwrap();
        assert_eq!(b.len(), 2);
        assert!((b.values[(0, 0)] - 0.75).abs() < 1e-15);
        assert!((b.values[(0, 1)] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_and_out_of_range_rejected() {
        let t = hyperplane_t();
        assert!(cross_ratio(&t, 0, 1, 0, 0).is_err());
        assert!(cross_ratio(&t, 1, 1, 0, 1).is_err());
        assert!(matches!(cross_ratio(&t, 0, 2, 0, 1), Err(Error::IndexOutOfRange(..))));
    }

    #[test]
    fn two_by_two_basis_has_one_entry() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 5.0]]).unwrap();
        let b = basis(&m).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b.values[(0, 0)] - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn scaled_matrix_is_equivalent_and_doubled_entry_is_not() {
        let a = Matrix::from_rows(&[[0.3, 0.1, 0.7], [0.2, 0.9, 0.4], [0.5, 0.6, 0.8]]).unwrap();
        let scaled = a.scale(&[2.0, 0.3, 1.7], &[0.5, 4.0, 1.1]);
        assert!(cr_equivalent(&a, &scaled, 1e-12).unwrap());
        let mut doubled = a.clone();
        doubled[(1, 1)] *= 2.0;
        assert!(!cr_equivalent(&a, &doubled, 1e-6).unwrap());
        let gap = max_log_ratio_gap(&a, &doubled).unwrap();
        assert!((gap - core::f64::consts::LN_2).abs() < 1e-12);
        assert!(cr_equivalent(&a, &Matrix::filled(2, 3, 1.0), 1.0).is_err());
    }

    #[test]
    fn sinkhorn_output_is_equivalent_to_input() {
        let t = Matrix::from_rows(&[[0.2, 0.1, 0.3], [0.15, 0.05, 0.2]]).unwrap();
        let marg = Marginals::new(std::vec![0.3, 0.7], std::vec![0.5, 0.25, 0.25]).unwrap();
        let out = sinkhorn(&t, &marg, &SinkhornOptions::default()).unwrap();
        assert!(cr_equivalent(&t, out.coupling.matrix().unwrap(), 1e-10).unwrap());
    }

    #[test]
    fn uniform_scaling_absorbed_in_columns() {
        let b = Matrix::from_rows(&[[0.3, 0.1], [0.2, 0.9], [0.5, 0.6]]).unwrap();
        let a = b.map(|x| 2.0 * x);
        let s = scaling_factors(&a, &b).unwrap();
        for d in &s.d_row {
            assert!((d - 1.0).abs() < 1e-14);
        }
        for d in &s.d_col {
            assert!((d - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn example_one_scaling_matches_sinkhorn_pass() {
        let k = Matrix::from_rows(&[[1.0, 0.5], [0.25, 1.0]]).unwrap();
        let t = Matrix::from_rows(&[[0.25, 0.125], [0.125, 0.5]]).unwrap();
        let s = scaling_factors(&t, &k).unwrap();
        // one row pass with (1/4, 1/2), column pass with (1, 1); gauge divides rows by 1/4
        assert!((s.d_row[0] - 1.0).abs() < 1e-15);
        assert!((s.d_row[1] - 2.0).abs() < 1e-14);
        assert!((s.d_col[0] - 0.25).abs() < 1e-15);
        assert!((s.d_col[1] - 0.25).abs() < 1e-15);
        assert!(s.apply(&k).max_abs_diff(&t) < 1e-15);
    }

    #[test]
    fn non_equivalent_scaling_rejected() {
        let b = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 5.0]]).unwrap();
        assert!(matches!(scaling_factors(&a, &b), Err(Error::NotEquivalent { .. })));
    }

    #[test]
    fn worked_distance_pair() {
        let t1 = Coupling::new(hyperplane_t()).unwrap();
        let t2 = Coupling::from_rows(&[[1.0, 2.0, 3.0], [3.0, 2.0, 1.0]]).unwrap();
        let l49 = (4.0f64 / 9.0).ln();
        let l32 = 1.5f64.ln();
        let paper = (l49 * l49 + l32 * l32 - l32 * l49).sqrt();
        let d = iot_distance(&t1, &t2, 1.0, DistanceConvention::Paper).unwrap();
        assert!((d - paper).abs() < 1e-12, "{d} vs {paper}");
        let e = iot_distance(&t1, &t2, 1.0, DistanceConvention::Euclidean).unwrap();
        assert!((e - l32).abs() < 1e-12, "{e}");
        assert_eq!(iot_distance(&t1, &t1, 1.0, DistanceConvention::Euclidean).unwrap(), 0.0);
        let e3 = iot_distance(&t1, &t2, 3.0, DistanceConvention::Euclidean).unwrap();
        assert!((e3 - e / 3.0).abs() < 1e-15);
    }

    #[test]
    fn distance_dimension_mismatch() {
        let t1 = Coupling::new(hyperplane_t()).unwrap();
        let t2 = Coupling::from_rows(&[[1.0, 2.0], [3.0, 2.0]]).unwrap();
        assert!(matches!(
            iot_distance(&t1, &t2, 1.0, DistanceConvention::Euclidean),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
