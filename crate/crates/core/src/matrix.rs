//! Dense matrix types and the cost/kernel transforms.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{invalid, Error, Result};
use crate::math::{exp, ln};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: alloc::vec![value; rows * cols],
        }
    }

    /// Builds a matrix from row slices; all rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(invalid(format!("row {i} has {} entries, expected {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn dim(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        (i < self.rows && j < self.cols).then(|| self.data[i * self.cols + j])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.cols];
        for i in 0..self.rows {
            for (acc, x) in out.iter_mut().zip(self.row(i)) {
                *acc += x;
            }
        }
        out
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.data.iter().all(|&x| x > 0.0 && x.is_finite())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `diag(row) * self * diag(col)`.
    pub fn scale(&self, row: &[f64], col: &[f64]) -> Self {
        debug_assert_eq!(row.len(), self.rows);
        debug_assert_eq!(col.len(), self.cols);
        Self::from_fn(self.rows, self.cols, |i, j| row[i] * self[(i, j)] * col[j])
    }

    /// Largest absolute element-wise difference. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| crate::math::abs(a - b))
            .fold(0.0, f64::max)
    }

    pub fn require_same_dim(&self, other: &Matrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    pub(crate) fn require_positive(&self, what: &str) -> Result<()> {
        if let Some(x) = self.data.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(invalid(format!(
                "{what} must be strictly positive and finite, found {x}"
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Observed joint frequencies `T`, possibly with unobserved entries.
///
/// Masked entries carry no value; their storage slot is kept at zero and
/// must never be read as data.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    values: Matrix,
    missing: BTreeSet<(usize, usize)>,
}

impl Coupling {
    pub fn new(values: Matrix) -> Result<Self> {
        Self::with_missing(values, BTreeSet::new())
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn with_missing(mut values: Matrix, missing: BTreeSet<(usize, usize)>) -> Result<Self> {
        let (m, n) = values.dim();
        if m < 2 || n < 2 {
            return Err(invalid(format!("coupling must be at least 2x2, got {m}x{n}")));
        }
        for &(i, j) in &missing {
            if i >= m || j >= n {
                return Err(Error::IndexOutOfRange(i, j));
            }
            values[(i, j)] = 0.0;
        }
        for i in 0..m {
            for j in 0..n {
                let x = values[(i, j)];
                if !missing.contains(&(i, j)) && !(x > 0.0 && x.is_finite()) {
                    return Err(invalid(format!(
                        "coupling entry ({i}, {j}) must be strictly positive, found {x}"
                    )));
                }
            }
        }
        Ok(Self { values, missing })
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn missing(&self) -> &BTreeSet<(usize, usize)> {
        &self.missing
    }

    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    /// The observed values, or [`Error::MaskedInput`] if any entry is masked.
    pub fn matrix(&self) -> Result<&Matrix> {
        if self.is_complete() {
            Ok(&self.values)
        } else {
            Err(Error::MaskedInput)
        }
    }

    /// Observed value at `(i, j)`; `None` when masked or out of range.
    pub fn observed(&self, i: usize, j: usize) -> Option<f64> {
        if self.missing.contains(&(i, j)) {
            None
        } else {
            self.values.get(i, j)
        }
    }

    /// Replaces masked entry `(i, j)` with `value`.
    pub fn fill(&self, (i, j): (usize, usize), value: f64) -> Result<Self> {
        if !self.missing.contains(&(i, j)) {
            return Err(invalid(format!("entry ({i}, {j}) is not masked")));
        }
        let mut values = self.values.clone();
        values[(i, j)] = value;
        let mut missing = self.missing.clone();
        missing.remove(&(i, j));
        Self::with_missing(values, missing)
    }

    /// Returns a copy with `(i, j)` replaced; the entry must be observed.
    pub fn with_entry(&self, (i, j): (usize, usize), value: f64) -> Result<Self> {
        if self.missing.contains(&(i, j)) {
            return Err(Error::MaskedInput);
        }
        if i >= self.rows() || j >= self.cols() {
            return Err(Error::IndexOutOfRange(i, j));
        }
        let mut values = self.values.clone();
        values[(i, j)] = value;
        Self::with_missing(values, self.missing.clone())
    }

    /// Observed matrix scaled to unit total mass.
    pub fn normalized(&self) -> Result<Self> {
        let m = self.matrix()?;
        let total = m.sum();
        Self::new(m.map(|x| x / total))
    }

    /// Row and column sums of a complete coupling, scaled to probability vectors.
    pub fn marginals(&self) -> Result<Marginals> {
        let m = self.matrix()?;
        Marginals::normalized(m.row_sums(), m.col_sums())
    }
}

/// Latent transport costs `C`.
///
/// Values are finite. Costs derived from a kernel with entries above one
/// are negative; priors over non-negative costs treat those as out of domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix(Matrix);

impl CostMatrix {
    pub fn new(values: Matrix) -> Result<Self> {
        if !values.is_finite() {
            return Err(invalid("cost matrix entries must be finite"));
        }
        Ok(Self(values))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.as_slice().iter().all(|&c| c >= 0.0)
    }
}

/// Negative exponential cost `K = exp(-lambda * C)`; strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel(Matrix);

impl Kernel {
    pub fn new(values: Matrix) -> Result<Self> {
        values.require_positive("kernel")?;
        Ok(Self(values))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub(crate) fn from_positive(values: Matrix) -> Self {
        debug_assert!(values.is_strictly_positive());
        Self(values)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn max_entry(&self) -> f64 {
        self.0.as_slice().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Source and target distributions `mu` (rows) and `nu` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    mu: Vec<f64>,
    nu: Vec<f64>,
}

const MARGINAL_SUM_TOL: f64 = 1e-12;

impl Marginals {
    /// Validates that both vectors are positive and sum to one within 1e-12.
    pub fn new(mu: Vec<f64>, nu: Vec<f64>) -> Result<Self> {
        for (name, v) in [("mu", &mu), ("nu", &nu)] {
            if v.is_empty() || v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(invalid(format!("{name} must be non-empty and strictly positive")));
            }
            let s: f64 = v.iter().sum();
            if crate::math::abs(s - 1.0) > MARGINAL_SUM_TOL {
                return Err(invalid(format!("{name} sums to {s}, expected 1")));
            }
        }
        Ok(Self { mu, nu })
    }

    /// Rescales positive vectors to unit sum.
    pub fn normalized(mu: Vec<f64>, nu: Vec<f64>) -> Result<Self> {
        let scale = |v: Vec<f64>| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        Self::new(scale(mu), scale(nu))
    }

    pub fn uniform(m: usize, n: usize) -> Self {
        Self {
            mu: alloc::vec![1.0 / m as f64; m],
            nu: alloc::vec![1.0 / n as f64; n],
        }
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }
}

/// Positive diagonal scalings `(D^r, D^c)` stored as vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPair {
    pub d_row: Vec<f64>,
    pub d_col: Vec<f64>,
}

impl ScalingPair {
    pub fn apply(&self, m: &Matrix) -> Matrix {
        m.scale(&self.d_row, &self.d_col)
    }
}

fn require_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive and finite, got {lambda}")));
    }
    Ok(())
}

/// `K = exp(-lambda * C)` element-wise.
pub fn kernel_from_cost(cost: &CostMatrix, lambda: f64) -> Result<Kernel> {
    require_lambda(lambda)?;
    let k = cost.matrix().map(|c| exp(-lambda * c));
    // exp underflows to zero for very large lambda * c
    k.require_positive("kernel")?;
    Ok(Kernel(k))
}

/// `C = -ln(K) / lambda` element-wise.
pub fn cost_from_kernel(kernel: &Kernel, lambda: f64) -> Result<CostMatrix> {
    require_lambda(lambda)?;
    CostMatrix::new(kernel.matrix().map(|k| -ln(k) / lambda))
}

/// `Col(M, nu) = M diag(nu / 1^T M)`: column `j` rescaled to sum to `nu[j]`.
///
/// With `nu = None` every column sums to one.
pub fn normalize_columns(m: &Matrix, nu: Option<&[f64]>) -> Result<Matrix> {
    m.require_positive("matrix")?;
    if let Some(nu) = nu {
        if nu.len() != m.cols() {
            return Err(Error::DimensionMismatch {
                expected: (1, m.cols()),
                got: (1, nu.len()),
            });
        }
        if nu.iter().any(|&x| !(x > 0.0)) {
            return Err(invalid("column targets must be positive"));
        }
    }
    let sums = m.col_sums();
    let factors: Vec<f64> = sums
        .iter()
        .enumerate()
        .map(|(j, s)| nu.map_or(1.0, |nu| nu[j]) / s)
        .collect();
    Ok(m.scale(&alloc::vec![1.0; m.rows()], &factors))
}

/// `T / F(T)` with `ln F(T) = (1 + sum ln t_ij) / (m n)`, so that the induced
/// cost `-ln(T / F(T))` sums to one. Cross-ratios are unchanged.
pub fn renormalize_for_p1(t: &Coupling) -> Result<Kernel> {
    renormalize_to_cost_sum(t, 1.0, 1.0)
}

/// Scales `T` by a constant so that `-ln(K) / lambda` sums to `cost_sum`.
pub fn renormalize_to_cost_sum(t: &Coupling, lambda: f64, cost_sum: f64) -> Result<Kernel> {
    require_lambda(lambda)?;
    let m = t.matrix()?;
    let log_sum: f64 = m.as_slice().iter().map(|&x| ln(x)).sum();
    let log_f = (lambda * cost_sum + log_sum) / m.as_slice().len() as f64;
    let k = m.map(|x| exp(ln(x) - log_f));
    k.require_positive("renormalized kernel")?;
    Ok(Kernel(k))
}

/// The diagonal rescaling of `T` whose log has zero row and column means
/// apart from a constant chosen so `-ln(K) / lambda` sums to `cost_sum`.
/// Among all rescalings with that cost sum it has the smallest log spread.
pub fn centered_to_cost_sum(t: &Coupling, lambda: f64, cost_sum: f64) -> Result<Kernel> {
    require_lambda(lambda)?;
    let m = t.matrix()?;
    m.require_positive("coupling")?;
    let l = m.map(ln);
    let (rows, cols) = l.dim();
    let row_means: Vec<f64> = l.row_sums().iter().map(|s| s / cols as f64).collect();
    let col_means: Vec<f64> = l.col_sums().iter().map(|s| s / rows as f64).collect();
    let grand = l.sum() / (rows * cols) as f64;
    let shift = -lambda * cost_sum / (rows * cols) as f64;
    let k = Matrix::from_fn(rows, cols, |i, j| {
        exp(l[(i, j)] - row_means[i] - col_means[j] + grand + shift)
    });
    k.require_positive("centered kernel")?;
    Ok(Kernel(k))
}
