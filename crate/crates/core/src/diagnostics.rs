//! Chain diagnostics and density estimates for plotting.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::{exp, sqrt, LN_SQRT_2PI};
use crate::matrix::Matrix;

/// Bandwidth used for the posterior density plots.
pub const DEFAULT_BANDWIDTH: f64 = 0.05;

/// `R(t)` for `t = 0..=max_lag`, using the element-wise chain mean and the
/// summed element-wise variance.
pub fn autocorrelation<M: AsRef<Matrix>>(samples: &[M], max_lag: usize) -> Result<Vec<f64>> {
    let n = samples.len();
    if max_lag < 1 || n <= max_lag {
        return Err(invalid("autocorrelation needs N > max_lag >= 1"));
    }
    let first = samples[0].as_ref();
    let len = first.as_slice().len();
    let mut mean = vec![0.0; len];
    for s in samples {
        let s = s.as_ref();
        first.require_same_dim(s)?;
        for (m, x) in mean.iter_mut().zip(s.as_slice()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| s.as_ref().as_slice().iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let var: f64 = centered.iter().map(|c| dot(c, c)).sum::<f64>() / n as f64;
    let scale: f64 = mean.iter().map(|m| m * m).sum::<f64>().max(1.0);
    if !(var > 1e-24 * scale) {
        return Err(Error::UndefinedVariance);
    }
    Ok((0..=max_lag)
        .map(|t| {
            let s: f64 = (0..n - t).map(|l| dot(&centered[l], &centered[l + t])).sum();
            s / ((n - t) as f64 * var)
        })
        .collect())
}

/// Smallest `t >= 1` with `|R(t)| <= 1/e`.
pub fn select_lag(r: &[f64]) -> Option<usize> {
    let bound = exp(-1.0);
    (1..r.len()).find(|&t| r[t].abs() <= bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    RowSums,
    Entry(usize, usize),
}

/// Cumulative mean of `statistic` after each sample.
pub fn running_average<M: AsRef<Matrix>>(samples: &[M], statistic: Statistic) -> Result<Vec<Vec<f64>>> {
    if samples.is_empty() {
        return Err(invalid("running average of an empty chain"));
    }
    let value = |m: &Matrix| -> Result<Vec<f64>> {
        match statistic {
            Statistic::RowSums => Ok(m.row_sums()),
            Statistic::Entry(i, j) => m.get(i, j).map(|x| vec![x]).ok_or(Error::IndexOutOfRange(i, j)),
        }
    };
    let mut acc: Vec<f64> = Vec::new();
    let mut out = Vec::with_capacity(samples.len());
    for (step, s) in samples.iter().enumerate() {
        let v = value(s.as_ref())?;
        if acc.is_empty() {
            acc = vec![0.0; v.len()];
        }
        for (a, x) in acc.iter_mut().zip(&v) {
            *a += x;
        }
        let k = (step + 1) as f64;
        out.push(acc.iter().map(|a| a / k).collect());
    }
    Ok(out)
}

/// Gaussian kernel density estimate of `points` evaluated at `grid`.
pub fn gaussian_kde(points: &[f64], bandwidth: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(invalid("kernel density estimate of no points"));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(invalid("bandwidth must be positive"));
    }
    let norm = exp(-LN_SQRT_2PI) / (bandwidth * points.len() as f64);
    Ok(grid
        .iter()
        .map(|&x| {
            points
                .iter()
                .map(|&p| {
                    let z = (x - p) / bandwidth;
                    exp(-0.5 * z * z)
                })
                .sum::<f64>()
                * norm
        })
        .collect())
}

/// Grid point with the highest density.
pub fn kde_mode(points: &[f64], bandwidth: f64, grid: &[f64]) -> Result<f64> {
    let d = gaussian_kde(points, bandwidth, grid)?;
    let best = d.iter().enumerate().fold(0, |b, (i, v)| if *v > d[b] { i } else { b });
    grid.get(best).copied().ok_or_else(|| invalid("empty grid"))
}

/// Normalizes a non-negative 3-vector and maps it into the triangle with
/// corners `(0, 0)`, `(1, 0)`, `(1/2, sqrt(3)/2)`.
pub fn simplex_project(v: [f64; 3]) -> Result<[f64; 2]> {
    if v.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(invalid("simplex coordinates must be non-negative"));
    }
    let s = v[0] + v[1] + v[2];
    if !(s > 0.0) {
        return Err(invalid("simplex coordinates must not all be zero"));
    }
    let (b1, b2) = (v[1] / s, v[2] / s);
    Ok([b1 + 0.5 * b2, 0.5 * sqrt(3.0) * b2])
}
