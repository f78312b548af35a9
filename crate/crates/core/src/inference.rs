//! Noisy and incomplete observations.
//!
//! Observation noise on a single entry is handled as a mixture: perturb the
//! entry, run one chain per perturbed plan, and pool the samples with equal
//! weights. A missing entry is handled the same way over a grid of fills.
//! Predictions push the mean sampled cost back through Sinkhorn.
//!
//! Every workflow is split into "build components", "run one component" and
//! "merge", so callers can run components in parallel; the sequential
//! helpers here are the reference merge order.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::crossratio::{
    adjacent_quadruples, iot_distance, log_cross_ratio, normal_gram, DistanceConvention, Quadruple,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky, cholesky_solve};
use crate::lp::solution_at_least;
use crate::math::{exp, ln, sqrt};
use crate::matrix::{CostMatrix, Coupling, Kernel, Marginals, Matrix};
use crate::priors::PriorSpec;
use crate::rng::chain_rng;
use crate::samplers::{run_chain, ChainConfig, ChainOutput, SamplerKind};
use crate::sinkhorn::{sinkhorn, SinkhornOptions};

/// Stream reserved for drawing observation-noise perturbations; chains use
/// their component index.
pub const NOISE_STREAM: u64 = u64::MAX;

/// Strict-positivity margin for the subspace feasibility test.
pub const EPS_POS: f64 = 1e-9;

fn check_index(dim: (usize, usize), (i, j): (usize, usize)) -> Result<()> {
    if i >= dim.0 || j >= dim.1 {
        Err(Error::IndexOutOfRange(i, j))
    } else {
        Ok(())
    }
}

/// `n_mix` copies of `t` with `N(0, sigma^2)` added to entry `idx`. Draws that
/// would make the entry non-positive are redrawn.
pub fn gaussian_noise_draws(
    t: &Coupling,
    idx: (usize, usize),
    sigma: f64,
    n_mix: usize,
    seed: u64,
) -> Result<Vec<Coupling>> {
    let base = t.matrix()?;
    base.require_positive("coupling")?;
    check_index(base.dim(), idx)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid("noise sigma must be non-negative"));
    }
    if n_mix == 0 {
        return Err(invalid("need at least one mixture component"));
    }
    let mut rng = chain_rng(seed, NOISE_STREAM);
    let v = base[idx];
    (0..n_mix)
        .map(|_| {
            let value = loop {
                let eps: f64 = sigma * rng.sample::<f64, _>(StandardNormal);
                if v + eps > 0.0 {
                    break v + eps;
                }
            };
            t.with_entry(idx, value)
        })
        .collect()
}

/// Chain settings for mixture component `c`.
pub fn component_config(cfg: &ChainConfig, c: usize) -> ChainConfig {
    ChainConfig {
        stream: cfg.stream.wrapping_add(c as u64),
        ..cfg.clone()
    }
}

/// Concatenates component outputs in order; the acceptance rate is their mean.
pub fn pool_outputs(outputs: Vec<ChainOutput>) -> Result<ChainOutput> {
    let Some(first) = outputs.first() else {
        return Err(invalid("nothing to pool"));
    };
    let (seed, stream, lambda) = (first.seed_used, first.stream, first.lambda);
    let k = outputs.len() as f64;
    let mut pooled = ChainOutput {
        samples: Vec::new(),
        acceptance_rate: 0.0,
        trace_row_sums: Vec::new(),
        burn_in_trace: Vec::new(),
        seed_used: seed,
        stream,
        lambda,
    };
    for o in outputs {
        pooled.acceptance_rate += o.acceptance_rate / k;
        pooled.samples.extend(o.samples);
        pooled.trace_row_sums.extend(o.trace_row_sums);
        pooled.burn_in_trace.extend(o.burn_in_trace);
    }
    Ok(pooled)
}

/// Runs one chain per perturbed plan; component `c` uses stream `cfg.stream + c`.
pub fn gaussian_noise_mixture(
    t: &Coupling,
    idx: (usize, usize),
    sigma: f64,
    n_mix: usize,
    prior: &PriorSpec,
    cfg: &ChainConfig,
    kind: SamplerKind,
) -> Result<Vec<ChainOutput>> {
    gaussian_noise_draws(t, idx, sigma, n_mix, cfg.seed)?
        .iter()
        .enumerate()
        .map(|(c, tc)| run_chain(tc, prior, &component_config(cfg, c), kind))
        .collect()
}

/// Pooled posterior samples under Gaussian noise on entry `idx`.
pub fn gaussian_noise_posterior(
    t: &Coupling,
    idx: (usize, usize),
    sigma: f64,
    n_mix: usize,
    prior: &PriorSpec,
    cfg: &ChainConfig,
    kind: SamplerKind,
) -> Result<ChainOutput> {
    pool_outputs(gaussian_noise_mixture(t, idx, sigma, n_mix, prior, cfg, kind)?)
}

/// Anchored basis around `(r0, c0)` with `r0 != i`, `c0 != j`: exactly one
/// member involves entry `(i, j)`. Returns `(invariant, noisy)`.
pub fn split_basis(dim: (usize, usize), idx: (usize, usize)) -> Result<(Vec<Quadruple>, Quadruple)> {
    check_index(dim, idx)?;
    let (m, n) = dim;
    if m < 2 || n < 2 {
        return Err(invalid("need at least a 2x2 matrix"));
    }
    let r0 = usize::from(idx.0 == 0);
    let c0 = usize::from(idx.1 == 0);
    let mut invariant = Vec::new();
    let mut noisy = None;
    for r in (0..m).filter(|&r| r != r0) {
        for c in (0..n).filter(|&c| c != c0) {
            let q = Quadruple::new(r0, r, c0, c);
            if q.touches(idx.0, idx.1) {
                noisy = Some(q);
            } else {
                invariant.push(q);
            }
        }
    }
    Ok((invariant, noisy.expect("idx lies in exactly one anchored quadruple")))
}

/// `c_ik + c_jl - c_il - c_jk` for every sample and quadruple; `out[q][s]`.
pub fn bounded_noise_offsets(samples: &ChainOutput, quads: &[Quadruple]) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![Vec::with_capacity(samples.samples.len()); quads.len()];
    for k in &samples.samples {
        for (series, q) in out.iter_mut().zip(quads) {
            series.push(-log_cross_ratio(k.matrix(), q.i, q.j, q.k, q.l)? / samples.lambda);
        }
    }
    Ok(out)
}

/// The value every offset series of a chain on `t` must equal.
pub fn expected_offset(t: &Matrix, q: Quadruple, lambda: f64) -> Result<f64> {
    Ok(-log_cross_ratio(t, q.i, q.j, q.k, q.l)? / lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceBound {
    /// `ln((t + a) / (t - a)) / sin(theta)`.
    pub bound: f64,
    pub sin_theta: f64,
    /// Distance between the subspaces of the extreme plans `T +- a`.
    pub distance: f64,
    pub holds: bool,
}

fn move_to_origin(m: &Matrix, (i, j): (usize, usize)) -> Matrix {
    let swap = |x: usize, y: usize| {
        if x == 0 {
            y
        } else if x == y {
            0
        } else {
            x
        }
    };
    Matrix::from_fn(m.rows(), m.cols(), |r, c| m[(swap(r, i), swap(c, j))])
}

/// Bound on the subspace distance when entry `idx` carries noise in `[-a, a]`.
///
/// Rows and columns are swapped so `idx` becomes `(0, 0)`; in the consecutive
/// minor basis only the first equation then moves, and `theta` is the angle
/// between its normal and the span of the others.
pub fn bounded_noise_distance_bound(t: &Coupling, a: f64, idx: (usize, usize)) -> Result<DistanceBound> {
    let base = t.matrix()?;
    base.require_positive("coupling")?;
    check_index(base.dim(), idx)?;
    let (m, n) = base.dim();
    if m < 2 || n < 2 {
        return Err(invalid("need at least a 2x2 matrix"));
    }
    let v = base[idx];
    if !(a > 0.0) || a >= v {
        return Err(invalid("noise amplitude must satisfy 0 < a < t[idx]"));
    }
    let quads = adjacent_quadruples(m, n);
    let gram = normal_gram(&quads).map(|g| g / 4.0);
    let l = cholesky(&gram).ok_or_else(|| invalid("basis normals are degenerate"))?;
    let mut e0 = vec![0.0; quads.len()];
    e0[0] = 1.0;
    let inv00 = cholesky_solve(&l, &e0)[0];
    let sin_theta = 1.0 / sqrt(inv00);
    let bound = ln((v + a) / (v - a)) / sin_theta;

    let moved = move_to_origin(base, idx);
    let mut hi = moved.clone();
    hi[(0, 0)] = v + a;
    let mut lo = moved;
    lo[(0, 0)] = v - a;
    let distance = iot_distance(&Coupling::new(hi)?, &Coupling::new(lo)?, 1.0, DistanceConvention::Paper)?;
    Ok(DistanceBound {
        bound,
        sin_theta,
        distance,
        holds: distance <= bound * (1.0 + 1e-12) + 1e-15,
    })
}

/// Element-wise mean of the sampled costs.
pub fn mean_cost(samples: &ChainOutput) -> Result<CostMatrix> {
    let Some(first) = samples.samples.first() else {
        return Err(invalid("no samples"));
    };
    let (m, n) = first.matrix().dim();
    let mut acc = Matrix::filled(m, n, 0.0);
    for k in &samples.samples {
        first.matrix().require_same_dim(k.matrix())?;
        for (a, x) in acc.as_mut_slice().iter_mut().zip(k.matrix().as_slice()) {
            *a += -ln(*x) / samples.lambda;
        }
    }
    let count = samples.samples.len() as f64;
    CostMatrix::new(acc.map(|x| x / count))
}

/// Forward plan of the mean sampled cost with marginals `marg`.
pub fn predict_from_mean_cost(samples: &ChainOutput, marg: &Marginals, lambda: f64) -> Result<Coupling> {
    let c = mean_cost(samples)?;
    plan_for_cost(&c, marg, lambda)
}

fn plan_for_cost(c: &CostMatrix, marg: &Marginals, lambda: f64) -> Result<Coupling> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda must be positive"));
    }
    // shift costs so the largest kernel entry is one; the plan is unchanged
    let min = c.matrix().as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
    let k = Kernel::new(c.matrix().map(|x| exp(-lambda * (x - min))))?;
    Ok(sinkhorn(&k, marg, &SinkhornOptions::default())?.coupling)
}

/// The single masked entry of `t`.
pub fn single_missing(t: &Coupling) -> Result<(usize, usize)> {
    let mut it = t.missing().iter();
    match (it.next(), it.next()) {
        (Some(&idx), None) => Ok(idx),
        (None, _) => Err(invalid("expected exactly one missing entry, found none")),
        (Some(_), Some(_)) => Err(Error::Unsupported(alloc::format!(
            "{} missing entries; only one is supported",
            t.missing().len()
        ))),
    }
}

/// Midpoints of `n` equal cells covering `[low, high)`.
pub fn fill_values(low: f64, high: f64, n: usize) -> Result<Vec<f64>> {
    if !(low > 0.0 && high > low && high.is_finite()) || n == 0 {
        return Err(invalid("fill range must satisfy 0 < low < high with at least one fill"));
    }
    let w = (high - low) / n as f64;
    Ok((0..n).map(|k| low + w * (k as f64 + 0.5)).collect())
}

/// `t` completed with each fill value.
pub fn fill_components(t: &Coupling, low: f64, high: f64, n_fill: usize) -> Result<Vec<Coupling>> {
    let idx = single_missing(t)?;
    fill_values(low, high, n_fill)?
        .into_iter()
        .map(|v| t.fill(idx, v))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub coupling: Coupling,
    pub mean_cost: CostMatrix,
}

/// Pools per-fill chains and pushes the mean cost through Sinkhorn with `marg`.
#[allow(clippy::too_many_arguments)]
pub fn predict_missing(
    t: &Coupling,
    fill_low: f64,
    fill_high: f64,
    n_fill: usize,
    prior: &PriorSpec,
    cfg: &ChainConfig,
    kind: SamplerKind,
    marg: &Marginals,
) -> Result<Prediction> {
    let outputs = fill_components(t, fill_low, fill_high, n_fill)?
        .iter()
        .enumerate()
        .map(|(c, tc)| run_chain(tc, prior, &component_config(cfg, c), kind))
        .collect::<Result<Vec<_>>>()?;
    prediction_from_outputs(outputs, marg, cfg.lambda)
}

/// Merge step shared by the sequential and parallel prediction drivers.
pub fn prediction_from_outputs(outputs: Vec<ChainOutput>, marg: &Marginals, lambda: f64) -> Result<Prediction> {
    let pooled = pool_outputs(outputs)?;
    let mean_cost = mean_cost(&pooled)?;
    let coupling = plan_for_cost(&mean_cost, marg, lambda)?;
    Ok(Prediction { coupling, mean_cost })
}

/// Whether scalings `d_row_s` (rows `rows`) and `d_col_s` (columns `cols`)
/// extend to a column-stochastic `diag(d) T diag(d_c)`: the remaining rows
/// need factors `x >= EPS_POS` with
/// `sum_{r not in rows} x_r t_{r c} = 1 / d_col_c - sum_{r in rows} d_row_r t_{r c}`.
pub fn submatrix_support_feasible(
    t: &Coupling,
    rows: &[usize],
    cols: &[usize],
    d_row_s: &[f64],
    d_col_s: &[f64],
) -> Result<bool> {
    let base = t.matrix()?;
    base.require_positive("coupling")?;
    let (m, n) = base.dim();
    let distinct_in = |set: &[usize], bound: usize| {
        set.iter().all(|&x| x < bound) && (1..set.len()).all(|a| !set[..a].contains(&set[a]))
    };
    if rows.is_empty() || rows.len() >= m || !distinct_in(rows, m) {
        return Err(invalid("row subset must be a proper, non-empty set of distinct rows"));
    }
    if cols.is_empty() || !distinct_in(cols, n) {
        return Err(invalid("column subset must be a non-empty set of distinct columns"));
    }
    if d_row_s.len() != rows.len() || d_col_s.len() != cols.len() {
        return Err(Error::DimensionMismatch {
            expected: (rows.len(), cols.len()),
            got: (d_row_s.len(), d_col_s.len()),
        });
    }
    if d_row_s.iter().chain(d_col_s).any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(invalid("scaling factors must be positive"));
    }
    let rest: Vec<usize> = (0..m).filter(|r| !rows.contains(r)).collect();
    let rhs: Vec<f64> = cols
        .iter()
        .zip(d_col_s)
        .map(|(&c, dc)| 1.0 / dc - rows.iter().zip(d_row_s).map(|(&r, dr)| dr * base[(r, c)]).sum::<f64>())
        .collect();
    if rhs.iter().any(|b| !(*b > 0.0)) {
        return Ok(false);
    }
    let a = Matrix::from_fn(cols.len(), rest.len(), |c, r| base[(rest[r], cols[c])]);
    solution_at_least(&a, &rhs, EPS_POS)
}

/// Possible values of the column holding the missing entry, given the
/// (column-normalized) kernel column `k_ref` at fully observed column `ref_col`.
/// The missing entry sweeps `low + (high - low)(k + 1) / n_points`.
pub fn missing_column_segment(
    t: &Coupling,
    ref_col: usize,
    k_ref: &[f64],
    (low, high): (f64, f64),
    n_points: usize,
) -> Result<Vec<Vec<f64>>> {
    let (r_miss, c_miss) = single_missing(t)?;
    let (m, n) = t.dim();
    if ref_col >= n {
        return Err(Error::IndexOutOfRange(0, ref_col));
    }
    if ref_col == c_miss {
        return Err(invalid("reference column must be fully observed"));
    }
    if k_ref.len() != m {
        return Err(Error::DimensionMismatch {
            expected: (m, 1),
            got: (k_ref.len(), 1),
        });
    }
    if k_ref.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
        return Err(invalid("reference column must be positive"));
    }
    if !(low >= 0.0 && high > low && high.is_finite()) || n_points == 0 {
        return Err(invalid("segment range must satisfy 0 <= low < high"));
    }
    let mut d = Vec::with_capacity(m);
    let mut col = Vec::with_capacity(m);
    for (i, kr) in k_ref.iter().enumerate() {
        let tl = t.observed(i, ref_col).expect("reference column is observed");
        if !(tl > 0.0) {
            return Err(invalid("reference column of the coupling must be positive"));
        }
        d.push(kr / tl);
        if i != r_miss {
            let v = t.observed(i, c_miss).expect("only one entry is missing");
            if !(v > 0.0) {
                return Err(invalid("observed entries must be positive"));
            }
            col.push(v);
        } else {
            col.push(0.0);
        }
    }
    Ok((0..n_points)
        .map(|k| {
            col[r_miss] = low + (high - low) * (k as f64 + 1.0) / n_points as f64;
            let raw: Vec<f64> = d.iter().zip(&col).map(|(a, b)| a * b).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossratio::log_ratios;
    use crate::matrix::normalize_columns;
    use crate::priors::Alpha;
    use std::collections::BTreeSet;

    fn t3() -> Coupling {
        Coupling::from_rows(&[
            [0.1067, 0.1141, 0.1125],
            [0.1175, 0.1052, 0.1106],
            [0.1092, 0.1139, 0.1102],
        ])
        .unwrap()
    }

    fn cfg() -> ChainConfig {
        ChainConfig {
            sigma: 0.02,
            burn_in: 200,
            n_samples: 40,
            lag: 5,
            constrained_p1: true,
            reject_kernel_ge_one: true,
            seed: 4,
            ..ChainConfig::default()
        }
    }

    #[test]
    fn noise_draws_are_positive_and_deterministic() {
        let t = Coupling::from_rows(&[[0.01, 0.5], [0.2, 0.29]]).unwrap();
        let a = gaussian_noise_draws(&t, (0, 0), 0.05, 50, 1).unwrap();
        let b = gaussian_noise_draws(&t, (0, 0), 0.05, 50, 1).unwrap();
        assert_eq!(a, b);
        for d in &a {
            assert!(d.observed(0, 0).unwrap() > 0.0);
            assert_eq!(d.observed(1, 1), Some(0.29));
        }
        let zero = gaussian_noise_draws(&t, (0, 0), 0.0, 3, 1).unwrap();
        assert!(zero.iter().all(|d| d == &t));
    }

    #[test]
    fn zero_noise_pool_is_repeated_chain() {
        let t = t3();
        let prior = PriorSpec::p1(Alpha::Scalar(1.0), 1.0);
        let single = run_chain(&t, &prior, &cfg(), SamplerKind::MetroMc).unwrap();
        let cfg0 = ChainConfig { stream: 0, ..cfg() };
        let pooled = gaussian_noise_posterior(&t, (0, 1), 0.0, 3, &prior, &cfg0, SamplerKind::MetroMc).unwrap();
        assert_eq!(pooled.samples.len(), 3 * single.samples.len());
        assert_eq!(&pooled.samples[..single.samples.len()], &single.samples[..]);
    }

    #[test]
    fn pooled_samples_keep_invariant_ratios() {
        let t = t3();
        let idx = (0, 1);
        let prior = PriorSpec::p1(Alpha::Scalar(1.0), 1.0);
        let pooled = gaussian_noise_posterior(&t, idx, 0.004, 4, &prior, &cfg(), SamplerKind::MetroMc).unwrap();
        let (inv, noisy) = split_basis((3, 3), idx).unwrap();
        assert_eq!(inv.len(), 3);
        assert!(noisy.touches(0, 1));
        let want = log_ratios(t.matrix().unwrap(), &inv).unwrap();
        let mut noisy_vals = BTreeSet::new();
        for k in &pooled.samples {
            let got = log_ratios(k.matrix(), &inv).unwrap();
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-9);
            }
            noisy_vals.insert(log_ratios(k.matrix(), &[noisy]).unwrap()[0].to_bits());
        }
        assert!(noisy_vals.len() > 1);
    }

    #[test]
    fn offsets_follow_perturbation() {
        let t = t3();
        let prior = PriorSpec::p1(Alpha::Scalar(1.0), 1.0);
        let q1 = Quadruple::new(0, 1, 0, 1);
        let q2 = Quadruple::new(0, 1, 1, 2);
        let base = t.matrix().unwrap();
        for eps in [-0.01, 0.0, 0.01] {
            let te = t.with_entry((0, 0), base[(0, 0)] + eps).unwrap();
            let out = run_chain(&te, &prior, &cfg(), SamplerKind::MetroMc).unwrap();
            let series = bounded_noise_offsets(&out, &[q1, q2]).unwrap();
            let w1 = -((base[(0, 0)] + eps) * base[(1, 1)] / (base[(1, 0)] * base[(0, 1)])).ln();
            let w2 = -(base[(0, 1)] * base[(1, 2)] / (base[(0, 2)] * base[(1, 1)])).ln();
            assert!(series[0].iter().all(|x| (x - w1).abs() < 1e-9));
            assert!(series[1].iter().all(|x| (x - w2).abs() < 1e-9));
        }
    }

    #[test]
    fn distance_bound_two_by_three() {
        let t = Coupling::from_rows(&[[1.0, 2.0, 3.0], [2.0, 3.0, 1.0]]).unwrap();
        for a in [1e-6, 0.1, 0.5] {
            let b = bounded_noise_distance_bound(&t, a, (0, 0)).unwrap();
            assert!((b.sin_theta - 3f64.sqrt() / 2.0).abs() < 1e-12);
            let want = ((1.0 + a) / (1.0 - a)).ln() * 2.0 / 3f64.sqrt();
            assert!((b.bound - want).abs() < 1e-12);
            assert!(b.holds);
        }
        assert!(bounded_noise_distance_bound(&t, 1.0, (0, 0)).is_err());
        let b = bounded_noise_distance_bound(&t, 0.3, (1, 2)).unwrap();
        assert!(b.holds && b.distance > 0.0);
    }

    #[test]
    fn mean_cost_prediction_reproduces_plan() {
        let t = t3().normalized().unwrap();
        let prior = PriorSpec::p1(Alpha::Scalar(1.0), 1.0);
        let cfg = ChainConfig { sigma: 1e-4, ..cfg() };
        let out = run_chain(&t, &prior, &cfg, SamplerKind::MetroMc).unwrap();
        let pred = predict_from_mean_cost(&out, &t.marginals().unwrap(), 1.0).unwrap();
        let diff = pred.matrix().unwrap().max_abs_diff(t.matrix().unwrap());
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn fill_grid_and_mask_checks() {
        assert_eq!(fill_values(1.0, 3.0, 2).unwrap(), [1.5, 2.5]);
        assert!(fill_values(0.0, 3.0, 2).is_err());
        let full = t3();
        assert!(fill_components(&full, 0.1, 0.2, 3).is_err());
        let two =
            Coupling::with_missing(full.matrix().unwrap().clone(), [(0, 0), (1, 1)].into_iter().collect()).unwrap();
        assert!(matches!(single_missing(&two), Err(Error::Unsupported(_))));
    }

    #[test]
    fn prediction_recovers_masked_entry() {
        let t = t3().normalized().unwrap();
        let truth = t.matrix().unwrap()[(1, 2)];
        let masked = Coupling::with_missing(t.matrix().unwrap().clone(), [(1, 2)].into_iter().collect()).unwrap();
        let prior = PriorSpec::p1(Alpha::Scalar(1.0), 1.0);
        let cfg = ChainConfig {
            sigma: 1e-4,
            n_samples: 5,
            burn_in: 10,
            ..cfg()
        };
        let pred = predict_missing(
            &masked,
            truth * 0.95,
            truth * 1.05,
            2,
            &prior,
            &cfg,
            SamplerKind::MetroMc,
            &t.marginals().unwrap(),
        )
        .unwrap();
        let got = pred.coupling.matrix().unwrap()[(1, 2)];
        assert!((got - truth).abs() < 0.05 * truth, "{got} vs {truth}");
    }

    #[test]
    fn feasibility_from_actual_kernel() {
        let t = Coupling::from_rows(&[
            [0.3096, 0.3785, 0.0544, 0.2575],
            [0.2522, 0.3203, 0.1860, 0.2415],
            [0.4318, 0.1433, 0.4196, 0.0053],
            [0.0064, 0.1579, 0.3400, 0.4957],
        ])
        .unwrap();
        let d = [0.7, 1.3, 0.4, 2.0];
        let scaled = Matrix::from_fn(4, 4, |i, j| d[i] * t.matrix().unwrap()[(i, j)]);
        let col_sums = scaled.col_sums();
        let rows = [0, 1];
        let cols = [1, 2];
        let d_col: Vec<f64> = cols.iter().map(|&c| 1.0 / col_sums[c]).collect();
        assert!(submatrix_support_feasible(&t, &rows, &cols, &d[..2], &d_col).unwrap());
        // column sums already exceed one inside the subset
        assert!(!submatrix_support_feasible(&t, &rows, &cols, &[10.0, 10.0], &d_col).unwrap());
        assert!(submatrix_support_feasible(&t, &[0, 1, 2, 3], &cols, &d, &d_col).is_err());
    }

    #[test]
    fn segment_is_collinear_in_open_simplex() {
        let m = Matrix::from_rows(&[
            [0.4583, 0.2297, 0.2633],
            [0.4631, 0.4785, 0.2755],
            [0.0785, 0.2919, 0.4611],
        ])
        .unwrap();
        let t = Coupling::with_missing(m.clone(), [(2, 0)].into_iter().collect()).unwrap();
        let k_ref = normalize_columns(&m, None).unwrap().column(1);
        let pts = missing_column_segment(&t, 1, &k_ref, (0.0, 10.0), 1000).unwrap();
        assert_eq!(pts.len(), 1000);
        let ratio0 = pts[0][0] / pts[0][1];
        for p in &pts {
            assert!(p.iter().all(|x| *x > 0.0 && *x < 1.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((p[0] / p[1] - ratio0).abs() < 1e-12 * ratio0);
        }
    }
}
