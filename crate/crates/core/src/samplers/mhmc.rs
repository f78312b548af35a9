//! Metropolis-Hastings over row scalings of a column-normalized kernel.
//!
//! Column normalization removes the column scalings, so the free coordinates
//! are the log row scales `x`: the state is `K(x) = Col(diag(e^x) K0)`, always
//! recomputed from the fixed `K0` so cross-ratios never drift. Each step
//! perturbs one row, visited cyclically, by `eps ~ N(0, sigma_i)` with
//! `sigma_i = sigma0 * s_i^gamma + delta` and `s_i` the row sum of `K(x)`.
//! Because the step size depends on the state, the reverse move has its own
//! `sigma_i'` and the Hastings ratio is `N(-eps; 0, sigma_i') / N(eps; 0, sigma_i)`.
//!
//! The target is the column-Dirichlet prior pulled back to `x`. Its density
//! with respect to Lebesgue measure on `x` carries the Jacobian
//! `prod_i K(x)_{i0}` of the map from `x` to the first column's free entries;
//! without it the chain would not leave the prior invariant.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Chain, ChainConfig};
use crate::error::{invalid, Result};
use crate::math::{exp, ln, normal_log_pdf, powf};
use crate::matrix::{Kernel, Matrix};
use crate::priors::{Alpha, LogDensity, PriorSpec};
use crate::rng::ChainRng;

/// The MHMC target and proposal as pure functions of the log row scales.
#[derive(Debug, Clone, PartialEq)]
pub struct MhmcModel {
    base: Matrix,
    alpha: Alpha,
    sigma0: f64,
    gamma: f64,
    delta: f64,
}

impl MhmcModel {
    pub fn new(base: &Kernel, alpha: Alpha, sigma0: f64, gamma: f64, delta: f64) -> Result<Self> {
        alpha.validate(base.matrix().dim())?;
        if !(sigma0 >= 0.0 && delta >= 0.0) || !(sigma0 > 0.0 || delta > 0.0) || !gamma.is_finite() {
            return Err(invalid("MHMC step size needs sigma0, delta >= 0 with one positive"));
        }
        Ok(Self {
            base: base.matrix().clone(),
            alpha,
            sigma0,
            gamma,
            delta,
        })
    }

    pub fn rows(&self) -> usize {
        self.base.rows()
    }

    /// `Col(diag(e^x) K0)`.
    pub fn normalized(&self, x: &[f64]) -> Matrix {
        let mut out = self.base.clone();
        self.normalize_into(x, &mut out);
        out
    }

    fn normalize_into(&self, x: &[f64], out: &mut Matrix) {
        let (m, n) = self.base.dim();
        // shift by max(x) so large scales do not overflow
        let shift = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for j in 0..n {
            let mut s = 0.0;
            for i in 0..m {
                let v = self.base[(i, j)] * exp(x[i] - shift);
                out[(i, j)] = v;
                s += v;
            }
            for i in 0..m {
                out[(i, j)] /= s;
            }
        }
    }

    /// Log target at `x` given its normalized kernel.
    fn log_target_of(&self, k: &Matrix) -> LogDensity {
        let (m, n) = k.dim();
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..n {
                let v = k[(i, j)];
                if !(v > 0.0) {
                    return LogDensity::OutOfDomain;
                }
                acc += (self.alpha.at(i, j) - 1.0) * ln(v);
            }
            acc += ln(k[(i, 0)]);
        }
        LogDensity::Finite(acc)
    }

    /// Unnormalized log target density of `x`.
    pub fn log_target(&self, x: &[f64]) -> LogDensity {
        self.log_target_of(&self.normalized(x))
    }

    fn sd_of(&self, k: &Matrix, row: usize) -> f64 {
        let s: f64 = k.row(row).iter().sum();
        self.sigma0 * powf(s, self.gamma) + self.delta
    }

    /// Proposal standard deviation for `row` at `x`.
    pub fn proposal_sd(&self, x: &[f64], row: usize) -> f64 {
        self.sd_of(&self.normalized(x), row)
    }

    /// Log proposal density of moving `from -> to` along `row`.
    pub fn log_proposal(&self, from: &[f64], to: &[f64], row: usize) -> f64 {
        normal_log_pdf(to[row] - from[row], 0.0, self.proposal_sd(from, row))
    }

    /// Log acceptance probability of `from -> to` along `row`.
    pub fn log_acceptance(&self, from: &[f64], to: &[f64], row: usize) -> f64 {
        match (self.log_target(from), self.log_target(to)) {
            (_, LogDensity::OutOfDomain) => f64::NEG_INFINITY,
            (LogDensity::OutOfDomain, _) => 0.0,
            (LogDensity::Finite(a), LogDensity::Finite(b)) => {
                let r = b - a + self.log_proposal(to, from, row) - self.log_proposal(from, to, row);
                r.min(0.0)
            }
        }
    }
}

/// MHMC chain state.
#[derive(Debug, Clone)]
pub struct Mhmc {
    model: MhmcModel,
    x: Vec<f64>,
    x_new: Vec<f64>,
    k: Matrix,
    k_new: Matrix,
    current: LogDensity,
    next_row: usize,
}

impl Mhmc {
    pub fn new(kernel: &Kernel, prior: &PriorSpec, cfg: &ChainConfig) -> Result<Self> {
        cfg.validate()?;
        let model = MhmcModel::new(kernel, prior.alpha.clone(), cfg.sigma0, cfg.gamma, cfg.delta)?;
        Ok(Self::from_model(model))
    }

    pub fn from_model(model: MhmcModel) -> Self {
        let m = model.rows();
        let x = vec![0.0; m];
        let k = model.normalized(&x);
        let current = model.log_target_of(&k);
        Self {
            x_new: x.clone(),
            k_new: k.clone(),
            x,
            k,
            current,
            next_row: 0,
            model,
        }
    }

    pub fn model(&self) -> &MhmcModel {
        &self.model
    }

    pub fn log_scales(&self) -> &[f64] {
        &self.x
    }

    pub fn kernel(&self) -> Kernel {
        Kernel::from_positive(self.k.clone())
    }

    /// Row the next step perturbs.
    pub fn next_row(&self) -> usize {
        self.next_row
    }

    pub fn step(&mut self, rng: &mut ChainRng) -> bool {
        let row = self.next_row;
        self.next_row = (row + 1) % self.x.len();
        let sd = self.model.sd_of(&self.k, row);
        let eps = sd * rng.sample::<f64, _>(StandardNormal);
        let u: f64 = rng.random();

        self.x_new.copy_from_slice(&self.x);
        self.x_new[row] += eps;
        self.model.normalize_into(&self.x_new, &mut self.k_new);
        let proposed = self.model.log_target_of(&self.k_new);
        let accept = match (self.current, proposed) {
            (_, LogDensity::OutOfDomain) => false,
            (LogDensity::OutOfDomain, _) => true,
            (LogDensity::Finite(cur), LogDensity::Finite(new)) => {
                let sd_back = self.model.sd_of(&self.k_new, row);
                let hastings = normal_log_pdf(-eps, 0.0, sd_back) - normal_log_pdf(eps, 0.0, sd);
                ln(u) < new - cur + hastings
            }
        };
        if accept {
            core::mem::swap(&mut self.x, &mut self.x_new);
            core::mem::swap(&mut self.k, &mut self.k_new);
            self.current = proposed;
        }
        accept
    }
}

impl Chain for Mhmc {
    fn step(&mut self, rng: &mut ChainRng) -> bool {
        Mhmc::step(self, rng)
    }

    fn current(&self) -> Kernel {
        self.kernel()
    }
}

/// A single MHMC transition of `row` starting from `kernel`.
pub fn mhmc_step(
    kernel: &Kernel,
    row: usize,
    prior: &PriorSpec,
    cfg: &ChainConfig,
    rng: &mut ChainRng,
) -> Result<(Kernel, bool)> {
    let m = kernel.matrix().rows();
    if row >= m {
        return Err(crate::Error::IndexOutOfRange(row, m));
    }
    let mut chain = Mhmc::new(kernel, prior, cfg)?;
    chain.next_row = row;
    let accepted = chain.step(rng);
    Ok((chain.kernel(), accepted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossratio::max_log_ratio_gap;
    use crate::rng::chain_rng;

    fn model() -> MhmcModel {
        let k = Kernel::from_rows(&[[0.2, 0.5, 0.1], [0.3, 0.1, 0.6], [0.5, 0.4, 0.3]]).unwrap();
        MhmcModel::new(&k, Alpha::Scalar(2.0), 0.5, 3.0, 1.0).unwrap()
    }

    #[test]
    fn detailed_balance_pairs() {
        let model = model();
        let pairs: [(&[f64], &[f64], usize); 3] = [
            (&[0.0, 0.0, 0.0], &[0.7, 0.0, 0.0], 0),
            (&[0.3, -1.0, 0.2], &[0.3, 0.4, 0.2], 1),
            (&[1.5, 0.1, -0.4], &[1.5, 0.1, -2.0], 2),
        ];
        for (x, y, row) in pairs {
            let fwd =
                model.log_target(x).value().unwrap() + model.log_proposal(x, y, row) + model.log_acceptance(x, y, row);
            let bwd =
                model.log_target(y).value().unwrap() + model.log_proposal(y, x, row) + model.log_acceptance(y, x, row);
            assert!((fwd - bwd).abs() < 1e-12, "{fwd} vs {bwd}");
        }
    }

    #[test]
    fn states_stay_column_stochastic_and_equivalent() {
        let model = model();
        let base = model.normalized(&[0.0; 3]);
        let mut chain = Mhmc::from_model(model);
        let mut rng = chain_rng(2, 0);
        for _ in 0..3000 {
            chain.step(&mut rng);
        }
        let k = chain.kernel();
        for s in k.matrix().col_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(max_log_ratio_gap(k.matrix(), &base).unwrap() < 1e-10);
    }

    #[test]
    fn rows_cycle() {
        let mut chain = Mhmc::from_model(model());
        let mut rng = chain_rng(0, 0);
        let rows: Vec<usize> = (0..5)
            .map(|_| {
                let r = chain.next_row();
                chain.step(&mut rng);
                r
            })
            .collect();
        assert_eq!(rows, [0, 1, 2, 0, 1]);
    }

    #[test]
    fn single_step_row_range_checked() {
        let k = Kernel::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap();
        let prior = PriorSpec::p2(Alpha::Scalar(1.0));
        let cfg = ChainConfig::default();
        assert!(mhmc_step(&k, 2, &prior, &cfg, &mut chain_rng(0, 0)).is_err());
        let (next, _) = mhmc_step(&k, 1, &prior, &cfg, &mut chain_rng(0, 0)).unwrap();
        assert_eq!(next.matrix().dim(), (2, 2));
    }
}
