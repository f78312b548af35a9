//! Random-walk Metropolis over diagonal scalings of the kernel.
//!
//! The chain state is the log-kernel `L = -lambda C`. A proposal adds
//! `a_i + b_j` with Gaussian `a`, `b`, i.e. `K' = diag(e^a) K diag(e^b)`,
//! which leaves every cross-ratio unchanged. The proposal is symmetric so
//! acceptance is the prior ratio alone.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Chain, ChainConfig};
use crate::error::Result;
use crate::math::{exp, ln};
use crate::matrix::{Kernel, Matrix};
use crate::priors::{asymmetry_norm, Alpha, LogDensity, PriorKind, PriorSpec, DOMAIN_TOL};
use crate::rng::ChainRng;

#[derive(Debug, Clone)]
pub struct MetroMc<'a> {
    prior: &'a PriorSpec,
    cfg: &'a ChainConfig,
    log_k: Matrix,
    proposal: Matrix,
    a: Vec<f64>,
    b: Vec<f64>,
    current: LogDensity,
}

impl<'a> MetroMc<'a> {
    pub fn new(kernel: &Kernel, prior: &'a PriorSpec, cfg: &'a ChainConfig) -> Result<Self> {
        cfg.validate()?;
        prior.validate(kernel.matrix().dim())?;
        let log_k = kernel.matrix().map(ln);
        let current = log_target(&log_k, prior, cfg);
        let (m, n) = log_k.dim();
        Ok(Self {
            prior,
            cfg,
            proposal: log_k.clone(),
            log_k,
            a: vec![0.0; m],
            b: vec![0.0; n],
            current,
        })
    }

    pub fn log_kernel(&self) -> &Matrix {
        &self.log_k
    }

    /// Log prior at the current state.
    pub fn log_density(&self) -> LogDensity {
        self.current
    }

    pub fn kernel(&self) -> Kernel {
        Kernel::from_positive(self.log_k.map(exp))
    }

    /// One Metropolis step; returns whether the proposal was accepted.
    pub fn step(&mut self, rng: &mut ChainRng) -> bool {
        let (m, n) = self.log_k.dim();
        let sigma = self.cfg.sigma;
        for a in &mut self.a {
            *a = sigma * rng.sample::<f64, _>(StandardNormal);
        }
        if self.cfg.constrained_p1 {
            for b in &mut self.b[..n - 1] {
                *b = sigma * rng.sample::<f64, _>(StandardNormal);
            }
            // sum_ij (a_i + b_j) = n sum a + m sum b = 0 keeps the cost sum fixed
            let sa: f64 = self.a.iter().sum();
            let sb: f64 = self.b[..n - 1].iter().sum();
            self.b[n - 1] = -(n as f64 * sa + m as f64 * sb) / m as f64;
        } else {
            for b in &mut self.b {
                *b = sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let u: f64 = rng.random();

        for i in 0..m {
            for j in 0..n {
                self.proposal[(i, j)] = self.log_k[(i, j)] + self.a[i] + self.b[j];
            }
        }
        let proposed = if self.cfg.reject_kernel_ge_one && self.proposal.as_slice().iter().any(|&l| l >= 0.0) {
            LogDensity::OutOfDomain
        } else {
            log_target(&self.proposal, self.prior, self.cfg)
        };
        let accept = match (self.current, proposed) {
            (_, LogDensity::OutOfDomain) => false,
            (LogDensity::OutOfDomain, LogDensity::Finite(_)) => true,
            (LogDensity::Finite(cur), LogDensity::Finite(new)) => ln(u) < new - cur,
        };
        if accept {
            core::mem::swap(&mut self.log_k, &mut self.proposal);
            self.current = proposed;
        }
        accept
    }
}

impl Chain for MetroMc<'_> {
    fn step(&mut self, rng: &mut ChainRng) -> bool {
        MetroMc::step(self, rng)
    }

    fn current(&self) -> Kernel {
        self.kernel()
    }
}

/// A single MetroMC transition from `kernel`.
pub fn metromc_step(
    kernel: &Kernel,
    prior: &PriorSpec,
    cfg: &ChainConfig,
    rng: &mut ChainRng,
) -> Result<(Kernel, bool)> {
    let mut chain = MetroMc::new(kernel, prior, cfg)?;
    let accepted = chain.step(rng);
    Ok((chain.kernel(), accepted))
}

/// Prior log-density of the state with log-kernel `log_k`.
fn log_target(log_k: &Matrix, prior: &PriorSpec, cfg: &ChainConfig) -> LogDensity {
    let lambda = cfg.lambda;
    match prior.kind {
        PriorKind::P1DirichletCost => {
            let total = -log_k.sum() / lambda;
            if crate::math::abs(total - prior.cost_sum) > DOMAIN_TOL * prior.cost_sum.max(1.0) {
                return LogDensity::OutOfDomain;
            }
            let mut acc = 0.0;
            let n = log_k.cols();
            for (idx, &l) in log_k.as_slice().iter().enumerate() {
                let c = -l / lambda;
                if !(c > 0.0) {
                    return LogDensity::OutOfDomain;
                }
                acc += (prior.alpha.at(idx / n, idx % n) - 1.0) * ln(c / prior.cost_sum);
            }
            LogDensity::Finite(acc)
        }
        PriorKind::P2ColumnDirichletKernel => column_dirichlet(log_k, &prior.alpha),
        PriorKind::GibbsSymmetricCost => {
            let c = log_k.map(|l| -l / lambda);
            LogDensity::Finite(-prior.beta * prior.gamma_weight * asymmetry_norm(&c))
        }
    }
}

/// Column-Dirichlet log-density of `Col(exp(log_k))`.
fn column_dirichlet(log_k: &Matrix, alpha: &Alpha) -> LogDensity {
    let (m, n) = log_k.dim();
    let mut acc = 0.0;
    for j in 0..n {
        let lse = crate::math::log_sum_exp((0..m).map(|i| log_k[(i, j)]));
        for i in 0..m {
            acc += (alpha.at(i, j) - 1.0) * (log_k[(i, j)] - lse);
        }
    }
    if acc.is_finite() {
        LogDensity::Finite(acc)
    } else {
        LogDensity::OutOfDomain
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossratio::max_log_ratio_gap;
    use crate::rng::chain_rng;

    fn cfg() -> ChainConfig {
        ChainConfig {
            sigma: 0.05,
            constrained_p1: true,
            reject_kernel_ge_one: true,
            burn_in: 0,
            n_samples: 1,
            lag: 1,
            ..ChainConfig::default()
        }
    }

    fn start() -> Kernel {
        let t = crate::matrix::Coupling::from_rows(&[[0.1, 0.2, 0.05], [0.15, 0.1, 0.4]]).unwrap();
        crate::matrix::renormalize_to_cost_sum(&t, 1.0, 10.0).unwrap()
    }

    #[test]
    fn constrained_proposals_keep_cost_sum_and_ratios() {
        let k0 = start();
        let prior = PriorSpec::p1(Alpha::Scalar(2.0), 10.0);
        let cfg = cfg();
        let mut chain = MetroMc::new(&k0, &prior, &cfg).unwrap();
        let mut rng = chain_rng(3, 0);
        let mut accepted = 0;
        for _ in 0..2000 {
            accepted += usize::from(chain.step(&mut rng));
            assert!((-chain.log_kernel().sum() - 10.0).abs() < 1e-10);
        }
        assert!(accepted > 0);
        let gap = max_log_ratio_gap(chain.kernel().matrix(), k0.matrix()).unwrap();
        assert!(gap < 1e-10, "gap {gap}");
    }

    #[test]
    fn unconstrained_p1_never_moves() {
        let k0 = start();
        let prior = PriorSpec::p1(Alpha::Scalar(2.0), 10.0);
        let cfg = ChainConfig {
            constrained_p1: false,
            ..cfg()
        };
        let mut rng = chain_rng(1, 0);
        for _ in 0..50 {
            let (k, acc) = metromc_step(&k0, &prior, &cfg, &mut rng).unwrap();
            assert!(!acc);
            assert_eq!(k.matrix(), k0.matrix());
        }
    }

    #[test]
    fn kernel_ge_one_rejected() {
        // entries close to one: almost every proposal pushes one above it
        let k0 = Kernel::from_rows(&[[0.999, 0.999], [0.999, 0.999]]).unwrap();
        let prior = PriorSpec::p2(Alpha::Scalar(1.0));
        let cfg = ChainConfig {
            sigma: 1.0,
            constrained_p1: false,
            ..cfg()
        };
        let mut chain = MetroMc::new(&k0, &prior, &cfg).unwrap();
        let mut rng = chain_rng(5, 0);
        for _ in 0..500 {
            chain.step(&mut rng);
            assert!(chain.kernel().max_entry() < 1.0);
        }
    }

    #[test]
    fn p2_target_matches_prior_function() {
        let k = Kernel::from_rows(&[[0.3, 0.5], [0.2, 0.9]]).unwrap();
        let alpha = Alpha::Scalar(3.0);
        let direct = crate::priors::log_prior_p2(
            &Kernel::new(crate::matrix::normalize_columns(k.matrix(), None).unwrap()).unwrap(),
            &alpha,
        )
        .value()
        .unwrap();
        let here = column_dirichlet(&k.matrix().map(ln), &alpha).value().unwrap();
        assert!((direct - here).abs() < 1e-12);
    }
}
