//! Posterior samplers over the cost subspace of an observed coupling.
//!
//! Both samplers move only by positive diagonal scalings of the kernel, so
//! every visited state has exactly the cross-ratios of the starting plan and
//! the likelihood term is identically one. Acceptance therefore reduces to
//! the prior ratio (MetroMC) or the prior ratio times a Hastings correction
//! for the row-sum dependent step size (MHMC).

mod metromc;
mod mhmc;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{centered_to_cost_sum, cost_from_kernel, renormalize_to_cost_sum, CostMatrix, Coupling, Kernel};
use crate::priors::{PriorKind, PriorSpec};
use crate::rng::{chain_rng, ChainRng};

pub use metromc::{metromc_step, MetroMc};
pub use mhmc::{mhmc_step, Mhmc, MhmcModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    MetroMc,
    Mhmc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    /// MetroMC proposal standard deviation of each log scaling factor.
    pub sigma: f64,
    /// MHMC step size `sigma0 * s_i^gamma + delta` for row sum `s_i`.
    pub sigma0: f64,
    pub gamma: f64,
    pub delta: f64,
    pub burn_in: usize,
    pub n_samples: usize,
    pub lag: usize,
    pub seed: u64,
    /// Component index; selects the RNG stream.
    pub stream: u64,
    /// Draw `m + n - 1` factors and solve the last so the cost sum is preserved.
    pub constrained_p1: bool,
    /// Reject any proposal with a kernel entry `>= 1` (a non-positive cost).
    pub reject_kernel_ge_one: bool,
    pub lambda: f64,
    /// Keep every burn-in state (for lag selection).
    pub record_burn_in: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            sigma: 0.02,
            sigma0: 0.5,
            gamma: 3.0,
            delta: 1.0,
            burn_in: 10_000,
            n_samples: 10_000,
            lag: 100,
            seed: 0,
            stream: 0,
            constrained_p1: false,
            reject_kernel_ge_one: false,
            lambda: 1.0,
            record_burn_in: false,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.lag < 1 {
            return bad("lag must be at least 1");
        }
        if self.n_samples < 1 {
            return bad("n_samples must be at least 1");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be non-negative");
        }
        if !(self.sigma0 >= 0.0 && self.sigma0.is_finite()) || !self.gamma.is_finite() {
            return bad("sigma0 must be non-negative and gamma finite");
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad("delta must be non-negative");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be positive");
        }
        Ok(())
    }

    /// Total number of steps a chain takes.
    pub fn total_steps(&self) -> usize {
        self.burn_in + self.n_samples * self.lag
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub samples: Vec<Kernel>,
    /// Accepted fraction of the post-burn-in steps.
    pub acceptance_rate: f64,
    /// Row sums of each recorded sample.
    pub trace_row_sums: Vec<Vec<f64>>,
    /// Every burn-in state when `record_burn_in` is set.
    pub burn_in_trace: Vec<Kernel>,
    pub seed_used: u64,
    pub stream: u64,
    pub lambda: f64,
}

impl ChainOutput {
    /// Recorded samples as costs `-ln(K) / lambda`.
    pub fn costs(&self) -> Vec<CostMatrix> {
        self.samples
            .iter()
            .map(|k| cost_from_kernel(k, self.lambda).expect("lambda validated at chain start"))
            .collect()
    }
}

/// Where a chain starts: `T` itself, or `T` scaled onto the prior's cost-sum
/// simplex when the prior or proposal fixes the cost sum.
///
/// If the constant rescaling leaves a kernel entry `>= 1` (a non-positive
/// cost, outside the Dirichlet support) the row/column centered rescaling is
/// used instead; if that fails too the start is returned as is and the chain
/// stays put until a proposal lands in the support.
pub fn initial_kernel(t: &Coupling, prior: &PriorSpec, cfg: &ChainConfig) -> Result<Kernel> {
    if cfg.constrained_p1 || prior.kind == PriorKind::P1DirichletCost {
        let k = renormalize_to_cost_sum(t, cfg.lambda, prior.cost_sum)?;
        if k.max_entry() < 1.0 {
            return Ok(k);
        }
        let centered = centered_to_cost_sum(t, cfg.lambda, prior.cost_sum)?;
        Ok(if centered.max_entry() < 1.0 { centered } else { k })
    } else {
        Kernel::new(t.matrix()?.clone())
    }
}

trait Chain {
    fn step(&mut self, rng: &mut ChainRng) -> bool;
    fn current(&self) -> Kernel;
}

/// Runs `cfg.burn_in` steps, then records one state every `cfg.lag` steps.
pub fn run_chain(t: &Coupling, prior: &PriorSpec, cfg: &ChainConfig, kind: SamplerKind) -> Result<ChainOutput> {
    cfg.validate()?;
    prior.validate(t.dim())?;
    let k0 = initial_kernel(t, prior, cfg)?;
    match kind {
        SamplerKind::MetroMc => drive(MetroMc::new(&k0, prior, cfg)?, cfg),
        SamplerKind::Mhmc => {
            if prior.kind != PriorKind::P2ColumnDirichletKernel {
                return Err(Error::InvalidConfig(format!(
                    "MHMC samples kernels under the column-Dirichlet prior, got {:?}",
                    prior.kind
                )));
            }
            drive(Mhmc::new(&k0, prior, cfg)?, cfg)
        }
    }
}

fn drive(mut chain: impl Chain, cfg: &ChainConfig) -> Result<ChainOutput> {
    let mut rng = chain_rng(cfg.seed, cfg.stream);
    let mut burn_in_trace = Vec::new();
    for _ in 0..cfg.burn_in {
        chain.step(&mut rng);
        if cfg.record_burn_in {
            burn_in_trace.push(chain.current());
        }
    }
    let mut samples = Vec::with_capacity(cfg.n_samples);
    let mut trace_row_sums = Vec::with_capacity(cfg.n_samples);
    let mut accepted = 0usize;
    for _ in 0..cfg.n_samples {
        for _ in 0..cfg.lag {
            accepted += usize::from(chain.step(&mut rng));
        }
        let k = chain.current();
        trace_row_sums.push(k.matrix().row_sums());
        samples.push(k);
    }
    Ok(ChainOutput {
        samples,
        acceptance_rate: accepted as f64 / (cfg.n_samples * cfg.lag) as f64,
        trace_row_sums,
        burn_in_trace,
        seed_used: cfg.seed,
        stream: cfg.stream,
        lambda: cfg.lambda,
    })
}
