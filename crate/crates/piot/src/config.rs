//! Experiment configuration files.
//!
//! Flat `key = value` lines with dotted section names; `#` starts a comment.
//! Entry indices in config files are 1-based, like the row/column labels
//! people read off a matrix. Relative paths resolve against the config
//! file's directory.
//!
//! ```text
//! sampler = metromc
//! prior.kind = p1
//! prior.alpha = 25,5,1.9; 3,25,5; 6,3,25
//! chain.sigma = 0.003
//! chain.constrained = true
//! noise.entry = 1,2
//! noise.sigma = 0.004
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use piot_core::priors::Alpha;
use piot_core::{ChainConfig, Matrix, PriorKind, PriorSpec, SamplerKind};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: TraceFormat,
    /// Largest lag of the autocorrelation series.
    pub max_lag: usize,
    pub kde_bandwidth: f64,
    pub kde_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseScale {
    Absolute(f64),
    /// Standard deviation as a fraction of the observed entry.
    Relative(f64),
    /// Noise bounded by `[-a, a]`; components sweep an even grid over it.
    Bounded(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    /// 0-based.
    pub entry: (usize, usize),
    pub scale: NoiseScale,
    pub components: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FillConfig {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalSource {
    /// Ground truth if given, else `mu`/`nu` files if given, else observed sums.
    Auto,
    Truth,
    Files,
    Observed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictConfig {
    pub marginals: MarginalSource,
    pub mu: Option<PathBuf>,
    pub nu: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    /// Total mass used to report predictions in data units.
    pub total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub sampler: SamplerKind,
    pub prior_kind: PriorKind,
    pub alpha: Alpha,
    pub alpha_diagonal: Option<f64>,
    pub beta: f64,
    pub gamma_weight: f64,
    pub cost_sum: f64,
    pub chain: ChainConfig,
    pub output: OutputConfig,
    pub noise: Option<NoiseConfig>,
    pub fill: Option<FillConfig>,
    pub predict: PredictConfig,
    pub header: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            sampler: SamplerKind::MetroMc,
            prior_kind: PriorKind::P1DirichletCost,
            alpha: Alpha::Scalar(1.0),
            alpha_diagonal: None,
            beta: 1.0,
            gamma_weight: 1.0,
            cost_sum: 1.0,
            chain: ChainConfig::default(),
            output: OutputConfig {
                dir: None,
                format: TraceFormat::Csv,
                max_lag: 200,
                kde_bandwidth: piot_core::diagnostics::DEFAULT_BANDWIDTH,
                kde_points: 200,
            },
            noise: None,
            fill: None,
            predict: PredictConfig {
                marginals: MarginalSource::Auto,
                mu: None,
                nu: None,
                truth: None,
                total: None,
            },
            header: false,
        }
    }
}

impl Config {
    /// The prior for an `m x n` problem.
    pub fn prior(&self, dim: (usize, usize)) -> piot_core::Result<PriorSpec> {
        let alpha = match (self.alpha_diagonal, &self.alpha) {
            (Some(d), Alpha::Scalar(a)) => {
                Alpha::Matrix(Matrix::from_fn(dim.0, dim.1, |i, j| if i == j { d } else { *a }))
            }
            (Some(d), Alpha::Matrix(m)) => {
                let mut m = m.clone();
                for i in 0..m.rows().min(m.cols()) {
                    m[(i, i)] = d;
                }
                Alpha::Matrix(m)
            }
            (None, a) => a.clone(),
        };
        let prior = PriorSpec {
            kind: self.prior_kind,
            alpha,
            beta: self.beta,
            gamma_weight: self.gamma_weight,
            cost_sum: self.cost_sum,
        };
        prior.validate(dim)?;
        Ok(prior)
    }
}

struct Line<'a> {
    no: usize,
    value: &'a str,
}

impl Line<'_> {
    fn err(&self, msg: impl Into<String>) -> CliError {
        CliError::Config {
            line: self.no,
            msg: msg.into(),
        }
    }

    fn f64(&self) -> Result<f64> {
        let v: f64 = self
            .value
            .parse()
            .map_err(|_| self.err(format!("expected a number, got {:?}", self.value)))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err("value must be finite"))
        }
    }

    fn positive(&self) -> Result<f64> {
        let v = self.f64()?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(format!("must be positive, got {v}")))
        }
    }

    fn non_negative(&self) -> Result<f64> {
        let v = self.f64()?;
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(self.err(format!("must be non-negative, got {v}")))
        }
    }

    fn count(&self) -> Result<usize> {
        self.value
            .replace('_', "")
            .parse::<f64>()
            .ok()
            .filter(|v| *v >= 0.0 && v.fract() == 0.0 && *v < 1e15)
            .map(|v| v as usize)
            .ok_or_else(|| self.err(format!("expected a non-negative integer, got {:?}", self.value)))
    }

    fn at_least_one(&self) -> Result<usize> {
        match self.count()? {
            0 => Err(self.err("must be at least 1")),
            v => Ok(v),
        }
    }

    fn bool(&self) -> Result<bool> {
        match self.value {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(self.err(format!("expected true or false, got {v:?}"))),
        }
    }

    fn entry(&self) -> Result<(usize, usize)> {
        let parts: Vec<&str> = self.value.split(',').map(str::trim).collect();
        match parts.as_slice() {
            [i, j] => {
                let i: usize = i.parse().map_err(|_| self.err("entry must be two 1-based indices"))?;
                let j: usize = j.parse().map_err(|_| self.err("entry must be two 1-based indices"))?;
                if i == 0 || j == 0 {
                    return Err(self.err("entry indices are 1-based"));
                }
                Ok((i - 1, j - 1))
            }
            _ => Err(self.err("entry must be written as i,j")),
        }
    }

    fn alpha(&self) -> Result<Alpha> {
        if !self.value.contains([',', ';']) {
            return Ok(Alpha::Scalar(self.positive()?));
        }
        let rows: Vec<Vec<f64>> = self
            .value
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|_| self.err(format!("bad alpha entry {x:?}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let m = Matrix::from_rows(&rows).map_err(|e| self.err(e.to_string()))?;
        if !m.is_strictly_positive() {
            return Err(self.err("alpha entries must be positive"));
        }
        Ok(Alpha::Matrix(m))
    }

    fn path(&self, base: &Path) -> PathBuf {
        let p = Path::new(self.value);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }
}

pub fn parse(text: &str, base: &Path) -> Result<Config> {
    let mut cfg = Config::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut noise_entry = None;
    let mut noise_scale = None;
    let mut noise_components = 10;
    let (mut fill_low, mut fill_high, mut fill_count) = (None, None, 100);

    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(CliError::Config {
                line: no,
                msg: format!("expected key = value, got {content:?}"),
            });
        };
        let key = key.trim();
        let line = Line {
            no,
            value: value.trim(),
        };
        if let Some(prev) = seen.insert(key.to_string(), no) {
            return Err(line.err(format!("{key} already set on line {prev}")));
        }
        let c = &mut cfg.chain;
        match key {
            "sampler" => {
                cfg.sampler = match line.value {
                    "metromc" => SamplerKind::MetroMc,
                    "mhmc" => SamplerKind::Mhmc,
                    v => return Err(line.err(format!("sampler must be metromc or mhmc, got {v:?}"))),
                }
            }
            "prior.kind" => {
                cfg.prior_kind = match line.value {
                    "p1" => PriorKind::P1DirichletCost,
                    "p2" => PriorKind::P2ColumnDirichletKernel,
                    "gibbs" => PriorKind::GibbsSymmetricCost,
                    v => return Err(line.err(format!("prior.kind must be p1, p2 or gibbs, got {v:?}"))),
                }
            }
            "prior.alpha" => cfg.alpha = line.alpha()?,
            "prior.alpha_diagonal" => cfg.alpha_diagonal = Some(line.positive()?),
            "prior.beta" => cfg.beta = line.positive()?,
            "prior.gamma" => cfg.gamma_weight = line.positive()?,
            "prior.cost_sum" => cfg.cost_sum = line.positive()?,
            "chain.sigma" => c.sigma = line.non_negative()?,
            "chain.sigma0" => c.sigma0 = line.non_negative()?,
            "chain.gamma" => c.gamma = line.f64()?,
            "chain.delta" => c.delta = line.non_negative()?,
            "chain.burn_in" => c.burn_in = line.count()?,
            "chain.n_samples" => c.n_samples = line.at_least_one()?,
            "chain.lag" => c.lag = line.at_least_one()?,
            "chain.seed" => {
                c.seed = line
                    .value
                    .parse()
                    .map_err(|_| line.err("seed must be an unsigned integer"))?
            }
            "chain.constrained" => c.constrained_p1 = line.bool()?,
            "chain.reject_kernel_ge_one" => c.reject_kernel_ge_one = line.bool()?,
            "chain.lambda" => c.lambda = line.positive()?,
            "chain.record_burn_in" => c.record_burn_in = line.bool()?,
            "output.dir" => cfg.output.dir = Some(line.path(base)),
            "output.format" => {
                cfg.output.format = match line.value {
                    "csv" => TraceFormat::Csv,
                    "jsonl" => TraceFormat::Jsonl,
                    v => return Err(line.err(format!("output.format must be csv or jsonl, got {v:?}"))),
                }
            }
            "output.max_lag" => cfg.output.max_lag = line.at_least_one()?,
            "output.kde_bandwidth" => cfg.output.kde_bandwidth = line.positive()?,
            "output.kde_points" => cfg.output.kde_points = line.at_least_one()?,
            "noise.entry" => noise_entry = Some(line.entry()?),
            "noise.sigma" => noise_scale = Some(NoiseScale::Absolute(line.non_negative()?)),
            "noise.relative" => noise_scale = Some(NoiseScale::Relative(line.non_negative()?)),
            "noise.amplitude" => noise_scale = Some(NoiseScale::Bounded(line.positive()?)),
            "noise.components" => noise_components = line.at_least_one()?,
            "fill.low" => fill_low = Some(line.positive()?),
            "fill.high" => fill_high = Some(line.positive()?),
            "fill.count" => fill_count = line.at_least_one()?,
            "predict.marginals" => {
                cfg.predict.marginals = match line.value {
                    "auto" => MarginalSource::Auto,
                    "truth" => MarginalSource::Truth,
                    "files" => MarginalSource::Files,
                    "observed" => MarginalSource::Observed,
                    v => {
                        return Err(line.err(format!(
                            "predict.marginals must be auto, truth, files or observed, got {v:?}"
                        )))
                    }
                }
            }
            "predict.mu" => cfg.predict.mu = Some(line.path(base)),
            "predict.nu" => cfg.predict.nu = Some(line.path(base)),
            "predict.truth" => cfg.predict.truth = Some(line.path(base)),
            "predict.total" => cfg.predict.total = Some(line.positive()?),
            "input.header" => cfg.header = line.bool()?,
            _ => return Err(line.err(format!("unknown key {key:?}"))),
        }
    }
    let scales: Vec<usize> = ["noise.sigma", "noise.relative", "noise.amplitude"]
        .iter()
        .filter_map(|k| seen.get(*k).copied())
        .collect();
    if scales.len() > 1 {
        let line = scales.into_iter().max().unwrap_or(0);
        return Err(CliError::Config {
            line,
            msg: "set only one of noise.sigma, noise.relative, noise.amplitude".into(),
        });
    }
    match (noise_entry, noise_scale) {
        (Some(entry), Some(scale)) => {
            cfg.noise = Some(NoiseConfig {
                entry,
                scale,
                components: noise_components,
            })
        }
        (None, None) => {}
        _ => {
            let line = seen
                .get("noise.entry")
                .or(seen.get("noise.sigma"))
                .or(seen.get("noise.relative"))
                .or(seen.get("noise.amplitude"))
                .copied()
                .unwrap_or(0);
            return Err(CliError::Config {
                line,
                msg: "noise needs both noise.entry and a noise scale".into(),
            });
        }
    }
    match (fill_low, fill_high) {
        (Some(low), Some(high)) if high > low => {
            cfg.fill = Some(FillConfig {
                low,
                high,
                count: fill_count,
            })
        }
        (Some(_), Some(_)) => {
            return Err(CliError::Config {
                line: seen["fill.high"],
                msg: "fill.high must exceed fill.low".into(),
            })
        }
        (None, None) => {}
        _ => {
            let line = seen.get("fill.low").or(seen.get("fill.high")).copied().unwrap_or(0);
            return Err(CliError::Config {
                line,
                msg: "fill needs both fill.low and fill.high".into(),
            });
        }
    }
    cfg.chain.validate().map_err(|e| CliError::Config {
        line: 0,
        msg: e.to_string(),
    })?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str) -> Result<Config> {
        parse(text, Path::new("/data"))
    }

    #[test]
    fn full_config() {
        let cfg = p(
            "# bounded noise\nsampler = mhmc\nprior.kind = p2\nprior.alpha = 1,2;3,4\n\
                     chain.sigma0 = 0.5 # step\nchain.burn_in = 10_000\nchain.seed = 42\n\
                     noise.entry = 1,2\nnoise.relative = 0.04\noutput.dir = out\noutput.format = jsonl\n",
        )
        .unwrap();
        assert_eq!(cfg.sampler, SamplerKind::Mhmc);
        assert_eq!(cfg.chain.burn_in, 10_000);
        assert_eq!(cfg.chain.seed, 42);
        assert_eq!(cfg.output.dir.as_deref(), Some(Path::new("/data/out")));
        assert_eq!(cfg.output.format, TraceFormat::Jsonl);
        let noise = cfg.noise.as_ref().unwrap();
        assert_eq!(noise.entry, (0, 1));
        assert_eq!(noise.scale, NoiseScale::Relative(0.04));
        let prior = cfg.prior((2, 2)).unwrap();
        assert_eq!(prior.alpha.at(1, 0), 3.0);
        assert!(cfg.prior((3, 3)).is_err());
    }

    #[test]
    fn errors_name_the_line() {
        let cases = [
            ("chain.sigma = 0.1\nchain.n_samples = 0\n", 2),
            ("sampler = gibbs\n", 1),
            ("\n\nchain.bogus = 1\n", 3),
            ("chain.lag = 1\nchain.lag = 2\n", 2),
            ("chain.sigma 0.1\n", 1),
            ("noise.entry = 0,1\nnoise.sigma = 1\n", 1),
        ];
        for (text, want) in cases {
            match p(text) {
                Err(CliError::Config { line, .. }) => assert_eq!(line, want, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn semi_uniform_alpha() {
        let cfg = p("prior.alpha = 1\nprior.alpha_diagonal = 25\nprior.cost_sum = 320\n").unwrap();
        let prior = cfg.prior((3, 3)).unwrap();
        assert_eq!(prior.alpha.at(1, 1), 25.0);
        assert_eq!(prior.alpha.at(1, 2), 1.0);
        assert_eq!(prior.cost_sum, 320.0);
    }

    #[test]
    fn incomplete_sections_rejected() {
        assert!(p("noise.entry = 1,1\n").is_err());
        assert!(p("fill.low = 5\n").is_err());
        assert!(p("fill.low = 5\nfill.high = 1\n").is_err());
        let cfg = p("fill.low = 100\nfill.high = 25000\n").unwrap();
        assert_eq!(cfg.fill.unwrap().count, 100);
    }
}
