//! The `piot` subcommands.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use piot_core::crossratio::{iot_distance, DistanceConvention, Quadruple};
use piot_core::diagnostics::{autocorrelation, running_average, select_lag, Statistic};
use piot_core::inference::{
    bounded_noise_distance_bound, bounded_noise_offsets, expected_offset, fill_components, gaussian_noise_draws,
    pool_outputs, prediction_from_outputs, single_missing, split_basis,
};
use piot_core::matrix::kernel_from_cost;
use piot_core::priors::Alpha;
use piot_core::sinkhorn::{sinkhorn, SinkhornOptions};
use piot_core::{ChainOutput, CostMatrix, Coupling, Kernel, Marginals, Matrix, PriorKind, SamplerKind};
use serde_json::{json, Value};

use crate::config::{self, Config, MarginalSource, NoiseScale};
use crate::csvio::{read_coupling, read_matrix, read_vector, write_matrix_file};
use crate::error::{CliError, Result};
use crate::plotdata::{cost_densities, write_autocorrelation, write_kde, write_running_average, write_simplex};
use crate::report::{compare, write_report};
use crate::runner::run_components;
use crate::trace::{write_json_file, write_trace_file};
use crate::VERSION;

#[derive(Debug, Parser)]
#[command(
    name = "piot",
    version,
    about = "Posterior inference of transport costs from observed couplings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scale a kernel (or the kernel of a cost matrix) to given marginals.
    Sinkhorn(SinkhornArgs),
    /// Sample costs consistent with an observed coupling.
    Infer(InferArgs),
    /// Predict a noisy or missing entry and compare with ground truth.
    Predict(PredictArgs),
    /// Distance between the cost subspaces of two couplings.
    Distance(DistanceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    Kernel,
    Cost,
}

#[derive(Debug, Args)]
pub struct SinkhornArgs {
    pub matrix: PathBuf,
    #[arg(long, value_enum, default_value = "kernel")]
    pub input_kind: InputKind,
    /// Row marginal, one row or one column; uniform if omitted.
    #[arg(long)]
    pub mu: Option<PathBuf>,
    #[arg(long)]
    pub nu: Option<PathBuf>,
    /// Only used with `--input-kind cost`.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    #[arg(long)]
    pub header: bool,
    /// Defaults to stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    pub coupling: PathBuf,
    pub config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Worker threads for mixture components; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictMode {
    Noisy,
    Missing,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    pub coupling: PathBuf,
    #[arg(long, value_enum)]
    pub mode: PredictMode,
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `predict.truth`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Convention {
    Paper,
    Euclidean,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value = "euclidean")]
    pub convention: Convention,
    #[arg(long)]
    pub header: bool,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sinkhorn(a) => cmd_sinkhorn(&a),
        Command::Infer(a) => cmd_infer(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Distance(a) => cmd_distance(&a),
    }
}

fn basename(p: &Path) -> String {
    p.file_name()
        .map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Header lines for output files. Only names that do not depend on where
/// the files are written or how many threads ran, so reruns are byte-identical.
fn metadata(subcommand: &str, inputs: &[&Path], seed: Option<u64>) -> Vec<String> {
    let names: Vec<String> = inputs.iter().map(|p| basename(p)).collect();
    let mut meta = vec![
        format!("piot {VERSION} {subcommand}"),
        format!("inputs: {}", names.join(" ")),
    ];
    if let Some(s) = seed {
        meta.push(format!("seed: {s}"));
    }
    meta
}

/// `x` with 12 significant digits.
pub fn format_significant(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let decimals = (11 - x.abs().log10().floor() as i64).max(0) as usize;
    format!("{x:.decimals$}")
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn cmd_sinkhorn(a: &SinkhornArgs) -> Result<()> {
    let m = read_matrix(&a.matrix, a.header)?;
    if !m.missing.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: kernel has missing entries",
            a.matrix.display()
        )));
    }
    let kernel = match a.input_kind {
        InputKind::Kernel => Kernel::new(m.values)?,
        InputKind::Cost => kernel_from_cost(&CostMatrix::new(m.values)?, a.lambda)?,
    };
    let (rows, cols) = kernel.matrix().dim();
    let mu =
        a.mu.as_deref()
            .map(read_vector)
            .transpose()?
            .unwrap_or_else(|| vec![1.0; rows]);
    let nu =
        a.nu.as_deref()
            .map(read_vector)
            .transpose()?
            .unwrap_or_else(|| vec![1.0; cols]);
    let marg = Marginals::normalized(mu, nu)?;
    let opts = SinkhornOptions {
        tol: a.tol,
        max_iter: a.max_iter,
    };
    let result = sinkhorn(&kernel, &marg, &opts)?;

    let mut inputs = vec![a.matrix.as_path()];
    inputs.extend(a.mu.as_deref());
    inputs.extend(a.nu.as_deref());
    let mut meta = metadata("sinkhorn", &inputs, None);
    meta.push(format!("iterations: {}", result.iterations));
    meta.push(format!("residual: {:e}", result.residual));
    let plan = result.coupling.matrix()?;
    match &a.output {
        Some(path) => write_matrix_file(path, plan, &meta),
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            crate::csvio::write_matrix(&mut w, plan, &Default::default(), &meta)?;
            Ok(())
        }
    }
}

/// Plans for each mixture component of the configured noise model.
fn noise_plans(t: &Coupling, cfg: &Config) -> Result<Vec<Coupling>> {
    let Some(noise) = &cfg.noise else {
        return Ok(vec![t.clone()]);
    };
    let (m, n) = t.dim();
    if noise.entry.0 >= m || noise.entry.1 >= n {
        return Err(CliError::Usage(format!(
            "noise.entry {},{} is outside the {m}x{n} coupling",
            noise.entry.0 + 1,
            noise.entry.1 + 1
        )));
    }
    let v = t
        .observed(noise.entry.0, noise.entry.1)
        .ok_or(piot_core::Error::MaskedInput)?;
    match noise.scale {
        NoiseScale::Absolute(s) => Ok(gaussian_noise_draws(
            t,
            noise.entry,
            s,
            noise.components,
            cfg.chain.seed,
        )?),
        NoiseScale::Relative(r) => Ok(gaussian_noise_draws(
            t,
            noise.entry,
            r * v,
            noise.components,
            cfg.chain.seed,
        )?),
        NoiseScale::Bounded(a) => {
            if a >= v {
                return Err(CliError::Usage(format!(
                    "noise.amplitude {a} must be below the entry value {v}"
                )));
            }
            let c = noise.components;
            (0..c)
                .map(|k| {
                    let eps = if c == 1 {
                        0.0
                    } else {
                        -a + 2.0 * a * k as f64 / (c - 1) as f64
                    };
                    Ok(t.with_entry(noise.entry, v + eps)?)
                })
                .collect()
        }
    }
}

fn sampler_name(kind: SamplerKind) -> &'static str {
    match kind {
        SamplerKind::MetroMc => "metromc",
        SamplerKind::Mhmc => "mhmc",
    }
}

fn alpha_json(alpha: &Alpha) -> Value {
    match alpha {
        Alpha::Scalar(a) => json!(a),
        Alpha::Matrix(m) => json!((0..m.rows()).map(|i| m.row(i).to_vec()).collect::<Vec<_>>()),
    }
}

fn matrix_json(m: &Matrix) -> Value {
    json!((0..m.rows()).map(|i| m.row(i).to_vec()).collect::<Vec<_>>())
}

fn run_json(subcommand: &str, inputs: &[&Path], cfg: &Config, prior_alpha: &Alpha, outputs: &[ChainOutput]) -> Value {
    let c = &cfg.chain;
    let prior_kind = match cfg.prior_kind {
        PriorKind::P1DirichletCost => "p1",
        PriorKind::P2ColumnDirichletKernel => "p2",
        PriorKind::GibbsSymmetricCost => "gibbs",
    };
    json!({
        "version": VERSION,
        "subcommand": subcommand,
        "command_line": std::env::args().collect::<Vec<_>>(),
        "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "seed": c.seed,
        "sampler": sampler_name(cfg.sampler),
        "prior": {
            "kind": prior_kind,
            "alpha": alpha_json(prior_alpha),
            "beta": cfg.beta,
            "gamma": cfg.gamma_weight,
            "cost_sum": cfg.cost_sum,
        },
        "chain": {
            "sigma": c.sigma,
            "sigma0": c.sigma0,
            "gamma": c.gamma,
            "delta": c.delta,
            "burn_in": c.burn_in,
            "n_samples": c.n_samples,
            "lag": c.lag,
            "constrained": c.constrained_p1,
            "reject_kernel_ge_one": c.reject_kernel_ge_one,
            "lambda": c.lambda,
        },
        "components": outputs.iter().enumerate().map(|(k, o)| json!({
            "component": k,
            "stream": o.stream,
            "acceptance_rate": o.acceptance_rate,
            "samples": o.samples.len(),
        })).collect::<Vec<_>>(),
    })
}

struct LagReport {
    selected: Option<usize>,
    raw_steps: Option<usize>,
    source: &'static str,
}

/// Autocorrelation and running averages of the first component.
fn write_chain_diagnostics(
    dir: &Path,
    first: &ChainOutput,
    cfg: &Config,
    meta: &[String],
) -> Result<Option<LagReport>> {
    let (series, source, step): (&[Kernel], _, _) = if first.burn_in_trace.len() >= 2 {
        (&first.burn_in_trace, "burn_in", 1)
    } else {
        (&first.samples, "samples", cfg.chain.lag)
    };
    let averages = running_average(&first.samples, Statistic::RowSums)?;
    write_with(&dir.join("running_average.csv"), |w| {
        write_running_average(w, "row_sum", &averages, meta)
    })?;
    if series.len() < 2 {
        return Ok(None);
    }
    let max_lag = cfg.output.max_lag.min(series.len() - 1);
    match autocorrelation(series, max_lag) {
        Ok(r) => {
            write_with(&dir.join("autocorrelation.csv"), |w| write_autocorrelation(w, &r, meta))?;
            let selected = select_lag(&r);
            Ok(Some(LagReport {
                selected,
                raw_steps: selected.map(|t| t * step),
                source,
            }))
        }
        Err(piot_core::Error::UndefinedVariance) => {
            eprintln!("piot: chain did not move; autocorrelation is undefined");
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn bounded_offsets(
    dir: &Path,
    t: &Coupling,
    outputs: &[ChainOutput],
    idx: (usize, usize),
    a: f64,
    meta: &[String],
) -> Result<Value> {
    let (invariant, noisy) = split_basis(t.dim(), idx)?;
    let mut quads: Vec<Quadruple> = vec![noisy];
    quads.extend(invariant);
    let label = |q: &Quadruple| format!("q_{}_{}_{}_{}", q.i + 1, q.j + 1, q.k + 1, q.l + 1);
    write_with(&dir.join("offsets.csv"), |w| {
        crate::csvio::write_metadata(w, meta)?;
        let names: Vec<String> = quads.iter().map(label).collect();
        writeln!(w, "component,sample,{}", names.join(","))?;
        for (c, o) in outputs.iter().enumerate() {
            let series = bounded_noise_offsets(o, &quads).map_err(|e| io::Error::other(e.to_string()))?;
            for s in 0..o.samples.len() {
                let vals: Vec<String> = series.iter().map(|q| q[s].to_string()).collect();
                writeln!(w, "{c},{s},{}", vals.join(","))?;
            }
        }
        Ok(())
    })?;
    let base = t.matrix()?;
    let bound = bounded_noise_distance_bound(t, a, idx)?;
    Ok(json!({
        "noisy_quadruple": label(&quads[0]),
        "invariant_offsets": quads[1..].iter().map(|q| Ok(json!({
            "quadruple": label(q),
            "expected": expected_offset(base, *q, 1.0)? / outputs[0].lambda,
        }))).collect::<piot_core::Result<Vec<_>>>()?,
        "distance_bound": bound.bound,
        "sin_theta": bound.sin_theta,
        "extreme_distance": bound.distance,
        "bound_holds": bound.holds,
    }))
}

fn output_dir(flag: &Option<PathBuf>, cfg: &Config) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| cfg.output.dir.clone())
        .ok_or_else(|| CliError::Usage("no output directory: set output.dir or pass --out".into()))
}

pub fn cmd_infer(a: &InferArgs) -> Result<()> {
    let cfg = config::load(&a.config)?;
    let t = read_coupling(&a.coupling, a.header || cfg.header, false)?;
    let prior = cfg.prior(t.dim())?;
    let dir = output_dir(&a.out, &cfg)?;
    let plans = noise_plans(&t, &cfg)?;
    let outputs = run_components(&plans, &prior, &cfg.chain, cfg.sampler, a.threads)?;

    create_dir(&dir)?;
    let inputs = [a.coupling.as_path(), a.config.as_path()];
    let meta = metadata("infer", &inputs, Some(cfg.chain.seed));
    let trace_name = match cfg.output.format {
        config::TraceFormat::Csv => "trace.csv",
        config::TraceFormat::Jsonl => "trace.jsonl",
    };
    write_trace_file(&dir.join(trace_name), &outputs, cfg.output.format, &meta)?;

    let lag = write_chain_diagnostics(&dir, &outputs[0], &cfg, &meta)?;
    let pooled = pool_outputs(outputs.clone())?;
    let costs = pooled.costs();
    let densities = cost_densities(&costs, cfg.output.kde_bandwidth, cfg.output.kde_points)?;
    write_with(&dir.join("kde.csv"), |w| write_kde(w, &densities, &meta))?;
    if t.rows() == 3 {
        let path = dir.join("simplex.csv");
        let mut w = BufWriter::new(File::create(&path).map_err(|e| CliError::io(&path, e))?);
        write_simplex(&mut w, &pooled.samples, &meta)?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
    }

    let mut info = run_json("infer", &inputs, &cfg, &prior.alpha, &outputs);
    let (m, n) = t.dim();
    let modes = Matrix::from_fn(m, n, |i, j| densities[i * n + j].mode());
    info["kde_modes"] = matrix_json(&modes);
    info["kde_bandwidth"] = json!(cfg.output.kde_bandwidth);
    info["lag_selection"] = match &lag {
        Some(l) => json!({ "component": 0, "series": l.source, "selected_lag": l.selected, "raw_steps": l.raw_steps }),
        None => Value::Null,
    };
    if let Some(noise) = &cfg.noise {
        let observed: Vec<f64> = plans
            .iter()
            .map(|p| p.observed(noise.entry.0, noise.entry.1).unwrap_or(f64::NAN))
            .collect();
        info["noise"] = json!({ "entry": [noise.entry.0 + 1, noise.entry.1 + 1], "component_values": observed });
        if let NoiseScale::Bounded(amp) = noise.scale {
            info["bounded"] = bounded_offsets(&dir, &t, &outputs, noise.entry, amp, &meta)?;
        }
    }
    write_json_file(&dir.join("run.json"), &info)?;

    let rates: Vec<String> = outputs.iter().map(|o| format!("{:.4}", o.acceptance_rate)).collect();
    println!("acceptance_rate: {}", rates.join(" "));
    match lag.and_then(|l| l.selected.zip(l.raw_steps)) {
        Some((t, raw)) => println!("selected_lag: {t} ({raw} raw steps)"),
        None => println!("selected_lag: none within max_lag"),
    }
    println!("output: {}", dir.display());
    Ok(())
}

/// Prediction marginals, normalized, and the total mass for reporting.
fn prediction_marginals(cfg: &Config, observed: &Coupling, truth: Option<&Coupling>) -> Result<(Marginals, f64)> {
    let files = cfg.predict.mu.as_ref().zip(cfg.predict.nu.as_ref());
    let source = match cfg.predict.marginals {
        MarginalSource::Auto if truth.is_some() => MarginalSource::Truth,
        MarginalSource::Auto if files.is_some() => MarginalSource::Files,
        MarginalSource::Auto => MarginalSource::Observed,
        s => s,
    };
    let (mu, nu) = match source {
        MarginalSource::Truth => {
            let t =
                truth.ok_or_else(|| CliError::Usage("predict.marginals = truth needs a ground-truth file".into()))?;
            (t.matrix()?.row_sums(), t.matrix()?.col_sums())
        }
        MarginalSource::Files => {
            let (mu, nu) = files
                .ok_or_else(|| CliError::Usage("predict.marginals = files needs predict.mu and predict.nu".into()))?;
            (read_vector(mu)?, read_vector(nu)?)
        }
        _ => (observed.matrix()?.row_sums(), observed.matrix()?.col_sums()),
    };
    let total = cfg
        .predict
        .total
        .or_else(|| truth.and_then(|t| t.matrix().ok()).map(Matrix::sum))
        .unwrap_or_else(|| mu.iter().sum());
    Ok((Marginals::normalized(mu, nu)?, total))
}

pub fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let cfg = config::load(&a.config)?;
    let header = a.header || cfg.header;
    let t = read_coupling(&a.coupling, header, a.mode == PredictMode::Missing)?;
    let truth_path = a.truth.clone().or_else(|| cfg.predict.truth.clone());
    let truth = truth_path
        .as_deref()
        .map(|p| read_coupling(p, header, false))
        .transpose()?;
    if let Some(g) = &truth {
        g.matrix()?.require_same_dim(&Matrix::filled(t.rows(), t.cols(), 0.0))?;
    }
    let prior = cfg.prior(t.dim())?;

    let (plans, target, observed) = match a.mode {
        PredictMode::Noisy => {
            if !t.is_complete() {
                return Err(CliError::Usage("noisy mode needs a complete coupling".into()));
            }
            (noise_plans(&t, &cfg)?, cfg.noise.as_ref().map(|n| n.entry), t.clone())
        }
        PredictMode::Missing => {
            let idx = single_missing(&t)?;
            let fill = cfg
                .fill
                .as_ref()
                .ok_or_else(|| CliError::Usage("missing mode needs fill.low and fill.high".into()))?;
            let plans = fill_components(&t, fill.low, fill.high, fill.count)?;
            // observed sums, with the gap at the middle of the fill range
            let completed = t.fill(idx, 0.5 * (fill.low + fill.high))?;
            (plans, Some(idx), completed)
        }
    };
    let outputs = run_components(&plans, &prior, &cfg.chain, cfg.sampler, a.threads)?;
    let (marg, total) = prediction_marginals(&cfg, &observed, truth.as_ref())?;
    let prediction = prediction_from_outputs(outputs.clone(), &marg, cfg.chain.lambda)?;
    let predicted = prediction.coupling.matrix()?.map(|x| x * total);

    let dir = output_dir(&a.out, &cfg)?;
    create_dir(&dir)?;
    let mut inputs = vec![a.coupling.as_path(), a.config.as_path()];
    inputs.extend(truth_path.as_deref());
    let meta = metadata("predict", &inputs, Some(cfg.chain.seed));
    write_matrix_file(&dir.join("predicted.csv"), &predicted, &meta)?;
    write_matrix_file(&dir.join("mean_cost.csv"), prediction.mean_cost.matrix(), &meta)?;
    write_trace_file(&dir.join("trace.csv"), &outputs, config::TraceFormat::Csv, &meta)?;
    let mut info = run_json("predict", &inputs, &cfg, &prior.alpha, &outputs);
    info["mode"] = json!(match a.mode {
        PredictMode::Noisy => "noisy",
        PredictMode::Missing => "missing",
    });
    info["total"] = json!(total);
    if let Some(g) = &truth {
        let rows = compare(g.matrix()?, &predicted, None)?;
        write_with(&dir.join("report.csv"), |w| write_report(w, &rows, &meta))?;
    }
    if let Some((i, j)) = target {
        let truth_value = truth.as_ref().and_then(|g| g.observed(i, j));
        info["target"] = json!({ "i": i + 1, "j": j + 1, "predicted": predicted[(i, j)], "truth": truth_value });
        match truth_value {
            Some(g) => println!("predicted ({},{}): {} (truth {g})", i + 1, j + 1, predicted[(i, j)]),
            None => println!("predicted ({},{}): {}", i + 1, j + 1, predicted[(i, j)]),
        }
    }
    write_json_file(&dir.join("run.json"), &info)?;
    println!("output: {}", dir.display());
    Ok(())
}

pub fn cmd_distance(a: &DistanceArgs) -> Result<()> {
    let t1 = read_coupling(&a.first, a.header, false)?;
    let t2 = read_coupling(&a.second, a.header, false)?;
    let convention = match a.convention {
        Convention::Paper => DistanceConvention::Paper,
        Convention::Euclidean => DistanceConvention::Euclidean,
    };
    let d = iot_distance(&t1, &t2, a.lambda, convention)?;
    println!("{}", format_significant(d));
    Ok(())
}
