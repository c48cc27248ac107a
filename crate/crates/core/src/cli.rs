//! Command-line front end: argument parsing, data ingestion, the experiment
//! drivers and report emission. The binary only calls [`run`].
//!
//! JSON reports carry the parsed arguments under `config` and timing under
//! `timing`; every other field is a deterministic function of the config.
//! CSV commands write the same echo to `<output>.config.json` (or to stderr
//! when the CSV goes to stdout).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{train_unique, EstimatorConfig};
use crate::numerics::derive_seed;
use crate::oracle::{discrete_broja, gaussian_unique_exact_with, quantize_model, DiscreteJoint, DiscretePid};
use crate::parallel::par_map;
use crate::pid::{consistency_check, decompose, PidReport, Units};
use crate::pseudoobs::{pseudo_observations, Dataset};
use crate::simgen::{
    gen_gaussian_triple, gen_model, simulate_network, te_matrix, GaussianTriple, ModelKind, ModelSpec, NetworkSpec,
    TEReport, TimeSeries,
};

#[derive(Debug, Parser)]
#[command(name = "contpid", version, about = "Partial information decomposition of continuous data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// PID of three columns of a CSV file (JSON report).
    Estimate(EstimateArgs),
    /// Unique information of Gaussian triples against the closed form (CSV).
    SweepGaussian(SweepGaussianArgs),
    /// PID of a three-neuron model over a grid of w2 (CSV of means and stds).
    ModelSweep(ModelSweepArgs),
    /// Transfer-entropy decomposition of the chaotic rate network (JSON + CSV).
    Network(NetworkArgs),
    /// Discrete PID of a (y, x1, x2, probability) table (JSON report).
    Discrete(DiscreteArgs),
    /// Quantize a three-neuron model into a discrete table (CSV).
    Quantize(QuantizeArgs),
}

/// Estimator settings shared by the continuous commands.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EstimatorArgs {
    /// Inner importance samples per outer sample (A).
    #[arg(long, default_value_t = 50)]
    pub inner_samples: usize,
    /// Outer samples per iteration (M).
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1200)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub learning_rate: f64,
    /// Final iterations averaged into the estimate.
    #[arg(long, default_value_t = 100)]
    pub window: usize,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl EstimatorArgs {
    pub fn config(&self) -> EstimatorConfig {
        EstimatorConfig {
            inner_samples: self.inner_samples,
            batch_size: self.batch_size,
            iterations: self.iterations,
            learning_rate: self.learning_rate,
            window: self.window,
            seed: self.seed,
            ..EstimatorConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Target and source column names.
    #[arg(long, value_delimiter = ',', num_args = 1, default_value = "y,x1,x2")]
    pub cols: Vec<String>,
    #[arg(long, default_value = "nats")]
    pub units: Units,
    /// Also estimate U2 directly with the sources swapped.
    #[arg(long)]
    pub direct_u2: bool,
    /// JSON destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SweepGaussianArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.4,0.6,0.8")]
    pub rho1_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.0,0.2,0.4,0.6")]
    pub rho2_grid: Vec<f64>,
    /// Source correlation; defaults to rho1 * rho2 at each point.
    #[arg(long)]
    pub rho12: Option<f64>,
    #[arg(long, default_value_t = 3000)]
    pub samples: usize,
    /// Compare |rho2| < |rho1| in the closed form.
    #[arg(long)]
    pub abs_rho: bool,
    /// Write each generated dataset to this directory as point_<k>.csv.
    #[arg(long)]
    pub save_data: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModelSweepArgs {
    #[arg(long, default_value = "m1")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 0.5)]
    pub w1: f64,
    #[arg(long, default_value_t = 0.3)]
    pub rho12: f64,
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
    pub w2_grid: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    #[arg(long, default_value_t = 3000)]
    pub samples: usize,
    /// Also estimate U2 directly and report it next to the indirect value.
    #[arg(long)]
    pub direct_u2: bool,
    #[arg(long, default_value = "nats")]
    pub units: Units,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct NetworkArgs {
    /// JSON network parameters; missing fields take their defaults.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Override the recurrent gain.
    #[arg(long)]
    pub g: Option<f64>,
    /// Override the feed-forward weight.
    #[arg(long)]
    pub jyx: Option<f64>,
    /// Override the simulation seed.
    #[arg(long)]
    pub network_seed: Option<u64>,
    /// Analyse this time-series CSV instead of simulating.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Write the simulated series here.
    #[arg(long)]
    pub series_out: Option<PathBuf>,
    /// Long-format CSV of all matrices.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value = "nats")]
    pub units: Units,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DiscreteArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "nats")]
    pub units: Units,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct QuantizeArgs {
    #[arg(long, default_value = "m1")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 0.5)]
    pub w1: f64,
    #[arg(long, default_value_t = 0.5)]
    pub w2: f64,
    #[arg(long, default_value_t = 0.3)]
    pub rho12: f64,
    #[arg(long, default_value_t = 16)]
    pub nx: usize,
    #[arg(long, default_value_t = 3)]
    pub ny: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope<C, R> {
    pub command: String,
    pub config: C,
    pub report: R,
    pub timing: Timing,
}

// ---- ingestion ----

/// Reads the named columns of a headed CSV file as (y, x1, x2).
pub fn read_dataset(path: &Path, cols: &[String]) -> Result<Dataset> {
    if cols.len() != 3 {
        return Err(Error::Input(format!("--cols needs three names (y,x1,x2), got {}", cols.len())));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let idx: Vec<usize> = cols
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| Error::Input(format!("missing column '{c}' (found {})", headers.join(","))))
        })
        .collect::<Result<_>>()?;
    let mut out = [Vec::new(), Vec::new(), Vec::new()];
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        for (k, &c) in idx.iter().enumerate() {
            let field = rec.get(c).unwrap_or("").trim();
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Input(format!("line {line}: column '{}': cannot parse '{field}'", cols[k])))?;
            if !v.is_finite() {
                return Err(Error::Input(format!("line {line}: column '{}': non-finite value", cols[k])));
            }
            out[k].push(v);
        }
    }
    let [y, x1, x2] = out;
    Dataset::new(y, x1, x2)
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["y", "x1", "x2"])?;
    for i in 0..data.len() {
        w.serialize((data.y[i], data.x1[i], data.x2[i]))?;
    }
    w.flush()?;
    Ok(())
}

// ---- experiment drivers ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianRow {
    pub rho1: f64,
    pub rho2: f64,
    pub rho12: f64,
    pub seed: u64,
    pub u1_estimate: f64,
    pub u1_exact: f64,
    pub error: f64,
}

/// One Gaussian triple of the sweep and the seed shared by its data and
/// estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPoint {
    pub triple: GaussianTriple,
    pub seed: u64,
}

/// Grid points in row-major (rho1, rho2) order with ρ12 = ρ1ρ2 unless given.
pub fn gaussian_grid(rho1: &[f64], rho2: &[f64], rho12: Option<f64>, master_seed: u64) -> Result<Vec<GaussianPoint>> {
    let mut pts = Vec::new();
    for &a in rho1 {
        for &b in rho2 {
            let triple = GaussianTriple::new(a, b, rho12.unwrap_or(a * b))?;
            let seed = derive_seed(master_seed, pts.len() as u64);
            pts.push(GaussianPoint { triple, seed });
        }
    }
    Ok(pts)
}

/// Dataset of a sweep point; the generator stream is derived from the
/// point seed so it does not coincide with the estimator's.
pub fn gaussian_point_data(p: &GaussianPoint, samples: usize) -> Result<Dataset> {
    gen_gaussian_triple(&p.triple, samples, derive_seed(p.seed, u64::MAX))
}

pub fn gaussian_sweep(
    points: &[GaussianPoint],
    samples: usize,
    config: &EstimatorConfig,
    workers: usize,
    compare_abs: bool,
) -> Result<Vec<GaussianRow>> {
    par_map(points, workers, |p| {
        let data = gaussian_point_data(p, samples)?;
        let cfg = EstimatorConfig { seed: p.seed, ..*config };
        let fit = train_unique(&pseudo_observations(&data)?, &cfg)?;
        let t = p.triple;
        let exact = gaussian_unique_exact_with(t.rho_y1, t.rho_y2, compare_abs);
        Ok(GaussianRow {
            rho1: t.rho_y1,
            rho2: t.rho_y2,
            rho12: t.rho_12,
            seed: p.seed,
            u1_estimate: fit.estimate,
            u1_exact: exact,
            error: fit.estimate - exact,
        })
    })
}

/// Model-sweep parameters other than the estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSweep {
    pub kind: ModelKind,
    pub w1: f64,
    pub rho12: f64,
    pub w2_grid: Vec<f64>,
    pub runs: usize,
    pub samples: usize,
    pub direct_u2: bool,
}

/// One repetition at one grid point, in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRun {
    pub w2: f64,
    pub run: usize,
    pub seed: u64,
    pub report: PidReport,
    pub u2_direct: Option<f64>,
}

/// Mean and sample standard deviation over the runs at one w2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub w2: f64,
    pub u1_mean: f64,
    pub u1_std: f64,
    pub u2_mean: f64,
    pub u2_std: f64,
    pub r_mean: f64,
    pub r_std: f64,
    pub s_mean: f64,
    pub s_std: f64,
    pub i_y_x1: f64,
    pub i_y_x2: f64,
    pub i_y_x12: f64,
    pub u2_direct_mean: Option<f64>,
    pub u2_direct_std: Option<f64>,
}

pub fn model_runs(sweep: &ModelSweep, config: &EstimatorConfig, workers: usize) -> Result<Vec<ModelRun>> {
    if sweep.runs == 0 || sweep.w2_grid.is_empty() {
        return Err(Error::InvalidConfig("need at least one run and one grid point".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..sweep.w2_grid.len())
        .flat_map(|p| (0..sweep.runs).map(move |r| (p, r)))
        .collect();
    par_map(&jobs, workers, |&(p, run)| {
        let seed = derive_seed(config.seed, (p * sweep.runs + run) as u64);
        let w2 = sweep.w2_grid[p];
        let data = gen_model(&ModelSpec {
            kind: sweep.kind,
            w1: sweep.w1,
            w2,
            rho12: sweep.rho12,
            samples: sweep.samples,
            seed: derive_seed(seed, u64::MAX),
        })?;
        let cfg = EstimatorConfig { seed, ..*config };
        let (report, u2_direct) = if sweep.direct_u2 {
            let c = consistency_check(&data, &cfg)?;
            (c.report, Some(c.u2_direct))
        } else {
            (decompose(&data, &cfg)?.report, None)
        };
        Ok(ModelRun {
            w2,
            run,
            seed,
            report,
            u2_direct,
        })
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// Aggregates runs (in grid order) into one row per w2, in `units`.
pub fn summarize_runs(runs: &[ModelRun], units: Units) -> Vec<ModelRow> {
    let k = units.scale();
    let mut rows = Vec::new();
    let mut start = 0;
    while start < runs.len() {
        let w2 = runs[start].w2;
        let end = start + runs[start..].iter().take_while(|r| r.w2 == w2).count();
        let group = &runs[start..end];
        let col = |f: &dyn Fn(&PidReport) -> f64| mean_std(&group.iter().map(|r| f(&r.report) * k).collect::<Vec<_>>());
        let (u1_mean, u1_std) = col(&|r| r.u1);
        let (u2_mean, u2_std) = col(&|r| r.u2);
        let (r_mean, r_std) = col(&|r| r.r);
        let (s_mean, s_std) = col(&|r| r.s);
        let direct: Option<Vec<f64>> = group.iter().map(|r| r.u2_direct.map(|v| v * k)).collect();
        let direct = direct.map(|d| mean_std(&d));
        rows.push(ModelRow {
            w2,
            u1_mean,
            u1_std,
            u2_mean,
            u2_std,
            r_mean,
            r_std,
            s_mean,
            s_std,
            i_y_x1: col(&|r| r.i_y_x1).0,
            i_y_x2: col(&|r| r.i_y_x2).0,
            i_y_x12: col(&|r| r.i_y_x12).0,
            u2_direct_mean: direct.map(|d| d.0),
            u2_direct_std: direct.map(|d| d.1),
        });
        start = end;
    }
    rows
}

fn scale_matrix(m: &mut [Vec<f64>], k: f64) {
    for v in m.iter_mut().flatten() {
        *v *= k;
    }
}

fn te_in_units(mut r: TEReport, units: Units) -> TEReport {
    let k = units.scale();
    for m in [&mut r.s, &mut r.u1, &mut r.r, &mut r.u2, &mut r.te, &mut r.residual] {
        scale_matrix(m, k);
    }
    r
}

/// Network parameters from an optional JSON file and the overrides.
pub fn resolve_network(args: &NetworkArgs) -> Result<NetworkSpec> {
    let mut spec = match &args.spec {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => NetworkSpec::default(),
    };
    if let Some(g) = args.g {
        spec.g = g;
    }
    if let Some(j) = args.jyx {
        spec.j_yx = j;
    }
    if let Some(s) = args.network_seed {
        spec.seed = s;
    }
    spec.validate()?;
    Ok(spec)
}

// ---- emission ----

fn emit_json<T: Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_csv<T: Serialize>(rows: &[T], output: Option<&Path>) -> Result<()> {
    let sink: Box<dyn Write> = match output {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Path of the config echo that accompanies a CSV file.
pub fn config_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

fn emit_echo<C: Serialize>(command: &str, config: &C, csv: Option<&Path>, start: Instant) -> Result<()> {
    let echo = Envelope {
        command: command.to_string(),
        config,
        report: (),
        timing: Timing {
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    };
    match csv {
        Some(p) => emit_json(&echo, Some(&config_path(p))),
        None => {
            eprintln!("{}", serde_json::to_string(&echo)?);
            Ok(())
        }
    }
}

fn envelope<C: Serialize + Clone, R>(command: &str, config: &C, report: R, start: Instant) -> Envelope<C, R> {
    Envelope {
        command: command.to_string(),
        config: config.clone(),
        report,
        timing: Timing {
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    }
}

// ---- commands ----

/// Report of `estimate`: the PID plus the directly estimated U2 if asked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    #[serde(flatten)]
    pub pid: PidReport,
    pub u2_direct: Option<f64>,
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let start = Instant::now();
    let data = read_dataset(&args.input, &args.cols)?;
    let cfg = args.estimator.config();
    let (pid, u2_direct) = if args.direct_u2 {
        let c = consistency_check(&data, &cfg)?;
        (c.report, Some(c.u2_direct))
    } else {
        (decompose(&data, &cfg)?.report, None)
    };
    let pid = pid.in_units(args.units);
    let u2_direct = u2_direct.map(|v| v * args.units.scale());
    let report = EstimateReport { pid, u2_direct };
    emit_json(&envelope("estimate", args, report, start), args.output.as_deref())
}

pub fn cmd_sweep_gaussian(args: &SweepGaussianArgs) -> Result<()> {
    let start = Instant::now();
    let points = gaussian_grid(&args.rho1_grid, &args.rho2_grid, args.rho12, args.estimator.seed)?;
    if let Some(dir) = &args.save_data {
        std::fs::create_dir_all(dir)?;
        for (k, p) in points.iter().enumerate() {
            write_dataset(&dir.join(format!("point_{k}.csv")), &gaussian_point_data(p, args.samples)?)?;
        }
    }
    let rows = gaussian_sweep(&points, args.samples, &args.estimator.config(), args.workers, args.abs_rho)?;
    emit_csv(&rows, args.output.as_deref())?;
    emit_echo("sweep-gaussian", args, args.output.as_deref(), start)
}

pub fn cmd_model_sweep(args: &ModelSweepArgs) -> Result<()> {
    let start = Instant::now();
    let sweep = ModelSweep {
        kind: args.model,
        w1: args.w1,
        rho12: args.rho12,
        w2_grid: args.w2_grid.clone(),
        runs: args.runs,
        samples: args.samples,
        direct_u2: args.direct_u2,
    };
    let runs = model_runs(&sweep, &args.estimator.config(), args.workers)?;
    emit_csv(&summarize_runs(&runs, args.units), args.output.as_deref())?;
    emit_echo("model-sweep", args, args.output.as_deref(), start)
}

/// Config echo of `network`: the arguments and the resolved parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkEcho {
    pub args: NetworkArgs,
    pub network: Option<NetworkSpec>,
}

pub fn cmd_network(args: &NetworkArgs) -> Result<()> {
    let start = Instant::now();
    let (series, network) = match &args.series {
        Some(p) => (TimeSeries::read_csv(p)?, None),
        None => {
            let spec = resolve_network(args)?;
            (simulate_network(&spec)?, Some(spec))
        }
    };
    if let Some(p) = &args.series_out {
        series.write_csv(p)?;
    }
    let report = te_in_units(te_matrix(&series, &args.estimator.config(), args.workers)?, args.units);
    if let Some(p) = &args.csv {
        report.write_csv(p)?;
    }
    let echo = NetworkEcho {
        args: args.clone(),
        network,
    };
    emit_json(&envelope("network", &echo, report, start), args.output.as_deref())
}

pub fn cmd_discrete(args: &DiscreteArgs) -> Result<()> {
    let start = Instant::now();
    let p = DiscreteJoint::read_csv(&args.input)?;
    let report: DiscretePid = discrete_broja(&p)?.in_units(args.units);
    emit_json(&envelope("discrete", args, report, start), args.output.as_deref())
}

pub fn cmd_quantize(args: &QuantizeArgs) -> Result<()> {
    let start = Instant::now();
    let q = quantize_model(args.model, args.w1, args.w2, args.rho12, args.nx, args.ny)?;
    match &args.output {
        Some(p) => q.write_csv(p)?,
        None => q.write_to(std::io::stdout())?,
    }
    emit_echo("quantize", args, args.output.as_deref(), start)
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::SweepGaussian(a) => cmd_sweep_gaussian(a),
        Command::ModelSweep(a) => cmd_model_sweep(a),
        Command::Network(a) => cmd_network(a),
        Command::Discrete(a) => cmd_discrete(a),
        Command::Quantize(a) => cmd_quantize(a),
    }
}
