use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use serde_json::json;

use lwr_core::config::RunConfig;
use lwr_core::datagen::{generate_dataset, DatasetManifest, ProblemKind};
use lwr_core::eval::{
    bench_inference, evaluate_by_complexity, fit_piecewise, fit_power_law, write_ppm, write_ppm_pair, Axis,
    MetricReport,
};
use lwr_core::model::{forward, load_params, FnoArch, FnoParams, ARCH_FILE};
use lwr_core::pde::{solve_bvp, solve_ivp, BoundaryTrace};
use lwr_core::tensor::Tensor;
use lwr_core::training::{
    format_sweep_table, lambda_sweep, train, write_sweep_csv, ModelKind, Start, TrainData, OPTIMIZER_FILE, PARAMS_DIR,
};
use lwr_core::tns;

use crate::files::read_values;
use crate::{Cli, Command, Global};

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Initial densities in veh/km, one per cell (.tns or text).
    #[arg(long)]
    pub ic: PathBuf,
    /// Ghost densities in veh/km: a 2×n matrix, upstream row then downstream row.
    #[arg(long)]
    pub bc: Option<PathBuf>,
    /// ivp or bvp; defaults to bvp when --bc is given.
    #[arg(long)]
    pub kind: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelArg {
    Fno,
    PiFno,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Continue the checkpoint in --out.
    #[arg(long)]
    pub resume: bool,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Training output directory or a parameter directory.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Encoded m×n input (normalised densities, −1 where unknown).
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Split to evaluate; defaults to eval.split.
    #[arg(long)]
    pub split: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AxisArg {
    Alpha,
    Beta,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// report.json written by `eval`.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, value_enum, default_value = "alpha")]
    pub axis: AxisArg,
    /// Piecewise threshold; defaults to eval.fit_threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Grids as MxN; repeatable. Defaults to eval.bench_grids.
    #[arg(long = "grid", value_parser = parse_grid)]
    pub grids: Vec<(usize, usize)>,
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Comma-separated λ values; defaults to eval.lambdas.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Vec<f64>,
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (m, n) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected MxN, got '{s}'"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}"));
    Ok((parse(m)?, parse(n)?))
}

fn load_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg = cfg.with_seed(seed);
    }
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let cfg = load_config(&cli.global)?;
    let out = cli.global.out.as_path();
    match cli.command {
        Command::GenData => gen_data(cfg, out),
        Command::Solve(a) => solve(cfg, out, a),
        Command::Train(a) => train_cmd(cfg, out, a),
        Command::Predict(a) => predict(cfg, out, a),
        Command::Eval(a) => eval(cfg, out, a),
        Command::FitCurves(a) => fit_curves(cfg, out, a),
        Command::Bench(a) => bench(cfg, out, a),
        Command::LambdaSweep(a) => sweep(cfg, out, a),
    }
}

fn gen_data(cfg: RunConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    let manifest = generate_dataset(&cfg.dataset_spec()?, out)?;
    cfg.echo(out)?;
    for split in &cfg.datagen.splits {
        println!("{:<8} {:>6} samples", split.name, manifest.entries(&split.name).count());
    }
    println!("dataset written to {}", out.display());
    Ok(())
}

fn solve(mut cfg: RunConfig, out: &Path, a: SolveArgs) -> Result<()> {
    let (_, u0) = read_values(&a.ic)?;
    let bc = a.bc.as_deref().map(read_values).transpose()?;
    let kind = match a.kind.as_deref() {
        Some(k) => k.parse::<ProblemKind>()?,
        None if bc.is_some() => ProblemKind::Bvp,
        None => ProblemKind::Ivp,
    };
    cfg.grid.m = u0.len();
    if let Some((dims, _)) = &bc {
        match dims.as_slice() {
            [2, n] => cfg.grid.n = *n,
            other => bail!("boundary file must be a 2×n matrix, got dims {other:?}"),
        }
    }
    cfg.flux.validate()?;
    let grid = cfg.grid()?;
    let field = match (kind, bc) {
        (ProblemKind::Ivp, _) => solve_ivp(&u0, &grid, &cfg.flux)?,
        (ProblemKind::Bvp, Some((_, b))) => {
            let trace = BoundaryTrace { upstream: b[..grid.n].to_vec(), downstream: b[grid.n..].to_vec() };
            solve_bvp(&u0, &trace, &grid, &cfg.flux)?
        }
        (ProblemKind::Bvp, None) => bail!("--kind bvp needs a boundary file (--bc)"),
        (ProblemKind::Ip, _) => bail!("the solver handles ivp and bvp; ip samples come from gen-data"),
    };
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    tns::write(&out.join("field.tns"), &[grid.m, grid.n], field.values())?;
    write_ppm(&out.join("field.ppm"), field.values(), grid.m, grid.n, 0.0, cfg.flux.u_max)?;
    cfg.echo(out)?;
    println!(
        "{kind} solve on {}×{} (dx = {:.1} m, dt = {:.3} s): vehicles {:.3} → {:.3}",
        grid.m,
        grid.n,
        grid.dx * 1000.0,
        grid.dt * 3600.0,
        field.vehicles(0, grid.dx),
        field.vehicles(grid.n - 1, grid.dx)
    );
    Ok(())
}

fn train_cmd(mut cfg: RunConfig, out: &Path, a: TrainArgs) -> Result<()> {
    if let Some(m) = a.model {
        cfg.train.model = match m {
            ModelArg::Fno => ModelKind::Fno,
            ModelArg::PiFno => ModelKind::PiFno,
        };
    }
    if let Some(l) = a.lambda {
        cfg.train.lambda = l;
    }
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    cfg.train.validate()?;
    cfg.arch.validate()?;
    let has_checkpoint = out.join(OPTIMIZER_FILE).exists();
    let start = if a.resume {
        if !has_checkpoint {
            bail!("--resume: no checkpoint in {}", out.display());
        }
        Start::Resume(out.to_path_buf())
    } else {
        if has_checkpoint {
            bail!("{} already holds a checkpoint; pass --resume or choose another --out", out.display());
        }
        Start::Fresh
    };
    let data = TrainData::from_dataset(&a.dataset, &cfg.train.train_split, &cfg.train.val_split)?;
    cfg.echo(out)?;
    let outcome = train(&cfg.train, &cfg.arch, &data, start, Some(out))?;
    // Checkpoint writes replace the directory wholesale.
    cfg.echo(out)?;
    if let (Some(first), Some(last)) = (outcome.history.initial.as_ref(), outcome.history.last()) {
        println!(
            "epoch {} → {}: objective {:.5} → {:.5}, validation MAE {:.3} → {:.3} veh/km",
            first.epoch, last.epoch, first.objective, last.objective, first.val_mae, last.val_mae
        );
    }
    println!("checkpoint in {}", out.display());
    Ok(())
}

/// Accepts a training output directory or a bare parameter directory.
fn load_checkpoint_params(path: &Path) -> Result<(FnoArch, FnoParams)> {
    let dir = if path.join(ARCH_FILE).exists() { path.to_path_buf() } else { path.join(PARAMS_DIR) };
    if !dir.join(ARCH_FILE).exists() {
        bail!("{} holds no model parameters", path.display());
    }
    Ok(load_params(&dir)?)
}

fn predict(cfg: RunConfig, out: &Path, a: PredictArgs) -> Result<()> {
    let (arch, params) = load_checkpoint_params(&a.checkpoint)?;
    let (dims, values) = read_values(&a.input)?;
    let (m, n) = match dims.as_slice() {
        [m, n] | [1, m, n] => (*m, *n),
        other => bail!("input must be an m×n matrix, got dims {other:?}"),
    };
    let y = forward(&params, &arch, &Tensor::from_vec(&[1, m, n], values)?)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    tns::write(&out.join("prediction.tns"), &[m, n], y.data())?;
    write_ppm(&out.join("prediction.ppm"), y.data(), m, n, 0.0, 1.0)?;
    cfg.echo(out)?;
    println!("prediction ({m}×{n}, normalised density) written to {}", out.display());
    Ok(())
}

fn eval(cfg: RunConfig, out: &Path, a: EvalArgs) -> Result<()> {
    let (arch, params) = load_checkpoint_params(&a.checkpoint)?;
    let split = a.split.unwrap_or_else(|| cfg.eval.split.clone());
    let report = evaluate_by_complexity(&params, &arch, &a.dataset, &split, cfg.eval.per_class, None)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    report.write_csv(&out.join("samples.csv"), &out.join("classes.csv"))?;
    report.write_json(&out.join("report.json"))?;

    let manifest = DatasetManifest::load(&a.dataset)?;
    let maps = out.join("heatmaps");
    for entry in manifest.entries(&split).take(cfg.eval.heatmaps) {
        fs::create_dir_all(&maps).with_context(|| format!("creating {}", maps.display()))?;
        let s = manifest.load_sample(&a.dataset, entry)?;
        let y = forward(&params, &arch, &Tensor::from_vec(&[1, s.m, s.n], s.input.clone())?)?;
        write_ppm_pair(&maps.join(format!("{}.ppm", entry.id)), y.data(), &s.target, s.m, s.n, 0.0, 1.0)?;
    }
    cfg.echo(out)?;
    println!("{:<5} {:>5} {:>5} {:>6} {:>12}", "kind", "alpha", "beta", "count", "MAE veh/km");
    for c in &report.classes {
        println!("{:<5} {:>5} {:>5} {:>6} {:>12.4}", c.kind, c.alpha, c.beta, c.count, c.mean_mae);
    }
    println!("mean MAE {:.4} veh/km over {} samples", report.mean_mae(), report.samples.len());
    Ok(())
}

fn fit_curves(cfg: RunConfig, out: &Path, a: FitArgs) -> Result<()> {
    let report = MetricReport::read_json(&a.report)?;
    let axis = match a.axis {
        AxisArg::Alpha => Axis::Alpha,
        AxisArg::Beta => Axis::Beta,
    };
    let threshold = a.threshold.unwrap_or(cfg.eval.fit_threshold);
    let points = report.curve_points(axis);
    let power = fit_power_law(&points)?;
    let piecewise = fit_piecewise(&points, threshold);
    println!("power law:  {}  (sse {:.4e})", power.formula(), power.sse);
    match &piecewise {
        Ok(f) => println!("piecewise:  {}  (sse {:.4e})", f.formula(), f.sse),
        Err(e) => log::warn!("piecewise fit skipped: {e}"),
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let doc = json!({
        "axis": axis,
        "points": points,
        "power": power,
        "piecewise": piecewise.as_ref().ok(),
    });
    let path = out.join("fits.json");
    fs::write(&path, serde_json::to_string_pretty(&doc)?).with_context(|| format!("writing {}", path.display()))?;
    cfg.echo(out)?;
    Ok(())
}

fn bench(cfg: RunConfig, out: &Path, a: BenchArgs) -> Result<()> {
    let (arch, params) = load_checkpoint_params(&a.checkpoint)?;
    let grids: Vec<(usize, usize)> = if a.grids.is_empty() {
        cfg.eval.bench_grids.iter().map(|&[m, n]| (m, n)).collect()
    } else {
        a.grids
    };
    let reps = a.reps.unwrap_or(cfg.eval.bench_repetitions);
    let rows = bench_inference(&params, &arch, &grids, reps, &cfg.flux, cfg.grid.length_m / 1000.0, cfg.seed)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join("bench.json");
    fs::write(&path, serde_json::to_string_pretty(&rows)?).with_context(|| format!("writing {}", path.display()))?;
    cfg.echo(out)?;
    println!("{:>10} {:>14} {:>14} {:>14}", "grid", "operator s", "solver s", "GFLOP/pass");
    for r in &rows {
        println!(
            "{:>10} {:>14.4e} {:>14.4e} {:>14.3}",
            format!("{}x{}", r.m, r.n),
            r.operator_mean_s,
            r.solver_mean_s,
            r.operator_flops as f64 * 1e-9
        );
    }
    Ok(())
}

fn sweep(cfg: RunConfig, out: &Path, a: SweepArgs) -> Result<()> {
    let lambdas = if a.lambdas.is_empty() { cfg.eval.lambdas.clone() } else { a.lambdas };
    if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(anyhow!("λ values must be finite and ≥ 0"));
    }
    cfg.train.validate()?;
    let data = TrainData::from_dataset(&a.dataset, &cfg.train.train_split, &cfg.train.val_split)?;
    cfg.echo(out)?;
    let rows = lambda_sweep(&cfg.train, &cfg.arch, &data, &lambdas, Some(out))?;
    write_sweep_csv(&rows, &out.join("lambda_sweep.csv"))?;
    print!("{}", format_sweep_table(&rows));
    Ok(())
}
