//! `mml`: batch front end for evaluating, sampling and fitting matrix
//! Mittag-Leffler models.
//!
//! Every command writes its outputs and a `manifest.json` into `--out`.
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure,
//! 4 non-convergence.

mod data;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mml::fitting::{fit_pmml, FitConfig};
use mml::sampling::{sample_pmml_n, RandomStream};
use mml::semi_markov::SemiMarkovSpec;
use mml::tail_tools::{exp_values, hill_csv, hill_curve, qq_csv, qq_uniform};
use mml::PmmlDist;
use serde_json::{json, Value};

use error::CliError;
use output::{float_csv, to_json_text, Run};

#[derive(Parser)]
#[command(name = "mml", version, about = "Matrix Mittag-Leffler distributions from the command line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate pdf, cdf and survival of a model on a grid.
    Eval(EvalArgs),
    /// Draw samples from a model.
    Sample(SampleArgs),
    /// Simulate absorption times of a semi-Markov process.
    SimulateSm(SimulateArgs),
    /// Maximum-likelihood fit with QQ and Hill diagnostics.
    Fit(FitArgs),
    /// Hill curve of a data file.
    Hill(HillArgs),
    /// Uniform QQ pairs of a data file against a model.
    Qq(QqArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with one observation per line; the header is optional.
    #[arg(long)]
    data: PathBuf,
    /// Column to read, selected by header name.
    #[arg(long)]
    column: Option<String>,
    /// Discard the k smallest observations before anything else.
    #[arg(long, default_value_t = 0)]
    drop_smallest: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridKind {
    Log,
    Linear,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "log")]
    grid: GridKind,
    #[arg(long, default_value_t = 0.01)]
    from: f64,
    #[arg(long, default_value_t = 10.0)]
    to: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Semi-Markov process document.
    #[arg(long, visible_alias = "model")]
    spec: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Fit configuration; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fit exp(x) − 1 of the data and report results on both scales.
    #[arg(long)]
    exp_transform: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct HillArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    exp_transform: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct QqArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().collect();
    match run(cli.command, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command, argv: Vec<String>) -> Result<(), CliError> {
    match command {
        Command::Eval(a) => eval(a, argv),
        Command::Sample(a) => sample(a, argv),
        Command::SimulateSm(a) => simulate(a, argv),
        Command::Fit(a) => fit(a, argv),
        Command::Hill(a) => hill(a, argv),
        Command::Qq(a) => qq(a, argv),
    }
}

fn load_model(run: &mut Run, path: &Path) -> Result<PmmlDist, CliError> {
    let doc = run.read_json(path)?;
    Ok(PmmlDist::from_json(&doc, "model")?)
}

fn load_data(run: &mut Run, args: &DataArgs) -> Result<Vec<f64>, CliError> {
    run.read_input(&args.data)?;
    let values = data::read_column(&args.data, args.column.as_deref())?;
    data::drop_smallest(values, args.drop_smallest)
}

fn grid(kind: GridKind, from: f64, to: f64, points: usize) -> Result<Vec<f64>, CliError> {
    let bad = |m: &str| Err(CliError::Usage(m.to_string()));
    if points == 0 {
        return bad("--points must be at least 1");
    }
    if !(from.is_finite() && to.is_finite() && from >= 0.0 && to >= from) {
        return bad("grid needs 0 <= from <= to");
    }
    if points == 1 {
        return Ok(vec![from]);
    }
    let step = |i: usize| i as f64 / (points - 1) as f64;
    Ok(match kind {
        GridKind::Linear => (0..points).map(|i| from + (to - from) * step(i)).collect(),
        GridKind::Log => {
            if from <= 0.0 {
                return bad("a log grid needs from > 0");
            }
            let (a, b) = (from.ln(), to.ln());
            (0..points).map(|i| (a + (b - a) * step(i)).exp()).collect()
        }
    })
    .map(|mut xs: Vec<f64>| {
        // pin the endpoints against rounding
        xs[0] = from;
        xs[points - 1] = to;
        xs
    })
}

fn eval(a: EvalArgs, argv: Vec<String>) -> Result<(), CliError> {
    let mut run = Run::new(&a.out.out, argv, None)?;
    let model = load_model(&mut run, &a.model)?;
    let kind = match a.grid {
        GridKind::Log => "log",
        GridKind::Linear => "linear",
    };
    run.set_config(json!({"grid": kind, "from": a.from, "to": a.to, "points": a.points}));
    let rows = grid(a.grid, a.from, a.to, a.points)?
        .into_iter()
        .map(|x| Ok(vec![x, model.pdf(x)?, model.cdf(x)?, model.survival(x)?]))
        .collect::<Result<Vec<_>, CliError>>()?;
    run.write("eval.csv", &float_csv("x,pdf,cdf,survival", rows))?;
    run.finish()
}

fn sample(a: SampleArgs, argv: Vec<String>) -> Result<(), CliError> {
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let mut run = Run::new(&a.out.out, argv, Some(a.seed))?;
    let model = load_model(&mut run, &a.model)?;
    run.set_config(json!({"n": a.n}));
    let xs = sample_pmml_n(&model, a.n, &mut RandomStream::new(a.seed));
    run.write("sample.csv", &float_csv("value", xs.into_iter().map(|x| vec![x])))?;
    run.finish()
}

fn simulate(a: SimulateArgs, argv: Vec<String>) -> Result<(), CliError> {
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let mut run = Run::new(&a.out.out, argv, Some(a.seed))?;
    let doc = run.read_json(&a.spec)?;
    let spec = SemiMarkovSpec::from_json(&doc, "spec")?;
    run.set_config(json!({"n": a.n}));
    let mut rng = RandomStream::new(a.seed);
    let xs = (0..a.n)
        .map(|_| spec.simulate_absorption(&mut rng))
        .collect::<Result<Vec<f64>, _>>()?;
    run.write("absorption_times.csv", &float_csv("value", xs.into_iter().map(|x| vec![x])))?;
    run.finish()
}

fn fit(a: FitArgs, argv: Vec<String>) -> Result<(), CliError> {
    let mut run = Run::new(&a.out.out, argv, Some(a.seed))?;
    let config: FitConfig = match &a.config {
        Some(p) => {
            let doc = run.read_json(p)?;
            serde_json::from_value(doc).map_err(|e| CliError::io(p, format!("invalid config: {e}")))?
        }
        None => FitConfig::default(),
    };
    config.validate()?;
    let xs = load_data(&mut run, &a.data)?;
    let fitted = if a.exp_transform { exp_values(&xs)? } else { xs.clone() };
    run.set_config(json!({
        "fit": serde_json::to_value(&config).unwrap_or(Value::Null),
        "column": a.data.column,
        "drop_smallest": a.data.drop_smallest,
        "exp_transform": a.exp_transform,
    }));
    let result = fit_pmml(&fitted, &config, &RandomStream::new(a.seed))?;
    let mut doc = result.to_json(&config, a.seed);
    doc["observations"] = json!(fitted.len());
    doc["exp_transform"] = json!(a.exp_transform);
    if a.exp_transform {
        // log f_X(x) = log f_Y(eˣ − 1) + x
        doc["nll_original_scale"] = json!(result.nll - xs.iter().sum::<f64>());
    }
    run.write("fit.json", &to_json_text(&doc))?;
    run.write("qq.csv", &qq_csv(&qq_uniform(&result.model, &fitted)?))?;
    run.write("hill.csv", &hill_csv(&hill_curve(&fitted)?))?;
    if a.exp_transform {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(0.0, f64::max);
        let rows = grid(GridKind::Linear, lo, hi, 200)?
            .into_iter()
            .map(|x| Ok(vec![x, result.model.pdf(x.exp_m1())? * x.exp()]))
            .collect::<Result<Vec<_>, CliError>>()?;
        run.write("density_original_scale.csv", &float_csv("x,pdf", rows))?;
    }
    let converged = result.converged;
    run.finish()?;
    if converged {
        Ok(())
    } else {
        Err(CliError::NotConverged { nll: result.nll })
    }
}

fn hill(a: HillArgs, argv: Vec<String>) -> Result<(), CliError> {
    let mut run = Run::new(&a.out.out, argv, None)?;
    run.set_config(json!({
        "column": a.data.column,
        "drop_smallest": a.data.drop_smallest,
        "exp_transform": a.exp_transform,
    }));
    let mut xs = load_data(&mut run, &a.data)?;
    if a.exp_transform {
        xs = exp_values(&xs)?;
    }
    run.write("hill.csv", &hill_csv(&hill_curve(&xs)?))?;
    run.finish()
}

fn qq(a: QqArgs, argv: Vec<String>) -> Result<(), CliError> {
    let mut run = Run::new(&a.out.out, argv, None)?;
    let model = load_model(&mut run, &a.model)?;
    run.set_config(json!({"column": a.data.column, "drop_smallest": a.data.drop_smallest}));
    let xs = load_data(&mut run, &a.data)?;
    run.write("qq.csv", &qq_csv(&qq_uniform(&model, &xs)?))?;
    run.finish()
}
