use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use shareboost::data::Dataset;
use shareboost::error::{Error, Result};
use shareboost::feature_map::{apply_map_dataset, build_anchor_map, FeatureMapDescriptor};
use shareboost::io::{
    load_dataset, read_trace_tsv, save_dataset, scale_features, DataFormat, ModelFile,
};
use shareboost::model::{self, WeightMatrix};
use shareboost::regularizer::Regularizer;
use shareboost::synthetic::{
    gen_block_dataset, gen_code_dataset, BlockDatasetSpec, CodeDatasetSpec,
};
use shareboost::trainer::{
    shareboost_train, shareboost_train_stumps, SelectionRule, TrainConfig,
};

#[derive(Parser)]
#[command(
    name = "shareboost",
    version,
    about = "Sparse multiclass training with shared features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write it to a model file.
    Train(TrainArgs),
    /// Predict labels for a dataset with a trained model.
    Predict(PredictArgs),
    /// Report loss, 0-1 error, and support size of a model on a dataset.
    Eval(EvalArgs),
    /// Print the sparsity/accuracy table of a training trace.
    Path(PathArgs),
    /// Generate a synthetic dataset file.
    Synth(SynthArgs),
    /// Compare the analytic gradient against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Sparse,
}

impl From<FormatArg> for DataFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => DataFormat::Csv,
            FormatArg::Sparse => DataFormat::Sparse,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Grad,
    Refit,
    Linesearch,
    Vector,
}

impl From<RuleArg> for SelectionRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Grad => SelectionRule::GradL1,
            RuleArg::Refit => SelectionRule::BestColumnRefit,
            RuleArg::Linesearch => SelectionRule::SingleColumnLinesearch,
            RuleArg::Vector => SelectionRule::SingleColumnVector,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RegArg {
    None,
    Frob,
    Sminf1,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeaturesArg {
    Identity,
    Stumps,
    Quadratic,
    Anchors,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset file.
    #[arg(long)]
    data: PathBuf,
    /// Dataset file format.
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Label column (header name or 0-based index) for csv files.
    #[arg(long)]
    label_col: Option<String>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        load_dataset(&self.data, self.format.into(), self.label_col.as_deref())
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Number of greedy rounds T.
    #[arg(long)]
    rounds: usize,
    /// Feature selection rule.
    #[arg(long, value_enum, default_value = "grad")]
    rule: RuleArg,
    /// Regularizer added to the training objective.
    #[arg(long, value_enum, default_value = "none")]
    reg: RegArg,
    /// Regularization weight.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Smoothing parameter of the sminf1 regularizer.
    #[arg(long, default_value_t = 100.0)]
    beta: f64,
    /// Feature construction applied to the raw columns.
    #[arg(long, value_enum, default_value = "identity")]
    features: FeaturesArg,
    /// Anchor count (features=anchors).
    #[arg(long, default_value_t = 10)]
    anchors: usize,
    /// Comma-separated radius quantiles in (0,1) (features=anchors).
    #[arg(long, default_value = "0.5")]
    quantiles: String,
    /// Seed for all randomized steps.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker thread count (default: machine parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Skip the [-1,1] feature scaling.
    #[arg(long)]
    no_scale: bool,
    /// Held-out dataset evaluated each round in the trace.
    #[arg(long)]
    heldout: Option<PathBuf>,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    /// Output trace file (tab-separated, one row per round).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Model file.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Output label file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Model file.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct PathArgs {
    /// Trace file written by train.
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Code,
    Block,
}

#[derive(Args)]
struct SynthArgs {
    /// Which construction to generate.
    #[arg(long, value_enum)]
    kind: SynthKind,
    /// Class count (power of two).
    #[arg(long)]
    k: usize,
    /// Example count.
    #[arg(long)]
    m: usize,
    /// Block count (kind=block).
    #[arg(long, default_value_t = 4)]
    s: usize,
    /// Fraction of zeroed-block examples (kind=block).
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    /// Label noise rate (kind=code).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random instances to check.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Maximum accepted relative error.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::input("thread count must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::input(format!("thread pool setup failed: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn parse_quantiles(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::input(format!("unreadable quantile {t:?}")))
        })
        .collect()
}

fn build_regularizer(reg: RegArg, lambda: f64, beta: f64) -> Regularizer {
    match reg {
        RegArg::None => Regularizer::None,
        RegArg::Frob => Regularizer::Frobenius { lambda },
        RegArg::Sminf1 => Regularizer::SmoothMixedNorm { lambda, beta },
    }
}

fn run_train(args: TrainArgs) -> Result<()> {
    configure_threads(args.threads)?;
    let raw = args.data.load()?;
    let raw_heldout = args
        .heldout
        .as_ref()
        .map(|p| load_dataset(p, args.data.format.into(), args.data.label_col.as_deref()))
        .transpose()?;

    let (train, scaling) = if args.no_scale {
        (raw, None)
    } else {
        let (scaled, transform) = scale_features(&raw)?;
        (scaled, Some(transform))
    };
    let heldout = raw_heldout
        .map(|h| match &scaling {
            Some(t) => h.map_features(h.d(), |v, out| t.apply(v, out)),
            None => Ok(h),
        })
        .transpose()?;

    let mut cfg = TrainConfig::new(args.rounds);
    cfg.rule = args.rule.into();
    cfg.reg = build_regularizer(args.reg, args.lambda, args.beta);

    let (desc, weights, trace) = match args.features {
        FeaturesArg::Stumps => {
            let result = shareboost_train_stumps(&train, &cfg, heldout.as_ref())?;
            let desc = FeatureMapDescriptor::Stumps {
                raw_dim: train.d(),
                stumps: result.stumps,
            };
            (desc, result.weights, result.trace)
        }
        kind => {
            let desc = match kind {
                FeaturesArg::Identity => FeatureMapDescriptor::Identity { raw_dim: train.d() },
                FeaturesArg::Quadratic => FeatureMapDescriptor::Quadratic { raw_dim: train.d() },
                FeaturesArg::Anchors => {
                    let quantiles = parse_quantiles(&args.quantiles)?;
                    build_anchor_map(&train, args.anchors, &quantiles, args.seed)?
                }
                FeaturesArg::Stumps => unreachable!(),
            };
            cfg.groups = desc.groups();
            let mapped = apply_map_dataset(&desc, &train)?;
            let mapped_heldout = heldout
                .as_ref()
                .map(|h| apply_map_dataset(&desc, h))
                .transpose()?;
            let (w, trace) = shareboost_train(&mapped, &cfg, mapped_heldout.as_ref())?;
            (desc, w, trace)
        }
    };

    let model = ModelFile::from_parts(&weights, desc, scaling);
    model.save(&args.out)?;
    if let Some(path) = &args.trace {
        std::fs::write(path, trace.to_tsv())?;
    }
    for record in &trace.records {
        if let Some(w) = &record.warning {
            log::warn!("round {}: {w}", record.round);
        }
    }
    let last = trace.records.last();
    println!(
        "rounds={} support={} train_loss={} train_err={}",
        trace.records.len(),
        last.map(|r| r.support_size).unwrap_or(0),
        last.map(|r| r.train_loss).unwrap_or(trace.initial_loss),
        last.map(|r| r.train_err).unwrap_or(trace.initial_err),
    );
    Ok(())
}

fn run_predict(args: PredictArgs) -> Result<()> {
    let model = ModelFile::load(&args.model)?;
    let raw = args.data.load()?;
    let mapped = model.map_dataset(&raw)?;
    let w = model.weight_matrix()?;
    let mut out = String::new();
    for i in 0..mapped.m() {
        out.push_str(&format!("{}\n", model::predict(&w, mapped.example(i))?));
    }
    match &args.out {
        Some(path) => std::fs::write(path, out)?,
        None => print!("{out}"),
    }
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let model = ModelFile::load(&args.model)?;
    let raw = args.data.load()?;
    let mapped = model.map_dataset(&raw)?;
    let w = model.weight_matrix()?;
    let loss = model::loss_avg(&w, &mapped, &Regularizer::None)?;
    let err = model::zero_one_error(&w, &mapped)?;
    println!("loss: {loss}");
    println!("error: {err}");
    println!("support: {}", w.support().len());
    Ok(())
}

fn run_path(args: PathArgs) -> Result<()> {
    let rows = read_trace_tsv(&args.trace)?;
    println!("support_size\ttrain_loss\ttrain_err\theldout_err");
    for row in rows {
        let heldout = row
            .heldout_err
            .map(|e| e.to_string())
            .unwrap_or_else(|| "-".to_string());
        println!(
            "{}\t{}\t{}\t{}",
            row.support_size, row.train_loss, row.train_err, heldout
        );
    }
    Ok(())
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let data = match args.kind {
        SynthKind::Code => {
            let spec = CodeDatasetSpec::new(args.k, args.m)?;
            gen_code_dataset(&spec, args.noise, args.seed)?
        }
        SynthKind::Block => {
            let spec = BlockDatasetSpec::new(args.k, args.s, args.m, args.eps)?;
            gen_block_dataset(&spec, args.seed)?
        }
    };
    save_dataset(&args.out, &data, args.format.into())?;
    println!("wrote m={} d={} k={} to {}", data.m(), data.d(), data.k(), args.out.display());
    Ok(())
}

fn run_gradcheck(args: GradcheckArgs) -> Result<()> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..args.trials.max(1) {
        let m = rng.gen_range(1..=20);
        let d = rng.gen_range(1..=8);
        let k = rng.gen_range(2..=5);
        let features: Vec<f64> = (0..m * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let labels: Vec<usize> = (0..m).map(|_| rng.gen_range(0..k)).collect();
        let data = Dataset::new(features, labels, d, k)?;
        let entries: Vec<f64> = (0..k * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = WeightMatrix::from_entries(k, d, entries)?;
        let g = model::gradient(&w, &data, &Regularizer::None)?;
        let h = 1e-5;
        let mut scale: f64 = 1e-8;
        let mut max_abs: f64 = 0.0;
        for idx in 0..k * d {
            let mut plus = w.entries().to_vec();
            let mut minus = plus.clone();
            plus[idx] += h;
            minus[idx] -= h;
            let wp = WeightMatrix::from_entries(k, d, plus)?;
            let wm = WeightMatrix::from_entries(k, d, minus)?;
            let fd = (model::loss_avg(&wp, &data, &Regularizer::None)?
                - model::loss_avg(&wm, &data, &Regularizer::None)?)
                / (2.0 * h);
            scale = scale.max(fd.abs());
            max_abs = max_abs.max((g.entries[idx] - fd).abs());
        }
        worst = worst.max(max_abs / scale);
    }
    println!("max relative gradient error: {worst:e}");
    if worst > args.tol {
        return Err(Error::numerical(format!(
            "gradient check failed: {worst:e} exceeds tolerance {:e}",
            args.tol
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => run_train(args),
        Command::Predict(args) => run_predict(args),
        Command::Eval(args) => run_eval(args),
        Command::Path(args) => run_path(args),
        Command::Synth(args) => run_synth(args),
        Command::Gradcheck(args) => run_gradcheck(args),
    }
}

fn main() {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("{err}");
        let code = match err {
            Error::Numerical(_) => 3,
            Error::Input(_) | Error::Data { .. } | Error::Io(_) => 2,
        };
        std::process::exit(code);
    }
}
