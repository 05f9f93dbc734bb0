//! Command-line front end: synthetic data generation, feature extraction,
//! training, evaluation, and the statistical studies, each as a
//! subcommand. Every random choice flows from an explicit `--seed`; reruns
//! with identical inputs and seeds write identical bytes.
//!
//! Exit codes: 0 success, 1 for I/O or data errors (diagnostic on stderr),
//! 2 for usage errors.

use crate::dataset::{
    build_scenarios, extract_table, filter_noise, gen_synthetic_with, parse_samples,
    read_feature_table, split_indices, write_feature_table, write_samples, SampleFormat,
    Scenario, SynthConfig,
};
use crate::error::{Error, Result};
use crate::experiments::{
    ablation_study, repeat_study, write_ablation_csv, write_runs_csv, write_stats_csv, RunPlan,
};
use crate::features::FeatureConfig;
use crate::metrics::{
    abs_error_by_frequency, bin_abs_error_by_distance, fspl, hexbin, mae, pearson, r_squared,
    rmse, write_distance_bins_csv, write_frequency_bins_csv, write_hexbin_csv,
};
use crate::nn::{
    forward, load_model, save_model, train, ForwardMode, MlpConfig, TrainConfig, TrainHistory,
};
use crate::profile::MEAN_EARTH_RADIUS_M;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "linkloss",
    version,
    about = "Obstruction features and compact-network path loss prediction",
    propagate_version = true
)]
struct Cli {
    /// JSON file of option overrides; values in it take precedence over
    /// the corresponding command-line flags.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Print progress notes to stderr while long commands run.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic link profiles with known path-loss labels.
    Synth(SynthArgs),
    /// Extract the eight obstruction features from link profiles.
    Extract(ExtractArgs),
    /// Train one model on a feature table with an internal holdout split.
    Train(TrainArgs),
    /// Score a trained model on a feature table and emit reports.
    Eval(EvalArgs),
    /// Run the stepwise 4/6/8-feature ablation over holdout scenarios.
    Ablation(AblationArgs),
    /// Repeat one scenario many times and report run statistics.
    RepeatStudy(RepeatArgs),
    /// List the holdout scenarios a feature table supports.
    Scenarios(ScenariosArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Number of links to generate.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standard deviation of the label noise, in dB.
    #[arg(long, default_value_t = 2.0)]
    noise_sd_db: f64,
    /// Number of measurement groups (drive-test areas).
    #[arg(long, default_value_t = 6)]
    groups: usize,
    /// Destination file for the generated samples.
    #[arg(long, value_name = "PATH")]
    output: PathBuf,
    /// Sample encoding: jsonl or csv-long.
    #[arg(long, default_value_t = SampleFormat::Jsonl)]
    format: SampleFormat,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Link samples to read (jsonl or csv-long).
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Destination feature CSV.
    #[arg(long, value_name = "PATH")]
    output: PathBuf,
    /// Sample encoding of the input: jsonl or csv-long.
    #[arg(long, default_value_t = SampleFormat::Jsonl)]
    format: SampleFormat,
    /// Effective Earth radius in metres for the curvature correction.
    #[arg(long, default_value_t = MEAN_EARTH_RADIUS_M)]
    radius_m: f64,
    /// Drop samples whose measured loss sits within this margin of the
    /// receiver noise floor; samples without a recorded floor pass.
    #[arg(long, value_name = "DB")]
    noise_margin_db: Option<f64>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Feature CSV to train on.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Destination model file (JSON).
    #[arg(long, value_name = "PATH")]
    output: PathBuf,
    /// Optional per-epoch loss curve CSV.
    #[arg(long, value_name = "PATH")]
    history: Option<PathBuf>,
    #[command(flatten)]
    knobs: TrainKnobs,
}

/// Training options shared by train/ablation/repeat-study.
#[derive(Args, Debug, Clone, Copy)]
struct TrainKnobs {
    /// Feature configuration: 4, 6, or 8 inputs.
    #[arg(long, default_value_t = 8)]
    features: usize,
    /// Base seed for splits, initialization, and dropout.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Minibatch size.
    #[arg(long, default_value_t = 8192)]
    batch_size: usize,
    /// Adam learning rate.
    #[arg(long, default_value_t = 0.001)]
    learning_rate: f64,
    /// Epochs without validation improvement before stopping.
    #[arg(long, default_value_t = 50)]
    patience: usize,
    /// Upper bound on training epochs.
    #[arg(long, default_value_t = 1000)]
    max_epochs: usize,
    /// Share of rows used for training in the internal split.
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    /// Inverted-dropout rate after each hidden layer.
    #[arg(long, default_value_t = 0.25)]
    dropout: f64,
    /// Hidden layer width.
    #[arg(long, default_value_t = 64)]
    hidden_width: usize,
}

impl TrainKnobs {
    fn feature_config(&self) -> Result<FeatureConfig> {
        FeatureConfig::try_from(self.features)
    }

    fn mlp_config(&self) -> MlpConfig {
        MlpConfig {
            input_dim: self.features,
            hidden_layers: crate::nn::HIDDEN_LAYERS,
            hidden_width: self.hidden_width,
            dropout_rate: self.dropout,
        }
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            patience: self.patience,
            max_epochs: self.max_epochs,
            train_fraction: self.train_fraction,
            seed: self.seed,
        }
    }

    fn run_plan(&self, n_runs: usize) -> RunPlan {
        RunPlan {
            n_runs,
            base_seed: self.seed,
            hidden_layers: crate::nn::HIDDEN_LAYERS,
            hidden_width: self.hidden_width,
            dropout_rate: self.dropout,
            train: self.train_config(),
        }
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Feature CSV to score.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Trained model file.
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Directory for metrics.json, hexbin.csv, and the binned-error CSVs.
    #[arg(long, value_name = "DIR")]
    output_dir: PathBuf,
    /// Distance bin width in metres for the binned-error report.
    #[arg(long, default_value_t = 3000.0)]
    bin_width_m: f64,
    /// Hexagon circumradius in dB for the measured-vs-predicted hexbin.
    #[arg(long, default_value_t = 1.0)]
    hex_cell_size: f64,
}

#[derive(Args, Debug)]
struct AblationArgs {
    /// Feature CSV to study.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Directory for ablation.csv and runs.csv.
    #[arg(long, value_name = "DIR")]
    output_dir: PathBuf,
    /// Independent runs per scenario and configuration.
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[command(flatten)]
    knobs: TrainKnobs,
}

#[derive(Args, Debug)]
struct RepeatArgs {
    /// Feature CSV to study.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Directory for runs.csv and stats.csv.
    #[arg(long, value_name = "DIR")]
    output_dir: PathBuf,
    /// Number of independent optimization runs.
    #[arg(long, default_value_t = 200)]
    runs: usize,
    /// Size of the best-by-validation subset reported alongside all runs.
    #[arg(long, default_value_t = 20)]
    best_k: usize,
    /// Hold out this group for testing and train on the rest.
    #[arg(long, value_name = "GROUP")]
    holdout: Option<String>,
    /// Train on every group and test on this external feature CSV instead.
    #[arg(long, value_name = "PATH")]
    external: Option<PathBuf>,
    #[command(flatten)]
    knobs: TrainKnobs,
}

#[derive(Args, Debug)]
struct ScenariosArgs {
    /// Feature CSV whose groups define the scenarios.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
}

/// Optional overrides loaded from `--config`; any value present replaces
/// the corresponding flag.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    n: Option<usize>,
    seed: Option<u64>,
    noise_sd_db: Option<f64>,
    groups: Option<usize>,
    features: Option<usize>,
    runs: Option<usize>,
    best_k: Option<usize>,
    batch_size: Option<usize>,
    learning_rate: Option<f64>,
    patience: Option<usize>,
    max_epochs: Option<usize>,
    train_fraction: Option<f64>,
    dropout: Option<f64>,
    hidden_width: Option<usize>,
    bin_width_m: Option<f64>,
    hex_cell_size: Option<f64>,
    radius_m: Option<f64>,
    noise_margin_db: Option<f64>,
}

fn load_file_config(path: &Path) -> Result<FileConfig> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

macro_rules! apply {
    ($cfg:expr, $target:expr, $($field:ident),+) => {
        $(if let Some(v) = $cfg.$field { $target.$field = v; })+
    };
}

impl FileConfig {
    fn apply_knobs(&self, knobs: &mut TrainKnobs) {
        apply!(self, knobs, features, seed, batch_size, learning_rate, patience, max_epochs,
            train_fraction, dropout, hidden_width);
    }

    fn apply(&self, command: &mut Command) {
        match command {
            Command::Synth(a) => {
                apply!(self, a, n, seed, noise_sd_db, groups);
            }
            Command::Extract(a) => {
                apply!(self, a, radius_m);
                if self.noise_margin_db.is_some() {
                    a.noise_margin_db = self.noise_margin_db;
                }
            }
            Command::Train(a) => self.apply_knobs(&mut a.knobs),
            Command::Eval(a) => {
                apply!(self, a, bin_width_m, hex_cell_size);
            }
            Command::Ablation(a) => {
                apply!(self, a, runs);
                self.apply_knobs(&mut a.knobs);
            }
            Command::RepeatStudy(a) => {
                apply!(self, a, runs, best_k);
                self.apply_knobs(&mut a.knobs);
            }
            Command::Scenarios(_) => {}
        }
    }
}

/// Parses and executes one invocation; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests land here too; they are not errors.
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    if let Some(path) = &cli.config {
        match load_file_config(path) {
            Ok(cfg) => cfg.apply(&mut cli.command),
            Err(err) => {
                eprintln!("error: cannot load config {}: {err}", path.display());
                return 1;
            }
        }
    }
    match dispatch(cli.command, cli.verbose) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn dispatch(command: Command, verbose: bool) -> Result<()> {
    match command {
        Command::Synth(args) => cmd_synth(args, verbose),
        Command::Extract(args) => cmd_extract(args, verbose),
        Command::Train(args) => cmd_train(args, verbose),
        Command::Eval(args) => cmd_eval(args),
        Command::Ablation(args) => cmd_ablation(args, verbose),
        Command::RepeatStudy(args) => cmd_repeat(args, verbose),
        Command::Scenarios(args) => cmd_scenarios(args),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn cmd_synth(args: SynthArgs, verbose: bool) -> Result<()> {
    let samples = gen_synthetic_with(&SynthConfig {
        n: args.n,
        seed: args.seed,
        noise_sd_db: args.noise_sd_db,
        n_groups: args.groups,
        ..SynthConfig::default()
    })?;
    if verbose {
        eprintln!("generated {} links in {} groups", samples.len(), args.groups);
    }
    let mut out = create(&args.output)?;
    write_samples(&samples, args.format, &mut out)?;
    out.flush()?;
    println!("wrote {} samples to {}", samples.len(), args.output.display());
    Ok(())
}

fn cmd_extract(args: ExtractArgs, verbose: bool) -> Result<()> {
    let input = BufReader::new(File::open(&args.input)?);
    let samples = parse_samples(input, args.format)?;
    let kept = match args.noise_margin_db {
        Some(margin) => {
            let before = samples.len();
            let kept = filter_noise(samples, margin)?;
            if verbose {
                eprintln!("noise filter kept {} of {before} samples", kept.len());
            }
            kept
        }
        None => samples,
    };
    let table = extract_table(&kept, args.radius_m)?;
    let mut out = create(&args.output)?;
    write_feature_table(&table, &mut out)?;
    out.flush()?;
    println!("wrote {} feature rows to {}", table.len(), args.output.display());
    Ok(())
}

fn write_history_csv<W: Write>(history: &TrainHistory, mut w: W) -> Result<()> {
    writeln!(w, "epoch,train_mse,val_mse")?;
    for (e, (t, v)) in history.train_mse.iter().zip(&history.val_mse).enumerate() {
        writeln!(w, "{e},{t},{v}")?;
    }
    Ok(())
}

fn cmd_train(args: TrainArgs, verbose: bool) -> Result<()> {
    let table = read_feature_table(BufReader::new(File::open(&args.input)?))?;
    let config = args.knobs.feature_config()?;
    let (tr, va) = split_indices(table.len(), args.knobs.train_fraction, args.knobs.seed)?;
    let xt = table.features.select_rows(&tr).left_cols(config.len())?;
    let yt: Vec<f64> = tr.iter().map(|&i| table.labels[i]).collect();
    let xv = table.features.select_rows(&va).left_cols(config.len())?;
    let yv: Vec<f64> = va.iter().map(|&i| table.labels[i]).collect();
    if verbose {
        eprintln!("training on {} rows, validating on {}", xt.rows(), xv.rows());
    }
    let (model, history) = train(
        &xt,
        &yt,
        &xv,
        &yv,
        &args.knobs.mlp_config(),
        &args.knobs.train_config(),
    )?;
    let mut out = create(&args.output)?;
    save_model(&model, &mut out)?;
    out.flush()?;
    if let Some(path) = &args.history {
        let mut out = create(path)?;
        write_history_csv(&history, &mut out)?;
        out.flush()?;
    }
    println!(
        "trained {}-feature model ({} parameters): {} epochs, best validation RMSE {:.4} dB",
        config.len(),
        model.param_total(),
        history.epochs_run,
        history.val_mse[history.best_epoch].sqrt()
    );
    Ok(())
}

/// Flat report schema for one evaluation; field order fixes the JSON
/// layout, keeping reruns byte-identical.
#[derive(Serialize)]
struct EvalReport {
    count: usize,
    features: usize,
    rmse_db: f64,
    mae_db: f64,
    r2: f64,
    pearson_r: f64,
    fspl_rmse_db: f64,
    improvement_over_fspl_db: f64,
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let table = read_feature_table(BufReader::new(File::open(&args.input)?))?;
    let model = load_model(BufReader::new(File::open(&args.model)?))?;
    if table.is_empty() {
        return Err(Error::Degenerate("evaluation table is empty".into()));
    }
    let inputs = table.features.left_cols(model.config.input_dim)?;
    let pred = forward(&model, &inputs, ForwardMode::Infer)?;
    let fspl_pred: Vec<f64> = table
        .frequencies_mhz()
        .iter()
        .zip(&table.distances_m())
        .map(|(&f, &d)| fspl(f, d))
        .collect::<Result<_>>()?;
    let report = EvalReport {
        count: table.len(),
        features: model.config.input_dim,
        rmse_db: rmse(&pred, &table.labels)?,
        mae_db: mae(&pred, &table.labels)?,
        r2: r_squared(&pred, &table.labels)?,
        pearson_r: pearson(&pred, &table.labels)?,
        fspl_rmse_db: rmse(&fspl_pred, &table.labels)?,
        improvement_over_fspl_db: rmse(&fspl_pred, &table.labels)? - rmse(&pred, &table.labels)?,
    };
    std::fs::create_dir_all(&args.output_dir)?;
    let mut out = create(&args.output_dir.join("metrics.json"))?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    out.flush()?;

    let points: Vec<(f64, f64)> = table.labels.iter().copied().zip(pred.iter().copied()).collect();
    let grid = hexbin(&points, args.hex_cell_size)?;
    let mut out = create(&args.output_dir.join("hexbin.csv"))?;
    write_hexbin_csv(&grid, &mut out)?;
    out.flush()?;

    let by_distance =
        bin_abs_error_by_distance(&table.distances_m(), &pred, &table.labels, args.bin_width_m)?;
    let mut out = create(&args.output_dir.join("distance_bins.csv"))?;
    write_distance_bins_csv(&by_distance, &mut out)?;
    out.flush()?;

    let by_frequency = abs_error_by_frequency(&table.frequencies_mhz(), &pred, &table.labels)?;
    let mut out = create(&args.output_dir.join("frequency_bins.csv"))?;
    write_frequency_bins_csv(&by_frequency, &mut out)?;
    out.flush()?;

    println!(
        "evaluated {} rows: RMSE {:.4} dB, MAE {:.4} dB, R^2 {:.4}",
        report.count, report.rmse_db, report.mae_db, report.r2
    );
    Ok(())
}

/// Leave-one-group-out scenarios only; the no-holdout scenario needs an
/// external test set, which `repeat-study --external` provides.
fn loo_scenarios(table_groups: Vec<String>) -> Result<Vec<Scenario>> {
    Ok(build_scenarios(&table_groups)?
        .into_iter()
        .filter(|s| !s.is_external_test())
        .collect())
}

fn cmd_ablation(args: AblationArgs, verbose: bool) -> Result<()> {
    let table = read_feature_table(BufReader::new(File::open(&args.input)?))?;
    let scenarios = loo_scenarios(table.group_set().into_iter().collect())?;
    let configs = [FeatureConfig::Four, FeatureConfig::Six, FeatureConfig::Eight];
    if verbose {
        eprintln!(
            "{} scenarios x {} configs x {} runs",
            scenarios.len(),
            configs.len(),
            args.runs
        );
    }
    let plan = args.knobs.run_plan(args.runs);
    let result = ablation_study(&table, &scenarios, &configs, &plan, None)?;
    std::fs::create_dir_all(&args.output_dir)?;
    let mut out = create(&args.output_dir.join("ablation.csv"))?;
    write_ablation_csv(&result, &mut out)?;
    out.flush()?;
    let mut out = create(&args.output_dir.join("runs.csv"))?;
    write_runs_csv(&result.records, &mut out)?;
    out.flush()?;
    println!(
        "ablation over {} scenarios written to {}",
        result.scenarios.len(),
        args.output_dir.display()
    );
    Ok(())
}

fn cmd_repeat(args: RepeatArgs, verbose: bool) -> Result<()> {
    let table = read_feature_table(BufReader::new(File::open(&args.input)?))?;
    let groups: Vec<String> = table.group_set().into_iter().collect();
    let all = build_scenarios(&groups)?;
    let (scenario, external) = match (&args.holdout, &args.external) {
        (Some(group), None) => {
            let scenario = all
                .into_iter()
                .find(|s| s.test_groups.contains(group))
                .ok_or_else(|| Error::Config(format!("no scenario holds out group {group}")))?;
            (scenario, None)
        }
        (None, Some(path)) => {
            let external = read_feature_table(BufReader::new(File::open(path)?))?;
            let scenario = all
                .into_iter()
                .find(|s| s.is_external_test())
                .expect("scenario list always ends with the no-holdout entry");
            (scenario, Some(external))
        }
        _ => {
            return Err(Error::Config(
                "pass exactly one of --holdout GROUP or --external PATH".into(),
            ))
        }
    };
    if verbose {
        eprintln!("scenario {}: {} runs", scenario.name, args.runs);
    }
    let config = args.knobs.feature_config()?;
    let plan = args.knobs.run_plan(args.runs);
    let study = repeat_study(&table, &scenario, config, &plan, args.best_k, external.as_ref())?;
    std::fs::create_dir_all(&args.output_dir)?;
    let mut out = create(&args.output_dir.join("runs.csv"))?;
    write_runs_csv(&study.records, &mut out)?;
    out.flush()?;
    let mut out = create(&args.output_dir.join("stats.csv"))?;
    write_stats_csv(&study, &mut out)?;
    out.flush()?;
    println!(
        "{} runs on {}: mean test RMSE {:.4} dB, best-{} mean {:.4} dB",
        study.all.n_runs,
        scenario.name,
        study.all.test_rmse.mean,
        study.k,
        study.best_k.test_rmse.mean
    );
    Ok(())
}

fn cmd_scenarios(args: ScenariosArgs) -> Result<()> {
    let table = read_feature_table(BufReader::new(File::open(&args.input)?))?;
    let groups: Vec<String> = table.group_set().into_iter().collect();
    for scenario in build_scenarios(&groups)? {
        let train: Vec<&str> = scenario.train_groups.iter().map(String::as_str).collect();
        let test: Vec<&str> = scenario.test_groups.iter().map(String::as_str).collect();
        let test = if test.is_empty() { "(external)".to_string() } else { test.join("+") };
        println!("{}: train {} test {}", scenario.name, train.join("+"), test);
    }
    Ok(())
}
