//! Command-line front door: `gen-data`, `train`, `craft`, `eval` and `sweep`.
//!
//! Every command takes `--config path.json`; values from the file fill in
//! whatever the flags leave unset. Exit codes: 0 on success, 1 on a runtime or
//! numerical failure, 2 on a usage or validation error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::attacks::{
    craft, craft_mini_uap, save_uap, uap_to_csv, AttackConfig, AttackKind, CraftMethod, Constraint,
    NormOrder, Uap, UapMode,
};
use crate::data::{
    gen_synthetic, loso_indices, read_trials, sidecar_path, within_subject_blocks, write_trials,
    FoldIndices, SplitKind, SynthConfig, TrialSet,
};
use crate::diffmodel::{fit_victim, load_model, save_model, ModelSpec, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate, evaluate_noisy, noise_baseline, report_csv, run_experiment, split_name, write_report,
    AttackSpec, EvalReport, ExperimentDescriptor, PlacementPolicy, ReportRow, VictimSpec, CLEAN,
};
use crate::rng::derive_seed;

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "uapforge", version, about = "Universal adversarial perturbations for multichannel trial classifiers")]
pub struct Cli {
    /// JSON configuration merged under the explicit flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic trial file and its sidecar.
    GenData(GenDataArgs),
    /// Train a victim model on one fold of a trial file.
    Train(TrainArgs),
    /// Craft a universal perturbation against a trained model.
    Craft(CraftArgs),
    /// Evaluate a model, optionally under perturbations, and write a report.
    Eval(EvalArgs),
    /// Run an experiment for every value of one parameter.
    Sweep(SweepArgs),
}

/// Contents of `--config`; every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub seed: Option<u64>,
    pub paths: Paths,
    pub synth: Option<SynthConfig>,
    pub train: Option<TrainConfig>,
    pub attack: Option<AttackConfig>,
    pub experiment: Option<ExperimentDescriptor>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub uap: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path.display().to_string(), e.to_string()))
    }
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub channels: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Trials per class for every subject.
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub subjects: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; receives `trials.eegb` and `trials.eegb.meta.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    SmallCnn,
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Loso,
    Within,
}

/// Which fold of which protocol a command works on.
#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, value_enum, default_value = "loso")]
    pub split: SplitArg,
    /// Held-out subject for `--split loso` (default: the last subject).
    #[arg(long)]
    pub test_subject: Option<u32>,
    /// Test block for `--split within`.
    #[arg(long, default_value_t = 0)]
    pub fold: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "small-cnn")]
    pub model: ModelArg,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Df,
    Tlm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    ChannelInvariant,
    Mini,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstraintArg {
    None,
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Inf,
    L2,
}

#[derive(Debug, Args)]
pub struct CraftArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Model JSON of the victim.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long, value_enum, default_value = "tlm")]
    pub method: MethodArg,
    /// Target class, or `none` for a non-target attack.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Template shape for `--mode mini`, e.g. `4x32`.
    #[arg(long)]
    pub mini_shape: Option<String>,
    #[arg(long, value_enum)]
    pub constraint: Option<ConstraintArg>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub xi: Option<f64>,
    /// Read `--xi` as a multiple of the training data's standard deviation.
    #[arg(long)]
    pub xi_relative: bool,
    #[arg(long, value_enum)]
    pub norm: Option<NormArg>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also export the perturbation as CSV, one row per channel.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Noise,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Perturbation files; one report row each.
    #[arg(long)]
    pub uap: Vec<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long, value_enum)]
    pub baseline: Option<BaselineArg>,
    /// Budget of the noise baseline.
    #[arg(long)]
    pub xi: Option<f64>,
    /// Random placements per trial for mini templates.
    #[arg(long, default_value_t = 30)]
    pub placements: usize,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path stem; writes `<stem>.csv` and `<stem>.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Xi,
    BatchSize,
    TrainSize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Comma-separated grid, e.g. `0.05,0.1,0.2`. `xi` is relative to the
    /// data standard deviation; `train-size` is a fraction of the training fold.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[arg(long, value_enum, default_value = "tlm")]
    pub method: MethodArg,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// 1 for numerical failures, 2 for everything the caller can fix.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Numerical { .. } | Error::DegenerateGradient { .. } => EXIT_RUNTIME,
        _ => EXIT_USAGE,
    }
}

/// Runs a parsed command and returns what it prints on success.
pub fn run(cli: Cli) -> Result<String> {
    let config = match &cli.config {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    };
    match cli.command {
        Command::GenData(a) => cmd_gen_data(&a, &config),
        Command::Train(a) => cmd_train(&a, &config),
        Command::Craft(a) => cmd_craft(&a, &config),
        Command::Eval(a) => cmd_eval(&a, &config),
        Command::Sweep(a) => cmd_sweep(&a, &config),
    }
}

fn required(flag: Option<PathBuf>, config: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| config.clone())
        .ok_or_else(|| Error::invalid(format!("--{name} is required")))
}

fn existing(path: PathBuf) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::invalid(format!("file not found: {}", path.display())))
    }
}

fn seed_of(flag: Option<u64>, config: &CliConfig) -> u64 {
    flag.or(config.seed).unwrap_or(0)
}

fn parse_target(s: Option<&str>) -> Result<AttackKind> {
    match s {
        None | Some("none") => Ok(AttackKind::NonTarget),
        Some(v) => v
            .parse()
            .map(AttackKind::Target)
            .map_err(|_| Error::invalid(format!("--target expects a class index or `none`, got `{v}`"))),
    }
}

fn parse_shape(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::invalid(format!("--mini-shape expects CxT, got `{s}`"));
    let (c, t) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((c.trim().parse().map_err(|_| bad())?, t.trim().parse().map_err(|_| bad())?))
}

pub fn cmd_gen_data(a: &GenDataArgs, config: &CliConfig) -> Result<String> {
    let base = config.synth.clone().unwrap_or_default();
    let cfg = SynthConfig {
        num_classes: a.classes.unwrap_or(base.num_classes),
        channels: a.channels.unwrap_or(base.channels),
        samples: a.samples.unwrap_or(base.samples),
        trials_per_class: a.per_class.unwrap_or(base.trials_per_class),
        num_subjects: a.subjects.unwrap_or(base.num_subjects),
        noise_sigma: a.noise_sigma.unwrap_or(base.noise_sigma),
        seed: a.seed.or(config.seed).unwrap_or(base.seed),
        ..base
    };
    cfg.validate()?;
    let dir = required(a.out.clone(), &config.paths.data, "out")?;
    let set = gen_synthetic(&cfg)?;
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let path = dir.join("trials.eegb");
    write_trials(&set, &path)?;
    Ok(format!(
        "wrote {} and {}\nn={} C={} T={} K={}\n",
        path.display(),
        sidecar_path(&path).display(),
        set.len(),
        set.channels(),
        set.samples(),
        set.num_classes()
    ))
}

fn fold_of(set: &TrialSet, split: &SplitArgs, seed: u64) -> Result<FoldIndices> {
    match split.split {
        SplitArg::Loso => {
            let ids = set.subject_ids();
            let subject = match split.test_subject {
                Some(s) => s,
                None => *ids.last().ok_or_else(|| Error::invalid("data file holds no trials"))?,
            };
            loso_indices(set, subject, derive_seed(seed, "split"))
        }
        SplitArg::Within => within_subject_blocks(set)?.within_fold(split.fold),
    }
}

fn split_kind(split: &SplitArgs) -> SplitKind {
    match split.split {
        SplitArg::Loso => SplitKind::LeaveOneSubjectOut,
        SplitArg::Within => SplitKind::WithinSubjectBlocks,
    }
}

struct Folded {
    train: TrialSet,
    val: TrialSet,
    test: TrialSet,
}

fn load_fold(path: PathBuf, split: &SplitArgs, seed: u64) -> Result<Folded> {
    let set = read_trials(existing(path)?)?;
    let f = fold_of(&set, split, seed)?;
    Ok(Folded {
        train: set.subset(&f.train),
        val: set.subset(&f.val),
        test: set.subset(&f.test),
    })
}

pub fn cmd_train(a: &TrainArgs, config: &CliConfig) -> Result<String> {
    let seed = seed_of(a.seed, config);
    let base = config.train.clone().unwrap_or_default();
    let cfg = TrainConfig {
        learning_rate: a.lr.unwrap_or(base.learning_rate),
        max_epochs: a.epochs.unwrap_or(base.max_epochs),
        batch_size: a.batch_size.unwrap_or(base.batch_size),
        patience: a.patience.unwrap_or(base.patience),
        seed,
        ..base
    };
    cfg.validate()?;
    let data = required(a.data.clone(), &config.paths.data, "data")?;
    let out = required(a.out.clone(), &config.paths.model, "out")?;
    let fold = load_fold(data, &a.split, seed)?;
    let (c, t) = fold.train.shape();
    let k = fold.train.num_classes();
    let spec = match a.model {
        ModelArg::SmallCnn => ModelSpec::small_cnn(c, t, k),
        ModelArg::Affine => ModelSpec::affine(c, t, k),
    };
    let (params, report) = fit_victim(&spec, &fold.train, &fold.val, &cfg)?;
    save_model(&params, &out)?;
    let val = evaluate(&params, &fold.val, None, None, PlacementPolicy::default())?;
    let test = evaluate(&params, &fold.test, None, None, PlacementPolicy::default())?;
    Ok(format!(
        "wrote {}\nepochs={} best_epoch={} stopped_early={}\nvalidation rca={:.6} bca={:.6}\ntest rca={:.6} bca={:.6}\n",
        out.display(),
        report.epochs_run,
        report.best_epoch,
        report.stopped_early,
        val.rca,
        val.bca,
        test.rca,
        test.bca
    ))
}

pub fn cmd_craft(a: &CraftArgs, config: &CliConfig) -> Result<String> {
    let seed = seed_of(a.seed, config);
    let kind = parse_target(a.target.as_deref())?;
    let method = match a.method {
        MethodArg::Df => CraftMethod::DeepFool,
        MethodArg::Tlm => CraftMethod::Tlm,
    };
    if method == CraftMethod::DeepFool && matches!(kind, AttackKind::Target(_)) {
        return Err(Error::invalid("--method df supports non-target attacks only; drop --target or use --method tlm"));
    }
    let base = config.attack.clone().unwrap_or_else(|| match method {
        CraftMethod::DeepFool => AttackConfig::deepfool_uap(),
        CraftMethod::Tlm => AttackConfig::tlm(),
    });
    let mode = match a.mode {
        Some(ModeArg::Full) => UapMode::Full,
        Some(ModeArg::ChannelInvariant) => UapMode::ChannelInvariant,
        Some(ModeArg::Mini) => UapMode::Mini,
        None => base.mode,
    };
    if mode != UapMode::Full && method == CraftMethod::DeepFool {
        return Err(Error::invalid("--method df crafts full perturbations only"));
    }
    let mini_shape = match (mode, a.mini_shape.as_deref()) {
        (UapMode::Mini, Some(s)) => Some(parse_shape(s)?),
        (UapMode::Mini, None) => return Err(Error::invalid("--mode mini needs --mini-shape CxT")),
        (_, Some(_)) => return Err(Error::invalid("--mini-shape only applies to --mode mini")),
        _ => None,
    };
    let data = required(a.data.clone(), &config.paths.data, "data")?;
    let model = existing(required(a.model.clone(), &config.paths.model, "model")?)?;
    let out = required(a.out.clone(), &config.paths.uap, "out")?;
    let fold = load_fold(data, &a.split, seed)?;
    let params = load_model(model)?;
    let mut cfg = AttackConfig {
        kind,
        mode: if mode == UapMode::Mini { UapMode::Full } else { mode },
        constraint: match a.constraint {
            Some(ConstraintArg::None) => Constraint::None,
            Some(ConstraintArg::L1) => Constraint::L1,
            Some(ConstraintArg::L2) => Constraint::L2,
            None => base.constraint,
        },
        norm: match a.norm {
            Some(NormArg::Inf) => NormOrder::Inf,
            Some(NormArg::L2) => NormOrder::L2,
            None => base.norm,
        },
        alpha: a.alpha.unwrap_or(base.alpha),
        xi: a.xi.unwrap_or(base.xi),
        max_iter: a.max_iter.unwrap_or(base.max_iter),
        delta: a.delta.unwrap_or(base.delta),
        batch_size: a.batch_size.unwrap_or(base.batch_size),
        learning_rate: a.lr.or(base.learning_rate),
        seed,
        ..base
    };
    if a.xi_relative {
        cfg.xi *= fold.train.value_std();
    }
    cfg.validate()?;
    let result = match mini_shape {
        Some(shape) => craft_mini_uap(&params, &fold.train, &fold.val, &cfg, shape)?,
        None => craft(method, &params, &fold.train, &fold.val, &cfg)?,
    };
    save_uap(&result.uap, &out)?;
    if let Some(csv) = &a.csv {
        fs::write(csv, uap_to_csv(&result.uap)).map_err(|e| Error::io(csv, e))?;
    }
    let metric = match (method, kind) {
        (CraftMethod::DeepFool, _) => "training asr",
        (_, AttackKind::NonTarget) => "validation asr",
        (_, AttackKind::Target(_)) => "validation target rate",
    };
    Ok(format!(
        "wrote {}\nxi={:.6} iterations={}\n{metric}={:.6}\n",
        out.display(),
        cfg.xi,
        result.iterations_run,
        result.best_validation_metric
    ))
}

fn row(cell: String, split: SplitKind, attack: &str, report: EvalReport) -> ReportRow {
    ReportRow {
        cell,
        dataset: "file".into(),
        split: split_name(split).into(),
        victim: "model".into(),
        attack: attack.into(),
        folds: vec![report.clone()],
        report,
    }
}

pub fn cmd_eval(a: &EvalArgs, config: &CliConfig) -> Result<String> {
    let seed = seed_of(a.seed, config);
    if a.placements == 0 {
        return Err(Error::invalid("--placements must be positive"));
    }
    let target = match parse_target(a.target.as_deref())? {
        AttackKind::Target(t) => Some(t),
        AttackKind::NonTarget => None,
    };
    let data = required(a.data.clone(), &config.paths.data, "data")?;
    let model = existing(required(a.model.clone(), &config.paths.model, "model")?)?;
    let fold = load_fold(data, &a.split, seed)?;
    let params = load_model(model)?;
    let kind = split_kind(&a.split);
    let policy = PlacementPolicy::Random {
        count: a.placements,
        seed: derive_seed(seed, "eval-placements"),
    };
    let mut rows = vec![row(
        format!("model/{CLEAN}"),
        kind,
        CLEAN,
        evaluate(&params, &fold.test, None, target, policy)?,
    )];
    if let Some(BaselineArg::Noise) = a.baseline {
        let xi = a
            .xi
            .or(config.attack.as_ref().map(|c| c.xi))
            .unwrap_or(AttackConfig::default().xi);
        let noisy = noise_baseline(&fold.test, xi, derive_seed(seed, "noise"))?;
        rows.push(row("model/noise".into(), kind, "noise", evaluate_noisy(&params, &fold.test, &noisy, target)?));
    }
    let uaps: Vec<PathBuf> = if a.uap.is_empty() {
        config.paths.uap.iter().cloned().collect()
    } else {
        a.uap.clone()
    };
    for path in uaps {
        let uap: Uap = crate::attacks::load_uap(existing(path.clone())?)?;
        let (c, t) = fold.test.shape();
        uap.check_fits(c, t, None).or_else(|e| match uap.mode() {
            UapMode::Mini => Ok(()),
            _ => Err(e),
        })?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "uap".into());
        let report = evaluate(&params, &fold.test, Some(&uap), target, policy)?;
        rows.push(row(format!("model/{name}"), kind, &name, report));
    }
    let csv = report_csv(&rows);
    if let Some(stem) = a.out.clone().or_else(|| config.paths.report.clone()) {
        write_report(&rows, &stem)?;
    }
    Ok(csv)
}

pub fn cmd_sweep(a: &SweepArgs, config: &CliConfig) -> Result<String> {
    let seed = seed_of(a.seed, config);
    let mut base = config.experiment.clone().unwrap_or_default();
    base.seed = seed;
    if let Some(n) = a.folds {
        base.max_folds = Some(n);
    } else if base.max_folds.is_none() {
        base.max_folds = Some(1);
    }
    if base.victims.is_empty() {
        base.victims = vec![VictimSpec {
            name: "small_cnn".into(),
            spec: ModelSpec::small_cnn(base.data.channels, base.data.samples, base.data.num_classes),
        }];
    }
    let method = match a.method {
        MethodArg::Df => CraftMethod::DeepFool,
        MethodArg::Tlm => CraftMethod::Tlm,
    };
    let attack = config.attack.clone().unwrap_or_else(|| match method {
        CraftMethod::DeepFool => AttackConfig::deepfool_uap(),
        CraftMethod::Tlm => AttackConfig::tlm(),
    });
    let name = match a.param {
        SweepParam::Xi => "xi",
        SweepParam::BatchSize => "batch_size",
        SweepParam::TrainSize => "train_size",
    };
    let mut out = String::from("param,value,victim,attack,clean_rca,rca,bca,asr,target_rate,spr_db,n\n");
    for &value in &a.values {
        let mut desc = base.clone();
        let mut cfg = AttackConfig { xi: 0.2, ..attack.clone() };
        desc.xi_relative_to_std = true;
        match a.param {
            SweepParam::Xi => cfg.xi = value,
            SweepParam::BatchSize => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::invalid(format!("batch size must be a positive integer, got {value}")));
                }
                cfg.batch_size = value as usize;
            }
            SweepParam::TrainSize => desc.craft_fraction = value,
        }
        desc.attacks = vec![AttackSpec::WhiteBox {
            name: "uap".into(),
            method,
            config: cfg,
        }];
        let rows = run_experiment(&desc)?;
        for pair in rows.chunks(2) {
            let (clean, r) = (&pair[0].report, &pair[1].report);
            let _ = writeln!(
                out,
                "{name},{value},{},{},{:.6},{:.6},{:.6},{:.6},{},{:.6},{}",
                pair[1].victim,
                pair[1].attack,
                clean.rca,
                r.rca,
                r.bca,
                r.asr,
                r.target_rate.map(|v| format!("{v:.6}")).unwrap_or_default(),
                r.spr_db,
                r.n
            );
        }
    }
    if let Some(path) = &a.out {
        fs::write(path, &out).map_err(|e| Error::io(path, e))?;
    }
    Ok(out)
}
