//! `abcboost_train`: parse flags, train, and write the model and trainlog
//! into the working directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use abcboost_core::abc_boost::{self, AbcConfig, AbcTrainConfig};
use abcboost_core::binning::BinnerConfig;
use abcboost_core::logit_boost::{self, BoostKind, LogitConfig};
use abcboost_core::lp_boost::{self, LpConfig, LpLossSpec};
use abcboost_core::TrainProgress;

use crate::dataset;
use crate::error::CliError;
use crate::logfmt;
use crate::model_file::{self, Model};

pub const TRAIN_USAGE: &str =
    "usage: abcboost_train -method <regression|robustlogit|mart|abcrobustlogit|abcmart> \
-data <file> [-J <leaves>] [-v <shrinkage>] [-iter <n>] [-lp <p>] [-eps <tol>] \
[-data_max_n_bins <n>] [-search <s>] [-gap <g>] [-warmup <w>]";

#[derive(Debug, Clone, PartialEq)]
pub struct TrainArgs {
    pub method: String,
    pub data: PathBuf,
    pub j: usize,
    pub v: f64,
    pub iterations: usize,
    pub lp: Option<f64>,
    pub eps: Option<f64>,
    pub max_bin: u32,
    pub search: Option<usize>,
    pub gap: Option<usize>,
    pub warmup: Option<usize>,
}

fn parse_value<T: std::str::FromStr>(flag: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("bad value for {flag}: {value:?}")))
}

pub fn parse_train_args(args: &[String]) -> Result<TrainArgs, CliError> {
    let mut method = None;
    let mut data = None;
    let mut j = 20usize;
    let mut v = 0.1f64;
    let mut iterations = 1000usize;
    let mut lp = None;
    let mut eps = None;
    let mut max_bin = 1000u32;
    let mut search = None;
    let mut gap = None;
    let mut warmup = None;

    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let mut value = || {
            it.next()
                .ok_or_else(|| CliError::Usage(format!("{flag} needs a value\n{TRAIN_USAGE}")))
        };
        match flag.as_str() {
            "-method" => method = Some(value()?.clone()),
            "-data" => data = Some(PathBuf::from(value()?)),
            "-J" => j = parse_value(flag, value()?)?,
            "-v" => v = parse_value(flag, value()?)?,
            "-iter" => iterations = parse_value(flag, value()?)?,
            "-lp" => lp = Some(parse_value(flag, value()?)?),
            "-eps" => eps = Some(parse_value(flag, value()?)?),
            "-data_max_n_bins" => max_bin = parse_value(flag, value()?)?,
            "-search" => search = Some(parse_value(flag, value()?)?),
            "-gap" => gap = Some(parse_value(flag, value()?)?),
            "-warmup" => warmup = Some(parse_value(flag, value()?)?),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown flag {other}\n{TRAIN_USAGE}"
                )))
            }
        }
    }

    let method =
        method.ok_or_else(|| CliError::Usage(format!("-method is required\n{TRAIN_USAGE}")))?;
    let data = data.ok_or_else(|| CliError::Usage(format!("-data is required\n{TRAIN_USAGE}")))?;
    match method.as_str() {
        "regression" | "robustlogit" | "mart" | "abcrobustlogit" | "abcmart" => {}
        other => {
            return Err(CliError::Usage(format!(
                "unknown method {other:?}\n{TRAIN_USAGE}"
            )))
        }
    }
    if method != "regression" {
        if lp.is_some() {
            return Err(CliError::Usage(
                "-lp only applies to -method regression".into(),
            ));
        }
        if eps.is_some() {
            return Err(CliError::Usage(
                "-eps only applies to -method regression".into(),
            ));
        }
    }
    if !method.starts_with("abc") && (search.is_some() || gap.is_some() || warmup.is_some()) {
        return Err(CliError::Usage(
            "-search/-gap/-warmup only apply to abcrobustlogit and abcmart".into(),
        ));
    }

    Ok(TrainArgs {
        method,
        data,
        j,
        v,
        iterations,
        lp,
        eps,
        max_bin,
        search,
        gap,
        warmup,
    })
}

/// Paths written by a training run.
#[derive(Debug)]
pub struct TrainOutputs {
    pub model_path: PathBuf,
    pub trainlog_path: PathBuf,
    pub iterations_run: usize,
}

/// Buffers log lines during training; nothing is written unless training
/// succeeds, so a failed run leaves no files behind.
struct LogBuffer {
    lines: String,
    last: Instant,
    classification: bool,
    with_base: bool,
    count: usize,
}

impl LogBuffer {
    fn new(classification: bool, with_base: bool) -> Self {
        Self {
            lines: String::new(),
            last: Instant::now(),
            classification,
            with_base,
            count: 0,
        }
    }

    fn record(&mut self, progress: &TrainProgress) {
        let now = Instant::now();
        let seconds = now.duration_since(self.last).as_secs_f64();
        self.last = now;
        self.count = progress.iteration;
        let errors = if self.classification {
            progress.train_errors
        } else {
            None
        };
        let base = if self.with_base {
            Some(progress.base_class.map_or(-1, |b| b as i64))
        } else {
            None
        };
        self.lines.push_str(&logfmt::format_line(
            progress.iteration,
            progress.loss,
            errors,
            seconds,
            base,
        ));
        self.lines.push('\n');
    }
}

fn classification_kind(method: &str) -> BoostKind {
    if method.ends_with("mart") {
        BoostKind::Mart
    } else {
        BoostKind::RobustLogit
    }
}

/// Train per `args` and write `<data-basename>_<suffix>.model` and
/// `.trainlog` into `out_dir`.
pub fn run_train(args: &TrainArgs, out_dir: &Path) -> Result<TrainOutputs, CliError> {
    let data = dataset::load_auto(&args.data)?;
    let binner = BinnerConfig::with_max_bin(args.max_bin);
    let basename = args
        .data
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("bad data path {:?}", args.data)))?
        .to_string_lossy()
        .into_owned();
    let columns = data.to_columns();

    let (model, log) = match args.method.as_str() {
        "regression" => {
            let config = LpConfig {
                j: args.j,
                shrinkage: args.v,
                iterations: args.iterations,
                loss: LpLossSpec {
                    p: args.lp.unwrap_or(2.0),
                    epsilon: args.eps.unwrap_or(1e-5),
                },
                binner,
            };
            let mut log = LogBuffer::new(false, false);
            let trained =
                lp_boost::train_with_observer(&columns, data.labels(), &config, &mut |p| {
                    log.record(p)
                })?;
            (Model::Regression(trained), log)
        }
        "robustlogit" | "mart" => {
            let (label_values, labels) = data.class_mapping()?;
            let config = LogitConfig {
                j: args.j,
                shrinkage: args.v,
                iterations: args.iterations,
                kind: classification_kind(&args.method),
                binner,
            };
            let mut log = LogBuffer::new(true, false);
            let trained = logit_boost::train_with_observer(&columns, &labels, &config, &mut |p| {
                log.record(p)
            })?;
            (
                Model::Classification {
                    model: trained,
                    label_values,
                },
                log,
            )
        }
        "abcrobustlogit" | "abcmart" => {
            let (label_values, labels) = data.class_mapping()?;
            let config = AbcTrainConfig {
                j: args.j,
                shrinkage: args.v,
                iterations: args.iterations,
                kind: classification_kind(&args.method),
                abc: AbcConfig {
                    search: args.search.unwrap_or(1),
                    gap: args.gap.unwrap_or(0),
                    warmup: args.warmup.unwrap_or(0),
                },
                binner,
            };
            let mut log = LogBuffer::new(true, true);
            let trained =
                abc_boost::train_with_observer(&columns, &labels, &config, &mut |p| log.record(p))?;
            (
                Model::Classification {
                    model: trained,
                    label_values,
                },
                log,
            )
        }
        _ => unreachable!("method validated during parsing"),
    };

    let suffix = model.file_suffix();
    let model_path = out_dir.join(format!("{basename}_{suffix}.model"));
    let trainlog_path = out_dir.join(format!("{basename}_{suffix}.trainlog"));
    model_file::save(&model, &model_path)?;
    fs::write(&trainlog_path, &log.lines)?;
    Ok(TrainOutputs {
        model_path,
        trainlog_path,
        iterations_run: log.count,
    })
}

/// Entry point used by the `abcboost_train` binary: outputs go to the
/// current working directory.
pub fn train_main(args: &[String]) -> Result<TrainOutputs, CliError> {
    let parsed = parse_train_args(args)?;
    run_train(&parsed, Path::new("."))
}
