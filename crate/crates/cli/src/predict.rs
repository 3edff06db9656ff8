//! `abcboost_predict`: evaluate a saved model on a dataset, writing the
//! per-iteration testlog and the final predictions.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use abcboost_core::logit_boost::{argmax, softmax_into, PROB_CLAMP};

use crate::dataset::{self, SourceFormat};
use crate::error::CliError;
use crate::logfmt;
use crate::model_file::{self, Model};

pub const PREDICT_USAGE: &str =
    "usage: abcboost_predict -data <file> -model <file> [-iterations <m>] [-save_prob]";

#[derive(Debug, Clone, PartialEq)]
pub struct PredictArgs {
    pub data: PathBuf,
    pub model: PathBuf,
    pub iterations: Option<usize>,
    pub save_prob: bool,
}

pub fn parse_predict_args(args: &[String]) -> Result<PredictArgs, CliError> {
    let mut data = None;
    let mut model = None;
    let mut iterations = None;
    let mut save_prob = false;

    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let mut value = || {
            it.next()
                .ok_or_else(|| CliError::Usage(format!("{flag} needs a value\n{PREDICT_USAGE}")))
        };
        match flag.as_str() {
            "-data" => data = Some(PathBuf::from(value()?)),
            "-model" => model = Some(PathBuf::from(value()?)),
            "-iterations" => {
                iterations = Some(
                    value()?
                        .parse()
                        .map_err(|_| CliError::Usage("bad value for -iterations".into()))?,
                )
            }
            "-save_prob" => save_prob = true,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown flag {other}\n{PREDICT_USAGE}"
                )))
            }
        }
    }
    Ok(PredictArgs {
        data: data.ok_or_else(|| CliError::Usage(format!("-data is required\n{PREDICT_USAGE}")))?,
        model: model
            .ok_or_else(|| CliError::Usage(format!("-model is required\n{PREDICT_USAGE}")))?,
        iterations,
        save_prob,
    })
}

/// Paths written by a prediction run.
#[derive(Debug)]
pub struct PredictOutputs {
    pub testlog_path: PathBuf,
    pub prediction_path: PathBuf,
    pub probability_path: Option<PathBuf>,
}

fn float_str(x: f64) -> String {
    format!("{x}")
}

/// Evaluate the model on labeled data and write
/// `<data-basename>_<suffix>.testlog` / `.prediction` into `out_dir`.
pub fn run_predict(args: &PredictArgs, out_dir: &Path) -> Result<PredictOutputs, CliError> {
    let model = model_file::load(&args.model)?;
    let mut data = dataset::load_auto(&args.data)?;

    // Sparse files only reveal the largest mentioned feature index; widen
    // with zeros up to the model's width. Dense files must match exactly.
    if data.n_features() < model.n_features() && data.format() == SourceFormat::LibSvm {
        data.pad_features(model.n_features());
    }
    if data.n_features() != model.n_features() {
        return Err(CliError::Core(
            abcboost_core::CoreError::DimensionMismatch {
                expected: model.n_features(),
                got: data.n_features(),
            },
        ));
    }

    let total_iterations = model.n_iterations();
    let at_iteration = match args.iterations {
        None => total_iterations,
        Some(0) => return Err(CliError::Usage("-iterations must be at least 1".into())),
        Some(m) if m > total_iterations => {
            return Err(CliError::Usage(format!(
                "-iterations {m} exceeds the model's {total_iterations} iterations"
            )))
        }
        Some(m) => m,
    };

    let basename = args
        .data
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("bad data path {:?}", args.data)))?
        .to_string_lossy()
        .into_owned();

    let n = data.n_rows();
    let mut bins: Vec<Vec<u32>> = Vec::with_capacity(n);
    let mut testlog = String::new();
    let mut prediction = String::new();
    let mut probability: Option<String> = None;

    match &model {
        Model::Regression(m) => {
            let mut buf = Vec::new();
            for i in 0..n {
                m.bin_row(data.row(i), &mut buf)?;
                bins.push(buf.clone());
            }
            let mut scores = vec![0.0; n];
            let mut last = Instant::now();
            for it in 0..at_iteration {
                for (i, row_bins) in bins.iter().enumerate() {
                    m.apply_iteration(it, row_bins, &mut scores[i]);
                }
                let loss: f64 = data
                    .labels()
                    .iter()
                    .zip(&scores)
                    .map(|(&y, &f)| (y - f).abs().powf(m.p()))
                    .sum::<f64>()
                    / n as f64;
                let now = Instant::now();
                let seconds = now.duration_since(last).as_secs_f64();
                last = now;
                let _ = writeln!(
                    testlog,
                    "{}",
                    logfmt::format_line(it + 1, loss, None, seconds, None)
                );
            }
            for &f in &scores {
                let _ = writeln!(prediction, "{}", float_str(f));
            }
            if args.save_prob {
                return Err(CliError::Usage(
                    "-save_prob only applies to classification models".into(),
                ));
            }
        }
        Model::Classification {
            model: m,
            label_values,
        } => {
            let k = m.n_classes();
            // Map test labels onto the model's class indices for the metrics.
            let mut mapped = Vec::with_capacity(n);
            for (i, y) in data.labels().iter().enumerate() {
                let idx = label_values.partition_point(|v| v.total_cmp(y).is_lt());
                if idx >= k || label_values[idx] != *y {
                    return Err(CliError::Usage(format!(
                        "row {}: label {y} was not in the training labels",
                        i + 1
                    )));
                }
                mapped.push(idx);
            }
            let mut buf = Vec::new();
            for i in 0..n {
                m.bin_row(data.row(i), &mut buf)?;
                bins.push(buf.clone());
            }
            let mut scores = vec![0.0; n * k];
            let mut probs = vec![0.0; k];
            let mut last = Instant::now();
            for it in 0..at_iteration {
                let mut loss = 0.0;
                let mut errors = 0usize;
                for (i, row_bins) in bins.iter().enumerate() {
                    let row = &mut scores[i * k..(i + 1) * k];
                    m.apply_iteration(it, row_bins, row);
                    softmax_into(row, &mut probs);
                    loss -= probs[mapped[i]].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP).ln();
                    if argmax(row) != mapped[i] {
                        errors += 1;
                    }
                }
                let now = Instant::now();
                let seconds = now.duration_since(last).as_secs_f64();
                last = now;
                let _ = writeln!(
                    testlog,
                    "{}",
                    logfmt::format_line(it + 1, loss, Some(errors), seconds, None)
                );
            }
            let mut prob_out = args.save_prob.then(String::new);
            for i in 0..n {
                let row = &scores[i * k..(i + 1) * k];
                let _ = writeln!(prediction, "{}", float_str(label_values[argmax(row)]));
                if let Some(out) = prob_out.as_mut() {
                    softmax_into(row, &mut probs);
                    let joined: Vec<String> = probs.iter().map(|&p| float_str(p)).collect();
                    let _ = writeln!(out, "{}", joined.join(" "));
                }
            }
            probability = prob_out;
        }
    }

    let suffix = model.file_suffix();
    let testlog_path = out_dir.join(format!("{basename}_{suffix}.testlog"));
    let prediction_path = out_dir.join(format!("{basename}_{suffix}.prediction"));
    fs::write(&testlog_path, &testlog)?;
    fs::write(&prediction_path, &prediction)?;
    let probability_path = match probability {
        Some(text) => {
            let path = out_dir.join(format!("{basename}_{suffix}.probability"));
            fs::write(&path, text)?;
            Some(path)
        }
        None => None,
    };
    Ok(PredictOutputs {
        testlog_path,
        prediction_path,
        probability_path,
    })
}

/// Entry point used by the `abcboost_predict` binary: outputs go to the
/// current working directory.
pub fn predict_main(args: &[String]) -> Result<PredictOutputs, CliError> {
    let parsed = parse_predict_args(args)?;
    run_predict(&parsed, Path::new("."))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn to_args(cmd: &str) -> Vec<String> {
        cmd.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn parses_predict_flags() {
        let args = parse_predict_args(&to_args(
            "-data data/ijcnn1.test.csv -model ijcnn1.train.csv_robustlogit_J20_v0.1.model",
        ))
        .unwrap();
        assert_eq!(args.iterations, None);
        assert!(!args.save_prob);

        let args =
            parse_predict_args(&to_args("-data d -model m -iterations 50 -save_prob")).unwrap();
        assert_eq!(args.iterations, Some(50));
        assert!(args.save_prob);
    }

    #[test]
    fn rejects_missing_required_flags() {
        assert!(parse_predict_args(&to_args("-data d")).is_err());
        assert!(parse_predict_args(&to_args("-model m")).is_err());
        assert!(parse_predict_args(&to_args("-data d -model m -what 1")).is_err());
    }
}
