//! End-to-end checks of the train/predict tools: file naming, log formats,
//! round-trips, and determinism.

use std::fs;
use std::path::{Path, PathBuf};

use abcboost_cli::logfmt;
use abcboost_cli::model_file::{self, Model};
use abcboost_cli::predict::{parse_predict_args, run_predict};
use abcboost_cli::train::{parse_train_args, run_train};
use abcboost_core::rng::SplitMix64;

fn args(cmd: &str) -> Vec<String> {
    cmd.split_whitespace().map(str::to_string).collect()
}

fn train_in(dir: &Path, cmd: &str) -> abcboost_cli::train::TrainOutputs {
    run_train(&parse_train_args(&args(cmd)).unwrap(), dir).unwrap()
}

fn predict_in(dir: &Path, cmd: &str) -> abcboost_cli::predict::PredictOutputs {
    run_predict(&parse_predict_args(&args(cmd)).unwrap(), dir).unwrap()
}

/// Three-class synthetic CSV with the label in the first column.
fn write_multiclass_csv(path: &Path, n: usize, seed: u64) {
    let mut rng = SplitMix64::new(seed);
    let centers = [(0.0, 0.0), (3.0, 0.0), (1.0, 4.0)];
    let mut text = String::new();
    for i in 0..n {
        let c = i % 3;
        let x = centers[c].0 + rng.next_f64() * 2.0;
        let y = centers[c].1 + rng.next_f64() * 2.0;
        // Original labels deliberately not 0..K-1.
        text.push_str(&format!("{},{x},{y}\n", (c as f64) * 2.0 + 1.0));
    }
    fs::write(path, text).unwrap();
}

fn write_regression_csv(path: &Path, n: usize, seed: u64) {
    let mut rng = SplitMix64::new(seed);
    let mut text = String::new();
    for _ in 0..n {
        let x0 = rng.next_f64() * 10.0;
        let x1 = rng.next_f64() * 10.0;
        let y = 3.0 * x0 - x1 + rng.next_f64();
        text.push_str(&format!("{y},{x0},{x1}\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn regression_run_creates_the_published_file_names() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("comp_cpu.train.csv");
    write_regression_csv(&data, 80, 1);
    let out = train_in(
        dir.path(),
        &format!(
            "-method regression -lp 2 -data {} -J 20 -v 0.1 -iter 10 -data_max_n_bins 1000",
            data.display()
        ),
    );
    assert_eq!(
        out.model_path.file_name().unwrap().to_str().unwrap(),
        "comp_cpu.train.csv_regression_J20_v0.1_p2.model"
    );
    assert_eq!(
        out.trainlog_path.file_name().unwrap().to_str().unwrap(),
        "comp_cpu.train.csv_regression_J20_v0.1_p2.trainlog"
    );
    assert!(out.model_path.exists() && out.trainlog_path.exists());
}

#[test]
fn robustlogit_run_creates_the_published_file_names() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("ijcnn1.train.csv");
    // Binary data under the dataset's name; only the naming is under test.
    let mut rng = SplitMix64::new(5);
    let mut text = String::new();
    for i in 0..60 {
        let x = i as f64 + rng.next_f64();
        text.push_str(&format!("{},{x}\n", if i < 30 { -1 } else { 1 }));
    }
    fs::write(&data, text).unwrap();

    let out = train_in(
        dir.path(),
        &format!(
            "-method robustlogit -data {} -J 20 -v 0.1 -iter 5 -data_max_n_bins 1000",
            data.display()
        ),
    );
    assert_eq!(
        out.model_path.file_name().unwrap().to_str().unwrap(),
        "ijcnn1.train.csv_robustlogit_J20_v0.1.model"
    );
    let predict = predict_in(
        dir.path(),
        &format!(
            "-data {} -model {}",
            data.display(),
            out.model_path.display()
        ),
    );
    assert_eq!(
        predict.testlog_path.file_name().unwrap().to_str().unwrap(),
        "ijcnn1.train.csv_robustlogit_J20_v0.1.testlog"
    );
    assert_eq!(
        predict
            .prediction_path
            .file_name()
            .unwrap()
            .to_str()
            .unwrap(),
        "ijcnn1.train.csv_robustlogit_J20_v0.1.prediction"
    );
}

#[test]
fn abc_run_creates_the_published_file_names() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("covtype.train.csv");
    write_multiclass_csv(&data, 90, 7);
    let out = train_in(
        dir.path(),
        &format!(
            "-method abcrobustlogit -data {} -J 20 -v 0.1 -iter 6 -search 2 -gap 10",
            data.display()
        ),
    );
    assert_eq!(
        out.model_path.file_name().unwrap().to_str().unwrap(),
        "covtype.train.csv_abcrobustlogit2g10_J20_v0.1_w0.model"
    );
}

#[test]
fn invalid_j_leaves_no_files_behind() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("tiny.csv");
    write_regression_csv(&data, 20, 2);
    let result = run_train(
        &parse_train_args(&args(&format!(
            "-method regression -data {} -J 0",
            data.display()
        )))
        .unwrap(),
        dir.path(),
    );
    assert!(result.is_err());
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|name| name != "tiny.csv")
        .collect();
    assert!(leftovers.is_empty(), "unexpected files: {leftovers:?}");
}

#[test]
fn trainlog_is_parseable_and_counts_from_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("m.csv");
    write_multiclass_csv(&data, 120, 3);
    let out = train_in(
        dir.path(),
        &format!("-method robustlogit -data {} -J 4 -iter 7", data.display()),
    );
    let text = fs::read_to_string(&out.trainlog_path).unwrap();
    let mut expected = 1;
    for line in text.lines() {
        let rec = logfmt::parse_line(line, true).unwrap();
        assert_eq!(rec.iteration, expected);
        assert!(rec.errors.is_some());
        assert!(rec.loss.is_finite() && rec.seconds >= 0.0);
        expected += 1;
    }
    assert_eq!(expected, 8);
}

#[test]
fn abc_trainlog_records_base_class_column() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("m.csv");
    write_multiclass_csv(&data, 120, 9);
    let out = train_in(
        dir.path(),
        &format!(
            "-method abcrobustlogit -data {} -J 4 -iter 6 -search 3 -gap 1 -warmup 2",
            data.display()
        ),
    );
    let text = fs::read_to_string(&out.trainlog_path).unwrap();
    let records: Vec<_> = text
        .lines()
        .map(|l| logfmt::parse_line(l, true).unwrap())
        .collect();
    assert_eq!(records.len(), 6);
    for rec in &records[..2] {
        assert_eq!(rec.base_class, Some(-1), "warm-up rows carry -1");
    }
    for rec in &records[2..] {
        let b = rec.base_class.unwrap();
        assert!((0..3).contains(&b), "committed base in range, got {b}");
    }
}

#[test]
fn predicting_the_training_file_reproduces_the_trainlog() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("m.csv");
    write_multiclass_csv(&data, 150, 11);
    let out = train_in(
        dir.path(),
        &format!("-method robustlogit -data {} -J 5 -iter 12", data.display()),
    );
    let predict = predict_in(
        dir.path(),
        &format!(
            "-data {} -model {}",
            data.display(),
            out.model_path.display()
        ),
    );
    let train_records: Vec<_> = fs::read_to_string(&out.trainlog_path)
        .unwrap()
        .lines()
        .map(|l| logfmt::parse_line(l, true).unwrap())
        .collect();
    let test_records: Vec<_> = fs::read_to_string(&predict.testlog_path)
        .unwrap()
        .lines()
        .map(|l| logfmt::parse_line(l, true).unwrap())
        .collect();
    assert_eq!(train_records.len(), test_records.len());
    for (a, b) in train_records.iter().zip(&test_records) {
        assert_eq!(a.iteration, b.iteration);
        assert_eq!(a.errors, b.errors, "iteration {}", a.iteration);
        assert_eq!(a.loss, b.loss, "iteration {}", a.iteration);
    }
}

#[test]
fn regression_testlog_on_training_data_reproduces_trainlog_losses() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("r.csv");
    write_regression_csv(&data, 90, 53);
    let out = train_in(
        dir.path(),
        &format!("-method regression -data {} -J 4 -iter 15", data.display()),
    );
    let predict = predict_in(
        dir.path(),
        &format!(
            "-data {} -model {}",
            data.display(),
            out.model_path.display()
        ),
    );
    let losses = |path: &std::path::Path, classification: bool| -> Vec<f64> {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| logfmt::parse_line(l, classification).unwrap().loss)
            .collect()
    };
    assert_eq!(
        losses(&out.trainlog_path, false),
        losses(&predict.testlog_path, false)
    );
}

#[test]
fn truncated_prediction_matches_full_testlog_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("m.csv");
    write_multiclass_csv(&data, 100, 13);
    let test = dir.path().join("t.csv");
    write_multiclass_csv(&test, 40, 14);
    let out = train_in(
        dir.path(),
        &format!("-method robustlogit -data {} -J 4 -iter 10", data.display()),
    );

    let full_dir = tempfile::tempdir().unwrap();
    let full = predict_in(
        full_dir.path(),
        &format!(
            "-data {} -model {}",
            test.display(),
            out.model_path.display()
        ),
    );
    let full_records: Vec<_> = fs::read_to_string(&full.testlog_path)
        .unwrap()
        .lines()
        .map(|l| logfmt::parse_line(l, true).unwrap())
        .collect();

    for m in [1usize, 4, 10] {
        let trunc_dir = tempfile::tempdir().unwrap();
        let trunc = predict_in(
            trunc_dir.path(),
            &format!(
                "-data {} -model {} -iterations {m}",
                test.display(),
                out.model_path.display()
            ),
        );
        let trunc_records: Vec<_> = fs::read_to_string(&trunc.testlog_path)
            .unwrap()
            .lines()
            .map(|l| logfmt::parse_line(l, true).unwrap())
            .collect();
        assert_eq!(trunc_records.len(), m);
        assert_eq!(trunc_records[m - 1].loss, full_records[m - 1].loss);
        assert_eq!(trunc_records[m - 1].errors, full_records[m - 1].errors);
    }
}

#[test]
fn model_file_round_trip_preserves_predictions_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("m.csv");
    write_multiclass_csv(&data, 90, 17);
    let out = train_in(
        dir.path(),
        &format!(
            "-method abcrobustlogit -data {} -J 4 -iter 8 -search 3 -gap 0",
            data.display()
        ),
    );

    let bytes = fs::read(&out.model_path).unwrap();
    let loaded = model_file::load(&out.model_path).unwrap();
    let resaved = model_file::to_string(&loaded);
    assert_eq!(
        bytes,
        resaved.into_bytes(),
        "save -> load -> save must be byte-identical"
    );

    let reloaded = model_file::load(&out.model_path).unwrap();
    let (Model::Classification { model: a, .. }, Model::Classification { model: b, .. }) =
        (&loaded, &reloaded)
    else {
        panic!("expected classification models")
    };
    let mut rng = SplitMix64::new(23);
    for _ in 0..100 {
        let row = [rng.next_f64() * 5.0, rng.next_f64() * 6.0];
        assert_eq!(a.score_row(&row).unwrap(), b.score_row(&row).unwrap());
    }
}

#[test]
fn repeated_runs_are_deterministic_up_to_seconds() {
    let data_dir = tempfile::tempdir().unwrap();
    let data = data_dir.path().join("m.csv");
    write_multiclass_csv(&data, 120, 19);

    let run = |dir: &Path| {
        train_in(
            dir,
            &format!(
                "-method abcrobustlogit -data {} -J 5 -iter 9 -search 2 -gap 2",
                data.display()
            ),
        )
    };
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let out_a = run(dir_a.path());
    let out_b = run(dir_b.path());

    assert_eq!(
        fs::read(&out_a.model_path).unwrap(),
        fs::read(&out_b.model_path).unwrap(),
        "model files must be byte-identical"
    );

    let strip_seconds = |path: &PathBuf| -> Vec<Vec<String>> {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| {
                let mut cols: Vec<String> = l.split_whitespace().map(str::to_string).collect();
                cols.remove(3); // seconds column: iter loss errors seconds base
                cols
            })
            .collect()
    };
    assert_eq!(
        strip_seconds(&out_a.trainlog_path),
        strip_seconds(&out_b.trainlog_path)
    );
}

#[test]
fn save_prob_writes_row_stochastic_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("m.csv");
    write_multiclass_csv(&data, 90, 29);
    let out = train_in(
        dir.path(),
        &format!("-method robustlogit -data {} -J 4 -iter 5", data.display()),
    );
    let predict = predict_in(
        dir.path(),
        &format!(
            "-data {} -model {} -save_prob",
            data.display(),
            out.model_path.display()
        ),
    );
    let prob_path = predict
        .probability_path
        .expect("probability file requested");
    let text = fs::read_to_string(prob_path).unwrap();
    let mut rows = 0;
    for line in text.lines() {
        let probs: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(probs.len(), 3);
        let total: f64 = probs.iter().sum();
        assert!((total - 1.0).abs() <= 1e-12);
        rows += 1;
    }
    assert_eq!(rows, 90);
}

#[test]
fn prediction_file_reports_original_labels() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("m.csv");
    write_multiclass_csv(&data, 120, 31);
    let out = train_in(
        dir.path(),
        &format!("-method robustlogit -data {} -J 4 -iter 25", data.display()),
    );
    let predict = predict_in(
        dir.path(),
        &format!(
            "-data {} -model {}",
            data.display(),
            out.model_path.display()
        ),
    );
    let text = fs::read_to_string(&predict.prediction_path).unwrap();
    for line in text.lines() {
        let label: f64 = line.parse().unwrap();
        assert!(
            label == 1.0 || label == 3.0 || label == 5.0,
            "predictions report original label values, got {label}"
        );
    }
}

#[test]
fn dimension_mismatch_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("m.csv");
    write_multiclass_csv(&data, 60, 37);
    let out = train_in(
        dir.path(),
        &format!("-method robustlogit -data {} -J 4 -iter 3", data.display()),
    );
    let wide = dir.path().join("wide.csv");
    fs::write(&wide, "1,0.5,0.5,0.5\n3,0.2,0.2,0.2\n").unwrap();
    let result = run_predict(
        &parse_predict_args(&args(&format!(
            "-data {} -model {}",
            wide.display(),
            out.model_path.display()
        )))
        .unwrap(),
        dir.path(),
    );
    assert!(result.is_err());
}

#[test]
fn comp_cpu_csv_loads_with_paper_row_count() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/comp_cpu.train.csv");
    let ds = abcboost_cli::dataset::load_csv(&path).unwrap();
    assert_eq!(ds.n_rows(), 4096);
    assert_eq!(ds.n_features(), 21);
    let binned = abcboost_core::binning::fit_dataset(
        &ds.to_columns(),
        &abcboost_core::binning::BinnerConfig::with_max_bin(1000),
    )
    .unwrap();
    for f in 0..binned.n_features() {
        assert!(binned.map(f).n_bins() <= 1001);
    }
}

#[test]
fn mart_and_abcmart_methods_train_and_name_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("m.csv");
    write_multiclass_csv(&data, 90, 41);
    let mart = train_in(
        dir.path(),
        &format!("-method mart -data {} -J 4 -iter 4", data.display()),
    );
    assert_eq!(
        mart.model_path.file_name().unwrap().to_str().unwrap(),
        "m.csv_mart_J4_v0.1.model"
    );
    let abcmart = train_in(
        dir.path(),
        &format!(
            "-method abcmart -data {} -J 4 -iter 4 -search 2 -gap 1 -warmup 1",
            data.display()
        ),
    );
    assert_eq!(
        abcmart.model_path.file_name().unwrap().to_str().unwrap(),
        "m.csv_abcmart2g1_J4_v0.1_w1.model"
    );
    let out = predict_in(
        dir.path(),
        &format!(
            "-data {} -model {}",
            data.display(),
            abcmart.model_path.display()
        ),
    );
    assert!(out.prediction_path.exists());
}

#[test]
fn regression_truncated_prediction_matches_prefix_scores() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("r.csv");
    write_regression_csv(&data, 70, 43);
    let out = train_in(
        dir.path(),
        &format!("-method regression -data {} -J 4 -iter 10", data.display()),
    );

    let trunc_dir = tempfile::tempdir().unwrap();
    let trunc = predict_in(
        trunc_dir.path(),
        &format!(
            "-data {} -model {} -iterations 3",
            data.display(),
            out.model_path.display()
        ),
    );
    let testlog = fs::read_to_string(&trunc.testlog_path).unwrap();
    assert_eq!(testlog.lines().count(), 3);

    let Model::Regression(model) = model_file::load(&out.model_path).unwrap() else {
        panic!("expected regression model")
    };
    let ds = abcboost_cli::dataset::load_csv(&data).unwrap();
    let predictions: Vec<f64> = fs::read_to_string(&trunc.prediction_path)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    for i in 0..ds.n_rows() {
        assert_eq!(
            predictions[i],
            model.predict_row_at(ds.row(i), 3).unwrap(),
            "row {i}"
        );
    }
}

#[test]
fn binaries_report_success_and_failure_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("b.csv");
    write_regression_csv(&data, 40, 47);

    let train_exe = env!("CARGO_BIN_EXE_abcboost_train");
    let ok = std::process::Command::new(train_exe)
        .current_dir(dir.path())
        .args([
            "-method",
            "regression",
            "-data",
            data.to_str().unwrap(),
            "-J",
            "4",
            "-iter",
            "3",
        ])
        .output()
        .unwrap();
    assert!(
        ok.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let model_path = dir.path().join("b.csv_regression_J4_v0.1_p2.model");
    assert!(model_path.exists());

    let bad = std::process::Command::new(train_exe)
        .current_dir(dir.path())
        .args([
            "-method",
            "regression",
            "-data",
            data.to_str().unwrap(),
            "-bogus",
            "1",
        ])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown flag"));

    let predict_exe = env!("CARGO_BIN_EXE_abcboost_predict");
    let ok = std::process::Command::new(predict_exe)
        .current_dir(dir.path())
        .args([
            "-data",
            data.to_str().unwrap(),
            "-model",
            model_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        ok.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&ok.stderr)
    );
    assert!(dir
        .path()
        .join("b.csv_regression_J4_v0.1_p2.prediction")
        .exists());

    let missing = std::process::Command::new(predict_exe)
        .current_dir(dir.path())
        .args(["-data", data.to_str().unwrap(), "-model", "no-such.model"])
        .output()
        .unwrap();
    assert!(!missing.status.success());
    assert!(!String::from_utf8_lossy(&missing.stderr).trim().is_empty());
}

#[test]
#[ignore = "needs data/ijcnn1.* (see README: fetching the benchmark datasets)"]
fn ijcnn1_libsvm_loads_with_paper_row_counts() {
    let data_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let train = abcboost_cli::dataset::load_libsvm(data_dir.join("ijcnn1.train.libsvm")).unwrap();
    let test = abcboost_cli::dataset::load_libsvm(data_dir.join("ijcnn1.test.libsvm")).unwrap();
    assert_eq!(train.n_rows(), 49990);
    assert_eq!(test.n_rows(), 91701);
}
