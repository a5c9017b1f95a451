//! End-to-end checks of the command-line interface.

use std::path::Path;
use std::process::{Command, Output};

use uapforge::attacks::load_uap;
use uapforge::data::read_trials;
use uapforge::diffmodel::load_model;

fn uapforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uapforge")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = uapforge(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, classes: &str, seed: &str) {
    ok(&[
        "gen-data", "--classes", classes, "--channels", "8", "--samples", "64", "--per-class", "40",
        "--subjects", "4", "--seed", seed, "--out", s(dir),
    ]);
}

fn printed(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.split_whitespace().find_map(|w| w.strip_prefix(&format!("{key}="))))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn gen_data_writes_both_files_and_is_byte_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = ok(&[
        "gen-data", "--classes", "2", "--channels", "8", "--samples", "64", "--per-class", "200",
        "--subjects", "4", "--seed", "7", "--out", s(&a),
    ]);
    assert!(out.contains("n=1600 C=8 T=64 K=2"), "{out}");
    ok(&[
        "gen-data", "--classes", "2", "--channels", "8", "--samples", "64", "--per-class", "200",
        "--subjects", "4", "--seed", "7", "--out", s(&b),
    ]);
    for name in ["trials.eegb", "trials.eegb.meta.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
    }
    assert_eq!(read_trials(a.join("trials.eegb")).unwrap().len(), 1600);
}

#[test]
fn single_class_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = uapforge(&["gen-data", "--classes", "1", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("K >= 2"));
}

#[test]
fn missing_data_file_names_the_path() {
    let out = uapforge(&["train", "--data", "/nonexistent/trials.eegb", "--out", "/tmp/m.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/trials.eegb"));
}

#[test]
fn deepfool_target_attack_is_rejected() {
    let out = uapforge(&["craft", "--method", "df", "--target", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_craft_eval_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    gen(&d, "2", "3");
    let data = d.join("trials.eegb");
    let model = tmp.path().join("m.json");
    let text = ok(&[
        "train", "--data", s(&data), "--model", "affine", "--split", "loso", "--test-subject", "3",
        "--lr", "0.01", "--out", s(&model),
    ]);
    assert!(printed(&text, "rca") >= 0.9, "{text}");
    let params = load_model(&model).unwrap();
    assert_eq!(params.spec().num_classes, 2);

    let cnn = tmp.path().join("cnn.json");
    ok(&[
        "train", "--data", s(&data), "--test-subject", "3", "--lr", "0.01", "--epochs", "40", "--out", s(&cnn),
    ]);
    let uap = tmp.path().join("tlm.uapf");
    let csv = tmp.path().join("tlm.csv");
    let text = ok(&[
        "craft", "--data", s(&data), "--model", s(&cnn), "--test-subject", "3", "--method", "tlm", "--xi",
        "0.2", "--max-iter", "40", "--out", s(&uap), "--csv", s(&csv),
    ]);
    let asr = printed(&text, "asr");
    assert!((0.0..=1.0).contains(&asr));
    let v = load_uap(&uap).unwrap();
    assert!(v.values().iter().all(|x| x.abs() <= 0.2));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 8);

    let report = tmp.path().join("report");
    let table = ok(&[
        "eval", "--data", s(&data), "--model", s(&cnn), "--test-subject", "3", "--uap", s(&uap),
        "--baseline", "noise", "--xi", "0.2", "--out", s(&report),
    ]);
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][4], "clean");
    assert_eq!(rows[1][4], "noise");
    let clean: f64 = rows[0][5].parse().unwrap();
    let attacked: f64 = rows[2][5].parse().unwrap();
    assert!(attacked < clean, "{table}");
    assert_eq!(std::fs::read_to_string(report.with_extension("csv")).unwrap(), table);
    assert!(report.with_extension("json").exists());

    let only_clean = ok(&["eval", "--data", s(&data), "--model", s(&cnn), "--test-subject", "3"]);
    assert_eq!(only_clean.lines().count(), 2);
}

#[test]
fn craft_is_byte_stable_and_zero_uap_has_zero_asr() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    gen(&d, "2", "5");
    let data = d.join("trials.eegb");
    let model = tmp.path().join("m.json");
    let again = tmp.path().join("m2.json");
    for out in [&model, &again] {
        ok(&["train", "--data", s(&data), "--epochs", "5", "--seed", "2", "--out", s(out)]);
    }
    assert_eq!(std::fs::read(&model).unwrap(), std::fs::read(&again).unwrap());

    let (u1, u2) = (tmp.path().join("u1.uapf"), tmp.path().join("u2.uapf"));
    for out in [&u1, &u2] {
        ok(&["craft", "--data", s(&data), "--model", s(&model), "--max-iter", "3", "--seed", "4", "--out", s(out)]);
    }
    assert_eq!(std::fs::read(&u1).unwrap(), std::fs::read(&u2).unwrap());

    let zero = tmp.path().join("zero.uapf");
    uapforge::attacks::save_uap(&uapforge::Uap::zeros(uapforge::UapMode::Full, 8, 64, 0.2, uapforge::NormOrder::Inf).unwrap(), &zero).unwrap();
    let (r1, r2) = (tmp.path().join("r1"), tmp.path().join("r2"));
    for out in [&r1, &r2] {
        ok(&["eval", "--data", s(&data), "--model", s(&model), "--uap", s(&zero), "--baseline", "noise", "--out", s(out)]);
    }
    let table = std::fs::read_to_string(r1.with_extension("csv")).unwrap();
    assert_eq!(table.lines().nth(3).unwrap().split(',').nth(7), Some("0.000000"));
    assert_eq!(table, std::fs::read_to_string(r2.with_extension("csv")).unwrap());
    assert_eq!(std::fs::read(r1.with_extension("json")).unwrap(), std::fs::read(r2.with_extension("json")).unwrap());
}

#[test]
fn incompatible_uap_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    gen(&d, "2", "1");
    let data = d.join("trials.eegb");
    let model = tmp.path().join("m.json");
    ok(&["train", "--data", s(&data), "--model", "affine", "--epochs", "2", "--out", s(&model)]);
    let bad = tmp.path().join("bad.uapf");
    uapforge::attacks::save_uap(&uapforge::Uap::zeros(uapforge::UapMode::Full, 4, 64, 0.2, uapforge::NormOrder::Inf).unwrap(), &bad).unwrap();
    let out = uapforge(&["eval", "--data", s(&data), "--model", s(&model), "--uap", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mini_craft_and_config_merging() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    gen(&d, "2", "2");
    let data = d.join("trials.eegb");
    let model = tmp.path().join("m.json");
    let config = tmp.path().join("config.json");
    std::fs::write(
        &config,
        format!(
            r#"{{"seed": 11, "paths": {{"data": "{}", "model": "{}"}}, "train": {{"max_epochs": 3}}, "attack": {{"max_iter": 2, "xi": 0.5}}}}"#,
            s(&data),
            s(&model)
        ),
    )
    .unwrap();
    let text = ok(&["train", "--config", s(&config)]);
    assert!(text.contains("epochs=3"), "{text}");
    let uap = tmp.path().join("mini.uapf");
    let text = ok(&[
        "craft", "--config", s(&config), "--mode", "mini", "--mini-shape", "4x32", "--xi", "0.3", "--out", s(&uap),
    ]);
    assert!(text.contains("xi=0.300000"), "{text}");
    let v = load_uap(&uap).unwrap();
    assert_eq!(v.shape(), (4, 32));
    assert!(v.values().iter().all(|x| x.abs() <= 0.3));
    let table = ok(&["eval", "--config", s(&config), "--uap", s(&uap), "--placements", "5"]);
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn sweep_emits_one_row_per_point() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("sweep.json");
    std::fs::write(
        &config,
        r#"{"experiment": {"data": {"channels": 4, "samples": 32, "trials_per_class": 20, "num_subjects": 2},
            "victims": [{"name": "affine", "spec": {"kind": "affine", "input_channels": 4, "input_samples": 32, "num_classes": 2}}],
            "train": {"max_epochs": 5}},
            "attack": {"max_iter": 3}}"#,
    )
    .unwrap();
    let out = tmp.path().join("sweep.csv");
    let text = ok(&["sweep", "--config", s(&config), "--param", "xi", "--values", "0.1,0.5", "--out", s(&out)]);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(2).unwrap().starts_with("xi,0.5,affine,uap,"));
    assert_eq!(std::fs::read_to_string(out).unwrap(), text);
    let text = ok(&["sweep", "--config", s(&config), "--param", "train-size", "--values", "0.5"]);
    assert_eq!(text.lines().count(), 2);
}
