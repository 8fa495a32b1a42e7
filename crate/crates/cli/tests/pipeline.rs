use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use mias_cli::commands::{
    cmd_evaluate, cmd_features, cmd_ingest, cmd_make_synthetic, cmd_train, load_service_state, CLASSIFIER_FILE,
    FEATURES_FILE, SCHEMA_FILE,
};
use mias_cli::{Config, ExitCode};

fn small_config(out: &Path) -> Config {
    let text = format!(
        r#"
out = "{}"
seed = 5
[synthetic]
movies = 200
actors = 150
directors = 25
[features.lda]
num_topics = 5
iterations = 40
[evaluate]
folds = 3
"#,
        out.display()
    );
    Config::parse(&text, ExitCode::General).unwrap()
}

fn run_pipeline(out: &Path) -> Config {
    let mut cfg = small_config(out);
    cfg.resolve_seed();
    let synth = cmd_make_synthetic(&cfg).unwrap();
    cfg.ingest.input = Some(synth.path);
    cmd_ingest(&cfg).unwrap();
    cmd_features(&cfg).unwrap();
    cmd_evaluate(&cfg, 1).unwrap();
    cmd_train(&cfg).unwrap();
    cfg
}

/// Every output except the run sidecars, which carry timestamps.
fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.to_string_lossy().ends_with(".run.json"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

#[test]
fn pipeline_outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(a.path());
    run_pipeline(b.path());
    let oa = outputs(a.path());
    let ob = outputs(b.path());
    for name in [
        "corpus.jsonl",
        "topics.json",
        "features.csv",
        "features.schema.json",
        "labels.csv",
        "diagnostics.json",
        "report.json",
        "report.txt",
        "report.csv",
        "coefficients.json",
        "classifier.mias",
        "regressor.mias",
        "model.json",
    ] {
        assert!(oa.contains_key(name), "missing {name}");
    }
    assert_eq!(oa.keys().collect::<Vec<_>>(), ob.keys().collect::<Vec<_>>());
    for (name, bytes) in &oa {
        assert!(bytes == &ob[name], "{name} differs between runs");
    }
    assert!(!oa.keys().any(|k| k.ends_with(".tmp")));
}

#[test]
fn parallel_evaluation_matches_serial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = run_pipeline(dir.path());
    let serial = fs::read(dir.path().join("report.json")).unwrap();
    cmd_evaluate(&cfg, 3).unwrap();
    assert_eq!(serial, fs::read(dir.path().join("report.json")).unwrap());
}

#[test]
fn serving_state_loads_from_pipeline_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = run_pipeline(dir.path());
    let state = load_service_state(&cfg).unwrap();
    assert_eq!(state.corpus().len(), 200);

    let mut changed = cfg.clone();
    changed.features.engine.team_size += 1;
    assert_eq!(load_service_state(&changed).err().unwrap().code, ExitCode::Train);
}

#[test]
fn stage_failures_use_their_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    assert_eq!(cmd_ingest(&cfg).unwrap_err().code, ExitCode::Ingest);
    cfg.ingest.input = Some(dir.path().join("absent.jsonl"));
    assert_eq!(cmd_ingest(&cfg).unwrap_err().code, ExitCode::Ingest);
    assert_eq!(cmd_features(&cfg).unwrap_err().code, ExitCode::Features);
    assert_eq!(cmd_evaluate(&cfg, 1).unwrap_err().code, ExitCode::Evaluate);
    assert_eq!(cmd_train(&cfg).unwrap_err().code, ExitCode::Train);
    assert_eq!(load_service_state(&cfg).err().unwrap().code, ExitCode::Train);
}

#[test]
fn strict_ingest_rejects_bad_lines_and_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    let synth = cmd_make_synthetic(&cfg).unwrap();
    let raw = dir.path().join("raw.jsonl");
    let mut text = fs::read_to_string(&synth.path).unwrap();
    text.push_str("{not json\n");
    fs::write(&raw, text).unwrap();
    cfg.ingest.input = Some(raw);

    cfg.ingest.strict = true;
    let err = cmd_ingest(&cfg).unwrap_err();
    assert_eq!(err.code, ExitCode::Ingest);
    assert!(!dir.path().join("corpus.jsonl").exists());

    cfg.ingest.strict = false;
    let s = cmd_ingest(&cfg).unwrap();
    assert_eq!(s.movies, 200);
    assert_eq!(s.invalid_lines, 1);
    assert_eq!(s.line_errors.len(), 1);
}

#[test]
fn empty_corpus_is_an_ingest_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    let raw = dir.path().join("empty.jsonl");
    fs::write(&raw, "").unwrap();
    cfg.ingest.input = Some(raw);
    assert_eq!(cmd_ingest(&cfg).unwrap_err().code, ExitCode::Ingest);
}

#[test]
fn tampered_feature_schema_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = run_pipeline(dir.path());
    let path = dir.path().join(SCHEMA_FILE);
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, text.replacen("tenure_total", "tenure_sum", 1)).unwrap();
    assert_eq!(cmd_evaluate(&cfg, 1).unwrap_err().code, ExitCode::Evaluate);
    assert_eq!(cmd_train(&cfg).unwrap_err().code, ExitCode::Train);

    fs::write(&path, text).unwrap();
    let csv = dir.path().join(FEATURES_FILE);
    let features = fs::read_to_string(&csv).unwrap();
    fs::write(&csv, features.replacen("tenure_total", "tenure_sum", 1)).unwrap();
    assert_eq!(cmd_train(&cfg).unwrap_err().code, ExitCode::Train);
}

#[test]
fn config_rejects_unknown_keys_and_propagates_seed() {
    assert!(Config::parse("[train]\nlabel = \"binary_top30\"\nbogus = 1\n", ExitCode::General).is_err());
    assert!(Config::parse("[features]\nfilter = \"nonsense\"\n", ExitCode::General)
        .unwrap()
        .features
        .filter
        .resolve()
        .is_err());
    let mut cfg = Config::parse("seed = 11\n", ExitCode::General).unwrap();
    cfg.resolve_seed();
    assert_eq!(cfg.features.lda.seed, 11);
    assert_eq!(cfg.evaluate.seed, 11);
    assert_eq!(cfg.train.classifier.seed, 11);
    assert_eq!(cfg.synthetic.seed, 11);
    assert!(cfg.train.regressor.is_some());
    assert_eq!(cfg.out_dir(), PathBuf::from("out"));
}

fn mias() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mias"));
    c.env("RUST_LOG", "error");
    c
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let s = mias()
        .args(["--out", out, "ingest", "missing.jsonl"])
        .output()
        .unwrap()
        .status;
    assert_eq!(s.code(), Some(2));
    let s = mias().args(["--out", out, "features"]).output().unwrap().status;
    assert_eq!(s.code(), Some(3));
    let s = mias().args(["--out", out, "evaluate"]).output().unwrap().status;
    assert_eq!(s.code(), Some(4));
    let s = mias().args(["--out", out, "train"]).output().unwrap().status;
    assert_eq!(s.code(), Some(5));
    let s = mias()
        .args(["--out", out, "serve", "--bind", "127.0.0.1:0"])
        .output()
        .unwrap()
        .status;
    assert_eq!(s.code(), Some(5));

    let held = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = held.local_addr().unwrap().to_string();
    let s = mias()
        .args(["--out", out, "serve", "--bind", &addr])
        .output()
        .unwrap()
        .status;
    assert_eq!(s.code(), Some(6));

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "unknown = true\n").unwrap();
    let s = mias()
        .args(["--config", cfg.to_str().unwrap(), "train"])
        .output()
        .unwrap()
        .status;
    assert_eq!(s.code(), Some(1));
}

#[test]
fn binary_runs_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mias.toml");
    fs::write(
        &cfg,
        format!(
            "out = \"{}\"\n[synthetic]\nmovies = 150\nactors = 100\ndirectors = 20\n[features.lda]\nnum_topics = 4\niterations = 20\n",
            dir.path().display()
        ),
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let synth = dir.path().join("synthetic.jsonl");
    for args in [
        vec!["--config", c, "--seed", "2", "make-synthetic"],
        vec!["--config", c, "ingest", synth.to_str().unwrap()],
        vec!["--config", c, "--seed", "2", "features"],
        vec!["--config", c, "--seed", "2", "train"],
    ] {
        let o = mias().args(&args).output().unwrap();
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(dir.path().join(CLASSIFIER_FILE).exists());
    assert!(dir.path().join("train.run.json").exists());
}
