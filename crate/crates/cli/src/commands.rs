//! Pipeline stages. Each reads and writes files under the output directory.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use mias_core::collab::SnapshotSet;
use mias_core::corpus::{apply_filter, load_corpus, save_corpus, write_corpus, Corpus, CorpusFormat, GenreRegistry};
use mias_core::evaluation::{
    coefficient_report, diagnostics_report, render_coefficients, render_csv, render_text, run_grid_jobs, GridReport,
};
use mias_core::features::{
    read_feature_csv, synopsis_tokens, FeatureEngine, FeatureFileSchema, FeatureMatrix, FeatureSet,
};
use mias_core::labeling::{label, resolve_boundaries, write_labels_csv, LabelKind, LabelRow};
use mias_core::learners::{train_classifier_artifact, train_regressor, train_regressor_artifact, TrainedModel};
use mias_core::service::ServiceState;
use mias_core::synthetic::generate;
use mias_core::topic::{fit, TopicModel};
use serde::Serialize;

use crate::config::Config;
use crate::error::{CliError, ExitCode, OrExit};

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const GENRES_FILE: &str = "genres.txt";
pub const INGEST_REPORT_FILE: &str = "ingest_report.json";
pub const TOPICS_FILE: &str = "topics.json";
pub const FEATURES_FILE: &str = "features.csv";
pub const SCHEMA_FILE: &str = "features.schema.json";
pub const LABELS_FILE: &str = "labels.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const REPORT_CSV: &str = "report.csv";
pub const COEFFICIENTS_JSON: &str = "coefficients.json";
pub const COEFFICIENTS_TEXT: &str = "coefficients.txt";
pub const CLASSIFIER_FILE: &str = "classifier.mias";
pub const REGRESSOR_FILE: &str = "regressor.mias";
pub const MODEL_SUMMARY_FILE: &str = "model.json";
pub const SYNTHETIC_FILE: &str = "synthetic.jsonl";
pub const SYNTHETIC_TRUTH_FILE: &str = "synthetic_truth.json";

/// Files written by one command. On failure they are removed again.
struct Outputs {
    dir: PathBuf,
    code: ExitCode,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path, code: ExitCode) -> Result<Self, CliError> {
        fs::create_dir_all(dir).or_exit(code, &format!("cannot create {}", dir.display()))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            code,
            written: Vec::new(),
        })
    }

    /// Writes through a temporary file so readers never see a partial file.
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes).or_exit(self.code, &format!("cannot write {}", tmp.display()))?;
        fs::rename(&tmp, &path).or_exit(self.code, &format!("cannot write {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).or_exit(self.code, name)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    fn rollback(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }

    /// Records wall-clock facts next to the outputs, outside the hashed files.
    fn sidecar(&self, command: &str, config: &Config) {
        let meta = serde_json::json!({
            "command": command,
            "finished_at": chrono::Utc::now().to_rfc3339(),
            "version": env!("CARGO_PKG_VERSION"),
            "outputs": self.written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "config": config,
        });
        let path = self.dir.join(format!("{command}.run.json"));
        if let Err(e) = fs::write(&path, format!("{meta:#}\n")) {
            warn!("cannot write {}: {e}", path.display());
        }
    }
}

/// Runs `body`, removing its outputs if it fails.
fn staged<T>(
    command: &str,
    config: &Config,
    code: ExitCode,
    body: impl FnOnce(&mut Outputs) -> Result<T, CliError>,
) -> Result<T, CliError> {
    let mut out = Outputs::new(&config.out_dir(), code)?;
    match body(&mut out) {
        Ok(v) => {
            out.sidecar(command, config);
            Ok(v)
        }
        Err(e) => {
            out.rollback();
            Err(e)
        }
    }
}

fn require(path: &Path, code: ExitCode, hint: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::new(code, format!("{} not found; {hint}", path.display())))
    }
}

fn read_registry(path: &Path, code: ExitCode) -> Result<GenreRegistry, CliError> {
    let text = fs::read_to_string(path).or_exit(code, &format!("cannot read {}", path.display()))?;
    GenreRegistry::new(text.lines().map(str::trim).filter(|l| !l.is_empty())).or_exit(code, "genre registry")
}

/// The canonical corpus written by `ingest`.
pub fn load_ingested(dir: &Path, code: ExitCode) -> Result<Corpus, CliError> {
    let path = dir.join(CORPUS_FILE);
    require(&path, code, "run `mias ingest` first")?;
    let registry = read_registry(&dir.join(GENRES_FILE), code)?;
    let outcome = load_corpus(&path, CorpusFormat::Jsonl, registry).or_exit(code, "loading corpus")?;
    if !outcome.line_errors.is_empty() {
        return Err(CliError::new(
            code,
            format!(
                "{} is not a canonical corpus: {}",
                path.display(),
                outcome.line_errors[0]
            ),
        ));
    }
    Ok(outcome.corpus)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub movies: usize,
    pub persons: usize,
    pub corpus_fingerprint: String,
    pub records_read: usize,
    pub duplicates_merged: usize,
    pub invalid_lines: usize,
    pub dangling_refs: usize,
    pub line_errors: Vec<String>,
}

pub fn cmd_ingest(config: &Config) -> Result<IngestSummary, CliError> {
    let code = ExitCode::Ingest;
    let input = config
        .ingest
        .input
        .clone()
        .ok_or_else(|| CliError::new(code, "ingest.input is not set"))?;
    require(&input, code, "check ingest.input")?;
    let registry = match &config.ingest.genres {
        Some(p) => read_registry(p, code)?,
        None => GenreRegistry::default_registry(),
    };
    let outcome = load_corpus(&input, CorpusFormat::Jsonl, registry).or_exit(code, "loading corpus")?;
    for e in &outcome.line_errors {
        warn!("{}: {e}", input.display());
    }
    if config.ingest.strict && !outcome.line_errors.is_empty() {
        return Err(CliError::new(
            code,
            format!(
                "{} invalid line(s) in strict mode; first: {}",
                outcome.line_errors.len(),
                outcome.line_errors[0]
            ),
        ));
    }
    if outcome.corpus.is_empty() {
        return Err(CliError::new(code, "no valid movie records"));
    }
    let corpus = &outcome.corpus;
    let summary = IngestSummary {
        movies: corpus.len(),
        persons: corpus.persons().count(),
        corpus_fingerprint: corpus.fingerprint(),
        records_read: outcome.report.records_read,
        duplicates_merged: outcome.report.duplicates_merged,
        invalid_lines: outcome.report.invalid_lines,
        dangling_refs: outcome.report.dangling_refs,
        line_errors: outcome.line_errors.iter().map(ToString::to_string).collect(),
    };
    staged("ingest", config, code, |out| {
        let mut buf = Vec::new();
        write_corpus(corpus, &mut buf).or_exit(code, "serializing corpus")?;
        out.write(CORPUS_FILE, &buf)?;
        let mut genres = corpus.registry().names().join("\n");
        genres.push('\n');
        out.write(GENRES_FILE, genres.as_bytes())?;
        out.write_json(INGEST_REPORT_FILE, &summary)?;
        Ok(())
    })?;
    info!("ingested {} movies ({} persons)", summary.movies, summary.persons);
    Ok(summary)
}

fn fit_topics(corpus: &Corpus, config: &Config, code: ExitCode) -> Result<TopicModel, CliError> {
    if let Some(p) = &config.features.topic_model {
        return TopicModel::load(p).or_exit(code, &format!("loading topic model {}", p.display()));
    }
    let docs: Vec<Vec<String>> = corpus
        .movies()
        .iter()
        .filter_map(|m| synopsis_tokens(m.synopsis.as_deref()))
        .collect();
    Ok(fit(&docs, &config.features.lda)
        .or_exit(code, "fitting topic model")?
        .model)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeaturesSummary {
    pub rows: usize,
    pub columns: usize,
    pub schema_fingerprint: String,
    pub config_fingerprint: String,
}

pub fn cmd_features(config: &Config) -> Result<FeaturesSummary, CliError> {
    let code = ExitCode::Features;
    let dir = config.out_dir();
    let corpus = load_ingested(&dir, code)?;
    let filter = config.features.filter.resolve().map_err(|m| CliError::new(code, m))?;
    let view = apply_filter(&corpus, &filter);
    if view.is_empty() {
        return Err(CliError::new(code, "the filter leaves no movies"));
    }
    let fc = &config.features.engine;
    let snapshots = SnapshotSet::build(&corpus, fc.team_size, fc.betweenness).or_exit(code, "building networks")?;
    let topics = fit_topics(&corpus, config, code)?;
    let engine = FeatureEngine::new(&corpus, &snapshots, &topics, fc.clone()).or_exit(code, "feature engine")?;
    info!("assembling {} rows", view.len());
    let fm = engine.assemble(&view).or_exit(code, "assembling features")?;
    let summary = FeaturesSummary {
        rows: fm.nrows(),
        columns: fm.schema.len(),
        schema_fingerprint: fm.schema.fingerprint(),
        config_fingerprint: engine.config_fingerprint(),
    };

    let labelled: Vec<(String, f64)> = view
        .movies()
        .filter_map(|m| m.roi().map(|r| (m.movie_id.clone(), r)))
        .collect();
    let rois: Vec<f64> = labelled.iter().map(|(_, r)| *r).collect();
    let specs = if rois.is_empty() {
        Vec::new()
    } else {
        LabelKind::ALL
            .iter()
            .map(|&k| resolve_boundaries(&rois, k))
            .collect::<Result<Vec<_>, _>>()
            .or_exit(code, "resolving labels")?
    };
    let label_columns: Vec<Vec<usize>> = specs.iter().map(|s| label(&rois, s)).collect();
    let rows: Vec<LabelRow> = labelled
        .iter()
        .enumerate()
        .map(|(i, (id, roi))| LabelRow {
            movie_id: id.clone(),
            roi: *roi,
            labels: specs
                .iter()
                .zip(&label_columns)
                .map(|(s, c)| s.classes[c[i]].clone())
                .collect(),
        })
        .collect();
    let columns: Vec<&str> = fm.schema.names();
    let diagnostics = diagnostics_report(&view, &fm, &columns);

    staged("features", config, code, |out| {
        let mut csv = Vec::new();
        fm.write_csv(&mut csv).or_exit(code, "writing features")?;
        out.write(FEATURES_FILE, &csv)?;
        out.write_json(SCHEMA_FILE, &fm.file_schema(&summary.config_fingerprint))?;
        out.write(TOPICS_FILE, topics.to_json().or_exit(code, "topic model")?.as_bytes())?;
        let mut labels = Vec::new();
        write_labels_csv(&rows, &specs.iter().collect::<Vec<_>>(), &mut labels).or_exit(code, "writing labels")?;
        out.write(LABELS_FILE, &labels)?;
        out.write_json(DIAGNOSTICS_FILE, &diagnostics)?;
        Ok(())
    })?;
    info!("wrote {} x {} feature matrix", summary.rows, summary.columns);
    Ok(summary)
}

/// The feature matrix written by `features`, checked against its sidecar.
pub fn load_features(dir: &Path, code: ExitCode) -> Result<(FeatureMatrix, FeatureFileSchema), CliError> {
    let csv = dir.join(FEATURES_FILE);
    let schema_path = dir.join(SCHEMA_FILE);
    require(&csv, code, "run `mias features` first")?;
    require(&schema_path, code, "run `mias features` first")?;
    let sidecar: FeatureFileSchema = serde_json::from_slice(&fs::read(&schema_path).or_exit(code, "reading schema")?)
        .or_exit(code, "parsing schema")?;
    if sidecar.schema.fingerprint() != sidecar.schema_fingerprint {
        return Err(CliError::new(
            code,
            "feature schema does not match its recorded fingerprint",
        ));
    }
    let fm = read_feature_csv(fs::File::open(&csv).or_exit(code, "reading features")?, &sidecar.schema)
        .or_exit(code, "parsing features")?;
    Ok((fm, sidecar))
}

/// ROI per feature row, looked up by movie id.
fn row_rois(fm: &FeatureMatrix, corpus: &Corpus, code: ExitCode) -> Result<Vec<f64>, CliError> {
    fm.movie_ids
        .iter()
        .map(|id| {
            corpus
                .movie(id)
                .and_then(|m| m.roi())
                .ok_or_else(|| CliError::new(code, format!("movie '{id}' has no ROI; filter on budget and revenue")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluateSummary {
    pub experiments: usize,
    pub regressions: usize,
    pub cost_regressions: usize,
}

pub fn cmd_evaluate(config: &Config, jobs: usize) -> Result<EvaluateSummary, CliError> {
    let code = ExitCode::Evaluate;
    let dir = config.out_dir();
    let corpus = load_ingested(&dir, code)?;
    let (fm, _) = load_features(&dir, code)?;
    let rois = row_rois(&fm, &corpus, code)?;
    let report: GridReport = run_grid_jobs(&fm, &rois, &config.evaluate, jobs).or_exit(code, "evaluation")?;
    let cost_regressions = report
        .classification
        .iter()
        .filter(|r| !r.cost_regressions().is_empty())
        .count();
    let coefficients = match config.evaluate.regressors.first() {
        Some(reg) => {
            let full = fm.select(FeatureSet::Full);
            let y: Vec<f64> = rois.iter().map(|&r| mias_core::labeling::log_roi1(r)).collect();
            let fit = train_regressor(full.data.view(), &y, reg).or_exit(code, "coefficient fit")?;
            Some(coefficient_report(&fit, &full.schema, 10).or_exit(code, "coefficient report")?)
        }
        None => None,
    };
    staged("evaluate", config, code, |out| {
        out.write_json(REPORT_JSON, &report)?;
        out.write(REPORT_TEXT, render_text(&report).as_bytes())?;
        out.write(REPORT_CSV, render_csv(&report).or_exit(code, "report csv")?.as_bytes())?;
        if let Some(c) = &coefficients {
            out.write_json(COEFFICIENTS_JSON, c)?;
            out.write(COEFFICIENTS_TEXT, render_coefficients(c).as_bytes())?;
        }
        Ok(())
    })?;
    Ok(EvaluateSummary {
        experiments: report.classification.len(),
        regressions: report.regression.len(),
        cost_regressions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub classifier: String,
    pub regressor: Option<String>,
    pub rows: usize,
    pub schema_fingerprint: String,
    pub corpus_fingerprint: String,
}

pub fn cmd_train(config: &Config) -> Result<TrainSummary, CliError> {
    let code = ExitCode::Train;
    let dir = config.out_dir();
    let corpus = load_ingested(&dir, code)?;
    let (fm, _) = load_features(&dir, code)?;
    let rois = row_rois(&fm, &corpus, code)?;
    let fp = corpus.fingerprint();
    let t = &config.train;
    let clf = train_classifier_artifact(
        &fm,
        &rois,
        t.label,
        t.roi67_rule,
        t.feature_set,
        &t.classifier,
        &t.cost_matrix,
        &fp,
    )
    .or_exit(code, "training classifier")?;
    let reg = match &t.regressor {
        Some(r) => Some(
            train_regressor_artifact(&fm, &rois, t.regressor_feature_set, r, &fp)
                .or_exit(code, "training regressor")?,
        ),
        None => None,
    };
    let summary = TrainSummary {
        classifier: clf.kind().to_string(),
        regressor: reg.as_ref().map(|r| r.kind().to_string()),
        rows: fm.nrows(),
        schema_fingerprint: fm.schema.fingerprint(),
        corpus_fingerprint: fp,
    };
    staged("train", config, code, |out| {
        out.write(CLASSIFIER_FILE, &clf.to_bytes().or_exit(code, "classifier artifact")?)?;
        match &reg {
            Some(r) => {
                out.write(REGRESSOR_FILE, &r.to_bytes().or_exit(code, "regressor artifact")?)?;
            }
            None => {
                let stale = out.dir.join(REGRESSOR_FILE);
                if stale.exists() {
                    fs::remove_file(&stale).or_exit(code, "removing stale regressor")?;
                }
            }
        }
        out.write_json(MODEL_SUMMARY_FILE, &summary)?;
        Ok(())
    })?;
    Ok(summary)
}

/// Loads everything the service needs; every failure exits with the train code.
pub fn load_service_state(config: &Config) -> Result<ServiceState, CliError> {
    let code = ExitCode::Train;
    let dir = config.out_dir();
    let clf_path = dir.join(CLASSIFIER_FILE);
    require(&clf_path, code, "run `mias train` first")?;
    let classifier = TrainedModel::load(&clf_path).or_exit(code, "loading classifier")?;
    let reg_path = dir.join(REGRESSOR_FILE);
    let regressor = if reg_path.exists() {
        Some(TrainedModel::load(&reg_path).or_exit(code, "loading regressor")?)
    } else {
        None
    };
    let corpus = load_ingested(&dir, code)?;
    let topics_path = dir.join(TOPICS_FILE);
    require(&topics_path, code, "run `mias features` first")?;
    let topics = TopicModel::load(&topics_path).or_exit(code, "loading topic model")?;
    let fc = config.features.engine.clone();
    let snapshots = SnapshotSet::build(&corpus, fc.team_size, fc.betweenness).or_exit(code, "building networks")?;
    let (_, sidecar) = load_features(&dir, code)?;
    let fingerprint = FeatureEngine::new(&corpus, &snapshots, &topics, fc.clone())
        .or_exit(code, "feature engine")?
        .config_fingerprint();
    if fingerprint != sidecar.config_fingerprint {
        return Err(CliError::new(
            code,
            "feature configuration differs from the one the features were built with",
        ));
    }
    ServiceState::new(corpus, snapshots, topics, fc, classifier, regressor).or_exit(code, "loading models")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticSummary {
    pub path: PathBuf,
    pub movies: usize,
    pub corpus_fingerprint: String,
}

#[derive(Serialize)]
struct Truth<'a> {
    theme_effects: &'a [f64],
    theme_words: &'a [Vec<String>],
    themes: HashMap<&'a str, usize>,
}

pub fn cmd_make_synthetic(config: &Config) -> Result<SyntheticSummary, CliError> {
    let code = ExitCode::General;
    let s = generate(&config.synthetic).or_exit(code, "generating corpus")?;
    let themes = s
        .corpus
        .movies()
        .iter()
        .zip(&s.themes)
        .map(|(m, &t)| (m.movie_id.as_str(), t))
        .collect();
    let truth = Truth {
        theme_effects: &s.theme_effects,
        theme_words: &s.theme_words,
        themes,
    };
    let truth_json = serde_json::to_value(&truth).or_exit(code, "truth")?;
    staged("make-synthetic", config, code, |out| {
        let mut buf = Vec::new();
        write_corpus(&s.corpus, &mut buf).or_exit(code, "serializing corpus")?;
        let path = out.write(SYNTHETIC_FILE, &buf)?;
        out.write_json(SYNTHETIC_TRUTH_FILE, &sorted(truth_json))?;
        Ok(SyntheticSummary {
            path,
            movies: s.corpus.len(),
            corpus_fingerprint: s.corpus.fingerprint(),
        })
    })
}

/// JSON with object keys in sorted order.
fn sorted(v: serde_json::Value) -> serde_json::Value {
    match v {
        serde_json::Value::Object(m) => {
            let mut pairs: Vec<_> = m.into_iter().collect();
            pairs.sort_by(|a, b| a.0.cmp(&b.0));
            serde_json::Value::Object(pairs.into_iter().map(|(k, v)| (k, sorted(v))).collect())
        }
        serde_json::Value::Array(a) => serde_json::Value::Array(a.into_iter().map(sorted).collect()),
        other => other,
    }
}

/// Saves a corpus in canonical form; used by tests and tooling.
pub fn save_canonical(corpus: &Corpus, path: &Path) -> Result<(), CliError> {
    save_corpus(corpus, path).or_exit(ExitCode::General, "saving corpus")
}
