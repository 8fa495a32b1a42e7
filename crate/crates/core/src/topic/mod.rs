//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOPIC_MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdaConfig {
    #[serde(default = "default_topics")]
    pub num_topics: usize,
    /// Defaults to 50 / num_topics.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    /// Tokens seen fewer times than this in the training corpus are dropped.
    #[serde(default = "default_min_count")]
    pub min_count: usize,
    /// Average θ over this many final sweeps; 0 or 1 uses the last sweep only.
    #[serde(default)]
    pub average_last: usize,
    #[serde(default = "default_infer_iterations")]
    pub infer_iterations: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_topics() -> usize {
    30
}
fn default_beta() -> f64 {
    0.01
}
fn default_iterations() -> usize {
    1000
}
fn default_min_count() -> usize {
    2
}
fn default_infer_iterations() -> usize {
    100
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            num_topics: default_topics(),
            alpha: None,
            beta: default_beta(),
            iterations: default_iterations(),
            min_count: default_min_count(),
            average_last: 0,
            infer_iterations: default_infer_iterations(),
            seed: 0,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.num_topics as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicDistribution {
    pub movie_id: String,
    pub theta: Vec<f64>,
}

/// Fitted topic-word counts plus hyperparameters.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicModel {
    pub schema_version: u32,
    pub num_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub rng_seed: u64,
    pub infer_iterations: usize,
    pub vocabulary: Vec<String>,
    /// Row-major `num_topics x vocabulary.len()`.
    pub topic_word_counts: Vec<u32>,
    pub topic_totals: Vec<u64>,
    #[serde(skip)]
    lookup: OnceLock<Lookup>,
}

#[derive(Debug)]
struct Lookup {
    index: HashMap<String, u32>,
    /// Word-major `vocab x num_topics` smoothed φ.
    phi_by_word: Vec<f64>,
}

impl Clone for TopicModel {
    fn clone(&self) -> Self {
        TopicModel {
            schema_version: self.schema_version,
            num_topics: self.num_topics,
            alpha: self.alpha,
            beta: self.beta,
            rng_seed: self.rng_seed,
            infer_iterations: self.infer_iterations,
            vocabulary: self.vocabulary.clone(),
            topic_word_counts: self.topic_word_counts.clone(),
            topic_totals: self.topic_totals.clone(),
            lookup: OnceLock::new(),
        }
    }
}

impl PartialEq for TopicModel {
    fn eq(&self, o: &Self) -> bool {
        self.schema_version == o.schema_version
            && self.num_topics == o.num_topics
            && self.alpha.to_bits() == o.alpha.to_bits()
            && self.beta.to_bits() == o.beta.to_bits()
            && self.rng_seed == o.rng_seed
            && self.infer_iterations == o.infer_iterations
            && self.vocabulary == o.vocabulary
            && self.topic_word_counts == o.topic_word_counts
            && self.topic_totals == o.topic_totals
    }
}

#[derive(Debug, Clone)]
pub struct FitOutput {
    pub model: TopicModel,
    /// Per input document, in input order.
    pub theta: Vec<Vec<f64>>,
}

fn sample_discrete(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if u < w {
            return k;
        }
        u -= w;
    }
    weights.len() - 1
}

fn theta_from_counts(counts: &[u32], alpha: f64) -> Vec<f64> {
    let n: u32 = counts.iter().sum();
    let denom = n as f64 + counts.len() as f64 * alpha;
    counts.iter().map(|&c| (c as f64 + alpha) / denom).collect()
}

/// Fits a topic model. Documents are pre-tokenized; tokens below the
/// configured minimum count are ignored.
pub fn fit<S: AsRef<str>>(docs: &[Vec<S>], cfg: &LdaConfig) -> Result<FitOutput> {
    let k_topics = cfg.num_topics;
    if k_topics < 2 {
        return Err(Error::TopicModel(format!(
            "num_topics must be at least 2, got {k_topics}"
        )));
    }
    let alpha = cfg.alpha();
    if !(alpha > 0.0 && cfg.beta > 0.0) {
        return Err(Error::TopicModel("alpha and beta must be positive".into()));
    }
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        for t in d {
            *freq.entry(t.as_ref()).or_insert(0) += 1;
        }
    }
    if freq.is_empty() {
        return Err(Error::TopicModel("all documents are empty".into()));
    }
    let vocabulary: Vec<String> = freq
        .iter()
        .filter(|(_, &c)| c >= cfg.min_count.max(1))
        .map(|(w, _)| w.to_string())
        .collect();
    let v = vocabulary.len();
    if v < k_topics {
        return Err(Error::TopicModel(format!(
            "vocabulary of {v} tokens is smaller than num_topics {k_topics}"
        )));
    }
    let index: HashMap<&str, u32> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i as u32))
        .collect();
    let words: Vec<Vec<u32>> = docs
        .iter()
        .map(|d| d.iter().filter_map(|t| index.get(t.as_ref()).copied()).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut nwk = vec![0u32; v * k_topics];
    let mut nk = vec![0u64; k_topics];
    let mut ndk = vec![0u32; docs.len() * k_topics];
    let mut z: Vec<Vec<u16>> = Vec::with_capacity(docs.len());
    for (d, ws) in words.iter().enumerate() {
        let zs: Vec<u16> = ws
            .iter()
            .map(|&w| {
                let k = rng.random_range(0..k_topics);
                nwk[w as usize * k_topics + k] += 1;
                nk[k] += 1;
                ndk[d * k_topics + k] += 1;
                k as u16
            })
            .collect();
        z.push(zs);
    }

    let vbeta = v as f64 * cfg.beta;
    let mut p = vec![0.0; k_topics];
    let average = cfg.average_last.max(1).min(cfg.iterations.max(1));
    let mut theta_acc = vec![0.0; docs.len() * k_topics];
    for sweep in 0..cfg.iterations {
        for (d, ws) in words.iter().enumerate() {
            let nd = &mut ndk[d * k_topics..(d + 1) * k_topics];
            for (i, &w) in ws.iter().enumerate() {
                let w = w as usize;
                let old = z[d][i] as usize;
                nwk[w * k_topics + old] -= 1;
                nk[old] -= 1;
                nd[old] -= 1;
                let row = &nwk[w * k_topics..(w + 1) * k_topics];
                for k in 0..k_topics {
                    p[k] = (nd[k] as f64 + alpha) * (row[k] as f64 + cfg.beta) / (nk[k] as f64 + vbeta);
                }
                let new = sample_discrete(&mut rng, &p);
                nwk[w * k_topics + new] += 1;
                nk[new] += 1;
                nd[new] += 1;
                z[d][i] = new as u16;
            }
        }
        if cfg.iterations - sweep <= average {
            for d in 0..docs.len() {
                let t = theta_from_counts(&ndk[d * k_topics..(d + 1) * k_topics], alpha);
                for (acc, x) in theta_acc[d * k_topics..(d + 1) * k_topics].iter_mut().zip(t) {
                    *acc += x;
                }
            }
        }
    }
    let theta: Vec<Vec<f64>> = if cfg.iterations == 0 {
        (0..docs.len())
            .map(|d| theta_from_counts(&ndk[d * k_topics..(d + 1) * k_topics], alpha))
            .collect()
    } else {
        theta_acc
            .chunks(k_topics)
            .map(|c| c.iter().map(|x| x / average as f64).collect())
            .collect()
    };

    let mut topic_word_counts = vec![0u32; k_topics * v];
    for w in 0..v {
        for k in 0..k_topics {
            topic_word_counts[k * v + w] = nwk[w * k_topics + k];
        }
    }
    Ok(FitOutput {
        model: TopicModel {
            schema_version: TOPIC_MODEL_SCHEMA_VERSION,
            num_topics: k_topics,
            alpha,
            beta: cfg.beta,
            rng_seed: cfg.seed,
            infer_iterations: cfg.infer_iterations,
            vocabulary,
            topic_word_counts,
            topic_totals: nk,
            lookup: OnceLock::new(),
        },
        theta,
    })
}

/// Stable per-document seed: `base` mixed with a hash of the tokens, so the
/// same text always gets the same θ regardless of where it is inferred.
pub fn document_seed<S: AsRef<str>>(base: u64, tokens: &[S]) -> u64 {
    let mut h = Sha256::new();
    for t in tokens {
        h.update(t.as_ref().as_bytes());
        h.update([0u8]);
    }
    let digest = h.finalize();
    base ^ u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

impl TopicModel {
    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    fn lookup(&self) -> &Lookup {
        self.lookup.get_or_init(|| {
            let (k_topics, v) = (self.num_topics, self.vocabulary.len());
            let index = self
                .vocabulary
                .iter()
                .enumerate()
                .map(|(i, w)| (w.clone(), i as u32))
                .collect();
            let mut phi_by_word = vec![0.0; v * k_topics];
            for k in 0..k_topics {
                let denom = self.topic_totals[k] as f64 + v as f64 * self.beta;
                for w in 0..v {
                    phi_by_word[w * k_topics + k] = (self.topic_word_counts[k * v + w] as f64 + self.beta) / denom;
                }
            }
            Lookup { index, phi_by_word }
        })
    }

    /// Smoothed topic-word distribution φ_k over the vocabulary.
    pub fn phi(&self, k: usize) -> Vec<f64> {
        let lk = self.lookup();
        (0..self.vocab_size())
            .map(|w| lk.phi_by_word[w * self.num_topics + k])
            .collect()
    }

    /// Gibbs inference for one document with the topic-word counts frozen.
    /// Unknown tokens are skipped; a document with none left gets the
    /// uniform prior.
    pub fn infer<S: AsRef<str>>(&self, doc: &[S], iterations: usize, seed: u64) -> Vec<f64> {
        let k_topics = self.num_topics;
        let lk = self.lookup();
        let words: Vec<usize> = doc
            .iter()
            .filter_map(|t| lk.index.get(t.as_ref()).map(|&w| w as usize))
            .collect();
        if words.is_empty() {
            return vec![1.0 / k_topics as f64; k_topics];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut nd = vec![0u32; k_topics];
        let mut z: Vec<usize> = words
            .iter()
            .map(|_| {
                let k = rng.random_range(0..k_topics);
                nd[k] += 1;
                k
            })
            .collect();
        let mut p = vec![0.0; k_topics];
        for _ in 0..iterations {
            for (i, &w) in words.iter().enumerate() {
                nd[z[i]] -= 1;
                let phi = &lk.phi_by_word[w * k_topics..(w + 1) * k_topics];
                for k in 0..k_topics {
                    p[k] = (nd[k] as f64 + self.alpha) * phi[k];
                }
                z[i] = sample_discrete(&mut rng, &p);
                nd[z[i]] += 1;
            }
        }
        theta_from_counts(&nd, self.alpha)
    }

    /// θ for a document with the model's own iteration count and a
    /// text-derived seed.
    pub fn infer_document<S: AsRef<str>>(&self, doc: &[S]) -> Vec<f64> {
        self.infer(doc, self.infer_iterations, document_seed(self.rng_seed, doc))
    }

    /// The `n` most probable tokens of topic `k`, ties broken by token.
    pub fn top_keywords(&self, k: usize, n: usize) -> Result<Vec<(String, f64)>> {
        if k >= self.num_topics {
            return Err(Error::TopicModel(format!(
                "topic {k} out of range 0..{}",
                self.num_topics
            )));
        }
        let phi = self.phi(k);
        let mut ranked: Vec<(usize, f64)> = phi.into_iter().enumerate().collect();
        ranked.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.vocabulary[a.0].cmp(&self.vocabulary[b.0]))
        });
        Ok(ranked
            .into_iter()
            .take(n)
            .map(|(w, p)| (self.vocabulary[w].clone(), p))
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        let (k_topics, v) = (self.num_topics, self.vocabulary.len());
        if self.schema_version != TOPIC_MODEL_SCHEMA_VERSION {
            return Err(Error::TopicModel(format!(
                "unsupported schema_version {} (expected {TOPIC_MODEL_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.topic_word_counts.len() != k_topics * v || self.topic_totals.len() != k_topics {
            return Err(Error::TopicModel("count matrix shape does not match vocabulary".into()));
        }
        for k in 0..k_topics {
            let s: u64 = self.topic_word_counts[k * v..(k + 1) * v]
                .iter()
                .map(|&c| c as u64)
                .sum();
            if s != self.topic_totals[k] {
                return Err(Error::TopicModel(format!("topic {k} total disagrees with its counts")));
            }
        }
        let mut seen = std::collections::HashSet::new();
        if !self.vocabulary.iter().all(|w| seen.insert(w)) {
            return Err(Error::TopicModel("duplicate vocabulary entry".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TopicModel = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

pub fn write_theta_jsonl<W: Write>(rows: &[TopicDistribution], mut out: W) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io("<theta>", e))?;
    }
    Ok(())
}

pub fn read_theta_jsonl<R: BufRead>(r: R) -> Result<Vec<TopicDistribution>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<theta>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::InvalidLine {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
