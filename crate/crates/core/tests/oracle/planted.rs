//! Planted-topic corpora and matching of fitted topics to planted ones.

use mias_core::topic::TopicModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Planted {
    pub docs: Vec<Vec<String>>,
    /// Generating topic of each document's majority of tokens.
    pub labels: Vec<usize>,
    /// Planted word distributions over the global vocabulary.
    pub phi: Vec<Vec<(String, f64)>>,
}

/// Disjoint vocabulary blocks of `block` words with Zipf-like weights.
/// Each document draws `share` of its tokens from its own topic and the
/// rest from one other random topic.
pub fn planted(topics: usize, block: usize, docs: usize, len: usize, share: f64, seed: u64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi: Vec<Vec<(String, f64)>> = (0..topics)
        .map(|k| {
            let raw: Vec<f64> = (0..block).map(|i| 1.0 / (i as f64 + 2.0)).collect();
            let z: f64 = raw.iter().sum();
            raw.iter()
                .enumerate()
                .map(|(i, w)| (format!("t{k}w{i:02}"), w / z))
                .collect()
        })
        .collect();
    let draw = |rng: &mut ChaCha8Rng, k: usize| -> String {
        let mut u: f64 = rng.random();
        for (w, p) in &phi[k] {
            if u < *p {
                return w.clone();
            }
            u -= p;
        }
        phi[k].last().unwrap().0.clone()
    };
    let mut out = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..docs {
        let k = rng.random_range(0..topics);
        let other = (k + rng.random_range(1..topics)) % topics;
        let doc = (0..len)
            .map(|_| {
                let t = if rng.random_bool(share) { k } else { other };
                draw(&mut rng, t)
            })
            .collect();
        out.push(doc);
        labels.push(k);
    }
    Planted { docs: out, labels, phi }
}

pub fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt())
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Recovered topic index for each planted topic, by best mean cosine.
pub fn best_match(model: &TopicModel, planted: &Planted) -> (Vec<usize>, f64) {
    let k = planted.phi.len();
    let dense: Vec<Vec<f64>> = planted
        .phi
        .iter()
        .map(|row| {
            let mut v = vec![0.0; model.vocab_size()];
            for (w, p) in row {
                if let Some(i) = model.vocabulary.iter().position(|x| x == w) {
                    v[i] = *p;
                }
            }
            v
        })
        .collect();
    let fitted: Vec<Vec<f64>> = (0..k).map(|t| model.phi(t)).collect();
    let sim: Vec<Vec<f64>> = dense
        .iter()
        .map(|p| fitted.iter().map(|f| cosine(p, f)).collect())
        .collect();
    permutations(k)
        .into_iter()
        .map(|perm| {
            let score = (0..k).map(|i| sim[i][perm[i]]).sum::<f64>() / k as f64;
            (perm, score)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}
