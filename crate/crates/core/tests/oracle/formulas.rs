//! Direct evaluation of the hybrid, network and ROI feature formulas over raw
//! movie records, with no corpus indexes, snapshots or histories involved.

use std::collections::{BTreeMap, BTreeSet};

use mias_core::corpus::MovieRecord;
use mias_core::labeling::roi;

pub const TEAM: usize = 8;

pub fn team(m: &MovieRecord) -> &[String] {
    &m.cast[..m.cast.len().min(TEAM)]
}

pub fn prior<'a>(ms: &'a [MovieRecord], actor: &str, year: i32) -> Vec<&'a MovieRecord> {
    ms.iter()
        .filter(|m| m.year < year && m.cast.iter().any(|c| c == actor))
        .collect()
}

/// G_m . A_j and R_j for one actor.
pub fn expertise(ms: &[MovieRecord], f: &MovieRecord, actor: &str) -> (f64, f64) {
    let p = prior(ms, actor, f.year);
    if p.is_empty() {
        return (0.0, 0.0);
    }
    let ga: f64 = f
        .genres
        .iter()
        .map(|g| p.iter().filter(|m| m.genres.contains(g)).count() as f64 / p.len() as f64)
        .sum();
    let r: f64 = p.iter().filter_map(|m| m.revenue_usd).map(|x| x as f64).sum();
    (ga, r)
}

pub fn age_wage_cn(ms: &[MovieRecord], f: &MovieRecord) -> (f64, f64, f64) {
    let t = team(f);
    if t.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mut age = 0.0;
    let mut wage = 0.0;
    let mut cn = f64::NEG_INFINITY;
    for a in t {
        let (ga, r) = expertise(ms, f, a);
        age += ga;
        wage += (r + 1.0).log10() * ga;
        cn = cn.max((r + 1.0).log10() / (ga + 1.0));
    }
    (age / t.len() as f64, wage / t.len() as f64, cn)
}

pub fn awpg(ms: &[MovieRecord], f: &MovieRecord) -> f64 {
    ms.iter()
        .filter(|m| m.year == f.year - 1)
        .filter_map(|m| {
            let r = roi(m.revenue_usd? as f64, m.budget_usd? as f64).ok()?;
            let shared = f.genres.intersection(&m.genres).count() as f64;
            let denom = ((f.genres.len() * m.genres.len()) as f64).sqrt();
            Some(if denom == 0.0 { 0.0 } else { shared / denom * r })
        })
        .sum()
}

pub fn heterogeneity(ms: &[MovieRecord], f: &MovieRecord) -> Option<f64> {
    let t = team(f);
    if t.len() < 2 {
        return None;
    }
    let mut w: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    let mut people = BTreeSet::new();
    for m in ms.iter().filter(|m| m.year < f.year) {
        for a in team(m) {
            people.insert(a.as_str());
            for b in team(m) {
                if a != b {
                    *w.entry((a.as_str(), b.as_str())).or_default() += 1.0;
                }
            }
        }
    }
    let row = |a: &str| -> Vec<f64> { people.iter().map(|b| w.get(&(a, *b)).copied().unwrap_or(0.0)).collect() };
    let mut total = 0.0;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            let (x, y) = (row(&t[i]), row(&t[j]));
            let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
            if nx > 0.0 && ny > 0.0 {
                total += dot / (nx * ny);
            }
        }
    }
    Some(total / (t.len() * (t.len() - 1) / 2) as f64)
}
