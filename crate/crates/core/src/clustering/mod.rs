//! k-means over user vectors and Rand Index agreement with gold labels.

mod kmeans;

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, Labeling};
use crate::error::{Error, Result};
use crate::repr::UserVector;

pub use kmeans::{kmeans, ClusterConfig, KMeansFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub clusters: BTreeMap<String, usize>,
    pub inertia: f64,
    pub k: usize,
}

/// Cluster user vectors; vectors must share one dimension.
pub fn cluster_users(vectors: &[UserVector], cfg: &ClusterConfig) -> Result<ClusterAssignment> {
    let points: Vec<Vec<f64>> = vectors.iter().map(|v| v.values.clone()).collect();
    let fit = kmeans(&points, cfg)?;
    Ok(ClusterAssignment {
        clusters: vectors
            .iter()
            .zip(&fit.labels)
            .map(|(v, &l)| (v.user_id.clone(), l))
            .collect(),
        inertia: fit.inertia,
        k: cfg.k,
    })
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Fraction of unordered pairs on which two labelings agree.
pub fn rand_index<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Eq + Hash,
    B: Eq + Hash,
{
    if a.len() != b.len() {
        return Err(Error::Data(format!(
            "labelings differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Data("Rand Index needs at least two items".into()));
    }
    let mut rows: HashMap<&A, u64> = HashMap::new();
    let mut cols: HashMap<&B, u64> = HashMap::new();
    let mut cells: HashMap<(&A, &B), u64> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
        *cells.entry((x, y)).or_default() += 1;
    }
    let total = pairs(a.len() as u64);
    let same_both: u64 = cells.values().map(|&c| pairs(c)).sum();
    let same_a: u64 = rows.values().map(|&c| pairs(c)).sum();
    let same_b: u64 = cols.values().map(|&c| pairs(c)).sum();
    // agreements = together in both + apart in both
    let agree = total + 2 * same_both - same_a - same_b;
    Ok(agree as f64 / total as f64)
}

/// Two- or three-class view of the gold labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldScheme {
    TwoClass,
    ThreeClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GoldClass {
    HM,
    NotHM,
    R,
    N,
}

pub fn collapse_label(label: Label, scheme: GoldScheme) -> GoldClass {
    match (scheme, label) {
        (_, Label::HM) => GoldClass::HM,
        (GoldScheme::TwoClass, _) => GoldClass::NotHM,
        (GoldScheme::ThreeClass, Label::R) => GoldClass::R,
        (GoldScheme::ThreeClass, Label::N) => GoldClass::N,
    }
}

pub fn collapse_gold(labels: &Labeling, scheme: GoldScheme) -> BTreeMap<String, GoldClass> {
    labels
        .iter()
        .map(|(u, &l)| (u.clone(), collapse_label(l, scheme)))
        .collect()
}

/// Parse raw label strings and collapse them; unknown labels are data errors.
pub fn collapse_gold_strs<'a, I>(labels: I, scheme: GoldScheme) -> Result<Vec<GoldClass>>
where
    I: IntoIterator<Item = &'a str>,
{
    labels
        .into_iter()
        .map(|s| s.parse::<Label>().map(|l| collapse_label(l, scheme)))
        .collect()
}

/// Rand Index over the users present in both the assignment and the gold map.
pub fn rand_index_on_gold<L: Eq + Hash>(
    pred: &ClusterAssignment,
    gold: &BTreeMap<String, L>,
) -> Result<f64> {
    let (p, g): (Vec<usize>, Vec<&L>) = gold
        .iter()
        .filter_map(|(u, l)| pred.clusters.get(u).map(|&c| (c, l)))
        .unzip();
    rand_index(&p, &g)
}
