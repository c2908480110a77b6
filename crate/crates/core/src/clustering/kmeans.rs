use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub k: usize,
    pub n_init: usize,
    pub max_iter: usize,
    /// Relative tolerance on the squared center shift (scaled by the mean
    /// per-dimension variance of the data).
    pub tol: f64,
    pub seed: u64,
    /// Z-score every dimension before clustering.
    pub standardize: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k: 2,
            n_init: 10,
            max_iter: 300,
            tol: 1e-4,
            seed: 0,
            standardize: false,
        }
    }
}

impl ClusterConfig {
    pub fn with_k(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config("k must be at least 2".into()));
        }
        if self.n_init == 0 {
            return Err(Error::Config("n_init must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after every assignment step of the winning run.
    pub inertia_trace: Vec<f64>,
    /// Index of the winning restart.
    pub run: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn distinct_points(points: &[Vec<f64>]) -> usize {
    points
        .iter()
        .map(|p| p.iter().map(|v| v.to_bits()).collect::<Vec<_>>())
        .collect::<HashSet<_>>()
        .len()
}

pub(crate) fn standardize(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points.len() as f64;
    let dim = points.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; dim];
    let mut var = vec![0.0; dim];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x / n;
        }
    }
    for p in points {
        for ((v, m), x) in var.iter_mut().zip(&mean).zip(p) {
            *v += (x - m) * (x - m) / n;
        }
    }
    points
        .iter()
        .map(|p| {
            p.iter()
                .zip(mean.iter().zip(&var))
                .map(|(x, (m, v))| if *v > 0.0 { (x - m) / v.sqrt() } else { 0.0 })
                .collect()
        })
        .collect()
}

fn kmeans_pp(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                u -= d;
                if u < 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>], labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (p, l) in points.iter().zip(labels.iter_mut()) {
        let mut best = (0, f64::INFINITY);
        for (c, center) in centers.iter().enumerate() {
            let d = sq_dist(p, center);
            if d < best.1 {
                best = (c, d);
            }
        }
        *l = best.0;
        inertia += best.1;
    }
    inertia
}

fn lloyd(points: &[Vec<f64>], cfg: &ClusterConfig, tol_abs: f64, seed: u64, run: usize) -> KMeansFit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = points[0].len();
    let mut centers = kmeans_pp(points, cfg.k, &mut rng);
    let mut labels = vec![0usize; points.len()];
    let mut trace = Vec::new();
    for _ in 0..cfg.max_iter {
        trace.push(assign(points, &centers, &mut labels));
        let mut sums = vec![vec![0.0; dim]; cfg.k];
        let mut counts = vec![0usize; cfg.k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut new_centers: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &n)| {
                if n > 0 {
                    s.into_iter().map(|v| v / n as f64).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        // Empty clusters move to the point farthest from its current center.
        let mut taken = HashSet::new();
        for c in 0..cfg.k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..points.len())
                .filter(|i| !taken.contains(i))
                .max_by(|&a, &b| {
                    let da = sq_dist(&points[a], &centers[labels[a]]);
                    let db = sq_dist(&points[b], &centers[labels[b]]);
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("k <= distinct points");
            taken.insert(far);
            new_centers[c] = points[far].clone();
        }
        let shift: f64 = centers
            .iter()
            .zip(&new_centers)
            .map(|(a, b)| sq_dist(a, b))
            .sum();
        centers = new_centers;
        if shift <= tol_abs {
            break;
        }
    }
    let inertia = assign(points, &centers, &mut labels);
    trace.push(inertia);
    KMeansFit {
        labels,
        centers,
        inertia,
        inertia_trace: trace,
        run,
    }
}

/// Lloyd's k-means with k-means++ seeding; best of `n_init` restarts.
///
/// Restarts run in parallel; the lowest inertia wins, earlier restarts win ties.
pub fn kmeans(points: &[Vec<f64>], cfg: &ClusterConfig) -> Result<KMeansFit> {
    cfg.validate()?;
    let dim = points.first().map_or(0, Vec::len);
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Data("points have inconsistent dimensions".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Data("points contain non-finite values".into()));
    }
    let distinct = distinct_points(points);
    if distinct < cfg.k {
        return Err(Error::Data(format!(
            "{distinct} distinct points cannot form {} clusters",
            cfg.k
        )));
    }
    let scaled;
    let points = if cfg.standardize {
        scaled = standardize(points);
        &scaled
    } else {
        points
    };
    let n = points.len() as f64;
    let mean_var = (0..dim)
        .map(|d| {
            let m = points.iter().map(|p| p[d]).sum::<f64>() / n;
            points.iter().map(|p| (p[d] - m).powi(2)).sum::<f64>() / n
        })
        .sum::<f64>()
        / dim.max(1) as f64;
    let tol_abs = cfg.tol * mean_var;
    let fits: Vec<KMeansFit> = (0..cfg.n_init)
        .into_par_iter()
        .map(|run| {
            let seed = cfg.seed.wrapping_add(run as u64);
            lloyd(points, cfg, tol_abs, seed, run)
        })
        .collect();
    Ok(fits
        .into_iter()
        .reduce(|best, f| if f.inertia < best.inertia { f } else { best })
        .expect("n_init >= 1"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::rand_index;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn two_points_two_clusters() {
        let fit = kmeans(&[vec![0.0], vec![10.0]], &ClusterConfig::with_k(2)).unwrap();
        assert_ne!(fit.labels[0], fit.labels[1]);
        assert_eq!(fit.inertia, 0.0);
    }

    #[test]
    fn k_equals_n_gives_zero_inertia() {
        let pts = vec![vec![0.0, 1.0], vec![5.0, 5.0], vec![-3.0, 2.0], vec![9.0, 0.0]];
        let fit = kmeans(&pts, &ClusterConfig::with_k(4)).unwrap();
        assert_eq!(fit.inertia, 0.0);
    }

    #[test]
    fn too_few_distinct_points() {
        let pts = vec![vec![1.0], vec![1.0], vec![1.0]];
        assert!(matches!(kmeans(&pts, &ClusterConfig::with_k(2)), Err(Error::Data(_))));
        assert!(kmeans(&pts, &ClusterConfig::with_k(1)).unwrap_err().is_config());
    }

    #[test]
    fn gaussian_blobs_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let centers = [[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]];
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..40 {
                pts.push(center.iter().map(|m| m + noise.sample(&mut rng)).collect());
                truth.push(c);
            }
        }
        let fit = kmeans(&pts, &ClusterConfig::with_k(3)).unwrap();
        assert_eq!(rand_index(&fit.labels, &truth).unwrap(), 1.0);
    }

    #[test]
    fn inertia_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let cfg = ClusterConfig {
            k: 5,
            tol: 0.0,
            ..ClusterConfig::default()
        };
        let fit = kmeans(&pts, &cfg).unwrap();
        for w in fit.inertia_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{:?}", fit.inertia_trace);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let pts: Vec<Vec<f64>> = (0..50).map(|i| vec![(i * 7 % 13) as f64, (i % 5) as f64]).collect();
        let a = kmeans(&pts, &ClusterConfig::with_k(3)).unwrap();
        let b = kmeans(&pts, &ClusterConfig::with_k(3)).unwrap();
        assert_eq!(a, b);
    }
}
