//! Lloyd's K-means with k-means++ seeding, restarts and an elbow scan.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            restarts: 10,
            max_iter: 300,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub wss: f64,
    /// WSS after each Lloyd assignment step of the winning restart
    pub wss_trace: Vec<f64>,
    pub restart: usize,
}

impl ClusterModel {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &a in &self.assignments {
            s[a] += 1;
        }
        s
    }

    /// Relabel clusters so that label order follows first appearance in the data.
    pub fn canonical_labels(&self) -> Vec<usize> {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        self.assignments
            .iter()
            .map(|&a| {
                if map[a] == usize::MAX {
                    map[a] = next;
                    next += 1;
                }
                map[a]
            })
            .collect()
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = sq_dist(point, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn validate(points: &[Vec<f64>], k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    if k > points.len() {
        return Err(Error::Precondition(format!("k = {k} exceeds the {} points", points.len())));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
        return Err(Error::Domain("points must share a dimension and be finite".into()));
    }
    Ok(dim)
}

fn plus_plus<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target {
                    idx = i;
                    break;
                }
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

struct LloydRun {
    centroids: Vec<Vec<f64>>,
    assignments: Vec<usize>,
    wss: f64,
    trace: Vec<f64>,
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iter: usize) -> LloydRun {
    let k = centroids.len();
    let dim = points[0].len();
    let mut assignments = vec![usize::MAX; points.len()];
    let mut trace = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut dists = vec![0.0; points.len()];
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            if assignments[i] != c {
                assignments[i] = c;
                changed = true;
            }
            dists[i] = d;
        }
        // Re-seed empty clusters from the point farthest from its centroid.
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..points.len())
                .filter(|&i| counts[assignments[i]] > 1)
                .max_by(|&i, &j| dists[i].total_cmp(&dists[j]).then(j.cmp(&i)));
            if let Some(i) = far {
                counts[assignments[i]] -= 1;
                assignments[i] = c;
                counts[c] = 1;
                dists[i] = 0.0;
                centroids[c] = points[i].clone();
                changed = true;
            }
        }
        trace.push(dists.iter().sum());
        if !changed && trace.len() > 1 {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &a) in points.iter().zip(&assignments) {
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let wss = points
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum();
    LloydRun {
        centroids,
        assignments,
        wss,
        trace,
    }
}

fn best_of(runs: Vec<(usize, LloydRun)>, k: usize) -> ClusterModel {
    let (restart, run) = runs
        .into_iter()
        .min_by(|a, b| a.1.wss.total_cmp(&b.1.wss).then(a.0.cmp(&b.0)))
        .expect("at least one restart");
    ClusterModel {
        k,
        centroids: run.centroids,
        assignments: run.assignments,
        wss: run.wss,
        wss_trace: run.trace,
        restart,
    }
}

fn restarts(points: &[Vec<f64>], config: &KMeansConfig) -> Vec<(usize, LloydRun)> {
    (0..config.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(config.seed, Domain::KMeans, ((config.k as u64) << 32) | r as u64);
            let init = plus_plus(points, config.k, &mut rng);
            (r, lloyd(points, init, config.max_iter))
        })
        .collect()
}

pub fn kmeans(points: &[Vec<f64>], config: &KMeansConfig) -> Result<ClusterModel> {
    validate(points, config.k)?;
    Ok(best_of(restarts(points, config), config.k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowScan {
    pub ks: Vec<usize>,
    pub wss: Vec<f64>,
    /// k with the largest discrete second difference of WSS
    pub suggested_k: Option<usize>,
    pub models: Vec<ClusterModel>,
}

/// Fit every k in `k_min..=k_max`. Each k also tries the previous solution plus
/// the farthest point as a warm start, so the WSS curve never rises.
pub fn elbow(points: &[Vec<f64>], k_min: usize, k_max: usize, restarts_per_k: usize, seed: u64) -> Result<ElbowScan> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::Precondition(format!("invalid k range {k_min}..={k_max}")));
    }
    validate(points, k_max)?;
    let mut models: Vec<ClusterModel> = Vec::new();
    for k in k_min..=k_max {
        let config = KMeansConfig {
            k,
            restarts: restarts_per_k,
            max_iter: 300,
            seed,
        };
        let mut runs = restarts(points, &config);
        if let Some(prev) = models.last() {
            let mut init = prev.centroids.clone();
            let far = points
                .iter()
                .zip(&prev.assignments)
                .enumerate()
                .max_by(|(i, (p, &a)), (j, (q, &b))| {
                    sq_dist(p, &prev.centroids[a])
                        .total_cmp(&sq_dist(q, &prev.centroids[b]))
                        .then(j.cmp(i))
                })
                .map(|(i, _)| i)
                .expect("nonempty");
            init.push(points[far].clone());
            runs.push((config.restarts.max(1), lloyd(points, init, config.max_iter)));
        }
        models.push(best_of(runs, k));
    }
    let ks: Vec<usize> = (k_min..=k_max).collect();
    let wss: Vec<f64> = models.iter().map(|m| m.wss).collect();
    let suggested_k = (1..wss.len().saturating_sub(1))
        .max_by(|&i, &j| {
            let di = wss[i - 1] - 2.0 * wss[i] + wss[i + 1];
            let dj = wss[j - 1] - 2.0 * wss[j] + wss[j + 1];
            di.total_cmp(&dj).then(j.cmp(&i))
        })
        .map(|i| ks[i]);
    Ok(ElbowScan {
        ks,
        wss,
        suggested_k,
        models,
    })
}

fn choose2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Hubert-Arabie adjusted Rand index between two labelings.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let index: f64 = table.iter().flatten().map(|&c| choose2(c as f64)).sum();
    let rows: f64 = table.iter().map(|r| choose2(r.iter().sum::<usize>() as f64)).sum();
    let cols: f64 = (0..kb)
        .map(|j| choose2(table.iter().map(|r| r[j]).sum::<usize>() as f64))
        .sum();
    let total = choose2(n as f64);
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_equal_n_has_zero_wss() {
        let pts = vec![vec![0.0, 1.0], vec![3.0, 1.0], vec![5.0, -2.0]];
        let m = kmeans(&pts, &KMeansConfig::new(3, 1)).unwrap();
        assert_eq!(m.wss, 0.0);
        let mut s = m.sizes();
        s.sort();
        assert_eq!(s, vec![1, 1, 1]);
    }

    #[test]
    fn rejects_bad_k() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(kmeans(&pts, &KMeansConfig::new(3, 1)).is_err());
        assert!(kmeans(&pts, &KMeansConfig::new(0, 1)).is_err());
    }

    #[test]
    fn empty_cluster_is_reseeded() {
        // Start with two identical centroids so one cluster is empty.
        let pts = vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]];
        let run = lloyd(&pts, vec![vec![0.0], vec![0.0]], 50);
        let mut counts = [0; 2];
        for &a in &run.assignments {
            counts[a] += 1;
        }
        assert_eq!(counts, [2, 2]);
        assert!((run.wss - 0.01).abs() < 1e-12);
    }

    #[test]
    fn ari_properties() {
        let a = [0, 0, 1, 1, 2, 2];
        assert_eq!(adjusted_rand_index(&a, &[2, 2, 0, 0, 1, 1]), 1.0);
        assert!(adjusted_rand_index(&a, &[0, 1, 0, 1, 0, 1]) < 0.1);
        // Reference value from the contingency formula worked by hand.
        let ari = adjusted_rand_index(&[0, 0, 0, 1, 1, 1], &[0, 0, 1, 1, 2, 2]);
        assert!((ari - 0.242_424_242_424_242_4).abs() < 1e-12);
    }

    #[test]
    fn trace_never_rises() {
        let pts: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![((i * 7919) % 97) as f64, ((i * 104_729) % 89) as f64])
            .collect();
        let m = kmeans(&pts, &KMeansConfig::new(5, 3)).unwrap();
        for w in m.wss_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        assert!(m.wss <= m.wss_trace[0] + 1e-9);
    }
}
