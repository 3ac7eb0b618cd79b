//! Occupation catalogs that ads draw their task profiles from.

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use super::attributes::MajorGroup;
use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::taskspace::{composites, Composites, OccupationRow, OccupationTaskTable};
use crate::theory::TaskProfile;

/// A task cluster of the synthetic catalog: centile means and spreads (on the
/// unit scale) for `[a, p, r, m, phy, k]`, share of ads, and major-group mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub mean: [f64; 6],
    pub sd: [f64; 6],
    pub ad_share: f64,
    /// management, business, sales, office; the remainder is "other"
    pub major_mix: [f64; 4],
}

/// Four clusters shaped like the audit's K-means solution: high-analytical
/// low-routine, high-analytical high-routine, contact-heavy, and routine office work.
pub fn default_clusters() -> Vec<ClusterSpec> {
    let total = 36_880.0;
    vec![
        ClusterSpec {
            mean: [0.90, 0.86, 0.26, 0.12, 0.11, 0.35],
            sd: [0.04, 0.07, 0.13, 0.05, 0.06, 0.15],
            ad_share: 3_080.0 / total,
            major_mix: [0.352, 0.610, 0.0, 0.0],
        },
        ClusterSpec {
            mean: [0.88, 0.70, 0.68, 0.17, 0.12, 0.40],
            sd: [0.07, 0.16, 0.16, 0.08, 0.08, 0.11],
            ad_share: 3_556.0 / total,
            major_mix: [0.006, 0.946, 0.0, 0.0],
        },
        ClusterSpec {
            mean: [0.69, 0.70, 0.17, 0.12, 0.16, 0.80],
            sd: [0.17, 0.29, 0.10, 0.11, 0.10, 0.10],
            ad_share: 11_216.0 / total,
            major_mix: [0.209, 0.018, 0.583, 0.074],
        },
        ClusterSpec {
            mean: [0.48, 0.39, 0.69, 0.28, 0.18, 0.81],
            sd: [0.16, 0.19, 0.21, 0.17, 0.13, 0.18],
            ad_share: 19_028.0 / total,
            major_mix: [0.002, 0.125, 0.359, 0.476],
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationInfo {
    pub major_group: MajorGroup,
    /// generating cluster, when known
    pub cluster: Option<u8>,
    /// probability that an ad is for this occupation
    pub ad_weight: f64,
}

/// Occupation task table plus ad-sampling metadata and precomputed composites.
#[derive(Debug, Clone)]
pub struct OccupationCatalog {
    table: OccupationTaskTable,
    info: Vec<OccupationInfo>,
    composites: Composites,
    cumulative: Vec<f64>,
}

/// Integer apportionment by largest remainder; ties go to the lower index.
fn apportion(total: usize, shares: &[f64]) -> Vec<usize> {
    let sum: f64 = shares.iter().sum();
    let quotas: Vec<f64> = shares.iter().map(|s| s / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut rest: Vec<usize> = (0..shares.len()).collect();
    rest.sort_by(|&i, &j| (quotas[j] - quotas[j].floor()).total_cmp(&(quotas[i] - quotas[i].floor())).then(i.cmp(&j)));
    let assigned: usize = counts.iter().sum();
    for &i in rest.iter().take(total - assigned) {
        counts[i] += 1;
    }
    counts
}

impl OccupationCatalog {
    pub fn new(table: OccupationTaskTable, info: Vec<OccupationInfo>) -> Result<Self> {
        if table.len() != info.len() {
            return Err(Error::Precondition("catalog metadata does not match the task table".into()));
        }
        for (row, inf) in table.rows().iter().zip(&info) {
            let p = TaskProfile::new(row.a, row.p, row.r, row.m, row.phy, row.k);
            if let Err(e) = p {
                return Err(Error::Domain(format!("occupation {}: {e}", row.occupation_id)));
            }
            if !(inf.ad_weight >= 0.0 && inf.ad_weight.is_finite()) {
                return Err(Error::Domain(format!("occupation {}: bad ad weight", row.occupation_id)));
            }
        }
        let total: f64 = info.iter().map(|i| i.ad_weight).sum();
        if !(total > 0.0) {
            return Err(Error::Domain("catalog ad weights sum to zero".into()));
        }
        let mut acc = 0.0;
        let cumulative = info
            .iter()
            .map(|i| {
                acc += i.ad_weight / total;
                acc
            })
            .collect();
        let composites = composites(&table, 1.0, 1.0, 1.0)?;
        Ok(OccupationCatalog {
            table,
            info,
            composites,
            cumulative,
        })
    }

    /// Catalog from a task table whose intensities are already on `[0, 1]`.
    /// Ads are drawn in proportion to employment weight.
    pub fn from_table(table: OccupationTaskTable) -> Result<Self> {
        let info = table
            .rows()
            .iter()
            .map(|r| OccupationInfo {
                major_group: MajorGroup::Other,
                cluster: None,
                ad_weight: r.weight,
            })
            .collect();
        Self::new(table, info)
    }

    pub fn synthetic(n_occupations: usize, seed: u64) -> Result<Self> {
        Self::synthetic_from(&default_clusters(), n_occupations, seed)
    }

    pub fn synthetic_from(clusters: &[ClusterSpec], n_occupations: usize, seed: u64) -> Result<Self> {
        if n_occupations < 2 * clusters.len().max(1) {
            return Err(Error::Precondition("too few occupations for the cluster specification".into()));
        }
        let mut rng = rng::stream(seed, Domain::Occupations, 0);
        let per_cluster = apportion(n_occupations, &clusters.iter().map(|c| c.ad_share).collect::<Vec<_>>());
        let emp = LogNormal::new(0.0, 0.5).expect("valid lognormal");
        let mut rows = Vec::with_capacity(n_occupations);
        let mut info = Vec::with_capacity(n_occupations);
        for (ci, (spec, &n_c)) in clusters.iter().zip(&per_cluster).enumerate() {
            let other = (1.0 - spec.major_mix.iter().sum::<f64>()).max(0.0);
            let mix = [spec.major_mix[0], spec.major_mix[1], spec.major_mix[2], spec.major_mix[3], other];
            let counts = apportion(n_c, &mix);
            let realised: f64 = mix.iter().zip(&counts).filter(|(_, &c)| c > 0).map(|(m, _)| m).sum();
            for (mg, (&count, &share)) in MajorGroup::ALL.iter().zip(counts.iter().zip(&mix)) {
                for _ in 0..count {
                    let draw = |t: usize| {
                        let d = Normal::new(spec.mean[t], spec.sd[t]).expect("positive sd");
                        d.sample(&mut rng).clamp(0.01, 0.99)
                    };
                    let v: [f64; 6] = std::array::from_fn(draw);
                    let id = 1_000 + rows.len() as u32;
                    rows.push(OccupationRow {
                        occupation_id: id,
                        a: v[0],
                        p: v[1],
                        r: v[2],
                        m: v[3],
                        phy: v[4],
                        k: v[5],
                        weight: emp.sample(&mut rng),
                    });
                    info.push(OccupationInfo {
                        major_group: *mg,
                        cluster: Some(ci as u8),
                        ad_weight: spec.ad_share * share / realised / count as f64,
                    });
                }
            }
            // Keep the stream position independent of how many draws this cluster used.
            let _ = rng.random::<u64>();
        }
        Self::new(OccupationTaskTable::new(rows)?, info)
    }

    /// Copy with the cluster label of every occupation replaced.
    pub fn with_clusters(&self, labels: &[u8]) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::Precondition(format!(
                "{} cluster labels for {} occupations",
                labels.len(),
                self.len()
            )));
        }
        let mut out = self.clone();
        for (info, &l) in out.info.iter_mut().zip(labels) {
            info.cluster = Some(l);
        }
        Ok(out)
    }

    pub fn table(&self) -> &OccupationTaskTable {
        &self.table
    }

    pub fn info(&self) -> &[OccupationInfo] {
        &self.info
    }

    pub fn composites(&self) -> &Composites {
        &self.composites
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn profile(&self, idx: usize) -> TaskProfile {
        let r = &self.table.rows()[idx];
        TaskProfile {
            a: r.a,
            p: r.p,
            r: r.r,
            m: r.m,
            phy: r.phy,
            k: r.k,
        }
    }

    /// Occupation index for a uniform draw `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> usize {
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(10, &[0.5, 0.3, 0.2]), vec![5, 3, 2]);
        assert_eq!(apportion(175, &[3080.0, 3556.0, 11216.0, 19028.0]).iter().sum::<usize>(), 175);
    }

    #[test]
    fn synthetic_catalog_shape() {
        let cat = OccupationCatalog::synthetic(175, 7).unwrap();
        assert_eq!(cat.len(), 175);
        let total: f64 = cat.info().iter().map(|i| i.ad_weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mgmt: f64 = cat
            .info()
            .iter()
            .filter(|i| i.major_group == MajorGroup::Management)
            .map(|i| i.ad_weight)
            .sum();
        assert!((mgmt - 0.0946).abs() < 0.01, "management share {mgmt}");
        let again = OccupationCatalog::synthetic(175, 7).unwrap();
        assert_eq!(again.table(), cat.table());
    }

    #[test]
    fn sampling_covers_the_range() {
        let cat = OccupationCatalog::synthetic(40, 1).unwrap();
        assert_eq!(cat.sample(0.0), 0);
        assert_eq!(cat.sample(0.999_999_999), cat.len() - 1);
    }
}
