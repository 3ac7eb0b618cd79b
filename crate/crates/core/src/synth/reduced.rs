//! Reduced-form callbacks: configured gaps on a baseline rate plus a bounded
//! ad effect calibrated to a target intraclass correlation.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::attributes::{Credential, MajorGroup};
use super::dataset::AuditDataset;
use super::dgp::{CallbackDgp, DgpReport};
use crate::error::{Error, Result};
use crate::group::Group;
use crate::rng::{self, Domain};
use crate::stats;
use crate::taskspace::composite::median;

fn default_returns() -> BTreeMap<Credential, f64> {
    [
        (Credential::SocialIntern, 0.011),
        (Credential::ProgData, 0.010),
        (Credential::StudyAbroad, 0.008),
        (Credential::GpaListed, 0.0),
        (Credential::QuantIntern, 0.0),
        (Credential::MathMinor, 0.0),
    ]
    .into_iter()
    .collect()
}

/// All effects are in probability units. Credential, discretion, attenuation
/// and peer terms are centred at their dataset means, so the group gaps and the
/// White-male rate are exactly the configured values on average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReducedFormConfig {
    /// White-male callback rate
    pub baseline: f64,
    /// gap of each group relative to White men, applied everywhere
    pub gaps: BTreeMap<Group, f64>,
    /// additional gaps in ads of a major occupation group
    pub major_group_gaps: BTreeMap<MajorGroup, BTreeMap<Group, f64>>,
    /// additional gaps in ads of a job category
    pub category_gaps: BTreeMap<u8, BTreeMap<Group, f64>>,
    /// minority gap change per standard deviation of the ad's E*; negative
    /// values widen gaps in high-discretion jobs
    pub discretion_gradient: f64,
    pub credential_returns: BTreeMap<Credential, f64>,
    /// extra return for minority holders in below-median-E* ads
    pub credential_minority_low: BTreeMap<Credential, f64>,
    /// shift for minority applicants per minority co-applicant
    pub peer_effect: f64,
    /// target ANOVA ICC of callbacks within ads
    pub icc: f64,
}

impl Default for ReducedFormConfig {
    fn default() -> Self {
        ReducedFormConfig {
            baseline: 0.15,
            gaps: BTreeMap::new(),
            major_group_gaps: BTreeMap::new(),
            category_gaps: BTreeMap::new(),
            discretion_gradient: 0.0,
            credential_returns: default_returns(),
            credential_minority_low: BTreeMap::new(),
            peer_effect: 0.0,
            icc: 0.30,
        }
    }
}

impl ReducedFormConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.baseline > 0.0 && self.baseline < 1.0) {
            return Err(Error::config("dgp.params.baseline", "must lie in (0, 1)"));
        }
        if !(0.0..=0.9).contains(&self.icc) {
            return Err(Error::config("dgp.params.icc", format!("must lie in [0, 0.9], got {}", self.icc)));
        }
        if self.gaps.get(&Group::WM).is_some_and(|&g| g != 0.0) {
            return Err(Error::config("dgp.params.gaps.WM", "reference group gap must be 0"));
        }
        for g in Group::ALL {
            let mut worst_low = self.baseline + self.gap(g);
            let mut worst_high = worst_low;
            for cells in self.major_group_gaps.values().chain(self.category_gaps.values()) {
                let extra = cells.get(&g).copied().unwrap_or(0.0);
                worst_low = worst_low.min(worst_low + extra);
                worst_high = worst_high.max(worst_high + extra);
            }
            if !(worst_low > 0.0 && worst_high < 1.0) {
                return Err(Error::config(
                    format!("dgp.params.gaps.{g}"),
                    "baseline plus gaps must stay inside (0, 1)",
                ));
            }
        }
        let finite = [self.discretion_gradient, self.peer_effect]
            .into_iter()
            .chain(self.credential_returns.values().copied())
            .chain(self.credential_minority_low.values().copied())
            .all(f64::is_finite);
        if !finite {
            return Err(Error::config("dgp.params", "effects must be finite"));
        }
        Ok(())
    }

    pub fn gap(&self, g: Group) -> f64 {
        self.gaps.get(&g).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct ReducedFormDgp {
    config: ReducedFormConfig,
}

/// Expected one-way ANOVA ICC, as a function of the ad-effect variance `v`,
/// for Bernoulli outcomes with per-application means `q` in groups of `k`.
/// Ratio of expected mean squares; every term is linear in `v`.
#[derive(Debug, Clone, Copy)]
pub struct ExpectedIcc {
    ssb0: f64,
    ssw0: f64,
    j: f64,
    n: f64,
    k: f64,
}

impl ExpectedIcc {
    pub fn new(q: &[f64], k: usize) -> Self {
        let n = q.len() as f64;
        let kf = k as f64;
        let j = n / kf;
        let qbar = q.iter().sum::<f64>() / n;
        let bern: f64 = q.iter().map(|p| p * (1.0 - p)).sum();
        let mut within_means = 0.0;
        for chunk in q.chunks(k) {
            let m = chunk.iter().sum::<f64>() / kf;
            within_means += chunk.iter().map(|p| (p - m) * (p - m)).sum::<f64>();
        }
        let sst0 = q.iter().sum::<f64>() - n * qbar * qbar - bern / n;
        let ssw0 = (1.0 - 1.0 / kf) * bern + within_means;
        ExpectedIcc {
            ssb0: sst0 - ssw0,
            ssw0,
            j,
            n,
            k: kf,
        }
    }

    pub fn at(&self, v: f64) -> f64 {
        let ssw = self.ssw0 - (1.0 - 1.0 / self.k) * self.n * v;
        let ssb = self.ssb0 + (self.k - 1.0) * (self.j - 1.0) * v;
        let msb = ssb / (self.j - 1.0);
        let msw = ssw / (self.n - self.j);
        (msb - msw) / (msb + (self.k - 1.0) * msw)
    }
}

struct Calibration {
    variance: f64,
    expected: f64,
    warnings: Vec<String>,
}

/// Bisect the ad-effect variance so the expected ICC hits `target`.
fn calibrate(model: &ExpectedIcc, target: f64, v_cap: f64) -> Result<Calibration> {
    const REACH: f64 = 0.05;
    let floor = model.at(0.0);
    if target <= floor {
        if floor - target > REACH {
            return Err(Error::Calibration(format!(
                "target ICC {target:.3} is below the {floor:.3} implied by the fixed effects alone"
            )));
        }
        return Ok(Calibration {
            variance: 0.0,
            expected: floor,
            warnings: if floor > target {
                vec![format!("ICC floor {floor:.4} exceeds target {target:.4}")]
            } else {
                vec![]
            },
        });
    }
    let ceiling = model.at(v_cap);
    if ceiling < target {
        if target - ceiling > REACH {
            return Err(Error::Calibration(format!(
                "target ICC {target:.3} unreachable: bounded ad effects reach at most {ceiling:.3}"
            )));
        }
        return Ok(Calibration {
            variance: v_cap,
            expected: ceiling,
            warnings: vec![format!("ICC capped at {ceiling:.4} below target {target:.4}")],
        });
    }
    let (mut lo, mut hi) = (0.0, v_cap);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model.at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * v_cap {
            break;
        }
    }
    let variance = 0.5 * (lo + hi);
    Ok(Calibration {
        variance,
        expected: model.at(variance),
        warnings: vec![],
    })
}

impl ReducedFormDgp {
    pub fn new(config: ReducedFormConfig) -> Result<Self> {
        config.validate()?;
        Ok(ReducedFormDgp { config })
    }

    pub fn config(&self) -> &ReducedFormConfig {
        &self.config
    }

    /// Mean callback probability of every application before the ad effect.
    pub fn means(&self, ds: &AuditDataset) -> Vec<f64> {
        let c = &self.config;
        let apps = &ds.applications;
        let n = apps.len() as f64;

        let cred_means: BTreeMap<Credential, f64> = Credential::ALL
            .iter()
            .map(|&cr| (cr, apps.iter().filter(|a| cr.holds(&a.attrs)).count() as f64 / n))
            .collect();

        let e_star: Vec<f64> = ds.ads.iter().map(|a| a.composites.e_star).collect();
        let e_mean = stats::mean(&e_star);
        let e_sd = stats::variance(&e_star).sqrt();
        let e_z: Vec<f64> = e_star
            .iter()
            .map(|e| if e_sd > 0.0 { (e - e_mean) / e_sd } else { 0.0 })
            .collect();
        let e_med = median(&e_star);
        let low: Vec<bool> = e_star.iter().map(|&e| e <= e_med).collect();

        let minority: Vec<bool> = apps.iter().map(|a| a.attrs.group.is_minority()).collect();
        let n_min = minority.iter().filter(|&&m| m).count().max(1) as f64;
        let z_min_mean = apps
            .iter()
            .zip(&minority)
            .filter(|(_, &m)| m)
            .map(|(a, _)| e_z[a.ad as usize])
            .sum::<f64>()
            / n_min;

        let low_cred_means: BTreeMap<Credential, f64> = c
            .credential_minority_low
            .keys()
            .map(|&cr| {
                let hits = apps
                    .iter()
                    .zip(&minority)
                    .filter(|(a, &m)| m && low[a.ad as usize] && cr.holds(&a.attrs))
                    .count();
                (cr, hits as f64 / n_min)
            })
            .collect();

        let peers = ds.peer_counts(false);
        let peer_mean = apps
            .iter()
            .zip(&minority)
            .zip(&peers)
            .filter(|((_, &m), _)| m)
            .map(|(_, &p)| p as f64)
            .sum::<f64>()
            / n_min;

        apps.iter()
            .zip(&minority)
            .zip(&peers)
            .map(|((app, &is_min), &peer)| {
                let ad = &ds.ads[app.ad as usize];
                let g = app.attrs.group;
                let mut q = c.baseline + c.gap(g);
                if let Some(cells) = c.major_group_gaps.get(&ad.major_group) {
                    q += cells.get(&g).copied().unwrap_or(0.0);
                }
                if let Some(cells) = c.category_gaps.get(&ad.job_category) {
                    q += cells.get(&g).copied().unwrap_or(0.0);
                }
                for (cr, tau) in &c.credential_returns {
                    let x = f64::from(u8::from(cr.holds(&app.attrs)));
                    q += tau * (x - cred_means[cr]);
                }
                if is_min {
                    q += c.discretion_gradient * (e_z[app.ad as usize] - z_min_mean);
                    for (cr, theta) in &c.credential_minority_low {
                        let x = f64::from(u8::from(low[app.ad as usize] && cr.holds(&app.attrs)));
                        q += theta * (x - low_cred_means[cr]);
                    }
                    q += c.peer_effect * (peer as f64 - peer_mean);
                }
                q
            })
            .collect()
    }
}

impl CallbackDgp for ReducedFormDgp {
    fn name(&self) -> &'static str {
        "reduced"
    }

    fn simulate(&self, ds: &mut AuditDataset, seed: u64) -> Result<DgpReport> {
        ds.validate()?;
        let q = self.means(ds);
        let q_min = q.iter().copied().fold(f64::INFINITY, f64::min);
        let q_max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(q_min > 0.0 && q_max < 1.0) {
            return Err(Error::Domain(format!(
                "callback means span [{q_min:.4}, {q_max:.4}], outside (0, 1); reduce the configured effects"
            )));
        }
        // Ad effects live on [lo, hi] so that no probability leaves [0, 1].
        let (lo, hi) = (-q_min, 1.0 - q_max);
        let width = hi - lo;
        let mu = -lo / width;
        let v_max = width * width * mu * (1.0 - mu);
        // Keep the Beta concentration away from zero.
        let v_cap = v_max / 1.001;

        let model = ExpectedIcc::new(&q, ds.k);
        let cal = if self.config.icc == 0.0 {
            Calibration {
                variance: 0.0,
                expected: model.at(0.0),
                warnings: vec![],
            }
        } else {
            calibrate(&model, self.config.icc, v_cap)?
        };
        let shape = if cal.variance > 0.0 {
            let kappa = v_max / cal.variance - 1.0;
            Some((mu * kappa, (1.0 - mu) * kappa))
        } else {
            None
        };
        let beta = shape
            .map(|(a, b)| Beta::new(a, b).map_err(|e| Error::Calibration(format!("invalid Beta({a}, {b}): {e}"))))
            .transpose()?;

        let k = ds.k;
        let clamps: usize = ds
            .applications
            .par_chunks_mut(k)
            .zip(ds.ads.par_iter_mut())
            .zip(q.par_chunks(k))
            .enumerate()
            .map(|(j, ((apps, ad), q))| {
                let mut r = rng::stream(seed, Domain::Reduced, j as u64);
                let u = match &beta {
                    Some(b) => lo + width * b.sample(&mut r),
                    None => 0.0,
                };
                ad.ad_effect = u;
                let mut clamped = 0;
                for (app, &qi) in apps.iter_mut().zip(q) {
                    let p = qi + u;
                    if !(0.0..=1.0).contains(&p) {
                        clamped += 1;
                    }
                    app.callback = Some(r.random::<f64>() < p.clamp(0.0, 1.0));
                }
                clamped
            })
            .sum();

        let clamp_rate = clamps as f64 / ds.len() as f64;
        let mut warnings = cal.warnings;
        if clamp_rate >= 0.001 {
            warnings.push(format!("clamp rate {:.3}% exceeds 0.1%", 100.0 * clamp_rate));
        }
        for w in &warnings {
            log::warn!("reduced-form DGP: {w}");
        }
        ds.dgp = Some(self.name().into());
        Ok(DgpReport {
            dgp: self.name().into(),
            clamp_events: clamps,
            clamp_rate,
            icc_target: Some(self.config.icc),
            ad_effect_variance: Some(cal.variance),
            expected_icc: Some(cal.expected),
            beta_shape: shape,
            ad_effect_bounds: Some((lo, hi)),
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_icc_homogeneous_case() {
        // Constant means: ICC = v / (q (1 - q)).
        let q = vec![0.2; 4_000];
        let m = ExpectedIcc::new(&q, 4);
        assert!(m.at(0.0).abs() < 1e-12);
        assert!((m.at(0.016) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn calibration_hits_target_and_reports_unreachable() {
        let q = vec![0.15; 4_000];
        let m = ExpectedIcc::new(&q, 4);
        let cal = calibrate(&m, 0.3, 0.1).unwrap();
        assert!((cal.expected - 0.3).abs() < 1e-10);
        assert!((cal.variance - 0.3 * 0.1275).abs() < 1e-10);
        assert!(matches!(calibrate(&m, 0.3, 0.01), Err(Error::Calibration(_))));
    }

    #[test]
    fn config_validation() {
        let mut c = ReducedFormConfig::default();
        c.validate().unwrap();
        c.gaps.insert(Group::BM, -0.2);
        assert!(c.validate().is_err());
        let c = ReducedFormConfig {
            icc: 0.95,
            ..ReducedFormConfig::default()
        };
        assert!(c.validate().is_err());
        let json = r#"{"gaps": {"BM": -0.05}, "major_group_gaps": {"management": {"WW": -0.03}}, "category_gaps": {"2": {"BM": 0.075}}}"#;
        let c: ReducedFormConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.gap(Group::BM), -0.05);
        assert_eq!(c.category_gaps[&2][&Group::BM], 0.075);
        assert_eq!(c.major_group_gaps[&MajorGroup::Management][&Group::WW], -0.03);
    }
}
