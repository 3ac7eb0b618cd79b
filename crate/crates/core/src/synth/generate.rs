//! Randomised résumé generation.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use super::attributes::{Computer, Gpa, Internship, Minor, ResumeAttributes};
use super::catalog::OccupationCatalog;
use super::config::DesignConfig;
use super::dataset::{AdComposites, Application, AuditDataset, JobAd};
use crate::error::Result;
use crate::group::Group;
use crate::rng::{self, Domain};

fn categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left a sliver above the last cumulative sum.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn draw_resume<R: Rng>(rng: &mut R, design: &DesignConfig, university_id: u8) -> ResumeAttributes {
    ResumeAttributes {
        group: Group::from_index(categorical(rng, &design.group_probs)).expect("six groups"),
        name_id: rng.random_range(0..2),
        university_id,
        major: rng.random_range(0..design.n_majors) as u8,
        minor: Minor::ALL[categorical(rng, &design.minor_probs)],
        gpa: Gpa::ALL[categorical(rng, &design.gpa_probs)],
        internship: Internship::ALL[categorical(rng, &design.internship_probs)],
        computer: Computer::ALL[categorical(rng, &design.computer_probs)],
        volunteer: rng.random_bool(design.p_volunteer),
        spanish: rng.random_bool(design.p_spanish),
        study_abroad: rng.random_bool(design.p_study_abroad),
        college_job: rng.random_bool(design.p_college_job),
    }
}

/// Draw `design.n_ads` ads and `k` résumés per ad. Each ad has its own random
/// stream, so the output does not depend on thread scheduling.
pub fn generate_dataset(design: &DesignConfig, catalog: &OccupationCatalog, seed: u64) -> Result<AuditDataset> {
    design.validate()?;
    let n_firms = ((design.n_ads as f64 * design.firms_per_ad).round() as u32).max(1);
    let comps = catalog.composites();
    let per_ad: Vec<(JobAd, Vec<Application>)> = (0..design.n_ads)
        .into_par_iter()
        .map(|j| {
            let mut rng = rng::stream(seed, Domain::Generate, j as u64);
            let occ = catalog.sample(rng.random());
            let row = &catalog.table().rows()[occ];
            let info = &catalog.info()[occ];
            let ad = JobAd {
                ad_id: j as u32 + 1,
                firm_id: rng.random_range(0..n_firms) + 1,
                occupation_id: row.occupation_id,
                major_group: info.major_group,
                job_category: categorical(&mut rng, &design.job_category_probs) as u8,
                cluster_id: info.cluster,
                profile: catalog.profile(occ),
                composites: AdComposites {
                    b_hat: comps.b_hat[occ],
                    p_hat: comps.p_hat[occ],
                    m_hat: comps.m_hat[occ],
                    c_hat: comps.c_hat[occ],
                    e_star: comps.e_star[occ],
                },
                ad_effect: 0.0,
            };
            let universities = sample(&mut rng, design.n_universities, design.k);
            let apps = universities
                .iter()
                .map(|u| Application {
                    ad: j as u32,
                    attrs: draw_resume(&mut rng, design, u as u8 + 1),
                    callback: None,
                })
                .collect();
            (ad, apps)
        })
        .collect();
    let mut ads = Vec::with_capacity(design.n_ads);
    let mut applications = Vec::with_capacity(design.n_ads * design.k);
    for (ad, apps) in per_ad {
        ads.push(ad);
        applications.extend(apps);
    }
    Ok(AuditDataset {
        ads,
        applications,
        k: design.k,
        seed,
        dgp: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n_ads: usize) -> (DesignConfig, OccupationCatalog) {
        let design = DesignConfig {
            n_ads,
            ..DesignConfig::default()
        };
        (design, OccupationCatalog::synthetic(60, 3).unwrap())
    }

    #[test]
    fn structure_and_distinct_universities() {
        let (design, cat) = small(500);
        let ds = generate_dataset(&design, &cat, 11).unwrap();
        assert_eq!(ds.len(), 2_000);
        ds.validate().unwrap();
        assert!(ds.applications.iter().all(|a| a.callback.is_none()));
    }

    #[test]
    fn deterministic() {
        let (design, cat) = small(200);
        let a = generate_dataset(&design, &cat, 5).unwrap();
        let b = generate_dataset(&design, &cat, 5).unwrap();
        assert_eq!(a, b);
        let c = generate_dataset(&design, &cat, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn infeasible_k() {
        let (mut design, cat) = small(10);
        design.k = 13;
        assert!(generate_dataset(&design, &cat, 1).is_err());
    }

    #[test]
    fn categorical_handles_rounding() {
        let mut r = rng::stream(1, Domain::Generate, 0);
        for _ in 0..1000 {
            let i = categorical(&mut r, &[0.0, 0.3, 0.7]);
            assert!(i == 1 || i == 2);
        }
    }
}
