use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use taskgap_core::estimator::{
    bp_decomposition, contact_split, credential_attenuation, fit, gap_table, interference_check, ContactSubsample,
    Design, FixedEffects, Grouping, RegressionSpec,
};
use taskgap_core::synth::{
    generate_dataset, AuditDataset, CallbackDgp, Credential, DesignConfig, MajorGroup, OccupationCatalog,
    ReducedFormConfig, ReducedFormDgp,
};
use taskgap_core::{Error, Group};

fn audit(n_ads: usize, seed: u64) -> AuditDataset {
    let catalog = OccupationCatalog::synthetic(175, seed).unwrap();
    let design = DesignConfig {
        n_ads,
        ..Default::default()
    };
    generate_dataset(&design, &catalog, seed).unwrap()
}

fn simulate(ds: &mut AuditDataset, cfg: ReducedFormConfig, seed: u64) {
    ReducedFormDgp::new(cfg).unwrap().simulate(ds, seed).unwrap();
}

#[test]
fn absorbed_fit_matches_dummy_ols() {
    let mut r = Pcg64::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for rep in 0..20 {
        let n_ads = r.random_range(5..=50);
        let mut ds = audit(n_ads, 100 + rep);
        simulate(&mut ds, ReducedFormConfig::default(), rep);
        if ds.callbacks().unwrap().iter().all(|&y| y == 0.0) {
            continue;
        }
        let spec = RegressionSpec {
            credentials: Credential::POSITIVE.to_vec(),
            ..Default::default()
        };
        let absorbed = spec.fit(&ds).unwrap();

        let mut d: Design = RegressionSpec {
            fixed_effects: FixedEffects::None,
            ..spec.clone()
        }
        .design(&ds)
        .unwrap();
        // ad dummies lead, so collinear regressors are judged against them first
        for j in 1..ds.n_ads() {
            let col = ds.applications.iter().map(|a| f64::from(u8::from(a.ad as usize == j))).collect();
            d.names.insert(j - 1, format!("ad{j}"));
            d.columns.insert(j - 1, col);
        }
        let dummy = fit(&d).unwrap();
        for (name, b) in absorbed.names.iter().zip(&absorbed.coef) {
            if absorbed.dropped.contains(name) {
                continue;
            }
            let other = dummy.coef_of(name).unwrap();
            worst = worst.max((b - other).abs());
        }
    }
    assert!(worst < 1e-8, "max |difference| {worst:e}");
}

#[test]
fn one_category_grouping_is_the_overall_model() {
    let mut ds = audit(400, 3);
    simulate(&mut ds, ReducedFormConfig::default(), 3);
    let t = gap_table(&ds, Grouping::None).unwrap();
    let overall = RegressionSpec::default().fit(&ds).unwrap();
    for g in Group::MINORITIES {
        let cell = t.cell(g, "all").unwrap().result.unwrap();
        assert!((cell.estimate - overall.coef_of(g.code()).unwrap()).abs() < 1e-10);
        assert!((cell.se - overall.se_of(g.code()).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn lincom_matches_reparameterized_regression() {
    let mut ds = audit(600, 4);
    simulate(&mut ds, ReducedFormConfig::default(), 4);
    let t = gap_table(&ds, Grouping::Discretion).unwrap();
    // the same model with "high" as base reports the high-category gap directly
    let flipped: Vec<f64> = {
        let high = taskgap_core::estimator::model::high_discretion(&ds);
        ds.applications.iter().map(|a| f64::from(u8::from(!high[a.ad as usize]))).collect()
    };
    let mut d = RegressionSpec::default().design(&ds).unwrap();
    for g in Group::MINORITIES {
        let col = d.columns[g.index() - 1].iter().zip(&flipped).map(|(a, b)| a * b).collect();
        d.push(format!("{}:low", g.code()), col);
    }
    let f = fit(&d).unwrap();
    for g in Group::MINORITIES {
        let via_lincom = t.cell(g, "high").unwrap().result.unwrap();
        assert!((via_lincom.estimate - f.coef_of(g.code()).unwrap()).abs() < 1e-10);
        assert!((via_lincom.se - f.se_of(g.code()).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn management_gaps_recovered() {
    let mut ds = audit(9220, 5);
    let mut cfg = ReducedFormConfig::default();
    let seeded = [(Group::WW, -0.033), (Group::BW, -0.046), (Group::BM, -0.051), (Group::HM, -0.040)];
    cfg.major_group_gaps
        .insert(MajorGroup::Management, seeded.iter().copied().collect::<BTreeMap<_, _>>());
    simulate(&mut ds, cfg, 5);
    let t = gap_table(&ds, Grouping::MajorGroup).unwrap();
    assert_eq!(t.base, "management");
    for (g, truth) in seeded {
        let c = t.cell(g, "management").unwrap().result.unwrap();
        assert!((c.estimate - truth).abs() < 2.0 * c.se, "{g}: {} ({}) vs {truth}", c.estimate, c.se);
    }
}

#[test]
fn discretion_gradient_shows_in_b_minus_p() {
    let mut ds = audit(9220, 6);
    simulate(
        &mut ds,
        ReducedFormConfig {
            discretion_gradient: -0.03,
            ..Default::default()
        },
        6,
    );
    let r = bp_decomposition(&ds, true, ContactSubsample::All).unwrap();
    let bp = r.rows[0].b_minus_p;
    assert!(bp.estimate < 0.0 && bp.p < 0.05, "{bp:?}");
}

#[test]
fn contact_halves_are_disjoint() {
    let ds = audit(1000, 7);
    let low = contact_split(&ds, ContactSubsample::Low40);
    let high = contact_split(&ds, ContactSubsample::High40);
    assert!(low.iter().zip(&high).all(|(a, b)| !(a & b)));
    let n_low = low.iter().filter(|&&v| v).count();
    let n_high = high.iter().filter(|&&v| v).count();
    assert!(n_low >= 380 && n_high >= 380 && n_low + n_high <= 820, "{n_low} {n_high}");
}

#[test]
fn attenuation_in_low_discretion_jobs_recovered() {
    let mut ds = audit(9220, 8);
    let cfg = ReducedFormConfig {
        baseline: 0.149,
        credential_minority_low: Credential::POSITIVE.iter().map(|&c| (c, 0.08)).collect(),
        ..Default::default()
    };
    simulate(&mut ds, cfg, 8);
    let t = credential_attenuation(&ds, Credential::ALL).unwrap();
    for r in t.rows.iter().filter(|r| Credential::POSITIVE.contains(&r.credential)) {
        assert!(r.triple.estimate < 0.0, "{:?}", r);
    }
    assert!(t.positive_triples.unwrap().p < 0.05);
    let (lo, hi) = t.white_male_rates;
    assert!((lo - 0.149).abs() < 0.01 && (hi - 0.149).abs() < 0.01, "{lo} {hi}");
}

#[test]
fn injected_peer_effect_detected() {
    let cfg = ReducedFormConfig {
        peer_effect: -0.05,
        ..Default::default()
    };
    let reps = 40;
    let rejections = (0..reps)
        .filter(|&rep| {
            let mut ds = audit(9220, 1000 + rep);
            simulate(&mut ds, cfg.clone(), rep);
            interference_check(&ds).unwrap().minority_peers.p < 0.05
        })
        .count();
    assert!(rejections as f64 / reps as f64 > 0.9, "{rejections}/{reps}");
}

#[test]
fn single_application_ads_rejected() {
    let catalog = OccupationCatalog::synthetic(175, 1).unwrap();
    let design = DesignConfig {
        n_ads: 50,
        k: 1,
        ..Default::default()
    };
    let mut ds = generate_dataset(&design, &catalog, 1).unwrap();
    for a in &mut ds.applications {
        a.callback = Some(a.attrs.name_id == 1);
    }
    assert!(matches!(interference_check(&ds), Err(Error::Precondition(_))));
}
