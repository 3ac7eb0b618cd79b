use taskgap_core::synth::{
    anova_icc_balanced, generate_dataset, AuditDataset, CallbackDgp, DesignConfig, OccupationCatalog,
    ReducedFormConfig, ReducedFormDgp,
};
use taskgap_core::Group;

fn audit(seed: u64) -> AuditDataset {
    let catalog = OccupationCatalog::synthetic(175, seed).unwrap();
    generate_dataset(&DesignConfig::default(), &catalog, seed).unwrap()
}

#[test]
fn icc_target_recovered_at_audit_scale() {
    let mut ds = audit(11);
    let dgp = ReducedFormDgp::new(ReducedFormConfig::default()).unwrap();
    let report = dgp.simulate(&mut ds, 5).unwrap();
    let icc = anova_icc_balanced(&ds.callbacks().unwrap(), 4).unwrap();
    assert!((icc - 0.30).abs() < 0.03, "icc {icc}");
    assert!(report.clamp_rate < 0.001, "{report:?}");
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);
}

#[test]
fn zero_icc_has_no_ad_effect() {
    let mut ds = audit(12);
    let dgp = ReducedFormDgp::new(ReducedFormConfig {
        icc: 0.0,
        ..Default::default()
    })
    .unwrap();
    dgp.simulate(&mut ds, 6).unwrap();
    assert!(ds.ads.iter().all(|a| a.ad_effect == 0.0));
    let icc = anova_icc_balanced(&ds.callbacks().unwrap(), 4).unwrap();
    assert!(icc.abs() < 0.01, "icc {icc}");
}

#[test]
fn group_rates_match_targets() {
    let mut ds = audit(13);
    let mut cfg = ReducedFormConfig::default();
    cfg.gaps.insert(Group::BM, 0.075);
    cfg.gaps.insert(Group::WW, -0.033);
    let dgp = ReducedFormDgp::new(cfg.clone()).unwrap();
    dgp.simulate(&mut ds, 7).unwrap();
    let y = ds.callbacks().unwrap();
    for g in Group::ALL {
        let (mut hits, mut n) = (0.0, 0.0);
        for (a, y) in ds.applications.iter().zip(&y) {
            if a.attrs.group == g {
                hits += y;
                n += 1.0;
            }
        }
        let target = cfg.baseline + cfg.gap(g);
        let se = (target * (1.0 - target) / n).sqrt();
        // ad effects inflate the variance of a group mean by at most the design effect
        let se = se * 1.9f64.sqrt();
        let rate = hits / n;
        assert!((rate - target).abs() < 3.0 * se, "{g}: {rate} vs {target}");
    }
}

#[test]
fn determinism() {
    let dgp = ReducedFormDgp::new(ReducedFormConfig::default()).unwrap();
    let mut a = audit(14);
    let mut b = audit(14);
    dgp.simulate(&mut a, 1).unwrap();
    dgp.simulate(&mut b, 1).unwrap();
    let (mut wa, mut wb) = (Vec::new(), Vec::new());
    a.write_csv(&mut wa).unwrap();
    b.write_csv(&mut wb).unwrap();
    assert_eq!(wa, wb);
}
