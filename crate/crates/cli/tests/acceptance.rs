//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `ACCEPTANCE_ONLY=4,8` restricts the run to the listed criteria.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use taskgap_core::estimator::inference::t_pvalue;
use taskgap_core::estimator::{
    credential_attenuation, fit, gap_table, interference_check, Design, FixedEffects, Grouping, RegressionSpec,
};
use taskgap_core::power::{adjusted_n, audit_scenario, design_effect, mc_power, AuditScenario, ClusterTwoArm};
use taskgap_core::rng::{derive, stream, Domain};
use taskgap_core::stats::ks_uniform;
use taskgap_core::synth::{
    balance_check, generate_dataset, AuditDataset, CallbackDgp, Credential, DesignConfig, MajorGroup,
    OccupationCatalog, ReducedFormConfig, ReducedFormDgp, StructuralDgp,
};
use taskgap_core::taskspace::{adjusted_rand_index, elbow, kmeans, KMeansConfig};
use taskgap_core::theory::verify::{self, PropertyResult, VerifyConfig, VerifyReport};
use taskgap_core::theory::{callback_prob, evaluate_job, ModelParams};
use taskgap_core::Group;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn catalog(seed: u64) -> OccupationCatalog {
    OccupationCatalog::synthetic(175, seed).unwrap()
}

fn audit(n_ads: usize, cat: &OccupationCatalog, seed: u64) -> AuditDataset {
    let design = DesignConfig {
        n_ads,
        ..Default::default()
    };
    generate_dataset(&design, cat, seed).unwrap()
}

/// Default certification suite, run once and shared by criteria 1-3.
fn certification() -> &'static (VerifyReport, f64) {
    static REPORT: OnceLock<(VerifyReport, f64)> = OnceLock::new();
    REPORT.get_or_init(|| {
        let t = Instant::now();
        let r = verify::run(&VerifyConfig::default());
        (r, t.elapsed().as_secs_f64())
    })
}

fn property(name: &str) -> &'static PropertyResult {
    certification().0.property(name).unwrap_or_else(|| panic!("no property {name}"))
}

fn c1_variance_gap_oracle() -> Outcome {
    let cfg = VerifyConfig::default();
    let p = property("variance_gap_mc");
    let secs = certification().1;
    outcome(
        p.passed && p.cases >= 20 && cfg.mc_draws >= 1_000_000 && secs < 60.0,
        format!(
            "{} points x {} draws, worst statistic {:.3} (tolerance {}); full suite {secs:.1}s",
            p.cases, cfg.mc_draws, p.measured, p.tolerance
        ),
    )
}

fn c2_gradients() -> Outcome {
    let fd = property("gradient_fd");
    let inert = property("contact_inert_routine");
    outcome(
        fd.passed && fd.cases >= 100 && inert.passed,
        format!(
            "max FD discrepancy {:.2e} over {} points (tolerance {:.0e}); routine-job contact derivative max {:.1e}",
            fd.measured, fd.cases, fd.tolerance, inert.measured
        ),
    )
}

fn c3_taylor() -> Outcome {
    let t = property("taylor_ratio");
    let z = property("majority_zero_gap");
    outcome(
        t.passed && z.passed,
        format!(
            "taylor ratio statistic {:.2e} (tolerance {:.0e}); majority gap max {:.1e}",
            t.measured, t.tolerance, z.measured
        ),
    )
}

fn c4_structural() -> Outcome {
    let t = Instant::now();
    let cat = catalog(41);
    let mut equal = ModelParams::default();
    for g in Group::MINORITIES {
        equal.pi.insert(g, 1.0);
    }
    let mut worst: f64 = 0.0;
    let mut n_apps = 0;
    for (i, params) in [ModelParams::default(), equal].into_iter().enumerate() {
        let mut ds = audit(250_000, &cat, 42 + i as u64);
        StructuralDgp::new(params.clone())
            .unwrap()
            .simulate(&mut ds, 43 + i as u64)
            .unwrap();
        n_apps = ds.len();
        // hits, expected hits, binomial variance, count
        let mut acc: BTreeMap<Group, [f64; 4]> = BTreeMap::new();
        for a in &ds.applications {
            let job = evaluate_job(&ds.ad_of(a).profile, &params);
            let c = callback_prob(params.theta_bar, job.group_variance(params.pi(a.attrs.group)));
            let e = acc.entry(a.attrs.group).or_default();
            e[0] += f64::from(u8::from(a.callback.unwrap()));
            e[1] += c;
            e[2] += c * (1.0 - c);
            e[3] += 1.0;
        }
        let wm = acc[&Group::WM];
        for (g, [hits, expected, var, n]) in &acc {
            worst = worst.max(((hits - expected) / var.sqrt()).abs());
            if *g != Group::WM {
                let gap = hits / n - wm[0] / wm[3];
                let truth = expected / n - wm[1] / wm[3];
                let se = (var / (n * n) + wm[2] / (wm[3] * wm[3])).sqrt();
                worst = worst.max(((gap - truth) / se).abs());
            }
        }
    }
    outcome(
        worst < 3.0,
        format!(
            "{n_apps} applications under default pi and under pi = 1; per-group rates and gaps vs closed form, max |z| = {worst:.2} (limit 3); {:.0}s",
            t.elapsed().as_secs_f64()
        ),
    )
}

/// Two-sided 95% t critical value, inverted from the regression p-value.
fn t_crit(df: f64) -> f64 {
    let (mut lo, mut hi) = (1.0, 5.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if t_pvalue(mid, df) > 0.05 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c5_recovery() -> Outcome {
    let t = Instant::now();
    let seeded = [
        (Group::WW, -0.033),
        (Group::BW, -0.046),
        (Group::HW, -0.022),
        (Group::BM, -0.051),
        (Group::HM, -0.040),
    ];
    let mut cfg = ReducedFormConfig::default();
    cfg.major_group_gaps
        .insert(MajorGroup::Management, seeded.iter().copied().collect());
    let dgp = ReducedFormDgp::new(cfg).unwrap();
    let cat = catalog(51);
    let reps = 500u64;
    let results: Vec<Vec<(f64, f64)>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut ds = audit(9220, &cat, derive(52, Domain::Replication, r));
            dgp.simulate(&mut ds, derive(53, Domain::Replication, r)).unwrap();
            let tab = gap_table(&ds, Grouping::MajorGroup).unwrap();
            seeded
                .iter()
                .map(|(g, _)| {
                    let c = tab.cell(*g, "management").unwrap().result.unwrap();
                    (c.estimate, c.se)
                })
                .collect()
        })
        .collect();
    let first_ok = results[0]
        .iter()
        .zip(&seeded)
        .all(|((est, se), (_, truth))| (est - truth).abs() < 2.0 * se);
    let crit = t_crit(9219.0);
    let mut covered = [0usize; 5];
    for rep in &results {
        for (i, ((est, se), (_, truth))) in rep.iter().zip(&seeded).enumerate() {
            covered[i] += usize::from((est - truth).abs() <= crit * se);
        }
    }
    let pooled = covered.iter().sum::<usize>() as f64 / (reps as usize * seeded.len()) as f64;
    let per_gap: Vec<String> = covered
        .iter()
        .zip(&seeded)
        .map(|(c, (g, _))| format!("{} {:.3}", g.code(), *c as f64 / reps as f64))
        .collect();
    let secs = t.elapsed().as_secs_f64();
    outcome(
        first_ok && (pooled - 0.95).abs() <= 0.02 && secs < 300.0,
        format!(
            "management gaps within 2 SE on the first draw: {first_ok}; pooled 95% CI coverage {pooled:.4} over {reps} reps x 5 gaps ({}); {secs:.0}s",
            per_gap.join(", ")
        ),
    )
}

fn c6_fwl() -> Outcome {
    let mut r = stream(61, Domain::Replication, 0);
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    let mut attempt = 0u64;
    while instances < 20 && attempt < 200 {
        attempt += 1;
        let n_ads = r.random_range(5..=50);
        let cat = catalog(600 + attempt);
        let mut ds = audit(n_ads, &cat, 600 + attempt);
        ReducedFormDgp::new(ReducedFormConfig::default())
            .unwrap()
            .simulate(&mut ds, 700 + attempt)
            .unwrap();
        let spec = RegressionSpec {
            grouping: Grouping::Discretion,
            credentials: Credential::POSITIVE.to_vec(),
            ..Default::default()
        };
        let Ok(absorbed) = spec.fit(&ds) else { continue };
        let mut d: Design = RegressionSpec {
            fixed_effects: FixedEffects::None,
            ..spec
        }
        .design(&ds)
        .unwrap();
        // ad dummies lead, so collinear regressors are judged against them first
        for j in 1..ds.n_ads() {
            d.names.insert(j - 1, format!("ad{j}"));
            d.columns
                .insert(j - 1, ds.applications.iter().map(|a| f64::from(u8::from(a.ad as usize == j))).collect());
        }
        let Ok(dummy) = fit(&d) else { continue };
        for (name, b) in absorbed.names.iter().zip(&absorbed.coef) {
            if absorbed.dropped.contains(name) != dummy.dropped.contains(name) {
                return outcome(false, format!("instance {attempt}: `{name}` dropped by only one fit"));
            }
            if absorbed.dropped.contains(name) {
                continue;
            }
            worst = worst.max((b - dummy.coef_of(name).unwrap()).abs());
        }
        instances += 1;
    }
    outcome(
        instances == 20 && worst < 1e-8,
        format!("{instances} random instances of 5-50 ads, max |absorbed - dummy| = {worst:.2e} (limit 1e-8)"),
    )
}

fn c7_size() -> Outcome {
    let t = Instant::now();
    let mut null = AuditScenario::default();
    null.dgp.category_gaps.clear();
    let sc = audit_scenario(null).unwrap();
    let wald = mc_power(sc.as_ref(), 1000, 0.05, 71).unwrap();

    let dgp = ReducedFormDgp::new(ReducedFormConfig::default()).unwrap();
    let cat = catalog(72);
    let reps = 500u64;
    let rejections: usize = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut ds = audit(9220, &cat, derive(73, Domain::Replication, r));
            dgp.simulate(&mut ds, derive(74, Domain::Replication, r)).unwrap();
            let tab = credential_attenuation(&ds, Credential::ALL).unwrap();
            usize::from(tab.placebo_triples.unwrap().p < 0.05)
        })
        .sum();
    let placebo = rejections as f64 / reps as f64;
    outcome(
        (wald.mc_power - 0.05).abs() <= 0.02 && (placebo - 0.05).abs() <= 0.02,
        format!(
            "null category Wald test size {:.3} over 1000 reps ({} failed); placebo triple block size {placebo:.3} over {reps} reps; {:.0}s",
            wald.mc_power,
            wald.failures,
            t.elapsed().as_secs_f64()
        ),
    )
}

fn c8_power() -> Outcome {
    let t = Instant::now();
    let de = design_effect(4, 0.30).unwrap();
    let implied = 10_612.0 / de;
    let adj_up = adjusted_n(implied.ceil() as u64, de).unwrap();
    let adj_down = adjusted_n(implied.floor() as u64, de).unwrap();
    let ratio: f64 = 36_880.0 / 10_612.0;
    let ratio_ok = (ratio - 3.475).abs() < 0.005 && (ratio - 3.5).abs() < 0.05;

    let mut worst_z: f64 = 0.0;
    for p1 in [0.18, 0.20, 0.225] {
        for n in [400, 800, 1600] {
            let s = ClusterTwoArm {
                p1,
                n_per_arm: n,
                ..Default::default()
            };
            let r = mc_power(&s, 2000, 0.05, 81).unwrap();
            worst_z = worst_z.max((r.mc_power - r.analytic_power.unwrap()).abs() / r.mc_se);
        }
    }
    let sc = audit_scenario(AuditScenario::default()).unwrap();
    let reference = mc_power(sc.as_ref(), 1000, 0.05, 82).unwrap();
    let ref_ok = (reference.mc_power - 0.920).abs() <= 0.05;
    outcome(
        de == 1.90 && adj_up == 10_614 && adj_down == 10_612 && ratio_ok && worst_z <= 2.0 && ref_ok,
        format!(
            "DE = {de}; 10,612 / DE = {implied:.1}, adjusted n {adj_down} (base {}) / {adj_up} (base {}); 36,880 / 10,612 = {ratio:.3}; \
             3x3 grid worst |MC - analytic| = {worst_z:.2} MC SE; reference power {:.3} (SE {:.3}) vs 0.920; {:.0}s",
            implied.floor(),
            implied.ceil(),
            reference.mc_power,
            reference.mc_se,
            t.elapsed().as_secs_f64()
        ),
    )
}

fn c9_clustering() -> Outcome {
    let centers = [
        [80.0, 75.0, 30.0, 20.0, 20.0, 40.0],
        [30.0, 70.0, 25.0, 30.0, 60.0, 85.0],
        [25.0, 20.0, 80.0, 70.0, 30.0, 30.0],
        [35.0, 30.0, 40.0, 80.0, 85.0, 55.0],
    ];
    let mut min_ari: f64 = 1.0;
    let mut monotone = true;
    for seed in 0..20u64 {
        let mut r = stream(seed, Domain::Replication, 9);
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..50 {
                let p: Vec<f64> = center.iter().map(|m| m + 4.0 * r.sample::<f64, _>(StandardNormal)).collect();
                pts.push(p);
                truth.push(c);
            }
        }
        let m = kmeans(&pts, &KMeansConfig::new(4, seed)).unwrap();
        min_ari = min_ari.min(adjusted_rand_index(&m.assignments, &truth));
        let scan = elbow(&pts, 1, 10, 10, seed).unwrap();
        monotone &= scan.wss.windows(2).all(|w| w[1] <= w[0]);
    }
    outcome(
        min_ari == 1.0 && monotone,
        format!("four separated blobs, min ARI over 20 seeds {min_ari}; elbow WSS non-increasing: {monotone}"),
    )
}

fn c10_interference_balance() -> Outcome {
    let t = Instant::now();
    let dgp = ReducedFormDgp::new(ReducedFormConfig::default()).unwrap();
    let cat = catalog(101);
    let reps = 500u64;
    let ps: Vec<(f64, f64)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut ds = audit(9220, &cat, derive(102, Domain::Replication, r));
            dgp.simulate(&mut ds, derive(103, Domain::Replication, r)).unwrap();
            let rep = interference_check(&ds).unwrap();
            (rep.minority_peers.p, rep.black_peers.p)
        })
        .collect();
    let (_, ks_min) = ks_uniform(&ps.iter().map(|p| p.0).collect::<Vec<_>>());
    let (_, ks_black) = ks_uniform(&ps.iter().map(|p| p.1).collect::<Vec<_>>());
    let ds = audit(9220, &cat, 104);
    let bal = balance_check(&ds, 12, 8).unwrap();
    outcome(
        ks_min > 0.01 && ks_black > 0.01 && bal.max_abs < 0.1 && ds.len() == 36_880,
        format!(
            "KS p of null joint-F p-values over {reps} reps: minority peers {ks_min:.3}, Black peers {ks_black:.3}; \
             max |rho| over {} group x attribute pairs at {} applications = {:.4}; {:.0}s",
            bal.indicators.len() * bal.attributes.len(),
            ds.len(),
            bal.max_abs,
            t.elapsed().as_secs_f64()
        ),
    )
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn c11_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut times = Vec::new();
    let mut trees = Vec::new();
    for i in 0..2 {
        let out = tmp.path().join(format!("run{i}"));
        let t = Instant::now();
        let status = Command::new(env!("CARGO_BIN_EXE_taskgap"))
            .args(["run", "--quiet", "--seed", "2024", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        times.push(t.elapsed().as_secs_f64());
        if !status.success() {
            return outcome(false, format!("run {i} exited with {status}"));
        }
        trees.push(read_tree(&out));
    }
    let same = trees[0] == trees[1];
    let has_power = trees[0].contains_key("power.json");
    outcome(
        same && has_power && times.iter().all(|&s| s < 600.0),
        format!(
            "two default runs (9,220 ads, estimation battery, 500-rep power) byte-identical over {} files: {same}; \
             wall times {:.0}s and {:.0}s on {} thread(s)",
            trees[0].len(),
            times[0],
            times[1],
            rayon::current_num_threads()
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "variance-gap oracle", c1_variance_gap_oracle),
        (2, "gradient certification", c2_gradients),
        (3, "Taylor sufficient statistic", c3_taylor),
        (4, "structural DGP consistency", c4_structural),
        (5, "gap recovery and coverage", c5_recovery),
        (6, "absorbed vs dummy fixed effects", c6_fwl),
        (7, "test size", c7_size),
        (8, "power anchors", c8_power),
        (9, "clustering", c9_clustering),
        (10, "interference and balance", c10_interference_balance),
        (11, "determinism and run time", c11_determinism),
    ];
    let only: Vec<u32> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect())
        .unwrap_or_default();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2}: {verdict} {name}: {}", o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
