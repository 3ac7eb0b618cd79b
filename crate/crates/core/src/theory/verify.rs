//! Numerical certification of the callback model.
//!
//! Every property is checked against an oracle that shares no code path with
//! the closed forms it certifies: simulated composite signals, central finite
//! differences, exact-gap evaluation, and a power series for the normal CDF.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    callback_gaps, callback_prob, evaluate_job, variance_gap, variance_gap_of_profile,
    variance_gap_partials, ModelParams, Partials, TaskProfile,
};
use crate::error::Result;
use crate::group::Group;
use crate::normal;
use crate::rng::{self, Domain};

/// Signature of a partials implementation, so the suite can be pointed at a
/// deliberately broken variant.
pub type PartialsFn = fn(&TaskProfile, f64, &ModelParams) -> Result<Partials>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_mc_points")]
    pub mc_points: usize,
    #[serde(default = "default_mc_draws")]
    pub mc_draws: usize,
    #[serde(default = "default_gradient_points")]
    pub gradient_points: usize,
}

fn default_seed() -> u64 {
    20_240_917
}
fn default_mc_points() -> usize {
    20
}
fn default_mc_draws() -> usize {
    1_000_000
}
fn default_gradient_points() -> usize {
    100
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: default_seed(),
            mc_points: default_mc_points(),
            mc_draws: default_mc_draws(),
            gradient_points: default_gradient_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    /// worst observed value of the property's statistic
    pub measured: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
}

impl VerifyReport {
    pub fn property(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.properties
            .iter()
            .filter(|p| !p.passed)
            .map(|p| p.name.as_str())
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("theory certification (seed {})\n", self.seed);
        for p in &self.properties {
            out.push_str(&format!(
                "  [{}] {:<28} measured {:>12.4e}  tol {:>9.2e}  n={:<6} {}\n",
                if p.passed { "pass" } else { "FAIL" },
                p.name,
                p.measured,
                p.tolerance,
                p.cases,
                p.detail
            ));
        }
        out.push_str(if self.passed { "all properties pass\n" } else { "certification FAILED\n" });
        out
    }
}

pub fn run(config: &VerifyConfig) -> VerifyReport {
    run_with(config, variance_gap_partials)
}

pub fn run_with(config: &VerifyConfig, partials: PartialsFn) -> VerifyReport {
    let properties = vec![
        mc_variance_gap(config),
        gradient_check(config, partials),
        partial_signs(partials),
        routine_partial_sign(partials),
        contact_inert(partials),
        contact_complementarity(),
        taylor_limit(),
        majority_zero_gap(),
        callback_monotone(),
        discretion_monotone(),
        baseline_calibration(),
        normal_cdf_accuracy(),
    ];
    VerifyReport {
        seed: config.seed,
        passed: properties.iter().all(|p| p.passed),
        properties,
    }
}

fn result(name: &str, measured: f64, tolerance: f64, passed: bool, cases: usize, detail: String) -> PropertyResult {
    PropertyResult {
        name: name.to_string(),
        passed,
        measured,
        tolerance,
        cases,
        detail,
    }
}

/// A random model configuration drawn for property checks.
#[derive(Debug, Clone)]
pub struct DrawnPoint {
    pub profile: TaskProfile,
    pub params: ModelParams,
    pub pi: f64,
}

pub fn draw_point<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> DrawnPoint {
    let mut u = |a: f64, b: f64| a + (b - a) * rng.random::<f64>();
    let profile = TaskProfile {
        a: u(lo, hi),
        p: u(lo, hi),
        r: u(lo, hi),
        m: 0.0,
        phy: 0.0,
        k: u(lo, hi),
    };
    let mut params = ModelParams {
        alpha: u(0.5, 2.0),
        beta: u(0.5, 2.0),
        delta: u(0.5, 2.0),
        gamma: u(0.25, 2.0),
        ..ModelParams::default()
    };
    let pi = u(0.5, 0.99);
    params.pi.insert(Group::BM, pi);
    DrawnPoint { profile, params, pi }
}

/// Simulate composite evaluation errors for the majority and a penalised group
/// and compare the variance difference with `E*^2 B Delta`.
fn mc_variance_gap(config: &VerifyConfig) -> PropertyResult {
    let mut point_rng = rng::stream(config.seed, Domain::Verify, 0);
    let points: Vec<DrawnPoint> = (0..config.mc_points)
        .map(|_| draw_point(&mut point_rng, 0.0, 1.0))
        .collect();
    let n = config.mc_draws;
    let zs: Vec<f64> = points
        .par_iter()
        .enumerate()
        .map(|(i, pt)| {
            let job = evaluate_job(&pt.profile, &pt.params);
            let closed = variance_gap(&job, pt.pi).expect("pi drawn in range");
            let mut r = rng::stream(config.seed, Domain::Verify, 1 + i as u64);
            let (v_m, se2_m) = simulated_error_variance(&mut r, job.e_star, job.b, job.u, n);
            let (v_g, se2_g) = simulated_error_variance(&mut r, job.e_star, job.b / pt.pi, job.u, n);
            ((v_g - v_m) - closed) / (se2_m + se2_g).sqrt()
        })
        .collect();
    let worst = zs.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    result(
        "variance_gap_mc",
        worst,
        3.0,
        worst <= 3.0,
        zs.len(),
        format!("max |z| over {} points x {} draws", zs.len(), n),
    )
}

/// Sample variance of `E* s_s + (1 - E*) s_o - theta` and its squared standard error.
pub fn simulated_error_variance<R: Rng>(rng: &mut R, e_star: f64, tau2: f64, u: f64, n: usize) -> (f64, f64) {
    let (sd_s, sd_o) = (tau2.sqrt(), u.sqrt());
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    let mut sum4 = 0.0;
    for _ in 0..n {
        let theta: f64 = rng.sample(StandardNormal);
        let e_s: f64 = rng.sample(StandardNormal);
        let e_o: f64 = rng.sample(StandardNormal);
        let s_s = theta + sd_s * e_s;
        let s_o = theta + sd_o * e_o;
        let err = e_star * s_s + (1.0 - e_star) * s_o - theta;
        let sq = err * err;
        sum += err;
        sum2 += sq;
        sum4 += sq * sq;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let m2 = sum2 / nf - mean * mean;
    let var = m2 * nf / (nf - 1.0);
    // Large-sample variance of the sample variance: (mu4 - sigma^4) / n.
    let m4 = sum4 / nf;
    (var, (m4 - m2 * m2) / nf)
}

fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn numeric_partials(profile: &TaskProfile, pi: f64, params: &ModelParams, h: f64) -> [f64; 4] {
    let gap = |pr: TaskProfile| variance_gap_of_profile(&pr, pi, params).expect("valid pi");
    [
        central_difference(|x| gap(TaskProfile { a: x, ..*profile }), profile.a, h),
        central_difference(|x| gap(TaskProfile { p: x, ..*profile }), profile.p, h),
        central_difference(|x| gap(TaskProfile { r: x, ..*profile }), profile.r, h),
        central_difference(|x| gap(TaskProfile { k: x, ..*profile }), profile.k, h),
    ]
}

fn gradient_check(config: &VerifyConfig, partials: PartialsFn) -> PropertyResult {
    let mut r = rng::stream(config.seed, Domain::Verify, 10_000);
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut cases = 0;
    let mut points: Vec<DrawnPoint> = vec![{
        let mut params = ModelParams {
            gamma: 1.0,
            ..ModelParams::default()
        };
        params.pi.insert(Group::BM, 0.8);
        DrawnPoint {
            profile: TaskProfile::core(0.5, 0.5, 0.5, 0.5).expect("interior"),
            params,
            pi: 0.8,
        }
    }];
    points.extend((1..config.gradient_points).map(|_| draw_point(&mut r, 0.05, 0.95)));
    for pt in &points {
        let analytic = match partials(&pt.profile, pt.pi, &pt.params) {
            Ok(d) => [d.d_a, d.d_p, d.d_r, d.d_k],
            Err(e) => return result("gradient_fd", f64::INFINITY, 1e-6, false, cases, e.to_string()),
        };
        let numeric = numeric_partials(&pt.profile, pt.pi, &pt.params, 1e-6);
        for (j, (an, nu)) in analytic.iter().zip(numeric).enumerate() {
            let rel = (an - nu).abs() / an.abs().max(f64::MIN_POSITIVE);
            if rel > worst || rel.is_nan() {
                worst = if rel.is_nan() { f64::INFINITY } else { rel };
                worst_at = format!("worst at d_{} of point {}", ["a", "p", "r", "k"][j], cases);
            }
        }
        cases += 1;
    }
    result("gradient_fd", worst, 1e-6, worst < 1e-6, cases, worst_at)
}

fn interior_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.01 + 0.98 * i as f64 / (n - 1) as f64).collect()
}

fn partial_signs(partials: PartialsFn) -> PropertyResult {
    let params = ModelParams {
        gamma: 1.0,
        ..ModelParams::default()
    };
    let grid = interior_grid(6);
    let mut violations = 0;
    let mut cases = 0;
    for &a in &grid {
        for &p in &grid {
            for &r in &grid {
                for &k in &grid {
                    let d = match partials(&TaskProfile::core(a, p, r, k).expect("grid"), 0.9, &params) {
                        Ok(d) => d,
                        Err(_) => {
                            violations += 1;
                            continue;
                        }
                    };
                    if !(d.d_a > 0.0 && d.d_p > 0.0 && d.d_r < 0.0 && d.d_k > 0.0) {
                        violations += 1;
                    }
                    cases += 1;
                }
            }
        }
    }
    result(
        "partial_signs",
        violations as f64,
        0.0,
        violations == 0,
        cases,
        "sign pattern (+, +, -, +) in the interior".into(),
    )
}

fn routine_partial_sign(partials: PartialsFn) -> PropertyResult {
    let params = ModelParams {
        gamma: 1.0,
        ..ModelParams::default()
    };
    let grid = interior_grid(10);
    let mut worst = f64::NEG_INFINITY;
    let mut cases = 0;
    for &a in &grid {
        for &p in &grid {
            for &r in &grid {
                for &k in &grid {
                    let d_r = partials(&TaskProfile::core(a, p, r, k).expect("grid"), 0.9, &params)
                        .map(|d| d.d_r)
                        .unwrap_or(f64::INFINITY);
                    worst = worst.max(d_r);
                    cases += 1;
                }
            }
        }
    }
    result(
        "routine_partial_negative",
        worst,
        0.0,
        worst < 0.0,
        cases,
        "max d_r over the interior grid".into(),
    )
}

fn contact_inert(partials: PartialsFn) -> PropertyResult {
    let mut worst_dk = 0.0f64;
    let mut worst_gap_spread = 0.0f64;
    let mut cases = 0;
    for gamma in [0.5, 1.0, 3.0] {
        let params = ModelParams {
            gamma,
            ..ModelParams::default()
        };
        for r in [0.0, 0.3, 0.8] {
            let gaps: Vec<f64> = (0..=20)
                .map(|i| {
                    let profile = TaskProfile::core(0.0, 0.0, r, i as f64 / 20.0).expect("grid");
                    let d_k = partials(&profile, 0.9, &params).map(|d| d.d_k).unwrap_or(f64::INFINITY);
                    worst_dk = worst_dk.max(d_k.abs());
                    cases += 1;
                    let job = evaluate_job(&profile, &params);
                    callback_gaps(&job, 0.9, &params).expect("valid").exact_gap
                })
                .collect();
            let spread = gaps.iter().fold(0.0f64, |m, g| m.max((g - gaps[0]).abs()));
            worst_gap_spread = worst_gap_spread.max(spread);
        }
    }
    let measured = worst_dk.max(worst_gap_spread);
    result(
        "contact_inert_routine",
        measured,
        0.0,
        measured == 0.0,
        cases,
        "|d_k| and exact-gap spread in k when a = p = 0".into(),
    )
}

/// Exact gap with the majority variance pinned at `v_ref`, isolating the
/// variance-gap channel from the level of baseline noise.
fn held_gap(theta_bar: f64, v_ref: f64, variance_gap: f64) -> f64 {
    callback_prob(theta_bar, v_ref) - callback_prob(theta_bar, v_ref + variance_gap)
}

/// With non-routine content and a contact amplifier, gaps rise with contact.
///
/// Gated on the variance gap and on the exact gap at a comparable baseline
/// variance. The unpinned exact gap can fall with k once baseline variance is
/// large, because the callback density shrinks; those reversals are counted in
/// the detail string.
fn contact_complementarity() -> PropertyResult {
    let mut violations = 0;
    let mut reversals = 0;
    let mut cases = 0;
    let mut min_step = f64::INFINITY;
    for gamma in [0.25, 0.5, 1.0] {
        let params = ModelParams {
            gamma,
            ..ModelParams::default()
        };
        for (a, p) in [(0.2, 0.0), (0.0, 0.3), (0.3, 0.4), (0.5, 0.5)] {
            for r in [0.0, 0.5, 1.0] {
                let gaps: Vec<(f64, f64, f64)> = (0..=20)
                    .map(|i| {
                        let profile = TaskProfile::core(a, p, r, i as f64 / 20.0).expect("grid");
                        let job = evaluate_job(&profile, &params);
                        let gap = callback_gaps(&job, 0.9, &params).expect("valid");
                        (gap.variance_gap, gap.exact_gap, job.majority_variance())
                    })
                    .collect();
                let v_ref = gaps[gaps.len() / 2].2;
                for w in gaps.windows(2) {
                    let step_var = w[1].0 - w[0].0;
                    let step_held = held_gap(params.theta_bar, v_ref, w[1].0) - held_gap(params.theta_bar, v_ref, w[0].0);
                    min_step = min_step.min(step_var.min(step_held));
                    if step_var <= 0.0 || step_held <= 0.0 {
                        violations += 1;
                    }
                    if w[1].1 <= w[0].1 {
                        reversals += 1;
                    }
                    cases += 1;
                }
            }
        }
    }
    result(
        "contact_complementarity",
        violations as f64,
        0.0,
        violations == 0,
        cases,
        format!("smallest increment in k {min_step:.3e}; unpinned exact-gap reversals {reversals}"),
    )
}

fn taylor_limit() -> PropertyResult {
    let pi = 1.0 / (1.0 + 1e-3);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for theta_bar in [0.5, normal::quantile(0.85), 1.5, 2.0] {
        for gamma in [0.0, 1.0] {
            let params = ModelParams {
                gamma,
                theta_bar,
                ..ModelParams::default()
            };
            for &a in &[0.0, 0.5, 1.0] {
                for &p in &[0.0, 0.5, 1.0] {
                    for &r in &[0.0, 0.5, 1.0] {
                        let profile = TaskProfile::core(a, p, r, 0.5).expect("grid");
                        let gap = callback_gaps(&evaluate_job(&profile, &params), pi, &params).expect("valid");
                        worst = worst.max((gap.taylor_gap / gap.exact_gap - 1.0).abs());
                        cases += 1;
                    }
                }
            }
        }
    }
    result(
        "taylor_ratio",
        worst,
        0.01,
        worst < 0.01,
        cases,
        "max |taylor/exact - 1| at Delta = 1e-3".into(),
    )
}

fn majority_zero_gap() -> PropertyResult {
    let params = ModelParams::default();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for &a in &[0.0, 0.4, 1.0] {
        for &r in &[0.0, 0.6, 1.0] {
            let job = evaluate_job(&TaskProfile::core(a, 1.0 - a, r, 0.2).expect("grid"), &params);
            let gap = callback_gaps(&job, 1.0, &params).expect("valid");
            worst = worst.max(gap.exact_gap.abs()).max(gap.taylor_gap.abs()).max(gap.variance_gap.abs());
            cases += 1;
        }
    }
    result("majority_zero_gap", worst, 0.0, worst == 0.0, cases, "gaps at pi = 1".into())
}

fn callback_monotone() -> PropertyResult {
    let mut violations = 0;
    let mut cases = 0;
    for theta_bar in [0.25, 1.0, normal::quantile(0.85), 2.5] {
        let mut prev = f64::INFINITY;
        for i in 0..=400 {
            let c = callback_prob(theta_bar, i as f64 * 0.025);
            if c >= prev {
                violations += 1;
            }
            prev = c;
            cases += 1;
        }
    }
    result(
        "callback_decreasing",
        violations as f64,
        0.0,
        violations == 0,
        cases,
        "callback probability over sorted variance grids".into(),
    )
}

/// Holding B and Delta, raising P lowers E* and must lower the gap when the
/// majority variance is held comparable along the grid.
fn discretion_monotone() -> PropertyResult {
    let params = ModelParams::default();
    let mut violations = 0;
    let mut reversals = 0;
    let mut cases = 0;
    for b in [1.0, 1.5, 2.0, 2.5, 3.0] {
        for pi in [0.7, 0.8, 0.9, 0.99] {
            let jobs: Vec<super::JobEvaluation> = (0..=20)
                .map(|i| super::JobEvaluation::from_bp(b, 1.0 + i as f64 / 20.0).expect("positive"))
                .collect();
            let v_ref = jobs[jobs.len() / 2].majority_variance();
            let gaps: Vec<(f64, f64)> = jobs
                .iter()
                .map(|job| {
                    let gap = callback_gaps(job, pi, &params).expect("valid");
                    (held_gap(params.theta_bar, v_ref, gap.variance_gap), gap.exact_gap)
                })
                .collect();
            for w in gaps.windows(2) {
                if w[1].0 >= w[0].0 {
                    violations += 1;
                }
                if w[1].1 >= w[0].1 {
                    reversals += 1;
                }
                cases += 1;
            }
        }
    }
    result(
        "gap_increasing_in_discretion",
        violations as f64,
        0.0,
        violations == 0,
        cases,
        format!("exact gap along P grids at fixed B and comparable V_M; unpinned reversals {reversals}"),
    )
}

fn baseline_calibration() -> PropertyResult {
    let err = (callback_prob(ModelParams::default().theta_bar, 0.0) - 0.15).abs();
    result(
        "baseline_callback_rate",
        err,
        1e-6,
        err < 1e-6,
        1,
        "majority callback at V = 0 against 0.15".into(),
    )
}

/// Normal CDF from the series `1/2 + phi(x) sum x^(2n+1) / (2n+1)!!`, whose terms
/// are all positive for `x > 0`.
pub fn series_cdf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.5;
    }
    let ax = x.abs();
    let x2 = ax * ax;
    let mut term = ax;
    let mut sum = ax;
    let mut n = 1.0;
    loop {
        n += 2.0;
        term *= x2 / n;
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
    }
    let half = normal::pdf(ax) * sum;
    if x > 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

fn normal_cdf_accuracy() -> PropertyResult {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for i in 0..=1600 {
        let x = -8.0 + i as f64 * 0.01;
        worst = worst.max((normal::cdf(x) - series_cdf(x)).abs());
        cases += 1;
    }
    result(
        "normal_cdf_oracle",
        worst,
        1e-12,
        worst < 1e-12,
        cases,
        "max |Phi(x) - series| on [-8, 8]".into(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_oracle_agrees_with_tables() {
        assert!((series_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((series_cdf(-2.0) - 0.022_750_131_948_179_2).abs() < 1e-15);
    }

    #[test]
    fn simulated_variance_is_close_for_small_draws() {
        let mut r = rng::stream(1, Domain::Verify, 0);
        let (v, se2) = simulated_error_variance(&mut r, 0.5, 2.0, 0.5, 200_000);
        assert!((v - 0.625).abs() < 5.0 * se2.sqrt());
    }

    #[test]
    fn fast_suite_passes() {
        let config = VerifyConfig {
            mc_points: 3,
            mc_draws: 50_000,
            gradient_points: 10,
            ..VerifyConfig::default()
        };
        let report = run(&config);
        assert!(report.passed, "{}", report.to_text());
    }

    fn flipped(profile: &TaskProfile, pi: f64, params: &ModelParams) -> Result<Partials> {
        let mut d = variance_gap_partials(profile, pi, params)?;
        d.d_r = -d.d_r;
        Ok(d)
    }

    #[test]
    fn sign_flip_is_caught() {
        let config = VerifyConfig {
            mc_points: 2,
            mc_draws: 10_000,
            gradient_points: 5,
            ..VerifyConfig::default()
        };
        let report = run_with(&config, flipped);
        assert!(!report.passed);
        let failures = report.failures();
        assert!(failures.contains(&"gradient_fd"));
        assert!(failures.contains(&"routine_partial_negative"));
    }
}
