//! Monte Carlo power scenarios and the engine that runs them.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analytic::{analytic_power_two_prop, design_effect};
use crate::error::{Error, Result};
use crate::estimator::RegressionSpec;
use crate::normal;
use crate::rng::{self, Domain};
use crate::synth::dgp::parse;
use crate::synth::{generate_dataset, CallbackDgp, DesignConfig, OccupationCatalog, ReducedFormConfig, ReducedFormDgp};

/// One simulated study and its hypothesis test.
pub trait PowerScenario: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn describe(&self) -> String;
    /// p-value of the scenario's test on one replication drawn from `seed`.
    fn replicate(&self, seed: u64) -> Result<f64>;
    /// Closed-form power at `alpha`, when the scenario has one.
    fn analytic_power(&self, _alpha: f64) -> Option<f64> {
        None
    }
    fn design_effect(&self) -> f64;
    /// applications per replication
    fn sample_size(&self) -> u64;
}

/// Two arms of clusters with Beta-distributed cluster callback rates, tested
/// with the design-effect-adjusted pooled two-proportion z test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterTwoArm {
    pub p0: f64,
    pub p1: f64,
    /// applications per arm; rounded up to whole clusters
    pub n_per_arm: usize,
    pub k: usize,
    pub icc: f64,
}

impl Default for ClusterTwoArm {
    fn default() -> Self {
        ClusterTwoArm {
            p0: 0.15,
            p1: 0.225,
            n_per_arm: 800,
            k: 4,
            icc: 0.30,
        }
    }
}

impl ClusterTwoArm {
    pub fn validate(&self) -> Result<()> {
        if !(self.p0 > 0.0 && self.p0 < 1.0 && self.p1 > 0.0 && self.p1 < 1.0) {
            return Err(Error::config("power.params", "p0 and p1 must lie in (0, 1)"));
        }
        if self.k == 0 || self.n_per_arm < 2 {
            return Err(Error::config("power.params", "need k >= 1 and n_per_arm >= 2"));
        }
        design_effect(self.k, self.icc).map(|_| ())
    }

    fn clusters(&self) -> usize {
        self.n_per_arm.div_ceil(self.k)
    }

    fn arm(&self, rng: &mut impl Rng, p: f64) -> Result<f64> {
        let beta = if self.icc > 0.0 {
            let kappa = 1.0 / self.icc - 1.0;
            Some(Beta::new(p * kappa, (1.0 - p) * kappa).map_err(|e| Error::Domain(e.to_string()))?)
        } else {
            None
        };
        let mut hits = 0u32;
        for _ in 0..self.clusters() {
            let pi = beta.as_ref().map_or(p, |b| b.sample(rng));
            for _ in 0..self.k {
                hits += u32::from(rng.random::<f64>() < pi);
            }
        }
        Ok(f64::from(hits) / (self.clusters() * self.k) as f64)
    }
}

impl PowerScenario for ClusterTwoArm {
    fn name(&self) -> &'static str {
        "cluster_two_arm"
    }

    fn describe(&self) -> String {
        format!(
            "two arms of {} applications in clusters of {} (ICC {}), rates {} vs {}; pooled z test with n/DE",
            self.clusters() * self.k,
            self.k,
            self.icc,
            self.p0,
            self.p1
        )
    }

    fn replicate(&self, seed: u64) -> Result<f64> {
        let mut r = rng::stream(seed, Domain::Power, 0);
        let a = self.arm(&mut r, self.p0)?;
        let b = self.arm(&mut r, self.p1)?;
        let n_eff = (self.clusters() * self.k) as f64 / self.design_effect();
        let pbar = 0.5 * (a + b);
        let se = (2.0 * pbar * (1.0 - pbar) / n_eff).sqrt();
        if se == 0.0 {
            return Err(Error::Degenerate("no variation in either arm".into()));
        }
        Ok(2.0 * normal::sf(((b - a) / se).abs()))
    }

    fn analytic_power(&self, alpha: f64) -> Option<f64> {
        analytic_power_two_prop(self.p0, self.p1, (self.clusters() * self.k) as f64, alpha, self.design_effect()).ok()
    }

    fn design_effect(&self) -> f64 {
        design_effect(self.k, self.icc).unwrap_or(f64::NAN)
    }

    fn sample_size(&self) -> u64 {
        (2 * self.clusters() * self.k) as u64
    }
}

/// Full simulated audits from the reduced-form process, tested with a joint
/// Wald test on named coefficients of an estimator specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditScenario {
    pub design: DesignConfig,
    pub dgp: ReducedFormConfig,
    pub n_occupations: usize,
    pub catalog_seed: u64,
    pub spec: RegressionSpec,
    /// coefficients jointly tested against zero
    pub terms: Vec<String>,
}

impl Default for AuditScenario {
    /// Six groups by six job categories, Black men at 0.225 in one
    /// non-base category, joint test of the Black-man x category terms.
    fn default() -> Self {
        let mut dgp = ReducedFormConfig::default();
        dgp.category_gaps
            .insert(1, [(crate::group::Group::BM, 0.075)].into_iter().collect());
        AuditScenario {
            design: DesignConfig::default(),
            dgp,
            n_occupations: 175,
            catalog_seed: 1,
            spec: RegressionSpec::grouped(crate::estimator::Grouping::JobCategory),
            terms: (1..6).map(|c| format!("BM:cat{c}")).collect(),
        }
    }
}

#[derive(Debug)]
struct BuiltAudit {
    config: AuditScenario,
    catalog: OccupationCatalog,
    dgp: ReducedFormDgp,
}

impl BuiltAudit {
    fn new(config: AuditScenario) -> Result<Self> {
        config.design.validate()?;
        if config.terms.is_empty() {
            return Err(Error::config("power.params.terms", "no coefficients to test"));
        }
        let catalog = OccupationCatalog::synthetic(config.n_occupations, config.catalog_seed)?;
        let dgp = ReducedFormDgp::new(config.dgp.clone())?;
        Ok(BuiltAudit { config, catalog, dgp })
    }
}

impl PowerScenario for BuiltAudit {
    fn name(&self) -> &'static str {
        "audit"
    }

    fn describe(&self) -> String {
        format!(
            "{} ads x {} applications, reduced-form callbacks (baseline {}, ICC {}); joint Wald F on {}",
            self.config.design.n_ads,
            self.config.design.k,
            self.config.dgp.baseline,
            self.config.dgp.icc,
            self.config.terms.join(", ")
        )
    }

    fn replicate(&self, seed: u64) -> Result<f64> {
        let mut ds = generate_dataset(&self.config.design, &self.catalog, seed)?;
        self.dgp.simulate(&mut ds, seed)?;
        let fit = self.config.spec.fit(&ds)?;
        Ok(fit.wald_zero(&self.config.terms)?.p)
    }

    fn design_effect(&self) -> f64 {
        design_effect(self.config.design.k, self.config.dgp.icc).unwrap_or(f64::NAN)
    }

    fn sample_size(&self) -> u64 {
        (self.config.design.n_ads * self.config.design.k) as u64
    }
}

pub fn audit_scenario(config: AuditScenario) -> Result<Box<dyn PowerScenario>> {
    Ok(Box::new(BuiltAudit::new(config)?))
}

pub type ScenarioFactory = fn(&serde_json::Value) -> Result<Box<dyn PowerScenario>>;

fn two_arm_factory(params: &serde_json::Value) -> Result<Box<dyn PowerScenario>> {
    let s: ClusterTwoArm = parse("power.params", params)?;
    s.validate()?;
    Ok(Box::new(s))
}

fn audit_factory(params: &serde_json::Value) -> Result<Box<dyn PowerScenario>> {
    audit_scenario(parse("power.params", params)?)
}

#[derive(Clone)]
pub struct ScenarioRegistry {
    factories: BTreeMap<&'static str, ScenarioFactory>,
}

impl fmt::Debug for ScenarioRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

impl Default for ScenarioRegistry {
    fn default() -> Self {
        let mut r = ScenarioRegistry {
            factories: BTreeMap::new(),
        };
        r.register("cluster_two_arm", two_arm_factory);
        r.register("audit", audit_factory);
        r
    }
}

impl ScenarioRegistry {
    pub fn register(&mut self, name: &'static str, factory: ScenarioFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, name: &str, params: &serde_json::Value) -> Result<Box<dyn PowerScenario>> {
        let factory = self.factories.get(name).ok_or_else(|| Error::UnknownStrategy {
            registry: "power scenario",
            name: name.to_string(),
            known: self.names().join(", "),
        })?;
        factory(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub scenario: String,
    pub test: String,
    pub alpha: f64,
    pub design_effect: f64,
    /// applications per replication
    pub base_n: u64,
    /// applications needed to match the information of `base_n` independent ones
    pub adjusted_n: u64,
    pub analytic_power: Option<f64>,
    pub mc_power: f64,
    pub mc_se: f64,
    pub replications: usize,
    /// replications whose estimation failed; excluded from `mc_power`
    pub failures: usize,
    pub failure_messages: Vec<String>,
    pub master_seed: u64,
    /// p-value of every replication in order; failures are NaN
    #[serde(skip)]
    pub p_values: Vec<f64>,
}

impl PowerReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "Power: {}\n{}\n\nalpha               {}\nreplications        {} ({} failed)\nMC power            {:.4} (MC SE {:.4})\n",
            self.scenario, self.test, self.alpha, self.replications, self.failures, self.mc_power, self.mc_se
        );
        if let Some(a) = self.analytic_power {
            s.push_str(&format!("analytic power      {a:.4}\n"));
        }
        s.push_str(&format!(
            "design effect       {:.4}\napplications        {}\nDE-adjusted N       {}\nmaster seed         {}\n",
            self.design_effect, self.base_n, self.adjusted_n, self.master_seed
        ));
        for m in &self.failure_messages {
            s.push_str(&format!("failure: {m}\n"));
        }
        s
    }
}

/// Share of `replications` in which the scenario's test rejects at `alpha`.
/// Replication `r` is seeded with `derive(master_seed, Power, r)`, so results do
/// not depend on the thread schedule.
pub fn mc_power(scenario: &dyn PowerScenario, replications: usize, alpha: f64, master_seed: u64) -> Result<PowerReport> {
    if replications < 100 {
        return Err(Error::Domain(format!("need at least 100 replications, got {replications}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let outcomes: Vec<Result<f64>> = (0..replications)
        .into_par_iter()
        .map(|r| scenario.replicate(rng::derive(master_seed, Domain::Power, r as u64)))
        .collect();
    let mut rejections = 0usize;
    let mut valid = 0usize;
    let mut failure_messages = Vec::new();
    let mut p_values = Vec::with_capacity(replications);
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(p) => {
                valid += 1;
                rejections += usize::from(p < alpha);
                p_values.push(p);
            }
            Err(e) => {
                log::warn!("replication {r} failed: {e}");
                failure_messages.push(format!("replication {r}: {e}"));
                p_values.push(f64::NAN);
            }
        }
    }
    if valid == 0 {
        return Err(Error::Inference("every replication failed".into()));
    }
    let power = rejections as f64 / valid as f64;
    let de = scenario.design_effect();
    let base_n = scenario.sample_size();
    Ok(PowerReport {
        scenario: scenario.name().to_string(),
        test: scenario.describe(),
        alpha,
        design_effect: de,
        base_n,
        adjusted_n: super::analytic::adjusted_n(base_n, de)?,
        analytic_power: scenario.analytic_power(alpha),
        mc_power: power,
        mc_se: (power * (1.0 - power) / valid as f64).sqrt(),
        replications,
        failures: replications - valid,
        failure_messages,
        master_seed,
        p_values,
    })
}
