//! Discretion-index callback model.
//!
//! Subjective screening noise `B` rises with analytical and interpersonal task
//! intensity (amplified by customer contact), objective precision `P` rises with
//! routine-cognitive intensity, and employers weight the subjective signal by the
//! discretion index `E* = B / (B + P)`. Minority applicants face subjective noise
//! `B / pi_g`, which opens a composite-variance gap and hence a callback gap.

pub mod verify;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Group;
use crate::normal;

/// One job's task-intensity vector, each component normalised to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskProfile {
    /// analytical
    pub a: f64,
    /// interpersonal
    pub p: f64,
    /// routine cognitive
    pub r: f64,
    /// routine manual
    pub m: f64,
    /// physical
    pub phy: f64,
    /// contact
    pub k: f64,
}

impl TaskProfile {
    pub fn new(a: f64, p: f64, r: f64, m: f64, phy: f64, k: f64) -> Result<Self> {
        let profile = TaskProfile { a, p, r, m, phy, k };
        profile.validate()?;
        Ok(profile)
    }

    /// Profile with only the four model-relevant intensities set.
    pub fn core(a: f64, p: f64, r: f64, k: f64) -> Result<Self> {
        Self::new(a, p, r, 0.0, 0.0, k)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.fields() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("task intensity `{name}` = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn fields(&self) -> [(&'static str, f64); 6] {
        [
            ("a", self.a),
            ("p", self.p),
            ("r", self.r),
            ("m", self.m),
            ("phy", self.phy),
            ("k", self.k),
        ]
    }
}

fn default_pi() -> BTreeMap<Group, f64> {
    Group::ALL
        .into_iter()
        .map(|g| (g, if g.is_minority() { 0.9 } else { 1.0 }))
        .collect()
}

/// Structural parameters. None of these are estimated quantities; the defaults
/// are a demonstration calibration (unit loadings, 15% baseline callback rate,
/// `pi = 0.9` for every minority group).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "one")]
    pub delta: f64,
    /// slope of the contact amplifier `g(k) = 1 + gamma * k`
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_theta_bar")]
    pub theta_bar: f64,
    /// precision retention of subjective evaluation per group
    #[serde(default = "default_pi")]
    pub pi: BTreeMap<Group, f64>,
}

fn one() -> f64 {
    1.0
}

fn default_theta_bar() -> f64 {
    normal::quantile(0.85)
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            alpha: 1.0,
            beta: 1.0,
            delta: 1.0,
            gamma: 0.0,
            theta_bar: default_theta_bar(),
            pi: default_pi(),
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("delta", self.delta),
            ("theta_bar", self.theta_bar),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::config("gamma", format!("must be >= 0, got {}", self.gamma)));
        }
        match self.pi.get(&Group::WM) {
            Some(&1.0) => {}
            Some(&v) => return Err(Error::config("pi.WM", format!("reference group must have pi = 1, got {v}"))),
            None => return Err(Error::config("pi.WM", "missing reference group")),
        }
        for g in Group::ALL {
            match self.pi.get(&g) {
                Some(&v) if v > 0.0 && v <= 1.0 => {}
                Some(&v) => return Err(Error::config(format!("pi.{g}"), format!("must lie in (0, 1], got {v}"))),
                None => return Err(Error::config(format!("pi.{g}"), "missing")),
            }
        }
        Ok(())
    }

    pub fn pi(&self, g: Group) -> f64 {
        self.pi.get(&g).copied().unwrap_or(1.0)
    }

    /// Contact amplifier `g(k)`.
    pub fn contact_amplifier(&self, k: f64) -> f64 {
        1.0 + self.gamma * k
    }
}

/// Evaluation environment of one job.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JobEvaluation {
    /// subjective noise variance
    pub b: f64,
    /// objective precision
    pub p: f64,
    /// objective noise variance, `1 / p`
    pub u: f64,
    /// discretion index
    pub e_star: f64,
}

impl JobEvaluation {
    /// Build from raw `B` and `P`; both must be positive.
    pub fn from_bp(b: f64, p: f64) -> Result<Self> {
        if !(b > 0.0 && p > 0.0 && b.is_finite() && p.is_finite()) {
            return Err(Error::Domain(format!("B and P must be positive, got B={b}, P={p}")));
        }
        Ok(JobEvaluation {
            b,
            p,
            u: 1.0 / p,
            e_star: b / (b + p),
        })
    }

    /// Composite variance of the majority group.
    pub fn majority_variance(&self) -> f64 {
        composite_variance_unchecked(self.e_star, self.b, self.u)
    }

    /// Composite variance for a group with precision retention `pi`.
    pub fn group_variance(&self, pi: f64) -> f64 {
        composite_variance_unchecked(self.e_star, self.b / pi, self.u)
    }
}

/// Outcome of comparing one minority group with the majority in one job.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    pub delta_g: f64,
    pub variance_gap: f64,
    /// majority minus minority callback probability
    pub exact_gap: f64,
    pub taylor_gap: f64,
    /// first-order Taylor coefficient of the callback function at `V_M`
    pub k0: f64,
}

/// Partial derivatives of the variance gap with respect to task intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Partials {
    pub d_a: f64,
    pub d_p: f64,
    pub d_r: f64,
    pub d_k: f64,
}

fn check_pi(pi: f64) -> Result<()> {
    if pi.is_finite() && pi > 0.0 && pi <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("precision retention must lie in (0, 1], got {pi}")))
    }
}

/// `1/pi - 1`.
pub fn noise_penalty(pi: f64) -> Result<f64> {
    check_pi(pi)?;
    Ok(1.0 / pi - 1.0)
}

pub fn evaluate_job(profile: &TaskProfile, params: &ModelParams) -> JobEvaluation {
    let nonroutine = params.alpha * profile.a + params.beta * profile.p;
    let b = 1.0 + nonroutine * params.contact_amplifier(profile.k);
    let p = 1.0 + params.delta * profile.r;
    JobEvaluation {
        b,
        p,
        u: 1.0 / p,
        e_star: b / (b + p),
    }
}

#[inline]
fn composite_variance_unchecked(e_star: f64, tau2: f64, u: f64) -> f64 {
    let w = 1.0 - e_star;
    e_star * e_star * tau2 + w * w * u
}

/// Variance of `E* s_s + (1 - E*) s_o` net of productivity.
pub fn composite_variance(e_star: f64, tau2: f64, u: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&e_star) {
        return Err(Error::Domain(format!("weight must lie in [0, 1), got {e_star}")));
    }
    if !(tau2 >= 0.0 && u >= 0.0) {
        return Err(Error::Domain(format!("variances must be non-negative, got tau2={tau2}, u={u}")));
    }
    Ok(composite_variance_unchecked(e_star, tau2, u))
}

/// Minority-minus-majority composite variance, `E*^2 B Delta_g`.
pub fn variance_gap(job: &JobEvaluation, pi: f64) -> Result<f64> {
    let delta = noise_penalty(pi)?;
    Ok(job.e_star * job.e_star * job.b * delta)
}

/// Callback probability `1 - Phi(theta_bar sqrt(1 + v))`.
pub fn callback_prob(theta_bar: f64, v: f64) -> f64 {
    normal::sf(theta_bar * (1.0 + v).sqrt())
}

pub fn taylor_coefficient(theta_bar: f64, v_majority: f64) -> f64 {
    let root = (1.0 + v_majority).sqrt();
    normal::pdf(theta_bar * root) * theta_bar / (2.0 * root)
}

pub fn callback_gaps(job: &JobEvaluation, pi: f64, params: &ModelParams) -> Result<GapResult> {
    let delta_g = noise_penalty(pi)?;
    let gap = job.e_star * job.e_star * job.b * delta_g;
    let v_m = job.majority_variance();
    let v_g = job.group_variance(pi);
    let exact_gap = if delta_g == 0.0 {
        0.0
    } else {
        callback_prob(params.theta_bar, v_m) - callback_prob(params.theta_bar, v_g)
    };
    let k0 = taylor_coefficient(params.theta_bar, v_m);
    Ok(GapResult {
        delta_g,
        variance_gap: gap,
        exact_gap,
        taylor_gap: k0 * gap,
        k0,
    })
}

/// Variance gap as a function of the task profile, `Delta B^3 / (B + P)^2`.
pub fn variance_gap_of_profile(profile: &TaskProfile, pi: f64, params: &ModelParams) -> Result<f64> {
    let job = evaluate_job(profile, params);
    variance_gap(&job, pi)
}

/// Closed-form partials of the variance gap in `(a, p, r, k)`.
pub fn variance_gap_partials(profile: &TaskProfile, pi: f64, params: &ModelParams) -> Result<Partials> {
    let delta = noise_penalty(pi)?;
    let job = evaluate_job(profile, params);
    let (b, p) = (job.b, job.p);
    let s = b + p;
    // d/dB of B^3/(B+P)^2
    let d_b = b * b * (b + 3.0 * p) / (s * s * s);
    let d_p_side = -2.0 * b * b * b / (s * s * s);
    let g = params.contact_amplifier(profile.k);
    let nonroutine = params.alpha * profile.a + params.beta * profile.p;
    Ok(Partials {
        d_a: delta * params.alpha * g * d_b,
        d_p: delta * params.beta * g * d_b,
        d_r: delta * params.delta * d_p_side,
        d_k: delta * nonroutine * params.gamma * d_b,
    })
}
