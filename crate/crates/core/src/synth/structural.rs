//! Callbacks from the threshold rule of the discretion-index model.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::dataset::AuditDataset;
use super::dgp::{CallbackDgp, DgpReport};
use crate::error::Result;
use crate::rng::{self, Domain};
use crate::theory::{evaluate_job, ModelParams};

/// Each application draws productivity and both screening signals; the employer
/// calls back when the discretion-weighted composite clears `theta_bar (1 + V_g)`.
#[derive(Debug, Clone)]
pub struct StructuralDgp {
    params: ModelParams,
}

impl StructuralDgp {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(StructuralDgp { params })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
}

impl CallbackDgp for StructuralDgp {
    fn name(&self) -> &'static str {
        "structural"
    }

    fn simulate(&self, ds: &mut AuditDataset, seed: u64) -> Result<DgpReport> {
        ds.validate()?;
        let k = ds.k;
        let params = &self.params;
        let ads = &ds.ads;
        ds.applications
            .par_chunks_mut(k)
            .enumerate()
            .for_each(|(j, apps)| {
                let job = evaluate_job(&ads[j].profile, params);
                let mut r = rng::stream(seed, Domain::Structural, j as u64);
                let (e, sd_o) = (job.e_star, job.u.sqrt());
                for app in apps {
                    let pi = params.pi(app.attrs.group);
                    let tau2 = job.b / pi;
                    let v_g = job.group_variance(pi);
                    let theta: f64 = r.sample(StandardNormal);
                    let eps_s: f64 = r.sample(StandardNormal);
                    let eps_o: f64 = r.sample(StandardNormal);
                    let s_s = theta + tau2.sqrt() * eps_s;
                    let s_o = theta + sd_o * eps_o;
                    let composite = e * s_s + (1.0 - e) * s_o;
                    app.callback = Some(composite > params.theta_bar * (1.0 + v_g));
                }
            });
        ds.dgp = Some(self.name().into());
        Ok(DgpReport {
            dgp: self.name().into(),
            ..DgpReport::default()
        })
    }
}
