//! Whether a résumé's callback depends on who else applied to the same ad.

use serde::Serialize;

use super::inference::{LincomResult, WaldResult};
use super::model::{base_design, group_indicator, high_discretion, interaction_name, product, ClusterBy, FixedEffects};
use super::ols::{fit, FitResult};
use super::report::ResultRow;
use crate::error::{Error, Result};
use crate::group::Group;
use crate::synth::AuditDataset;

#[derive(Debug, Clone, Serialize)]
pub struct InterferenceReport {
    /// five group x minority co-applicant count interactions
    pub minority_peers: WaldResult,
    /// five group x Black co-applicant count interactions
    pub black_peers: WaldResult,
    /// minority x high discretion x minority co-applicant count
    pub triple: LincomResult,
    pub fits: Vec<FitResult>,
}

fn peer_model(ds: &AuditDataset, black_only: bool) -> Result<(FitResult, Vec<String>)> {
    let peers: Vec<f64> = ds.peer_counts(black_only).into_iter().map(f64::from).collect();
    let label = if black_only { "black_peers" } else { "minority_peers" };
    let mut d = base_design(ds, FixedEffects::Ad, ClusterBy::Ad)?;
    let mut names = Vec::new();
    for g in Group::MINORITIES {
        let gi = d.columns[g.index() - 1].clone();
        let n = interaction_name(g, label);
        d.push(n.clone(), product(&gi, &peers));
        names.push(n);
    }
    Ok((fit(&d)?, names))
}

/// Joint F tests of peer-composition interactions. The count main effects are
/// absorbed by the ad fixed effects up to own group, so only the
/// group-specific slopes are estimated.
pub fn interference_check(ds: &AuditDataset) -> Result<InterferenceReport> {
    if ds.k < 2 {
        return Err(Error::Precondition(format!(
            "interference needs at least 2 applications per ad, got {}",
            ds.k
        )));
    }
    let (fit_min, names_min) = peer_model(ds, false)?;
    let (fit_black, names_black) = peer_model(ds, true)?;
    let minority_peers = fit_min.wald_zero(&names_min)?;
    let black_peers = fit_black.wald_zero(&names_black)?;

    let peers: Vec<f64> = ds.peer_counts(false).into_iter().map(f64::from).collect();
    let high_ad = high_discretion(ds);
    let high: Vec<f64> = ds
        .applications
        .iter()
        .map(|a| f64::from(u8::from(high_ad[a.ad as usize])))
        .collect();
    let minority = group_indicator(ds, Group::is_minority);
    let mut d = base_design(ds, FixedEffects::Ad, ClusterBy::Ad)?;
    let min_high = product(&minority, &high);
    d.push("minority:peers", product(&minority, &peers));
    d.push("minority:high", min_high.clone());
    d.push("minority:high:peers", product(&min_high, &peers));
    let fit_triple = fit(&d)?;
    let triple = fit_triple.test("minority:high:peers")?;

    Ok(InterferenceReport {
        minority_peers,
        black_peers,
        triple,
        fits: vec![fit_min, fit_black, fit_triple],
    })
}

impl InterferenceReport {
    pub fn result_rows(&self, model: &str) -> Vec<ResultRow> {
        vec![
            ResultRow::wald(model, "F:group_x_minority_peers", &self.minority_peers),
            ResultRow::wald(model, "F:group_x_black_peers", &self.black_peers),
            ResultRow::lincom(model, "minority:high:peers", &self.triple),
        ]
    }

    pub fn to_text(&self) -> String {
        format!(
            "peer composition\n\
             group x minority co-applicants: F({}, {}) = {:.3}, p = {:.3}\n\
             group x Black co-applicants:    F({}, {}) = {:.3}, p = {:.3}\n\
             minority x high E* x minority co-applicants: {:.4} ({:.4}), p = {:.3}\n",
            self.minority_peers.q,
            self.minority_peers.df,
            self.minority_peers.f,
            self.minority_peers.p,
            self.black_peers.q,
            self.black_peers.df,
            self.black_peers.f,
            self.black_peers.p,
            self.triple.estimate,
            self.triple.se,
            self.triple.p,
        )
    }
}
