//! Experimental design parameters for synthetic audits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Attribute distributions and audit structure. Probabilities not pinned down
/// by the original design (minor, internship, binary extras) default to
/// uniform or 50/50.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    pub n_ads: usize,
    /// résumés per ad
    pub k: usize,
    pub n_universities: usize,
    pub n_majors: usize,
    /// WM, WW, BW, HW, BM, HM
    pub group_probs: Vec<f64>,
    /// none, history, math
    pub minor_probs: Vec<f64>,
    /// none, 3.0, 3.2, 3.4, 3.6, 3.8, 4.0
    pub gpa_probs: Vec<f64>,
    /// none, analytical, interpersonal
    pub internship_probs: Vec<f64>,
    /// none, basic, data, programming, data+programming
    pub computer_probs: Vec<f64>,
    pub p_volunteer: f64,
    pub p_spanish: f64,
    pub p_study_abroad: f64,
    pub p_college_job: f64,
    pub job_category_probs: Vec<f64>,
    /// distinct firms per ad
    pub firms_per_ad: f64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        let mut gpa = vec![0.25];
        gpa.extend(std::iter::repeat_n(0.125, 6));
        DesignConfig {
            n_ads: 9_220,
            k: 4,
            n_universities: 12,
            n_majors: 8,
            group_probs: uniform(6),
            minor_probs: uniform(3),
            gpa_probs: gpa,
            internship_probs: uniform(3),
            computer_probs: vec![0.25, 0.25, 0.25, 0.125, 0.125],
            p_volunteer: 0.5,
            p_spanish: 0.5,
            p_study_abroad: 0.5,
            p_college_job: 0.5,
            job_category_probs: uniform(6),
            firms_per_ad: 4_968.0 / 9_220.0,
        }
    }
}

fn check_probs(path: &str, p: &[f64], len: Option<usize>) -> Result<()> {
    if let Some(n) = len {
        if p.len() != n {
            return Err(Error::config(path, format!("expected {n} probabilities, got {}", p.len())));
        }
    }
    if p.is_empty() {
        return Err(Error::config(path, "empty distribution"));
    }
    if p.iter().any(|&v| !(0.0..=1.0).contains(&v) || !v.is_finite()) {
        return Err(Error::config(path, "probabilities must lie in [0, 1]"));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::config(path, format!("probabilities sum to {s}, not 1")));
    }
    Ok(())
}

fn check_unit(path: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::config(path, format!("probability {p} outside [0, 1]")))
    }
}

impl DesignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ads == 0 {
            return Err(Error::config("design.n_ads", "must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::config("design.k", "must be at least 1"));
        }
        if self.k > self.n_universities {
            return Err(Error::Infeasible(format!(
                "{} résumés per ad cannot list distinct universities from a pool of {}",
                self.k, self.n_universities
            )));
        }
        if self.n_universities > 255 || self.n_majors == 0 || self.n_majors > 255 {
            return Err(Error::config("design.n_majors", "university and major counts must lie in 1..=255"));
        }
        check_probs("design.group_probs", &self.group_probs, Some(6))?;
        check_probs("design.minor_probs", &self.minor_probs, Some(3))?;
        check_probs("design.gpa_probs", &self.gpa_probs, Some(7))?;
        check_probs("design.internship_probs", &self.internship_probs, Some(3))?;
        check_probs("design.computer_probs", &self.computer_probs, Some(5))?;
        check_probs("design.job_category_probs", &self.job_category_probs, None)?;
        if self.job_category_probs.len() > 255 {
            return Err(Error::config("design.job_category_probs", "at most 255 categories"));
        }
        check_unit("design.p_volunteer", self.p_volunteer)?;
        check_unit("design.p_spanish", self.p_spanish)?;
        check_unit("design.p_study_abroad", self.p_study_abroad)?;
        check_unit("design.p_college_job", self.p_college_job)?;
        if !(self.firms_per_ad > 0.0 && self.firms_per_ad <= 1.0) {
            return Err(Error::config("design.firms_per_ad", "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn n_categories(&self) -> usize {
        self.job_category_probs.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let d = DesignConfig::default();
        d.validate().unwrap();
        assert_eq!(d.n_ads * d.k, 36_880);
    }

    #[test]
    fn infeasible_university_constraint() {
        let d = DesignConfig {
            k: 13,
            ..DesignConfig::default()
        };
        assert!(matches!(d.validate(), Err(Error::Infeasible(_))));
    }

    #[test]
    fn bad_probabilities() {
        let d = DesignConfig {
            computer_probs: vec![0.5, 0.5, 0.5, 0.0, 0.0],
            ..DesignConfig::default()
        };
        let err = d.validate().unwrap_err();
        assert!(err.to_string().contains("design.computer_probs"));
    }

    #[test]
    fn partial_json_uses_defaults() {
        let d: DesignConfig = serde_json::from_str(r#"{"n_ads": 50}"#).unwrap();
        assert_eq!(d.n_ads, 50);
        assert_eq!(d.k, 4);
        assert!(serde_json::from_str::<DesignConfig>(r#"{"n_adz": 50}"#).is_err());
    }
}
