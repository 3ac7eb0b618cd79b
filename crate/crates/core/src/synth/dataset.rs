//! Audit datasets: ads, the applications sent to them, and CSV exchange.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::attributes::{Computer, Gpa, Internship, MajorGroup, Minor, ResumeAttributes};
use crate::error::{Error, Result};
use crate::group::Group;
use crate::theory::TaskProfile;

/// Ad-level task composites computed on the occupation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdComposites {
    pub b_hat: f64,
    pub p_hat: f64,
    pub m_hat: f64,
    pub c_hat: f64,
    pub e_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobAd {
    pub ad_id: u32,
    pub firm_id: u32,
    pub occupation_id: u32,
    pub major_group: MajorGroup,
    pub job_category: u8,
    /// task cluster label, if one has been assigned
    pub cluster_id: Option<u8>,
    pub profile: TaskProfile,
    pub composites: AdComposites,
    /// latent ad effect of the reduced-form process; zero otherwise
    pub ad_effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Application {
    /// index into `AuditDataset::ads`
    pub ad: u32,
    pub attrs: ResumeAttributes,
    pub callback: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditDataset {
    pub ads: Vec<JobAd>,
    /// grouped by ad, `k` consecutive rows each
    pub applications: Vec<Application>,
    pub k: usize,
    pub seed: u64,
    pub dgp: Option<String>,
}

impl AuditDataset {
    pub fn n_ads(&self) -> usize {
        self.ads.len()
    }

    pub fn len(&self) -> usize {
        self.applications.len()
    }

    pub fn is_empty(&self) -> bool {
        self.applications.is_empty()
    }

    pub fn ad_of(&self, app: &Application) -> &JobAd {
        &self.ads[app.ad as usize]
    }

    /// Applications of ad `j`.
    pub fn ad_applications(&self, j: usize) -> &[Application] {
        &self.applications[j * self.k..(j + 1) * self.k]
    }

    pub fn has_callbacks(&self) -> bool {
        !self.applications.is_empty() && self.applications.iter().all(|a| a.callback.is_some())
    }

    /// Callback outcomes as 0/1; fails if any is unset.
    pub fn callbacks(&self) -> Result<Vec<f64>> {
        self.applications
            .iter()
            .map(|a| {
                a.callback
                    .map(|c| if c { 1.0 } else { 0.0 })
                    .ok_or_else(|| Error::Precondition("dataset has no simulated callbacks".into()))
            })
            .collect()
    }

    /// Check structural invariants: `k` rows per ad in ad order and distinct universities within ads.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.applications.len() != self.ads.len() * self.k {
            return Err(Error::Precondition(format!(
                "{} applications for {} ads at k = {}",
                self.applications.len(),
                self.ads.len(),
                self.k
            )));
        }
        for j in 0..self.ads.len() {
            let apps = self.ad_applications(j);
            let mut seen = Vec::with_capacity(self.k);
            for a in apps {
                if a.ad as usize != j {
                    return Err(Error::Precondition(format!("application rows of ad {j} are not contiguous")));
                }
                if seen.contains(&a.attrs.university_id) {
                    return Err(Error::Precondition(format!(
                        "ad {} lists university {} twice",
                        self.ads[j].ad_id, a.attrs.university_id
                    )));
                }
                seen.push(a.attrs.university_id);
            }
        }
        Ok(())
    }

    /// Callback rate per group as `(rate, n)`.
    pub fn group_rates(&self) -> Result<BTreeMap<Group, (f64, usize)>> {
        let y = self.callbacks()?;
        let mut acc: BTreeMap<Group, (f64, usize)> = BTreeMap::new();
        for (a, y) in self.applications.iter().zip(y) {
            let e = acc.entry(a.attrs.group).or_insert((0.0, 0));
            e.0 += y;
            e.1 += 1;
        }
        Ok(acc.into_iter().map(|(g, (s, n))| (g, (s / n as f64, n))).collect())
    }

    /// Number of minority (or Black) co-applicants of each application.
    pub fn peer_counts(&self, black_only: bool) -> Vec<u8> {
        let flag = |a: &Application| {
            if black_only {
                a.attrs.group.is_black()
            } else {
                a.attrs.group.is_minority()
            }
        };
        let mut out = Vec::with_capacity(self.applications.len());
        for j in 0..self.ads.len() {
            let apps = self.ad_applications(j);
            let total = apps.iter().filter(|a| flag(a)).count();
            for a in apps {
                out.push((total - usize::from(flag(a))) as u8);
            }
        }
        out
    }
}

/// One CSV row: ad-level fields repeated on each of the ad's applications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CsvRow {
    ad_id: u32,
    firm_id: u32,
    occupation_id: u32,
    major_group: String,
    job_category: u8,
    cluster_id: Option<u8>,
    a: f64,
    p: f64,
    r: f64,
    m: f64,
    phy: f64,
    k: f64,
    b_hat: f64,
    p_hat: f64,
    m_hat: f64,
    c_hat: f64,
    e_star: f64,
    ad_effect: f64,
    group: String,
    name_id: u8,
    university_id: u8,
    major: u8,
    minor: String,
    gpa: String,
    internship: String,
    computer: String,
    volunteer: u8,
    spanish: u8,
    study_abroad: u8,
    college_job: u8,
    callback: Option<u8>,
}

/// Column order of the dataset CSV.
pub const CSV_COLUMNS: [&str; 31] = [
    "ad_id",
    "firm_id",
    "occupation_id",
    "major_group",
    "job_category",
    "cluster_id",
    "a",
    "p",
    "r",
    "m",
    "phy",
    "k",
    "b_hat",
    "p_hat",
    "m_hat",
    "c_hat",
    "e_star",
    "ad_effect",
    "group",
    "name_id",
    "university_id",
    "major",
    "minor",
    "gpa",
    "internship",
    "computer",
    "volunteer",
    "spanish",
    "study_abroad",
    "college_job",
    "callback",
];

fn parse_code<T>(field: &str, v: &str, f: impl Fn(&str) -> Option<T>) -> Result<T> {
    f(v).ok_or_else(|| Error::Parse(format!("bad {field} value `{v}`")))
}

impl AuditDataset {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for app in &self.applications {
            let ad = self.ad_of(app);
            let r = &app.attrs;
            wtr.serialize(CsvRow {
                ad_id: ad.ad_id,
                firm_id: ad.firm_id,
                occupation_id: ad.occupation_id,
                major_group: ad.major_group.code().into(),
                job_category: ad.job_category,
                cluster_id: ad.cluster_id,
                a: ad.profile.a,
                p: ad.profile.p,
                r: ad.profile.r,
                m: ad.profile.m,
                phy: ad.profile.phy,
                k: ad.profile.k,
                b_hat: ad.composites.b_hat,
                p_hat: ad.composites.p_hat,
                m_hat: ad.composites.m_hat,
                c_hat: ad.composites.c_hat,
                e_star: ad.composites.e_star,
                ad_effect: ad.ad_effect,
                group: r.group.code().into(),
                name_id: r.name_id,
                university_id: r.university_id,
                major: r.major,
                minor: r.minor.code().into(),
                gpa: r.gpa.code().into(),
                internship: r.internship.code().into(),
                computer: r.computer.code().into(),
                volunteer: r.volunteer.into(),
                spanish: r.spanish.into(),
                study_abroad: r.study_abroad.into(),
                college_job: r.college_job.into(),
                callback: app.callback.map(u8::from),
            })?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Read a dataset written by [`AuditDataset::write_csv`]. Rows of an ad must
    /// be contiguous and every ad must have the same number of applications.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        if header != CSV_COLUMNS {
            return Err(Error::Parse(format!(
                "unexpected dataset header; expected {}",
                CSV_COLUMNS.join(",")
            )));
        }
        let mut ads: Vec<JobAd> = Vec::new();
        let mut applications = Vec::new();
        let mut seen = HashSet::new();
        for (line, row) in rdr.deserialize::<CsvRow>().enumerate() {
            let row = row?;
            let new_ad = ads.last().is_none_or(|a| a.ad_id != row.ad_id);
            if new_ad {
                if !seen.insert(row.ad_id) {
                    return Err(Error::Parse(format!("row {}: rows of ad {} are not contiguous", line + 2, row.ad_id)));
                }
                ads.push(JobAd {
                    ad_id: row.ad_id,
                    firm_id: row.firm_id,
                    occupation_id: row.occupation_id,
                    major_group: parse_code("major_group", &row.major_group, MajorGroup::from_code)?,
                    job_category: row.job_category,
                    cluster_id: row.cluster_id,
                    profile: TaskProfile::new(row.a, row.p, row.r, row.m, row.phy, row.k)?,
                    composites: AdComposites {
                        b_hat: row.b_hat,
                        p_hat: row.p_hat,
                        m_hat: row.m_hat,
                        c_hat: row.c_hat,
                        e_star: row.e_star,
                    },
                    ad_effect: row.ad_effect,
                });
            }
            let callback = match row.callback {
                None => None,
                Some(0) => Some(false),
                Some(1) => Some(true),
                Some(v) => return Err(Error::Parse(format!("row {}: callback must be 0 or 1, got {v}", line + 2))),
            };
            let flag = |name: &str, v: u8| -> Result<bool> {
                match v {
                    0 => Ok(false),
                    1 => Ok(true),
                    _ => Err(Error::Parse(format!("row {}: {name} must be 0 or 1", line + 2))),
                }
            };
            applications.push(Application {
                ad: (ads.len() - 1) as u32,
                attrs: ResumeAttributes {
                    group: row.group.parse()?,
                    name_id: row.name_id,
                    university_id: row.university_id,
                    major: row.major,
                    minor: parse_code("minor", &row.minor, Minor::from_code)?,
                    gpa: parse_code("gpa", &row.gpa, Gpa::from_code)?,
                    internship: parse_code("internship", &row.internship, Internship::from_code)?,
                    computer: parse_code("computer", &row.computer, Computer::from_code)?,
                    volunteer: flag("volunteer", row.volunteer)?,
                    spanish: flag("spanish", row.spanish)?,
                    study_abroad: flag("study_abroad", row.study_abroad)?,
                    college_job: flag("college_job", row.college_job)?,
                },
                callback,
            });
        }
        if ads.is_empty() {
            return Err(Error::Parse("dataset CSV has no rows".into()));
        }
        let k = applications.len() / ads.len();
        let ds = AuditDataset {
            ads,
            applications,
            k,
            seed: 0,
            dgp: None,
        };
        ds.validate()?;
        Ok(ds)
    }
}
