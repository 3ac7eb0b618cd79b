//! Pipeline stages. Each stage returns its artifacts in memory; nothing touches
//! the output directory until [`Artifacts::commit`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use taskgap_core::estimator::{write_rows, AnalysisRegistry};
use taskgap_core::power::{adjusted_n, design_effect, mc_power, PowerReport, ScenarioRegistry};
use taskgap_core::rng::{derive, Domain};
use taskgap_core::synth::{balance_check, generate_dataset, AuditDataset, DgpRegistry, DgpReport, OccupationCatalog};
use taskgap_core::taskspace::kmeans::{adjusted_rand_index, elbow, kmeans, ElbowScan, KMeansConfig};
use taskgap_core::taskspace::{percentile_table, OccupationTaskTable, Task};
use taskgap_core::theory::verify::{self, VerifyReport};
use taskgap_core::{Error, Result};

use crate::config::{OccupationSource, RunConfig};

/// Relative path to file contents, written in path order.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn insert(&mut self, path: impl Into<String>, bytes: Vec<u8>) {
        self.files.insert(path.into(), bytes);
    }

    pub fn insert_text(&mut self, path: impl Into<String>, text: String) {
        self.insert(path, text.into_bytes());
    }

    pub fn insert_json<T: Serialize>(&mut self, path: impl Into<String>, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.insert(path, bytes);
        Ok(())
    }

    pub fn extend(&mut self, other: Artifacts) {
        self.files.extend(other.files);
    }

    pub fn get(&self, path: &str) -> Option<&[u8]> {
        self.files.get(path).map(Vec::as_slice)
    }

    pub fn paths(&self) -> Vec<&str> {
        self.files.keys().map(String::as_str).collect()
    }

    /// Write everything into a sibling staging directory, then move the files
    /// into `out`. On failure the staging directory is removed and `out` is
    /// left as it was.
    pub fn commit(&self, out: &Path) -> Result<()> {
        let parent = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent)?;
        let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
        let staging = parent.join(format!(".{name}.staging-{}", std::process::id()));
        let result = self.write_all(&staging).and_then(|()| self.publish(&staging, out));
        let _ = fs::remove_dir_all(&staging);
        result
    }

    fn write_all(&self, dir: &Path) -> Result<()> {
        if dir.exists() {
            fs::remove_dir_all(dir)?;
        }
        for (rel, bytes) in &self.files {
            let path = dir.join(rel);
            if let Some(p) = path.parent() {
                fs::create_dir_all(p)?;
            }
            fs::write(path, bytes)?;
        }
        Ok(())
    }

    fn publish(&self, staging: &Path, out: &Path) -> Result<()> {
        fs::create_dir_all(out)?;
        for rel in self.files.keys() {
            let target = out.join(rel);
            if let Some(p) = target.parent() {
                fs::create_dir_all(p)?;
            }
            fs::rename(staging.join(rel), target)?;
        }
        Ok(())
    }
}

pub fn load_catalog(cfg: &RunConfig) -> Result<OccupationCatalog> {
    match &cfg.occupations {
        OccupationSource::Synthetic { n } => {
            OccupationCatalog::synthetic(*n, derive(cfg.master_seed, Domain::Occupations, 0))
        }
        OccupationSource::Csv { path } => OccupationCatalog::from_table(OccupationTaskTable::from_path(path)?),
    }
}

pub struct ClusterStage {
    pub labels: Vec<u8>,
    pub elbow: ElbowScan,
    pub profile_text: String,
    pub artifacts: Artifacts,
}

/// K-means on occupation task percentiles plus an elbow scan.
pub fn cluster_stage(cfg: &RunConfig, table: &OccupationTaskTable, truth: Option<Vec<usize>>) -> Result<ClusterStage> {
    let c = &cfg.clustering;
    let points: Vec<Vec<f64>> = percentile_table(table)?.into_iter().map(|r| r.to_vec()).collect();
    if points.len() < c.k {
        return Err(Error::Precondition(format!("{} occupations for k = {}", points.len(), c.k)));
    }
    let seed = derive(cfg.master_seed, Domain::KMeans, 0);
    let model = kmeans(
        &points,
        &KMeansConfig {
            restarts: c.restarts,
            ..KMeansConfig::new(c.k, seed)
        },
    )?;
    let labels: Vec<u8> = model.canonical_labels().into_iter().map(|l| l as u8).collect();
    let k_max = c.k_max.min(points.len());
    let scan = elbow(&points, c.k_min.min(k_max), k_max, c.restarts, derive(cfg.master_seed, Domain::KMeans, 1))?;

    let mut art = Artifacts::default();
    let mut csv = String::from("occupation_id,cluster");
    if truth.is_some() {
        csv.push_str(",generating_cluster");
    }
    csv.push('\n');
    for (i, row) in table.rows().iter().enumerate() {
        csv.push_str(&format!("{},{}", row.occupation_id, labels[i]));
        if let Some(t) = &truth {
            csv.push_str(&format!(",{}", t[i]));
        }
        csv.push('\n');
    }
    art.insert_text("clusters.csv", csv);
    let mut ecsv = String::from("k,wss\n");
    for (k, w) in scan.ks.iter().zip(&scan.wss) {
        ecsv.push_str(&format!("{k},{w:.10e}\n"));
    }
    art.insert_text("elbow.csv", ecsv);

    // employment-weighted mean percentile per task within each cluster
    let weights = table.weights();
    let mut header = vec!["cluster".to_string(), "occupations".to_string()];
    header.extend(Task::ALL.iter().map(|t| t.name().to_string()));
    let mut rows = Vec::new();
    for cl in 0..c.k {
        let members: Vec<usize> = (0..points.len()).filter(|&i| labels[i] as usize == cl).collect();
        let w: f64 = members.iter().map(|&i| weights[i]).sum();
        let mut r = vec![cl.to_string(), members.len().to_string()];
        r.extend((0..Task::ALL.len()).map(|t| {
            let m: f64 = members.iter().map(|&i| weights[i] * points[i][t]).sum::<f64>() / w;
            format!("{m:.1}")
        }));
        rows.push(r);
    }
    let mut text = format!("Task clusters (k = {}, employment-weighted mean percentiles)\n\n", c.k);
    text.push_str(&taskgap_core::estimator::report::render(&header, &rows));
    text.push_str(&format!("within-cluster sum of squares {:.1}\n", model.wss));
    if let Some(k) = scan.suggested_k {
        text.push_str(&format!("elbow suggests k = {k}\n"));
    }
    if let Some(t) = &truth {
        let ari = adjusted_rand_index(&labels.iter().map(|&l| l as usize).collect::<Vec<_>>(), t);
        text.push_str(&format!("adjusted Rand index against generating clusters {ari:.4}\n"));
    }
    Ok(ClusterStage {
        labels,
        elbow: scan,
        profile_text: text,
        artifacts: art,
    })
}

pub struct SimulateStage {
    pub dataset: AuditDataset,
    pub report: DgpReport,
    pub artifacts: Artifacts,
}

pub fn simulate_stage(cfg: &RunConfig, catalog: &OccupationCatalog) -> Result<SimulateStage> {
    let dgp = DgpRegistry::default().build(&cfg.dgp.name, &cfg.dgp.params)?;
    let mut ds = generate_dataset(&cfg.design, catalog, derive(cfg.master_seed, Domain::Generate, 0))?;
    let report = dgp.simulate(&mut ds, derive(cfg.master_seed, Domain::Replication, 0))?;
    let balance = balance_check(&ds, cfg.design.n_universities, cfg.design.n_majors)?;

    let mut art = Artifacts::default();
    let mut buf = Vec::new();
    ds.write_csv(&mut buf)?;
    art.insert("dataset.csv", buf);
    let mut buf = Vec::new();
    catalog.table().write_csv(&mut buf)?;
    art.insert("occupations.csv", buf);
    art.insert_json("dgp.json", &report)?;
    art.insert_json("balance.json", &balance)?;
    Ok(SimulateStage {
        dataset: ds,
        report,
        artifacts: art,
    })
}

/// Run the configured analyses. `cluster_profile` is prepended to the
/// cluster gap table when present.
pub fn estimate_stage(cfg: &RunConfig, ds: &AuditDataset, cluster_profile: Option<&str>) -> Result<Artifacts> {
    let registry = AnalysisRegistry::default();
    let mut art = Artifacts::default();
    for block in &cfg.analyses {
        let analysis = registry.build(&block.name, &block.params)?;
        let out = analysis.run(ds)?;
        let mut buf = Vec::new();
        write_rows(&out.rows, &mut buf)?;
        art.insert(format!("fits/{}.csv", out.name), buf);
        let text = match (out.name.as_str(), cluster_profile) {
            ("gaps_cluster", Some(p)) => format!("{p}\n{}", out.text),
            _ => out.text,
        };
        let file = format!("{}.txt", out.name);
        art.insert_text(file, text);
    }
    Ok(art)
}

pub fn power_stage(cfg: &RunConfig) -> Result<(PowerReport, Artifacts)> {
    let scenario = ScenarioRegistry::default().build(&cfg.power.scenario.name, &cfg.power.scenario.params)?;
    let report = mc_power(scenario.as_ref(), cfg.power.replications, cfg.power.alpha, cfg.master_seed)?;
    let de = design_effect(4, 0.30)?;
    let anchors = json!({
        "design_effect_k4_icc030": de,
        "minimum_n_reference": 10_612,
        "implied_base_n": 10_612.0 / de,
        "adjusted_n_base_5585": adjusted_n(5_585, de)?,
        "adjusted_n_base_5586": adjusted_n(5_586, de)?,
        "audit_to_minimum_ratio": 36_880.0 / 10_612.0,
        "reference_mc_power": 0.920,
        "note": "per-cell sizes and the exact test behind the reference power are not documented; the audit scenario is one reading of that design"
    });
    let mut art = Artifacts::default();
    art.insert_json("power.json", &json!({"report": report, "anchors": anchors}))?;
    art.insert_text("power.txt", report.to_text());
    Ok((report, art))
}

pub fn verify_stage(cfg: &RunConfig) -> Result<(VerifyReport, Artifacts)> {
    let report = verify::run(&cfg.verify);
    let mut art = Artifacts::default();
    art.insert_json("verify.json", &report)?;
    art.insert_text("verify.txt", report.to_text());
    Ok((report, art))
}

pub struct RunOutcome {
    pub artifacts: Artifacts,
    pub verified: bool,
}

/// Occupations, clustering, simulation, estimation, power and verification.
pub fn run_all(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let catalog = load_catalog(cfg)?;
    let truth: Option<Vec<usize>> = catalog
        .info()
        .iter()
        .map(|i| i.cluster.map(usize::from))
        .collect();
    let clusters = cluster_stage(cfg, catalog.table(), truth)?;
    let catalog = catalog.with_clusters(&clusters.labels)?;
    let sim = simulate_stage(cfg, &catalog)?;
    let mut art = Artifacts::default();
    art.extend(estimate_stage(cfg, &sim.dataset, Some(&clusters.profile_text))?);
    art.extend(clusters.artifacts);
    art.extend(sim.artifacts);
    let (power, p_art) = power_stage(cfg)?;
    art.extend(p_art);
    let (verify, v_art) = verify_stage(cfg)?;
    art.extend(v_art);
    // the output location is not part of the run, so artifacts do not depend on it
    let recorded = RunConfig {
        output: None,
        ..cfg.clone()
    };
    art.insert_json("config.json", &recorded)?;
    art.insert_text("summary.txt", summary(cfg, &sim.report, &power, &verify, &art));
    Ok(RunOutcome {
        artifacts: art,
        verified: verify.passed,
    })
}

fn summary(cfg: &RunConfig, dgp: &DgpReport, power: &PowerReport, verify: &VerifyReport, art: &Artifacts) -> String {
    let mut s = format!(
        "seed {}\nads {} x {} applications, dgp `{}`\n",
        cfg.master_seed, cfg.design.n_ads, cfg.design.k, dgp.dgp
    );
    if let Some(icc) = dgp.expected_icc {
        s.push_str(&format!("expected callback ICC {icc:.4}, clamp rate {:.5}\n", dgp.clamp_rate));
    }
    for w in &dgp.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    s.push_str(&format!(
        "power ({}): {:.4} (MC SE {:.4}) over {} replications\n",
        power.scenario, power.mc_power, power.mc_se, power.replications
    ));
    let failed: Vec<&str> = verify
        .properties
        .iter()
        .filter(|p| !p.passed)
        .map(|p| p.name.as_str())
        .collect();
    if failed.is_empty() {
        s.push_str(&format!("verify: all {} properties pass\n", verify.properties.len()));
    } else {
        s.push_str(&format!("verify: FAILED {}\n", failed.join(", ")));
    }
    s.push_str("\nartifacts:\n");
    for p in art.paths() {
        s.push_str(&format!("  {p}\n"));
    }
    s
}

/// Concatenate the text tables found in an output directory.
pub fn report_from_dir(dir: &Path) -> Result<String> {
    let mut names: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "txt") && p.file_name().is_some_and(|n| n != "report.txt"))
        .collect();
    if names.is_empty() {
        return Err(Error::Precondition(format!("no text reports in {}", dir.display())));
    }
    names.sort();
    let mut out = String::new();
    for p in names {
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        out.push_str(&format!("==== {name} ====\n"));
        out.push_str(&fs::read_to_string(&p)?);
        out.push('\n');
    }
    Ok(out)
}
