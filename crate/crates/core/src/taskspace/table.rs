use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six task dimensions measured per occupation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    A,
    P,
    R,
    M,
    Phy,
    K,
}

impl Task {
    pub const ALL: [Task; 6] = [Task::A, Task::P, Task::R, Task::M, Task::Phy, Task::K];

    pub fn name(self) -> &'static str {
        match self {
            Task::A => "analytical",
            Task::P => "interpersonal",
            Task::R => "routine_cognitive",
            Task::M => "routine_manual",
            Task::Phy => "physical",
            Task::K => "contact",
        }
    }
}

/// One occupation's raw task intensities and employment weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationRow {
    pub occupation_id: u32,
    pub a: f64,
    pub p: f64,
    pub r: f64,
    pub m: f64,
    pub phy: f64,
    pub k: f64,
    pub weight: f64,
}

impl OccupationRow {
    pub fn get(&self, task: Task) -> f64 {
        match task {
            Task::A => self.a,
            Task::P => self.p,
            Task::R => self.r,
            Task::M => self.m,
            Task::Phy => self.phy,
            Task::K => self.k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OccupationTaskTable {
    rows: Vec<OccupationRow>,
}

impl OccupationTaskTable {
    pub fn new(rows: Vec<OccupationRow>) -> Result<Self> {
        let table = OccupationTaskTable { rows };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (i, row) in self.rows.iter().enumerate() {
            if !seen.insert(row.occupation_id) {
                return Err(Error::Parse(format!("duplicate occupation_id {}", row.occupation_id)));
            }
            if !(row.weight.is_finite() && row.weight >= 0.0) {
                return Err(Error::Domain(format!("row {i}: weight must be finite and >= 0, got {}", row.weight)));
            }
            for task in Task::ALL {
                if !row.get(task).is_finite() {
                    return Err(Error::Domain(format!("row {i}: {} is not finite", task.name())));
                }
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> &[OccupationRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, task: Task) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(task)).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.weight).collect()
    }

    pub fn position(&self, occupation_id: u32) -> Option<usize> {
        self.rows.iter().position(|r| r.occupation_id == occupation_id)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<OccupationRow>, _>>()?;
        Self::new(rows)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for row in &self.rows {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}
