//! Demographic groups signalled by résumé names.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Race/ethnicity-gender group. White men are the reference category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    WM,
    WW,
    BW,
    HW,
    BM,
    HM,
}

impl Group {
    pub const ALL: [Group; 6] = [Group::WM, Group::WW, Group::BW, Group::HW, Group::BM, Group::HM];

    /// Non-reference groups in reporting order.
    pub const MINORITIES: [Group; 5] = [Group::WW, Group::BW, Group::HW, Group::BM, Group::HM];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Group> {
        Group::ALL.get(i).copied()
    }

    pub fn code(self) -> &'static str {
        match self {
            Group::WM => "WM",
            Group::WW => "WW",
            Group::BW => "BW",
            Group::HW => "HW",
            Group::BM => "BM",
            Group::HM => "HM",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Group::WM => "White Men",
            Group::WW => "White Women",
            Group::BW => "Black Women",
            Group::HW => "Hispanic Women",
            Group::BM => "Black Men",
            Group::HM => "Hispanic Men",
        }
    }

    /// Anyone other than the reference group.
    pub fn is_minority(self) -> bool {
        self != Group::WM
    }

    pub fn is_black(self) -> bool {
        matches!(self, Group::BW | Group::BM)
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Group::ALL
            .into_iter()
            .find(|g| g.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown group `{s}`")))
    }
}
