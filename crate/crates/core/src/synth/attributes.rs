//! Randomised résumé attributes.

use serde::{Deserialize, Serialize};

use crate::group::Group;

macro_rules! coded_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $code:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn code(self) -> &'static str {
                match self {
                    $($name::$variant => $code),+
                }
            }

            pub fn from_code(s: &str) -> Option<Self> {
                match s {
                    $($code => Some($name::$variant),)+
                    _ => None,
                }
            }

            pub fn index(self) -> usize {
                self as usize
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.code())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                $name::from_code(&s).ok_or_else(|| {
                    let known: Vec<&str> = $name::ALL.iter().map(|v| v.code()).collect();
                    serde::de::Error::custom(format!("unknown {} `{}` (expected one of {})", stringify!($name), s, known.join(", ")))
                })
            }
        }
    };
}

coded_enum!(Minor {
    None => "none",
    History => "history",
    Math => "math",
});

coded_enum!(
    /// Listed GPA; `None` means no GPA on the résumé.
    Gpa {
        None => "none",
        G30 => "3.0",
        G32 => "3.2",
        G34 => "3.4",
        G36 => "3.6",
        G38 => "3.8",
        G40 => "4.0",
    }
);

coded_enum!(Internship {
    None => "none",
    Analytical => "analytical",
    Interpersonal => "interpersonal",
});

coded_enum!(Computer {
    None => "none",
    Basic => "basic",
    Data => "data",
    Programming => "programming",
    DataProgramming => "data+programming",
});

coded_enum!(
    /// Major occupation group of an ad's occupation.
    MajorGroup {
        Management => "management",
        Business => "business",
        Sales => "sales",
        Office => "office",
        Other => "other",
    }
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResumeAttributes {
    pub group: Group,
    /// which of the group's two names
    pub name_id: u8,
    /// 1-based
    pub university_id: u8,
    /// 0-based
    pub major: u8,
    pub minor: Minor,
    pub gpa: Gpa,
    pub internship: Internship,
    pub computer: Computer,
    pub volunteer: bool,
    pub spanish: bool,
    pub study_abroad: bool,
    pub college_job: bool,
}

coded_enum!(
    /// Binary credentials used in the attenuation analysis.
    Credential {
        SocialIntern => "social_intern",
        ProgData => "prog_data",
        StudyAbroad => "study_abroad",
        GpaListed => "gpa_listed",
        QuantIntern => "quant_intern",
        MathMinor => "math_minor",
    }
);

impl Credential {
    pub const POSITIVE: [Credential; 3] = [Credential::SocialIntern, Credential::ProgData, Credential::StudyAbroad];
    pub const PLACEBO: [Credential; 3] = [Credential::GpaListed, Credential::QuantIntern, Credential::MathMinor];

    pub fn holds(self, r: &ResumeAttributes) -> bool {
        match self {
            Credential::SocialIntern => r.internship == Internship::Interpersonal,
            Credential::ProgData => r.computer == Computer::DataProgramming,
            Credential::StudyAbroad => r.study_abroad,
            Credential::GpaListed => r.gpa != Gpa::None,
            Credential::QuantIntern => r.internship == Internship::Analytical,
            Credential::MathMinor => r.minor == Minor::Math,
        }
    }
}
