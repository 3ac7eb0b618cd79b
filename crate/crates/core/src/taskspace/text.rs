//! Task-language rates in ad text from user-supplied phrase dictionaries.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictionarySizes {
    pub analytical: usize,
    pub interpersonal: usize,
    pub routine: usize,
}

impl DictionarySizes {
    pub const BASELINE: DictionarySizes = DictionarySizes {
        analytical: 29,
        interpersonal: 14,
        routine: 34,
    };
    pub const EXPANDED: DictionarySizes = DictionarySizes {
        analytical: 48,
        interpersonal: 33,
        routine: 76,
    };

    pub fn total(&self) -> usize {
        self.analytical + self.interpersonal + self.routine
    }
}

/// Three phrase lists, each stored as lowercase token sequences without duplicates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TextDictionary {
    analytical: Vec<Vec<String>>,
    interpersonal: Vec<Vec<String>>,
    routine: Vec<Vec<String>>,
}

fn normalise_token(raw: &str) -> String {
    raw.trim_matches(|c: char| c.is_ascii_punctuation() && c != '+' && c != '#')
        .to_lowercase()
}

fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(normalise_token)
        .filter(|t| !t.is_empty())
        .collect()
}

fn phrase_list<S: AsRef<str>>(phrases: &[S]) -> Vec<Vec<String>> {
    let set: BTreeSet<Vec<String>> = phrases
        .iter()
        .map(|p| tokenize(p.as_ref()))
        .filter(|t| !t.is_empty())
        .collect();
    set.into_iter().collect()
}

impl TextDictionary {
    pub fn new<S: AsRef<str>>(analytical: &[S], interpersonal: &[S], routine: &[S]) -> Self {
        TextDictionary {
            analytical: phrase_list(analytical),
            interpersonal: phrase_list(interpersonal),
            routine: phrase_list(routine),
        }
    }

    /// Load three plain-text files, one phrase per line; blank lines and `#` comments are skipped.
    pub fn from_files(analytical: &Path, interpersonal: &Path, routine: &Path) -> Result<Self> {
        let read = |p: &Path| -> Result<Vec<String>> {
            Ok(std::fs::read_to_string(p)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from)
                .collect())
        };
        Ok(Self::new(&read(analytical)?, &read(interpersonal)?, &read(routine)?))
    }

    pub fn sizes(&self) -> DictionarySizes {
        DictionarySizes {
            analytical: self.analytical.len(),
            interpersonal: self.interpersonal.len(),
            routine: self.routine.len(),
        }
    }

    pub fn validate_sizes(&self, expected: DictionarySizes) -> Result<()> {
        let got = self.sizes();
        if got != expected {
            return Err(Error::Domain(format!(
                "dictionary has {}+{}+{}={} phrases, expected {}+{}+{}={}",
                got.analytical,
                got.interpersonal,
                got.routine,
                got.total(),
                expected.analytical,
                expected.interpersonal,
                expected.routine,
                expected.total()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextRates {
    /// analytical plus interpersonal hits per 100 words
    pub b_text: f64,
    /// routine-cognitive hits per 100 words
    pub p_text: f64,
    pub words: usize,
    pub empty: bool,
}

fn count_hits(tokens: &[String], phrases: &[Vec<String>]) -> usize {
    phrases
        .iter()
        .map(|ph| {
            if ph.len() > tokens.len() {
                0
            } else {
                tokens.windows(ph.len()).filter(|w| *w == ph.as_slice()).count()
            }
        })
        .sum()
}

pub fn text_task_rates(ad_text: &str, dictionary: &TextDictionary) -> TextRates {
    let tokens = tokenize(ad_text);
    if tokens.is_empty() {
        return TextRates {
            b_text: 0.0,
            p_text: 0.0,
            words: 0,
            empty: true,
        };
    }
    let words = tokens.len() as f64;
    let b_hits = count_hits(&tokens, &dictionary.analytical) + count_hits(&tokens, &dictionary.interpersonal);
    let p_hits = count_hits(&tokens, &dictionary.routine);
    TextRates {
        b_text: 100.0 * b_hits as f64 / words,
        p_text: 100.0 * p_hits as f64 / words,
        words: tokens.len(),
        empty: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filler(n: usize) -> String {
        vec!["word"; n].join(" ")
    }

    #[test]
    fn arithmetic_example() {
        let dict = TextDictionary::new(&["data analysis", "research"], &["teamwork"], &["data entry"]);
        let text = format!("Strong Data Analysis and research. Data entry {}", filler(43));
        let rates = text_task_rates(&text, &dict);
        assert_eq!(rates.words, 50);
        assert_eq!(rates.b_text, 4.0);
        assert_eq!(rates.p_text, 2.0);
    }

    #[test]
    fn empty_dictionary_and_text() {
        let rates = text_task_rates("anything at all", &TextDictionary::default());
        assert_eq!((rates.b_text, rates.p_text), (0.0, 0.0));
        let rates = text_task_rates("   ", &TextDictionary::new(&["x"], &["y"], &["z"]));
        assert!(rates.empty);
        assert_eq!(rates.b_text, 0.0);
    }

    #[test]
    fn dedup_and_lowercase() {
        let dict = TextDictionary::new(&["Excel", "excel", "  excel "], &[], &[]);
        assert_eq!(dict.sizes().analytical, 1);
    }

    #[test]
    fn size_validation() {
        let mk = |n: usize, tag: &str| (0..n).map(|i| format!("{tag} {i}")).collect::<Vec<_>>();
        let dict = TextDictionary::new(&mk(29, "a"), &mk(14, "p"), &mk(34, "r"));
        assert!(dict.validate_sizes(DictionarySizes::BASELINE).is_ok());
        assert_eq!(DictionarySizes::BASELINE.total(), 77);
        assert_eq!(DictionarySizes::EXPANDED.total(), 157);
        assert!(dict.validate_sizes(DictionarySizes::EXPANDED).is_err());
    }
}
