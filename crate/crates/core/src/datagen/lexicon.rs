use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hypothesis::is_valid_name;

const SEED_NAMES: &str = include_str!("../../data/names.txt");

/// Names to draw samples from, optionally frequency-weighted.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub names: Vec<String>,
    pub weights: Option<Vec<f64>>,
}

impl Lexicon {
    /// The 200-name lexicon bundled with the crate.
    pub fn seed() -> Self {
        Self::parse(SEED_NAMES).expect("bundled lexicon is valid")
    }

    /// One name per line with an optional `<TAB>weight`. Names are
    /// lowercased; repeats keep their first occurrence.
    pub fn parse(text: &str) -> Result<Self> {
        let mut names = Vec::new();
        let mut weights = Vec::new();
        let mut any_weight = false;
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (name, weight) = match line.split_once('\t') {
                Some((n, w)) => {
                    let w: f64 = w
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(i + 1, format!("malformed weight `{}`", w.trim())))?;
                    if !(w.is_finite() && w >= 0.0) {
                        return Err(Error::parse(i + 1, format!("weight must be finite and >= 0, got {w}")));
                    }
                    any_weight = true;
                    (n, w)
                }
                None => (line, 1.0),
            };
            let name = name.trim().to_lowercase();
            if !is_valid_name(&name) {
                return Err(Error::parse(i + 1, format!("invalid name `{name}`")));
            }
            if seen.insert(name.clone()) {
                names.push(name);
                weights.push(weight);
            }
        }
        if names.is_empty() {
            return Err(Error::Contract("empty lexicon".into()));
        }
        if any_weight && weights.iter().all(|&w| w == 0.0) {
            return Err(Error::Contract("lexicon weights are all zero".into()));
        }
        Ok(Self {
            names,
            weights: any_weight.then_some(weights),
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

pub fn load_lexicon(path: &Path) -> Result<Lexicon> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Lexicon::parse(&text)
}
