use rand::seq::SliceRandom;
use rand::Rng;

use super::render::Pattern;
use crate::config::{parse_value, KeyValue};
use crate::error::{Error, Result};
use crate::hypothesis::{AsrHypothesis, AsrToken, LabeledSample};

/// Parameters of the synthetic recognition channel. Probabilities apply
/// independently per token (letters, name word) or per sample (fillers,
/// distractor, label error).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    /// A spelled letter becomes another letter of its confusion set.
    pub letter_sub_prob: f64,
    pub confusion_sets: Vec<Vec<char>>,
    /// Sample starts with one or two of "um"/"uh".
    pub filler_prob: f64,
    /// A letter is said NATO-style (mixed pattern only; the pure NATO
    /// pattern always uses it).
    pub nato_prob: f64,
    /// A distractor surname with its own spelling follows "last name".
    pub fullname_prob: f64,
    /// The spoken name word is missing from the hypothesis.
    pub name_drop_prob: f64,
    /// The spoken name word is misrecognized (inner swap or substitution).
    pub name_corrupt_prob: f64,
    /// An everyday word ("boy", "dog") replaces the NATO word.
    pub nato_variant_prob: f64,
    /// The NATO word collapses to the letter itself ("i as in i").
    pub nato_collapse_prob: f64,
    /// The gold label is swapped for another lexicon name.
    pub label_error_prob: f64,
    pub conf_clean: f64,
    pub conf_noisy: f64,
    /// Half-width of the uniform confidence jitter.
    pub jitter: f64,
    /// Hypotheses per sample, 1–3.
    pub nbest: usize,
    /// Relative pattern frequencies, indexed like [`Pattern::ALL`].
    pub pattern_weights: [f64; 5],
}

pub fn default_confusion_sets() -> Vec<Vec<char>> {
    ["sf", "vb", "mn", "ei", "dt", "pb", "ae"]
        .iter()
        .map(|s| s.chars().collect())
        .collect()
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            letter_sub_prob: 0.1,
            confusion_sets: default_confusion_sets(),
            filler_prob: 0.1,
            nato_prob: 0.3,
            fullname_prob: 0.1,
            name_drop_prob: 0.05,
            name_corrupt_prob: 0.2,
            nato_variant_prob: 0.3,
            nato_collapse_prob: 0.1,
            label_error_prob: 0.0,
            conf_clean: 0.9,
            conf_noisy: 0.5,
            jitter: 0.1,
            nbest: 3,
            pattern_weights: [1.0; 5],
        }
    }
}

impl NoiseConfig {
    /// The identity channel: every probability and the jitter are zero and
    /// a single hypothesis is emitted.
    pub fn zero() -> Self {
        Self {
            letter_sub_prob: 0.0,
            filler_prob: 0.0,
            nato_prob: 0.0,
            fullname_prob: 0.0,
            name_drop_prob: 0.0,
            name_corrupt_prob: 0.0,
            nato_variant_prob: 0.0,
            nato_collapse_prob: 0.0,
            label_error_prob: 0.0,
            jitter: 0.0,
            nbest: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("letter_sub_prob", self.letter_sub_prob),
            ("filler_prob", self.filler_prob),
            ("nato_prob", self.nato_prob),
            ("fullname_prob", self.fullname_prob),
            ("name_drop_prob", self.name_drop_prob),
            ("name_corrupt_prob", self.name_corrupt_prob),
            ("nato_variant_prob", self.nato_variant_prob),
            ("nato_collapse_prob", self.nato_collapse_prob),
            ("label_error_prob", self.label_error_prob),
        ];
        for (k, v) in probs {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{k} must lie in [0,1], got {v}")));
            }
        }
        for (k, v) in [("conf_clean", self.conf_clean), ("conf_noisy", self.conf_noisy)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{k} must lie in (0,1], got {v}")));
            }
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::Config(format!("jitter must be >= 0, got {}", self.jitter)));
        }
        if !(1..=3).contains(&self.nbest) {
            return Err(Error::Config(format!("nbest must be 1, 2 or 3, got {}", self.nbest)));
        }
        for set in &self.confusion_sets {
            if set.len() < 2 || set.iter().any(|c| !c.is_ascii_lowercase()) {
                return Err(Error::Config(format!(
                    "confusion set `{}` needs at least two letters a-z",
                    set.iter().collect::<String>()
                )));
            }
        }
        if self.pattern_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || self.pattern_weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config("pattern weights must be >= 0 with a positive sum".into()));
        }
        Ok(())
    }

    pub fn enabled_patterns(&self) -> Vec<Pattern> {
        Pattern::ALL
            .into_iter()
            .filter(|p| self.pattern_weights[p.index()] > 0.0)
            .collect()
    }

    fn confusables(&self, c: char) -> Vec<char> {
        let mut out: Vec<char> = self
            .confusion_sets
            .iter()
            .filter(|s| s.contains(&c))
            .flatten()
            .copied()
            .filter(|&o| o != c)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        crate::config::apply_text(&mut cfg, text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl KeyValue for NoiseConfig {
    fn set_key(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "letter_sub_prob" => self.letter_sub_prob = parse_value(value)?,
            "filler_prob" => self.filler_prob = parse_value(value)?,
            "nato_prob" => self.nato_prob = parse_value(value)?,
            "fullname_prob" => self.fullname_prob = parse_value(value)?,
            "name_drop_prob" => self.name_drop_prob = parse_value(value)?,
            "name_corrupt_prob" => self.name_corrupt_prob = parse_value(value)?,
            "nato_variant_prob" => self.nato_variant_prob = parse_value(value)?,
            "nato_collapse_prob" => self.nato_collapse_prob = parse_value(value)?,
            "label_error_prob" => self.label_error_prob = parse_value(value)?,
            "conf_clean" => self.conf_clean = parse_value(value)?,
            "conf_noisy" => self.conf_noisy = parse_value(value)?,
            "jitter" => self.jitter = parse_value(value)?,
            "nbest" => self.nbest = parse_value(value)?,
            // space-separated groups, e.g. `sf vb mn`
            "confusion_sets" => self.confusion_sets = value.split_whitespace().map(|g| g.chars().collect()).collect(),
            // `name:weight` list; unlisted patterns get weight 0
            "pattern_weights" => {
                let mut w = [0.0; 5];
                for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let (name, weight) = item
                        .split_once(':')
                        .ok_or_else(|| format!("expected `pattern:weight`, got `{item}`"))?;
                    let p: Pattern = name.parse().map_err(|e: Error| e.to_string())?;
                    w[p.index()] = parse_value(weight)?;
                }
                self.pattern_weights = w;
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}

/// Surnames used as distractors after "last name".
const SURNAMES: [&str; 24] = [
    "weber", "rankin", "franks", "miller", "baker", "carter", "fisher", "gordon", "hayes", "keller", "lambert",
    "morgan", "nash", "porter", "reed", "sutton", "turner", "vance", "walsh", "bishop", "dalton", "ferris",
    "madden", "tate",
];

const FILLERS: [&str; 2] = ["um", "uh"];

fn confidence<R: Rng>(mean: f64, jitter: f64, rng: &mut R) -> f64 {
    let x = if jitter > 0.0 {
        mean + rng.gen_range(-jitter..=jitter)
    } else {
        mean
    };
    ((x.clamp(0.01, 1.0) * 100.0).round() / 100.0).clamp(0.01, 1.0)
}

/// Misrecognizes a word: swaps two adjacent inner letters or substitutes
/// one letter, always producing a different string.
fn corrupt_word<R: Rng>(word: &str, cfg: &NoiseConfig, rng: &mut R) -> String {
    let mut chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    if n >= 4 && rng.gen_bool(0.5) {
        let i = rng.gen_range(1..n - 2);
        if chars[i] != chars[i + 1] {
            chars.swap(i, i + 1);
            return chars.into_iter().collect();
        }
    }
    let i = if n >= 3 { rng.gen_range(1..n) } else { rng.gen_range(0..n) };
    let alts = cfg.confusables(chars[i]);
    chars[i] = match alts.choose(rng) {
        Some(&c) => c,
        None => loop {
            let c = rng.gen_range(b'a'..=b'z') as char;
            if c != chars[i] {
                break c;
            }
        },
    };
    chars.into_iter().collect()
}

/// Passes a clean utterance through the recognition channel.
///
/// Fillers and a distractor surname are decided once per sample (they are
/// what the caller said); letter substitutions, name corruption and name
/// deletion are drawn independently for each of the `nbest` hypotheses.
/// The gold label is always `gold`.
pub fn corrupt<R: Rng>(clean: &[String], gold: &str, cfg: &NoiseConfig, rng: &mut R) -> LabeledSample {
    let mut said: Vec<String> = Vec::new();
    if rng.gen_bool(cfg.filler_prob) {
        let k = rng.gen_range(1..=2);
        said.extend((0..k).map(|_| FILLERS.choose(rng).unwrap().to_string()));
    }
    said.extend(clean.iter().cloned());
    if rng.gen_bool(cfg.fullname_prob) {
        let surname = *SURNAMES.choose(rng).unwrap();
        said.extend(["last".to_string(), "name".to_string(), surname.to_string()]);
        said.extend(surname.chars().map(|c| c.to_string()));
    }

    let nbest = (1..=cfg.nbest.max(1))
        .map(|rank| {
            let mut tokens = Vec::with_capacity(said.len());
            for w in &said {
                let is_name = w == gold && gold.chars().count() > 1;
                if is_name && rng.gen_bool(cfg.name_drop_prob) {
                    continue;
                }
                let noisy = if is_name && rng.gen_bool(cfg.name_corrupt_prob) {
                    Some(corrupt_word(w, cfg, rng))
                } else if let Some(c) = single_letter(w) {
                    let alts = cfg.confusables(c);
                    if !alts.is_empty() && rng.gen_bool(cfg.letter_sub_prob) {
                        alts.choose(rng).map(|c| c.to_string())
                    } else {
                        None
                    }
                } else {
                    None
                };
                tokens.push(match noisy {
                    Some(t) => AsrToken::new(t, confidence(cfg.conf_noisy, cfg.jitter, rng)),
                    None => AsrToken::new(w.clone(), confidence(cfg.conf_clean, cfg.jitter, rng)),
                });
            }
            AsrHypothesis::new(rank, tokens)
        })
        .collect();
    LabeledSample {
        nbest,
        gold: gold.to_string(),
    }
}

fn single_letter(w: &str) -> Option<char> {
    let mut it = w.chars();
    match (it.next(), it.next()) {
        (Some(c), None) if c.is_ascii_lowercase() => Some(c),
        _ => None,
    }
}
