use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::NoiseConfig;
use crate::error::{Error, Result};

/// How the caller combines saying and spelling the name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pattern {
    /// `d a r e n`
    SpellOnly,
    /// `daren d a r e n`
    NameThenSpell,
    /// `d a r e n daren`
    SpellThenName,
    /// `t as in tango i as in india m as in mike`
    NatoSpell,
    /// `tim t as in tango i m as in mike`: each letter NATO-style with
    /// probability `nato_prob`
    NameNatoMix,
}

impl Pattern {
    pub const ALL: [Pattern; 5] = [
        Pattern::SpellOnly,
        Pattern::NameThenSpell,
        Pattern::SpellThenName,
        Pattern::NatoSpell,
        Pattern::NameNatoMix,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::SpellOnly => "spell_only",
            Pattern::NameThenSpell => "name_then_spell",
            Pattern::SpellThenName => "spell_then_name",
            Pattern::NatoSpell => "nato_spell",
            Pattern::NameNatoMix => "name_nato_mix",
        }
    }

    pub fn index(self) -> usize {
        Pattern::ALL.iter().position(|&p| p == self).unwrap()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Pattern::ALL
            .into_iter()
            .find(|p| p.as_str() == norm)
            .ok_or_else(|| Error::Config(format!("unknown pattern `{s}`")))
    }
}

const NATO: [&str; 26] = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliett", "kilo", "lima",
    "mike", "november", "oscar", "papa", "quebec", "romeo", "sierra", "tango", "uniform", "victor", "whiskey",
    "xray", "yankee", "zulu",
];

/// Everyday words callers use instead of the military alphabet.
const COMMON: [(char, &str); 6] = [
    ('b', "boy"),
    ('c', "cat"),
    ('d', "dog"),
    ('m', "man"),
    ('r', "robert"),
    ('v', "victor"),
];

/// The military-alphabet word for a letter; `None` outside a–z.
pub fn nato_word(c: char) -> Option<&'static str> {
    c.is_ascii_lowercase().then(|| NATO[(c as u8 - b'a') as usize])
}

/// An everyday alternative for a letter, if there is one.
pub fn common_word(c: char) -> Option<&'static str> {
    COMMON.iter().find(|(l, _)| *l == c).map(|(_, w)| *w)
}

/// Words spoken for one letter: `x` alone, or `x as in WORD`. With
/// `nato_collapse_prob` the word degenerates to the letter itself
/// ("i as in i"); with `nato_variant_prob` an everyday word replaces the
/// military one where the table has one.
fn letter_tokens<R: Rng>(c: char, nato: bool, rng: &mut R, cfg: &NoiseConfig, out: &mut Vec<String>) {
    out.push(c.to_string());
    // apostrophes and hyphens are spelled plainly
    let Some(word) = nato.then(|| nato_word(c)).flatten() else {
        return;
    };
    let word = if rng.gen_bool(cfg.nato_collapse_prob) {
        c.to_string()
    } else {
        match common_word(c) {
            Some(alt) if rng.gen_bool(cfg.nato_variant_prob) => alt.to_string(),
            _ => word.to_string(),
        }
    };
    out.extend(["as".to_string(), "in".to_string(), word]);
}

fn spell<R: Rng>(name: &str, nato_prob: f64, rng: &mut R, cfg: &NoiseConfig, out: &mut Vec<String>) {
    for c in name.chars() {
        let nato = rng.gen_bool(nato_prob);
        letter_tokens(c, nato, rng, cfg, out);
    }
}

/// The words a caller says for `name` under `pattern`, before any
/// recognition noise.
pub fn render_utterance<R: Rng>(name: &str, pattern: Pattern, rng: &mut R, cfg: &NoiseConfig) -> Vec<String> {
    let mut out = Vec::new();
    match pattern {
        Pattern::SpellOnly => spell(name, 0.0, rng, cfg, &mut out),
        Pattern::NameThenSpell => {
            out.push(name.to_string());
            spell(name, 0.0, rng, cfg, &mut out);
        }
        Pattern::SpellThenName => {
            spell(name, 0.0, rng, cfg, &mut out);
            out.push(name.to_string());
        }
        Pattern::NatoSpell => spell(name, 1.0, rng, cfg, &mut out),
        Pattern::NameNatoMix => {
            out.push(name.to_string());
            spell(name, cfg.nato_prob, rng, cfg, &mut out);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn render(name: &str, p: Pattern) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        render_utterance(name, p, &mut rng, &NoiseConfig::zero())
    }

    #[test]
    fn plain_patterns() {
        assert_eq!(
            render("jennifer", Pattern::NameThenSpell),
            ["jennifer", "j", "e", "n", "n", "i", "f", "e", "r"]
        );
        assert_eq!(render("daren", Pattern::SpellThenName), ["d", "a", "r", "e", "n", "daren"]);
        assert_eq!(render("daren", Pattern::NameThenSpell), ["daren", "d", "a", "r", "e", "n"]);
        assert_eq!(render("ann", Pattern::SpellOnly), ["a", "n", "n"]);
    }

    #[test]
    fn nato_spell_uses_table() {
        assert_eq!(
            render("tim", Pattern::NatoSpell),
            ["t", "as", "in", "tango", "i", "as", "in", "india", "m", "as", "in", "mike"]
        );
    }

    #[test]
    fn nato_table_is_complete() {
        for c in 'a'..='z' {
            let w = nato_word(c).unwrap();
            assert!(w.starts_with(c), "{c} {w}");
        }
        for (c, w) in COMMON {
            assert!(w.starts_with(c));
        }
        assert_eq!(nato_word('\''), None);
    }

    #[test]
    fn collapse_and_variants() {
        let cfg = NoiseConfig {
            nato_collapse_prob: 1.0,
            ..NoiseConfig::zero()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(render_utterance("i", Pattern::NatoSpell, &mut rng, &cfg), ["i", "as", "in", "i"]);
        let cfg = NoiseConfig {
            nato_variant_prob: 1.0,
            ..NoiseConfig::zero()
        };
        assert_eq!(
            render_utterance("bo", Pattern::NatoSpell, &mut rng, &cfg),
            ["b", "as", "in", "boy", "o", "as", "in", "oscar"]
        );
    }

    #[test]
    fn mix_without_nato_is_name_then_spell() {
        assert_eq!(render("vera", Pattern::NameNatoMix), render("vera", Pattern::NameThenSpell));
        let cfg = NoiseConfig {
            nato_prob: 1.0,
            ..NoiseConfig::zero()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = render_utterance("vera", Pattern::NameNatoMix, &mut rng, &cfg);
        assert_eq!(t[0], "vera");
        assert_eq!(t[1..], render("vera", Pattern::NatoSpell)[..]);
    }

    #[test]
    fn pattern_names_roundtrip() {
        for p in Pattern::ALL {
            assert_eq!(p.as_str().parse::<Pattern>().unwrap(), p);
        }
        assert!(matches!("SPELL-ONLY".parse::<Pattern>(), Ok(Pattern::SpellOnly)));
        assert!("shout".parse::<Pattern>().is_err());
    }

    #[test]
    fn punctuation_spelled_plainly() {
        assert_eq!(render("o'neil", Pattern::SpellOnly), ["o", "'", "n", "e", "i", "l"]);
    }
}
