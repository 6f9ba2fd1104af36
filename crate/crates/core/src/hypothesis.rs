//! ASR hypotheses, labeled samples and the line-based dataset format.
//!
//! A dataset file holds one hypothesis per line:
//!
//! ```text
//! rank|word/conf word/conf ...|gold_name
//! ```
//!
//! Lines of one sample are consecutive with ranks `1, 2, ...`; a line with
//! rank 1 starts a new sample.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AsrToken {
    pub text: String,
    pub confidence: f64,
}

impl AsrToken {
    pub fn new(text: impl Into<String>, confidence: f64) -> Self {
        Self {
            text: text.into(),
            confidence,
        }
    }

    /// True for a single `a-z` character, i.e. a spelled letter.
    pub fn is_letter(&self) -> bool {
        let mut chars = self.text.chars();
        matches!((chars.next(), chars.next()), (Some(c), None) if c.is_ascii_lowercase())
    }

    pub fn is_word(&self) -> bool {
        self.text.chars().count() > 1
    }
}

impl FromStr for AsrToken {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (text, conf) = s
            .rsplit_once('/')
            .ok_or_else(|| format!("token {s:?} lacks a /confidence suffix"))?;
        if text.is_empty() {
            return Err(format!("empty token text in {s:?}"));
        }
        let confidence: f64 = conf
            .parse()
            .map_err(|_| format!("bad confidence {conf:?} in {s:?}"))?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(format!("confidence {confidence} outside [0,1]"));
        }
        Ok(AsrToken::new(text.to_lowercase(), confidence))
    }
}

impl fmt::Display for AsrToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{:.2}", self.text, self.confidence)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsrHypothesis {
    pub tokens: Vec<AsrToken>,
    /// 1-based position in the N-best list.
    pub rank: usize,
}

impl AsrHypothesis {
    pub fn new(rank: usize, tokens: Vec<AsrToken>) -> Self {
        debug_assert!(rank >= 1);
        Self { tokens, rank }
    }

    /// Parses `word/conf word/conf ...`.
    pub fn parse_tokens(rank: usize, s: &str) -> std::result::Result<Self, String> {
        let tokens = s
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<Vec<AsrToken>, _>>()?;
        Ok(Self::new(rank, tokens))
    }

    /// Builds a hypothesis from plain words that all share one confidence.
    pub fn from_words(rank: usize, text: &str, confidence: f64) -> Self {
        let tokens = text
            .split_whitespace()
            .map(|w| AsrToken::new(w.to_lowercase(), confidence))
            .collect();
        Self::new(rank, tokens)
    }

    /// The words joined by single spaces, confidences dropped.
    pub fn text(&self) -> String {
        let words: Vec<&str> = self.tokens.iter().map(|t| t.text.as_str()).collect();
        words.join(" ")
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Baseline,
    BaselineEditDist,
    Seq2Seq,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Baseline => "baseline",
            Source::BaselineEditDist => "baseline-editdist",
            Source::Seq2Seq => "seq2seq",
        }
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "baseline" => Ok(Source::Baseline),
            "baseline-editdist" => Ok(Source::BaselineEditDist),
            "seq2seq" => Ok(Source::Seq2Seq),
            other => Err(format!("unknown source {other:?}")),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An extracted name with its confidence.
///
/// Baseline confidences live in `[0, 1]`; seq2seq confidences are
/// log-probabilities and therefore `<= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub name: String,
    pub confidence: f64,
    pub source: Source,
}

impl Prediction {
    pub fn new(name: impl Into<String>, confidence: f64, source: Source) -> Self {
        Self {
            name: name.into(),
            confidence,
            source,
        }
    }
}

/// Returns true if `name` matches `[a-z'-]+`.
pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_lowercase() || c == '\'' || c == '-')
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub nbest: Vec<AsrHypothesis>,
    pub gold: String,
}

impl LabeledSample {
    pub fn best(&self) -> &AsrHypothesis {
        &self.nbest[0]
    }

    pub fn write_lines<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for hyp in &self.nbest {
            write!(out, "{}|", hyp.rank)?;
            for (i, tok) in hyp.tokens.iter().enumerate() {
                if i > 0 {
                    out.write_all(b" ")?;
                }
                write!(out, "{tok}")?;
            }
            writeln!(out, "|{}", self.gold)?;
        }
        Ok(())
    }
}

/// Serializes samples to the dataset line format.
pub fn format_dataset(samples: &[LabeledSample]) -> String {
    let mut buf = Vec::new();
    for s in samples {
        s.write_lines(&mut buf).expect("writing to a Vec cannot fail");
    }
    String::from_utf8(buf).expect("dataset text is UTF-8")
}

pub fn write_dataset(path: &Path, samples: &[LabeledSample]) -> Result<()> {
    std::fs::write(path, format_dataset(samples)).map_err(|e| Error::io(path, e))
}

/// Parses the dataset line format. Blank lines are skipped.
pub fn parse_dataset<R: BufRead>(reader: R) -> Result<Vec<LabeledSample>> {
    let mut samples: Vec<LabeledSample> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, '|');
        let (rank, body, gold) = match (fields.next(), fields.next(), fields.next()) {
            (Some(r), Some(b), Some(g)) => (r, b, g),
            _ => return Err(Error::parse(lineno, "expected rank|tokens|gold")),
        };
        let rank: usize = rank
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad rank {rank:?}")))?;
        let hyp = AsrHypothesis::parse_tokens(rank, body).map_err(|m| Error::parse(lineno, m))?;
        let gold = gold.trim().to_lowercase();
        match rank {
            0 => return Err(Error::parse(lineno, "rank must be >= 1")),
            1 => samples.push(LabeledSample {
                nbest: vec![hyp],
                gold,
            }),
            _ => {
                let last = samples
                    .last_mut()
                    .ok_or_else(|| Error::parse(lineno, "rank > 1 without a preceding rank 1"))?;
                if last.nbest.len() + 1 != rank {
                    return Err(Error::parse(lineno, format!("rank {rank} out of sequence")));
                }
                if last.gold != gold {
                    return Err(Error::parse(lineno, "gold differs within one sample"));
                }
                last.nbest.push(hyp);
            }
        }
    }
    Ok(samples)
}

pub fn read_dataset(path: &Path) -> Result<Vec<LabeledSample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(std::io::BufReader::new(file))
}
