//! Flat `key = value` config files.
//!
//! One setting per line; `#` starts a comment; blank lines are skipped.
//! Unknown keys are errors.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::seq2seq::{ModelConfig, TrainConfig};

/// A settings struct that can be overridden key by key.
pub trait KeyValue {
    /// Sets one key; the error message is reported with the line number.
    fn set_key(&mut self, key: &str, value: &str) -> std::result::Result<(), String>;
}

pub fn parse_value<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse `{}`", value.trim()))
}

/// `(line number, key, value)` triples in file order.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn apply_text<T: KeyValue>(target: &mut T, text: &str) -> Result<()> {
    for (line, k, v) in parse_pairs(text)? {
        target
            .set_key(&k, &v)
            .map_err(|msg| Error::Config(format!("line {line}: {k}: {msg}")))?;
    }
    Ok(())
}

pub fn apply_file<T: KeyValue>(target: &mut T, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    apply_text(target, &text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

impl KeyValue for ModelConfig {
    fn set_key(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "n_layers" => self.n_layers = parse_value(value)?,
            "n_heads" => self.n_heads = parse_value(value)?,
            "d_model" => self.d_model = parse_value(value)?,
            "d_ff" => self.d_ff = parse_value(value)?,
            "dropout" => self.dropout = parse_value(value)?,
            "max_src_len" => self.max_src_len = parse_value(value)?,
            "max_tgt_len" => self.max_tgt_len = parse_value(value)?,
            "vocab_size" => self.vocab_size = parse_value(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}

impl KeyValue for TrainConfig {
    fn set_key(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "batch_size" => self.batch_size = parse_value(value)?,
            "learning_rate" => self.learning_rate = parse_value(value)?,
            "beta1" => self.beta1 = parse_value(value)?,
            "beta2" => self.beta2 = parse_value(value)?,
            "epsilon" => self.epsilon = parse_value(value)?,
            "epochs" => self.epochs = parse_value(value)?,
            "seed" => self.seed = parse_value(value)?,
            "patience" => self.patience = parse_value(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}
