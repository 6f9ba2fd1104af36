//! Synthetic say-and-spell samples.
//!
//! A sample is built in two steps: [`render_utterance`] writes what the
//! caller says for a name under one of the [`Pattern`]s, then [`corrupt`]
//! passes it through a parameterized recognition channel that produces
//! 1–3 hypotheses with per-word confidences. The gold label is always the
//! intended name.
//!
//! Generation is single-threaded per seed; to generate in parallel, give
//! each shard its own seed and concatenate.

mod lexicon;
mod noise;
mod render;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use lexicon::{load_lexicon, Lexicon};
pub use noise::{corrupt, default_confusion_sets, NoiseConfig};
pub use render::{common_word, nato_word, render_utterance, Pattern};

use crate::error::{Error, Result};
use crate::hypothesis::LabeledSample;

/// A generated sample with the pattern it was rendered from.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedSample {
    pub pattern: Pattern,
    pub sample: LabeledSample,
}

pub fn generate_tagged(lex: &Lexicon, n: usize, cfg: &NoiseConfig, seed: u64) -> Result<Vec<TaggedSample>> {
    if n == 0 {
        return Err(Error::Contract("n must be >= 1".into()));
    }
    if lex.is_empty() {
        return Err(Error::Contract("empty lexicon".into()));
    }
    cfg.validate()?;
    let patterns = WeightedIndex::new(cfg.pattern_weights).map_err(|e| Error::Config(e.to_string()))?;
    let names = match &lex.weights {
        Some(w) => Some(WeightedIndex::new(w).map_err(|e| Error::Config(e.to_string()))?),
        None => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let pattern = Pattern::ALL[patterns.sample(&mut rng)];
        let idx = match &names {
            Some(d) => d.sample(&mut rng),
            None => rng.gen_range(0..lex.len()),
        };
        let name = &lex.names[idx];
        let clean = render_utterance(name, pattern, &mut rng, cfg);
        let mut sample = corrupt(&clean, name, cfg, &mut rng);
        if lex.len() > 1 && rng.gen_bool(cfg.label_error_prob) {
            let other = (idx + rng.gen_range(1..lex.len())) % lex.len();
            sample.gold = lex.names[other].clone();
        }
        out.push(TaggedSample { pattern, sample });
    }
    Ok(out)
}

/// `n` samples, deterministic in `(lex, n, cfg, seed)`.
pub fn generate_dataset(lex: &Lexicon, n: usize, cfg: &NoiseConfig, seed: u64) -> Result<Vec<LabeledSample>> {
    Ok(generate_tagged(lex, n, cfg, seed)?
        .into_iter()
        .map(|t| t.sample)
        .collect())
}

/// Seeded split by sample; `dev_fraction` of the samples (rounded) go to
/// dev. Both parts keep the input order.
pub fn split_train_dev<T: Clone>(samples: &[T], dev_fraction: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    let n_dev = ((samples.len() as f64) * dev_fraction.clamp(0.0, 1.0)).round() as usize;
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_dev = vec![false; samples.len()];
    for &i in &idx[..n_dev] {
        is_dev[i] = true;
    }
    let (mut train, mut dev) = (Vec::new(), Vec::new());
    for (s, d) in samples.iter().zip(is_dev) {
        if d { dev.push(s.clone()) } else { train.push(s.clone()) }
    }
    (train, dev)
}

/// Fraction of samples per pattern, in [`Pattern::ALL`] order.
pub fn pattern_mix(samples: &[TaggedSample]) -> [usize; 5] {
    let mut counts = [0; 5];
    for s in samples {
        counts[s.pattern.index()] += 1;
    }
    counts
}
