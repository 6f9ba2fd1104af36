use super::kernels::{log_softmax, Matrix};
use super::model::{decoder_forward, encode};
use super::params::Parameters;
use crate::error::Result;
use crate::hypothesis::{Prediction, Source};
use crate::tokenizer::{class_to_id, id_char, BpeModel, TokenSequence, BOS};

/// A decoded name with its sequence log-probability (EOS included when
/// emitted).
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub name: String,
    pub logprob: f64,
    /// Hit the length limit without emitting EOS.
    pub truncated: bool,
}

fn name_of(prefix: &[u32]) -> String {
    prefix[1..].iter().filter_map(|&id| id_char(id)).collect()
}

fn next_logprobs(p: &Parameters, mem: &Matrix, prefix: &[u32]) -> Result<Vec<f64>> {
    let logits = decoder_forward(p, mem, &TokenSequence::target(prefix.to_vec()))?;
    Ok(log_softmax(logits.row(logits.rows - 1)))
}

fn char_limit(p: &Parameters, max_len: usize) -> usize {
    max_len.min(p.config().max_tgt_len - 1)
}

/// Appends the most probable character until EOS or `max_len` characters.
pub fn greedy_decode(p: &Parameters, src: &TokenSequence, max_len: usize) -> Result<Decoded> {
    let mem = encode(p, src)?;
    let limit = char_limit(p, max_len);
    let mut prefix = vec![BOS];
    let mut logprob = 0.0;
    loop {
        if prefix.len() - 1 == limit {
            return Ok(Decoded {
                name: name_of(&prefix),
                logprob,
                truncated: true,
            });
        }
        let lp = next_logprobs(p, &mem, &prefix)?;
        // first maximum wins ties
        let (class, best) = lp
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        logprob += best;
        if class == 0 {
            return Ok(Decoded {
                name: name_of(&prefix),
                logprob,
                truncated: false,
            });
        }
        prefix.push(class_to_id(class));
    }
}

/// Length-unnormalized beam search over characters. Finished hypotheses
/// leave the beam; the result is sorted by log-probability, best first.
pub fn beam_decode(p: &Parameters, src: &TokenSequence, beam_width: usize, max_len: usize) -> Result<Vec<Decoded>> {
    let width = beam_width.max(1);
    let mem = encode(p, src)?;
    let limit = char_limit(p, max_len);
    let mut alive: Vec<(Vec<u32>, f64)> = vec![(vec![BOS], 0.0)];
    let mut done: Vec<Decoded> = Vec::new();

    while !alive.is_empty() {
        let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
        let mut still: Vec<(Vec<u32>, f64)> = Vec::new();
        for (b, (prefix, score)) in alive.iter().enumerate() {
            if prefix.len() - 1 == limit {
                done.push(Decoded {
                    name: name_of(prefix),
                    logprob: *score,
                    truncated: true,
                });
                continue;
            }
            let lp = next_logprobs(p, &mem, prefix)?;
            candidates.extend(lp.iter().enumerate().map(|(c, &v)| (b, c, score + v)));
        }
        // stable: equal scores keep (beam, class) order
        candidates.sort_by(|a, b| b.2.total_cmp(&a.2));
        for &(b, class, score) in candidates.iter().take(width) {
            let prefix = &alive[b].0;
            if class == 0 {
                done.push(Decoded {
                    name: name_of(prefix),
                    logprob: score,
                    truncated: false,
                });
            } else {
                let mut next = prefix.clone();
                next.push(class_to_id(class));
                still.push((next, score));
            }
        }
        alive = still;
    }
    done.sort_by(|a, b| b.logprob.total_cmp(&a.logprob));
    Ok(done)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConfidenceMode {
    /// Total sequence log-probability.
    #[default]
    Total,
    /// Log-probability divided by the number of emitted symbols.
    PerChar,
}

/// BPE-encodes `text`, truncates it to the model's source limit and greedily
/// decodes a name.
pub fn predict_name(p: &Parameters, bpe: &BpeModel, text: &str) -> Result<Prediction> {
    predict_name_with(p, bpe, text, ConfidenceMode::Total)
}

pub fn predict_name_with(p: &Parameters, bpe: &BpeModel, text: &str, mode: ConfidenceMode) -> Result<Prediction> {
    let mut src = bpe.encode(text);
    src.ids.truncate(p.config().max_src_len);
    let d = greedy_decode(p, &src, p.config().max_tgt_len)?;
    let confidence = match mode {
        ConfidenceMode::Total => d.logprob,
        ConfidenceMode::PerChar => {
            let symbols = d.name.chars().count() + usize::from(!d.truncated);
            d.logprob / symbols.max(1) as f64
        }
    };
    Ok(Prediction::new(d.name, confidence, Source::Seq2Seq))
}
