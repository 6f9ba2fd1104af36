//! Byte-pair encoding for encoder input and the character alphabet for
//! decoder output, drawn from one shared id space.
//!
//! Id layout (identical for every [`BpeModel`]):
//!
//! | ids      | tokens                                  |
//! |----------|-----------------------------------------|
//! | 0..=3    | `<pad>`, `<s>`, `</s>`, `<unk>`         |
//! | 4..=31   | `a`..=`z`, `'`, `-` (also the target alphabet) |
//! | 32       | word boundary marker `</w>`             |
//! | 33..     | learned merges, in merge order          |
//!
//! The boundary marker is appended to every word except the last one of a
//! line, so a single word encodes without it and decoding replaces each
//! marker with one space.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const UNK: u32 = 3;
pub const BOUNDARY: &str = "</w>";
pub const BOUNDARY_ID: u32 = 32;

const SPECIALS: [&str; 4] = ["<pad>", "<s>", "</s>", "<unk>"];
const FIRST_CHAR_ID: u32 = 4;

/// Characters a name may be spelled with, in id order.
pub const TARGET_ALPHABET: [char; 28] = [
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r',
    's', 't', 'u', 'v', 'w', 'x', 'y', 'z', '\'', '-',
];

/// Output classes of the decoder: EOS followed by the target alphabet.
pub const NUM_CHAR_CLASSES: usize = TARGET_ALPHABET.len() + 1;

pub const DEFAULT_MERGES: usize = 1000;

pub fn char_id(c: char) -> Option<u32> {
    TARGET_ALPHABET
        .iter()
        .position(|&a| a == c)
        .map(|i| FIRST_CHAR_ID + i as u32)
}

pub fn id_char(id: u32) -> Option<char> {
    id.checked_sub(FIRST_CHAR_ID)
        .and_then(|i| TARGET_ALPHABET.get(i as usize).copied())
}

/// Maps a decoder output class to its token id.
pub fn class_to_id(class: usize) -> u32 {
    if class == 0 {
        EOS
    } else {
        FIRST_CHAR_ID + (class as u32 - 1)
    }
}

/// Maps a target token id (EOS or a character) to its output class.
pub fn id_to_class(id: u32) -> Option<usize> {
    if id == EOS {
        Some(0)
    } else {
        id_char(id).map(|_| (id - FIRST_CHAR_ID) as usize + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqKind {
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub kind: SeqKind,
}

impl TokenSequence {
    pub fn source(ids: Vec<u32>) -> Self {
        Self {
            ids,
            kind: SeqKind::Source,
        }
    }

    pub fn target(ids: Vec<u32>) -> Self {
        Self {
            ids,
            kind: SeqKind::Target,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// `[BOS, c1 .. cn, EOS]` for a name over the target alphabet.
pub fn char_encode(name: &str) -> Result<TokenSequence> {
    let mut ids = Vec::with_capacity(name.len() + 2);
    ids.push(BOS);
    for c in name.chars() {
        ids.push(char_id(c).ok_or_else(|| Error::UnencodableName(name.to_string()))?);
    }
    ids.push(EOS);
    Ok(TokenSequence::target(ids))
}

pub fn char_decode(seq: &TokenSequence) -> Result<String> {
    let ids = &seq.ids;
    if ids.len() < 2 || ids[0] != BOS || ids[ids.len() - 1] != EOS {
        return Err(Error::Contract(
            "character sequence must be bounded by BOS and EOS".into(),
        ));
    }
    ids[1..ids.len() - 1]
        .iter()
        .map(|&id| id_char(id).ok_or(Error::InvalidTokenId(id)))
        .collect()
}

/// A learned BPE merge table over the shared id space.
#[derive(Debug, Clone, PartialEq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    /// (left id, right id) -> (merge rank, merged id)
    lookup: HashMap<(u32, u32), (usize, u32)>,
}

impl BpeModel {
    fn base() -> Self {
        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        tokens.extend(TARGET_ALPHABET.iter().map(|c| c.to_string()));
        tokens.push(BOUNDARY.to_string());
        debug_assert_eq!(tokens.len() as u32, BOUNDARY_ID + 1);
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self {
            merges: Vec::new(),
            tokens,
            index,
            lookup: HashMap::new(),
        }
    }

    /// Rebuilds a model from its merge list. Every merge operand must
    /// already be a token when the merge is reached.
    pub fn from_merges(merges: Vec<(String, String)>) -> Result<Self> {
        let mut model = Self::base();
        for (rank, (left, right)) in merges.iter().enumerate() {
            let (l, r) = match (model.index.get(left), model.index.get(right)) {
                (Some(&l), Some(&r)) => (l, r),
                _ => {
                    return Err(Error::parse(
                        rank + 1,
                        format!("merge operand not in vocab: {left} {right}"),
                    ))
                }
            };
            model.push_merge(l, r);
        }
        Ok(model)
    }

    fn push_merge(&mut self, left: u32, right: u32) -> u32 {
        let l = self.tokens[left as usize].clone();
        let r = self.tokens[right as usize].clone();
        let joined = format!("{l}{r}");
        let rank = self.merges.len();
        let id = match self.index.get(&joined) {
            Some(&id) => id,
            None => {
                let id = self.tokens.len() as u32;
                self.tokens.push(joined.clone());
                self.index.insert(joined, id);
                id
            }
        };
        self.merges.push((l, r));
        self.lookup.entry((left, right)).or_insert((rank, id));
        id
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    /// Size of the shared embedding table.
    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    fn word_symbols(&self, word: &str, boundary: bool) -> Vec<u32> {
        let mut syms: Vec<u32> = word.chars().map(|c| char_id(c).unwrap_or(UNK)).collect();
        if boundary {
            syms.push(BOUNDARY_ID);
        }
        syms
    }

    fn apply_merges(&self, syms: &mut Vec<u32>) {
        loop {
            let best = syms
                .windows(2)
                .enumerate()
                .filter_map(|(i, w)| self.lookup.get(&(w[0], w[1])).map(|&(rank, id)| (rank, i, id)))
                .min();
            let Some((_, i, merged)) = best else { break };
            let pair = (syms[i], syms[i + 1]);
            let mut out = Vec::with_capacity(syms.len());
            let mut j = 0;
            while j < syms.len() {
                if j + 1 < syms.len() && (syms[j], syms[j + 1]) == pair {
                    out.push(merged);
                    j += 2;
                } else {
                    out.push(syms[j]);
                    j += 1;
                }
            }
            *syms = out;
        }
    }

    /// Encodes lowercase text; characters outside the base alphabet become UNK.
    pub fn encode(&self, text: &str) -> TokenSequence {
        let text = text.to_lowercase();
        let words: Vec<&str> = text.split_whitespace().collect();
        let mut ids = Vec::new();
        for (i, word) in words.iter().enumerate() {
            let mut syms = self.word_symbols(word, i + 1 < words.len());
            self.apply_merges(&mut syms);
            ids.extend(syms);
        }
        TokenSequence::source(ids)
    }

    pub fn decode(&self, seq: &TokenSequence) -> Result<String> {
        let mut out = String::new();
        for &id in &seq.ids {
            match id {
                PAD | BOS | EOS => return Err(Error::InvalidTokenId(id)),
                _ => {
                    let tok = self.token(id).ok_or(Error::InvalidTokenId(id))?;
                    out.push_str(tok);
                }
            }
        }
        Ok(out.replace(BOUNDARY, " "))
    }

    /// Writes `token<TAB>id` lines in id order.
    pub fn write_vocab<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (id, tok) in self.tokens.iter().enumerate() {
            writeln!(out, "{tok}\t{id}")?;
        }
        Ok(())
    }

    /// Writes `left right` lines in merge order.
    pub fn write_merges<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (l, r) in &self.merges {
            writeln!(out, "{l} {r}")?;
        }
        Ok(())
    }

    pub fn save(&self, vocab_path: &Path, merges_path: &Path) -> Result<()> {
        let mut v = Vec::new();
        self.write_vocab(&mut v).expect("Vec write");
        std::fs::write(vocab_path, v).map_err(|e| Error::io(vocab_path, e))?;
        let mut m = Vec::new();
        self.write_merges(&mut m).expect("Vec write");
        std::fs::write(merges_path, m).map_err(|e| Error::io(merges_path, e))
    }

    pub fn parse_merges(text: &str) -> Result<Vec<(String, String)>> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, line)| {
                line.split_once(' ')
                    .map(|(l, r)| (l.to_string(), r.to_string()))
                    .ok_or_else(|| Error::parse(i + 1, "expected `left right`"))
            })
            .collect()
    }

    /// Loads a model from its merges file and checks it against the vocab file.
    pub fn load(vocab_path: &Path, merges_path: &Path) -> Result<Self> {
        let merges_text =
            std::fs::read_to_string(merges_path).map_err(|e| Error::io(merges_path, e))?;
        let model = Self::from_merges(Self::parse_merges(&merges_text)?)?;
        let vocab_text =
            std::fs::read_to_string(vocab_path).map_err(|e| Error::io(vocab_path, e))?;
        let mut expected = Vec::new();
        model.write_vocab(&mut expected).expect("Vec write");
        if expected != vocab_text.as_bytes() {
            let mismatch = vocab_text
                .lines()
                .zip(String::from_utf8_lossy(&expected).lines())
                .position(|(a, b)| a != b)
                .unwrap_or_else(|| vocab_text.lines().count().min(model.vocab_size()));
            return Err(Error::parse(
                mismatch + 1,
                "vocab file does not match the merge list",
            ));
        }
        Ok(model)
    }
}

/// Learns up to `n_merges` merges by repeatedly joining the most frequent
/// adjacent pair within words. Equal counts go to the lexicographically
/// smallest `(left, right)` pair.
pub fn learn_bpe<S: AsRef<str>>(corpus: &[S], n_merges: usize) -> Result<BpeModel> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut model = BpeModel::base();

    let mut counts: HashMap<Vec<u32>, u64> = HashMap::new();
    for line in corpus {
        let line = line.as_ref().to_lowercase();
        let words: Vec<&str> = line.split_whitespace().collect();
        for (i, w) in words.iter().enumerate() {
            *counts
                .entry(model.word_symbols(w, i + 1 < words.len()))
                .or_default() += 1;
        }
    }
    let mut words: Vec<(Vec<u32>, u64)> = counts.into_iter().collect();
    words.sort();

    for _ in 0..n_merges {
        let mut pairs: HashMap<(u32, u32), u64> = HashMap::new();
        for (syms, n) in &words {
            for w in syms.windows(2) {
                if w[0] != UNK && w[1] != UNK {
                    *pairs.entry((w[0], w[1])).or_default() += n;
                }
            }
        }
        let best = pairs.into_iter().max_by(|(pa, ca), (pb, cb)| {
            ca.cmp(cb).then_with(|| {
                let ka = (&model.tokens[pa.0 as usize], &model.tokens[pa.1 as usize]);
                let kb = (&model.tokens[pb.0 as usize], &model.tokens[pb.1 as usize]);
                kb.cmp(&ka)
            })
        });
        let Some(((l, r), _)) = best else { break };
        let merged = model.push_merge(l, r);
        for (syms, _) in words.iter_mut() {
            let mut out = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == l && syms[i + 1] == r {
                    out.push(merged);
                    i += 2;
                } else {
                    out.push(syms[i]);
                    i += 1;
                }
            }
            *syms = out;
        }
    }
    Ok(model)
}
