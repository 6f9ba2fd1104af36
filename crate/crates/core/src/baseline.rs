//! Rule-based name extraction: concatenate spelled letters, average their
//! word confidences, boost to 1.0 when the concatenation matches a word of
//! the hypothesis, and fall back through the N-best list.

use crate::hypothesis::{AsrHypothesis, Prediction, Source};

/// Hypotheses consulted when looking for a whole-word match.
pub const MATCH_DEPTH: usize = 3;

/// Every single-letter token of `h`, in order.
pub fn extract_spelled_letters(h: &AsrHypothesis) -> Vec<(char, f64)> {
    h.tokens
        .iter()
        .filter(|t| t.is_letter())
        .map(|t| (t.text.chars().next().unwrap(), t.confidence))
        .collect()
}

/// Candidate name and mean letter confidence; `None` without letters.
fn candidate(h: &AsrHypothesis) -> Option<(String, f64)> {
    let letters = extract_spelled_letters(h);
    if letters.is_empty() {
        return None;
    }
    let name: String = letters.iter().map(|(c, _)| *c).collect();
    let conf = letters.iter().map(|(_, p)| p).sum::<f64>() / letters.len() as f64;
    Some((name, conf))
}

fn matches_word(name: &str, h: &AsrHypothesis) -> bool {
    h.tokens
        .iter()
        .any(|t| t.is_word() && t.text.eq_ignore_ascii_case(name))
}

/// How a prediction was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineTrace {
    /// Number of hypotheses whose letters were examined.
    pub consulted: usize,
    /// Rank of the hypothesis that produced a whole-word match.
    pub matched_rank: Option<usize>,
}

pub fn baseline_predict(nbest: &[AsrHypothesis]) -> Prediction {
    baseline_predict_traced(nbest).0
}

pub fn baseline_predict_traced(nbest: &[AsrHypothesis]) -> (Prediction, BaselineTrace) {
    let mut trace = BaselineTrace {
        consulted: 0,
        matched_rank: None,
    };
    let Some(first) = nbest.first() else {
        return (Prediction::new("", 0.0, Source::Baseline), trace);
    };

    for h in nbest.iter().take(MATCH_DEPTH) {
        trace.consulted += 1;
        if let Some((name, _)) = candidate(h) {
            if matches_word(&name, h) {
                trace.matched_rank = Some(h.rank);
                return (Prediction::new(name, 1.0, Source::Baseline), trace);
            }
        }
    }

    if let Some((name, conf)) = candidate(first) {
        return (Prediction::new(name, conf, Source::Baseline), trace);
    }

    // No spelled letters: fall back to the longest word (first on ties).
    let longest = first
        .tokens
        .iter()
        .filter(|t| t.is_word())
        .fold(None, |best: Option<&crate::hypothesis::AsrToken>, t| match best {
            Some(b) if b.text.chars().count() >= t.text.chars().count() => Some(b),
            _ => Some(t),
        });
    let pred = match longest {
        Some(t) => Prediction::new(t.text.clone(), t.confidence, Source::Baseline),
        None => Prediction::new("", 0.0, Source::Baseline),
    };
    (pred, trace)
}

/// Levenshtein distance over chars with unit costs.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein(&a, &b)
}

/// Levenshtein distance over arbitrary sequences.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - d / max(|name|, |w|)` against the first multi-character word `w`
/// of `h`. Returns the prediction's own confidence when the name is empty
/// or `h` has no such word.
pub fn edit_distance_confidence(p: &Prediction, h: &AsrHypothesis) -> f64 {
    let Some(word) = h.tokens.iter().find(|t| t.is_word()) else {
        return p.confidence;
    };
    if p.name.is_empty() {
        return p.confidence;
    }
    let d = edit_distance(&p.name, &word.text);
    let longest = p.name.chars().count().max(word.text.chars().count());
    1.0 - d as f64 / longest as f64
}

/// Baseline prediction with the edit-distance confidence in place of the
/// averaged letter confidence.
pub fn baseline_predict_editdist(nbest: &[AsrHypothesis]) -> Prediction {
    let mut p = baseline_predict(nbest);
    if let Some(first) = nbest.first() {
        p.confidence = edit_distance_confidence(&p, first);
    }
    p.source = Source::BaselineEditDist;
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::AsrToken;

    fn hyp(rank: usize, s: &str) -> AsrHypothesis {
        AsrHypothesis::parse_tokens(rank, s).unwrap()
    }

    fn letters(h: &AsrHypothesis) -> String {
        extract_spelled_letters(h).iter().map(|(c, _)| c).collect()
    }

    #[test]
    fn extracts_letters_through_nato_phrases() {
        let h = AsrHypothesis::from_words(1, "tim t as in tango i as in i m as in man", 0.9);
        assert_eq!(letters(&h), "tiim");
        let h = AsrHypothesis::from_words(1, "b as in boy o w d as in dog i c as in cat h", 0.9);
        assert_eq!(letters(&h), "bowdich");
        let h = AsrHypothesis::from_words(1, "hello world", 0.9);
        assert!(extract_spelled_letters(&h).is_empty());
    }

    #[test]
    fn averaged_confidence_without_match() {
        let p = baseline_predict(&[hyp(1, "john/0.01 j/0.7 o/0.6 n/0.5 e/0.8")]);
        assert_eq!(p.name, "jone");
        assert!((p.confidence - 0.65).abs() < 1e-9);
        assert_eq!(p.source, Source::Baseline);
    }

    #[test]
    fn substituted_letter_keeps_average() {
        let p = baseline_predict(&[hyp(
            1,
            "jennifer/0.9 j/0.5 e/0.5 n/0.5 n/0.5 i/0.5 s/0.5 e/0.5 r/0.5",
        )]);
        assert_eq!(p.name, "jenniser");
        assert!((p.confidence - 0.5).abs() < 1e-12);
    }

    #[test]
    fn double_letter_mismatch() {
        let p = baseline_predict(&[hyp(1, "d/0.9 a/0.9 r/0.9 e/0.9 n/0.9 darren/0.9")]);
        assert_eq!(p.name, "daren");
        assert!((p.confidence - 0.9).abs() < 1e-12);
    }

    #[test]
    fn match_boosts_to_one() {
        let p = baseline_predict(&[hyp(1, "vera/0.3 v/0.4 e/0.4 r/0.4 a/0.4")]);
        assert_eq!((p.name.as_str(), p.confidence), ("vera", 1.0));
    }

    #[test]
    fn falls_back_to_lower_ranks_only_for_a_match() {
        let nbest = vec![
            hyp(1, "vera/0.3 v/0.4 e/0.4 r/0.4 o/0.4"),
            hyp(2, "vera/0.3 v/0.4 e/0.4 r/0.4 a/0.4"),
        ];
        let (p, trace) = baseline_predict_traced(&nbest);
        assert_eq!((p.name.as_str(), p.confidence), ("vera", 1.0));
        assert_eq!(trace.matched_rank, Some(2));

        let nbest = vec![
            hyp(1, "vera/0.3 v/0.4 e/0.4 r/0.4 o/0.4"),
            hyp(2, "vero/0.3 v/0.4 e/0.4 r/0.4 a/0.4"),
        ];
        let p = baseline_predict(&nbest);
        assert_eq!(p.name, "vero");
        assert!((p.confidence - 0.4).abs() < 1e-12);
    }

    #[test]
    fn rank_four_is_never_consulted() {
        let nbest = vec![
            hyp(1, "x/0.5"),
            hyp(2, "y/0.5"),
            hyp(3, "z/0.5"),
            hyp(4, "ab/0.5 a/0.5 b/0.5"),
        ];
        let (p, trace) = baseline_predict_traced(&nbest);
        assert_eq!(p.name, "x");
        assert_eq!(trace.consulted, 3);
    }

    #[test]
    fn rank_one_match_stops_search() {
        let nbest = vec![hyp(1, "ab/0.5 a/0.5 b/0.5"), hyp(2, "cd/0.5 c/0.5 d/0.5")];
        let (_, trace) = baseline_predict_traced(&nbest);
        assert_eq!(trace.consulted, 1);
    }

    #[test]
    fn zero_letter_fallback_uses_longest_word() {
        let p = baseline_predict(&[hyp(1, "um/0.2 jennifer/0.7 uh/0.3")]);
        assert_eq!(p.name, "jennifer");
        assert_eq!(p.confidence, 0.7);
    }

    #[test]
    fn empty_hypotheses() {
        let p = baseline_predict(&[AsrHypothesis::new(1, vec![])]);
        assert_eq!((p.name.as_str(), p.confidence), ("", 0.0));
        let p = baseline_predict(&[]);
        assert_eq!((p.name.as_str(), p.confidence), ("", 0.0));
    }

    #[test]
    fn single_letters_do_not_self_match() {
        let p = baseline_predict(&[hyp(1, "a/0.6")]);
        assert_eq!(p.name, "a");
        assert!((p.confidence - 0.6).abs() < 1e-12);
    }

    #[test]
    fn edit_distance_examples() {
        assert_eq!(edit_distance("vera", "vera"), 0);
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("jenniser", "jennifer"), 1);
        assert_eq!(edit_distance("sedoz", "sdov"), 2);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
    }

    #[test]
    fn edit_distance_confidence_examples() {
        let h = AsrHypothesis::from_words(1, "jennifer j e n n i s e r", 0.8);
        let p = Prediction::new("jenniser", 0.8, Source::Baseline);
        assert!((edit_distance_confidence(&p, &h) - 0.875).abs() < 1e-12);

        let h = AsrHypothesis::from_words(1, "vera v e r a", 0.8);
        let p = Prediction::new("vera", 1.0, Source::Baseline);
        assert_eq!(edit_distance_confidence(&p, &h), 1.0);

        let h = AsrHypothesis::from_words(1, "sdov s e d o z", 0.8);
        let p = Prediction::new("sedoz", 0.8, Source::Baseline);
        assert!((edit_distance_confidence(&p, &h) - 0.6).abs() < 1e-12);

        let h = AsrHypothesis::new(1, vec![AsrToken::new("v", 0.3)]);
        let p = Prediction::new("v", 0.3, Source::Baseline);
        assert_eq!(edit_distance_confidence(&p, &h), 0.3);
    }

    #[test]
    fn editdist_variant_keeps_name() {
        let nbest = [AsrHypothesis::from_words(
            1,
            "b as in boy o w d as in dog i c as in cat h",
            0.9,
        )];
        let avg = baseline_predict(&nbest);
        let ed = baseline_predict_editdist(&nbest);
        assert_eq!(avg.name, "bowdich");
        assert_eq!(ed.name, "bowdich");
        assert_eq!(ed.source, Source::BaselineEditDist);
    }
}
