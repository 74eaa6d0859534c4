//! Synthetic benchmark corpus: two "languages" that are word-substitution
//! ciphers of each other. A seeded bigram chain over abstract meanings
//! emits sentences; each meaning renders as one surface form per language.
//! Content-word surfaces are disjoint between the languages, while a small
//! set of anchors — punctuation and alphanumeric codes — renders
//! identically on both sides, giving the identical-string seed dictionary
//! something to find. The generating bijection doubles as a ground-truth
//! lexicon, so induced phrase tables can be scored exactly.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Sentence terminators, sampled by cumulative weight.
const TERMINALS: [(&str, f64); 5] = [
    (".", 0.70),
    ("!", 0.10),
    ("?", 0.10),
    (";", 0.05),
    (":", 0.05),
];

/// Shape of the generated world.
#[derive(Debug, Clone, PartialEq)]
pub struct CipherSpec {
    /// Meanings with language-specific surfaces; these form the lexicon.
    pub content_words: usize,
    /// Anchor codes ("x0", "x1", …) rendered identically in both languages.
    pub anchor_codes: usize,
    /// Sentences generated for each side, from disjoint samples.
    pub sentences_per_side: usize,
    /// Content tokens per sentence (before punctuation), inclusive bounds.
    pub min_len: usize,
    pub max_len: usize,
    /// Outgoing transitions per chain state.
    pub successors: usize,
    /// Chance of a comma after each non-final content token.
    pub comma_prob: f64,
    pub seed: u64,
}

impl Default for CipherSpec {
    fn default() -> Self {
        CipherSpec {
            content_words: 240,
            anchor_codes: 14,
            sentences_per_side: 20_000,
            min_len: 4,
            max_len: 12,
            successors: 6,
            comma_prob: 0.08,
            seed: 17,
        }
    }
}

impl CipherSpec {
    fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.content_words == 0 {
            problems.push("content_words must be ≥ 1".to_string());
        }
        if self.sentences_per_side == 0 {
            problems.push("sentences_per_side must be ≥ 1".to_string());
        }
        if self.min_len == 0 || self.max_len < self.min_len {
            problems.push("need 1 ≤ min_len ≤ max_len".to_string());
        }
        if self.successors == 0 {
            problems.push("successors must be ≥ 1".to_string());
        }
        if !(0.0..1.0).contains(&self.comma_prob) {
            problems.push("comma_prob must be in [0, 1)".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// The generated corpus pair plus its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct CipherCorpus {
    pub src_lines: Vec<String>,
    pub tgt_lines: Vec<String>,
    /// Content-word bijection source→target; anchors are excluded since
    /// they map to themselves by construction.
    pub lexicon: BTreeMap<String, String>,
}

/// Random CV-syllable words. Each language draws onsets from its own
/// consonant set, so surfaces can never collide across languages.
fn make_surfaces(rng: &mut ChaCha8Rng, onsets: &[char], count: usize) -> Vec<String> {
    const VOWELS: [char; 5] = ['a', 'e', 'i', 'o', 'u'];
    let mut seen = BTreeSet::new();
    let mut words = Vec::with_capacity(count);
    while words.len() < count {
        let syllables = rng.random_range(2..=3usize);
        let mut word = String::new();
        for _ in 0..syllables {
            word.push(onsets[rng.random_range(0..onsets.len())]);
            word.push(VOWELS[rng.random_range(0..VOWELS.len())]);
        }
        if seen.insert(word.clone()) {
            words.push(word);
        }
    }
    words
}

fn sample_cdf(rng: &mut ChaCha8Rng, cdf: &[(usize, f64)]) -> usize {
    let draw = rng.random::<f64>();
    for &(state, bound) in cdf {
        if draw < bound {
            return state;
        }
    }
    cdf.last().expect("cdf is non-empty").0
}

/// Generates the corpus pair: one bigram chain over meanings, sampled
/// 2·sentences_per_side times; the first half renders in the source
/// language, the disjoint second half through the cipher.
pub fn synthesize_cipher(spec: &CipherSpec) -> Result<CipherCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    const SRC_ONSETS: [char; 10] = ['b', 'd', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 't'];
    const TGT_ONSETS: [char; 9] = ['c', 'f', 'h', 'j', 's', 'v', 'w', 'z', 'q'];
    let src_words = make_surfaces(&mut rng, &SRC_ONSETS, spec.content_words);
    let tgt_words = make_surfaces(&mut rng, &TGT_ONSETS, spec.content_words);

    // State i < content_words is a content meaning; the rest are anchor
    // codes that render the same on both sides.
    let n_states = spec.content_words + spec.anchor_codes;
    let render: Vec<(String, String)> = (0..n_states)
        .map(|i| {
            if i < spec.content_words {
                (src_words[i].clone(), tgt_words[i].clone())
            } else {
                let code = format!("x{}", i - spec.content_words);
                (code.clone(), code)
            }
        })
        .collect();

    // Sparse random transition table, stored as per-state CDFs.
    let successors = spec.successors.min(n_states);
    let transitions: Vec<Vec<(usize, f64)>> = (0..n_states)
        .map(|_| {
            let next = rand::seq::index::sample(&mut rng, n_states, successors);
            let weights: Vec<f64> = (0..successors).map(|_| rng.random::<f64>() + 0.1).collect();
            let total: f64 = weights.iter().sum();
            let mut acc = 0.0;
            next.into_iter()
                .zip(weights)
                .map(|(state, w)| {
                    acc += w / total;
                    (state, acc)
                })
                .collect()
        })
        .collect();
    let terminal_cdf: Vec<(usize, f64)> = {
        let mut acc = 0.0;
        TERMINALS
            .iter()
            .enumerate()
            .map(|(i, (_, w))| {
                acc += w;
                (i, acc)
            })
            .collect()
    };

    let render_side = |side: usize, rng: &mut ChaCha8Rng| -> Vec<String> {
        let pick = |pair: &(String, String)| {
            if side == 0 {
                pair.0.clone()
            } else {
                pair.1.clone()
            }
        };
        (0..spec.sentences_per_side)
            .map(|_| {
                let len = rng.random_range(spec.min_len..=spec.max_len);
                let mut tokens = Vec::with_capacity(len + 2);
                let mut state = rng.random_range(0..n_states);
                tokens.push(pick(&render[state]));
                for i in 1..len {
                    state = sample_cdf(rng, &transitions[state]);
                    tokens.push(pick(&render[state]));
                    if i + 1 < len && rng.random::<f64>() < spec.comma_prob {
                        tokens.push(",".to_string());
                    }
                }
                let terminal = sample_cdf(rng, &terminal_cdf);
                tokens.push(TERMINALS[terminal].0.to_string());
                tokens.join(" ")
            })
            .collect()
    };
    let src_lines = render_side(0, &mut rng);
    let tgt_lines = render_side(1, &mut rng);

    let lexicon = src_words.into_iter().zip(tgt_words).collect();
    Ok(CipherCorpus {
        src_lines,
        tgt_lines,
        lexicon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn token_types(lines: &[String]) -> BTreeSet<String> {
        lines
            .iter()
            .flat_map(|l| l.split_whitespace().map(str::to_string))
            .collect()
    }

    fn small_spec() -> CipherSpec {
        CipherSpec {
            content_words: 60,
            anchor_codes: 12,
            sentences_per_side: 2_000,
            ..CipherSpec::default()
        }
    }

    #[test]
    fn line_counts_match_the_requested_size() {
        let corpus = synthesize_cipher(&small_spec()).unwrap();
        assert_eq!(corpus.src_lines.len(), 2_000);
        assert_eq!(corpus.tgt_lines.len(), 2_000);
    }

    #[test]
    fn only_anchors_are_shared_between_sides() {
        let corpus = synthesize_cipher(&small_spec()).unwrap();
        let src = token_types(&corpus.src_lines);
        let tgt = token_types(&corpus.tgt_lines);
        let shared: BTreeSet<_> = src.intersection(&tgt).cloned().collect();
        for token in &shared {
            let is_code = token.starts_with('x') && token[1..].chars().all(|c| c.is_ascii_digit());
            let is_punct = [",", ".", "!", "?", ";", ":"].contains(&token.as_str());
            assert!(is_code || is_punct, "unexpected shared token {token}");
        }
        // Codes genuinely appear on both sides, with commas and a terminal.
        assert!(shared.iter().filter(|t| t.starts_with('x')).count() >= 10);
        assert!(shared.contains(","));
        assert!(shared.contains("."));
    }

    #[test]
    fn lexicon_is_a_content_word_bijection() {
        let corpus = synthesize_cipher(&small_spec()).unwrap();
        assert_eq!(corpus.lexicon.len(), 60);
        let values: BTreeSet<_> = corpus.lexicon.values().collect();
        assert_eq!(values.len(), 60);
        for (src, tgt) in &corpus.lexicon {
            assert_ne!(src, tgt);
            assert!(!src.starts_with('x'));
            assert!(!tgt.starts_with('x'));
        }
    }

    #[test]
    fn every_lexicon_word_occurs_in_its_corpus() {
        let corpus = synthesize_cipher(&small_spec()).unwrap();
        let src = token_types(&corpus.src_lines);
        let tgt = token_types(&corpus.tgt_lines);
        let missing_src = corpus.lexicon.keys().filter(|w| !src.contains(*w)).count();
        let missing_tgt = corpus
            .lexicon
            .values()
            .filter(|w| !tgt.contains(*w))
            .count();
        // Uniform start states alone give every meaning many chances per
        // 2k sentences; nothing should be missing.
        assert_eq!(missing_src, 0);
        assert_eq!(missing_tgt, 0);
    }

    #[test]
    fn sentences_end_with_a_terminal() {
        let corpus = synthesize_cipher(&small_spec()).unwrap();
        for line in corpus.src_lines.iter().take(200) {
            let last = line.split_whitespace().last().unwrap();
            assert!([".", "!", "?", ";", ":"].contains(&last), "line `{line}`");
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let spec = small_spec();
        let a = synthesize_cipher(&spec).unwrap();
        let b = synthesize_cipher(&spec).unwrap();
        assert_eq!(a, b);
        let c = synthesize_cipher(&CipherSpec { seed: 99, ..spec }).unwrap();
        assert_ne!(a.src_lines, c.src_lines);
    }

    #[test]
    fn default_spec_stays_inside_the_vocabulary_budget() {
        let spec = CipherSpec::default();
        let types = spec.content_words + spec.anchor_codes + 6;
        assert!((200..=500).contains(&types), "{types} token types");
    }

    #[test]
    fn bad_specs_report_all_problems() {
        let spec = CipherSpec {
            content_words: 0,
            comma_prob: 1.5,
            ..CipherSpec::default()
        };
        match synthesize_cipher(&spec) {
            Err(Error::Config(problems)) => assert_eq!(problems.len(), 2),
            other => panic!("expected a config error, got {other:?}"),
        }
    }
}
