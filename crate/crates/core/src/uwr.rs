//! Unknown-word replacement: repairs `<UNK>` tokens in one system's
//! translation by consulting a phrase-based translation of the same source
//! sentence, which copies unknown words through instead of losing them.
//!
//! For each `<UNK>`, nearby context words are fuzzy-located in the
//! phrase-based translation, each match nominates the token standing in the
//! unknown's relative position, and the most frequent nominee (after
//! dropping punctuation and the context words themselves) is substituted.
//! With no usable nominee the `<UNK>` is deleted.

use std::collections::{BTreeMap, BTreeSet};

use crate::textprep::{is_punctuation_token, TokenSeq};

/// The unknown-word marker produced by word-level translation systems.
pub const UNK_TOKEN: &str = "<UNK>";

/// Matching and windowing knobs for unknown-word replacement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UwrConfig {
    /// Context words taken from each side of an `<UNK>`.
    pub context_window: usize,
    /// How many trailing characters may differ in a fuzzy match.
    pub suffix_tolerance: usize,
    /// Tokens this short (in characters) must match exactly.
    pub min_exact_len: usize,
}

impl Default for UwrConfig {
    fn default() -> Self {
        UwrConfig {
            context_window: 2,
            suffix_tolerance: 2,
            min_exact_len: 3,
        }
    }
}

fn common_prefix_chars(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).take_while(|(x, y)| x == y).count()
}

/// True when the tokens are equal, or both are long enough for fuzzy
/// matching and differ only in their last `suffix_tolerance` characters —
/// a cheap stand-in for morphological inflection.
pub fn fuzzy_match(a: &str, b: &str, cfg: &UwrConfig) -> bool {
    if a == b {
        return true;
    }
    let la = a.chars().count();
    let lb = b.chars().count();
    if la <= cfg.min_exact_len || lb <= cfg.min_exact_len {
        return false;
    }
    common_prefix_chars(a, b) >= la.max(lb).saturating_sub(cfg.suffix_tolerance)
}

/// One nomination for an `<UNK>` slot: where it sits in the phrase-based
/// sentence and how far away the nominating context word was.
struct Nominee {
    pbsmt_pos: usize,
    context_distance: usize,
}

/// Picks the replacement for the `<UNK>` at `unk_pos`, or `None` when it
/// should be deleted.
fn choose_replacement(
    nmt: &TokenSeq,
    pbsmt: &TokenSeq,
    unk_pos: usize,
    cfg: &UwrConfig,
) -> Option<usize> {
    let lo = unk_pos.saturating_sub(cfg.context_window);
    let hi = (unk_pos + cfg.context_window).min(nmt.len().saturating_sub(1));
    let context: Vec<usize> = (lo..=hi).filter(|&c| c != unk_pos).collect();
    let context_words: BTreeSet<&str> = context.iter().map(|&c| nmt.tokens[c].as_str()).collect();

    let mut nominees: Vec<Nominee> = Vec::new();
    for &c in &context {
        let word = &nmt.tokens[c];
        // Closest fuzzy match to the context word's own position; ties go
        // to the leftmost match.
        let best_match = pbsmt
            .tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| fuzzy_match(word, t, cfg))
            .min_by_key(|&(p, _)| (p as i64 - c as i64).abs())
            .map(|(p, _)| p);
        let Some(p) = best_match else { continue };
        let nominated = p as i64 + (unk_pos as i64 - c as i64);
        if nominated < 0 || nominated >= pbsmt.len() as i64 {
            continue;
        }
        nominees.push(Nominee {
            pbsmt_pos: nominated as usize,
            context_distance: unk_pos.abs_diff(c),
        });
    }

    // Tally by surface form, keeping each form's closest nomination and
    // leftmost position for tie-breaking.
    let mut tally: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for n in &nominees {
        let token = pbsmt.tokens[n.pbsmt_pos].as_str();
        if is_punctuation_token(token) || context_words.contains(token) || token == UNK_TOKEN {
            continue;
        }
        let entry = tally.entry(token).or_insert((0, usize::MAX, usize::MAX));
        entry.0 += 1;
        entry.1 = entry.1.min(n.context_distance);
        entry.2 = entry.2.min(n.pbsmt_pos);
    }
    tally
        .into_iter()
        .max_by(|a, b| {
            // Highest count; then nearest contributing context word; then
            // leftmost position in the phrase-based sentence.
            (a.1 .0)
                .cmp(&b.1 .0)
                .then_with(|| b.1 .1.cmp(&a.1 .1))
                .then_with(|| b.1 .2.cmp(&a.1 .2))
        })
        .map(|(_, (_, _, pos))| pos)
}

/// Replaces every `<UNK>` in `nmt` using `pbsmt` as a positional oracle,
/// deleting unknowns that attract no usable nominee. All other tokens pass
/// through unchanged and in order; delexicalization slots are carried
/// along with their positions adjusted for deletions.
pub fn replace_unknowns(nmt: &TokenSeq, pbsmt: &TokenSeq, cfg: &UwrConfig) -> TokenSeq {
    let mut out = TokenSeq::default();
    // new_index[i] = position of nmt token i in the output, if it survived.
    let mut new_index: Vec<Option<usize>> = Vec::with_capacity(nmt.len());
    for (i, token) in nmt.tokens.iter().enumerate() {
        if token != UNK_TOKEN {
            new_index.push(Some(out.tokens.len()));
            out.tokens.push(token.clone());
            out.case_map.push(nmt.case_map[i].clone());
            continue;
        }
        match choose_replacement(nmt, pbsmt, i, cfg) {
            Some(pos) => {
                new_index.push(Some(out.tokens.len()));
                out.tokens.push(pbsmt.tokens[pos].clone());
                out.case_map.push(pbsmt.case_map[pos].clone());
            }
            None => new_index.push(None),
        }
    }
    for slot in &nmt.slots {
        if let Some(Some(position)) = new_index.get(slot.position).copied() {
            let mut slot = slot.clone();
            slot.position = position;
            out.slots.push(slot);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::{SlotKind, SlotRecord};

    fn seq(tokens: &[&str]) -> TokenSeq {
        TokenSeq::from_tokens(tokens.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn fuzzy_match_accepts_inflection_endings() {
        let cfg = UwrConfig::default();
        assert!(fuzzy_match("jablko", "jablka", &cfg));
        assert!(fuzzy_match("a", "a", &cfg));
        assert!(!fuzzy_match("ab", "cd", &cfg));
    }

    #[test]
    fn fuzzy_match_requires_exact_short_tokens() {
        let cfg = UwrConfig::default();
        assert!(!fuzzy_match("abc", "abd", &cfg));
        assert!(fuzzy_match("abc", "abc", &cfg));
        // Both long, prefix too short.
        assert!(!fuzzy_match("abcdefgh", "abxxxxxx", &cfg));
    }

    #[test]
    fn fuzzy_match_counts_characters_not_bytes() {
        let cfg = UwrConfig::default();
        assert!(fuzzy_match("učitel", "učitele", &cfg));
    }

    #[test]
    fn surrounding_words_locate_the_replacement() {
        let nmt = seq(&["koupil", UNK_TOKEN, "včera"]);
        let pbsmt = seq(&["koupil", "auto", "včera"]);
        let out = replace_unknowns(&nmt, &pbsmt, &UwrConfig::default());
        assert_eq!(out.tokens, vec!["koupil", "auto", "včera"]);
    }

    #[test]
    fn sentences_without_unknowns_pass_through() {
        let nmt = seq(&["koupil", "auto", "včera"]);
        let pbsmt = seq(&["x", "y"]);
        assert_eq!(replace_unknowns(&nmt, &pbsmt, &UwrConfig::default()), nmt);
    }

    #[test]
    fn lone_unknown_is_deleted() {
        let nmt = seq(&[UNK_TOKEN]);
        let pbsmt = seq(&["x"]);
        let out = replace_unknowns(&nmt, &pbsmt, &UwrConfig::default());
        assert!(out.tokens.is_empty());
    }

    #[test]
    fn unmatched_context_deletes_all_unknowns() {
        let nmt = seq(&["aaa", UNK_TOKEN, "bbb", UNK_TOKEN]);
        let pbsmt = seq(&["ccc", "ddd", "eee"]);
        let out = replace_unknowns(&nmt, &pbsmt, &UwrConfig::default());
        assert_eq!(out.tokens, vec!["aaa", "bbb"]);
    }

    #[test]
    fn punctuation_nominees_are_discarded() {
        let nmt = seq(&["koupil", UNK_TOKEN]);
        let pbsmt = seq(&["koupil", ","]);
        let out = replace_unknowns(&nmt, &pbsmt, &UwrConfig::default());
        assert_eq!(out.tokens, vec!["koupil"]);
    }

    #[test]
    fn context_word_nominees_are_discarded() {
        // The context word itself sits at the nominated position.
        let nmt = seq(&["koupil", UNK_TOKEN, "včera"]);
        let pbsmt = seq(&["koupil", "včera"]);
        let out = replace_unknowns(&nmt, &pbsmt, &UwrConfig::default());
        assert_eq!(out.tokens, vec!["koupil", "včera"]);
    }

    #[test]
    fn closer_context_word_wins_frequency_ties() {
        let nmt = seq(&["qqqq", "wwww", UNK_TOKEN]);
        let pbsmt = seq(&["qqqq", "x1", "y1", "wwww", "x2"]);
        let out = replace_unknowns(&nmt, &pbsmt, &UwrConfig::default());
        assert_eq!(out.tokens, vec!["qqqq", "wwww", "x2"]);
    }

    #[test]
    fn leftmost_position_breaks_remaining_ties() {
        let nmt = seq(&["qqqq", UNK_TOKEN, "rrrr"]);
        let pbsmt = seq(&["qqqq", "x1", "zz", "z2", "x9", "rrrr"]);
        let out = replace_unknowns(&nmt, &pbsmt, &UwrConfig::default());
        assert_eq!(out.tokens, vec!["qqqq", "x1", "rrrr"]);
    }

    #[test]
    fn output_never_contains_the_marker() {
        // Even a pathological oracle that itself contains the marker must
        // not leak it into the output.
        let nmt = seq(&["koupil", UNK_TOKEN, "včera"]);
        let pbsmt = seq(&["koupil", UNK_TOKEN, "včera"]);
        let out = replace_unknowns(&nmt, &pbsmt, &UwrConfig::default());
        assert!(!out.tokens.iter().any(|t| t == UNK_TOKEN));
    }

    #[test]
    fn slots_shift_past_deletions() {
        let mut nmt = seq(&["zzz", UNK_TOKEN, "<NUMBER>"]);
        nmt.slots.push(SlotRecord {
            position: 2,
            kind: SlotKind::Number,
            literal: "42".to_string(),
        });
        let pbsmt = seq(&["aaa", "bbb"]);
        let out = replace_unknowns(&nmt, &pbsmt, &UwrConfig::default());
        assert_eq!(out.tokens, vec!["zzz", "<NUMBER>"]);
        assert_eq!(out.slots.len(), 1);
        assert_eq!(out.slots[0].position, 1);
        assert_eq!(out.slots[0].literal, "42");
    }

    #[test]
    fn multiple_unknowns_are_resolved_independently() {
        let nmt = seq(&["koupil", UNK_TOKEN, "včera", UNK_TOKEN, "ráno"]);
        let pbsmt = seq(&["koupil", "auto", "včera", "brzy", "ráno"]);
        let out = replace_unknowns(&nmt, &pbsmt, &UwrConfig::default());
        assert_eq!(out.tokens, vec!["koupil", "auto", "včera", "brzy", "ráno"]);
    }
}
