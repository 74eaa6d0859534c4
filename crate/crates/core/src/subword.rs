//! Byte-pair encoding: learn per-language merge tables, split words into
//! subword units and reassemble them.
//!
//! Symbols during learning and merging are plain character sequences; the
//! end-of-word marker is glued onto each word's final subword when a
//! segmentation is rendered, and stripped again by [`undo_bpe`]. Merges
//! whose concatenation ends with the marker text are never learned, so a
//! marker suffix always means "word ends here" even for pathological words
//! that contain the marker characters themselves.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::textprep::{TokenSeq, DATE_TOKEN, NUMBER_TOKEN};

/// Default end-of-word marker.
pub const EOW_MARKER: &str = "</w>";

/// An ordered list of learned symbol merges for one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    /// Merges in learning order; applying them in this order segments a word.
    pub merges: Vec<(String, String)>,
    /// The merge budget the model was learned with; the symbol vocabulary is
    /// at most the character inventory plus this many merged symbols.
    pub vocab_size_target: usize,
    /// Marker glued onto the final subword of every word.
    pub eow_marker: String,
}

/// Delexicalization placeholders pass through subword splitting as single
/// units; cutting them into characters would destroy the slot round trip.
fn is_atomic(token: &str) -> bool {
    token == NUMBER_TOKEN || token == DATE_TOKEN
}

fn chars_of(word: &str) -> Vec<String> {
    word.chars().map(|c| c.to_string()).collect()
}

fn adjacent_pairs(seg: &[String]) -> Vec<(String, String)> {
    seg.windows(2)
        .map(|w| (w[0].clone(), w[1].clone()))
        .collect()
}

/// Replaces every non-overlapping `left right` occurrence (leftmost first)
/// by the concatenated symbol.
fn merge_once(seg: &[String], left: &str, right: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(seg.len());
    let mut i = 0;
    while i < seg.len() {
        if i + 1 < seg.len() && seg[i] == left && seg[i + 1] == right {
            out.push(format!("{left}{right}"));
            i += 2;
        } else {
            out.push(seg[i].clone());
            i += 1;
        }
    }
    out
}

/// Learns `n_merges` merges over the corpus word-frequency table: each step
/// merges the most frequent adjacent symbol pair, breaking count ties
/// lexicographically on (left, right). Stops early when no pair occurs any
/// more. Pair counts are maintained incrementally and candidates kept in a
/// lazily invalidated heap, so each step touches only the words containing
/// the merged pair.
pub fn learn_bpe<I>(corpus: I, n_merges: usize) -> Result<BpeModel>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    let mut word_freq: BTreeMap<String, i64> = BTreeMap::new();
    for token in corpus {
        let token = token.as_ref();
        if token.is_empty() || is_atomic(token) {
            continue;
        }
        *word_freq.entry(token.to_string()).or_insert(0) += 1;
    }
    if word_freq.is_empty() {
        return Err(Error::EmptyCorpus(
            "subword learning corpus has no tokens".into(),
        ));
    }

    let freqs: Vec<i64> = word_freq.values().copied().collect();
    let mut segs: Vec<Vec<String>> = word_freq.keys().map(|w| chars_of(w)).collect();

    type Pair = (String, String);
    let mut counts: HashMap<Pair, i64> = HashMap::new();
    let mut members: HashMap<Pair, BTreeSet<usize>> = HashMap::new();
    for (idx, seg) in segs.iter().enumerate() {
        for pair in adjacent_pairs(seg) {
            *counts.entry(pair.clone()).or_insert(0) += freqs[idx];
            members.entry(pair).or_default().insert(idx);
        }
    }
    let mut heap: BinaryHeap<(i64, Reverse<Pair>)> = counts
        .iter()
        .map(|(pair, &c)| (c, Reverse(pair.clone())))
        .collect();

    let mut merges: Vec<Pair> = Vec::new();
    while merges.len() < n_merges {
        // Pop until an entry matches the live count for its pair.
        let pair = loop {
            let Some((count, Reverse(pair))) = heap.pop() else {
                break None;
            };
            if count < 1 || counts.get(&pair) != Some(&count) {
                continue;
            }
            if format!("{}{}", pair.0, pair.1).ends_with(EOW_MARKER) {
                // Ineligible: would collide with the end-of-word marker.
                continue;
            }
            break Some(pair);
        };
        let Some(pair) = pair else { break };

        let affected: Vec<usize> = members
            .remove(&pair)
            .unwrap_or_default()
            .into_iter()
            .collect();
        let mut changed: BTreeSet<Pair> = BTreeSet::new();
        for idx in affected {
            let old_pairs = adjacent_pairs(&segs[idx]);
            segs[idx] = merge_once(&segs[idx], &pair.0, &pair.1);
            let new_pairs = adjacent_pairs(&segs[idx]);
            for p in &old_pairs {
                *counts.entry(p.clone()).or_insert(0) -= freqs[idx];
                changed.insert(p.clone());
            }
            for p in &new_pairs {
                *counts.entry(p.clone()).or_insert(0) += freqs[idx];
                changed.insert(p.clone());
            }
            let new_set: BTreeSet<&Pair> = new_pairs.iter().collect();
            for p in old_pairs.iter().collect::<BTreeSet<_>>() {
                if !new_set.contains(p) {
                    if let Some(m) = members.get_mut(p) {
                        m.remove(&idx);
                    }
                }
            }
            for p in new_set {
                members.entry(p.clone()).or_default().insert(idx);
            }
        }
        for p in changed {
            if let Some(&c) = counts.get(&p) {
                if c >= 1 {
                    heap.push((c, Reverse(p)));
                }
            }
        }
        merges.push(pair);
    }

    Ok(BpeModel {
        merges,
        vocab_size_target: n_merges,
        eow_marker: EOW_MARKER.to_string(),
    })
}

impl BpeModel {
    /// Splits one word into its subword symbols (marker not yet attached).
    pub fn segment(&self, word: &str) -> Vec<String> {
        if is_atomic(word) {
            return vec![word.to_string()];
        }
        let mut seg = chars_of(word);
        for (left, right) in &self.merges {
            if seg.len() < 2 {
                break;
            }
            // A merged symbol is always a contiguous substring of the word.
            if !word.contains(&format!("{left}{right}")) {
                continue;
            }
            seg = merge_once(&seg, left, right);
        }
        seg
    }

    /// Writes the merge table: a header line with format version and marker,
    /// then one `left<SPACE>right` line per merge in order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "#bpe v1 {}", self.eow_marker).map_err(|e| Error::io(path, e))?;
        for (left, right) in &self.merges {
            writeln!(w, "{left} {right}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<BpeModel> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line.map_err(|e| Error::io(path, e))?,
            None => return Err(Error::parse(path, 1, "missing merge-table header")),
        };
        let marker = header
            .strip_prefix("#bpe v1 ")
            .ok_or_else(|| Error::parse(path, 1, "expected header `#bpe v1 <marker>`"))?
            .to_string();
        if marker.is_empty() {
            return Err(Error::parse(path, 1, "empty end-of-word marker"));
        }
        let mut merges = Vec::new();
        for (lineno, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let (left, right) = line
                .split_once(' ')
                .ok_or_else(|| Error::parse(path, lineno + 1, "expected `left<SPACE>right`"))?;
            if left.is_empty() || right.is_empty() {
                return Err(Error::parse(path, lineno + 1, "empty merge symbol"));
            }
            merges.push((left.to_string(), right.to_string()));
        }
        Ok(BpeModel {
            vocab_size_target: merges.len(),
            merges,
            eow_marker: marker,
        })
    }
}

/// Splits every token into subword units, gluing the end-of-word marker onto
/// each word's final subword. Slot records do not survive subword splitting
/// and are dropped; the pipeline keeps slots in sidecar files instead.
pub fn apply_bpe(seq: &TokenSeq, model: &BpeModel) -> TokenSeq {
    let mut memo: HashMap<&str, Vec<String>> = HashMap::new();
    let mut out = TokenSeq::default();
    for token in &seq.tokens {
        let pieces = memo
            .entry(token.as_str())
            .or_insert_with(|| model.segment(token));
        for (i, piece) in pieces.iter().enumerate() {
            let rendered = if i + 1 == pieces.len() {
                format!("{piece}{}", model.eow_marker)
            } else {
                piece.clone()
            };
            out.tokens.push(rendered.clone());
            out.case_map.push(rendered);
        }
    }
    out
}

/// Concatenates subword units back into words, closing a word at every
/// token that ends with the marker. A trailing unterminated word is emitted
/// as-is so truncated input still reassembles.
pub fn undo_bpe(seq: &TokenSeq, eow_marker: &str) -> TokenSeq {
    let mut out = TokenSeq::default();
    let mut word = String::new();
    for token in &seq.tokens {
        match token.strip_suffix(eow_marker) {
            Some(stem) => {
                word.push_str(stem);
                out.tokens.push(std::mem::take(&mut word));
            }
            None => word.push_str(token),
        }
    }
    if !word.is_empty() {
        out.tokens.push(word);
    }
    out.case_map = out.tokens.clone();
    out
}
