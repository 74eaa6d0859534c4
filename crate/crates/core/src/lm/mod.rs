//! Modified Kneser-Ney n-gram language models: training, incremental
//! scoring for the decoder, perplexity, and the ARPA text format.
//!
//! Probabilities are base-10 logarithms throughout, matching ARPA.

mod arpa;

pub use arpa::{read_arpa, write_arpa};

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::textprep::TokenSeq;

/// Sentence-start symbol; it is never predicted and carries a fixed −99
/// placeholder log-probability in serialized models.
pub const BOS: &str = "<s>";
/// Sentence-end symbol; predicted like a regular word.
pub const EOS: &str = "</s>";
/// Stand-in for words below the training frequency threshold, and for all
/// out-of-vocabulary words at query time.
pub const UNK: &str = "<unk>";

const BOS_LOGPROB: f64 = -99.0;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    logprob: f64,
    /// log10 backoff weight of this n-gram as a context; 0 when it never
    /// occurs as a context.
    bow: f64,
}

/// A backoff n-gram model over an interned vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    /// id → surface; ids 0,1,2 are `<s>`, `</s>`, `<unk>`.
    vocab: Vec<String>,
    ids: HashMap<String, u32>,
    /// tables[k] holds the (k+1)-grams.
    tables: Vec<HashMap<Box<[u32]>, Entry>>,
    /// Set when the corpus was too small to estimate discounts from
    /// count-of-counts and the fixed 0.75 fallback was used.
    fallback_discounts: bool,
}

/// Scoring context: the most recent (order−1) tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LmState {
    context: Vec<u32>,
}

const BOS_ID: u32 = 0;
const EOS_ID: u32 = 1;
const UNK_ID: u32 = 2;

/// Per-order discount constants for adjusted counts 1, 2 and ≥3.
#[derive(Debug, Clone, Copy)]
struct Discounts {
    d1: f64,
    d2: f64,
    d3plus: f64,
}

impl Discounts {
    const FALLBACK: Discounts = Discounts {
        d1: 0.75,
        d2: 0.75,
        d3plus: 0.75,
    };

    fn apply(&self, count: u64) -> f64 {
        match count {
            0 => 0.0,
            1 => self.d1,
            2 => self.d2,
            _ => self.d3plus,
        }
    }

    /// Estimates the three discounts from the count-of-counts n1..n4.
    /// Returns `None` when any needed count-of-count is zero or a discount
    /// comes out negative — the caller then falls back to 0.75.
    fn estimate(coc: &[u64; 4]) -> Option<Discounts> {
        let [n1, n2, n3, n4] = coc.map(|c| c as f64);
        if coc.contains(&0) {
            return None;
        }
        let y = n1 / (n1 + 2.0 * n2);
        let d = Discounts {
            d1: 1.0 - 2.0 * y * n2 / n1,
            d2: 2.0 - 3.0 * y * n3 / n2,
            d3plus: 3.0 - 4.0 * y * n4 / n3,
        };
        (d.d1 >= 0.0 && d.d2 >= 0.0 && d.d3plus >= 0.0).then_some(d)
    }
}

impl NgramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    /// True when discount estimation fell back to the fixed 0.75 value.
    pub fn used_fallback_discounts(&self) -> bool {
        self.fallback_discounts
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    fn id_or_unk(&self, word: &str) -> u32 {
        self.ids.get(word).copied().unwrap_or(UNK_ID)
    }

    /// The state at a sentence start (context = `<s>`).
    pub fn begin_sentence(&self) -> LmState {
        LmState {
            context: vec![BOS_ID],
        }
    }

    /// A state assembled from explicit context words (out-of-vocabulary
    /// words become `<unk>`, like everywhere else).
    pub fn state_from(&self, context: &[&str]) -> LmState {
        let mut state = LmState::default();
        for word in context {
            state.context.push(self.id_or_unk(word));
        }
        self.truncate(&mut state);
        state
    }

    fn truncate(&self, state: &mut LmState) {
        let keep = self.order.saturating_sub(1);
        let len = state.context.len();
        if len > keep {
            state.context.drain(..len - keep);
        }
    }

    /// log10 P(word | state) under the standard backoff query: the longest
    /// context suffix for which the extended n-gram is listed provides the
    /// probability, and every longer context that failed contributes its
    /// backoff weight.
    pub fn score_word(&self, state: &LmState, word: &str) -> (f64, LmState) {
        let id = self.id_or_unk(word);
        let mut ctx = state.context.as_slice();
        let start = ctx.len().saturating_sub(self.order - 1).min(ctx.len());
        ctx = &ctx[start..];
        let mut bow_sum = 0.0;
        let logprob = loop {
            let mut key = Vec::with_capacity(ctx.len() + 1);
            key.extend_from_slice(ctx);
            key.push(id);
            if let Some(entry) = self.tables[ctx.len()].get(key.as_slice()) {
                break entry.logprob + bow_sum;
            }
            if ctx.is_empty() {
                // Unreachable for trained models (the unigram table always
                // contains `<unk>`), but stay total for hand-built ARPA
                // files missing it.
                break BOS_LOGPROB + bow_sum;
            }
            if let Some(entry) = self.tables[ctx.len() - 1].get(ctx) {
                bow_sum += entry.bow;
            }
            ctx = &ctx[1..];
        };
        let mut next = state.clone();
        next.context.push(id);
        self.truncate(&mut next);
        (logprob, next)
    }

    /// Total log10 probability of a sentence including the `</s>` event,
    /// starting from the `<s>` context.
    pub fn sentence_logprob(&self, seq: &TokenSeq) -> f64 {
        let mut state = self.begin_sentence();
        let mut total = 0.0;
        for token in &seq.tokens {
            let (lp, next) = self.score_word(&state, token);
            total += lp;
            state = next;
        }
        total + self.score_word(&state, EOS).0
    }

    /// Per-token perplexity 10^(−logprob/T) with T counting the tokens plus
    /// the `</s>` event.
    pub fn perplexity(&self, seq: &TokenSeq) -> Result<f64> {
        if seq.is_empty() {
            return Err(Error::contract(
                "cannot compute perplexity of an empty sentence",
            ));
        }
        let t = (seq.len() + 1) as f64;
        Ok(10f64.powf(-self.sentence_logprob(seq) / t))
    }

    /// Iterates all n-grams of one order (1-based) as (tokens, logprob,
    /// bow), sorted by token strings — the serialization order.
    fn sorted_entries(&self, order: usize) -> Vec<(Vec<&str>, f64, f64)> {
        let mut rows: Vec<(Vec<&str>, f64, f64)> = self.tables[order - 1]
            .iter()
            .map(|(key, entry)| {
                let toks = key
                    .iter()
                    .map(|&id| self.vocab[id as usize].as_str())
                    .collect();
                (toks, entry.logprob, entry.bow)
            })
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        rows
    }
}

/// Trains a modified Kneser-Ney model of the given order. Words occurring
/// fewer than `min_count` times become `<unk>` before counting. The highest
/// order keeps raw counts; lower orders use continuation counts (number of
/// distinct preceding word types), except for `<s>`-initial n-grams which
/// are never preceded and keep raw counts. Discounts come from
/// count-of-counts per order, falling back to a fixed 0.75 (with a flag on
/// the model) when the corpus is too small to estimate them.
pub fn train_lm<I>(corpus: I, order: usize, min_count: u64) -> Result<NgramModel>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    if order < 1 {
        return Err(Error::contract("language-model order must be ≥ 1"));
    }
    let raw_sentences: Vec<Vec<String>> = corpus
        .into_iter()
        .map(|line| {
            line.as_ref()
                .split_whitespace()
                .map(str::to_string)
                .collect()
        })
        .filter(|s: &Vec<String>| !s.is_empty())
        .collect();
    if raw_sentences.is_empty() {
        return Err(Error::EmptyCorpus(
            "language-model training corpus has no tokens".into(),
        ));
    }

    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for sentence in &raw_sentences {
        for token in sentence {
            *freq.entry(token).or_insert(0) += 1;
        }
    }
    let mut vocab: Vec<String> = vec![BOS.into(), EOS.into(), UNK.into()];
    let mut ids: HashMap<String, u32> = vocab
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i as u32))
        .collect();
    for (&word, &count) in &freq {
        if count >= min_count && !ids.contains_key(word) {
            ids.insert(word.to_string(), vocab.len() as u32);
            vocab.push(word.to_string());
        }
    }

    let sentences: Vec<Vec<u32>> = raw_sentences
        .iter()
        .map(|sentence| {
            let mut s = Vec::with_capacity(sentence.len() + 2);
            s.push(BOS_ID);
            s.extend(
                sentence
                    .iter()
                    .map(|t| ids.get(t.as_str()).copied().unwrap_or(UNK_ID)),
            );
            s.push(EOS_ID);
            s
        })
        .collect();

    // Raw counts for every order over the padded sentences.
    let mut raw: Vec<HashMap<Box<[u32]>, u64>> = vec![HashMap::new(); order];
    for sentence in &sentences {
        for k in 1..=order {
            for window in sentence.windows(k) {
                *raw[k - 1].entry(window.into()).or_insert(0) += 1;
            }
        }
    }

    // Counts actually modeled per order: raw at the highest order,
    // continuation counts below (with the `<s>` exception).
    let mut counts: Vec<HashMap<Box<[u32]>, u64>> = Vec::with_capacity(order);
    for k in 1..=order {
        if k == order {
            counts.push(raw[k - 1].clone());
            continue;
        }
        let mut table: HashMap<Box<[u32]>, u64> = HashMap::new();
        for key in raw[k - 1].keys() {
            if key[0] == BOS_ID {
                table.insert(key.clone(), raw[k - 1][key]);
            }
        }
        for longer in raw[k].keys() {
            let suffix: Box<[u32]> = longer[1..].into();
            if suffix[0] != BOS_ID {
                *table.entry(suffix).or_insert(0) += 1;
            }
        }
        counts.push(table);
    }
    // `<unk>` is always predictable, even when nothing mapped to it.
    counts[0].entry(Box::from([UNK_ID])).or_insert(0);

    let mut fallback = false;
    let discounts: Vec<Discounts> = (1..=order)
        .map(|k| {
            let mut coc = [0u64; 4];
            for (key, &count) in &counts[k - 1] {
                if k == 1 && key[0] == BOS_ID {
                    continue;
                }
                if (1..=4).contains(&count) {
                    coc[count as usize - 1] += 1;
                }
            }
            Discounts::estimate(&coc).unwrap_or_else(|| {
                fallback = true;
                Discounts::FALLBACK
            })
        })
        .collect();

    // Interpolated probabilities, lowest order first.
    let mut probs: Vec<HashMap<Box<[u32]>, f64>> = Vec::with_capacity(order);
    // γ (the backoff mass) per context of each order ≥ 2, needed both for
    // interpolation and as the stored backoff weight of the context.
    let mut gammas: Vec<HashMap<Box<[u32]>, f64>> = vec![HashMap::new(); order];

    // Unigrams: interpolate with the uniform distribution over the
    // predictable vocabulary (everything but `<s>`).
    let d1 = &discounts[0];
    let predictable: Vec<&Box<[u32]>> = counts[0].keys().filter(|k| k[0] != BOS_ID).collect();
    let v_pred = predictable.len() as f64;
    let total: u64 = predictable.iter().map(|k| counts[0][k.as_ref()]).sum();
    let total = total as f64;
    let mut class_mass = [0.0f64; 3];
    for key in &predictable {
        match counts[0][key.as_ref()] {
            0 => {}
            1 => class_mass[0] += 1.0,
            2 => class_mass[1] += 1.0,
            _ => class_mass[2] += 1.0,
        }
    }
    let gamma1 =
        (d1.d1 * class_mass[0] + d1.d2 * class_mass[1] + d1.d3plus * class_mass[2]) / total;
    let mut p1: HashMap<Box<[u32]>, f64> = HashMap::new();
    for key in &predictable {
        let c = counts[0][key.as_ref()];
        let p = (c as f64 - d1.apply(c)).max(0.0) / total + gamma1 / v_pred;
        p1.insert((*key).clone(), p);
    }
    probs.push(p1);

    for k in 2..=order {
        let dk = &discounts[k - 1];
        // Denominator and discount-class tallies per context.
        let mut ctx_total: HashMap<&[u32], u64> = HashMap::new();
        let mut ctx_classes: HashMap<&[u32], [f64; 3]> = HashMap::new();
        for (key, &c) in &counts[k - 1] {
            let ctx = &key[..k - 1];
            *ctx_total.entry(ctx).or_insert(0) += c;
            let classes = ctx_classes.entry(ctx).or_insert([0.0; 3]);
            match c {
                0 => {}
                1 => classes[0] += 1.0,
                2 => classes[1] += 1.0,
                _ => classes[2] += 1.0,
            }
        }
        let mut pk: HashMap<Box<[u32]>, f64> = HashMap::new();
        let mut gk: HashMap<Box<[u32]>, f64> = HashMap::new();
        for (ctx, &denom) in &ctx_total {
            let classes = ctx_classes[ctx];
            let gamma =
                (dk.d1 * classes[0] + dk.d2 * classes[1] + dk.d3plus * classes[2]) / denom as f64;
            gk.insert((*ctx).into(), gamma);
        }
        for (key, &c) in &counts[k - 1] {
            let ctx = &key[..k - 1];
            let denom = ctx_total[ctx] as f64;
            let gamma = gk[ctx];
            let lower_key: Box<[u32]> = key[1..].into();
            let lower = probs[k - 2]
                .get(&lower_key)
                .copied()
                .expect("every suffix of a counted n-gram is counted");
            let p = (c as f64 - dk.apply(c)).max(0.0) / denom + gamma * lower;
            pk.insert(key.clone(), p);
        }
        probs.push(pk);
        gammas[k - 1] = gk;
    }

    // Assemble the query tables: log10 probabilities plus, for every n-gram
    // that occurs as a context one order up, its log10 backoff weight.
    let mut tables: Vec<HashMap<Box<[u32]>, Entry>> = Vec::with_capacity(order);
    for k in 1..=order {
        let mut table: HashMap<Box<[u32]>, Entry> = HashMap::new();
        for (key, &p) in &probs[k - 1] {
            let bow = if k < order {
                gammas[k].get(key).map_or(0.0, |g| g.log10())
            } else {
                0.0
            };
            table.insert(
                key.clone(),
                Entry {
                    logprob: p.log10(),
                    bow,
                },
            );
        }
        if k == 1 {
            let bos: Box<[u32]> = Box::from([BOS_ID]);
            let bow = if order > 1 {
                gammas[1].get(&bos).map_or(0.0, |g| g.log10())
            } else {
                0.0
            };
            table.insert(
                bos,
                Entry {
                    logprob: BOS_LOGPROB,
                    bow,
                },
            );
        }
        tables.push(table);
    }

    Ok(NgramModel {
        order,
        vocab,
        ids,
        tables,
        fallback_discounts: fallback,
    })
}
