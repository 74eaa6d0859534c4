//! Brute-force modified Kneser-Ney reference model, kept deliberately
//! naive — string-keyed maps, recursion, linear-space probabilities — so it
//! shares no code or structure with the crate's trainer. The estimator:
//! words under the frequency threshold become `<unk>`; sentences are padded
//! with `<s>`/`</s>`; the top order keeps raw counts while lower orders use
//! continuation counts (distinct extending word types), except `<s>`-initial
//! grams which keep raw counts; three discount constants per order come from
//! the count-of-counts (falling back to 0.75); each order interpolates with
//! the next lower one, the unigrams with the uniform distribution.

use std::collections::{BTreeMap, BTreeSet};

const BOS: &str = "<s>";
const EOS: &str = "</s>";
const UNK: &str = "<unk>";

pub struct KnOracle {
    order: usize,
    /// Words the model can predict: everything counted except `<s>`.
    predictable: BTreeSet<String>,
    /// modeled[k-1]: k-gram → adjusted count.
    modeled: Vec<BTreeMap<Vec<String>, u64>>,
    /// (D1, D2, D3+) per order.
    discounts: Vec<(f64, f64, f64)>,
}

impl KnOracle {
    pub fn train(corpus: &[&str], order: usize, min_count: u64) -> KnOracle {
        assert!(order >= 1, "order must be positive");
        let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
        for line in corpus {
            for tok in line.split_whitespace() {
                *freq.entry(tok).or_insert(0) += 1;
            }
        }
        let keep: BTreeSet<&str> = freq
            .iter()
            .filter(|&(_, &c)| c >= min_count)
            .map(|(&w, _)| w)
            .collect();

        let sentences: Vec<Vec<String>> = corpus
            .iter()
            .filter(|line| line.split_whitespace().next().is_some())
            .map(|line| {
                let mut s = vec![BOS.to_string()];
                s.extend(line.split_whitespace().map(|t| {
                    if keep.contains(t) {
                        t.to_string()
                    } else {
                        UNK.to_string()
                    }
                }));
                s.push(EOS.to_string());
                s
            })
            .collect();
        assert!(!sentences.is_empty(), "corpus must not be empty");

        let mut raw: Vec<BTreeMap<Vec<String>, u64>> = vec![BTreeMap::new(); order];
        for s in &sentences {
            for k in 1..=order {
                for window in s.windows(k) {
                    *raw[k - 1].entry(window.to_vec()).or_insert(0) += 1;
                }
            }
        }

        // Raw counts at the top order; below it, `<s>`-initial grams keep
        // raw counts and everything else gets the number of distinct
        // one-word-longer gram types ending in it.
        let mut modeled = raw.clone();
        for k in 1..order {
            let mut table: BTreeMap<Vec<String>, u64> = BTreeMap::new();
            for (gram, &c) in &raw[k - 1] {
                if gram[0] == BOS {
                    table.insert(gram.clone(), c);
                }
            }
            for longer in raw[k].keys() {
                let suffix = longer[1..].to_vec();
                if suffix[0] != BOS {
                    *table.entry(suffix).or_insert(0) += 1;
                }
            }
            modeled[k - 1] = table;
        }
        modeled[0].entry(vec![UNK.to_string()]).or_insert(0);

        let discounts = (1..=order)
            .map(|k| {
                let mut n = [0u64; 4];
                for (gram, &c) in &modeled[k - 1] {
                    if k == 1 && gram[0] == BOS {
                        continue;
                    }
                    if (1..=4).contains(&c) {
                        n[(c - 1) as usize] += 1;
                    }
                }
                if n.contains(&0) {
                    return (0.75, 0.75, 0.75);
                }
                let [n1, n2, n3, n4] = n.map(|x| x as f64);
                let y = n1 / (n1 + 2.0 * n2);
                let d = (
                    1.0 - 2.0 * y * n2 / n1,
                    2.0 - 3.0 * y * n3 / n2,
                    3.0 - 4.0 * y * n4 / n3,
                );
                if d.0 < 0.0 || d.1 < 0.0 || d.2 < 0.0 {
                    (0.75, 0.75, 0.75)
                } else {
                    d
                }
            })
            .collect();

        let predictable = modeled[0]
            .keys()
            .filter(|g| g[0] != BOS)
            .map(|g| g[0].clone())
            .collect();

        KnOracle {
            order,
            predictable,
            modeled,
            discounts,
        }
    }

    /// Everything the model can predict (incl. `</s>` and `<unk>`).
    pub fn predictable_words(&self) -> impl Iterator<Item = &str> {
        self.predictable.iter().map(|s| s.as_str())
    }

    /// All contexts the trained model stores, over every length the query
    /// path can use — useful as exhaustive probe points.
    pub fn seen_contexts(&self) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new()];
        for k in 1..self.order {
            out.extend(self.modeled[k - 1].keys().cloned());
        }
        out
    }

    fn discount(&self, k: usize, count: u64) -> f64 {
        let (d1, d2, d3plus) = self.discounts[k - 1];
        match count {
            0 => 0.0,
            1 => d1,
            2 => d2,
            _ => d3plus,
        }
    }

    /// Total modeled count and discounted mass of the k-grams extending
    /// `ctx`; `None` when `ctx` never occurs as a context at order k.
    fn context_stats(&self, k: usize, ctx: &[String]) -> Option<(f64, f64)> {
        let mut total = 0u64;
        let mut mass = 0.0;
        let mut found = false;
        for (gram, &c) in &self.modeled[k - 1] {
            if gram[..k - 1] == *ctx {
                found = true;
                total += c;
                mass += self.discount(k, c);
            }
        }
        (found && total > 0).then_some((total as f64, mass))
    }

    fn unigram_prob(&self, word: &str) -> f64 {
        let mut total = 0u64;
        let mut mass = 0.0;
        for w in &self.predictable {
            let c = self.modeled[0][&vec![w.clone()]];
            total += c;
            mass += self.discount(1, c);
        }
        let total = total as f64;
        let gamma = mass / total;
        let c = self.modeled[0][&vec![word.to_string()]];
        (c as f64 - self.discount(1, c)).max(0.0) / total + gamma / self.predictable.len() as f64
    }

    fn map_word(&self, word: &str) -> String {
        if word == BOS || self.predictable.contains(word) {
            word.to_string()
        } else {
            UNK.to_string()
        }
    }

    fn prob_mapped(&self, ctx: &[String], word: &str) -> f64 {
        if ctx.is_empty() {
            return self.unigram_prob(word);
        }
        let k = ctx.len() + 1;
        let mut key = ctx.to_vec();
        key.push(word.to_string());
        if let Some(&c) = self.modeled[k - 1].get(&key) {
            let (denom, mass) = self
                .context_stats(k, ctx)
                .expect("a counted gram implies a counted context");
            let gamma = mass / denom;
            (c as f64 - self.discount(k, c)).max(0.0) / denom
                + gamma * self.prob_mapped(&ctx[1..], word)
        } else {
            // Unseen continuation: back off, weighted by the context's
            // leftover mass when the context itself was seen.
            let weight = match self.context_stats(k, ctx) {
                Some((denom, mass)) => mass / denom,
                None => 1.0,
            };
            weight * self.prob_mapped(&ctx[1..], word)
        }
    }

    /// P(word | context) with the same query conventions as the crate's
    /// model: out-of-vocabulary words become `<unk>` and the context is
    /// truncated to the last order−1 tokens.
    pub fn prob(&self, context: &[&str], word: &str) -> f64 {
        let mut ctx: Vec<String> = context.iter().map(|w| self.map_word(w)).collect();
        let keep = self.order - 1;
        if ctx.len() > keep {
            ctx.drain(..ctx.len() - keep);
        }
        self.prob_mapped(&ctx, &self.map_word(word))
    }
}
