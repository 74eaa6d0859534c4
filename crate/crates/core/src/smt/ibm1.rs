//! IBM Model 1: expectation-maximization over word-to-word lexical
//! translation probabilities, run in both directions over pseudo-parallel
//! data to re-estimate the phrase table.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::smt::{PhraseCandidate, PhraseTable, PseudoParallelCorpus};

/// Lowest value the unnormalized reverse probability may take; keeps every
/// stored probability inside (0, 1].
const MIN_PROB: f64 = 1e-10;

fn intern(sentences: &[&Vec<String>]) -> (Vec<String>, Vec<Vec<u32>>) {
    let mut ids: BTreeMap<&str, u32> = BTreeMap::new();
    for sent in sentences {
        for word in *sent {
            let next = ids.len() as u32;
            ids.entry(word).or_insert(next);
        }
    }
    let mut vocab = vec![String::new(); ids.len()];
    for (word, &id) in &ids {
        vocab[id as usize] = word.to_string();
    }
    let interned = sentences
        .iter()
        .map(|sent| sent.iter().map(|w| ids[w.as_str()]).collect())
        .collect();
    (vocab, interned)
}

/// Runs Model 1 EM for `iters` rounds and returns the lexical table
/// `t[cond][gen] = P(gen | cond)` together with the corpus log-likelihood
/// observed at the start of each round. Index `n_cond` of the conditioning
/// side is the NULL word, which every sentence implicitly contains.
fn em_direction(
    conditioning: &[Vec<u32>],
    generated: &[Vec<u32>],
    n_cond: usize,
    iters: usize,
) -> (Vec<BTreeMap<u32, f64>>, Vec<f64>) {
    let null = n_cond;
    // Restrict support to co-occurring pairs (plus NULL with everything).
    let mut t: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); n_cond + 1];
    for (cond, gen) in conditioning.iter().zip(generated) {
        for &g in gen {
            t[null].insert(g, 0.0);
            for &c in cond {
                t[c as usize].insert(g, 0.0);
            }
        }
    }
    for row in &mut t {
        let uniform = 1.0 / row.len().max(1) as f64;
        for p in row.values_mut() {
            *p = uniform;
        }
    }

    let mut likelihoods = Vec::with_capacity(iters);
    for _ in 0..iters {
        let mut counts: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); n_cond + 1];
        let mut totals = vec![0.0f64; n_cond + 1];
        let mut ll = 0.0;
        for (cond, gen) in conditioning.iter().zip(generated) {
            for &g in gen {
                let mut denom = t[null][&g];
                for &c in cond {
                    denom += t[c as usize][&g];
                }
                ll += (denom / (cond.len() + 1) as f64).ln();
                let mut add = |c: usize| {
                    let share = t[c][&g] / denom;
                    *counts[c].entry(g).or_insert(0.0) += share;
                    totals[c] += share;
                };
                add(null);
                for &c in cond {
                    add(c as usize);
                }
            }
        }
        likelihoods.push(ll);
        for (row, (count_row, total)) in t.iter_mut().zip(counts.iter().zip(&totals)) {
            if *total > 0.0 {
                for (g, p) in row.iter_mut() {
                    *p = count_row.get(g).copied().unwrap_or(0.0) / total;
                }
            }
        }
    }
    (t, likelihoods)
}

/// Estimates a phrase table from aligned sentence pairs: Model 1 EM in the
/// source→target direction gives p_tgt_given_src, the reverse direction
/// gives p_src_given_tgt. Each source keeps its `top_k` candidates by
/// p_tgt_given_src, renormalized over the kept set; the reverse column is
/// left unnormalized (floored at 1e-10).
pub fn train_model1(
    corpus: &PseudoParallelCorpus,
    iters: usize,
    top_k: usize,
) -> Result<PhraseTable> {
    if iters == 0 || top_k == 0 {
        return Err(Error::contract(
            "train_model1 needs iters ≥ 1 and top_k ≥ 1",
        ));
    }
    let src_refs: Vec<&Vec<String>> = corpus.pairs.iter().map(|(s, _)| s).collect();
    let tgt_refs: Vec<&Vec<String>> = corpus.pairs.iter().map(|(_, t)| t).collect();
    let (src_vocab, src_sents) = intern(&src_refs);
    let (tgt_vocab, tgt_sents) = intern(&tgt_refs);
    if corpus
        .pairs
        .iter()
        .all(|(s, t)| s.is_empty() || t.is_empty())
    {
        return Err(Error::EmptyCorpus(
            "no sentence pair has tokens on both sides".to_string(),
        ));
    }

    let (fwd, _) = em_direction(&src_sents, &tgt_sents, src_vocab.len(), iters);
    let (rev, _) = em_direction(&tgt_sents, &src_sents, tgt_vocab.len(), iters);

    let mut entries: BTreeMap<String, Vec<PhraseCandidate>> = BTreeMap::new();
    for (s, row) in fwd.iter().enumerate().take(src_vocab.len()) {
        let mut candidates: Vec<(u32, f64)> = row
            .iter()
            .filter(|&(_, &p)| p > 0.0)
            .map(|(&g, &p)| (g, p))
            .collect();
        if candidates.is_empty() {
            continue;
        }
        candidates.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("probabilities are finite")
                .then_with(|| tgt_vocab[a.0 as usize].cmp(&tgt_vocab[b.0 as usize]))
        });
        candidates.truncate(top_k);
        let kept_mass: f64 = candidates.iter().map(|(_, p)| p).sum();
        let list = candidates
            .into_iter()
            .map(|(g, p)| PhraseCandidate {
                target: tgt_vocab[g as usize].clone(),
                p_src_given_tgt: rev[g as usize]
                    .get(&(s as u32))
                    .copied()
                    .unwrap_or(0.0)
                    .clamp(MIN_PROB, 1.0),
                p_tgt_given_src: p / kept_mass,
            })
            .collect();
        entries.insert(src_vocab[s].clone(), list);
    }
    Ok(PhraseTable::from_entries(entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smt::Provenance;

    fn corpus_of(pairs: &[(&str, &str)]) -> PseudoParallelCorpus {
        let mut c = PseudoParallelCorpus::default();
        for (s, t) in pairs {
            c.push(
                s.split_whitespace().map(str::to_string).collect(),
                t.split_whitespace().map(str::to_string).collect(),
                Provenance::Pbsmt,
            );
        }
        c
    }

    #[test]
    fn overlapping_pairs_disambiguate_alignments() {
        // The second pair pins a→x, which forces b→y through the first.
        let corpus = corpus_of(&[("a b", "x y"), ("a", "x")]);
        let table = train_model1(&corpus, 100, 5).unwrap();
        let best_a = table.best("a").unwrap();
        assert_eq!(best_a.target, "x");
        assert!(
            best_a.p_tgt_given_src > 0.9,
            "t(x|a) = {}",
            best_a.p_tgt_given_src
        );
        assert_eq!(table.best("b").unwrap().target, "y");
    }

    #[test]
    fn more_iterations_concentrate_more_mass() {
        let corpus = corpus_of(&[("a b", "x y"), ("a", "x")]);
        let p = |iters| {
            train_model1(&corpus, iters, 5)
                .unwrap()
                .best("a")
                .unwrap()
                .p_tgt_given_src
        };
        let (p1, p5, p50) = (p(1), p(5), p(50));
        assert!(p5 > p1, "{p5} vs {p1}");
        assert!(p50 > p5, "{p50} vs {p5}");
    }

    #[test]
    fn single_pair_is_certain() {
        let corpus = corpus_of(&[("a", "x")]);
        let table = train_model1(&corpus, 3, 5).unwrap();
        let best = table.best("a").unwrap();
        assert_eq!(best.target, "x");
        assert_eq!(best.p_tgt_given_src, 1.0);
        assert_eq!(best.p_src_given_tgt, 1.0);
    }

    #[test]
    fn em_log_likelihood_never_decreases() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let words = ["a", "b", "c", "d", "e", "f"];
        let mut pairs = Vec::new();
        for _ in 0..20 {
            let len = rng.random_range(1..=4usize);
            let s: Vec<&str> = (0..len).map(|_| words[rng.random_range(0..6)]).collect();
            let t: Vec<&str> = (0..len).map(|_| words[rng.random_range(0..6)]).collect();
            pairs.push((s.join(" "), t.join(" ")));
        }
        let pair_refs: Vec<(&str, &str)> = pairs
            .iter()
            .map(|(s, t)| (s.as_str(), t.as_str()))
            .collect();
        let corpus = corpus_of(&pair_refs);
        let src_refs: Vec<&Vec<String>> = corpus.pairs.iter().map(|(s, _)| s).collect();
        let tgt_refs: Vec<&Vec<String>> = corpus.pairs.iter().map(|(_, t)| t).collect();
        let (src_vocab, src_sents) = intern(&src_refs);
        let (_, tgt_sents) = intern(&tgt_refs);
        let (_, ll) = em_direction(&src_sents, &tgt_sents, src_vocab.len(), 25);
        for w in ll.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-9,
                "likelihood dropped: {} → {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn top_k_prunes_and_renormalizes() {
        let corpus = corpus_of(&[("a", "v"), ("a", "w"), ("a", "x"), ("a", "y"), ("a", "z")]);
        let table = train_model1(&corpus, 2, 2).unwrap();
        let candidates = table.candidates("a").unwrap();
        assert_eq!(candidates.len(), 2);
        let total: f64 = candidates.iter().map(|c| c.p_tgt_given_src).sum();
        approx::assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn probabilities_stay_in_range() {
        let corpus = corpus_of(&[("a b c", "x y"), ("b c", "y z"), ("a", "x")]);
        let table = train_model1(&corpus, 10, 20).unwrap();
        for src in table.sources() {
            let mut total = 0.0;
            for c in table.candidates(src).unwrap() {
                assert!(c.p_tgt_given_src > 0.0 && c.p_tgt_given_src <= 1.0);
                assert!(c.p_src_given_tgt > 0.0 && c.p_src_given_tgt <= 1.0);
                total += c.p_tgt_given_src;
            }
            assert!(total <= 1.0 + 1e-6);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = corpus_of(&[("a b", "x y"), ("b c", "y z"), ("c a", "z x")]);
        let t1 = train_model1(&corpus, 8, 3).unwrap();
        let t2 = train_model1(&corpus, 8, 3).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(train_model1(&PseudoParallelCorpus::default(), 5, 5).is_err());
        let corpus = corpus_of(&[("", "x"), ("a", "")]);
        assert!(train_model1(&corpus, 5, 5).is_err());
        let ok = corpus_of(&[("a", "x")]);
        assert!(train_model1(&ok, 0, 5).is_err());
        assert!(train_model1(&ok, 5, 0).is_err());
    }
}
