//! Unsupervised phrase-based translation: a unigram phrase table seeded
//! from aligned embedding spaces, monotone beam decoding against a language
//! model, IBM Model 1 re-estimation from pseudo-parallel data, and the
//! iterative back-translation loop tying it together.

mod backtranslate;
mod decoder;
mod ibm1;

pub use backtranslate::{
    backtranslate_iterate, BacktranslateOptions, BacktranslateOutcome, IterationReport,
};
pub use decoder::{decode, DecoderConfig, Hypothesis};
pub use ibm1::train_model1;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::embeddings::{csls_all_pairs, AlignmentMap, EmbeddingSpace};
use crate::error::{Error, Result};

/// One translation option for a source word.
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseCandidate {
    pub target: String,
    /// P(source | target), the decoder's translation-model feature.
    pub p_src_given_tgt: f64,
    /// P(target | source); candidate lists are sorted by this, descending.
    pub p_tgt_given_src: f64,
}

/// A unigram phrase table: source word → scored target candidates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhraseTable {
    entries: BTreeMap<String, Vec<PhraseCandidate>>,
}

/// Phrases are single words throughout this system.
pub const MAX_PHRASE_LEN: usize = 1;

fn sort_candidates(candidates: &mut [PhraseCandidate]) {
    candidates.sort_by(|a, b| {
        b.p_tgt_given_src
            .partial_cmp(&a.p_tgt_given_src)
            .expect("probabilities are finite")
            .then_with(|| a.target.cmp(&b.target))
    });
}

impl PhraseTable {
    /// Builds a table from per-source candidate lists, sorting each list by
    /// p_tgt_given_src descending (ties by target word).
    pub fn from_entries(map: BTreeMap<String, Vec<PhraseCandidate>>) -> PhraseTable {
        let mut table = PhraseTable { entries: map };
        for candidates in table.entries.values_mut() {
            sort_candidates(candidates);
        }
        table
    }

    pub fn candidates(&self, src: &str) -> Option<&[PhraseCandidate]> {
        self.entries.get(src).map(|v| v.as_slice())
    }

    /// The highest-probability translation of `src`, if any.
    pub fn best(&self, src: &str) -> Option<&PhraseCandidate> {
        self.candidates(src).and_then(|c| c.first())
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    /// Number of source entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn candidate_count(&self) -> usize {
        self.entries.values().map(|v| v.len()).sum()
    }

    /// Swaps the translation direction: every (s → t) candidate becomes
    /// (t → s) with its two probabilities exchanged, and the new
    /// p_tgt_given_src values are renormalized per source so the table
    /// invariant (row sums ≤ 1) holds again.
    pub fn invert(&self) -> PhraseTable {
        let mut map: BTreeMap<String, Vec<PhraseCandidate>> = BTreeMap::new();
        for (src, candidates) in &self.entries {
            for c in candidates {
                map.entry(c.target.clone())
                    .or_default()
                    .push(PhraseCandidate {
                        target: src.clone(),
                        p_src_given_tgt: c.p_tgt_given_src,
                        p_tgt_given_src: c.p_src_given_tgt,
                    });
            }
        }
        for candidates in map.values_mut() {
            let total: f64 = candidates.iter().map(|c| c.p_tgt_given_src).sum();
            for c in candidates.iter_mut() {
                c.p_tgt_given_src /= total;
            }
        }
        PhraseTable::from_entries(map)
    }

    /// Writes the table as TSV `src<TAB>tgt<TAB>p_src_given_tgt<TAB>
    /// p_tgt_given_src`, sorted by source and then descending
    /// p_tgt_given_src.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (src, candidates) in &self.entries {
            for c in candidates {
                writeln!(
                    w,
                    "{src}\t{}\t{}\t{}",
                    c.target, c.p_src_given_tgt, c.p_tgt_given_src
                )
                .map_err(|e| Error::io(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<PhraseTable> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut map: BTreeMap<String, Vec<PhraseCandidate>> = BTreeMap::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    "expected `src<TAB>tgt<TAB>p_src_given_tgt<TAB>p_tgt_given_src`",
                ));
            }
            let parse_prob = |s: &str| -> Result<f64> {
                let p: f64 = s.parse().map_err(|_| {
                    Error::parse(path, lineno + 1, format!("bad probability `{s}`"))
                })?;
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::parse(
                        path,
                        lineno + 1,
                        format!("probability {p} outside (0, 1]"),
                    ));
                }
                Ok(p)
            };
            map.entry(fields[0].to_string())
                .or_default()
                .push(PhraseCandidate {
                    target: fields[1].to_string(),
                    p_src_given_tgt: parse_prob(fields[2])?,
                    p_tgt_given_src: parse_prob(fields[3])?,
                });
        }
        Ok(PhraseTable::from_entries(map))
    }
}

/// How a pseudo-parallel sentence pair was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Pbsmt,
    NmtWord,
    NmtSubword,
    External,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::Pbsmt => "pbsmt",
            Provenance::NmtWord => "nmt-word",
            Provenance::NmtSubword => "nmt-subword",
            Provenance::External => "external",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Provenance> {
        match tag {
            "pbsmt" => Some(Provenance::Pbsmt),
            "nmt-word" => Some(Provenance::NmtWord),
            "nmt-subword" => Some(Provenance::NmtSubword),
            "external" => Some(Provenance::External),
            _ => None,
        }
    }
}

/// Aligned sentence pairs produced by translating monolingual text, with a
/// provenance tag per pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PseudoParallelCorpus {
    pub pairs: Vec<(Vec<String>, Vec<String>)>,
    pub provenance: Vec<Provenance>,
}

impl PseudoParallelCorpus {
    pub fn push(&mut self, src: Vec<String>, tgt: Vec<String>, provenance: Provenance) {
        self.pairs.push((src, tgt));
        self.provenance.push(provenance);
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Writes the corpus as two aligned sentence files plus a provenance
    /// sidecar (one tag per line).
    pub fn save(&self, src_path: &Path, tgt_path: &Path, prov_path: &Path) -> Result<()> {
        let write_lines = |path: &Path, lines: Vec<String>| -> Result<()> {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            for line in lines {
                writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
            }
            w.flush().map_err(|e| Error::io(path, e))
        };
        write_lines(
            src_path,
            self.pairs.iter().map(|(s, _)| s.join(" ")).collect(),
        )?;
        write_lines(
            tgt_path,
            self.pairs.iter().map(|(_, t)| t.join(" ")).collect(),
        )?;
        write_lines(
            prov_path,
            self.provenance
                .iter()
                .map(|p| p.tag().to_string())
                .collect(),
        )
    }

    pub fn load(src_path: &Path, tgt_path: &Path, prov_path: &Path) -> Result<Self> {
        let read_lines = |path: &Path| -> Result<Vec<String>> {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            BufReader::new(file)
                .lines()
                .map(|l| l.map_err(|e| Error::io(path, e)))
                .collect()
        };
        let src = read_lines(src_path)?;
        let tgt = read_lines(tgt_path)?;
        let prov = read_lines(prov_path)?;
        if src.len() != tgt.len() || src.len() != prov.len() {
            return Err(Error::contract(format!(
                "pseudo-parallel files disagree on length: {} / {} / {} lines",
                src.len(),
                tgt.len(),
                prov.len()
            )));
        }
        let mut corpus = PseudoParallelCorpus::default();
        for ((s, t), (lineno, p)) in src.into_iter().zip(tgt).zip(prov.into_iter().enumerate()) {
            let provenance = Provenance::from_tag(&p).ok_or_else(|| {
                Error::parse(
                    prov_path,
                    lineno + 1,
                    format!("unknown provenance tag `{p}`"),
                )
            })?;
            corpus.push(
                s.split_whitespace().map(str::to_string).collect(),
                t.split_whitespace().map(str::to_string).collect(),
                provenance,
            );
        }
        Ok(corpus)
    }
}

/// Initializes a unigram phrase table from aligned embedding spaces: each
/// source word's `top_k` CSLS neighbors become its candidates, with
/// p_tgt_given_src = softmax(temperature · CSLS) over those neighbors. The
/// p_src_given_tgt column comes from the reverse-direction retrieval — the
/// softmax the target word's own CSLS row (over the full source vocabulary)
/// assigns to the source word.
pub fn init_phrase_table(
    src: &EmbeddingSpace,
    map: &AlignmentMap,
    tgt: &EmbeddingSpace,
    top_k: usize,
    temperature: f64,
    k_csls: usize,
) -> Result<PhraseTable> {
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::contract(
            "cannot initialize a phrase table from an empty vocabulary",
        ));
    }
    if top_k < 1 || temperature <= 0.0 {
        return Err(Error::contract("top_k must be ≥ 1 and temperature > 0"));
    }
    let forward = csls_all_pairs(src, map, tgt, k_csls)?;
    let reverse = csls_all_pairs(tgt, &map.inverse(), src, k_csls)?;

    // Reverse softmax over each target word's full source row.
    let mut rev_softmax = reverse.clone();
    for t in 0..rev_softmax.nrows() {
        let row_max = rev_softmax.row(t).max();
        let mut denom = 0.0;
        for s in 0..rev_softmax.ncols() {
            let e = (temperature * (rev_softmax[(t, s)] - row_max)).exp();
            rev_softmax[(t, s)] = e;
            denom += e;
        }
        for s in 0..rev_softmax.ncols() {
            rev_softmax[(t, s)] /= denom;
        }
    }

    let mut entries: BTreeMap<String, Vec<PhraseCandidate>> = BTreeMap::new();
    for s in 0..src.len() {
        let mut scored: Vec<(usize, f64)> = forward.row(s).iter().copied().enumerate().collect();
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("CSLS scores are finite")
                .then(a.0.cmp(&b.0))
        });
        scored.truncate(top_k);
        let best = scored[0].1;
        let exps: Vec<f64> = scored
            .iter()
            .map(|&(_, score)| (temperature * (score - best)).exp())
            .collect();
        let denom: f64 = exps.iter().sum();
        let candidates = scored
            .iter()
            .zip(&exps)
            .map(|(&(t, _), &e)| PhraseCandidate {
                target: tgt.word(t).to_string(),
                p_src_given_tgt: rev_softmax[(t, s)].max(1e-300),
                p_tgt_given_src: e / denom,
            })
            .collect();
        entries.insert(src.word(s).to_string(), candidates);
    }
    Ok(PhraseTable::from_entries(entries))
}

/// Fraction of lexicon entries whose source word is in the table with the
/// expected translation ranked first. Lexicon sources missing from the
/// table count as wrong.
pub fn lexicon_accuracy(table: &PhraseTable, lexicon: &BTreeMap<String, String>) -> f64 {
    if lexicon.is_empty() {
        return 0.0;
    }
    let correct = lexicon
        .iter()
        .filter(|(src, expected)| table.best(src).is_some_and(|c| &&c.target == expected))
        .count();
    correct as f64 / lexicon.len() as f64
}

/// Reads a ground-truth lexicon file of `src<TAB>tgt` lines.
pub fn load_lexicon(path: &Path) -> Result<BTreeMap<String, String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lexicon = BTreeMap::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let (src, tgt) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, lineno + 1, "expected `src<TAB>tgt`"))?;
        lexicon.insert(src.to_string(), tgt.to_string());
    }
    Ok(lexicon)
}

/// Deterministic weighted mix of pseudo-parallel corpora: source `i`
/// contributes round(ratio_i · n_i) pairs — a seeded sample without
/// replacement when the quota is below n_i, whole copies plus a sampled
/// remainder when above — and the streams are interleaved evenly.
pub fn mix_pseudo_parallel(
    sources: &[PseudoParallelCorpus],
    ratios: &[f64],
    seed: u64,
) -> Result<PseudoParallelCorpus> {
    use rand::SeedableRng;

    if sources.len() != ratios.len() {
        return Err(Error::contract(format!(
            "{} corpora but {} ratios",
            sources.len(),
            ratios.len()
        )));
    }
    if ratios.iter().any(|&r| r < 0.0 || !r.is_finite()) {
        return Err(Error::contract("mixing ratios must be non-negative"));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    // (position, source index, pair index) for every selected pair.
    let mut placed: Vec<(f64, usize, usize)> = Vec::new();
    for (i, (corpus, &ratio)) in sources.iter().zip(ratios).enumerate() {
        let n = corpus.len();
        let quota = (ratio * n as f64).round() as usize;
        if n == 0 || quota == 0 {
            continue;
        }
        let mut take: Vec<usize> = Vec::with_capacity(quota);
        for _ in 0..quota / n {
            take.extend(0..n);
        }
        let remainder = quota % n;
        if remainder > 0 {
            let mut extra: Vec<usize> = rand::seq::index::sample(&mut rng, n, remainder).into_vec();
            extra.sort_unstable();
            take.extend(extra);
        }
        for (j, &pair_idx) in take.iter().enumerate() {
            // Even spread over [0,1): the j-th of k selected pairs sits at
            // (j+0.5)/k, so streams interleave proportionally.
            placed.push(((j as f64 + 0.5) / take.len() as f64, i, pair_idx));
        }
    }
    placed.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("positions are finite")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut out = PseudoParallelCorpus::default();
    for (_, i, j) in placed {
        let (s, t) = sources[i].pairs[j].clone();
        out.push(s, t, sources[i].provenance[j]);
    }
    Ok(out)
}
