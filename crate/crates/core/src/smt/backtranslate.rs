//! Iterative back-translation: the two translation directions take turns
//! producing pseudo-parallel data for each other, and Model 1 re-estimates
//! each phrase table from the other direction's output.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::lm::NgramModel;
use crate::smt::{
    decode, lexicon_accuracy, train_model1, DecoderConfig, PhraseTable, Provenance,
    PseudoParallelCorpus,
};

/// Knobs for the back-translation loop.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktranslateOptions {
    /// Full rounds of mutual re-estimation.
    pub iterations: usize,
    /// Sentences sampled from each monolingual corpus per round.
    pub sample_size: usize,
    pub decoder: DecoderConfig,
    /// EM rounds inside each Model 1 re-estimation.
    pub m1_iters: usize,
    /// Candidates kept per source word in re-estimated tables.
    pub table_top_k: usize,
    /// Base seed for the per-round sentence samples.
    pub seed: u64,
}

impl Default for BacktranslateOptions {
    fn default() -> Self {
        BacktranslateOptions {
            iterations: 3,
            sample_size: 2000,
            decoder: DecoderConfig::default(),
            m1_iters: 5,
            table_top_k: 20,
            seed: 0,
        }
    }
}

/// One `key=value` record per completed round (round 0 describes the
/// initial tables), written as blank-line-separated blocks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationReport {
    pub records: Vec<BTreeMap<String, String>>,
}

impl fmt::Display for IterationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, record) in self.records.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            for (key, value) in record {
                writeln!(f, "{key}={value}")?;
            }
        }
        Ok(())
    }
}

impl IterationReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        write!(w, "{self}").map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<IterationReport> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut report = IterationReport::default();
        let mut current: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                if !current.is_empty() {
                    report.records.push(std::mem::take(&mut current));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, lineno + 1, "expected `key=value`"))?;
            current.insert(key.to_string(), value.to_string());
        }
        if !current.is_empty() {
            report.records.push(current);
        }
        Ok(report)
    }
}

/// Result of the back-translation loop: the final table for each direction
/// plus the per-round report.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktranslateOutcome {
    pub table_src_tgt: PhraseTable,
    pub table_tgt_src: PhraseTable,
    pub report: IterationReport,
}

fn sample_indices(rng: &mut rand_chacha::ChaCha8Rng, len: usize, want: usize) -> Vec<usize> {
    let take = want.min(len);
    let mut idx: Vec<usize> = rand::seq::index::sample(rng, len, take).into_vec();
    idx.sort_unstable();
    idx
}

/// Translates the sampled sentences and pairs each translation with its
/// original, translation side first — the resulting corpus trains the
/// direction that produces the originals.
fn synthesize(
    mono: &[Vec<String>],
    indices: &[usize],
    table: &PhraseTable,
    lm: &NgramModel,
    decoder: &DecoderConfig,
) -> PseudoParallelCorpus {
    let mut corpus = PseudoParallelCorpus::default();
    for &i in indices {
        let original = &mono[i];
        if original.is_empty() {
            continue;
        }
        let translated = decode(original, table, lm, decoder)
            .into_iter()
            .next()
            .map(|(tokens, _)| tokens)
            .unwrap_or_default();
        corpus.push(translated, original.clone(), Provenance::Pbsmt);
    }
    corpus
}

fn record_stats(
    iteration: usize,
    table_st: &PhraseTable,
    table_ts: &PhraseTable,
    lexicon: Option<&BTreeMap<String, String>>,
) -> BTreeMap<String, String> {
    let mut record = BTreeMap::new();
    record.insert("iteration".to_string(), iteration.to_string());
    record.insert("entries_src_tgt".to_string(), table_st.len().to_string());
    record.insert("entries_tgt_src".to_string(), table_ts.len().to_string());
    record.insert(
        "candidates_src_tgt".to_string(),
        table_st.candidate_count().to_string(),
    );
    record.insert(
        "candidates_tgt_src".to_string(),
        table_ts.candidate_count().to_string(),
    );
    if let Some(lexicon) = lexicon {
        record.insert(
            "accuracy_src_tgt".to_string(),
            format!("{:.6}", lexicon_accuracy(table_st, lexicon)),
        );
    }
    record
}

/// Runs the back-translation loop. `table0` translates source→target; the
/// initial target→source table is its probabilistic inversion. Each round
/// samples from both monolingual corpora, re-estimates source→target from
/// target-side samples decoded into the source language, then re-estimates
/// target→source the mirror way using the just-updated table. When a
/// ground-truth `lexicon` is given, each record carries the source→target
/// top-1 accuracy.
pub fn backtranslate_iterate(
    src_mono: &[Vec<String>],
    tgt_mono: &[Vec<String>],
    table0: &PhraseTable,
    lm_src: &NgramModel,
    lm_tgt: &NgramModel,
    opts: &BacktranslateOptions,
    lexicon: Option<&BTreeMap<String, String>>,
) -> Result<BacktranslateOutcome> {
    if opts.iterations == 0 || opts.sample_size == 0 {
        return Err(Error::contract(
            "back-translation needs iterations ≥ 1 and sample_size ≥ 1",
        ));
    }
    if src_mono.is_empty() || tgt_mono.is_empty() {
        return Err(Error::EmptyCorpus(
            "back-translation needs monolingual text on both sides".to_string(),
        ));
    }
    if table0.is_empty() {
        return Err(Error::contract("initial phrase table is empty"));
    }

    let mut table_st = table0.clone();
    let mut table_ts = table0.invert();
    let mut report = IterationReport::default();
    report
        .records
        .push(record_stats(0, &table_st, &table_ts, lexicon));

    for iteration in 1..=opts.iterations {
        let mut rng =
            rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(iteration as u64));
        let tgt_idx = sample_indices(&mut rng, tgt_mono.len(), opts.sample_size);
        let corpus_st = synthesize(tgt_mono, &tgt_idx, &table_ts, lm_src, &opts.decoder);
        table_st = train_model1(&corpus_st, opts.m1_iters, opts.table_top_k)?;

        let src_idx = sample_indices(&mut rng, src_mono.len(), opts.sample_size);
        let corpus_ts = synthesize(src_mono, &src_idx, &table_st, lm_tgt, &opts.decoder);
        table_ts = train_model1(&corpus_ts, opts.m1_iters, opts.table_top_k)?;

        report
            .records
            .push(record_stats(iteration, &table_st, &table_ts, lexicon));
    }

    Ok(BacktranslateOutcome {
        table_src_tgt: table_st,
        table_tgt_src: table_ts,
        report,
    })
}
