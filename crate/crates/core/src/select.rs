//! Candidate selection: language-model perplexity rescoring of n-best
//! lists, and ensembling across systems by pooling each system's best
//! candidates and keeping the one the language model likes most.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::lm::NgramModel;
use crate::textprep::TokenSeq;

/// One translation hypothesis inside a candidate set.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub tokens: TokenSeq,
    /// Which system produced it (e.g. `pbsmt`).
    pub system: String,
    /// 1-based rank within its system's n-best list.
    pub rank: usize,
    /// Decoder score, when the producing system reported one.
    pub score: Option<f64>,
    /// Per-token perplexity, filled by `rescore`.
    pub ppl: Option<f64>,
}

/// All candidates for one source sentence from one system.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub source_id: usize,
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn new(source_id: usize) -> Self {
        CandidateSet {
            source_id,
            candidates: Vec::new(),
        }
    }
}

fn candidate_ppl(candidate: &Candidate, lm: &NgramModel) -> f64 {
    // Empty hypotheses cannot be scored; rank them last instead of failing.
    lm.perplexity(&candidate.tokens).unwrap_or(f64::INFINITY)
}

/// Computes per-token perplexity for every candidate and sorts the set
/// ascending by it; ties keep the original rank order.
pub fn rescore(set: &CandidateSet, lm: &NgramModel) -> CandidateSet {
    let mut out = set.clone();
    for candidate in &mut out.candidates {
        candidate.ppl = Some(candidate_ppl(candidate, lm));
    }
    out.candidates.sort_by(|a, b| {
        a.ppl
            .unwrap()
            .partial_cmp(&b.ppl.unwrap())
            .expect("perplexities are never NaN")
            .then_with(|| a.rank.cmp(&b.rank))
    });
    out
}

/// Pools the `top_n_per_system` best-ranked candidates from each system's
/// set, rescores the pool, and returns the minimum-perplexity hypothesis.
/// All sets must describe the same source sentence.
pub fn ensemble(
    sets: &[CandidateSet],
    lm: &NgramModel,
    top_n_per_system: usize,
) -> Result<TokenSeq> {
    let Some(first) = sets.first() else {
        return Err(Error::contract("ensemble needs at least one candidate set"));
    };
    if let Some(other) = sets.iter().find(|s| s.source_id != first.source_id) {
        return Err(Error::contract(format!(
            "candidate sets disagree on the source sentence: {} vs {}",
            first.source_id, other.source_id
        )));
    }
    let mut pool = CandidateSet::new(first.source_id);
    for set in sets {
        let mut ranked = set.candidates.clone();
        ranked.sort_by_key(|c| c.rank);
        pool.candidates
            .extend(ranked.into_iter().take(top_n_per_system));
    }
    if pool.candidates.is_empty() {
        return Err(Error::contract("ensemble pool is empty"));
    }
    let rescored = rescore(&pool, lm);
    Ok(rescored.candidates[0].tokens.clone())
}

/// Writes candidate sets as `source_id<TAB>system<TAB>rank<TAB>tokens`
/// lines, tokens space-separated.
pub fn write_candidate_file(path: &Path, sets: &[CandidateSet]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for set in sets {
        for c in &set.candidates {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                set.source_id,
                c.system,
                c.rank,
                c.tokens.tokens.join(" ")
            )
            .map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a candidate file back into per-(source, system) sets, ordered by
/// source id and then system name, with candidates sorted by rank.
pub fn read_candidate_file(path: &Path) -> Result<Vec<CandidateSet>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut grouped: BTreeMap<(usize, String), Vec<Candidate>> = BTreeMap::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(4, '\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                lineno + 1,
                "expected `source_id<TAB>system<TAB>rank<TAB>tokens`",
            ));
        }
        let source_id: usize = fields[0].parse().map_err(|_| {
            Error::parse(path, lineno + 1, format!("bad source id `{}`", fields[0]))
        })?;
        let rank: usize = fields[2]
            .parse()
            .map_err(|_| Error::parse(path, lineno + 1, format!("bad rank `{}`", fields[2])))?;
        let tokens: Vec<String> = fields[3].split_whitespace().map(str::to_string).collect();
        grouped
            .entry((source_id, fields[1].to_string()))
            .or_default()
            .push(Candidate {
                tokens: TokenSeq::from_tokens(tokens),
                system: fields[1].to_string(),
                rank,
                score: None,
                ppl: None,
            });
    }
    Ok(grouped
        .into_iter()
        .map(|((source_id, _), mut candidates)| {
            candidates.sort_by_key(|c| c.rank);
            CandidateSet {
                source_id,
                candidates,
            }
        })
        .collect())
}
