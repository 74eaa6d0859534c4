//! Monolingual word embeddings and their cross-lingual alignment.
//!
//! Embeddings are induced from co-occurrence statistics (positive pointwise
//! mutual information factorized by truncated SVD), which is deterministic
//! and needs no external training; vectors trained elsewhere can be loaded
//! from the standard text format instead.

mod align;

pub use align::{
    align_unsupervised, build_seed_dictionary, csls_all_pairs, csls_neighbors, procrustes_align,
    AlignmentMap,
};

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A vocabulary with one unit-norm dense vector per word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    lang: String,
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    /// |vocab| × dim, rows L2-normalized.
    vectors: DMatrix<f64>,
}

impl EmbeddingSpace {
    /// Wraps a vocabulary and row-per-word matrix, normalizing every row.
    pub fn new(lang: &str, vocab: Vec<String>, mut vectors: DMatrix<f64>) -> Result<Self> {
        if vocab.len() != vectors.nrows() {
            return Err(Error::contract(format!(
                "{} vocabulary entries but {} vector rows",
                vocab.len(),
                vectors.nrows()
            )));
        }
        let mut index = HashMap::new();
        for (i, word) in vocab.iter().enumerate() {
            if index.insert(word.clone(), i).is_some() {
                return Err(Error::contract(format!(
                    "duplicate vocabulary entry `{word}`"
                )));
            }
        }
        for mut row in vectors.row_iter_mut() {
            let norm = row.norm();
            if norm < 1e-12 {
                return Err(Error::contract("zero embedding vector"));
            }
            // Skip the division for rows that are already unit norm, so
            // normalization is idempotent and save/load round-trips are
            // bit-exact.
            if (norm - 1.0).abs() > 1e-12 {
                row /= norm;
            }
        }
        Ok(EmbeddingSpace {
            lang: lang.to_string(),
            vocab,
            index,
            vectors,
        })
    }

    pub fn lang(&self) -> &str {
        &self.lang
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn word(&self, i: usize) -> &str {
        &self.vocab[i]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Cosine similarity of two in-vocabulary words.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let (i, j) = (self.index_of(a)?, self.index_of(b)?);
        Some(self.vectors.row(i).dot(&self.vectors.row(j)))
    }

    /// Writes the space in the standard text format: a `count dim` header
    /// line, then one `word v1 … vd` line per word. Values use the shortest
    /// decimal representation that parses back to the same float.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{} {}", self.len(), self.dim()).map_err(|e| Error::io(path, e))?;
        for (i, word) in self.vocab.iter().enumerate() {
            write!(w, "{word}").map_err(|e| Error::io(path, e))?;
            for v in self.vectors.row(i).iter() {
                write!(w, " {v}").map_err(|e| Error::io(path, e))?;
            }
            writeln!(w).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads the text format written by [`save`](Self::save); also accepts
    /// externally trained vectors, which are re-normalized on load.
    pub fn load(lang: &str, path: &Path) -> Result<EmbeddingSpace> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line.map_err(|e| Error::io(path, e))?,
            None => return Err(Error::parse(path, 1, "missing `count dim` header")),
        };
        let mut parts = header.split_whitespace();
        let (count, dim) = match (
            parts.next().and_then(|s| s.parse::<usize>().ok()),
            parts.next().and_then(|s| s.parse::<usize>().ok()),
        ) {
            (Some(c), Some(d)) if parts.next().is_none() => (c, d),
            _ => return Err(Error::parse(path, 1, "expected header `count dim`")),
        };
        let mut vocab = Vec::with_capacity(count);
        let mut data = Vec::with_capacity(count * dim);
        for (lineno, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-empty line has a first field");
            let values: Vec<f64> = fields
                .map(|s| {
                    s.parse::<f64>().map_err(|_| {
                        Error::parse(path, lineno + 1, format!("bad vector value `{s}`"))
                    })
                })
                .collect::<Result<_>>()?;
            if values.len() != dim {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("expected {dim} values, found {}", values.len()),
                ));
            }
            vocab.push(word.to_string());
            data.extend(values);
        }
        if vocab.len() != count {
            return Err(Error::parse(
                path,
                vocab.len() + 1,
                format!("header declares {count} words, file has {}", vocab.len()),
            ));
        }
        let vectors = DMatrix::from_row_slice(vocab.len(), dim, &data);
        EmbeddingSpace::new(lang, vocab, vectors)
    }
}

/// Induces embeddings from a tokenized corpus: a symmetric-window
/// co-occurrence matrix over words with frequency ≥ `min_count` is turned
/// into positive pointwise mutual information and factorized by truncated
/// SVD; rows of U·√Σ, restricted to the top `dim` components, become the
/// word vectors. Fully deterministic for a given corpus.
pub fn induce_embeddings<I>(
    lang: &str,
    corpus: I,
    dim: usize,
    window: usize,
    min_count: u64,
) -> Result<EmbeddingSpace>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    if dim < 2 {
        return Err(Error::contract(format!("embedding dim {dim} < 2")));
    }
    let sentences: Vec<Vec<String>> = corpus
        .into_iter()
        .map(|line| {
            line.as_ref()
                .split_whitespace()
                .map(str::to_string)
                .collect()
        })
        .filter(|s: &Vec<String>| !s.is_empty())
        .collect();
    if sentences.is_empty() {
        return Err(Error::EmptyCorpus("embedding corpus has no tokens".into()));
    }
    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for sentence in &sentences {
        for token in sentence {
            *freq.entry(token).or_insert(0) += 1;
        }
    }
    let vocab: Vec<String> = freq
        .iter()
        .filter(|(_, &c)| c >= min_count)
        .map(|(&w, _)| w.to_string())
        .collect();
    if vocab.len() < dim {
        return Err(Error::contract(format!(
            "{} words survive min_count={min_count}, fewer than dim={dim}",
            vocab.len()
        )));
    }
    let index: HashMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();

    let n = vocab.len();
    let mut cooc = DMatrix::<f64>::zeros(n, n);
    for sentence in &sentences {
        let ids: Vec<Option<usize>> = sentence
            .iter()
            .map(|t| index.get(t.as_str()).copied())
            .collect();
        for (i, &wi) in ids.iter().enumerate() {
            let Some(wi) = wi else { continue };
            let lo = i.saturating_sub(window);
            let hi = (i + window + 1).min(ids.len());
            for (j, &wj) in ids.iter().enumerate().take(hi).skip(lo) {
                if i == j {
                    continue;
                }
                if let Some(wj) = wj {
                    cooc[(wi, wj)] += 1.0;
                }
            }
        }
    }

    let total: f64 = cooc.sum();
    if total == 0.0 {
        return Err(Error::contract(
            "no co-occurrences inside the window; corpus sentences may be single tokens",
        ));
    }
    let row_sums: Vec<f64> = (0..n).map(|i| cooc.row(i).sum()).collect();
    let mut ppmi = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let c = cooc[(i, j)];
            if c > 0.0 && row_sums[i] > 0.0 && row_sums[j] > 0.0 {
                let pmi = (c * total / (row_sums[i] * row_sums[j])).ln();
                if pmi > 0.0 {
                    ppmi[(i, j)] = pmi;
                }
            }
        }
    }

    let svd = ppmi.svd(true, false);
    let u = svd.u.as_ref().expect("U requested from SVD");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("singular values are finite")
            .then(a.cmp(&b))
    });

    let mut vectors = DMatrix::<f64>::zeros(n, dim);
    for (k, &col) in order.iter().take(dim).enumerate() {
        let sigma = svd.singular_values[col].max(0.0).sqrt();
        // Fix the SVD sign ambiguity: the largest-magnitude entry of each
        // component is made positive.
        let mut max_abs = 0.0;
        let mut flip = 1.0;
        for i in 0..n {
            let v = u[(i, col)];
            if v.abs() > max_abs {
                max_abs = v.abs();
                flip = if v < 0.0 { -1.0 } else { 1.0 };
            }
        }
        for i in 0..n {
            vectors[(i, k)] = flip * u[(i, col)] * sigma;
        }
    }
    // Words with no positive PMI mass get a fixed fallback direction so the
    // unit-norm invariant still holds.
    for mut row in vectors.row_iter_mut() {
        if row.norm() < 1e-12 {
            row[0] = 1.0;
        }
    }
    EmbeddingSpace::new(lang, vocab, vectors)
}
