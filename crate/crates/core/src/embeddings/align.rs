//! Cross-lingual alignment of two embedding spaces without parallel data:
//! identical-string seeding, orthogonal Procrustes solving, and
//! cross-domain similarity local scaling (CSLS) retrieval.

use nalgebra::DMatrix;

use super::EmbeddingSpace;
use crate::error::{Error, Result};

/// An orthogonal map from a source embedding space into a target space,
/// together with the word pairs it was solved from.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMap {
    /// d × d orthogonal matrix; a source column vector x maps to W·x.
    w: DMatrix<f64>,
    pub seed_pairs: Vec<(String, String)>,
}

impl AlignmentMap {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Maps row-stacked source vectors into the target space (X·Wᵀ).
    pub fn apply_rows(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x * self.w.transpose()
    }

    /// The reverse-direction map (Wᵀ, which is W⁻¹ for orthogonal W).
    pub fn inverse(&self) -> AlignmentMap {
        AlignmentMap {
            w: self.w.transpose(),
            seed_pairs: self
                .seed_pairs
                .iter()
                .map(|(s, t)| (t.clone(), s.clone()))
                .collect(),
        }
    }

    /// max |WᵀW − I|, which the Procrustes solution keeps ≤ 1e-5.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.w.ncols();
        let gram = self.w.transpose() * &self.w;
        let mut defect = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((gram[(i, j)] - target).abs());
            }
        }
        defect
    }

    /// Writes the map as a `dim` header, the matrix row by row, and the
    /// seed pairs as `src<TAB>tgt` lines. Values round-trip exactly.
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let emit = |w: &mut std::io::BufWriter<std::fs::File>, s: String| {
            writeln!(w, "{s}").map_err(|e| Error::io(path, e))
        };
        emit(&mut w, format!("{}", self.w.nrows()))?;
        for i in 0..self.w.nrows() {
            let row: Vec<String> = (0..self.w.ncols())
                .map(|j| self.w[(i, j)].to_string())
                .collect();
            emit(&mut w, row.join(" "))?;
        }
        for (s, t) in &self.seed_pairs {
            emit(&mut w, format!("{s}\t{t}"))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<AlignmentMap> {
        use std::io::BufRead;
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = std::io::BufReader::new(file).lines().enumerate();
        let mut next = || -> Result<(usize, String)> {
            match lines.next() {
                Some((i, Ok(line))) => Ok((i + 1, line)),
                Some((_, Err(e))) => Err(Error::io(path, e)),
                None => Err(Error::parse(path, 0, "unexpected end of file")),
            }
        };
        let (lineno, header) = next()?;
        let dim: usize = header
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad dimension `{header}`")))?;
        if dim == 0 {
            return Err(Error::parse(path, lineno, "dimension must be ≥ 1"));
        }
        let mut w = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let (lineno, line) = next()?;
            let values: Vec<&str> = line.split_whitespace().collect();
            if values.len() != dim {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected {dim} values, found {}", values.len()),
                ));
            }
            for (j, value) in values.iter().enumerate() {
                w[(i, j)] = value
                    .parse()
                    .map_err(|_| Error::parse(path, lineno, format!("bad value `{value}`")))?;
            }
        }
        let mut seed_pairs = Vec::new();
        for (lineno, line) in &mut lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let (s, t) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, lineno + 1, "expected `src<TAB>tgt`"))?;
            seed_pairs.push((s.to_string(), t.to_string()));
        }
        Ok(AlignmentMap { w, seed_pairs })
    }
}

/// All identical strings present in both vocabularies (placeholder and digit
/// tokens included), in source-vocabulary order. This is the unsupervised
/// seed for the first Procrustes solve.
pub fn build_seed_dictionary(src: &EmbeddingSpace, tgt: &EmbeddingSpace) -> Vec<(String, String)> {
    src.vocab()
        .iter()
        .filter(|w| tgt.index_of(w).is_some())
        .map(|w| (w.clone(), w.clone()))
        .collect()
}

/// Solves the orthogonal Procrustes problem over the seed pairs: with X and
/// Y row-stacking the source and target seed vectors, W = U·Vᵀ from the SVD
/// of YᵀX minimizes ‖W·Xᵀ − Yᵀ‖ over orthogonal matrices.
pub fn procrustes_align(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    seed: &[(String, String)],
) -> Result<AlignmentMap> {
    if src.dim() != tgt.dim() {
        return Err(Error::contract(format!(
            "dimension mismatch: source {} vs target {}",
            src.dim(),
            tgt.dim()
        )));
    }
    if seed.len() < src.dim() {
        return Err(Error::contract(format!(
            "{} seed pairs but dimension {}; need at least one pair per dimension",
            seed.len(),
            src.dim()
        )));
    }
    let mut x = DMatrix::<f64>::zeros(seed.len(), src.dim());
    let mut y = DMatrix::<f64>::zeros(seed.len(), tgt.dim());
    for (row, (s, t)) in seed.iter().enumerate() {
        let si = src
            .index_of(s)
            .ok_or_else(|| Error::contract(format!("seed word `{s}` not in source vocabulary")))?;
        let ti = tgt
            .index_of(t)
            .ok_or_else(|| Error::contract(format!("seed word `{t}` not in target vocabulary")))?;
        x.row_mut(row).copy_from(&src.vectors().row(si));
        y.row_mut(row).copy_from(&tgt.vectors().row(ti));
    }
    let m = y.transpose() * x;
    let svd = m.svd(true, true);
    let u = svd.u.expect("U requested from SVD");
    let v_t = svd.v_t.expect("Vᵀ requested from SVD");
    Ok(AlignmentMap {
        w: u * v_t,
        seed_pairs: seed.to_vec(),
    })
}

fn mean_of_top_k(values: impl Iterator<Item = f64>, k: usize) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| b.partial_cmp(a).expect("cosines are finite"));
    let k = k.clamp(1, v.len());
    v[..k].iter().sum::<f64>() / k as f64
}

/// The full CSLS score matrix between a mapped source space and a target
/// space: CSLS(x,y) = 2·cos(Wx, y) − r(Wx) − r(y), where r(·) is the mean
/// cosine of the `k_csls` nearest neighbors in the opposite space.
pub fn csls_all_pairs(
    src: &EmbeddingSpace,
    map: &AlignmentMap,
    tgt: &EmbeddingSpace,
    k_csls: usize,
) -> Result<DMatrix<f64>> {
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::contract("empty embedding space"));
    }
    if src.dim() != tgt.dim() {
        return Err(Error::contract("dimension mismatch between spaces"));
    }
    let mapped = map.apply_rows(src.vectors());
    let sims = &mapped * tgt.vectors().transpose();
    let r_src: Vec<f64> = (0..sims.nrows())
        .map(|i| mean_of_top_k(sims.row(i).iter().copied(), k_csls))
        .collect();
    let r_tgt: Vec<f64> = (0..sims.ncols())
        .map(|j| mean_of_top_k(sims.column(j).iter().copied(), k_csls))
        .collect();
    let mut csls = sims;
    for i in 0..csls.nrows() {
        for j in 0..csls.ncols() {
            csls[(i, j)] = 2.0 * csls[(i, j)] - r_src[i] - r_tgt[j];
        }
    }
    Ok(csls)
}

/// The `top_n` target words nearest to `word` under CSLS, scores descending
/// (ties broken by target-vocabulary order). `top_n` is clamped to the
/// target vocabulary size; a word outside the source vocabulary is an error.
pub fn csls_neighbors(
    word: &str,
    src: &EmbeddingSpace,
    map: &AlignmentMap,
    tgt: &EmbeddingSpace,
    k_csls: usize,
    top_n: usize,
) -> Result<Vec<(String, f64)>> {
    let row = src
        .index_of(word)
        .ok_or_else(|| Error::contract(format!("`{word}` not in source vocabulary")))?;
    let csls = csls_all_pairs(src, map, tgt, k_csls)?;
    let mut scored: Vec<(usize, f64)> = csls.row(row).iter().copied().enumerate().collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("CSLS scores are finite")
            .then(a.0.cmp(&b.0))
    });
    Ok(scored
        .into_iter()
        .take(top_n.min(tgt.len()))
        .map(|(j, score)| (tgt.word(j).to_string(), score))
        .collect())
}

fn argmax_row(m: &DMatrix<f64>, i: usize) -> usize {
    let mut best = 0;
    for j in 1..m.ncols() {
        if m[(i, j)] > m[(i, best)] {
            best = j;
        }
    }
    best
}

fn argmax_col(m: &DMatrix<f64>, j: usize) -> usize {
    let mut best = 0;
    for i in 1..m.nrows() {
        if m[(i, j)] > m[(best, j)] {
            best = i;
        }
    }
    best
}

/// Aligns two spaces without any bilingual supervision: identical strings
/// seed a first Procrustes solve, then one refinement round re-seeds from
/// the mutual CSLS nearest neighbors and re-solves. Falls back to the first
/// solve (with a warning) when refinement finds too few mutual pairs.
pub fn align_unsupervised(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    k_csls: usize,
) -> Result<AlignmentMap> {
    let seeds = build_seed_dictionary(src, tgt);
    if seeds.len() < src.dim().max(tgt.dim()) {
        return Err(Error::contract(format!(
            "only {} identical strings shared between vocabularies; need at least {} \
             (the embedding dimension) to seed the alignment",
            seeds.len(),
            src.dim().max(tgt.dim())
        )));
    }
    let first = procrustes_align(src, tgt, &seeds)?;
    let csls = csls_all_pairs(src, &first, tgt, k_csls)?;
    let mutual: Vec<(String, String)> = (0..src.len())
        .filter_map(|i| {
            let j = argmax_row(&csls, i);
            (argmax_col(&csls, j) == i).then(|| (src.word(i).to_string(), tgt.word(j).to_string()))
        })
        .collect();
    if mutual.len() < src.dim() {
        log::warn!(
            "alignment refinement found only {} mutual neighbors (dimension {}); \
             keeping the identical-string solution",
            mutual.len(),
            src.dim()
        );
        return Ok(first);
    }
    procrustes_align(src, tgt, &mutual)
}
