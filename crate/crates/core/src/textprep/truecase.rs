//! Frequency truecaser: restores each word to the surface form in which it
//! occurs most often, with a heuristic for sentence-initial capitals.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::textprep::{tokenize, TokenSeq};

/// Surface-form frequency model mapping each lowercased word to the counts
/// of its observed casings.
///
/// Sentence-initial evidence is discounted during training: a capitalized
/// occurrence at the start of a sentence counts towards the lowercase form
/// unless the same capitalized form is also seen mid-sentence. Words whose
/// capitalization was only ever sentence-initial keep a zero-count entry for
/// the capitalized form, which `recase` uses to re-capitalize first tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Truecaser {
    /// lowercased word → surface form → count.
    form_counts: BTreeMap<String, BTreeMap<String, u64>>,
    trained_tokens: u64,
}

fn is_cased(surface: &str) -> bool {
    surface != surface.to_lowercase()
}

impl Truecaser {
    /// Folds a stream of cased sentences into a frequency model.
    pub fn train<I>(lines: I) -> Result<Truecaser>
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        let mut model = Truecaser::default();
        // Sentence-initial capitalized forms are held back until we know
        // whether the same form also occurs mid-sentence.
        let mut pending: BTreeMap<String, u64> = BTreeMap::new();
        for line in lines {
            let seq = tokenize(line.as_ref());
            for (i, surface) in seq.case_map.iter().enumerate() {
                model.trained_tokens += 1;
                if i == 0 && is_cased(surface) {
                    *pending.entry(surface.clone()).or_insert(0) += 1;
                } else {
                    *model.entry(surface) += 1;
                }
            }
        }
        for (surface, count) in pending {
            let confirmed = model
                .form_counts
                .get(&surface.to_lowercase())
                .and_then(|forms| forms.get(&surface))
                .is_some_and(|&c| c > 0);
            if confirmed {
                *model.entry(&surface) += count;
            } else {
                *model.entry(&surface.to_lowercase()) += count;
                // Keep the capitalized form on record so recase can restore
                // sentence-initial capitals.
                model.entry(&surface);
            }
        }
        if model.trained_tokens == 0 {
            return Err(Error::EmptyCorpus(
                "truecaser training corpus has no tokens".into(),
            ));
        }
        Ok(model)
    }

    fn entry(&mut self, surface: &str) -> &mut u64 {
        self.form_counts
            .entry(surface.to_lowercase())
            .or_default()
            .entry(surface.to_string())
            .or_insert(0)
    }

    pub fn trained_tokens(&self) -> u64 {
        self.trained_tokens
    }

    /// The most frequent surface form of `word` (ties broken towards the
    /// lexicographically smaller form), or `None` for unseen words.
    pub fn best_form(&self, word: &str) -> Option<&str> {
        let forms = self.form_counts.get(&word.to_lowercase())?;
        forms
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(surface, _)| surface.as_str())
    }

    /// True when the word was ever observed capitalized at sentence start.
    fn marks_initial_capital(&self, word: &str) -> bool {
        self.form_counts
            .get(&word.to_lowercase())
            .is_some_and(|forms| forms.keys().any(|surface| is_cased(surface)))
    }

    /// Replaces each token by its most frequent surface form, leaving unseen
    /// tokens unchanged, and re-capitalizes the first token when the model
    /// has sentence-initial-capital evidence for it.
    pub fn recase(&self, seq: &TokenSeq) -> TokenSeq {
        let mut out = seq.clone();
        for (i, token) in seq.tokens.iter().enumerate() {
            let mut form = match self.best_form(token) {
                Some(best) => best.to_string(),
                None => token.clone(),
            };
            if i == 0 && self.marks_initial_capital(token) {
                let mut chars = form.chars();
                if let Some(first) = chars.next() {
                    form = first.to_uppercase().chain(chars).collect();
                }
            }
            out.tokens[i] = form.clone();
            out.case_map[i] = form;
        }
        out
    }

    /// Writes the model as `surface<TAB>count` lines grouped by lowercased
    /// key (keys and forms in sorted order, so output is reproducible).
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for forms in self.form_counts.values() {
            for (surface, count) in forms {
                writeln!(w, "{surface}\t{count}").map_err(|e| Error::io(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Truecaser> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut model = Truecaser::default();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let (surface, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, lineno + 1, "expected `surface<TAB>count`"))?;
            let count: u64 = count
                .parse()
                .map_err(|_| Error::parse(path, lineno + 1, format!("bad count `{count}`")))?;
            if surface.is_empty() {
                return Err(Error::parse(path, lineno + 1, "empty surface form"));
            }
            *model.entry(surface) += count;
            model.trained_tokens += count;
        }
        Ok(model)
    }
}
