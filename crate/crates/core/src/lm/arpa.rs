//! ARPA text serialization of n-gram models: a `\data\` section declaring
//! per-order counts, one `\k-grams:` section per order with
//! `logprob<TAB>ngram<TAB>backoff` rows, and a closing `\end\`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Entry, NgramModel, BOS, EOS, UNK};
use crate::error::{Error, Result};

const ANON: &str = "<arpa>";

/// Writes the model in ARPA order: orders ascending, n-grams of each order
/// sorted by token strings. The backoff column is present for every order
/// below the highest; floats use the shortest representation that parses
/// back to the identical value, so a round trip is score-exact.
pub fn write_arpa(model: &NgramModel, sink: &mut impl Write) -> Result<()> {
    let io_err = |e| Error::io(ANON, e);
    writeln!(sink, "\\data\\").map_err(io_err)?;
    for k in 1..=model.order {
        writeln!(sink, "ngram {k}={}", model.tables[k - 1].len()).map_err(io_err)?;
    }
    for k in 1..=model.order {
        writeln!(sink, "\n\\{k}-grams:").map_err(io_err)?;
        for (tokens, logprob, bow) in model.sorted_entries(k) {
            let ngram = tokens.join(" ");
            if k < model.order {
                writeln!(sink, "{logprob}\t{ngram}\t{bow}").map_err(io_err)?;
            } else {
                writeln!(sink, "{logprob}\t{ngram}").map_err(io_err)?;
            }
        }
    }
    writeln!(sink, "\n\\end\\").map_err(io_err)?;
    sink.flush().map_err(io_err)
}

/// Parses an ARPA file back into a queryable model. Section headers, entry
/// token counts and the declared per-order totals are validated; errors
/// carry the offending line number.
pub fn read_arpa(source: impl BufRead) -> Result<NgramModel> {
    read_arpa_labeled(source, Path::new(ANON))
}

fn read_arpa_labeled(source: impl BufRead, label: &Path) -> Result<NgramModel> {
    let fail = |line: usize, msg: String| Error::parse(label, line, msg);
    let mut lines = source.lines().enumerate();
    let next_content = |lines: &mut dyn Iterator<Item = (usize, std::io::Result<String>)>|
     -> Result<Option<(usize, String)>> {
        for (idx, line) in lines {
            let line = line.map_err(|e| Error::io(label, e))?;
            if !line.trim().is_empty() {
                return Ok(Some((idx + 1, line)));
            }
        }
        Ok(None)
    };

    match next_content(&mut lines)? {
        Some((_, line)) if line.trim() == "\\data\\" => {}
        Some((no, line)) => return Err(fail(no, format!("expected \\data\\, found `{line}`"))),
        None => return Err(fail(1, "empty ARPA input".into())),
    }

    // Declared counts: `ngram k=N` for k = 1..order, in order.
    let mut declared: Vec<usize> = Vec::new();
    let first_section = loop {
        let Some((no, line)) = next_content(&mut lines)? else {
            return Err(fail(0, "ARPA input ends inside \\data\\ section".into()));
        };
        let trimmed = line.trim();
        if trimmed.starts_with('\\') {
            break (no, trimmed.to_string());
        }
        let rest = trimmed
            .strip_prefix("ngram ")
            .ok_or_else(|| fail(no, format!("expected `ngram k=N`, found `{trimmed}`")))?;
        let (k, count) = rest
            .split_once('=')
            .ok_or_else(|| fail(no, format!("expected `ngram k=N`, found `{trimmed}`")))?;
        let k: usize = k
            .trim()
            .parse()
            .map_err(|_| fail(no, format!("bad n-gram order `{k}`")))?;
        if k != declared.len() + 1 {
            return Err(fail(
                no,
                format!("orders must be declared 1,2,…; found {k}"),
            ));
        }
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| fail(no, format!("bad n-gram count `{count}`")))?;
        declared.push(count);
    };
    if declared.is_empty() {
        return Err(fail(first_section.0, "\\data\\ declares no orders".into()));
    }
    let order = declared.len();

    let mut vocab: Vec<String> = vec![BOS.into(), EOS.into(), UNK.into()];
    let mut ids: HashMap<String, u32> = vocab
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i as u32))
        .collect();
    let intern = |ids: &mut HashMap<String, u32>, vocab: &mut Vec<String>, tok: &str| {
        *ids.entry(tok.to_string()).or_insert_with(|| {
            vocab.push(tok.to_string());
            (vocab.len() - 1) as u32
        })
    };

    let mut tables: Vec<HashMap<Box<[u32]>, Entry>> = Vec::with_capacity(order);
    let mut pending_header = Some(first_section);
    for (k, &expected) in declared.iter().enumerate() {
        let k = k + 1;
        let (no, header) = match pending_header.take() {
            Some(h) => h,
            None => next_content(&mut lines)?
                .ok_or_else(|| fail(0, format!("missing \\{k}-grams: section")))?,
        };
        if header.trim() != format!("\\{k}-grams:") {
            return Err(fail(no, format!("expected \\{k}-grams:, found `{header}`")));
        }
        let mut table: HashMap<Box<[u32]>, Entry> = HashMap::new();
        while table.len() < expected {
            let Some((no, line)) = next_content(&mut lines)? else {
                return Err(fail(
                    0,
                    format!(
                        "\\{k}-grams: declares {expected} entries, input ends after {}",
                        table.len()
                    ),
                ));
            };
            if line.trim().starts_with('\\') {
                return Err(fail(
                    no,
                    format!(
                        "\\{k}-grams: declares {expected} entries, found only {}",
                        table.len()
                    ),
                ));
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(fail(
                    no,
                    "expected `logprob<TAB>ngram[<TAB>backoff]`".into(),
                ));
            }
            let logprob: f64 = fields[0]
                .trim()
                .parse()
                .map_err(|_| fail(no, format!("bad log probability `{}`", fields[0])))?;
            let bow: f64 = match fields.get(2) {
                Some(s) => s
                    .trim()
                    .parse()
                    .map_err(|_| fail(no, format!("bad backoff weight `{s}`")))?,
                None => 0.0,
            };
            let toks: Vec<u32> = fields[1]
                .split_whitespace()
                .map(|t| intern(&mut ids, &mut vocab, t))
                .collect();
            if toks.len() != k {
                return Err(fail(
                    no,
                    format!("expected a {k}-gram, found {} tokens", toks.len()),
                ));
            }
            if table.insert(toks.into(), Entry { logprob, bow }).is_some() {
                return Err(fail(no, format!("duplicate {k}-gram `{}`", fields[1])));
            }
        }
        tables.push(table);
    }

    match next_content(&mut lines)? {
        Some((_, line)) if line.trim() == "\\end\\" => {}
        Some((no, line)) => {
            return Err(fail(no, format!("expected \\end\\, found `{line}`")));
        }
        None => return Err(fail(0, "missing \\end\\".into())),
    }

    Ok(NgramModel {
        order,
        vocab,
        ids,
        tables,
        fallback_discounts: false,
    })
}

impl NgramModel {
    /// Writes the model as an ARPA file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        write_arpa(self, &mut w).map_err(|e| relabel(e, path))
    }

    /// Reads an ARPA file.
    pub fn load(path: &Path) -> Result<NgramModel> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        read_arpa_labeled(BufReader::new(file), path)
    }
}

/// Replaces the anonymous-sink label with the real path.
fn relabel(err: Error, path: &Path) -> Error {
    match err {
        Error::Io { path: p, source } if p == *ANON => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::train_lm;
    use crate::textprep::TokenSeq;

    fn toy_model() -> NgramModel {
        let corpus = [
            "der hund bellt laut",
            "die katze schläft",
            "der hund schläft",
            "der alte hund bellt",
            "die katze bellt nie",
        ];
        train_lm(corpus, 3, 1).unwrap()
    }

    fn score(model: &NgramModel, context: &[&str], word: &str) -> f64 {
        model.score_word(&model.state_from(context), word).0
    }

    #[test]
    fn round_trip_preserves_every_score() {
        let model = toy_model();
        let mut buf = Vec::new();
        write_arpa(&model, &mut buf).unwrap();
        let back = read_arpa(buf.as_slice()).unwrap();
        for context in [vec![], vec!["der"], vec!["der", "hund"], vec!["nie", "die"]] {
            for word in ["hund", "katze", "bellt", "nie", "fehlt", UNK, EOS] {
                let a = score(&model, &context, word);
                let b = score(&back, &context, word);
                assert!(
                    (a - b).abs() <= 1e-4,
                    "score mismatch for {context:?} + {word}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn round_trip_through_files() {
        let model = toy_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.arpa");
        model.save(&path).unwrap();
        let back = NgramModel::load(&path).unwrap();
        assert_eq!(
            score(&model, &["der"], "hund"),
            score(&back, &["der"], "hund")
        );
    }

    #[test]
    fn uniform_model_scores_uniformly() {
        let v = 4.0f64;
        let lp = -(v.log10());
        let arpa = format!(
            "\\data\\\nngram 1=4\n\n\\1-grams:\n{lp}\ta\n{lp}\tb\n{lp}\tc\n{lp}\t{UNK}\n\n\\end\\\n"
        );
        let model = read_arpa(arpa.as_bytes()).unwrap();
        for word in ["a", "b", "c", "nie_gesehen"] {
            assert_eq!(score(&model, &[], word), lp);
        }
        let seq = TokenSeq::from_tokens(vec!["a".into(), "c".into(), "b".into()]);
        // </s> is absent from this hand-built model, so every event scores
        // 1/V except the final one; check the word events only.
        let (s, _) = model.score_word(&model.begin_sentence(), "a");
        assert_eq!(s, lp);
        approx::assert_abs_diff_eq!(
            model.sentence_logprob(&seq) - score(&model, &[], EOS),
            3.0 * lp,
            epsilon = 1e-12
        );
    }

    #[test]
    fn hand_written_unigrams_query_exactly() {
        let arpa =
            "\\data\\\nngram 1=3\n\n\\1-grams:\n-0.5\tja\n-0.75\tnein\n-1.25\t<unk>\n\n\\end\\\n";
        let model = read_arpa(arpa.as_bytes()).unwrap();
        assert_eq!(score(&model, &[], "ja"), -0.5);
        assert_eq!(score(&model, &[], "nein"), -0.75);
        assert_eq!(score(&model, &[], "unbekannt"), -1.25);
    }

    #[test]
    fn declared_count_mismatch_reports_the_line() {
        let arpa = "\\data\\\nngram 1=3\n\n\\1-grams:\n-0.5\tja\n-0.75\tnein\n\n\\end\\\n";
        let err = read_arpa(arpa.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":8:"), "unexpected error: {msg}");
        assert!(msg.contains("declares 3"), "unexpected error: {msg}");
    }

    #[test]
    fn missing_data_header_is_an_error() {
        assert!(read_arpa("\\1-grams:\n-0.5\tja\n\\end\\\n".as_bytes()).is_err());
    }

    #[test]
    fn wrong_arity_entry_is_an_error() {
        let arpa = "\\data\\\nngram 1=1\n\n\\1-grams:\n-0.5\tja nein\n\n\\end\\\n";
        let err = read_arpa(arpa.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("1-gram"));
    }

    #[test]
    fn missing_end_marker_is_an_error() {
        let arpa = "\\data\\\nngram 1=1\n\n\\1-grams:\n-0.5\tja\n";
        assert!(read_arpa(arpa.as_bytes()).is_err());
    }

    #[test]
    fn writer_orders_entries_deterministically() {
        let model = toy_model();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_arpa(&model, &mut a).unwrap();
        write_arpa(&model, &mut b).unwrap();
        assert_eq!(a, b);
    }
}
