//! Browser bindings for the demo page: three self-contained operations,
//! each taking plain values and returning a JSON string so the page needs
//! no generated glue beyond wasm-bindgen itself.

use serde_json::json;
use wasm_bindgen::prelude::*;

use unmt::cipher::{synthesize_cipher, CipherSpec};
use unmt::embeddings::{align_unsupervised, induce_embeddings};
use unmt::lm::train_lm;
use unmt::smt::{
    backtranslate_iterate, decode, init_phrase_table, lexicon_accuracy, BacktranslateOptions,
    DecoderConfig,
};
use unmt::subword::{apply_bpe, learn_bpe, undo_bpe};
use unmt::textprep::{add_noise, delexicalize, relexicalize, tokenize, NoiseSpec};

fn error_json(message: impl std::fmt::Display) -> String {
    json!({ "error": message.to_string() }).to_string()
}

/// Tokenizes one line, masks its numerals, applies drop-and-swap noise, and
/// restores the masked form — the round trip a sentence travels through the
/// preprocessing stage. Returns a JSON object with every intermediate form.
#[wasm_bindgen]
pub fn inspect_text(line: &str, p_drop: f64, p_swap: f64, seed: u32) -> String {
    let seq = tokenize(line);
    let masked = delexicalize(&seq);
    let spec = NoiseSpec {
        p_drop: p_drop.clamp(0.0, 0.95),
        p_swap: p_swap.clamp(0.0, 1.0),
        swap_window: 3,
        seed: seed as u64,
    };
    let noisy = add_noise(&masked, &spec);
    let restored = relexicalize(&masked, &masked.slots);
    let slots: Vec<_> = masked
        .slots
        .iter()
        .map(|s| {
            json!({
                "position": s.position,
                "kind": s.kind.to_string(),
                "literal": s.literal,
            })
        })
        .collect();
    json!({
        "tokens": seq.tokens,
        "case_map": seq.case_map,
        "masked": masked.tokens,
        "slots": slots,
        "noisy": noisy.tokens,
        "restored": restored.case_map,
    })
    .to_string()
}

/// Learns a subword model from whitespace-tokenized `corpus`, segments the
/// words of `sample` with it, and reports the learned merges plus the
/// pieces. The page uses this to show how the merge budget changes the
/// segmentation.
#[wasm_bindgen]
pub fn subword_lab(corpus: &str, merges: u32, sample: &str) -> String {
    let words = corpus.split_whitespace();
    let model = match learn_bpe(words, merges.min(2000) as usize) {
        Ok(model) => model,
        Err(e) => return error_json(e),
    };
    let sample_seq = unmt::textprep::TokenSeq::from_tokens(
        sample.split_whitespace().map(str::to_string).collect(),
    );
    let split = apply_bpe(&sample_seq, &model);
    let rejoined = undo_bpe(&split, &model.eow_marker);
    let merge_list: Vec<_> = model.merges.iter().map(|(a, b)| json!([a, b])).collect();
    json!({
        "n_merges": model.merges.len(),
        "merges": merge_list,
        "eow_marker": model.eow_marker,
        "pieces": split.tokens,
        "round_trip_ok": rejoined.tokens == sample_seq.tokens,
    })
    .to_string()
}

/// Runs a miniature end-to-end experiment: synthesizes a cipher corpus
/// pair, induces and aligns embeddings, seeds a phrase table from the
/// cross-lingual geometry, refines it by iterative back-translation, and
/// reports the lexicon-accuracy curve plus a few decoded examples.
#[wasm_bindgen]
pub fn cipher_lab(content_words: u32, sentences: u32, iterations: u32, seed: u32) -> String {
    match run_cipher_lab(
        content_words.clamp(20, 200) as usize,
        sentences.clamp(200, 4000) as usize,
        iterations.clamp(1, 4) as usize,
        seed as u64,
    ) {
        Ok(out) => out,
        Err(e) => error_json(e),
    }
}

fn run_cipher_lab(
    content_words: usize,
    sentences: usize,
    iterations: usize,
    seed: u64,
) -> unmt::Result<String> {
    let spec = CipherSpec {
        content_words,
        anchor_codes: 12,
        sentences_per_side: sentences,
        seed,
        ..CipherSpec::default()
    };
    let corpus = synthesize_cipher(&spec)?;

    let src_space = induce_embeddings("src", &corpus.src_lines, 10, 3, 2)?;
    let tgt_space = induce_embeddings("tgt", &corpus.tgt_lines, 10, 3, 2)?;
    let map = align_unsupervised(&src_space, &tgt_space, 10)?;
    let table0 = init_phrase_table(&src_space, &map, &tgt_space, 10, 30.0, 10)?;

    let lm_src = train_lm(&corpus.src_lines, 3, 1)?;
    let lm_tgt = train_lm(&corpus.tgt_lines, 3, 1)?;

    let tokenized = |lines: &[String]| -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(str::to_string).collect())
            .collect()
    };
    let src_mono = tokenized(&corpus.src_lines);
    let tgt_mono = tokenized(&corpus.tgt_lines);

    let opts = BacktranslateOptions {
        iterations,
        sample_size: sentences.min(800),
        decoder: DecoderConfig {
            beam_size: 4,
            ..DecoderConfig::default()
        },
        m1_iters: 4,
        table_top_k: 10,
        seed: 1,
    };
    let outcome = backtranslate_iterate(
        &src_mono,
        &tgt_mono,
        &table0,
        &lm_src,
        &lm_tgt,
        &opts,
        Some(&corpus.lexicon),
    )?;

    let curve: Vec<f64> = outcome
        .report
        .records
        .iter()
        .filter_map(|r| r.get("accuracy_src_tgt"))
        .filter_map(|v| v.parse().ok())
        .collect();
    let initial_accuracy = lexicon_accuracy(&table0, &corpus.lexicon);
    let final_accuracy = lexicon_accuracy(&outcome.table_src_tgt, &corpus.lexicon);

    let decoder = DecoderConfig {
        beam_size: 4,
        ..DecoderConfig::default()
    };
    let examples: Vec<_> = src_mono
        .iter()
        .take(5)
        .map(|source| {
            let hyp = decode(source, &outcome.table_src_tgt, &lm_tgt, &decoder)
                .into_iter()
                .next()
                .map(|(tokens, _)| tokens.join(" "))
                .unwrap_or_default();
            let gold: Vec<String> = source
                .iter()
                .map(|w| corpus.lexicon.get(w).unwrap_or(w).clone())
                .collect();
            json!({
                "src": source.join(" "),
                "hyp": hyp,
                "gold": gold.join(" "),
            })
        })
        .collect();

    Ok(json!({
        "content_words": content_words,
        "sentences_per_side": sentences,
        "lexicon_entries": corpus.lexicon.len(),
        "accuracy_curve": curve,
        "initial_accuracy": initial_accuracy,
        "final_accuracy": final_accuracy,
        "examples": examples,
    })
    .to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inspect_reports_masking_and_restores_the_line() {
        let out = inspect_text("Am 3. 10. 2019 kaufte er 7 Äpfel.", 0.0, 0.0, 1);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let masked: Vec<&str> = v["masked"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| t.as_str().unwrap())
            .collect();
        assert!(masked.contains(&"<DATE>"));
        assert!(masked.contains(&"<NUMBER>"));
        let restored: Vec<&str> = v["restored"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| t.as_str().unwrap())
            .collect();
        assert!(restored.contains(&"2019"));
        assert!(restored.contains(&"7"));
        assert!(!v["slots"].as_array().unwrap().is_empty());
    }

    #[test]
    fn noise_knobs_reach_the_noise_model() {
        let line = "eins zwei drei vier fünf sechs sieben acht neun zehn";
        let clean: serde_json::Value =
            serde_json::from_str(&inspect_text(line, 0.0, 0.0, 5)).unwrap();
        let noisy: serde_json::Value =
            serde_json::from_str(&inspect_text(line, 0.5, 0.5, 5)).unwrap();
        assert_eq!(clean["noisy"], clean["masked"]);
        assert_ne!(noisy["noisy"], noisy["masked"]);
    }

    #[test]
    fn subword_lab_round_trips_its_sample() {
        let corpus = "straßenbahn straße bahnhof bahnsteig hofgarten gartenhaus haustür";
        let out = subword_lab(corpus, 30, "straßenbahnhof gartentür");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["round_trip_ok"], true);
        assert!(v["n_merges"].as_u64().unwrap() <= 30);
        assert!(!v["pieces"].as_array().unwrap().is_empty());
    }

    #[test]
    fn subword_lab_reports_unlearnable_corpora() {
        let v: serde_json::Value = serde_json::from_str(&subword_lab("", 10, "wort")).unwrap();
        assert!(v.get("error").is_some());
    }

    #[test]
    fn cipher_lab_recovers_most_of_a_small_lexicon() {
        let out = cipher_lab(40, 1200, 2, 17);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v.get("error").is_none(), "lab failed: {v}");
        assert_eq!(v["lexicon_entries"].as_u64().unwrap(), 40);
        let curve = v["accuracy_curve"].as_array().unwrap();
        assert_eq!(curve.len(), 3);
        let last = curve.last().unwrap().as_f64().unwrap();
        assert!(last >= 0.5, "final accuracy {last} suspiciously low");
        assert_eq!(v["examples"].as_array().unwrap().len(), 5);
    }
}
