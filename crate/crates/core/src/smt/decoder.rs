//! Monotone beam decoder: translates a sentence word by word, left to
//! right, scoring each hypothesis by a weighted sum of the translation
//! model, the target language model, and a word penalty.

use crate::lm::{LmState, NgramModel, EOS};
use crate::smt::PhraseTable;

/// Beam-search knobs and feature weights. The combined score is
/// `w_tm·log10 P(src|tgt) + w_lm·log10 P(tgt) + w_wp·output_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    pub beam_size: usize,
    pub w_tm: f64,
    pub w_lm: f64,
    pub w_wp: f64,
    /// How many top hypotheses to return (capped at `beam_size`).
    pub nbest: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            beam_size: 5,
            w_tm: 1.0,
            w_lm: 1.0,
            w_wp: 0.0,
            nbest: 1,
        }
    }
}

/// A partial translation on the beam.
#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub output: Vec<String>,
    state: LmState,
    pub score_tm: f64,
    pub score_lm: f64,
}

impl Hypothesis {
    pub fn total(&self, cfg: &DecoderConfig) -> f64 {
        cfg.w_tm * self.score_tm + cfg.w_lm * self.score_lm + cfg.w_wp * self.output.len() as f64
    }
}

/// Keeps the best `keep` hypotheses by total score; ties prefer the
/// lexicographically smaller output so results are reproducible.
fn prune(beam: &mut Vec<Hypothesis>, cfg: &DecoderConfig, keep: usize) {
    beam.sort_by(|a, b| {
        b.total(cfg)
            .partial_cmp(&a.total(cfg))
            .expect("hypothesis scores are finite")
            .then_with(|| a.output.cmp(&b.output))
    });
    beam.truncate(keep);
}

/// Translates `source` monotonically: each source word turns into exactly
/// one output word — a table candidate, or the word itself copied through
/// when the table has no entry. Returns up to `nbest` (tokens, score)
/// pairs, best first; the score includes the end-of-sentence transition of
/// the language model.
pub fn decode(
    source: &[String],
    table: &PhraseTable,
    lm: &NgramModel,
    cfg: &DecoderConfig,
) -> Vec<(Vec<String>, f64)> {
    if source.is_empty() {
        return Vec::new();
    }
    let beam_size = cfg.beam_size.max(1);
    let nbest = cfg.nbest.clamp(1, beam_size);

    let mut beam = vec![Hypothesis {
        output: Vec::new(),
        state: lm.begin_sentence(),
        score_tm: 0.0,
        score_lm: 0.0,
    }];
    for word in source {
        let mut next: Vec<Hypothesis> = Vec::new();
        for hyp in &beam {
            let mut extend = |target: &str, lp_tm: f64| {
                let (lp_lm, state) = lm.score_word(&hyp.state, target);
                let mut output = hyp.output.clone();
                output.push(target.to_string());
                next.push(Hypothesis {
                    output,
                    state,
                    score_tm: hyp.score_tm + lp_tm,
                    score_lm: hyp.score_lm + lp_lm,
                });
            };
            match table.candidates(word) {
                Some(candidates) => {
                    for c in candidates {
                        extend(&c.target, c.p_src_given_tgt.log10());
                    }
                }
                // Out-of-vocabulary words survive translation unchanged at
                // no translation-model cost.
                None => extend(word, 0.0),
            }
        }
        beam = next;
        prune(&mut beam, cfg, beam_size);
    }

    // Close every hypothesis with the end-of-sentence transition before the
    // final ranking.
    for hyp in &mut beam {
        let (lp, state) = lm.score_word(&hyp.state, EOS);
        hyp.score_lm += lp;
        hyp.state = state;
    }
    prune(&mut beam, cfg, nbest);
    beam.into_iter()
        .map(|h| (h.output.clone(), h.total(cfg)))
        .collect()
}
