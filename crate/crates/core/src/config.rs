//! Pipeline configuration: a flat `key=value` file with dotted section
//! prefixes (`lm.order=5`, `decoder.beam_size=5`). Validation is batched —
//! every unknown key, unparsable value, range violation and missing input
//! path is reported in one error instead of failing on the first.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::cipher::CipherSpec;
use crate::error::{Error, Result};
use crate::smt::DecoderConfig;
use crate::textprep::NoiseSpec;
use crate::uwr::UwrConfig;

/// Everything the pipeline orchestrator needs: input corpora, an artifact
/// directory, one global seed, and per-module knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Directory all stage artifacts are written into.
    pub workdir: PathBuf,
    /// Tokenized source-language corpus, one sentence per line. Optional
    /// when the cipher generator is enabled.
    pub src_corpus: Option<PathBuf>,
    pub tgt_corpus: Option<PathBuf>,
    /// Seed for every stochastic stage (noise, sampling, generation).
    pub seed: u64,
    /// When true, the `synthesize` stage generates the corpus pair and
    /// ground-truth lexicon instead of reading `src_corpus`/`tgt_corpus`.
    pub cipher_enabled: bool,
    pub cipher: CipherSpec,
    pub noise: NoiseSpec,
    pub bpe_merges: usize,
    pub embed_dim: usize,
    pub embed_window: usize,
    pub embed_min_count: u64,
    pub k_csls: usize,
    pub table_top_k: usize,
    pub table_temperature: f64,
    pub lm_order: usize,
    pub lm_min_count: u64,
    pub decoder: DecoderConfig,
    pub bt_iterations: usize,
    pub bt_sample_size: usize,
    pub bt_m1_iters: usize,
    pub uwr: UwrConfig,
    pub ensemble_top_n: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            workdir: PathBuf::from("work"),
            src_corpus: None,
            tgt_corpus: None,
            seed: 17,
            cipher_enabled: false,
            cipher: CipherSpec::default(),
            noise: NoiseSpec::default(),
            bpe_merges: 40_000,
            embed_dim: 12,
            embed_window: 3,
            embed_min_count: 5,
            k_csls: 10,
            table_top_k: 20,
            table_temperature: 30.0,
            lm_order: 5,
            lm_min_count: 1,
            decoder: DecoderConfig::default(),
            bt_iterations: 4,
            bt_sample_size: 4000,
            bt_m1_iters: 5,
            uwr: UwrConfig::default(),
            ensemble_top_n: 5,
        }
    }
}

/// Echoes the effective configuration in file syntax, keys sorted, so a
/// run can be reproduced from its own log.
impl fmt::Display for PipelineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "align.k_csls={}", self.k_csls)?;
        writeln!(f, "backtranslate.iterations={}", self.bt_iterations)?;
        writeln!(f, "backtranslate.m1_iters={}", self.bt_m1_iters)?;
        writeln!(f, "backtranslate.sample_size={}", self.bt_sample_size)?;
        writeln!(f, "bpe.merges={}", self.bpe_merges)?;
        writeln!(f, "cipher.anchor_codes={}", self.cipher.anchor_codes)?;
        writeln!(f, "cipher.comma_prob={}", self.cipher.comma_prob)?;
        writeln!(f, "cipher.content_words={}", self.cipher.content_words)?;
        writeln!(f, "cipher.enabled={}", self.cipher_enabled)?;
        writeln!(f, "cipher.max_len={}", self.cipher.max_len)?;
        writeln!(f, "cipher.min_len={}", self.cipher.min_len)?;
        writeln!(
            f,
            "cipher.sentences_per_side={}",
            self.cipher.sentences_per_side
        )?;
        writeln!(f, "cipher.successors={}", self.cipher.successors)?;
        writeln!(f, "decoder.beam_size={}", self.decoder.beam_size)?;
        writeln!(f, "decoder.nbest={}", self.decoder.nbest)?;
        writeln!(f, "decoder.w_lm={}", self.decoder.w_lm)?;
        writeln!(f, "decoder.w_tm={}", self.decoder.w_tm)?;
        writeln!(f, "decoder.w_wp={}", self.decoder.w_wp)?;
        writeln!(f, "embed.dim={}", self.embed_dim)?;
        writeln!(f, "embed.min_count={}", self.embed_min_count)?;
        writeln!(f, "embed.window={}", self.embed_window)?;
        writeln!(f, "ensemble.top_n={}", self.ensemble_top_n)?;
        writeln!(f, "lm.min_count={}", self.lm_min_count)?;
        writeln!(f, "lm.order={}", self.lm_order)?;
        writeln!(f, "noise.p_drop={}", self.noise.p_drop)?;
        writeln!(f, "noise.p_swap={}", self.noise.p_swap)?;
        writeln!(f, "noise.swap_window={}", self.noise.swap_window)?;
        if let Some(path) = &self.src_corpus {
            writeln!(f, "paths.src_corpus={}", path.display())?;
        }
        if let Some(path) = &self.tgt_corpus {
            writeln!(f, "paths.tgt_corpus={}", path.display())?;
        }
        writeln!(f, "paths.workdir={}", self.workdir.display())?;
        writeln!(f, "seed={}", self.seed)?;
        writeln!(f, "table.temperature={}", self.table_temperature)?;
        writeln!(f, "table.top_k={}", self.table_top_k)?;
        writeln!(f, "uwr.context_window={}", self.uwr.context_window)?;
        writeln!(f, "uwr.min_exact_len={}", self.uwr.min_exact_len)?;
        writeln!(f, "uwr.suffix_tolerance={}", self.uwr.suffix_tolerance)
    }
}

struct Collector {
    problems: Vec<String>,
}

impl Collector {
    fn parse<T: std::str::FromStr>(&mut self, where_: &str, key: &str, value: &str) -> Option<T> {
        match value.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.problems
                    .push(format!("{where_}: bad value `{value}` for {key}"));
                None
            }
        }
    }

    fn check(&mut self, ok: bool, where_: &str, msg: &str) {
        if !ok {
            self.problems.push(format!("{where_}: {msg}"));
        }
    }
}

/// Applies one `key=value` setting to the config, recording any problem
/// into the collector instead of failing.
fn apply_key(cfg: &mut PipelineConfig, key: &str, value: &str, where_: &str, c: &mut Collector) {
    macro_rules! set {
        ($field:expr) => {
            if let Some(v) = c.parse(where_, key, value) {
                $field = v;
            }
        };
    }
    match key {
        "paths.workdir" => cfg.workdir = PathBuf::from(value),
        "paths.src_corpus" => cfg.src_corpus = Some(PathBuf::from(value)),
        "paths.tgt_corpus" => cfg.tgt_corpus = Some(PathBuf::from(value)),
        "seed" => set!(cfg.seed),
        "cipher.enabled" => set!(cfg.cipher_enabled),
        "cipher.content_words" => set!(cfg.cipher.content_words),
        "cipher.anchor_codes" => set!(cfg.cipher.anchor_codes),
        "cipher.sentences_per_side" => set!(cfg.cipher.sentences_per_side),
        "cipher.min_len" => set!(cfg.cipher.min_len),
        "cipher.max_len" => set!(cfg.cipher.max_len),
        "cipher.successors" => set!(cfg.cipher.successors),
        "cipher.comma_prob" => set!(cfg.cipher.comma_prob),
        "noise.p_drop" => set!(cfg.noise.p_drop),
        "noise.p_swap" => set!(cfg.noise.p_swap),
        "noise.swap_window" => set!(cfg.noise.swap_window),
        "bpe.merges" => set!(cfg.bpe_merges),
        "embed.dim" => set!(cfg.embed_dim),
        "embed.window" => set!(cfg.embed_window),
        "embed.min_count" => set!(cfg.embed_min_count),
        "align.k_csls" => set!(cfg.k_csls),
        "table.top_k" => set!(cfg.table_top_k),
        "table.temperature" => set!(cfg.table_temperature),
        "lm.order" => set!(cfg.lm_order),
        "lm.min_count" => set!(cfg.lm_min_count),
        "decoder.beam_size" => set!(cfg.decoder.beam_size),
        "decoder.nbest" => set!(cfg.decoder.nbest),
        "decoder.w_tm" => set!(cfg.decoder.w_tm),
        "decoder.w_lm" => set!(cfg.decoder.w_lm),
        "decoder.w_wp" => set!(cfg.decoder.w_wp),
        "backtranslate.iterations" => set!(cfg.bt_iterations),
        "backtranslate.sample_size" => set!(cfg.bt_sample_size),
        "backtranslate.m1_iters" => set!(cfg.bt_m1_iters),
        "uwr.context_window" => set!(cfg.uwr.context_window),
        "uwr.suffix_tolerance" => set!(cfg.uwr.suffix_tolerance),
        "uwr.min_exact_len" => set!(cfg.uwr.min_exact_len),
        "ensemble.top_n" => set!(cfg.ensemble_top_n),
        _ => c.problems.push(format!("{where_}: unknown key `{key}`")),
    }
}

fn check_ranges(cfg: &PipelineConfig, c: &mut Collector) {
    let w = "config";
    c.check(
        (0.0..1.0).contains(&cfg.noise.p_drop),
        w,
        "noise.p_drop must be in [0, 1)",
    );
    c.check(
        (0.0..1.0).contains(&cfg.noise.p_swap),
        w,
        "noise.p_swap must be in [0, 1)",
    );
    c.check(cfg.bpe_merges >= 1, w, "bpe.merges must be ≥ 1");
    c.check(cfg.embed_dim >= 2, w, "embed.dim must be ≥ 2");
    c.check(cfg.embed_window >= 1, w, "embed.window must be ≥ 1");
    c.check(cfg.k_csls >= 1, w, "align.k_csls must be ≥ 1");
    c.check(cfg.table_top_k >= 1, w, "table.top_k must be ≥ 1");
    c.check(
        cfg.table_temperature > 0.0,
        w,
        "table.temperature must be > 0",
    );
    c.check(cfg.lm_order >= 1, w, "lm.order must be ≥ 1");
    c.check(cfg.lm_min_count >= 1, w, "lm.min_count must be ≥ 1");
    c.check(
        cfg.decoder.beam_size >= 1,
        w,
        "decoder.beam_size must be ≥ 1",
    );
    if cfg.decoder.beam_size >= 1 {
        c.check(
            cfg.decoder.nbest >= 1 && cfg.decoder.nbest <= cfg.decoder.beam_size,
            w,
            "decoder.nbest must be in 1..=decoder.beam_size",
        );
    }
    c.check(
        cfg.bt_iterations >= 1,
        w,
        "backtranslate.iterations must be ≥ 1",
    );
    c.check(
        cfg.bt_sample_size >= 1,
        w,
        "backtranslate.sample_size must be ≥ 1",
    );
    c.check(
        cfg.bt_m1_iters >= 1,
        w,
        "backtranslate.m1_iters must be ≥ 1",
    );
    c.check(
        cfg.uwr.context_window >= 1,
        w,
        "uwr.context_window must be ≥ 1",
    );
    c.check(cfg.ensemble_top_n >= 1, w, "ensemble.top_n must be ≥ 1");
    if cfg.cipher_enabled {
        c.check(
            cfg.cipher.content_words >= 1,
            w,
            "cipher.content_words must be ≥ 1",
        );
        c.check(
            cfg.cipher.min_len >= 1 && cfg.cipher.min_len <= cfg.cipher.max_len,
            w,
            "need 1 ≤ cipher.min_len ≤ cipher.max_len",
        );
        c.check(
            cfg.cipher.sentences_per_side >= 1,
            w,
            "cipher.sentences_per_side must be ≥ 1",
        );
        c.check(
            cfg.cipher.successors >= 1,
            w,
            "cipher.successors must be ≥ 1",
        );
        c.check(
            (0.0..1.0).contains(&cfg.cipher.comma_prob),
            w,
            "cipher.comma_prob must be in [0, 1)",
        );
    }
}

fn apply_text(cfg: &mut PipelineConfig, text: &str, origin: &Path, c: &mut Collector) {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let where_ = format!("{}:{}", origin.display(), lineno + 1);
        match line.split_once('=') {
            Some((key, value)) => {
                apply_key(cfg, key.trim(), value.trim(), &where_, c);
            }
            None => c
                .problems
                .push(format!("{where_}: expected `key=value`, got `{line}`")),
        }
    }
}

fn check_inputs(cfg: &PipelineConfig, c: &mut Collector) {
    if cfg.cipher_enabled {
        return;
    }
    match (&cfg.src_corpus, &cfg.tgt_corpus) {
        (Some(src), Some(tgt)) => {
            for p in [src, tgt] {
                c.check(
                    p.is_file(),
                    "config",
                    &format!("input corpus {} does not exist", p.display()),
                );
            }
        }
        _ => c.problems.push(
            "config: need paths.src_corpus and paths.tgt_corpus unless cipher.enabled=true"
                .to_string(),
        ),
    }
}

/// Parses config text. `origin` labels error messages; input paths are not
/// checked for existence here (see `validate_config`).
pub fn parse_config(text: &str, origin: &Path) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    let mut c = Collector {
        problems: Vec::new(),
    };
    apply_text(&mut cfg, text, origin, &mut c);
    check_ranges(&cfg, &mut c);
    if c.problems.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(c.problems))
    }
}

/// Reads and validates a config file: syntax, ranges, and the existence of
/// every referenced input path. All problems are reported together.
pub fn validate_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg = parse_config(&text, path)?;
    let mut c = Collector {
        problems: Vec::new(),
    };
    check_inputs(&cfg, &mut c);
    if c.problems.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(c.problems))
    }
}

/// Builds the effective configuration for a command-line run: defaults,
/// then the config file (if any), then `key=value` overrides, which win
/// over file values. Validation — ranges and input existence — happens once
/// on the combined result, and every problem is reported together.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    let mut c = Collector {
        problems: Vec::new(),
    };
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        apply_text(&mut cfg, &text, path, &mut c);
    }
    for kv in overrides {
        match kv.split_once('=') {
            Some((key, value)) => {
                apply_key(&mut cfg, key.trim(), value.trim(), "--set", &mut c);
            }
            None => c
                .problems
                .push(format!("--set: expected `key=value`, got `{kv}`")),
        }
    }
    check_ranges(&cfg, &mut c);
    check_inputs(&cfg, &mut c);
    if c.problems.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(c.problems))
    }
}
