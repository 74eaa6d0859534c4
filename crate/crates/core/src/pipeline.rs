//! Stage orchestrator: runs the translation pipeline as a sequence of
//! named stages, each reading its inputs from and writing its outputs to
//! one artifact directory. A stage asked to run before its inputs exist
//! fails with an error naming the missing file and the stage that makes
//! it, so partial runs and re-runs compose predictably.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::config::PipelineConfig;
use crate::embeddings::{align_unsupervised, induce_embeddings, AlignmentMap, EmbeddingSpace};
use crate::error::{Error, Result};
use crate::lm::{train_lm, NgramModel};
use crate::smt::{
    backtranslate_iterate, decode, init_phrase_table, load_lexicon, BacktranslateOptions,
    DecoderConfig, IterationReport, PhraseTable,
};
use crate::textprep::{
    delexicalize, fix_quotes, patch_up, relexicalize, slots_from_line, slots_to_line, tokenize,
    TokenSeq, Truecaser,
};

/// The pipeline's stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Generates the cipher corpus pair (only with `cipher.enabled=true`).
    Synthesize,
    /// Tokenizes, delexicalizes, and trains the truecasers.
    Preprocess,
    /// Induces one embedding space per language.
    Embed,
    /// Solves the cross-lingual map from identical-string seeds.
    Align,
    /// Seeds the phrase table from aligned embeddings.
    InitTable,
    /// Trains one n-gram model per language.
    TrainLm,
    /// Refines both tables by iterative back-translation.
    Backtranslate,
    /// Translates the source corpus with the final table.
    Decode,
    /// Restores literals, casing, and quotes; patches missing entities.
    Postprocess,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Synthesize,
        Stage::Preprocess,
        Stage::Embed,
        Stage::Align,
        Stage::InitTable,
        Stage::TrainLm,
        Stage::Backtranslate,
        Stage::Decode,
        Stage::Postprocess,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synthesize => "synthesize",
            Stage::Preprocess => "preprocess",
            Stage::Embed => "embed",
            Stage::Align => "align",
            Stage::InitTable => "init-table",
            Stage::TrainLm => "train-lm",
            Stage::Backtranslate => "backtranslate",
            Stage::Decode => "decode",
            Stage::Postprocess => "postprocess",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Stage> {
        Stage::ALL
            .into_iter()
            .find(|stage| stage.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Stage::ALL.iter().map(|s| s.name()).collect();
                Error::contract(format!(
                    "unknown stage `{s}`; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// One side of the language pair; used to name per-language artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Src,
    Tgt,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Src, Side::Tgt];

    pub fn label(self) -> &'static str {
        match self {
            Side::Src => "src",
            Side::Tgt => "tgt",
        }
    }
}

/// Artifact locations inside the working directory.
#[derive(Debug, Clone)]
pub struct Workspace {
    dir: PathBuf,
}

impl Workspace {
    pub fn new(cfg: &PipelineConfig) -> Workspace {
        Workspace {
            dir: cfg.workdir.clone(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn file(&self, name: String) -> PathBuf {
        self.dir.join(name)
    }

    /// The raw corpus generated by the synthesize stage.
    pub fn generated_corpus(&self, side: Side) -> PathBuf {
        self.file(format!("{}_corpus.txt", side.label()))
    }

    pub fn lexicon(&self) -> PathBuf {
        self.file("lexicon.tsv".to_string())
    }

    pub fn prep(&self, side: Side) -> PathBuf {
        self.file(format!("{}.prep.txt", side.label()))
    }

    pub fn slots(&self, side: Side) -> PathBuf {
        self.file(format!("{}.slots.txt", side.label()))
    }

    pub fn truecase(&self, side: Side) -> PathBuf {
        self.file(format!("{}.truecase.tsv", side.label()))
    }

    pub fn embeddings(&self, side: Side) -> PathBuf {
        self.file(format!("{}.emb.txt", side.label()))
    }

    pub fn alignment(&self) -> PathBuf {
        self.file("align.map.txt".to_string())
    }

    pub fn init_table(&self) -> PathBuf {
        self.file("table.init.tsv".to_string())
    }

    pub fn lm(&self, side: Side) -> PathBuf {
        self.file(format!("{}.lm.arpa", side.label()))
    }

    pub fn final_table(&self) -> PathBuf {
        self.file("table.final.tsv".to_string())
    }

    pub fn reverse_table(&self) -> PathBuf {
        self.file("table.reverse.tsv".to_string())
    }

    pub fn bt_report(&self) -> PathBuf {
        self.file("backtranslate.report.txt".to_string())
    }

    pub fn translations(&self) -> PathBuf {
        self.file("translations.txt".to_string())
    }

    pub fn final_output(&self) -> PathBuf {
        self.file("final.txt".to_string())
    }

    /// Where the raw corpus for `side` comes from: the synthesize stage's
    /// output in cipher mode, the configured path otherwise.
    pub fn corpus(&self, cfg: &PipelineConfig, side: Side) -> Result<PathBuf> {
        if cfg.cipher_enabled {
            return Ok(self.generated_corpus(side));
        }
        let configured = match side {
            Side::Src => &cfg.src_corpus,
            Side::Tgt => &cfg.tgt_corpus,
        };
        configured.clone().ok_or_else(|| {
            Error::contract(format!(
                "no paths.{}_corpus configured and cipher mode is off",
                side.label()
            ))
        })
    }
}

/// Fails with a `MissingArtifact` error naming the stage that produces
/// `path` when the file does not exist yet.
pub fn require_artifact(path: &Path, producer: Stage) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            producer: producer.name().to_string(),
        })
    }
}

/// Reads a text file into its lines.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .map(|l| l.map_err(|e| Error::io(path, e)))
        .collect()
}

/// Writes one line per entry, each newline-terminated.
pub fn write_lines<S: AsRef<str>>(path: &Path, lines: &[S]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for line in lines {
        writeln!(w, "{}", line.as_ref()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a text file into whitespace-split token rows.
pub fn tokenized_lines(path: &Path) -> Result<Vec<Vec<String>>> {
    Ok(read_lines(path)?
        .iter()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect())
}

fn run_synthesize(cfg: &PipelineConfig, ws: &Workspace) -> Result<()> {
    if !cfg.cipher_enabled {
        return Err(Error::contract(
            "stage `synthesize` requires cipher.enabled=true",
        ));
    }
    let mut spec = cfg.cipher.clone();
    spec.seed = cfg.seed;
    let corpus = crate::cipher::synthesize_cipher(&spec)?;
    write_lines(&ws.generated_corpus(Side::Src), &corpus.src_lines)?;
    write_lines(&ws.generated_corpus(Side::Tgt), &corpus.tgt_lines)?;
    let lexicon_lines: Vec<String> = corpus
        .lexicon
        .iter()
        .map(|(s, t)| format!("{s}\t{t}"))
        .collect();
    write_lines(&ws.lexicon(), &lexicon_lines)
}

fn run_preprocess(cfg: &PipelineConfig, ws: &Workspace) -> Result<()> {
    for side in Side::BOTH {
        let input = ws.corpus(cfg, side)?;
        if cfg.cipher_enabled {
            require_artifact(&input, Stage::Synthesize)?;
        } else if !input.is_file() {
            return Err(Error::io(
                &input,
                std::io::Error::new(std::io::ErrorKind::NotFound, "corpus file not found"),
            ));
        }
        let lines = read_lines(&input)?;
        let truecaser = Truecaser::train(lines.iter())?;
        truecaser.save(&ws.truecase(side))?;
        let mut prep = Vec::with_capacity(lines.len());
        let mut slots = Vec::with_capacity(lines.len());
        for line in &lines {
            let seq = delexicalize(&tokenize(line));
            prep.push(seq.text());
            slots.push(slots_to_line(&seq.slots));
        }
        write_lines(&ws.prep(side), &prep)?;
        write_lines(&ws.slots(side), &slots)?;
    }
    Ok(())
}

fn run_embed(cfg: &PipelineConfig, ws: &Workspace) -> Result<()> {
    for side in Side::BOTH {
        let input = ws.prep(side);
        require_artifact(&input, Stage::Preprocess)?;
        let lines = read_lines(&input)?;
        let space = induce_embeddings(
            side.label(),
            &lines,
            cfg.embed_dim,
            cfg.embed_window,
            cfg.embed_min_count,
        )?;
        space.save(&ws.embeddings(side))?;
    }
    Ok(())
}

fn load_spaces(ws: &Workspace) -> Result<(EmbeddingSpace, EmbeddingSpace)> {
    for side in Side::BOTH {
        require_artifact(&ws.embeddings(side), Stage::Embed)?;
    }
    Ok((
        EmbeddingSpace::load(Side::Src.label(), &ws.embeddings(Side::Src))?,
        EmbeddingSpace::load(Side::Tgt.label(), &ws.embeddings(Side::Tgt))?,
    ))
}

fn run_align(cfg: &PipelineConfig, ws: &Workspace) -> Result<()> {
    let (src, tgt) = load_spaces(ws)?;
    let map = align_unsupervised(&src, &tgt, cfg.k_csls)?;
    map.save(&ws.alignment())
}

fn run_init_table(cfg: &PipelineConfig, ws: &Workspace) -> Result<()> {
    let (src, tgt) = load_spaces(ws)?;
    require_artifact(&ws.alignment(), Stage::Align)?;
    let map = AlignmentMap::load(&ws.alignment())?;
    let table = init_phrase_table(
        &src,
        &map,
        &tgt,
        cfg.table_top_k,
        cfg.table_temperature,
        cfg.k_csls,
    )?;
    table.save(&ws.init_table())
}

fn run_train_lm(cfg: &PipelineConfig, ws: &Workspace) -> Result<()> {
    for side in Side::BOTH {
        let input = ws.prep(side);
        require_artifact(&input, Stage::Preprocess)?;
        let lines = read_lines(&input)?;
        let model = train_lm(&lines, cfg.lm_order, cfg.lm_min_count)?;
        model.save(&ws.lm(side))?;
    }
    Ok(())
}

fn run_backtranslate(cfg: &PipelineConfig, ws: &Workspace) -> Result<()> {
    for side in Side::BOTH {
        require_artifact(&ws.prep(side), Stage::Preprocess)?;
        require_artifact(&ws.lm(side), Stage::TrainLm)?;
    }
    require_artifact(&ws.init_table(), Stage::InitTable)?;
    let src_mono = tokenized_lines(&ws.prep(Side::Src))?;
    let tgt_mono = tokenized_lines(&ws.prep(Side::Tgt))?;
    let table0 = PhraseTable::load(&ws.init_table())?;
    let lm_src = NgramModel::load(&ws.lm(Side::Src))?;
    let lm_tgt = NgramModel::load(&ws.lm(Side::Tgt))?;
    let lexicon = if ws.lexicon().is_file() {
        Some(load_lexicon(&ws.lexicon())?)
    } else {
        None
    };
    let opts = BacktranslateOptions {
        iterations: cfg.bt_iterations,
        sample_size: cfg.bt_sample_size,
        decoder: DecoderConfig {
            nbest: 1,
            ..cfg.decoder.clone()
        },
        m1_iters: cfg.bt_m1_iters,
        table_top_k: cfg.table_top_k,
        seed: cfg.seed,
    };
    let outcome = backtranslate_iterate(
        &src_mono,
        &tgt_mono,
        &table0,
        &lm_src,
        &lm_tgt,
        &opts,
        lexicon.as_ref(),
    )?;
    outcome.table_src_tgt.save(&ws.final_table())?;
    outcome.table_tgt_src.save(&ws.reverse_table())?;
    outcome.report.save(&ws.bt_report())
}

fn run_decode(cfg: &PipelineConfig, ws: &Workspace) -> Result<()> {
    require_artifact(&ws.prep(Side::Src), Stage::Preprocess)?;
    require_artifact(&ws.final_table(), Stage::Backtranslate)?;
    require_artifact(&ws.lm(Side::Tgt), Stage::TrainLm)?;
    let table = PhraseTable::load(&ws.final_table())?;
    let lm = NgramModel::load(&ws.lm(Side::Tgt))?;
    let decoder = DecoderConfig {
        nbest: 1,
        ..cfg.decoder.clone()
    };
    let mut out = Vec::new();
    for tokens in tokenized_lines(&ws.prep(Side::Src))? {
        let best = decode(&tokens, &table, &lm, &decoder)
            .into_iter()
            .next()
            .map(|(tokens, _)| tokens.join(" "))
            .unwrap_or_default();
        out.push(best);
    }
    write_lines(&ws.translations(), &out)
}

fn run_postprocess(cfg: &PipelineConfig, ws: &Workspace) -> Result<()> {
    require_artifact(&ws.translations(), Stage::Decode)?;
    require_artifact(&ws.slots(Side::Src), Stage::Preprocess)?;
    require_artifact(&ws.truecase(Side::Tgt), Stage::Preprocess)?;
    let source_path = ws.corpus(cfg, Side::Src)?;
    let translations = read_lines(&ws.translations())?;
    let slot_lines = read_lines(&ws.slots(Side::Src))?;
    let sources = read_lines(&source_path)?;
    if translations.len() != slot_lines.len() || translations.len() != sources.len() {
        return Err(Error::contract(format!(
            "line counts diverge: {} translations, {} slot rows, {} source lines",
            translations.len(),
            slot_lines.len(),
            sources.len()
        )));
    }
    let truecaser = Truecaser::load(&ws.truecase(Side::Tgt))?;
    let slots_path = ws.slots(Side::Src);
    let mut out = Vec::with_capacity(translations.len());
    for (i, line) in translations.iter().enumerate() {
        let slots = slots_from_line(&slot_lines[i])
            .map_err(|_| Error::parse(&slots_path, i + 1, "malformed slot sidecar row"))?;
        let source = tokenize(&sources[i]);
        let seq = TokenSeq::from_tokens(line.split_whitespace().map(str::to_string).collect());
        let restored = relexicalize(&seq, &slots);
        let recased = truecaser.recase(&restored);
        let quoted = fix_quotes(&recased, &source);
        let patched = patch_up(&quoted, &source);
        out.push(patched.text());
    }
    write_lines(&ws.final_output(), &out)
}

/// Runs one named stage against the artifact directory, creating the
/// directory first if needed.
pub fn run_stage(stage: Stage, cfg: &PipelineConfig) -> Result<()> {
    let ws = Workspace::new(cfg);
    std::fs::create_dir_all(ws.dir()).map_err(|e| Error::io(ws.dir(), e))?;
    log::info!("stage {stage} starting");
    let started = std::time::Instant::now();
    let result = match stage {
        Stage::Synthesize => run_synthesize(cfg, &ws),
        Stage::Preprocess => run_preprocess(cfg, &ws),
        Stage::Embed => run_embed(cfg, &ws),
        Stage::Align => run_align(cfg, &ws),
        Stage::InitTable => run_init_table(cfg, &ws),
        Stage::TrainLm => run_train_lm(cfg, &ws),
        Stage::Backtranslate => run_backtranslate(cfg, &ws),
        Stage::Decode => run_decode(cfg, &ws),
        Stage::Postprocess => run_postprocess(cfg, &ws),
    };
    match &result {
        Ok(()) => log::info!("stage {stage} finished in {:.2?}", started.elapsed()),
        Err(e) => log::error!("stage {stage} failed: {e}"),
    }
    result
}

/// Runs every applicable stage in order: all nine in cipher mode, all but
/// `synthesize` when corpora are supplied.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<()> {
    for stage in Stage::ALL {
        if stage == Stage::Synthesize && !cfg.cipher_enabled {
            continue;
        }
        run_stage(stage, cfg)?;
    }
    Ok(())
}

/// Convenience for reports and tests: the per-iteration back-translation
/// records of a finished run.
pub fn read_bt_report(cfg: &PipelineConfig) -> Result<IterationReport> {
    let ws = Workspace::new(cfg);
    require_artifact(&ws.bt_report(), Stage::Backtranslate)?;
    IterationReport::load(&ws.bt_report())
}
