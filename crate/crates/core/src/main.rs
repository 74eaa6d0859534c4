//! Command-line front end.
//!
//! Stage subcommands (`preprocess`, `embed`, `align`, `init-table`,
//! `train-lm`, `backtranslate`, `decode`, `postprocess`) each run one
//! pipeline stage against the artifact directory named in the config, and
//! `pipeline` runs every applicable stage in order. File-oriented
//! subcommands (`learn-bpe`, `apply-bpe`, `uwr`, `rescore`, `ensemble`,
//! `eval-lexicon`) transform explicit input files, so the individual
//! operations also compose outside the orchestrator.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 for
//! data errors (unreadable, unparsable, or missing files). Failures are
//! reported on stderr; set `RUST_LOG` (e.g. `RUST_LOG=info`) for stage
//! progress and timing. Nothing else is read from the environment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use unmt::config::{load_config, PipelineConfig};
use unmt::lm::NgramModel;
use unmt::pipeline::{
    read_lines, require_artifact, run_pipeline, run_stage, tokenized_lines, write_lines, Side,
    Stage, Workspace,
};
use unmt::select::{
    ensemble, read_candidate_file, rescore, write_candidate_file, Candidate, CandidateSet,
};
use unmt::smt::{decode, lexicon_accuracy, load_lexicon, PhraseTable};
use unmt::subword::{apply_bpe, learn_bpe, undo_bpe, BpeModel};
use unmt::textprep::TokenSeq;
use unmt::uwr::{replace_unknowns, UwrConfig};
use unmt::{Error, Result};

#[derive(Parser)]
#[command(
    name = "unmt",
    version,
    about = "Unsupervised phrase-based translation between two languages, \
             trained on monolingual text only"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Configuration shared by every stage-backed subcommand.
#[derive(Args)]
struct ConfigArgs {
    /// Pipeline configuration file (`key=value` lines).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable, wins over file values.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig> {
        load_config(self.config.as_deref(), &self.set)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize and delexicalize both corpora; train the truecasers.
    Preprocess(ConfigArgs),
    /// Learn a subword merge table from a corpus.
    LearnBpe {
        /// Corpus to learn from, one sentence per line.
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Number of merges to learn.
        #[arg(long, value_name = "N", default_value_t = 40_000)]
        merges: usize,
        /// Where to write the merge table.
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Split a corpus into subword units with a learned merge table.
    ApplyBpe {
        /// Merge table written by `learn-bpe`.
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// Reassemble words instead of splitting them.
        #[arg(long)]
        undo: bool,
    },
    /// Induce one embedding space per language from the prepared corpora.
    Embed(ConfigArgs),
    /// Solve the cross-lingual map from identical-string seed pairs.
    Align(ConfigArgs),
    /// Seed the phrase table from the aligned embedding spaces.
    InitTable(ConfigArgs),
    /// Train one n-gram language model per language.
    TrainLm(ConfigArgs),
    /// Translate the prepared source corpus with the final phrase table.
    Decode {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Write an n-best candidate file here instead of plain
        /// translations; the list depth is `decoder.nbest`.
        #[arg(long, value_name = "FILE")]
        candidates: Option<PathBuf>,
        /// System name recorded in the candidate file.
        #[arg(long, value_name = "NAME", default_value = "pbsmt")]
        system: String,
    },
    /// Refine both phrase tables by iterative back-translation.
    Backtranslate(ConfigArgs),
    /// Replace unknown-word markers in a translation using a word-for-word
    /// fallback translation of the same sentences.
    Uwr {
        /// Translation to repair, one tokenized sentence per line.
        #[arg(long, value_name = "FILE")]
        primary: PathBuf,
        /// Word-for-word fallback translation, line-aligned with it.
        #[arg(long, value_name = "FILE")]
        fallback: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// Context words consulted on each side of an unknown.
        #[arg(long, value_name = "N", default_value_t = 2)]
        window: usize,
        /// Trailing characters two word forms may disagree on.
        #[arg(long, value_name = "N", default_value_t = 2)]
        suffix_tolerance: usize,
        /// Words at or below this length must match exactly.
        #[arg(long, value_name = "N", default_value_t = 3)]
        min_exact_len: usize,
    },
    /// Re-rank a candidate file by language-model perplexity.
    Rescore {
        /// Candidate file (`source_id<TAB>system<TAB>rank<TAB>tokens`).
        #[arg(long, value_name = "FILE")]
        candidates: PathBuf,
        /// Language model to score with, in ARPA format.
        #[arg(long, value_name = "FILE")]
        lm: PathBuf,
        /// Where to write the re-ranked candidate file.
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Pick one translation per sentence from a multi-system candidate
    /// file: pool each system's best candidates, keep the one the language
    /// model likes most.
    Ensemble {
        #[arg(long, value_name = "FILE")]
        candidates: PathBuf,
        /// Language model to score with, in ARPA format.
        #[arg(long, value_name = "FILE")]
        lm: PathBuf,
        /// Candidates taken from each system's list.
        #[arg(long, value_name = "N", default_value_t = 5)]
        top_n: usize,
        /// Where to write the winning translations, one per line.
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Restore literals, casing, and quotes in the decoded translations.
    Postprocess(ConfigArgs),
    /// Run every applicable pipeline stage in order.
    Pipeline {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Run only these stages, in the order given.
        #[arg(long = "stage", value_name = "NAME")]
        stages: Vec<String>,
    },
    /// Score a phrase table against a ground-truth lexicon.
    EvalLexicon {
        /// Phrase table in TSV format.
        #[arg(long, value_name = "FILE")]
        table: PathBuf,
        /// Ground-truth lexicon (`source<TAB>target` lines).
        #[arg(long, value_name = "FILE")]
        lexicon: PathBuf,
    },
}

fn stage_tokens(path: &Path) -> Result<Vec<TokenSeq>> {
    Ok(tokenized_lines(path)?
        .into_iter()
        .map(TokenSeq::from_tokens)
        .collect())
}

fn cmd_learn_bpe(input: &Path, merges: usize, output: &Path) -> Result<()> {
    let lines = read_lines(input)?;
    let words = lines.iter().flat_map(|l| l.split_whitespace());
    let model = learn_bpe(words, merges)?;
    model.save(output)
}

fn cmd_apply_bpe(model: &Path, input: &Path, output: &Path, undo: bool) -> Result<()> {
    let model = BpeModel::load(model)?;
    let mut out = Vec::new();
    for seq in stage_tokens(input)? {
        let transformed = if undo {
            undo_bpe(&seq, &model.eow_marker)
        } else {
            apply_bpe(&seq, &model)
        };
        out.push(transformed.text());
    }
    write_lines(output, &out)
}

/// Decodes the prepared source corpus into an n-best candidate file for
/// later rescoring or ensembling.
fn cmd_emit_candidates(cfg: &PipelineConfig, output: &Path, system: &str) -> Result<()> {
    let ws = Workspace::new(cfg);
    require_artifact(&ws.prep(Side::Src), Stage::Preprocess)?;
    require_artifact(&ws.final_table(), Stage::Backtranslate)?;
    require_artifact(&ws.lm(Side::Tgt), Stage::TrainLm)?;
    let table = PhraseTable::load(&ws.final_table())?;
    let lm = NgramModel::load(&ws.lm(Side::Tgt))?;
    let mut sets = Vec::new();
    for (i, tokens) in tokenized_lines(&ws.prep(Side::Src))?
        .into_iter()
        .enumerate()
    {
        let mut set = CandidateSet::new(i);
        for (rank, (tokens, score)) in decode(&tokens, &table, &lm, &cfg.decoder)
            .into_iter()
            .enumerate()
        {
            set.candidates.push(Candidate {
                tokens: TokenSeq::from_tokens(tokens),
                system: system.to_string(),
                rank: rank + 1,
                score: Some(score),
                ppl: None,
            });
        }
        sets.push(set);
    }
    write_candidate_file(output, &sets)
}

fn cmd_uwr(primary: &Path, fallback: &Path, output: &Path, cfg: &UwrConfig) -> Result<()> {
    let primary_lines = stage_tokens(primary)?;
    let fallback_lines = stage_tokens(fallback)?;
    if primary_lines.len() != fallback_lines.len() {
        return Err(Error::contract(format!(
            "line counts diverge: {} lines in {}, {} lines in {}",
            primary_lines.len(),
            primary.display(),
            fallback_lines.len(),
            fallback.display()
        )));
    }
    let out: Vec<String> = primary_lines
        .iter()
        .zip(&fallback_lines)
        .map(|(nmt, pbsmt)| replace_unknowns(nmt, pbsmt, cfg).text())
        .collect();
    write_lines(output, &out)
}

fn cmd_rescore(candidates: &Path, lm: &Path, output: &Path) -> Result<()> {
    let lm = NgramModel::load(lm)?;
    let rescored: Vec<CandidateSet> = read_candidate_file(candidates)?
        .iter()
        .map(|set| {
            let mut out = rescore(set, &lm);
            for (i, c) in out.candidates.iter_mut().enumerate() {
                c.rank = i + 1;
            }
            out
        })
        .collect();
    write_candidate_file(output, &rescored)
}

fn cmd_ensemble(candidates: &Path, lm: &Path, top_n: usize, output: &Path) -> Result<()> {
    let lm = NgramModel::load(lm)?;
    let mut by_source: BTreeMap<usize, Vec<CandidateSet>> = BTreeMap::new();
    for set in read_candidate_file(candidates)? {
        by_source.entry(set.source_id).or_default().push(set);
    }
    if by_source.is_empty() {
        return Err(Error::contract(format!(
            "no candidates found in {}",
            candidates.display()
        )));
    }
    let mut out = Vec::with_capacity(by_source.len());
    for group in by_source.values() {
        out.push(ensemble(group, &lm, top_n)?.text());
    }
    write_lines(output, &out)
}

fn cmd_eval_lexicon(table: &Path, lexicon: &Path) -> Result<()> {
    let table = PhraseTable::load(table)?;
    let lexicon = load_lexicon(lexicon)?;
    println!(
        "accuracy={:.6} entries={}",
        lexicon_accuracy(&table, &lexicon),
        lexicon.len()
    );
    Ok(())
}

fn cmd_pipeline(cfg: &ConfigArgs, stages: &[String]) -> Result<()> {
    let parsed: Vec<Stage> = stages
        .iter()
        .map(|name| name.parse())
        .collect::<Result<_>>()?;
    let conf = cfg.load()?;
    log::info!("effective configuration:\n{conf}");
    if parsed.is_empty() {
        return run_pipeline(&conf);
    }
    for stage in parsed {
        run_stage(stage, &conf)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess(cfg) => run_stage(Stage::Preprocess, &cfg.load()?),
        Command::LearnBpe {
            input,
            merges,
            output,
        } => cmd_learn_bpe(&input, merges, &output),
        Command::ApplyBpe {
            model,
            input,
            output,
            undo,
        } => cmd_apply_bpe(&model, &input, &output, undo),
        Command::Embed(cfg) => run_stage(Stage::Embed, &cfg.load()?),
        Command::Align(cfg) => run_stage(Stage::Align, &cfg.load()?),
        Command::InitTable(cfg) => run_stage(Stage::InitTable, &cfg.load()?),
        Command::TrainLm(cfg) => run_stage(Stage::TrainLm, &cfg.load()?),
        Command::Decode {
            cfg,
            candidates,
            system,
        } => {
            let conf = cfg.load()?;
            match candidates {
                None => run_stage(Stage::Decode, &conf),
                Some(path) => cmd_emit_candidates(&conf, &path, &system),
            }
        }
        Command::Backtranslate(cfg) => run_stage(Stage::Backtranslate, &cfg.load()?),
        Command::Uwr {
            primary,
            fallback,
            output,
            window,
            suffix_tolerance,
            min_exact_len,
        } => cmd_uwr(
            &primary,
            &fallback,
            &output,
            &UwrConfig {
                context_window: window,
                suffix_tolerance,
                min_exact_len,
            },
        ),
        Command::Rescore {
            candidates,
            lm,
            output,
        } => cmd_rescore(&candidates, &lm, &output),
        Command::Ensemble {
            candidates,
            lm,
            top_n,
            output,
        } => cmd_ensemble(&candidates, &lm, top_n, &output),
        Command::Postprocess(cfg) => run_stage(Stage::Postprocess, &cfg.load()?),
        Command::Pipeline { cfg, stages } => cmd_pipeline(&cfg, &stages),
        Command::EvalLexicon { table, lexicon } => cmd_eval_lexicon(&table, &lexicon),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Contract(_) => 1,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::EmptyCorpus(_)
        | Error::MissingArtifact { .. } => 2,
    }
}

fn main() -> ExitCode {
    // Logging is opt-in: errors already reach stderr through the exit path,
    // so without `RUST_LOG` the tool stays quiet.
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("off")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if informational {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
