//! Black-box tests of the command-line interface: exit codes, batched
//! error reporting, and the file-oriented subcommands.

use std::path::Path;
use std::process::{Command, Output};

use unmt::lm::train_lm;

fn unmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unmt"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process should exit normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn help_exits_zero() {
    let out = unmt(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("eval-lexicon"));
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    assert_eq!(code(&unmt(&[])), 1);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(code(&unmt(&["pipeline", "--frobnicate"])), 1);
}

#[test]
fn invalid_stage_name_is_a_usage_error() {
    let out = unmt(&["pipeline", "--stage", "nonsuch"]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("unknown stage `nonsuch`"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn config_problems_are_batched_into_one_failure() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(
        &conf,
        "decoder.beam_size=0\nwhat.is_this=1\ncipher.enabled=true\n",
    )
    .unwrap();
    let out = unmt(&["pipeline", "--config", conf.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("beam_size"), "{err}");
    assert!(err.contains("unknown key"), "{err}");
}

#[test]
fn overrides_win_over_config_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    // The file's beam size is invalid on its own; the override repairs it.
    std::fs::write(&conf, "decoder.beam_size=0\ncipher.enabled=true\n").unwrap();
    let out = unmt(&[
        "pipeline",
        "--config",
        conf.to_str().unwrap(),
        "--set",
        "decoder.beam_size=2",
        "--set",
        &format!("paths.workdir={}", dir.path().join("w").display()),
        "--stage",
        "synthesize",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(dir.path().join("w").join("src_corpus.txt").is_file());
}

#[test]
fn preprocess_keeps_line_counts() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("mini.txt");
    std::fs::write(
        &corpus,
        "Ein Hund lief am 3. Juli .\nZwei Katzen .\nDrei .\n",
    )
    .unwrap();
    let work = dir.path().join("work");
    let out = unmt(&[
        "preprocess",
        "--set",
        &format!("paths.src_corpus={}", corpus.display()),
        "--set",
        &format!("paths.tgt_corpus={}", corpus.display()),
        "--set",
        &format!("paths.workdir={}", work.display()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let prep = read(&work.join("src.prep.txt"));
    let slots = read(&work.join("src.slots.txt"));
    assert_eq!(prep.len(), 3);
    assert_eq!(slots.len(), 3);
    assert!(prep[0].contains("<NUMBER>"), "{}", prep[0]);
}

#[test]
fn stage_run_before_its_inputs_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = unmt(&[
        "embed",
        "--set",
        "cipher.enabled=true",
        "--set",
        &format!("paths.workdir={}", dir.path().display()),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("preprocess"), "{}", stderr(&out));
}

#[test]
fn unreadable_input_is_a_data_error() {
    let out = unmt(&[
        "eval-lexicon",
        "--table",
        "/no/such.tsv",
        "--lexicon",
        "/no/such2.tsv",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_candidate_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cands = dir.path().join("cands.tsv");
    let lm_path = dir.path().join("toy.arpa");
    std::fs::write(&cands, "zero\tsys\tone\ta b\n").unwrap();
    train_lm(&["a b".to_string()], 2, 1)
        .unwrap()
        .save(&lm_path)
        .unwrap();
    let out = unmt(&[
        "rescore",
        "--candidates",
        cands.to_str().unwrap(),
        "--lm",
        lm_path.to_str().unwrap(),
        "--output",
        dir.path().join("out.tsv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn uwr_repairs_an_aligned_file_pair() {
    let dir = tempfile::tempdir().unwrap();
    let primary = dir.path().join("primary.txt");
    let fallback = dir.path().join("fallback.txt");
    let repaired = dir.path().join("repaired.txt");
    std::fs::write(&primary, "koupil <UNK> včera\n").unwrap();
    std::fs::write(&fallback, "koupil auto včera\n").unwrap();
    let out = unmt(&[
        "uwr",
        "--primary",
        primary.to_str().unwrap(),
        "--fallback",
        fallback.to_str().unwrap(),
        "--output",
        repaired.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(read(&repaired), vec!["koupil auto včera"]);
}

#[test]
fn uwr_rejects_misaligned_files() {
    let dir = tempfile::tempdir().unwrap();
    let primary = dir.path().join("primary.txt");
    let fallback = dir.path().join("fallback.txt");
    std::fs::write(&primary, "a\nb\n").unwrap();
    std::fs::write(&fallback, "a\n").unwrap();
    let out = unmt(&[
        "uwr",
        "--primary",
        primary.to_str().unwrap(),
        "--fallback",
        fallback.to_str().unwrap(),
        "--output",
        dir.path().join("out.txt").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line counts"), "{}", stderr(&out));
}

#[test]
fn bpe_splits_and_reassembles_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    std::fs::write(&corpus, "lower lowest newer newest\nlow new lower newest\n").unwrap();
    let model = dir.path().join("bpe.model");
    let split = dir.path().join("split.txt");
    let joined = dir.path().join("joined.txt");
    let out = unmt(&[
        "learn-bpe",
        "--input",
        corpus.to_str().unwrap(),
        "--merges",
        "10",
        "--output",
        model.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = unmt(&[
        "apply-bpe",
        "--model",
        model.to_str().unwrap(),
        "--input",
        corpus.to_str().unwrap(),
        "--output",
        split.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = unmt(&[
        "apply-bpe",
        "--undo",
        "--model",
        model.to_str().unwrap(),
        "--input",
        split.to_str().unwrap(),
        "--output",
        joined.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        std::fs::read_to_string(&joined).unwrap(),
        std::fs::read_to_string(&corpus).unwrap()
    );
}

#[test]
fn eval_lexicon_prints_top1_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.tsv");
    let lexicon = dir.path().join("lexicon.tsv");
    std::fs::write(&table, "hund\tpes\t0.9\t0.9\nkatze\tpes\t0.8\t0.8\n").unwrap();
    std::fs::write(&lexicon, "hund\tpes\nkatze\tkočka\n").unwrap();
    let out = unmt(&[
        "eval-lexicon",
        "--table",
        table.to_str().unwrap(),
        "--lexicon",
        lexicon.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "accuracy=0.500000 entries=2");
}

#[test]
fn rescore_reorders_and_ensemble_selects() {
    let dir = tempfile::tempdir().unwrap();
    let cands = dir.path().join("cands.tsv");
    let lm_path = dir.path().join("toy.arpa");
    let corpus: Vec<String> = std::iter::repeat_n("a b c".to_string(), 5).collect();
    train_lm(&corpus, 2, 1).unwrap().save(&lm_path).unwrap();
    // Rank 1 is disfluent; rescoring must promote rank 2. A second system
    // contributes a competing candidate for the same sentence.
    std::fs::write(
        &cands,
        "0\tone\t1\tc b a\n0\tone\t2\ta b c\n0\ttwo\t1\tb a c\n",
    )
    .unwrap();
    let rescored = dir.path().join("rescored.tsv");
    let out = unmt(&[
        "rescore",
        "--candidates",
        cands.to_str().unwrap(),
        "--lm",
        lm_path.to_str().unwrap(),
        "--output",
        rescored.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let lines = read(&rescored);
    assert_eq!(lines[0], "0\tone\t1\ta b c");
    assert_eq!(lines[1], "0\tone\t2\tc b a");

    let winners = dir.path().join("winners.txt");
    let out = unmt(&[
        "ensemble",
        "--candidates",
        cands.to_str().unwrap(),
        "--lm",
        lm_path.to_str().unwrap(),
        "--output",
        winners.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(read(&winners), vec!["a b c"]);
}

#[test]
fn pipeline_runs_the_bundled_cipher_config_scaled_down() {
    let dir = tempfile::tempdir().unwrap();
    let bundled = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/cipher.conf");
    let out = unmt(&[
        "pipeline",
        "--config",
        bundled.to_str().unwrap(),
        "--set",
        &format!("paths.workdir={}", dir.path().display()),
        "--set",
        "cipher.content_words=50",
        "--set",
        "cipher.anchor_codes=12",
        "--set",
        "cipher.sentences_per_side=600",
        "--set",
        "embed.dim=8",
        "--set",
        "embed.min_count=3",
        "--set",
        "lm.order=2",
        "--set",
        "backtranslate.iterations=1",
        "--set",
        "backtranslate.sample_size=200",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(read(&dir.path().join("final.txt")).len(), 600);
    let eval = unmt(&[
        "eval-lexicon",
        "--table",
        dir.path().join("table.final.tsv").to_str().unwrap(),
        "--lexicon",
        dir.path().join("lexicon.tsv").to_str().unwrap(),
    ]);
    assert_eq!(code(&eval), 0);
    assert!(
        stdout(&eval).starts_with("accuracy=0."),
        "{}",
        stdout(&eval)
    );
}
