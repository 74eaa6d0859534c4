//! Text pre- and post-processing around the translation core.
//!
//! The pre-processing side lowercases and tokenizes raw sentences and
//! replaces number/date literals with `<NUMBER>`/`<DATE>` placeholders,
//! recording each replacement so post-processing can restore the literals
//! in the translated output. The post-processing side restores those
//! literals, rewrites quote characters to match the source, recases the
//! output with a frequency truecaser and appends named entities the
//! translation dropped.

mod noise;
mod truecase;

pub use noise::{add_noise, NoiseSpec};
pub use truecase::Truecaser;

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Placeholder for numeric quantities.
pub const NUMBER_TOKEN: &str = "<NUMBER>";
/// Placeholder for numbers that express a date.
pub const DATE_TOKEN: &str = "<DATE>";

/// Quote characters covering German and Czech typography.
pub const QUOTE_CHARS: &[char] = &['"', '\'', '„', '“', '”', '«', '»', '‚', '‘', '’'];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Number,
    Date,
}

impl SlotKind {
    pub fn placeholder(self) -> &'static str {
        match self {
            SlotKind::Number => NUMBER_TOKEN,
            SlotKind::Date => DATE_TOKEN,
        }
    }
}

impl fmt::Display for SlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotKind::Number => write!(f, "NUMBER"),
            SlotKind::Date => write!(f, "DATE"),
        }
    }
}

/// One delexicalized literal: which token was replaced, by which placeholder,
/// and the original surface string needed to restore it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotRecord {
    pub position: usize,
    pub kind: SlotKind,
    pub literal: String,
}

/// A lowercased token sequence that remembers the original surface forms and
/// any delexicalized literals, so the pipeline can round-trip a sentence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub case_map: Vec<String>,
    pub slots: Vec<SlotRecord>,
}

impl TokenSeq {
    /// Wraps machine output where the tokens themselves are the surface forms.
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let case_map = tokens.clone();
        TokenSeq {
            tokens,
            case_map,
            slots: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Space-joined token text.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// True for tokens made entirely of non-alphanumeric characters.
pub fn is_punctuation_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric())
}

/// True for tokens made entirely of quote characters.
pub fn is_quote_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| QUOTE_CHARS.contains(&c))
}

fn is_detachable(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Splits one sentence into lowercased tokens, detaching leading and trailing
/// punctuation of every whitespace chunk as separate tokens. Word-internal
/// punctuation ("5,5", "e-mail") is kept intact so numeric literals survive
/// as single tokens.
pub fn tokenize(line: &str) -> TokenSeq {
    let mut seq = TokenSeq::default();
    let mut push = |surface: &str| {
        seq.tokens.push(surface.to_lowercase());
        seq.case_map.push(surface.to_string());
    };
    for chunk in line.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && is_detachable(chars[start]) {
            start += 1;
        }
        while end > start && is_detachable(chars[end - 1]) {
            end -= 1;
        }
        for &c in &chars[..start] {
            push(&c.to_string());
        }
        if start < end {
            push(&chars[start..end].iter().collect::<String>());
        }
        for &c in &chars[end..] {
            push(&c.to_string());
        }
    }
    seq
}

/// `[0-9]+([.,][0-9]+)?`
fn is_numeric_token(token: &str) -> bool {
    let mut seen_sep = false;
    let mut digits_in_part = 0usize;
    if token.is_empty() {
        return false;
    }
    for c in token.chars() {
        if c.is_ascii_digit() {
            digits_in_part += 1;
        } else if (c == '.' || c == ',') && !seen_sep && digits_in_part > 0 {
            seen_sep = true;
            digits_in_part = 0;
        } else {
            return false;
        }
    }
    digits_in_part > 0
}

fn is_year_token(token: &str) -> bool {
    token.len() == 4
        && token.chars().all(|c| c.is_ascii_digit())
        && (1000..=2999).contains(&token.parse::<u32>().unwrap_or(0))
}

fn is_day_token(token: &str) -> bool {
    (1..=2).contains(&token.len()) && token.chars().all(|c| c.is_ascii_digit())
}

/// German and Czech month names (Czech also in the genitive used in dates).
const MONTH_NAMES: &[&str] = &[
    "januar",
    "februar",
    "märz",
    "april",
    "mai",
    "juni",
    "juli",
    "august",
    "september",
    "oktober",
    "november",
    "dezember",
    "leden",
    "ledna",
    "únor",
    "února",
    "březen",
    "března",
    "duben",
    "dubna",
    "květen",
    "května",
    "červen",
    "června",
    "červenec",
    "července",
    "srpen",
    "srpna",
    "září",
    "říjen",
    "října",
    "listopad",
    "listopadu",
    "prosinec",
    "prosince",
];

fn is_month_name(token: &str) -> bool {
    MONTH_NAMES.contains(&token)
}

/// Classification of a numeric token at position `i`:
/// a standalone 4-digit token in [1000, 2999] is a date (year); a 1-2 digit
/// token immediately next to a month name or inside a `d . m . yyyy` run is a
/// date; every other numeric token is a plain number.
fn classify_numeric(tokens: &[String], i: usize) -> Option<SlotKind> {
    let t = tokens[i].as_str();
    if !is_numeric_token(t) {
        return None;
    }
    if is_year_token(t) {
        return Some(SlotKind::Date);
    }
    if is_day_token(t) {
        let prev_month = i > 0 && is_month_name(tokens[i - 1].as_str());
        let next_month = i + 1 < tokens.len() && is_month_name(tokens[i + 1].as_str());
        if prev_month || next_month {
            return Some(SlotKind::Date);
        }
        // day slot of `d . m . yyyy`
        if i + 4 < tokens.len()
            && tokens[i + 1] == "."
            && is_day_token(&tokens[i + 2])
            && tokens[i + 3] == "."
            && is_year_token(&tokens[i + 4])
        {
            return Some(SlotKind::Date);
        }
        // month slot of `d . m . yyyy`
        if i >= 2
            && i + 2 < tokens.len()
            && is_day_token(&tokens[i - 2])
            && tokens[i - 1] == "."
            && tokens[i + 1] == "."
            && is_year_token(&tokens[i + 2])
        {
            return Some(SlotKind::Date);
        }
    }
    Some(SlotKind::Number)
}

/// Replaces numeric tokens with `<NUMBER>`/`<DATE>` placeholders, appending
/// one slot record per replacement in left-to-right order. Token count and
/// the surface record are unchanged.
pub fn delexicalize(seq: &TokenSeq) -> TokenSeq {
    let mut out = seq.clone();
    for i in 0..seq.tokens.len() {
        if let Some(kind) = classify_numeric(&seq.tokens, i) {
            out.slots.push(SlotRecord {
                position: i,
                kind,
                literal: seq.case_map[i].clone(),
            });
            out.tokens[i] = kind.placeholder().to_string();
        }
    }
    out
}

fn next_unused(slots: &[SlotRecord], used: &[bool], kind: SlotKind) -> Option<usize> {
    (0..slots.len()).find(|&j| !used[j] && slots[j].kind == kind)
}

/// An unused pair of consecutive NUMBER slots two tokens apart in the source,
/// i.e. the source contained a `<NUMBER> / <NUMBER>`-style composite.
fn next_composite_pair(slots: &[SlotRecord], used: &[bool]) -> Option<(usize, usize)> {
    (0..slots.len().saturating_sub(1)).find_map(|j| {
        let ok = !used[j]
            && !used[j + 1]
            && slots[j].kind == SlotKind::Number
            && slots[j + 1].kind == SlotKind::Number
            && slots[j + 1].position == slots[j].position + 2;
        ok.then_some((j, j + 1))
    })
}

/// Restores delexicalized literals into a translation. Composite
/// `<NUMBER> / <NUMBER>` patterns are matched first as a unit, then remaining
/// placeholders are filled left-to-right from the source slots of the same
/// kind. Placeholders with no literal left are deleted; surplus literals are
/// ignored.
pub fn relexicalize(translation: &TokenSeq, source_slots: &[SlotRecord]) -> TokenSeq {
    // None = keep token; Some(None) = delete; Some(Some(s)) = replace by s.
    let mut plan: Vec<Option<Option<String>>> = vec![None; translation.tokens.len()];
    let mut used = vec![false; source_slots.len()];

    let toks = &translation.tokens;
    if toks.len() >= 3 {
        for i in 0..toks.len() - 2 {
            if toks[i] == NUMBER_TOKEN
                && toks[i + 1] == "/"
                && toks[i + 2] == NUMBER_TOKEN
                && plan[i].is_none()
                && plan[i + 2].is_none()
            {
                if let Some((a, b)) = next_composite_pair(source_slots, &used) {
                    plan[i] = Some(Some(source_slots[a].literal.clone()));
                    plan[i + 2] = Some(Some(source_slots[b].literal.clone()));
                    used[a] = true;
                    used[b] = true;
                }
            }
        }
    }

    for (i, tok) in toks.iter().enumerate() {
        if plan[i].is_some() {
            continue;
        }
        let kind = match tok.as_str() {
            NUMBER_TOKEN => SlotKind::Number,
            DATE_TOKEN => SlotKind::Date,
            _ => continue,
        };
        plan[i] = Some(match next_unused(source_slots, &used, kind) {
            Some(j) => {
                used[j] = true;
                Some(source_slots[j].literal.clone())
            }
            None => None,
        });
    }

    let mut out = TokenSeq::default();
    for (i, action) in plan.iter().enumerate() {
        match action {
            None => {
                out.tokens.push(translation.tokens[i].clone());
                out.case_map.push(translation.case_map[i].clone());
            }
            Some(Some(lit)) => {
                out.tokens.push(lit.to_lowercase());
                out.case_map.push(lit.clone());
            }
            Some(None) => {}
        }
    }
    out
}

/// Rewrites the translation's quote tokens to the source's, position by
/// position, when both sides carry the same number of quote tokens. On a
/// count mismatch the translation is returned unchanged.
pub fn fix_quotes(translation: &TokenSeq, source: &TokenSeq) -> TokenSeq {
    let src_quotes: Vec<&str> = source
        .tokens
        .iter()
        .filter(|t| is_quote_token(t))
        .map(|t| t.as_str())
        .collect();
    let positions: Vec<usize> = translation
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| is_quote_token(t))
        .map(|(i, _)| i)
        .collect();
    let mut out = translation.clone();
    if src_quotes.is_empty() || src_quotes.len() != positions.len() {
        return out;
    }
    for (&pos, &q) in positions.iter().zip(src_quotes.iter()) {
        out.tokens[pos] = q.to_string();
        out.case_map[pos] = q.to_string();
    }
    out
}

/// Appends source-side named entities missing from the translation. A source
/// token counts as an entity when its original surface form contains an
/// uppercase character and it is not the sentence-initial token; entities
/// absent from the translation (case-insensitive) are appended in source
/// order, before any trailing punctuation.
pub fn patch_up(translation: &TokenSeq, source: &TokenSeq) -> TokenSeq {
    let present: HashSet<String> = translation
        .tokens
        .iter()
        .map(|t| t.to_lowercase())
        .collect();
    let mut entities: Vec<String> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (i, surface) in source.case_map.iter().enumerate() {
        if i == 0 || !surface.chars().any(|c| c.is_uppercase()) {
            continue;
        }
        let key = surface.to_lowercase();
        if !present.contains(&key) && seen.insert(key) {
            entities.push(surface.clone());
        }
    }
    if entities.is_empty() {
        return translation.clone();
    }
    let mut insert_at = translation.tokens.len();
    while insert_at > 0 && is_punctuation_token(&translation.tokens[insert_at - 1]) {
        insert_at -= 1;
    }
    let mut out = translation.clone();
    for (k, entity) in entities.into_iter().enumerate() {
        out.tokens.insert(insert_at + k, entity.clone());
        out.case_map.insert(insert_at + k, entity);
    }
    out
}

/// Serializes slot records as tab-separated `position:kind:literal` triples
/// (one corpus line per sentence).
pub fn slots_to_line(slots: &[SlotRecord]) -> String {
    slots
        .iter()
        .map(|s| format!("{}:{}:{}", s.position, s.kind, s.literal))
        .collect::<Vec<_>>()
        .join("\t")
}

/// Parses one sidecar line written by [`slots_to_line`].
pub fn slots_from_line(line: &str) -> Result<Vec<SlotRecord>> {
    let mut slots = Vec::new();
    if line.trim().is_empty() {
        return Ok(slots);
    }
    for field in line.split('\t') {
        let mut parts = field.splitn(3, ':');
        let (pos, kind, literal) = match (parts.next(), parts.next(), parts.next()) {
            (Some(p), Some(k), Some(l)) => (p, k, l),
            _ => {
                return Err(Error::contract(format!(
                    "malformed slot field `{field}` (want position:kind:literal)"
                )))
            }
        };
        let position: usize = pos
            .parse()
            .map_err(|_| Error::contract(format!("bad slot position `{pos}`")))?;
        let kind = match kind {
            "NUMBER" => SlotKind::Number,
            "DATE" => SlotKind::Date,
            other => return Err(Error::contract(format!("unknown slot kind `{other}`"))),
        };
        if literal.is_empty() {
            return Err(Error::contract("empty slot literal".to_string()));
        }
        slots.push(SlotRecord {
            position,
            kind,
            literal: literal.to_string(),
        });
    }
    Ok(slots)
}
