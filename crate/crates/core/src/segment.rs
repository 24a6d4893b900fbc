//! Rule-based sentence segmentation and boundary-symbol marking.
//!
//! A split happens after sentence-final punctuation (`.`, `!`, `?`) plus any
//! closing quotes or brackets, when it is followed by whitespace and then an
//! uppercase letter, a digit or an opening quote. A lone period never splits
//! after a protected abbreviation, and a run of two or more periods (an
//! ellipsis) never splits. The full-width terminals `。！？` split without a
//! following space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default symbol appended to every sentence in model-input files.
pub const DEFAULT_BOUNDARY: &str = "</s>";

/// Tokens ending in a period that never terminate a sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "Sr.", "Jr.", "St.", "Mt.", "etc.", "e.g.", "i.e.",
    "vs.", "U.S.", "U.K.", "Fig.", "Figs.", "No.", "Nos.", "Inc.", "Ltd.", "Co.", "Corp.",
    "Gen.", "Gov.", "Sen.", "Rep.", "Capt.", "Lt.", "Col.", "approx.", "cf.", "al.",
];

const ASCII_TERMINALS: &[char] = &['.', '!', '?'];
const WIDE_TERMINALS: &[char] = &['。', '！', '？'];
const CLOSERS: &[char] = &['"', '\'', '”', '’', ')', ']', '»', '」', '』'];
const OPENERS: &[char] = &['"', '\'', '“', '‘', '(', '[', '«', '「', '『'];

/// Sentences of a source text with their byte ranges in that text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceList {
    pub sentences: Vec<String>,
    pub offsets: Vec<(usize, usize)>,
}

impl SentenceList {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn mark_boundaries(&self, symbol: &str) -> Result<String> {
        mark_boundaries(&self.sentences, symbol)
    }
}

fn is_abbreviation(text: &str, period_at: usize) -> bool {
    let word_start = text[..period_at]
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_whitespace())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    let word = text[word_start..=period_at].trim_start_matches(OPENERS);
    ABBREVIATIONS.contains(&word)
}

fn starts_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || OPENERS.contains(&c)
}

/// Splits `text` into sentences. Fails with [`Error::EmptyText`] when the text is blank.
pub fn split_sentences(text: &str) -> Result<SentenceList> {
    if text.trim().is_empty() {
        return Err(Error::EmptyText);
    }
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |k: usize| chars.get(k).map(|&(b, _)| b).unwrap_or(text.len());

    let mut offsets = Vec::new();
    let mut start: Option<usize> = None;
    let mut k = 0;
    while k < chars.len() {
        let (_, c) = chars[k];
        if start.is_none() && !c.is_whitespace() {
            start = Some(byte_at(k));
        }
        let wide = WIDE_TERMINALS.contains(&c);
        if !wide && !ASCII_TERMINALS.contains(&c) {
            k += 1;
            continue;
        }

        // Terminal run, then closing quotes or brackets.
        let run_start = k;
        let mut j = k;
        while j < chars.len()
            && (ASCII_TERMINALS.contains(&chars[j].1) || WIDE_TERMINALS.contains(&chars[j].1))
        {
            j += 1;
        }
        let run: Vec<char> = chars[run_start..j].iter().map(|&(_, c)| c).collect();
        let wide_run = run.iter().any(|c| WIDE_TERMINALS.contains(c));
        while j < chars.len() && CLOSERS.contains(&chars[j].1) {
            j += 1;
        }
        let split_end = byte_at(j);

        let splits = if wide_run {
            chars[j..].iter().any(|&(_, c)| !c.is_whitespace())
        } else {
            let ellipsis = run.len() >= 2 && run.iter().all(|&c| c == '.');
            let abbreviation = run == ['.'] && is_abbreviation(text, chars[run_start].0);
            let mut w = j;
            while w < chars.len() && chars[w].1.is_whitespace() {
                w += 1;
            }
            !ellipsis && !abbreviation && w > j && w < chars.len() && starts_sentence(chars[w].1)
        };

        if splits {
            let s = start.take().expect("sentence start precedes terminal");
            offsets.push((s, split_end));
        }
        k = j;
    }
    if let Some(s) = start {
        let end = s + text[s..].trim_end().len();
        offsets.push((s, end));
    }

    let sentences = offsets
        .iter()
        .map(|&(s, e)| text[s..e].to_string())
        .collect();
    Ok(SentenceList { sentences, offsets })
}

/// Appends `symbol` to every sentence and concatenates the results.
pub fn mark_boundaries<S: AsRef<str>>(sentences: &[S], symbol: &str) -> Result<String> {
    if sentences.is_empty() {
        return Err(Error::InvalidArgument("no sentences to mark".into()));
    }
    if symbol.is_empty() {
        return Err(Error::InvalidArgument("boundary symbol is empty".into()));
    }
    let mut out = String::new();
    for (index, sentence) in sentences.iter().enumerate() {
        let sentence = sentence.as_ref();
        if sentence.contains(symbol) {
            return Err(Error::SymbolCollision {
                symbol: symbol.to_string(),
                index,
            });
        }
        out.push_str(sentence);
        out.push_str(symbol);
    }
    Ok(out)
}

/// Inverse of [`mark_boundaries`].
pub fn split_marked(marked: &str, symbol: &str) -> Vec<String> {
    marked
        .split(symbol)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Joins sentences with single spaces, the canonical text form used throughout.
pub fn join_sentences<S: AsRef<str>>(sentences: &[S]) -> String {
    let mut out = String::new();
    for (i, s) in sentences.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(s.as_ref());
    }
    out
}
