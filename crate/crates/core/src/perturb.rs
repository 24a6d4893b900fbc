//! Minor perturbations for robustness checks: sentence reordering and
//! lexicon-driven word replacement, plus a BLEU filter that keeps only
//! perturbations close to the original text.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::divergence::{sentence_bleu, tokenize, MAX_ORDER};
use crate::error::{Error, Result};
use crate::jsonl::io_err;
use crate::rng;
use crate::segment::{join_sentences, split_sentences};

/// Minimum text-level BLEU against the original for a perturbation to count as minor.
pub const DEFAULT_BLEU_FLOOR: f64 = 0.70;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    Reorder,
    WordReplace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub record_id: String,
    pub kind: PerturbationKind,
    pub original_text: String,
    pub perturbed_text: String,
    pub bleu: f64,
}

/// Shuffles the sentences of `text` into a non-identity order.
pub fn reorder_sentences(text: &str, seed: u64) -> Result<String> {
    let sentences = split_sentences(text)?.sentences;
    if sentences.iter().all(|s| *s == sentences[0]) {
        return Err(Error::InvalidArgument(
            "reordering needs at least two distinct sentences".into(),
        ));
    }
    let mut rng = rng::seeded(seed);
    let mut order = sentences.clone();
    // Terminates: some permutation differs because two sentences differ.
    while order == sentences {
        order.shuffle(&mut rng);
    }
    Ok(join_sentences(&order))
}

/// Substitution candidates keyed by lowercased word.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: HashMap<String, Vec<String>>,
}

impl Lexicon {
    /// One entry per line, `word<TAB>substitute[<TAB>substitute...]`; `#` lines and blanks are skipped.
    pub fn from_tsv(source: &str) -> Result<Self> {
        let mut entries: HashMap<String, Vec<String>> = HashMap::new();
        for (i, line) in source.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t').map(str::trim);
            let word = fields.next().unwrap_or_default().to_lowercase();
            let subs: Vec<String> = fields.filter(|f| !f.is_empty()).map(String::from).collect();
            if word.is_empty() || subs.is_empty() {
                return Err(Error::Format {
                    line: i + 1,
                    message: "expected a word and at least one substitute".into(),
                });
            }
            if subs.iter().any(|s| s.chars().any(char::is_whitespace)) {
                return Err(Error::Format {
                    line: i + 1,
                    message: "substitutes must be single words".into(),
                });
            }
            entries.entry(word).or_default().extend(subs);
        }
        Ok(Lexicon { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_tsv(&std::fs::read_to_string(path).map_err(|e| io_err(path, e))?)
    }

    pub fn get(&self, word: &str) -> Option<&[String]> {
        self.entries.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Leading punctuation, word core, trailing punctuation.
fn split_word(token: &str) -> (&str, &str, &str) {
    let start = token.find(char::is_alphanumeric).unwrap_or(token.len());
    let end = token
        .rfind(char::is_alphanumeric)
        .map(|i| i + token[i..].chars().next().map_or(1, char::len_utf8))
        .unwrap_or(start);
    (&token[..start], &token[start..end], &token[end..])
}

fn match_case(template: &str, word: &str) -> String {
    if template.chars().next().is_some_and(char::is_uppercase) {
        let mut chars = word.chars();
        chars
            .next()
            .map(|c| c.to_uppercase().chain(chars).collect())
            .unwrap_or_default()
    } else {
        word.to_string()
    }
}

/// Replaces `ceil(rate * words)` lexicon words (fewer if the lexicon covers
/// fewer) with a random substitute. Whitespace, punctuation and the case of
/// the first letter are preserved. Returns the new text and the replacement count.
pub fn replace_words(text: &str, lexicon: &Lexicon, rate: f64, seed: u64) -> Result<(String, usize)> {
    if !(rate > 0.0 && rate <= 0.5) {
        return Err(Error::InvalidArgument(format!("replacement rate {rate} outside (0, 0.5]")));
    }
    // Alternating runs so that rejoining reproduces the input exactly.
    let mut pieces: Vec<String> = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let ws = rest.starts_with(char::is_whitespace);
        let cut = rest
            .find(|c: char| c.is_whitespace() != ws)
            .unwrap_or(rest.len());
        pieces.push(rest[..cut].to_string());
        rest = &rest[cut..];
    }
    let words: Vec<usize> = (0..pieces.len())
        .filter(|&i| !split_word(&pieces[i]).1.is_empty())
        .collect();
    let eligible: Vec<usize> = words
        .iter()
        .copied()
        .filter(|&i| lexicon.get(split_word(&pieces[i]).1).is_some())
        .collect();
    let wanted = (rate * words.len() as f64).ceil() as usize;
    let count = wanted.min(eligible.len());
    let mut rng = rng::seeded(seed);
    for k in sample_indices(&mut rng, eligible.len(), count) {
        let i = eligible[k];
        let (lead, core, trail) = split_word(&pieces[i]);
        let subs = lexicon.get(core).expect("eligible words are in the lexicon");
        let sub = &subs[rng.gen_range(0..subs.len())];
        pieces[i] = format!("{lead}{}{trail}", match_case(core, sub));
    }
    Ok((pieces.concat(), count))
}

/// Text-level BLEU of `perturbed` against `original`.
pub fn text_bleu(perturbed: &str, original: &str) -> Result<f64> {
    sentence_bleu(&tokenize(perturbed), &tokenize(original), MAX_ORDER)
}

/// Whether the perturbation stays within the BLEU floor.
pub fn filter_minor(perturbed: &str, original: &str, floor: f64) -> Result<bool> {
    Ok(text_bleu(perturbed, original)? >= floor)
}
