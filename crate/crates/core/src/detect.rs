//! Per-sentence scorers: the Oracle and Random baselines, plus ingestion of
//! scores produced by external models. Every scorer is oriented so that a
//! higher score means "more likely paraphrased".

use std::collections::HashMap;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::align::{align_greedy, SimilarityProvider};
use crate::corpus::{AnnotationIndex, ParaphraseRecord, Side};
use crate::divergence::{lexical_divergence, sentence_bleu, tokenize, MAX_ORDER};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::labels::build_labels;
use crate::rng;
use crate::segment::split_sentences;

fn default_scorer() -> String {
    "external".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceScores {
    pub record_id: String,
    pub scores: Vec<f64>,
    #[serde(rename = "scorer", default = "default_scorer")]
    pub scorer_name: String,
}

/// Lexical divergence of each paraphrased sentence from its aligned original span.
pub fn oracle_scorer(
    record: &ParaphraseRecord,
    annotations: &AnnotationIndex,
    provider: &dyn SimilarityProvider,
    threshold: f64,
) -> Result<SentenceScores> {
    let labels = build_labels(record, Some(annotations), provider, threshold)?;
    let scores = labels.regression_or_missing()?.iter().map(|v| v.lexical).collect();
    Ok(SentenceScores {
        record_id: record.id.clone(),
        scores,
        scorer_name: "oracle".into(),
    })
}

/// FNV-1a, so per-record random streams do not depend on the std hasher.
fn stable_hash(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

fn side_tokens(
    record: &ParaphraseRecord,
    annotations: Option<&AnnotationIndex>,
    side: Side,
) -> Result<Vec<Vec<String>>> {
    let list = match side {
        Side::Original => record.segment_original()?,
        Side::Paraphrased => record.segment_paraphrased()?,
    };
    match annotations {
        Some(index) => Ok(index
            .require(&record.id, side, list.len())?
            .iter()
            .map(|a| a.tokens.clone())
            .collect()),
        None => Ok(list.sentences.iter().map(|s| tokenize(s)).collect()),
    }
}

/// `1 - BLEU` of each paraphrased sentence against a uniformly drawn original
/// sentence (any position, including its own). The draw stream is keyed by the
/// seed and the record id. Tokens come from the annotations when given.
pub fn random_scorer(
    record: &ParaphraseRecord,
    annotations: Option<&AnnotationIndex>,
    seed: u64,
) -> Result<SentenceScores> {
    let para = side_tokens(record, annotations, Side::Paraphrased)?;
    let orig = side_tokens(record, annotations, Side::Original)?;
    let mut rng = rng::seeded(seed ^ stable_hash(&record.id));
    let scores = para
        .iter()
        .map(|s| {
            let j = rng.gen_range(0..orig.len());
            Ok(1.0 - sentence_bleu(s, &orig[j], MAX_ORDER)?)
        })
        .collect::<Result<_>>()?;
    Ok(SentenceScores {
        record_id: record.id.clone(),
        scores,
        scorer_name: "random".into(),
    })
}

/// Oracle-style scores for a modified text that carries no span annotation:
/// every sentence of `modified` is aligned against the whole of `original`.
pub fn oracle_text_scores(
    original: &str,
    modified: &str,
    provider: &dyn SimilarityProvider,
    threshold: f64,
) -> Result<Vec<f64>> {
    let orig = split_sentences(original)?.sentences;
    let modi = split_sentences(modified)?.sentences;
    let mat = provider.similarities("", &modi, &orig)?;
    let orig_tokens: Vec<Vec<String>> = orig.iter().map(|s| tokenize(s)).collect();
    align_greedy(&mat, threshold)
        .pairs
        .iter()
        .map(|p| {
            let target: Vec<&String> = orig_tokens[p.original.range()].iter().flatten().collect();
            lexical_divergence(&tokenize(&modi[p.paraphrased]), &target)
        })
        .collect()
}

fn validate_scores(s: &SentenceScores, expected: Option<usize>) -> Result<()> {
    if let Some(i) = s.scores.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(&s.record_id, format!("non-finite score at sentence {i}")));
    }
    if let Some(n) = expected {
        if s.scores.len() != n {
            return Err(Error::LengthMismatch(format!(
                "record {}: {} scores for {n} sentences",
                s.record_id,
                s.scores.len()
            )));
        }
    }
    Ok(())
}

/// Reads a score file; with `records`, checks each entry against the
/// paraphrased-text sentence count of the record with the same id.
pub fn load_external_scores(
    path: &Path,
    records: Option<&[ParaphraseRecord]>,
) -> Result<Vec<SentenceScores>> {
    let scores: Vec<SentenceScores> = jsonl::read_path(path)?;
    let counts: Option<HashMap<&str, usize>> = records
        .map(|rs| {
            rs.iter()
                .map(|r| Ok((r.id.as_str(), r.segment_paraphrased()?.len())))
                .collect::<Result<_>>()
        })
        .transpose()?;
    for s in &scores {
        let expected = match &counts {
            Some(c) => Some(*c.get(s.record_id.as_str()).ok_or_else(|| {
                Error::invalid(&s.record_id, "scores for unknown record")
            })?),
            None => None,
        };
        validate_scores(s, expected)?;
    }
    Ok(scores)
}

pub fn save_scores(path: &Path, scores: &[SentenceScores]) -> Result<()> {
    for s in scores {
        validate_scores(s, None)?;
    }
    jsonl::write_path(path, scores)
}
