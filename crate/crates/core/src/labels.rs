//! Per-sentence supervision: binary classes and divergence regression targets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::align::{align_greedy, Alignment, SimilarityProvider};
use crate::corpus::{AnnotationIndex, Method, ParaphraseRecord, Side, SpanSelection};
use crate::divergence::{divergence_vector, merge_span, DivergenceVector};
use crate::error::{Error, Result};
use crate::jsonl;

/// Alignment of one paraphrased span against its original span, in span-local indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanAlignment {
    pub paraphrased_span: SpanSelection,
    pub original_span: SpanSelection,
    pub alignment: Alignment,
}

impl SpanAlignment {
    /// `(paraphrased index, original span)` pairs in document indices.
    pub fn global_pairs(&self) -> impl Iterator<Item = (usize, SpanSelection)> + '_ {
        self.alignment.pairs.iter().map(move |p| {
            (
                self.paraphrased_span.start + p.paraphrased,
                SpanSelection {
                    start: self.original_span.start + p.original.start,
                    end: self.original_span.start + p.original.end,
                },
            )
        })
    }
}

/// Aligns every paraphrased span of `record` to its original span, using the
/// block of the provider's document matrix that the span pair covers.
pub fn align_record(
    record: &ParaphraseRecord,
    provider: &dyn SimilarityProvider,
    threshold: f64,
) -> Result<Vec<SpanAlignment>> {
    if record.method == Method::None {
        return Ok(Vec::new());
    }
    let para = record.segment_paraphrased()?;
    let orig = record.segment_original()?;
    let full = provider.similarities(&record.id, &para.sentences, &orig.sentences)?;
    record
        .original_spans
        .iter()
        .zip(&record.paraphrased_spans)
        .map(|(&original_span, &paraphrased_span)| {
            let block = full.submatrix(paraphrased_span, original_span)?;
            Ok(SpanAlignment {
                paraphrased_span,
                original_span,
                alignment: align_greedy(&block, threshold),
            })
        })
        .collect()
}

/// Sentence indices where a fallback or a degenerate case applied.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelFlags {
    /// Class 1 but every divergence is zero.
    pub identical_paraphrase: Vec<usize>,
    /// Syntactic divergence forced to 0 for lack of a parse.
    pub missing_parse: Vec<usize>,
    /// Aligned span had several sentences; parses joined under a virtual root.
    pub virtual_span_root: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceLabels {
    pub record_id: String,
    /// 1 = paraphrased; one entry per paraphrased-text sentence.
    pub classes: Vec<u8>,
    /// Present when annotations were supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regression: Option<Vec<DivergenceVector>>,
    /// Aligned original span (document indices) for every class-1 sentence.
    pub alignment: Vec<Option<SpanSelection>>,
    #[serde(default)]
    pub flags: LabelFlags,
}

impl SentenceLabels {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn regression_or_missing(&self) -> Result<&[DivergenceVector]> {
        self.regression
            .as_deref()
            .ok_or_else(|| Error::MissingAnnotations {
                record: self.record_id.clone(),
                side: "regression".into(),
            })
    }
}

/// Builds classes for every paraphrased sentence and, with annotations,
/// divergence targets against each sentence's aligned original span.
pub fn build_labels(
    record: &ParaphraseRecord,
    annotations: Option<&AnnotationIndex>,
    provider: &dyn SimilarityProvider,
    threshold: f64,
) -> Result<SentenceLabels> {
    record.validate()?;
    let n = record.segment_paraphrased()?.len();
    let mut classes = vec![0u8; n];
    for span in &record.paraphrased_spans {
        classes[span.range()].iter_mut().for_each(|c| *c = 1);
    }

    let mut alignment = vec![None; n];
    for span_alignment in align_record(record, provider, threshold)? {
        for (i, original) in span_alignment.global_pairs() {
            alignment[i] = Some(original);
        }
    }

    let mut flags = LabelFlags::default();
    let regression = match annotations {
        None => None,
        Some(_) if record.method == Method::None => Some(vec![DivergenceVector::zero(); n]),
        Some(index) => {
            let m = record.segment_original()?.len();
            let para = index.require(&record.id, Side::Paraphrased, n)?;
            let orig = index.require(&record.id, Side::Original, m)?;
            let mut out = vec![DivergenceVector::zero(); n];
            for (i, aligned) in alignment.iter().enumerate() {
                let Some(span) = aligned else { continue };
                let (target, virtual_root) = merge_span(&orig[span.range()])?;
                let d = divergence_vector(&para[i], &target)
                    .map_err(|e| Error::invalid(&record.id, format!("sentence {i}: {e}")))?;
                if d.vector.is_zero() {
                    flags.identical_paraphrase.push(i);
                }
                if d.missing_parse {
                    flags.missing_parse.push(i);
                }
                if virtual_root {
                    flags.virtual_span_root.push(i);
                }
                out[i] = d.vector;
            }
            if !flags.identical_paraphrase.is_empty() {
                log::warn!(
                    "record {}: paraphrased sentences {:?} are identical to their aligned span",
                    record.id,
                    flags.identical_paraphrase
                );
            }
            if !flags.missing_parse.is_empty() {
                log::debug!("record {}: no parse for sentences {:?}", record.id, flags.missing_parse);
            }
            Some(out)
        }
    };

    Ok(SentenceLabels {
        record_id: record.id.clone(),
        classes,
        regression,
        alignment,
        flags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportMode {
    Classification,
    RegressionLexical,
    RegressionGrammatical,
    RegressionSyntactic,
    RegressionAggregateVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Class(u8),
    Scalar(f64),
    Vector([f64; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLine {
    pub record_id: String,
    pub sentence_index: usize,
    pub target: Target,
}

pub fn training_lines(labels: &[SentenceLabels], mode: ExportMode) -> Result<Vec<TrainingLine>> {
    let mut out = Vec::new();
    for l in labels {
        let targets: Vec<Target> = match mode {
            ExportMode::Classification => l.classes.iter().map(|&c| Target::Class(c)).collect(),
            _ => {
                let reg = l.regression_or_missing()?;
                reg.iter()
                    .map(|v| match mode {
                        ExportMode::RegressionLexical => Target::Scalar(v.lexical),
                        ExportMode::RegressionGrammatical => Target::Scalar(v.grammatical),
                        ExportMode::RegressionSyntactic => Target::Scalar(v.syntactic),
                        _ => Target::Vector(v.components()),
                    })
                    .collect()
            }
        };
        out.extend(targets.into_iter().enumerate().map(|(i, target)| TrainingLine {
            record_id: l.record_id.clone(),
            sentence_index: i,
            target,
        }));
    }
    Ok(out)
}

pub fn export_training_file(path: &Path, labels: &[SentenceLabels], mode: ExportMode) -> Result<()> {
    jsonl::write_path(path, &training_lines(labels, mode)?)
}

pub fn save_labels(path: &Path, labels: &[SentenceLabels]) -> Result<()> {
    jsonl::write_path(path, labels)
}

pub fn load_labels(path: &Path) -> Result<Vec<SentenceLabels>> {
    jsonl::read_path(path)
}
