//! Record data model, JSONL ingestion and dataset-construction helpers.

use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::ops::RangeInclusive;
use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::divergence::ParseTree;
use crate::error::{Error, Result};
use crate::jsonl;
use crate::rng;
use crate::segment::{join_sentences, split_sentences, SentenceList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Human,
    Machine,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub source: Source,
    pub domain: String,
    pub generator: String,
}

/// Half-open sentence range `[start, end)`. Serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "(usize, usize)", into = "(usize, usize)")]
pub struct SpanSelection {
    pub start: usize,
    pub end: usize,
}

impl SpanSelection {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidArgument(format!(
                "empty or reversed span [{start}, {end})"
            )));
        }
        Ok(SpanSelection { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.start..self.end).contains(&index)
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

impl TryFrom<(usize, usize)> for SpanSelection {
    type Error = Error;

    fn try_from((start, end): (usize, usize)) -> Result<Self> {
        SpanSelection::new(start, end)
    }
}

impl From<SpanSelection> for (usize, usize) {
    fn from(span: SpanSelection) -> Self {
        (span.start, span.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ContextAgnostic,
    ContextAware,
    None,
}

/// An original document and its (partially) paraphrased rewrite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "RecordLine", from = "RecordLine")]
pub struct ParaphraseRecord {
    pub id: String,
    pub original: Document,
    pub paraphrased_text: String,
    pub original_spans: Vec<SpanSelection>,
    pub paraphrased_spans: Vec<SpanSelection>,
    pub method: Method,
    pub prompt_id: Option<String>,
}

/// Flat wire form of [`ParaphraseRecord`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RecordLine {
    id: String,
    source: Source,
    domain: String,
    generator: String,
    original_text: String,
    paraphrased_text: String,
    original_spans: Vec<SpanSelection>,
    paraphrased_spans: Vec<SpanSelection>,
    method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prompt_id: Option<String>,
}

impl From<ParaphraseRecord> for RecordLine {
    fn from(r: ParaphraseRecord) -> Self {
        RecordLine {
            id: r.id,
            source: r.original.source,
            domain: r.original.domain,
            generator: r.original.generator,
            original_text: r.original.text,
            paraphrased_text: r.paraphrased_text,
            original_spans: r.original_spans,
            paraphrased_spans: r.paraphrased_spans,
            method: r.method,
            prompt_id: r.prompt_id,
        }
    }
}

impl From<RecordLine> for ParaphraseRecord {
    fn from(l: RecordLine) -> Self {
        ParaphraseRecord {
            original: Document {
                id: l.id.clone(),
                text: l.original_text,
                source: l.source,
                domain: l.domain,
                generator: l.generator,
            },
            id: l.id,
            paraphrased_text: l.paraphrased_text,
            original_spans: l.original_spans,
            paraphrased_spans: l.paraphrased_spans,
            method: l.method,
            prompt_id: l.prompt_id,
        }
    }
}

fn check_span_list(id: &str, spans: &[SpanSelection], sentences: usize, side: &str) -> Result<()> {
    for pair in spans.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b.start < a.start {
            return Err(Error::invalid(id, format!("unsorted {side} spans")));
        }
        if b.start < a.end {
            return Err(Error::invalid(id, format!("overlapping spans ({side})")));
        }
        if b.start == a.end {
            return Err(Error::invalid(id, format!("adjacent spans ({side})")));
        }
    }
    if let Some(last) = spans.last() {
        if last.end > sentences {
            return Err(Error::invalid(
                id,
                format!(
                    "{side} span [{}, {}) exceeds {sentences} sentences",
                    last.start, last.end
                ),
            ));
        }
    }
    Ok(())
}

/// Ranges of sentences outside `spans`, in order, including the leading and trailing gap.
fn gaps(spans: &[SpanSelection], total: usize) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::with_capacity(spans.len() + 1);
    let mut cursor = 0;
    for span in spans {
        out.push(cursor..span.start);
        cursor = span.end;
    }
    out.push(cursor..total);
    out
}

impl ParaphraseRecord {
    /// An unmodified document, `method = none`.
    pub fn unmodified(original: Document) -> Self {
        ParaphraseRecord {
            id: original.id.clone(),
            paraphrased_text: original.text.clone(),
            original,
            original_spans: Vec::new(),
            paraphrased_spans: Vec::new(),
            method: Method::None,
            prompt_id: None,
        }
    }

    pub fn segment_original(&self) -> Result<SentenceList> {
        split_sentences(&self.original.text)
            .map_err(|e| Error::invalid(&self.id, format!("original text: {e}")))
    }

    pub fn segment_paraphrased(&self) -> Result<SentenceList> {
        split_sentences(&self.paraphrased_text)
            .map_err(|e| Error::invalid(&self.id, format!("paraphrased text: {e}")))
    }

    /// Checks every record invariant, naming the violated rule on failure.
    pub fn validate(&self) -> Result<()> {
        let id = self.id.as_str();
        if self.id != self.original.id {
            return Err(Error::invalid(id, "record id differs from document id"));
        }
        let original = self.segment_original()?;
        let paraphrased = self.segment_paraphrased()?;

        if self.method == Method::None {
            if !self.original_spans.is_empty() || !self.paraphrased_spans.is_empty() {
                return Err(Error::invalid(id, "method none with non-empty spans"));
            }
            if self.paraphrased_text != self.original.text {
                return Err(Error::invalid(id, "method none but texts differ"));
            }
            return Ok(());
        }

        if self.original_spans.is_empty() {
            return Err(Error::invalid(id, "paraphrased record without spans"));
        }
        if self.original_spans.len() != self.paraphrased_spans.len() {
            return Err(Error::invalid(
                id,
                format!(
                    "span count mismatch: {} original vs {} paraphrased",
                    self.original_spans.len(),
                    self.paraphrased_spans.len()
                ),
            ));
        }
        check_span_list(id, &self.original_spans, original.len(), "original")?;
        check_span_list(id, &self.paraphrased_spans, paraphrased.len(), "paraphrased")?;

        let orig_gaps = gaps(&self.original_spans, original.len());
        let para_gaps = gaps(&self.paraphrased_spans, paraphrased.len());
        for (og, pg) in orig_gaps.iter().zip(&para_gaps) {
            if og.len() != pg.len()
                || original.sentences[og.clone()] != paraphrased.sentences[pg.clone()]
            {
                return Err(Error::invalid(
                    id,
                    format!(
                        "sentences outside spans differ (original {}..{} vs paraphrased {}..{})",
                        og.start, og.end, pg.start, pg.end
                    ),
                ));
            }
        }
        Ok(())
    }
}

pub fn load_records_from<R: Read>(reader: R, origin: &Path) -> Result<Vec<ParaphraseRecord>> {
    let lines: Vec<(usize, RecordLine)> = jsonl::read_numbered_from(reader, origin)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(lines.len());
    for (line, raw) in lines {
        let record = ParaphraseRecord::from(raw);
        if record.original.text.trim().is_empty() {
            return Err(Error::invalid(&record.id, format!("empty original text (line {line})")));
        }
        if !seen.insert(record.id.clone()) {
            return Err(Error::invalid(&record.id, format!("duplicate id (line {line})")));
        }
        record.validate()?;
        out.push(record);
    }
    Ok(out)
}

/// Reads and validates a record file, in file order.
pub fn load_records(path: &Path) -> Result<Vec<ParaphraseRecord>> {
    let file = std::fs::File::open(path).map_err(|e| jsonl::io_err(path, e))?;
    load_records_from(file, path)
}

pub fn save_records(path: &Path, records: &[ParaphraseRecord]) -> Result<()> {
    jsonl::write_path(path, records)
}

/// Uniform span length in `[min_len, min(max_len, sentence_count)]`, then a uniform start.
pub fn sample_span(
    sentence_count: usize,
    min_len: usize,
    max_len: usize,
    seed: u64,
) -> Result<SpanSelection> {
    if min_len == 0 || min_len > max_len {
        return Err(Error::InvalidArgument(format!(
            "invalid span length bounds [{min_len}, {max_len}]"
        )));
    }
    if sentence_count < min_len {
        return Err(Error::TextTooShort {
            sentences: sentence_count,
            required: min_len,
        });
    }
    let mut rng = rng::seeded(seed);
    let len = rng.gen_range(min_len..=max_len.min(sentence_count));
    let start = rng.gen_range(0..=sentence_count - len);
    Ok(SpanSelection {
        start,
        end: start + len,
    })
}

/// Samples several sorted spans separated by at least one untouched sentence.
///
/// The span count is drawn from `num_spans` capped at the largest count that
/// fits with minimum-length spans; lengths are drawn left to right, each capped
/// by the room left for the remaining spans; the leftover sentences are spread
/// over the `k + 1` gaps uniformly at random (stars and bars).
pub fn sample_multi_spans(
    sentence_count: usize,
    num_spans: RangeInclusive<usize>,
    span_len: RangeInclusive<usize>,
    seed: u64,
) -> Result<Vec<SpanSelection>> {
    let (k_lo, k_hi) = (*num_spans.start(), *num_spans.end());
    let (len_lo, len_hi) = (*span_len.start(), *span_len.end());
    if k_lo == 0 || k_lo > k_hi || len_lo == 0 || len_lo > len_hi {
        return Err(Error::InvalidArgument(format!(
            "invalid ranges: spans {k_lo}..={k_hi}, lengths {len_lo}..={len_hi}"
        )));
    }
    // k spans of minimum length plus k-1 separators.
    let k_fit = (sentence_count + 1) / (len_lo + 1);
    if k_fit < k_lo {
        return Err(Error::CannotPlaceSpans(format!(
            "{sentence_count} sentences cannot hold {k_lo} non-adjacent spans of length {len_lo}"
        )));
    }
    let mut rng = rng::seeded(seed);
    let k = rng.gen_range(k_lo..=k_hi.min(k_fit));

    let mut lengths = Vec::with_capacity(k);
    let mut used = k - 1;
    for i in 0..k {
        let reserved = (k - i - 1) * len_lo;
        let room = sentence_count - used - reserved;
        let len = rng.gen_range(len_lo..=len_hi.min(room));
        lengths.push(len);
        used += len;
    }

    let slack = sentence_count - used;
    let mut bars: Vec<usize> = sample_indices(&mut rng, slack + k, k).into_vec();
    bars.sort_unstable();

    let mut spans = Vec::with_capacity(k);
    let mut cursor = 0;
    for (i, (&bar, &len)) in bars.iter().zip(&lengths).enumerate() {
        let extra_before = bar - i;
        let consumed_extra = spans_extra(&bars, i);
        let start = cursor + (extra_before - consumed_extra);
        spans.push(SpanSelection {
            start,
            end: start + len,
        });
        cursor = start + len + 1;
    }
    Ok(spans)
}

/// Extra slack already placed before span `i`.
fn spans_extra(bars: &[usize], i: usize) -> usize {
    if i == 0 {
        0
    } else {
        bars[i - 1] - (i - 1)
    }
}

/// Replaces `span` of `original_sentences` with `replacement` and joins with single spaces.
pub fn splice_paraphrase<S: AsRef<str>, T: AsRef<str>>(
    original_sentences: &[S],
    span: SpanSelection,
    replacement: &[T],
) -> Result<(String, SpanSelection)> {
    if replacement.is_empty() {
        return Err(Error::EmptyReplacement);
    }
    if span.is_empty() || span.end > original_sentences.len() {
        return Err(Error::InvalidArgument(format!(
            "span [{}, {}) invalid for {} sentences",
            span.start,
            span.end,
            original_sentences.len()
        )));
    }
    let mut out: Vec<&str> = Vec::with_capacity(original_sentences.len() + replacement.len());
    out.extend(original_sentences[..span.start].iter().map(AsRef::as_ref));
    out.extend(replacement.iter().map(AsRef::as_ref));
    out.extend(original_sentences[span.end..].iter().map(AsRef::as_ref));
    let new_span = SpanSelection {
        start: span.start,
        end: span.start + replacement.len(),
    };
    Ok((join_sentences(&out), new_span))
}

/// Seeded 80/10/10 train/validation/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
}

pub fn split_dataset<T: Clone>(items: &[T], seed: u64) -> DatasetSplit<T> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut rng::seeded(seed));
    let n_train = items.len() * 8 / 10;
    let n_val = items.len() / 10;
    let pick = |ix: &[usize]| ix.iter().map(|&i| items[i].clone()).collect::<Vec<_>>();
    DatasetSplit {
        train: pick(&order[..n_train]),
        validation: pick(&order[n_train..n_train + n_val]),
        test: pick(&order[n_train + n_val..]),
    }
}

/// Externally produced linguistic annotation of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceAnnotation {
    pub tokens: Vec<String>,
    #[serde(rename = "pos")]
    pub pos_tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse: Option<String>,
}

impl SentenceAnnotation {
    pub fn validate(&self) -> Result<()> {
        if self.tokens.len() != self.pos_tags.len() {
            return Err(Error::LengthMismatch(format!(
                "{} tokens but {} POS tags",
                self.tokens.len(),
                self.pos_tags.len()
            )));
        }
        if let Some(parse) = &self.parse {
            ParseTree::parse(parse)?;
        }
        Ok(())
    }

    pub fn tree(&self) -> Result<Option<ParseTree>> {
        self.parse.as_deref().map(ParseTree::parse).transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Original,
    Paraphrased,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Original => "original",
            Side::Paraphrased => "paraphrased",
        })
    }
}

/// One line of the annotation sidecar file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationLine {
    pub record_id: String,
    pub side: Side,
    pub sentences: Vec<SentenceAnnotation>,
}

/// Annotations keyed by record id and side.
#[derive(Debug, Clone, Default)]
pub struct AnnotationIndex {
    entries: HashMap<(String, Side), Vec<SentenceAnnotation>>,
}

impl AnnotationIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, line: AnnotationLine) -> Result<()> {
        for (i, s) in line.sentences.iter().enumerate() {
            s.validate().map_err(|e| {
                Error::invalid(&line.record_id, format!("{} sentence {i}: {e}", line.side))
            })?;
        }
        let key = (line.record_id, line.side);
        if self.entries.contains_key(&key) {
            return Err(Error::invalid(&key.0, format!("duplicate {} annotations", key.1)));
        }
        self.entries.insert(key, line.sentences);
        Ok(())
    }

    pub fn get(&self, record_id: &str, side: Side) -> Option<&[SentenceAnnotation]> {
        self.entries
            .get(&(record_id.to_string(), side))
            .map(Vec::as_slice)
    }

    /// Annotations for one side, required to match `expected` sentences.
    pub fn require(
        &self,
        record_id: &str,
        side: Side,
        expected: usize,
    ) -> Result<&[SentenceAnnotation]> {
        let found = self.get(record_id, side).ok_or_else(|| Error::MissingAnnotations {
            record: record_id.to_string(),
            side: side.to_string(),
        })?;
        if found.len() != expected {
            return Err(Error::invalid(
                record_id,
                format!(
                    "{side} annotations cover {} sentences, text has {expected}",
                    found.len()
                ),
            ));
        }
        Ok(found)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn load_annotations(path: &Path) -> Result<AnnotationIndex> {
    let mut index = AnnotationIndex::new();
    for (line, entry) in jsonl::read_numbered::<AnnotationLine>(path)? {
        index.insert(entry).map_err(|e| Error::Format {
            line,
            message: e.to_string(),
        })?;
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn doc(id: &str, text: &str) -> Document {
        Document {
            id: id.into(),
            text: text.into(),
            source: Source::Human,
            domain: "test".into(),
            generator: "human".into(),
        }
    }

    fn parse_lines(text: &str) -> Result<Vec<ParaphraseRecord>> {
        load_records_from(Cursor::new(text.as_bytes().to_vec()), Path::new("<mem>"))
    }

    #[test]
    fn empty_file_is_empty_list() {
        assert!(parse_lines("").unwrap().is_empty());
    }

    #[test]
    fn identity_record_loads() {
        let line = r#"{"id":"r1","source":"human","domain":"d","generator":"human","original_text":"A b. C d.","paraphrased_text":"A b. C d.","original_spans":[],"paraphrased_spans":[],"method":"none"}"#;
        let recs = parse_lines(line).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].method, Method::None);
        assert_eq!(recs[0].prompt_id, None);
    }

    #[test]
    fn overlapping_spans_rejected() {
        let line = r#"{"id":"r2","source":"machine","domain":"d","generator":"g","original_text":"A a. B b. C c. D d.","paraphrased_text":"A a. B b. C c. D d.","original_spans":[[0,2],[1,3]],"paraphrased_spans":[[0,2],[1,3]],"method":"context_aware"}"#;
        let err = parse_lines(line).unwrap_err();
        assert!(err.to_string().contains("overlapping spans"), "{err}");
        assert!(err.to_string().contains("r2"), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let good = r#"{"id":"r1","source":"human","domain":"d","generator":"human","original_text":"A.","paraphrased_text":"A.","original_spans":[],"paraphrased_spans":[],"method":"none"}"#;
        let err = parse_lines(&format!("{good}\n{{not json\n")).unwrap_err();
        assert!(matches!(err, Error::Json { line: 2, .. }), "{err}");
    }

    #[test]
    fn outside_span_change_rejected() {
        let mut rec = ParaphraseRecord::unmodified(doc("r3", "One a. Two b. Three c."));
        rec.method = Method::ContextAgnostic;
        rec.paraphrased_text = "One a. Deux b. Three x.".into();
        rec.original_spans = vec![SpanSelection::new(1, 2).unwrap()];
        rec.paraphrased_spans = vec![SpanSelection::new(1, 2).unwrap()];
        let err = rec.validate().unwrap_err();
        assert!(err.to_string().contains("outside spans"), "{err}");
    }

    #[test]
    fn adjacent_spans_rejected() {
        let mut rec = ParaphraseRecord::unmodified(doc("r4", "A a. B b. C c."));
        rec.method = Method::ContextAgnostic;
        rec.original_spans = vec![SpanSelection::new(0, 1).unwrap(), SpanSelection::new(1, 2).unwrap()];
        rec.paraphrased_spans = rec.original_spans.clone();
        assert!(rec.validate().unwrap_err().to_string().contains("adjacent"));
    }

    #[test]
    fn single_sentence_span_is_forced() {
        for seed in 0..20 {
            assert_eq!(sample_span(1, 1, 10, seed).unwrap(), SpanSelection { start: 0, end: 1 });
        }
    }

    #[test]
    fn sample_span_is_deterministic() {
        assert_eq!(sample_span(5, 1, 10, 42).unwrap(), sample_span(5, 1, 10, 42).unwrap());
        assert!(matches!(sample_span(2, 3, 10, 0), Err(Error::TextTooShort { .. })));
    }

    #[test]
    fn sample_span_lengths_are_uniform() {
        let mut counts = [0usize; 11];
        for seed in 0..10_000u64 {
            counts[sample_span(20, 1, 10, seed).unwrap().len()] += 1;
        }
        assert_eq!(counts[0], 0);
        let expected = 1000.0;
        let chi2: f64 = counts[1..]
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 9 degrees of freedom, p = 0.001 critical value.
        assert!(chi2 < 27.88, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn multi_spans_need_room() {
        assert!(matches!(
            sample_multi_spans(2, 2..=5, 1..=3, 0),
            Err(Error::CannotPlaceSpans(_))
        ));
        // Three sentences hold exactly one configuration.
        for seed in 0..50 {
            let spans = sample_multi_spans(3, 2..=5, 1..=3, seed).unwrap();
            assert_eq!(spans, vec![SpanSelection { start: 0, end: 1 }, SpanSelection { start: 2, end: 3 }]);
        }
    }

    #[test]
    fn multi_spans_deterministic_with_gaps() {
        let a = sample_multi_spans(30, 2..=5, 1..=3, 7).unwrap();
        assert_eq!(a, sample_multi_spans(30, 2..=5, 1..=3, 7).unwrap());
        for w in a.windows(2) {
            assert!(w[1].start > w[0].end);
        }
    }

    #[test]
    fn multi_span_count_histogram_covers_range() {
        let mut seen = [0usize; 6];
        for seed in 0..1000 {
            seen[sample_multi_spans(50, 2..=5, 1..=3, seed).unwrap().len()] += 1;
        }
        for k in 2..=5 {
            assert!(seen[k] > 150, "{seen:?}");
        }
    }

    #[test]
    fn splice_index_arithmetic() {
        let orig = ["S0.", "S1.", "S2.", "S3.", "S4."];
        let (text, span) = splice_paraphrase(&orig, SpanSelection::new(1, 3).unwrap(), &["P0.", "P1.", "P2."]).unwrap();
        assert_eq!(span, SpanSelection { start: 1, end: 4 });
        assert_eq!(text, "S0. P0. P1. P2. S3. S4.");
        assert!(matches!(
            splice_paraphrase(&orig, span, &[] as &[&str]),
            Err(Error::EmptyReplacement)
        ));
    }

    #[test]
    fn identity_splice() {
        let text = "Alpha one.  Beta two!\nGamma three?";
        let list = split_sentences(text).unwrap();
        let span = SpanSelection::new(1, 2).unwrap();
        let (out, _) = splice_paraphrase(&list.sentences, span, &list.sentences[1..2]).unwrap();
        assert_eq!(out, join_sentences(&list.sentences));
    }

    #[test]
    fn split_is_80_10_10() {
        let items: Vec<usize> = (0..100).collect();
        let split = split_dataset(&items, 3);
        assert_eq!((split.train.len(), split.validation.len(), split.test.len()), (80, 10, 10));
        let mut all: Vec<usize> = split.train.iter().chain(&split.validation).chain(&split.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, items);
    }

    #[test]
    fn annotation_lengths_checked() {
        let mut idx = AnnotationIndex::new();
        let bad = AnnotationLine {
            record_id: "r".into(),
            side: Side::Original,
            sentences: vec![SentenceAnnotation {
                tokens: vec!["a".into()],
                pos_tags: vec![],
                parse: None,
            }],
        };
        assert!(idx.insert(bad).is_err());
        assert!(matches!(
            idx.require("r", Side::Original, 1),
            Err(Error::MissingAnnotations { .. })
        ));
    }

    fn sentence() -> impl Strategy<Value = String> {
        ("[A-Z][a-z]{0,5}", prop::collection::vec("[a-z]{1,6}", 0..5), prop_oneof![Just('.'), Just('!'), Just('?')])
            .prop_map(|(head, rest, end)| {
                let mut s = head;
                for w in rest {
                    s.push(' ');
                    s.push_str(&w);
                }
                s.push(end);
                s
            })
            .prop_filter("abbreviation ending", |s| {
                !crate::segment::ABBREVIATIONS.contains(&s.rsplit(' ').next().unwrap())
            })
    }

    proptest! {
        #[test]
        fn sampled_span_valid(n in 1usize..40, lo in 1usize..4, extra in 0usize..8, seed in any::<u64>()) {
            let hi = lo + extra;
            match sample_span(n, lo, hi, seed) {
                Ok(span) => {
                    prop_assert!(span.start < span.end && span.end <= n);
                    prop_assert!(span.len() >= lo && span.len() <= hi);
                }
                Err(Error::TextTooShort { .. }) => prop_assert!(n < lo),
                Err(e) => prop_assert!(false, "{}", e),
            }
        }

        #[test]
        fn multi_spans_valid(n in 3usize..60, seed in any::<u64>()) {
            let spans = sample_multi_spans(n, 2..=5, 1..=3, seed).unwrap();
            prop_assert!((2..=5).contains(&spans.len()));
            prop_assert!(spans.last().unwrap().end <= n);
            for s in &spans { prop_assert!((1..=3).contains(&s.len())); }
            for w in spans.windows(2) { prop_assert!(w[1].start > w[0].end); }
        }

        #[test]
        fn splice_then_resegment_keeps_context(
            orig in prop::collection::vec(sentence(), 1..8),
            repl in prop::collection::vec(sentence(), 1..4),
            seed in any::<u64>(),
        ) {
            let span = sample_span(orig.len(), 1, 10, seed).unwrap();
            let (text, new_span) = splice_paraphrase(&orig, span, &repl).unwrap();
            let resplit = split_sentences(&text).unwrap().sentences;
            prop_assert_eq!(resplit.len(), orig.len() - span.len() + repl.len());
            prop_assert_eq!(&resplit[..span.start], &orig[..span.start]);
            prop_assert_eq!(&resplit[new_span.end..], &orig[span.end..]);

            let record = ParaphraseRecord {
                id: "p".into(),
                original: doc("p", &join_sentences(&orig)),
                paraphrased_text: text,
                original_spans: vec![span],
                paraphrased_spans: vec![new_span],
                method: Method::ContextAgnostic,
                prompt_id: None,
            };
            prop_assert!(record.validate().is_ok());
        }

        #[test]
        fn save_load_identity(
            texts in prop::collection::vec(prop::collection::vec(sentence(), 1..5), 0..5),
        ) {
            let records: Vec<ParaphraseRecord> = texts
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let mut r = ParaphraseRecord::unmodified(doc(&format!("id{i}"), &join_sentences(s)));
                    r.prompt_id = (i % 2 == 0).then(|| "p1".to_string());
                    r
                })
                .collect();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("r.jsonl");
            save_records(&path, &records).unwrap();
            prop_assert_eq!(load_records(&path).unwrap(), records);
        }
    }
}
