//! Synthetic corpora and independent reference implementations shared by
//! the integration targets.
#![allow(dead_code)]

use std::collections::BTreeMap;

use ptd_core::corpus::{
    sample_span, AnnotationIndex, AnnotationLine, Document, Method, ParaphraseRecord, SentenceAnnotation, Side,
    Source, SpanSelection,
};
use ptd_core::divergence::tokenize;
use ptd_core::rng;
use ptd_core::segment::{join_sentences, split_sentences};
use rand::seq::index::sample as sample_indices;
use rand::Rng;

pub const WORDS_PER_SENTENCE: usize = 8;

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    chars
        .next()
        .map(|c| c.to_uppercase().chain(chars).collect())
        .unwrap_or_default()
}

/// Sentence from lowercase words: first letter capitalized, terminal period.
pub fn sentence_from(words: &[String]) -> String {
    let mut out = capitalize(&words[0]);
    for w in &words[1..] {
        out.push(' ');
        out.push_str(w);
    }
    out.push('.');
    out
}

/// Words unique to document `d`, sentence `i`.
pub fn base_words(d: usize, i: usize) -> Vec<String> {
    (0..WORDS_PER_SENTENCE).map(|j| format!("d{d}s{i}w{j}")).collect()
}

/// Brute-force sentence BLEU: n-grams are consumed greedily from a reference
/// multiset, orders above the candidate length are dropped, a zero match count
/// becomes 0.1, and the brevity penalty applies.
pub fn reference_bleu(candidate: &[String], reference: &[String]) -> f64 {
    let order = candidate.len().min(4);
    let mut log_sum = 0.0;
    for n in 1..=order {
        let mut pool: BTreeMap<Vec<String>, usize> = BTreeMap::new();
        for g in reference.windows(n) {
            *pool.entry(g.to_vec()).or_default() += 1;
        }
        let mut matched = 0usize;
        let mut total = 0usize;
        for g in candidate.windows(n) {
            total += 1;
            if let Some(left) = pool.get_mut(g) {
                if *left > 0 {
                    *left -= 1;
                    matched += 1;
                }
            }
        }
        let num = if matched == 0 { 0.1 } else { matched as f64 };
        log_sum += (num / total as f64).ln();
    }
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let bp = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
    bp * (log_sum / order as f64).exp()
}

/// Annotation for every sentence of `text`: lexical tokens, a flat tag per
/// token and a fixed shallow parse.
pub fn annotate(text: &str) -> Vec<SentenceAnnotation> {
    split_sentences(text)
        .unwrap()
        .sentences
        .iter()
        .map(|s| {
            let tokens = tokenize(s);
            let pos_tags = tokens
                .iter()
                .map(|t| if t.chars().any(char::is_alphanumeric) { "NN".to_string() } else { ".".to_string() })
                .collect();
            SentenceAnnotation {
                tokens,
                pos_tags,
                parse: Some("(ROOT (S (NP) (VP)))".into()),
            }
        })
        .collect()
}

pub fn annotate_record(index: &mut AnnotationIndex, rec: &ParaphraseRecord) {
    for (side, text) in [(Side::Original, &rec.original.text), (Side::Paraphrased, &rec.paraphrased_text)] {
        index
            .insert(AnnotationLine {
                record_id: rec.id.clone(),
                side,
                sentences: annotate(text),
            })
            .unwrap();
    }
}

pub fn document(id: String, sentences: &[String], source: Source) -> Document {
    Document {
        id,
        text: join_sentences(sentences),
        source,
        domain: "synthetic".into(),
        generator: if source == Source::Human { "human".into() } else { "synthetic-lm".into() },
    }
}

/// Rewrites 3 to 5 of the words with fresh ones. Length is preserved so a
/// comparison against an unrelated sentence cannot tell paraphrases apart.
pub fn paraphrase_words(words: &[String], tag: &str, rng: &mut impl Rng) -> Vec<String> {
    let mut out = words.to_vec();
    let r = rng.gen_range(3..=5).min(words.len());
    for (k, j) in sample_indices(rng, words.len(), r).into_iter().enumerate() {
        out[j] = format!("p{tag}v{k}");
    }
    out
}

/// A record with one paraphrased span and the independent expectations for it.
pub struct Case {
    pub record: ParaphraseRecord,
    /// Expected class per paraphrased sentence.
    pub classes: Vec<u8>,
    /// Expected lexical divergence (over `tokenize` tokens) of each paraphrased
    /// sentence against its source sentence; `None` for untouched sentences.
    pub lexical: Vec<Option<f64>>,
}

/// `docs` documents of `n` sentences, each with one span of 1..=`max_span`
/// sentences rewritten sentence by sentence.
pub fn single_span_corpus(docs: usize, n: usize, max_span: usize, seed: u64) -> Vec<Case> {
    let mut rng = rng::seeded(seed);
    (0..docs)
        .map(|d| {
            let words: Vec<Vec<String>> = (0..n).map(|i| base_words(d, i)).collect();
            let sentences: Vec<String> = words.iter().map(|w| sentence_from(w)).collect();
            let span = sample_span(n, 1, max_span, seed.wrapping_add(d as u64)).unwrap();
            let mut para_sentences = sentences.clone();
            let mut lexical = vec![None; n];
            for i in span.range() {
                let pw = paraphrase_words(&words[i], &format!("{d}s{i}"), &mut rng);
                para_sentences[i] = sentence_from(&pw);
                let (cand, refr) = (tokenize(&para_sentences[i]), tokenize(&sentences[i]));
                lexical[i] = Some(1.0 - reference_bleu(&cand, &refr));
            }
            let mut classes = vec![0u8; n];
            classes[span.range()].iter_mut().for_each(|c| *c = 1);
            let id = format!("doc{d}");
            let original = document(id.clone(), &sentences, Source::Human);
            Case {
                record: ParaphraseRecord {
                    id,
                    original,
                    paraphrased_text: join_sentences(&para_sentences),
                    original_spans: vec![span],
                    paraphrased_spans: vec![span],
                    method: Method::ContextAgnostic,
                    prompt_id: Some("p1".into()),
                },
                classes,
                lexical,
            }
        })
        .collect()
}

/// Sentence-level construction of several spans whose rewrites may change the
/// sentence count. Paraphrased sentences carry a `p`-prefixed first word.
pub fn multi_span_record(
    d: usize,
    n: usize,
    spans: &[SpanSelection],
    rng: &mut impl Rng,
) -> (ParaphraseRecord, Vec<u8>) {
    let words: Vec<Vec<String>> = (0..n).map(|i| base_words(d, i)).collect();
    let sentences: Vec<String> = words.iter().map(|w| sentence_from(w)).collect();
    let mut para = Vec::new();
    let mut expected = Vec::new();
    let mut para_spans = Vec::new();
    let mut cursor = 0;
    for span in spans {
        for s in &sentences[cursor..span.start] {
            para.push(s.clone());
            expected.push(0);
        }
        let count = rng.gen_range(1..=span.len() + 1);
        let start = para.len();
        for k in 0..count {
            let src = &words[span.start + k.min(span.len() - 1)];
            let mut pw = paraphrase_words(src, &format!("{d}x{}k{k}", span.start), rng);
            pw[0] = format!("p{d}lead{}k{k}", span.start);
            para.push(sentence_from(&pw));
            expected.push(1);
        }
        para_spans.push(SpanSelection { start, end: para.len() });
        cursor = span.end;
    }
    for s in &sentences[cursor..] {
        para.push(s.clone());
        expected.push(0);
    }
    let id = format!("multi{d}");
    let record = ParaphraseRecord {
        id: id.clone(),
        original: document(id, &sentences, Source::Human),
        paraphrased_text: join_sentences(&para),
        original_spans: spans.to_vec(),
        paraphrased_spans: para_spans,
        method: Method::ContextAware,
        prompt_id: None,
    };
    (record, expected)
}

/// Zipf-weighted synthetic words `w{offset + rank}` over `vocab` ranks.
pub fn zipf_sentence(vocab: usize, offset: usize, len: usize, rng: &mut impl Rng) -> String {
    use rand::distributions::{Distribution, WeightedIndex};
    let weights: Vec<f64> = (0..vocab).map(|k| 1.0 / (k + 1) as f64).collect();
    let dist = WeightedIndex::new(&weights).unwrap();
    let words: Vec<String> = (0..len).map(|_| format!("w{}", offset + dist.sample(rng))).collect();
    sentence_from(&words)
}
