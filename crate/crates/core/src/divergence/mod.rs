//! Difference quantification between a paraphrased sentence and its aligned
//! original span: lexical (1 − BLEU over tokens), grammatical (1 − BLEU over
//! POS tags), syntactic (normalized edit distance of depth-3 parse trees) and
//! their mean.

mod bleu;
mod tree;

use serde::{Deserialize, Serialize};

pub use bleu::{sentence_bleu, MAX_ORDER, SMOOTHING_EPSILON};
pub use tree::{tree_edit_distance, truncate_tree, ParseTree};

use crate::corpus::SentenceAnnotation;
use crate::error::{Error, Result};

/// Parse-tree level kept before comparing trees.
pub const SYNTAX_LEVEL: usize = 3;

/// Label of the virtual root joining the parses of a multi-sentence span.
pub const SPAN_ROOT: &str = "SPAN";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceVector {
    pub lexical: f64,
    pub grammatical: f64,
    pub syntactic: f64,
    pub aggregate: f64,
}

impl DivergenceVector {
    pub fn new(lexical: f64, grammatical: f64, syntactic: f64) -> Self {
        DivergenceVector {
            lexical,
            grammatical,
            syntactic,
            aggregate: (lexical + grammatical + syntactic) / 3.0,
        }
    }

    pub fn zero() -> Self {
        DivergenceVector::new(0.0, 0.0, 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.lexical == 0.0 && self.grammatical == 0.0 && self.syntactic == 0.0
    }

    /// `[lexical, grammatical, syntactic]`
    pub fn components(&self) -> [f64; 3] {
        [self.lexical, self.grammatical, self.syntactic]
    }
}

/// Lowercases, splits on whitespace and peels leading/trailing punctuation into
/// separate tokens. Used whenever raw strings stand in for annotations.
pub fn tokenize(text: &str) -> Vec<String> {
    const PEEL: &[char] = &[
        '.', ',', '!', '?', ';', ':', '"', '\'', '(', ')', '[', ']', '“', '”', '‘', '’', '。',
        '！', '？',
    ];
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let lower = word.to_lowercase();
        let trimmed_front = lower.trim_start_matches(PEEL);
        for c in lower[..lower.len() - trimmed_front.len()].chars() {
            out.push(c.to_string());
        }
        let core = trimmed_front.trim_end_matches(PEEL);
        if !core.is_empty() {
            out.push(core.to_string());
        }
        for c in trimmed_front[core.len()..].chars() {
            out.push(c.to_string());
        }
    }
    out
}

pub fn lexical_divergence<S: AsRef<str>, T: AsRef<str>>(sentence: &[S], span: &[T]) -> Result<f64> {
    Ok(1.0 - sentence_bleu(sentence, span, MAX_ORDER)?)
}

pub fn grammatical_divergence<S: AsRef<str>, T: AsRef<str>>(
    sentence_pos: &[S],
    span_pos: &[T],
) -> Result<f64> {
    Ok(1.0 - sentence_bleu(sentence_pos, span_pos, MAX_ORDER)?)
}

/// Edit distance of the depth-3 truncations over the larger truncated node count, clamped to [0, 1].
pub fn syntactic_divergence(a: &ParseTree, b: &ParseTree) -> f64 {
    let (ta, tb) = (a.truncate(SYNTAX_LEVEL), b.truncate(SYNTAX_LEVEL));
    let dist = tree_edit_distance(&ta, &tb) as f64;
    let denom = ta.node_count().max(tb.node_count()) as f64;
    (dist / denom).clamp(0.0, 1.0)
}

/// A divergence vector plus the fallbacks taken while computing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Divergence {
    pub vector: DivergenceVector,
    /// A parse was absent on either side, so the syntactic component is 0.
    pub missing_parse: bool,
}

pub fn divergence_vector(s: &SentenceAnnotation, t: &SentenceAnnotation) -> Result<Divergence> {
    s.validate()?;
    t.validate()?;
    let lexical = lexical_divergence(&s.tokens, &t.tokens)?;
    let grammatical = grammatical_divergence(&s.pos_tags, &t.pos_tags)?;
    let (syntactic, missing_parse) = match (s.tree()?, t.tree()?) {
        (Some(a), Some(b)) => (syntactic_divergence(&a, &b), false),
        _ => (0.0, true),
    };
    Ok(Divergence {
        vector: DivergenceVector::new(lexical, grammatical, syntactic),
        missing_parse,
    })
}

/// Concatenates the annotations of consecutive original sentences into one span.
///
/// Tokens and tags are concatenated. A single sentence keeps its parse; several
/// are joined under a virtual [`SPAN_ROOT`] node, reported by the returned flag.
/// The parse is dropped if any sentence lacks one.
pub fn merge_span(sentences: &[SentenceAnnotation]) -> Result<(SentenceAnnotation, bool)> {
    match sentences {
        [] => Err(Error::InvalidArgument("cannot merge an empty span".into())),
        [one] => Ok((one.clone(), false)),
        many => {
            let tokens = many.iter().flat_map(|s| s.tokens.iter().cloned()).collect();
            let pos_tags = many.iter().flat_map(|s| s.pos_tags.iter().cloned()).collect();
            let trees: Option<Vec<ParseTree>> =
                many.iter().map(|s| s.tree().transpose()).collect::<Option<Result<_>>>().transpose()?;
            let parse = trees.map(|ts| ParseTree::node(SPAN_ROOT, ts).to_string());
            let virtual_root = parse.is_some();
            Ok((
                SentenceAnnotation {
                    tokens,
                    pos_tags,
                    parse,
                },
                virtual_root,
            ))
        }
    }
}
