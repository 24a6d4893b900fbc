//! Sentence-level detection of paraphrased spans in documents.
//!
//! The pipeline runs segmentation, sentence alignment, divergence
//! quantification, labeling, scoring and evaluation. Records and intermediate
//! artifacts are JSON Lines files. See the individual modules for details.

pub mod align;
pub mod corpus;
pub mod detect;
pub mod divergence;
pub mod error;
pub mod eval;
pub mod jsonl;
pub mod labels;
pub mod perturb;
pub mod rng;
pub mod segment;

pub use align::{Alignment, SimilarityMatrix, SimilarityProvider, DEFAULT_THRESHOLD};
pub use corpus::{Document, Method, ParaphraseRecord, SentenceAnnotation, Side, Source, SpanSelection};
pub use detect::SentenceScores;
pub use divergence::{DivergenceVector, ParseTree};
pub use error::{Error, ErrorClass, Result};
pub use eval::EvalReport;
pub use labels::SentenceLabels;
