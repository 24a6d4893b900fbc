//! Greedy alignment of paraphrased sentences to contiguous original spans.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::SpanSelection;
use crate::divergence::tokenize;
use crate::error::{Error, Result};
use crate::jsonl;

/// Similarity above which a window of original sentences counts as a match.
pub const DEFAULT_THRESHOLD: f64 = 0.75;

/// Row-major `n x m` similarities: rows are paraphrased sentences, columns original ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: Vec<Vec<f64>>,
    cols: usize,
}

impl SimilarityMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || cols == 0 {
            return Err(Error::InvalidMatrix("matrix must be at least 1x1".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} columns, expected {cols}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidMatrix(format!("non-finite entry at ({i}, {j})")));
            }
        }
        Ok(SimilarityMatrix { rows, cols })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    /// The block `rows x cols` of this matrix.
    pub fn submatrix(&self, rows: SpanSelection, cols: SpanSelection) -> Result<Self> {
        if rows.end > self.n_rows() || cols.end > self.cols {
            return Err(Error::InvalidMatrix(format!(
                "block [{}, {}) x [{}, {}) outside {}x{} matrix",
                rows.start,
                rows.end,
                cols.start,
                cols.end,
                self.n_rows(),
                self.cols
            )));
        }
        SimilarityMatrix::new(
            self.rows[rows.range()]
                .iter()
                .map(|r| r[cols.range()].to_vec())
                .collect(),
        )
    }

    pub fn transpose(&self) -> Self {
        let rows = (0..self.cols)
            .map(|j| self.rows.iter().map(|r| r[j]).collect())
            .collect();
        SimilarityMatrix {
            rows,
            cols: self.n_rows(),
        }
    }
}

/// One paraphrased index and the original window it aligns to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub paraphrased: usize,
    pub original: SpanSelection,
}

/// Exactly one pair per paraphrased row, in row order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub pairs: Vec<AlignedPair>,
}

impl Alignment {
    pub fn span_of(&self, paraphrased: usize) -> Option<SpanSelection> {
        self.pairs.get(paraphrased).map(|p| p.original)
    }
}

fn window_mean(row: &[f64], start: usize, width: usize) -> f64 {
    row[start..start + width].iter().sum::<f64>() / width as f64
}

/// Aligns one row: widest-then-leftmost window whose mean strictly exceeds
/// `threshold`, or the argmax column when no entry exceeds it.
pub fn align_row(row: &[f64], threshold: f64) -> SpanSelection {
    let m = row.len();
    let (argmax, max) = row
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (j, v)| if v > best.1 { (j, v) } else { best });
    if max <= threshold {
        return SpanSelection {
            start: argmax,
            end: argmax + 1,
        };
    }
    for width in (1..=m).rev() {
        for start in 0..=m - width {
            if window_mean(row, start, width) > threshold {
                return SpanSelection {
                    start,
                    end: start + width,
                };
            }
        }
    }
    unreachable!("the width-1 window at the argmax exceeds the threshold")
}

pub fn align_greedy(mat: &SimilarityMatrix, threshold: f64) -> Alignment {
    Alignment {
        pairs: mat
            .rows()
            .iter()
            .enumerate()
            .map(|(i, row)| AlignedPair {
                paraphrased: i,
                original: align_row(row, threshold),
            })
            .collect(),
    }
}

/// Produces the full paraphrased-by-original similarity matrix for a record.
pub trait SimilarityProvider {
    fn similarities(
        &self,
        record_id: &str,
        paraphrased: &[String],
        original: &[String],
    ) -> Result<SimilarityMatrix>;
}

fn count_vector(sentence: &str) -> HashMap<String, f64> {
    let mut counts = HashMap::new();
    for tok in tokenize(sentence) {
        *counts.entry(tok).or_insert(0.0) += 1.0;
    }
    counts
}

fn cosine(a: &HashMap<String, f64>, b: &HashMap<String, f64>) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(k, va)| b.get(k).map(|vb| va * vb))
        .sum();
    let na = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

/// Cosine similarity of lowercased token-count vectors.
pub fn lexical_similarity<S: AsRef<str>, T: AsRef<str>>(a: &[S], b: &[T]) -> Result<SimilarityMatrix> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidMatrix("both sentence lists must be non-empty".into()));
    }
    let bv: Vec<_> = b.iter().map(|s| count_vector(s.as_ref())).collect();
    let rows = a
        .iter()
        .map(|s| {
            let av = count_vector(s.as_ref());
            bv.iter().map(|v| cosine(&av, v)).collect()
        })
        .collect();
    SimilarityMatrix::new(rows)
}

/// Fallback provider used when no embedding matrices are supplied.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalSimilarity;

impl SimilarityProvider for LexicalSimilarity {
    fn similarities(&self, _: &str, paraphrased: &[String], original: &[String]) -> Result<SimilarityMatrix> {
        lexical_similarity(paraphrased, original)
    }
}

/// One line of a similarity-matrix file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixLine {
    pub record_id: String,
    pub rows: Vec<Vec<f64>>,
}

/// Matrices loaded from a similarity file, keyed by record id.
#[derive(Debug, Clone, Default)]
pub struct FileSimilarity {
    matrices: HashMap<String, SimilarityMatrix>,
}

impl FileSimilarity {
    pub fn from_lines(lines: Vec<(usize, MatrixLine)>) -> Result<Self> {
        let mut matrices = HashMap::new();
        for (line, entry) in lines {
            let mat = SimilarityMatrix::new(entry.rows).map_err(|e| Error::Format {
                line,
                message: format!("record {}: {e}", entry.record_id),
            })?;
            if matrices.insert(entry.record_id.clone(), mat).is_some() {
                return Err(Error::Format {
                    line,
                    message: format!("duplicate matrix for record {}", entry.record_id),
                });
            }
        }
        Ok(FileSimilarity { matrices })
    }

    pub fn contains(&self, record_id: &str) -> bool {
        self.matrices.contains_key(record_id)
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

/// Loads a similarity-matrix file.
pub fn file_similarity_provider(path: &Path) -> Result<FileSimilarity> {
    FileSimilarity::from_lines(jsonl::read_numbered(path)?)
}

impl SimilarityProvider for FileSimilarity {
    fn similarities(&self, record_id: &str, paraphrased: &[String], original: &[String]) -> Result<SimilarityMatrix> {
        let mat = self
            .matrices
            .get(record_id)
            .ok_or_else(|| Error::MissingSimilarity(record_id.to_string()))?;
        if mat.n_rows() != paraphrased.len() || mat.n_cols() != original.len() {
            return Err(Error::DimensionMismatch {
                record: record_id.to_string(),
                rows: mat.n_rows(),
                cols: mat.n_cols(),
                expected_rows: paraphrased.len(),
                expected_cols: original.len(),
            });
        }
        Ok(mat.clone())
    }
}

/// File matrices where present, the lexical fallback elsewhere.
#[derive(Debug, Clone, Default)]
pub struct FallbackSimilarity {
    pub file: FileSimilarity,
}

impl SimilarityProvider for FallbackSimilarity {
    fn similarities(&self, record_id: &str, paraphrased: &[String], original: &[String]) -> Result<SimilarityMatrix> {
        if self.file.contains(record_id) {
            self.file.similarities(record_id, paraphrased, original)
        } else {
            lexical_similarity(paraphrased, original)
        }
    }
}

/// Threshold separating matched from unmatched similarity scores.
///
/// Candidate cuts are the midpoints between consecutive distinct pooled scores
/// plus one cut below and one above every score; a score strictly above the
/// cut is predicted matched. The cut with the highest accuracy wins, ties go to
/// higher balanced accuracy (mean of the per-class accuracies) and then to the
/// lower cut.
pub fn calibrate_threshold(matched: &[f64], unmatched: &[f64]) -> Result<f64> {
    if matched.is_empty() || unmatched.is_empty() {
        return Err(Error::InvalidArgument(
            "calibration needs matched and unmatched scores".into(),
        ));
    }
    if matched.iter().chain(unmatched).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite calibration score".into()));
    }
    let mut pooled: Vec<f64> = matched.iter().chain(unmatched).copied().collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();

    let mut cuts = Vec::with_capacity(pooled.len() + 1);
    cuts.push(pooled[0] - 1.0);
    cuts.extend(pooled.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    cuts.push(pooled[pooled.len() - 1] + 1.0);

    let total = (matched.len() + unmatched.len()) as f64;
    let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0);
    for cut in cuts {
        let tp = matched.iter().filter(|&&v| v > cut).count() as f64;
        let tn = unmatched.iter().filter(|&&v| v <= cut).count() as f64;
        let acc = (tp + tn) / total;
        let balanced = (tp / matched.len() as f64 + tn / unmatched.len() as f64) / 2.0;
        if acc > best.0 || (acc == best.0 && balanced > best.1) {
            best = (acc, balanced, cut);
        }
    }
    Ok(best.2)
}
