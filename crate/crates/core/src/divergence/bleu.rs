use std::collections::HashMap;

use crate::error::{Error, Result};

/// Numerator used in place of a zero clipped n-gram count.
pub const SMOOTHING_EPSILON: f64 = 0.1;

/// Default n-gram order.
pub const MAX_ORDER: usize = 4;

fn ngram_counts<'a>(tokens: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Smoothed sentence-level BLEU of `candidate` against a single `reference`.
///
/// Clipped n-gram precisions for orders `1..=max_n` are combined with uniform
/// weights; a zero clipped count is replaced by [`SMOOTHING_EPSILON`]. Orders
/// above the candidate length have no n-grams and are dropped, so the
/// effective order is `min(max_n, |candidate|)`. The brevity penalty is
/// `min(1, exp(1 - |reference| / |candidate|))`.
pub fn sentence_bleu<S: AsRef<str>, T: AsRef<str>>(
    candidate: &[S],
    reference: &[T],
    max_n: usize,
) -> Result<f64> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(Error::EmptyTokens);
    }
    if max_n == 0 {
        return Err(Error::InvalidArgument("BLEU order must be positive".into()));
    }
    let cand: Vec<&str> = candidate.iter().map(AsRef::as_ref).collect();
    let refr: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();

    let order = max_n.min(cand.len());
    let mut log_sum = 0.0;
    for n in 1..=order {
        let cand_counts = ngram_counts(&cand, n);
        let ref_counts = ngram_counts(&refr, n);
        let clipped: usize = cand_counts
            .iter()
            .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
            .sum();
        let total = cand.len() + 1 - n;
        let numerator = if clipped == 0 {
            SMOOTHING_EPSILON
        } else {
            clipped as f64
        };
        log_sum += (numerator / total as f64).ln() / order as f64;
    }

    let (c, r) = (cand.len() as f64, refr.len() as f64);
    let brevity = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
    Ok(brevity * log_sum.exp())
}
