//! Detection metrics, corpus statistics and the analysis harnesses.
//!
//! A sentence is predicted positive when its score is strictly greater than
//! the decision threshold, everywhere in this module.

use std::collections::{BTreeSet, HashMap};

use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{ParaphraseRecord, Source};
use crate::divergence::tokenize;
use crate::error::{Error, Result};
use crate::rng;

/// Default false-positive-rate budget for thresholded accuracy.
pub const DEFAULT_FPR: f64 = 0.01;

fn check_lengths(what: &str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

/// Rank-based AUROC (Mann–Whitney U with midranks for ties).
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths("scores vs labels", scores.len(), labels.len())?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("non-finite score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels(format!(
            "{n_pos} positives and {n_neg} negatives"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their mean.
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        let positives = order[i..=j].iter().filter(|&&k| labels[k] == 1).count();
        pos_rank_sum += midrank * positives as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Smallest observed negative score `t` with `#{neg > t} / #neg <= fpr_target`.
pub fn threshold_at_fpr(negatives: &[f64], fpr_target: f64) -> Result<f64> {
    if negatives.is_empty() {
        return Err(Error::InvalidArgument("no negatives to calibrate on".into()));
    }
    if !(0.0..=1.0).contains(&fpr_target) {
        return Err(Error::InvalidArgument(format!("FPR target {fpr_target} outside [0, 1]")));
    }
    if negatives.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("non-finite score".into()));
    }
    let mut sorted = negatives.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut k = 0;
    while k < sorted.len() {
        let t = sorted[k];
        let mut above = k;
        while above < sorted.len() && sorted[above] <= t {
            above += 1;
        }
        if (sorted.len() - above) as f64 / n <= fpr_target {
            return Ok(t);
        }
        k = above;
    }
    // Unreachable for finite scores: nothing exceeds the maximum.
    Ok(f64::INFINITY)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    pub fn false_positive_rate(&self) -> f64 {
        self.fp as f64 / (self.fp + self.tn) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub threshold: f64,
    pub accuracy: f64,
    pub counts: Counts,
}

pub fn accuracy_at_threshold(scores: &[f64], labels: &[u8], threshold: f64) -> Result<ThresholdReport> {
    check_lengths("scores vs labels", scores.len(), labels.len())?;
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no scores".into()));
    }
    let mut counts = Counts::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s > threshold, l == 1) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, false) => counts.tn += 1,
            (false, true) => counts.fn_ += 1,
        }
    }
    Ok(ThresholdReport {
        threshold,
        accuracy: counts.accuracy(),
        counts,
    })
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(pred: &[f64], reference: &[f64]) -> Result<Option<f64>> {
    check_lengths("pred vs reference", pred.len(), reference.len())?;
    if pred.len() < 2 {
        return Err(Error::InvalidArgument("correlation needs at least 2 points".into()));
    }
    let n = pred.len() as f64;
    let mx = pred.iter().sum::<f64>() / n;
    let my = reference.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in pred.iter().zip(reference) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// Which sentences enter the degree correlations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationPool {
    /// Only sentences labeled paraphrased.
    #[default]
    Paraphrased,
    All,
}

/// Per-sentence inputs of one evaluation run, pooled across records.
#[derive(Debug, Clone, Copy)]
pub struct EvalInput<'a> {
    pub scores: &'a [f64],
    pub labels: &'a [u8],
    /// Scores of held-out negatives used to set the decision threshold.
    pub calibration_negatives: &'a [f64],
    pub fpr_target: f64,
    pub lexical_reference: Option<&'a [f64]>,
    pub syntactic_reference: Option<&'a [f64]>,
    pub pool: CorrelationPool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scorer: String,
    pub sentences: usize,
    pub auroc: f64,
    pub accuracy_at_fpr: f64,
    pub fpr_target: f64,
    pub threshold: f64,
    /// `None` when undefined (no reference or zero variance).
    pub lexical_corr: Option<f64>,
    pub syntactic_corr: Option<f64>,
    pub counts: Counts,
}

fn pooled_correlation(
    scores: &[f64],
    labels: &[u8],
    reference: Option<&[f64]>,
    pool: CorrelationPool,
) -> Result<Option<f64>> {
    let Some(reference) = reference else {
        return Ok(None);
    };
    check_lengths("scores vs reference", scores.len(), reference.len())?;
    let (x, y): (Vec<f64>, Vec<f64>) = scores
        .iter()
        .zip(reference)
        .zip(labels)
        .filter(|(_, &l)| pool == CorrelationPool::All || l == 1)
        .map(|((&s, &r), _)| (s, r))
        .unzip();
    if x.len() < 2 {
        return Ok(None);
    }
    pearson(&x, &y)
}

pub fn evaluate(scorer: &str, input: &EvalInput<'_>) -> Result<EvalReport> {
    let auc = auroc(input.scores, input.labels)?;
    let threshold = threshold_at_fpr(input.calibration_negatives, input.fpr_target)?;
    let at = accuracy_at_threshold(input.scores, input.labels, threshold)?;
    Ok(EvalReport {
        scorer: scorer.to_string(),
        sentences: input.scores.len(),
        auroc: auc,
        accuracy_at_fpr: at.accuracy,
        fpr_target: input.fpr_target,
        threshold,
        lexical_corr: pooled_correlation(input.scores, input.labels, input.lexical_reference, input.pool)?,
        syntactic_corr: pooled_correlation(input.scores, input.labels, input.syntactic_reference, input.pool)?,
        counts: at.counts,
    })
}

/// Fixed-width table with one row per report. The accuracy header names the
/// FPR target of the first report.
pub fn format_table(reports: &[EvalReport]) -> String {
    let corr = |c: Option<f64>| c.map(|v| format!("{v:.2}")).unwrap_or_else(|| "n/a".into());
    let fpr = reports.first().map_or(DEFAULT_FPR, |r| r.fpr_target) * 100.0;
    let fpr = format!("{fpr:.4}");
    let accuracy = format!("Accuracy (FPR {}%)", fpr.trim_end_matches('0').trim_end_matches('.'));
    let mut out = format!(
        "{:<28} {:>7} {:>20} {:>14} {:>16}\n",
        "Model", "AUROC", accuracy, "Lexical Corr.", "Syntactic Corr."
    );
    for r in reports {
        out.push_str(&format!(
            "{:<28} {:>7.2} {:>19.2}% {:>14} {:>16}\n",
            r.scorer,
            r.auroc,
            r.accuracy_at_fpr * 100.0,
            corr(r.lexical_corr),
            corr(r.syntactic_corr)
        ));
    }
    out
}

/// Lowercased word tokens with punctuation-only tokens dropped.
pub fn word_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .collect()
}

pub fn word_counts<S: AsRef<str>>(texts: &[S]) -> HashMap<String, f64> {
    let mut counts = HashMap::new();
    for text in texts {
        for w in word_tokens(text.as_ref()) {
            *counts.entry(w).or_insert(0.0) += 1.0;
        }
    }
    counts
}

fn top_words(counts: &HashMap<String, f64>, k: usize) -> Vec<&str> {
    let mut items: Vec<(&str, f64)> = counts.iter().map(|(w, &c)| (w.as_str(), c)).collect();
    items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    items.into_iter().take(k).map(|(w, _)| w).collect()
}

/// `KL(a || b)` in nats over the union of each side's top-`k` words, after
/// adding `smoothing` to every union-vocabulary count.
pub fn kl_from_counts(
    a: &HashMap<String, f64>,
    b: &HashMap<String, f64>,
    top_k: usize,
    smoothing: f64,
) -> Result<f64> {
    let vocab: BTreeSet<&str> = top_words(a, top_k).into_iter().chain(top_words(b, top_k)).collect();
    if vocab.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "vocabulary of {} word(s) after union is too small",
            vocab.len()
        )));
    }
    let mass = |c: &HashMap<String, f64>| -> Vec<f64> {
        vocab
            .iter()
            .map(|w| c.get(*w).copied().unwrap_or(0.0) + smoothing)
            .collect()
    };
    let (pa, pb) = (mass(a), mass(b));
    let (za, zb) = (pa.iter().sum::<f64>(), pb.iter().sum::<f64>());
    let mut kl = 0.0;
    for (&ca, &cb) in pa.iter().zip(&pb) {
        let (p, q) = (ca / za, cb / zb);
        if p == 0.0 {
            continue;
        }
        if q == 0.0 {
            return Ok(f64::INFINITY);
        }
        kl += p * (p / q).ln();
    }
    Ok(kl.max(0.0))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlMode {
    /// Both corpora are index-aligned; one random half of the indices is drawn
    /// per seed and used on both sides.
    #[default]
    Paired,
    /// The first half of a shuffled `a` is compared with the second half of a shuffled `b`.
    Halves,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlOptions {
    pub top_k: usize,
    pub seeds: Vec<u64>,
    pub mode: KlMode,
    pub smoothing: f64,
}

impl Default for KlOptions {
    fn default() -> Self {
        KlOptions {
            top_k: 100,
            seeds: vec![0, 1, 2, 3, 4],
            mode: KlMode::Paired,
            smoothing: 0.5,
        }
    }
}

/// Top-k word-frequency KL divergence averaged over the configured seeds.
pub fn word_distribution_kl<S: AsRef<str>>(a: &[S], b: &[S], opts: &KlOptions) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("both corpora must be non-empty".into()));
    }
    if opts.seeds.is_empty() || opts.top_k == 0 {
        return Err(Error::InvalidArgument("need at least one seed and top_k > 0".into()));
    }
    if opts.mode == KlMode::Paired {
        check_lengths("paired corpora", a.len(), b.len())?;
    }
    let pick = |c: &[S], ix: &[usize]| ix.iter().map(|&i| c[i].as_ref().to_string()).collect::<Vec<_>>();
    let mut total = 0.0;
    for &seed in &opts.seeds {
        let mut rng = rng::seeded(seed);
        let (side_a, side_b) = match opts.mode {
            KlMode::Paired => {
                let half = (a.len() / 2).max(1);
                let ix = sample_indices(&mut rng, a.len(), half).into_vec();
                (pick(a, &ix), pick(b, &ix))
            }
            KlMode::Halves => {
                let mut ia: Vec<usize> = (0..a.len()).collect();
                let mut ib: Vec<usize> = (0..b.len()).collect();
                ia.shuffle(&mut rng);
                ib.shuffle(&mut rng);
                let ha = (a.len() / 2).max(1);
                let hb = (b.len() / 2).min(b.len() - 1);
                (pick(a, &ia[..ha]), pick(b, &ib[hb..]))
            }
        };
        total += kl_from_counts(&word_counts(&side_a), &word_counts(&side_b), opts.top_k, opts.smoothing)?;
    }
    Ok(total / opts.seeds.len() as f64)
}

/// Token log-probabilities for one text, as produced by an external language model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprobs {
    pub record_id: String,
    pub tokens: Vec<String>,
    pub logprobs: Vec<f64>,
}

/// Byte range of each token in `text`, matched left to right. Subword
/// markers (`Ġ`, `▁`, `Ċ`) and surrounding whitespace are ignored; anything
/// other than whitespace between consecutive tokens is a misalignment.
pub fn locate_tokens<S: AsRef<str>>(text: &str, tokens: &[S]) -> Result<Vec<(usize, usize)>> {
    let mut cursor = 0;
    let mut out = Vec::with_capacity(tokens.len());
    for (i, tok) in tokens.iter().enumerate() {
        let cleaned: String = tok.as_ref().chars().filter(|c| !matches!(c, 'Ġ' | '▁' | 'Ċ')).collect();
        let needle = cleaned.trim();
        if needle.is_empty() {
            out.push((cursor, cursor));
            continue;
        }
        let rest = &text[cursor..];
        let found = rest.find(needle).filter(|&p| rest[..p].trim().is_empty());
        let Some(p) = found else {
            return Err(Error::LengthMismatch(format!(
                "token/offset misalignment at token {i} ({needle:?})"
            )));
        };
        out.push((cursor + p, cursor + p + needle.len()));
        cursor += p + needle.len();
    }
    Ok(out)
}

/// Log-probabilities with the token indices where paraphrased spans start and end.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryStream {
    pub logprobs: Vec<f64>,
    /// First token of each span.
    pub span_starts: Vec<usize>,
    /// First token after each span.
    pub span_ends: Vec<usize>,
}

impl BoundaryStream {
    /// Maps the paraphrased spans of `record` onto the tokens of `lp`.
    pub fn from_record(record: &ParaphraseRecord, lp: &TokenLogprobs) -> Result<Self> {
        if lp.tokens.len() != lp.logprobs.len() {
            return Err(Error::LengthMismatch(format!(
                "record {}: token/offset misalignment, {} tokens vs {} log-probs",
                lp.record_id,
                lp.tokens.len(),
                lp.logprobs.len()
            )));
        }
        let offsets = locate_tokens(&record.paraphrased_text, &lp.tokens)
            .map_err(|e| Error::invalid(&record.id, e.to_string()))?;
        let sentences = record.segment_paraphrased()?;
        let token_at = |byte: usize| offsets.iter().position(|&(s, _)| s >= byte).unwrap_or(offsets.len());
        let mut span_starts = Vec::new();
        let mut span_ends = Vec::new();
        for span in &record.paraphrased_spans {
            span_starts.push(token_at(sentences.offsets[span.start].0));
            span_ends.push(token_at(sentences.offsets[span.end - 1].1));
        }
        Ok(BoundaryStream {
            logprobs: lp.logprobs.clone(),
            span_starts,
            span_ends,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryProfile {
    pub window: usize,
    /// Relative positions `-window..=window`.
    pub positions: Vec<i64>,
    /// Mean perplexity around span starts; `None` where no token was observed.
    pub start: Vec<Option<f64>>,
    pub end: Vec<Option<f64>>,
}

/// Mean per-token perplexity `exp(-logprob)` at each position relative to span boundaries.
pub fn boundary_perplexity_profile(streams: &[BoundaryStream], window: usize) -> Result<BoundaryProfile> {
    let width = 2 * window + 1;
    let w = window as i64;
    let mut sums = [vec![0.0; width], vec![0.0; width]];
    let mut counts = [vec![0usize; width], vec![0usize; width]];
    for stream in streams {
        if let Some(v) = stream.logprobs.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite log-prob {v}")));
        }
        let len = stream.logprobs.len() as i64;
        for (side, boundaries) in [&stream.span_starts, &stream.span_ends].into_iter().enumerate() {
            for &b in boundaries {
                for rel in -w..=w {
                    let pos = b as i64 + rel;
                    if (0..len).contains(&pos) {
                        let slot = (rel + w) as usize;
                        sums[side][slot] += (-stream.logprobs[pos as usize]).exp();
                        counts[side][slot] += 1;
                    }
                }
            }
        }
    }
    let mean = |side: usize| -> Vec<Option<f64>> {
        sums[side]
            .iter()
            .zip(&counts[side])
            .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
            .collect()
    };
    Ok(BoundaryProfile {
        window,
        positions: (-w..=w).collect(),
        start: mean(0),
        end: mean(1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefenseReport {
    pub human_rec: f64,
    pub machine_rec: f64,
    pub avg_rec: f64,
}

/// Mean of a text's sentence scores.
pub fn text_score(sentence_scores: &[f64]) -> Result<f64> {
    if sentence_scores.is_empty() {
        return Err(Error::InvalidArgument("text without sentence scores".into()));
    }
    Ok(sentence_scores.iter().sum::<f64>() / sentence_scores.len() as f64)
}

/// Flags a text as machine when its score exceeds `threshold`, otherwise
/// defers to the detector verdict, and reports per-class recall.
pub fn two_stage_defense(
    text_scores: &[f64],
    threshold: f64,
    detector: &[Source],
    gold: &[Source],
) -> Result<DefenseReport> {
    check_lengths("text scores vs detector verdicts", text_scores.len(), detector.len())?;
    check_lengths("text scores vs gold labels", text_scores.len(), gold.len())?;
    let mut hits = [0usize; 2];
    let mut totals = [0usize; 2];
    for ((&score, &verdict), &truth) in text_scores.iter().zip(detector).zip(gold) {
        let predicted = if score > threshold { Source::Machine } else { verdict };
        let class = usize::from(truth == Source::Machine);
        totals[class] += 1;
        hits[class] += usize::from(predicted == truth);
    }
    if totals.contains(&0) {
        return Err(Error::DegenerateLabels(format!(
            "{} human and {} machine texts",
            totals[0], totals[1]
        )));
    }
    let human_rec = hits[0] as f64 / totals[0] as f64;
    let machine_rec = hits[1] as f64 / totals[1] as f64;
    Ok(DefenseReport {
        human_rec,
        machine_rec,
        avg_rec: (human_rec + machine_rec) / 2.0,
    })
}

/// Fraction of minor-perturbed sentences left unflagged (score `<= threshold`).
pub fn robustness_eval(scores: &[f64], threshold: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no perturbed scores".into()));
    }
    Ok(scores.iter().filter(|&&s| s <= threshold).count() as f64 / scores.len() as f64)
}
