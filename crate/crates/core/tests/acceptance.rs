//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ptd_core::align::{align_greedy, LexicalSimilarity, SimilarityMatrix, DEFAULT_THRESHOLD};
use ptd_core::corpus::{
    sample_multi_spans, sample_span, splice_paraphrase, AnnotationIndex, ParaphraseRecord,
};
use ptd_core::detect::{oracle_scorer, oracle_text_scores, random_scorer};
use ptd_core::divergence::{sentence_bleu, tree_edit_distance, ParseTree};
use ptd_core::eval::{auroc, pearson, robustness_eval, threshold_at_fpr, word_distribution_kl, KlOptions};
use ptd_core::labels::build_labels;
use ptd_core::perturb::{filter_minor, reorder_sentences, replace_words, Lexicon, DEFAULT_BLEU_FLOOR};
use ptd_core::rng;
use rand::Rng;

use common::*;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(took)
}

/// Widest window with mean > tau, leftmost among equals; first argmax when no entry exceeds tau.
fn brute_force_row(row: &[f64], tau: f64) -> (usize, usize) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= tau {
        let j = row.iter().position(|&v| v == max).unwrap();
        return (j, j + 1);
    }
    let mut best: Option<(usize, usize)> = None;
    for s in 0..row.len() {
        for e in s + 1..=row.len() {
            let mean = row[s..e].iter().sum::<f64>() / (e - s) as f64;
            if mean > tau {
                let better = match best {
                    None => true,
                    Some((bs, be)) => e - s > be - bs || (e - s == be - bs && s < bs),
                };
                if better {
                    best = Some((s, e));
                }
            }
        }
    }
    best.unwrap()
}

fn alignment_oracle() -> Check {
    let start = Instant::now();
    let mut rng = rng::seeded(11);
    let mut rows_checked = 0;
    for trial in 0..1000 {
        let (n, m) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.gen::<f64>()).collect()).collect();
        let mat = SimilarityMatrix::new(rows).unwrap();
        for tau in [0.5, 0.75, 0.9] {
            let got = align_greedy(&mat, tau);
            for (i, pair) in got.pairs.iter().enumerate() {
                let want = brute_force_row(mat.row(i), tau);
                ensure((pair.original.start, pair.original.end) == want, || {
                    format!("trial {trial}, tau {tau}, row {i}: got {:?}, want {want:?}", pair.original)
                })?;
                rows_checked += 1;
            }
        }
    }
    let took = within(Duration::from_secs(5), start)?;
    Ok(format!("{rows_checked} rows exact, {took:.2?}"))
}

struct Flat {
    labels: Vec<u8>,
    /// `anc[a][b]`: `a` is a proper ancestor of `b`; nodes in preorder.
    anc: Vec<Vec<bool>>,
}

fn random_tree(rng: &mut impl Rng) -> (ParseTree, Flat) {
    let n = rng.gen_range(1..=5);
    let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..3)).collect();
    // Preorder construction: each new node hangs off the current rightmost path.
    let mut parent = vec![usize::MAX; n];
    let mut path = vec![0usize];
    #[allow(clippy::needless_range_loop)]
    for v in 1..n {
        let depth = rng.gen_range(0..path.len());
        path.truncate(depth + 1);
        parent[v] = path[depth];
        path.push(v);
    }
    let mut anc = vec![vec![false; n]; n];
    for v in 1..n {
        let mut p = parent[v];
        while p != usize::MAX {
            anc[p][v] = true;
            p = parent[p];
        }
    }
    fn build(v: usize, labels: &[u8], parent: &[usize]) -> ParseTree {
        let kids = (0..labels.len()).filter(|&c| parent[c] == v).map(|c| build(c, labels, parent)).collect();
        ParseTree::node(["a", "b", "c"][labels[v] as usize], kids)
    }
    (build(0, &labels, &parent), Flat { labels, anc })
}

/// Minimum-cost Tai mapping by exhaustive search: unit insert, delete and relabel.
fn exhaustive_ted(a: &Flat, b: &Flat) -> usize {
    fn go(i: usize, a: &Flat, b: &Flat, pairs: &mut Vec<(usize, usize)>, best: &mut usize) {
        if i == a.labels.len() {
            let relabels = pairs.iter().filter(|&&(x, y)| a.labels[x] != b.labels[y]).count();
            let cost = a.labels.len() + b.labels.len() - 2 * pairs.len() + relabels;
            *best = (*best).min(cost);
            return;
        }
        go(i + 1, a, b, pairs, best);
        for j in 0..b.labels.len() {
            let ok = pairs.iter().all(|&(pi, pj)| pj < j && a.anc[pi][i] == b.anc[pj][j]);
            if ok {
                pairs.push((i, j));
                go(i + 1, a, b, pairs, best);
                pairs.pop();
            }
        }
    }
    let mut best = usize::MAX;
    go(0, a, b, &mut Vec::new(), &mut best);
    best
}

fn ted_oracle() -> Check {
    let start = Instant::now();
    let mut rng = rng::seeded(12);
    for trial in 0..500 {
        let (ta, fa) = random_tree(&mut rng);
        let (tb, fb) = random_tree(&mut rng);
        let (got, want) = (tree_edit_distance(&ta, &tb), exhaustive_ted(&fa, &fb));
        ensure(got == want, || format!("trial {trial}: {ta} vs {tb}: got {got}, want {want}"))?;
    }
    let took = within(Duration::from_secs(60), start)?;
    Ok(format!("500 pairs exact, {took:.2?}"))
}

fn bleu_oracle() -> Check {
    let mut rng = rng::seeded(13);
    let vocab = ["a", "b", "c", "d", "e"];
    let mut worst: f64 = 0.0;
    for trial in 0..1000 {
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<String> {
            let len = rng.gen_range(1..=12);
            (0..len).map(|_| vocab[rng.gen_range(0..5)].to_string()).collect()
        };
        let (c, r) = (draw(&mut rng), draw(&mut rng));
        let got = sentence_bleu(&c, &r, 4).map_err(|e| e.to_string())?;
        let want = reference_bleu(&c, &r);
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() <= 1e-9, || format!("trial {trial}: {c:?} vs {r:?}: {got} vs {want}"))?;
    }
    Ok(format!("1000 pairs, max abs diff {worst:.1e}"))
}

fn bracketing() -> Check {
    let start = Instant::now();
    let cases = single_span_corpus(50, 40, 8, 14);
    let mut annotations = AnnotationIndex::new();
    for c in &cases {
        annotate_record(&mut annotations, &c.record);
    }
    let labels: Vec<u8> = cases.iter().flat_map(|c| c.classes.iter().copied()).collect();
    ensure(labels.len() == 2000, || format!("fixture has {} sentences", labels.len()))?;
    let min_div = cases.iter().flat_map(|c| c.lexical.iter().flatten()).copied().fold(1.0, f64::min);
    ensure(min_div >= 0.3, || format!("fixture paraphrase divergence {min_div} < 0.3"))?;

    let mut oracle = Vec::new();
    for c in &cases {
        let s = oracle_scorer(&c.record, &annotations, &LexicalSimilarity, DEFAULT_THRESHOLD)
            .map_err(|e| e.to_string())?;
        oracle.extend(s.scores);
    }
    let oracle_auc = auroc(&oracle, &labels).map_err(|e| e.to_string())?;
    ensure(oracle_auc == 1.0, || format!("Oracle AUROC {oracle_auc}"))?;

    let (pred, reference): (Vec<f64>, Vec<f64>) = cases
        .iter()
        .flat_map(|c| c.lexical.iter())
        .zip(&oracle)
        .filter_map(|(r, &s)| r.map(|r| (s, r)))
        .unzip();
    let r = pearson(&pred, &reference).map_err(|e| e.to_string())?.ok_or("undefined correlation")?;
    ensure(r >= 0.999, || format!("Oracle lexical Pearson {r}"))?;

    let mut random_aucs = Vec::new();
    for seed in 0..5 {
        let mut scores = Vec::new();
        for c in &cases {
            scores.extend(random_scorer(&c.record, Some(&annotations), seed).map_err(|e| e.to_string())?.scores);
        }
        let auc = auroc(&scores, &labels).map_err(|e| e.to_string())?;
        ensure((0.45..=0.55).contains(&auc), || format!("Random AUROC {auc} for seed {seed}"))?;
        random_aucs.push(format!("{auc:.3}"));
    }
    let took = within(Duration::from_secs(30), start)?;
    Ok(format!(
        "Oracle AUROC {oracle_auc:.2}, r {r:.6}; Random AUROC [{}]; {took:.2?}",
        random_aucs.join(", ")
    ))
}

fn fpr_guarantee() -> Check {
    let mut rng = rng::seeded(15);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let n = rng.gen_range(1..=800);
        let levels = *[3u32, 20, 1000, u32::MAX].get(trial % 4).unwrap();
        let negatives: Vec<f64> = (0..n)
            .map(|_| if levels == u32::MAX { rng.gen::<f64>() } else { f64::from(rng.gen_range(0..levels)) / f64::from(levels) })
            .collect();
        let t = threshold_at_fpr(&negatives, 0.01).map_err(|e| e.to_string())?;
        let flagged = negatives.iter().filter(|&&s| s > t).count();
        // Integer form of flagged / n <= 1%.
        ensure(flagged * 100 <= n, || format!("trial {trial}: {flagged} of {n} flagged"))?;
        worst = worst.max(flagged as f64 / n as f64);
    }
    Ok(format!("100 sets, worst realized FPR {:.4}", worst))
}

fn zero_divergence_identity() -> Check {
    let mut checked = 0;
    for c in single_span_corpus(20, 12, 3, 16) {
        let rec = ParaphraseRecord::unmodified(c.record.original.clone());
        let mut annotations = AnnotationIndex::new();
        annotate_record(&mut annotations, &rec);
        let labels = build_labels(&rec, Some(&annotations), &LexicalSimilarity, DEFAULT_THRESHOLD)
            .map_err(|e| e.to_string())?;
        ensure(labels.classes.iter().all(|&k| k == 0), || format!("{}: non-zero class", rec.id))?;
        let reg = labels.regression.ok_or("missing regression labels")?;
        ensure(reg.iter().all(|v| v.components() == [0.0; 3] && v.aggregate == 0.0), || {
            format!("{}: non-zero regression", rec.id)
        })?;
        let scores = oracle_scorer(&rec, &annotations, &LexicalSimilarity, DEFAULT_THRESHOLD)
            .map_err(|e| e.to_string())?
            .scores;
        ensure(scores.iter().all(|&s| s == 0.0), || format!("{}: non-zero Oracle score", rec.id))?;
        checked += scores.len();
    }
    Ok(format!("20 records, {checked} sentences all zero"))
}

fn kl_properties() -> Check {
    let mut rng = rng::seeded(17);
    let corpus: Vec<String> = (0..40).map(|_| zipf_sentence(60, 0, 12, &mut rng)).collect();
    let self_kl = word_distribution_kl(&corpus, &corpus, &KlOptions::default()).map_err(|e| e.to_string())?;
    ensure(self_kl.abs() <= 1e-12, || format!("self KL {self_kl}"))?;

    let shifted: Vec<String> = (0..40).map(|_| zipf_sentence(60, 1000, 12, &mut rng)).collect();
    let disjoint = word_distribution_kl(&corpus, &shifted, &KlOptions::default()).map_err(|e| e.to_string())?;
    ensure(disjoint > 1.0, || format!("disjoint KL {disjoint}"))?;

    // Spans are rewritten with the same Zipf law shifted by 40 ranks.
    let (mut orig_texts, mut para_texts, mut orig_spans, mut para_spans) = (vec![], vec![], vec![], vec![]);
    for d in 0..200u64 {
        let sentences: Vec<String> = (0..10).map(|_| zipf_sentence(200, 0, 10, &mut rng)).collect();
        let span = sample_span(10, 1, 3, d).map_err(|e| e.to_string())?;
        let rewrite: Vec<String> = span.range().map(|_| zipf_sentence(200, 40, 10, &mut rng)).collect();
        let (text, new_span) = splice_paraphrase(&sentences, span, &rewrite).map_err(|e| e.to_string())?;
        assert_eq!(new_span, span);
        orig_spans.push(sentences[span.range()].join(" "));
        para_spans.push(rewrite.join(" "));
        orig_texts.push(sentences.join(" "));
        para_texts.push(text);
    }
    let opts = KlOptions::default();
    let span_kl = word_distribution_kl(&orig_spans, &para_spans, &opts).map_err(|e| e.to_string())?;
    let text_kl = word_distribution_kl(&orig_texts, &para_texts, &opts).map_err(|e| e.to_string())?;
    ensure(span_kl > 3.0 * text_kl, || format!("span KL {span_kl} vs text KL {text_kl}"))?;
    Ok(format!(
        "self {self_kl:.1e}, disjoint {disjoint:.3}, span {span_kl:.4} vs text {text_kl:.4} ({:.1}x)",
        span_kl / text_kl
    ))
}

fn multi_span_labels() -> Check {
    let mut rng = rng::seeded(18);
    let mut by_count = [0usize; 6];
    for d in 0..200 {
        let n = rng.gen_range(12..=30);
        let spans = sample_multi_spans(n, 2..=5, 1..=3, d as u64).map_err(|e| e.to_string())?;
        let (record, expected) = multi_span_record(d, n, &spans, &mut rng);
        record.validate().map_err(|e| format!("{}: {e}", record.id))?;
        let labels = build_labels(&record, None, &LexicalSimilarity, DEFAULT_THRESHOLD).map_err(|e| e.to_string())?;
        ensure(labels.classes == expected, || {
            format!("{}: classes {:?}, expected {expected:?}", record.id, labels.classes)
        })?;
        for (p_span, o_span) in record.paraphrased_spans.iter().zip(&record.original_spans) {
            for i in p_span.range() {
                let a = labels.alignment[i].ok_or_else(|| format!("{}: sentence {i} unaligned", record.id))?;
                ensure(a.start >= o_span.start && a.end <= o_span.end, || {
                    format!("{}: sentence {i} aligned outside its span", record.id)
                })?;
            }
        }
        by_count[spans.len()] += 1;
    }
    ensure(by_count[2..=5].iter().all(|&c| c > 0), || format!("span counts {by_count:?}"))?;
    Ok(format!("200 records, span-count histogram 2..5 = {:?}", &by_count[2..=5]))
}

fn robustness_harness() -> Check {
    let cases = single_span_corpus(40, 10, 3, 19);
    let mut annotations = AnnotationIndex::new();
    for c in &cases {
        annotate_record(&mut annotations, &c.record);
    }
    let (mut negatives, mut paraphrased) = (Vec::new(), Vec::new());
    for c in &cases {
        let s = oracle_scorer(&c.record, &annotations, &LexicalSimilarity, DEFAULT_THRESHOLD)
            .map_err(|e| e.to_string())?;
        for (score, class) in s.scores.iter().zip(&c.classes) {
            if *class == 1 { paraphrased.push(*score) } else { negatives.push(*score) }
        }
    }
    let threshold = threshold_at_fpr(&negatives, 0.01).map_err(|e| e.to_string())?;

    let mut tsv = String::new();
    for d in 0..40 {
        for i in 0..10 {
            for w in base_words(d, i) {
                tsv.push_str(&format!("{w}\tz{w}\n"));
            }
        }
    }
    let lexicon = Lexicon::from_tsv(&tsv).map_err(|e| e.to_string())?;

    let (mut reorder_scores, mut replace_scores, mut dropped) = (Vec::new(), Vec::new(), 0);
    for (k, c) in cases.iter().enumerate() {
        let original = &c.record.original.text;
        let reordered = reorder_sentences(original, k as u64).map_err(|e| e.to_string())?;
        let (replaced, n) = replace_words(original, &lexicon, 0.1, k as u64).map_err(|e| e.to_string())?;
        ensure(n > 0, || "no words replaced".into())?;
        for (text, sink) in [(&reordered, &mut reorder_scores), (&replaced, &mut replace_scores)] {
            if !filter_minor(text, original, DEFAULT_BLEU_FLOOR).map_err(|e| e.to_string())? {
                dropped += 1;
                continue;
            }
            sink.extend(
                oracle_text_scores(original, text, &LexicalSimilarity, DEFAULT_THRESHOLD).map_err(|e| e.to_string())?,
            );
        }
    }
    let all: Vec<f64> = reorder_scores.iter().chain(&replace_scores).copied().collect();
    let accuracy = robustness_eval(&all, threshold).map_err(|e| e.to_string())?;
    ensure((0.0..=1.0).contains(&accuracy), || format!("accuracy {accuracy}"))?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (replace_mean, para_mean) = (mean(&replace_scores), mean(&paraphrased));
    ensure(!replace_scores.is_empty(), || "every replacement was filtered out".into())?;
    ensure(replace_mean < para_mean, || {
        format!("word replacement mean {replace_mean} >= paraphrase mean {para_mean}")
    })?;
    Ok(format!(
        "accuracy {accuracy:.3} at threshold {threshold}; mean divergence replace {replace_mean:.3} < paraphrase {para_mean:.3}; reorder mean {:.3}; {dropped} dropped by BLEU floor",
        mean(&reorder_scores)
    ))
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("alignment oracle equivalence", alignment_oracle),
        ("tree edit distance oracle equivalence", ted_oracle),
        ("BLEU oracle equivalence", bleu_oracle),
        ("Oracle/Random bracketing at desk scale", bracketing),
        ("FPR guarantee", fpr_guarantee),
        ("zero-divergence identity", zero_divergence_identity),
        ("KL non-negativity, self-zero and span ordering", kl_properties),
        ("multi-span labels", multi_span_labels),
        ("robustness harness", robustness_harness),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
