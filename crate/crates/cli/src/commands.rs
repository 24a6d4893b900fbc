//! Subcommand implementations. Each reads its inputs fully, computes, then
//! writes its output in input order.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use ptd_core::align::{file_similarity_provider, FallbackSimilarity, SimilarityProvider};
use ptd_core::corpus::{load_annotations, load_records, AnnotationIndex, Method, ParaphraseRecord, Source};
use ptd_core::detect::{load_external_scores, oracle_scorer, oracle_text_scores, random_scorer, save_scores};
use ptd_core::eval::{
    boundary_perplexity_profile, evaluate, format_table, robustness_eval, text_score, two_stage_defense,
    word_distribution_kl, BoundaryStream, CorrelationPool, EvalInput, KlMode, KlOptions, TokenLogprobs,
};
use ptd_core::labels::{align_record, build_labels, load_labels, save_labels, training_lines, ExportMode};
use ptd_core::perturb::{filter_minor, reorder_sentences, replace_words, text_bleu, Lexicon, Perturbation, PerturbationKind};
use ptd_core::segment::split_sentences;
use ptd_core::{jsonl, Error, Result, SentenceLabels, SentenceScores};
use serde::{Deserialize, Serialize};

use crate::args::*;

const KL_SEEDS: u64 = 5;

fn same_file(a: &Path, b: &Path) -> bool {
    a == b || matches!((a.canonicalize(), b.canonicalize()), (Ok(x), Ok(y)) if x == y)
}

fn check_distinct(inputs: &[&Path], output: Option<&Path>) -> Result<()> {
    if let Some(out) = output {
        if let Some(clash) = inputs.iter().find(|i| same_file(i, out)) {
            return Err(Error::InvalidArgument(format!(
                "output {} would overwrite an input",
                clash.display()
            )));
        }
    }
    Ok(())
}

fn check_range(name: &str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if !(lo..=hi).contains(&value) {
        return Err(Error::InvalidArgument(format!("--{name} {value} outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn write_jsonl<T: Serialize>(output: Option<&Path>, values: &[T]) -> Result<()> {
    match output {
        Some(path) => jsonl::write_path(path, values),
        None => jsonl::write_to(std::io::stdout().lock(), values, Path::new("<stdout>")),
    }
}

fn write_json<T: Serialize>(output: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    text.push('\n');
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
    }
}

fn provider(args: &Similarity) -> Result<Box<dyn SimilarityProvider>> {
    check_range("threshold", args.threshold, -1.0, 1.0)?;
    match (&args.similarities, args.require_embeddings) {
        (Some(path), true) => Ok(Box::new(file_similarity_provider(path)?)),
        (Some(path), false) => Ok(Box::new(FallbackSimilarity {
            file: file_similarity_provider(path)?,
        })),
        (None, true) => Err(Error::MissingInput("--require-embeddings needs --similarities".into())),
        (None, false) => Ok(Box::new(FallbackSimilarity::default())),
    }
}

fn annotations(path: Option<&Path>) -> Result<Option<AnnotationIndex>> {
    path.map(load_annotations).transpose()
}

#[derive(Deserialize)]
struct TextLine {
    id: String,
    #[serde(alias = "original_text")]
    text: String,
}

#[derive(Serialize)]
struct SegmentLine {
    id: String,
    sentences: Vec<String>,
    offsets: Vec<(usize, usize)>,
}

pub fn segment(a: &SegmentArgs) -> Result<()> {
    check_distinct(&[&a.io.input], a.io.output.as_deref())?;
    let lines: Vec<(usize, TextLine)> = jsonl::read_numbered(&a.io.input)?;
    let out = lines
        .into_iter()
        .map(|(line, t)| {
            let list = split_sentences(&t.text).map_err(|e| Error::invalid(&t.id, format!("line {line}: {e}")))?;
            Ok(SegmentLine {
                id: t.id,
                sentences: list.sentences,
                offsets: list.offsets,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_jsonl(a.io.output.as_deref(), &out)
}

#[derive(Serialize)]
struct AlignLine {
    record_id: String,
    spans: Vec<ptd_core::labels::SpanAlignment>,
}

pub fn align(a: &AlignArgs) -> Result<()> {
    check_distinct(&[&a.io.input], a.io.output.as_deref())?;
    let provider = provider(&a.similarity)?;
    let records = load_records(&a.io.input)?;
    let out = records
        .iter()
        .map(|r| {
            Ok(AlignLine {
                record_id: r.id.clone(),
                spans: align_record(r, provider.as_ref(), a.similarity.threshold)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_jsonl(a.io.output.as_deref(), &out)
}

fn export_mode(m: ExportModeArg) -> ExportMode {
    match m {
        ExportModeArg::Classification => ExportMode::Classification,
        ExportModeArg::RegressionLexical => ExportMode::RegressionLexical,
        ExportModeArg::RegressionGrammatical => ExportMode::RegressionGrammatical,
        ExportModeArg::RegressionSyntactic => ExportMode::RegressionSyntactic,
        ExportModeArg::RegressionAggregateVector => ExportMode::RegressionAggregateVector,
    }
}

pub fn label(a: &LabelArgs) -> Result<()> {
    let mut inputs = vec![a.io.input.as_path()];
    inputs.extend(a.annotations.as_deref());
    inputs.extend(a.similarity.similarities.as_deref());
    check_distinct(&inputs, a.io.output.as_deref())?;
    check_distinct(&inputs, a.labels_out.as_deref())?;
    let provider = provider(&a.similarity)?;
    let index = annotations(a.annotations.as_deref())?;
    let records = load_records(&a.io.input)?;
    let labels = records
        .iter()
        .map(|r| build_labels(r, index.as_ref(), provider.as_ref(), a.similarity.threshold))
        .collect::<Result<Vec<_>>>()?;
    let flagged: usize = labels.iter().map(|l| l.flags.identical_paraphrase.len()).sum();
    if flagged > 0 {
        log::warn!("{flagged} class-1 sentences have all-zero divergence");
    }
    let lines = training_lines(&labels, export_mode(a.mode))?;
    if let Some(path) = &a.labels_out {
        save_labels(path, &labels)?;
    }
    write_jsonl(a.io.output.as_deref(), &lines)
}

pub fn score(a: &ScoreArgs) -> Result<()> {
    let mut inputs = vec![a.io.input.as_path()];
    inputs.extend(a.annotations.as_deref());
    check_distinct(&inputs, a.io.output.as_deref())?;
    let provider = provider(&a.similarity)?;
    let index = annotations(a.annotations.as_deref())?;
    let records = load_records(&a.io.input)?;
    let scores = records
        .iter()
        .map(|r| match a.scorer {
            ScorerArg::Oracle => {
                let index = index
                    .as_ref()
                    .ok_or_else(|| Error::MissingInput("the oracle scorer needs --annotations".into()))?;
                oracle_scorer(r, index, provider.as_ref(), a.similarity.threshold)
            }
            ScorerArg::Random => random_scorer(r, index.as_ref(), a.seed),
        })
        .collect::<Result<Vec<_>>>()?;
    match &a.io.output {
        Some(path) => save_scores(path, &scores),
        None => write_jsonl(None, &scores),
    }
}

struct Pooled {
    scores: Vec<f64>,
    labels: Vec<u8>,
    lexical: Option<Vec<f64>>,
    syntactic: Option<Vec<f64>>,
}

/// Pairs scores with labels by record id, in score-file order.
fn pool(scores: &[SentenceScores], labels: &[SentenceLabels]) -> Result<Pooled> {
    let mut by_id: HashMap<&str, &SentenceLabels> = HashMap::new();
    for l in labels {
        if by_id.insert(&l.record_id, l).is_some() {
            return Err(Error::invalid(&l.record_id, "duplicate labels"));
        }
    }
    let mut seen = HashSet::new();
    let mut out = Pooled {
        scores: Vec::new(),
        labels: Vec::new(),
        lexical: Some(Vec::new()),
        syntactic: Some(Vec::new()),
    };
    for s in scores {
        if !seen.insert(s.record_id.as_str()) {
            return Err(Error::invalid(&s.record_id, "duplicate scores"));
        }
        let l = by_id
            .get(s.record_id.as_str())
            .ok_or_else(|| Error::invalid(&s.record_id, "scores without labels"))?;
        if l.classes.len() != s.scores.len() {
            return Err(Error::LengthMismatch(format!(
                "record {}: {} scores for {} labels",
                s.record_id,
                s.scores.len(),
                l.classes.len()
            )));
        }
        out.scores.extend(&s.scores);
        out.labels.extend(&l.classes);
        match &l.regression {
            Some(reg) => {
                if let Some(v) = out.lexical.as_mut() {
                    v.extend(reg.iter().map(|d| d.lexical));
                }
                if let Some(v) = out.syntactic.as_mut() {
                    v.extend(reg.iter().map(|d| d.syntactic));
                }
            }
            None => {
                out.lexical = None;
                out.syntactic = None;
            }
        }
    }
    if let Some(missing) = labels.iter().find(|l| !seen.contains(l.record_id.as_str())) {
        return Err(Error::invalid(&missing.record_id, "labels without scores"));
    }
    Ok(out)
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    check_range("fpr", a.fpr, 0.0, 1.0)?;
    check_distinct(
        &[&a.input, &a.labels, &a.validation_scores, &a.validation_labels],
        a.output.as_deref(),
    )?;
    let scores = load_external_scores(&a.input, None)?;
    let test = pool(&scores, &load_labels(&a.labels)?)?;
    let validation = pool(
        &load_external_scores(&a.validation_scores, None)?,
        &load_labels(&a.validation_labels)?,
    )?;
    let negatives: Vec<f64> = validation
        .scores
        .iter()
        .zip(&validation.labels)
        .filter(|(_, &l)| l == 0)
        .map(|(&s, _)| s)
        .collect();
    let name = a.name.clone().unwrap_or_else(|| {
        let names: HashSet<&str> = scores.iter().map(|s| s.scorer_name.as_str()).collect();
        match names.len() {
            1 => names.into_iter().next().unwrap_or_default().to_string(),
            _ => "mixed".to_string(),
        }
    });
    let report = evaluate(
        &name,
        &EvalInput {
            scores: &test.scores,
            labels: &test.labels,
            calibration_negatives: &negatives,
            fpr_target: a.fpr,
            lexical_reference: test.lexical.as_deref(),
            syntactic_reference: test.syntactic.as_deref(),
            pool: match a.pool {
                PoolArg::Paraphrased => CorrelationPool::Paraphrased,
                PoolArg::All => CorrelationPool::All,
            },
        },
    )?;
    print!("{}", format_table(std::slice::from_ref(&report)));
    if let Some(path) = &a.output {
        write_json(Some(path), &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct KlReport {
    statistic: &'static str,
    level: &'static str,
    mode: KlMode,
    top_k: usize,
    smoothing: f64,
    seeds: Vec<u64>,
    records: usize,
    kl: f64,
}

fn span_text(sentences: &[String], spans: &[ptd_core::SpanSelection]) -> String {
    spans
        .iter()
        .flat_map(|s| sentences[s.range()].iter().map(String::as_str))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn stats(a: &StatsArgs) -> Result<()> {
    let mut inputs = vec![a.io.input.as_path()];
    inputs.extend(a.logprobs.as_deref());
    check_distinct(&inputs, a.io.output.as_deref())?;
    let records = load_records(&a.io.input)?;
    if a.profile {
        let path = a
            .logprobs
            .as_deref()
            .ok_or_else(|| Error::MissingInput("--profile needs --logprobs".into()))?;
        let by_id: HashMap<&str, &ParaphraseRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
        let streams = jsonl::read_path::<TokenLogprobs>(path)?
            .iter()
            .map(|lp| {
                let rec = by_id
                    .get(lp.record_id.as_str())
                    .ok_or_else(|| Error::invalid(&lp.record_id, "log-probs for unknown record"))?;
                BoundaryStream::from_record(rec, lp)
            })
            .collect::<Result<Vec<_>>>()?;
        return write_json(a.io.output.as_deref(), &boundary_perplexity_profile(&streams, a.window)?);
    }

    check_range("smoothing", a.smoothing, 0.0, f64::MAX)?;
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for r in records.iter() {
        match a.level {
            LevelArg::Text => {
                left.push(r.original.text.clone());
                right.push(r.paraphrased_text.clone());
            }
            LevelArg::Span if r.method != Method::None => {
                left.push(span_text(&r.segment_original()?.sentences, &r.original_spans));
                right.push(span_text(&r.segment_paraphrased()?.sentences, &r.paraphrased_spans));
            }
            LevelArg::Span => {}
        }
    }
    let opts = KlOptions {
        top_k: a.top_k,
        seeds: (a.seed..a.seed + KL_SEEDS).collect(),
        mode: match a.mode {
            KlModeArg::Paired => KlMode::Paired,
            KlModeArg::Halves => KlMode::Halves,
        },
        smoothing: a.smoothing,
    };
    let kl = word_distribution_kl(&left, &right, &opts)?;
    write_json(
        a.io.output.as_deref(),
        &KlReport {
            statistic: "kl",
            level: match a.level {
                LevelArg::Span => "span",
                LevelArg::Text => "text",
            },
            mode: opts.mode,
            top_k: opts.top_k,
            smoothing: opts.smoothing,
            seeds: opts.seeds,
            records: left.len(),
            kl,
        },
    )
}

#[derive(Deserialize)]
struct VerdictLine {
    record_id: String,
    verdict: Source,
}

#[derive(Deserialize)]
struct GoldLine {
    record_id: String,
    label: Source,
}

fn by_record<T>(lines: Vec<T>, id: impl Fn(&T) -> &str, what: &str) -> Result<HashMap<String, T>> {
    let mut map = HashMap::new();
    for l in lines {
        let key = id(&l).to_string();
        if map.contains_key(&key) {
            return Err(Error::invalid(&key, format!("duplicate {what}")));
        }
        map.insert(key, l);
    }
    Ok(map)
}

pub fn defend(a: &DefendArgs) -> Result<()> {
    check_distinct(&[&a.input, &a.verdicts, &a.gold], a.output.as_deref())?;
    if a.threshold.is_nan() {
        return Err(Error::InvalidArgument("--threshold is NaN".into()));
    }
    let scores = load_external_scores(&a.input, None)?;
    let verdicts = by_record(jsonl::read_path::<VerdictLine>(&a.verdicts)?, |v| &v.record_id, "verdict")?;
    let gold = by_record(jsonl::read_path::<GoldLine>(&a.gold)?, |g| &g.record_id, "gold label")?;
    let (mut text_scores, mut det, mut truth) = (Vec::new(), Vec::new(), Vec::new());
    for s in &scores {
        let v = verdicts
            .get(&s.record_id)
            .ok_or_else(|| Error::invalid(&s.record_id, "no detector verdict"))?;
        let g = gold
            .get(&s.record_id)
            .ok_or_else(|| Error::invalid(&s.record_id, "no gold label"))?;
        text_scores.push(text_score(&s.scores).map_err(|e| Error::invalid(&s.record_id, e.to_string()))?);
        det.push(v.verdict);
        truth.push(g.label);
    }
    write_json(a.output.as_deref(), &two_stage_defense(&text_scores, a.threshold, &det, &truth)?)
}

pub fn perturb(a: &PerturbArgs) -> Result<()> {
    let mut inputs = vec![a.io.input.as_path()];
    inputs.extend(a.lexicon.as_deref());
    check_distinct(&inputs, a.io.output.as_deref())?;
    check_range("bleu-floor", a.bleu_floor, 0.0, 1.0)?;
    let lexicon = match a.kind {
        PerturbKindArg::Replace => Some(Lexicon::load(
            a.lexicon
                .as_deref()
                .ok_or_else(|| Error::MissingInput("--kind replace needs --lexicon".into()))?,
        )?),
        PerturbKindArg::Reorder => None,
    };
    let records = load_records(&a.io.input)?;
    let mut out = Vec::new();
    let (mut skipped, mut dropped) = (0usize, 0usize);
    for (i, r) in records.iter().enumerate() {
        let seed = a.seed.wrapping_add(i as u64);
        let original = &r.original.text;
        let (kind, perturbed) = match &lexicon {
            None => match reorder_sentences(original, seed) {
                Ok(t) => (PerturbationKind::Reorder, t),
                Err(Error::InvalidArgument(_)) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            },
            Some(lex) => {
                let (t, n) = replace_words(original, lex, a.rate, seed)?;
                if n == 0 {
                    skipped += 1;
                    continue;
                }
                (PerturbationKind::WordReplace, t)
            }
        };
        if !filter_minor(&perturbed, original, a.bleu_floor)? {
            dropped += 1;
            continue;
        }
        out.push(Perturbation {
            record_id: r.id.clone(),
            kind,
            bleu: text_bleu(&perturbed, original)?,
            original_text: original.clone(),
            perturbed_text: perturbed,
        });
    }
    if skipped + dropped > 0 {
        log::info!("{skipped} texts could not be perturbed, {dropped} fell below the BLEU floor");
    }
    write_jsonl(a.io.output.as_deref(), &out)
}

#[derive(Serialize)]
struct RobustReport {
    texts: usize,
    sentences: usize,
    threshold: f64,
    mean_divergence: f64,
    accuracy: f64,
}

pub fn robust(a: &RobustArgs) -> Result<()> {
    check_distinct(&[&a.input], a.output.as_deref())?;
    check_range("align-threshold", a.align_threshold, -1.0, 1.0)?;
    let perturbations: Vec<Perturbation> = jsonl::read_path(&a.input)?;
    let provider = FallbackSimilarity::default();
    let mut scores = Vec::new();
    for p in &perturbations {
        scores.extend(oracle_text_scores(&p.original_text, &p.perturbed_text, &provider, a.align_threshold)?);
    }
    let accuracy = robustness_eval(&scores, a.threshold)?;
    write_json(
        a.output.as_deref(),
        &RobustReport {
            texts: perturbations.len(),
            sentences: scores.len(),
            threshold: a.threshold,
            mean_divergence: scores.iter().sum::<f64>() / scores.len() as f64,
            accuracy,
        },
    )
}
