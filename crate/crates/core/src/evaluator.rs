//! Corpus-level evaluation: pairs gold entries with raw generations, scores them, and
//! aggregates the results by depth and subset with confidence intervals.

use crate::corpus::{CorpusEntry, Subset};
use crate::extraction::{Extractor, TemplateFamily};
use crate::penman::{parse, StructuralError, StructuralErrorKind, StructuralReport};
use crate::seed;
use crate::smatch::{score_graphs, MappingResult, ScoreConfig, SmatchError};
use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no prediction for {} entr{}: {}", .0.len(), if .0.len() == 1 { "y" } else { "ies" }, .0.join(", "))]
    MissingPredictions(Vec<String>),
    #[error("predictions line {line}: {message}")]
    BadPrediction { line: usize, message: String },
    #[error("predictions line {line}: duplicate id {id}")]
    DuplicatePrediction { line: usize, id: String },
    #[error(transparent)]
    Smatch(#[from] SmatchError),
    #[error("a confidence interval needs at least 2 values, got {0}")]
    UndefinedCi(usize),
    #[error("unsupported confidence level {0} (supported: 0.90, 0.95, 0.99)")]
    UnsupportedLevel(f64),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
    #[error("reading predictions: {0}")]
    Io(#[from] std::io::Error),
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    /// Raw model output, template tokens included.
    pub generation: String,
    /// Set by the generator when it gave up on this entry.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub failed: bool,
}

/// Reads JSON-lines predictions keyed by id. Blank lines are ignored.
pub fn read_predictions(reader: impl BufRead) -> Result<IndexMap<String, Prediction>, EvalError> {
    let mut out = IndexMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(&line).map_err(|e| EvalError::BadPrediction {
            line: i + 1,
            message: e.to_string(),
        })?;
        if out.contains_key(&p.id) {
            return Err(EvalError::DuplicatePrediction { line: i + 1, id: p.id });
        }
        out.insert(p.id.clone(), p);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    pub score: ScoreConfig,
    pub family: Option<TemplateFamily>,
    pub extractor: Extractor,
    /// Worker threads; 0 uses the global pool (one per logical core).
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub entry_id: String,
    pub depth: usize,
    pub subset: Subset,
    pub structural: StructuralReport,
    /// Present exactly when `structural.valid`.
    pub score: Option<MappingResult>,
    /// Length of the raw generation in characters.
    pub raw_length: usize,
}

impl EvalRecord {
    pub fn is_valid(&self) -> bool {
        self.structural.valid
    }
}

/// Scores every entry against its prediction, in entry order.
///
/// Each pair is scored with a seed derived from the run seed and the entry id, so results
/// do not depend on scheduling or on which other entries are evaluated.
pub fn evaluate(
    entries: &[CorpusEntry],
    predictions: &IndexMap<String, Prediction>,
    options: &EvalOptions,
) -> Result<Vec<EvalRecord>, EvalError> {
    let missing: Vec<String> = entries
        .iter()
        .filter(|e| !predictions.contains_key(&e.id))
        .map(|e| e.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingPredictions(missing));
    }
    let run = || {
        entries
            .par_iter()
            .map(|e| evaluate_one(e, &predictions[&e.id], options))
            .collect::<Result<Vec<_>, _>>()
    };
    if options.workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(|e| EvalError::Pool(e.to_string()))?
            .install(run)
    }
}

fn evaluate_one(entry: &CorpusEntry, prediction: &Prediction, options: &EvalOptions) -> Result<EvalRecord, EvalError> {
    let gold = parse(&entry.amr_text).map_err(|report| SmatchError::GoldIntegrity {
        id: entry.id.clone(),
        report,
    })?;
    let raw = &prediction.generation;
    let text = match options.family {
        Some(f) => options.extractor.extract(raw, f),
        None => raw.trim().to_string(),
    };
    let (structural, score) = if prediction.failed {
        let error = StructuralError {
            kind: StructuralErrorKind::Unparseable,
            offset: 0,
            message: "generation failed".into(),
        };
        (StructuralReport::from_errors(vec![error]), None)
    } else {
        match parse(&text) {
            Ok(pred) => {
                let config = ScoreConfig {
                    seed: seed::for_key(options.score.seed, &entry.id),
                    ..options.score
                };
                (StructuralReport::ok(), Some(score_graphs(&gold, &pred, &config)?))
            }
            Err(report) => (report, None),
        }
    };
    Ok(EvalRecord {
        entry_id: entry.id.clone(),
        depth: entry.depth,
        subset: entry.subset.clone(),
        structural,
        score,
        raw_length: raw.chars().count(),
    })
}

/// What structurally invalid predictions contribute to the semantic means.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvalidHandling {
    /// Left out; they only show up in the error count.
    #[default]
    Exclude,
    /// Counted with precision, recall and F1 of zero.
    ScoreAsZero,
}

impl FromStr for InvalidHandling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exclude" => Ok(Self::Exclude),
            "score-as-zero" | "zero" => Ok(Self::ScoreAsZero),
            _ => Err(format!("unknown invalid handling {s:?} (expected exclude or score-as-zero)")),
        }
    }
}

/// Which spread the summary confidence intervals describe.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiMode {
    /// Standard error of the per-depth means.
    #[default]
    PerDepth,
    /// Standard error over individual sentences.
    PerSentence,
}

impl FromStr for CiMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-depth" | "depth" => Ok(Self::PerDepth),
            "per-sentence" | "sentence" => Ok(Self::PerSentence),
            _ => Err(format!("unknown CI mode {s:?} (expected per-depth or per-sentence)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthAggregate {
    pub depth: usize,
    pub n: usize,
    /// Structurally invalid generations at this depth.
    pub error_count: usize,
    /// `None` when no record contributes (every generation invalid and excluded).
    pub mean_f1: Option<f64>,
    pub mean_precision: Option<f64>,
    pub mean_recall: Option<f64>,
}

/// Sums in a canonical order so results do not depend on record order, and around the
/// smallest value so constant inputs give their value back exactly.
fn mean(values: &[f64]) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pivot = *v.first()?;
    Some(pivot + v.iter().map(|x| x - pivot).sum::<f64>() / v.len() as f64)
}

fn semantic_values<'a>(
    records: impl IntoIterator<Item = &'a EvalRecord>,
    invalid: InvalidHandling,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (mut f, mut p, mut r) = (Vec::new(), Vec::new(), Vec::new());
    for rec in records {
        match (&rec.score, invalid) {
            (Some(s), _) => {
                f.push(s.f1);
                p.push(s.precision);
                r.push(s.recall);
            }
            (None, InvalidHandling::ScoreAsZero) => {
                f.push(0.0);
                p.push(0.0);
                r.push(0.0);
            }
            (None, InvalidHandling::Exclude) => {}
        }
    }
    (f, p, r)
}

/// Groups records by depth, ascending.
pub fn aggregate_by_depth(records: &[EvalRecord], invalid: InvalidHandling) -> Vec<DepthAggregate> {
    let mut groups: BTreeMap<usize, Vec<&EvalRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.depth).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(depth, recs)| {
            let (f, p, r) = semantic_values(recs.iter().copied(), invalid);
            DepthAggregate {
                depth,
                n: recs.len(),
                error_count: recs.iter().filter(|r| !r.is_valid()).count(),
                mean_f1: mean(&f),
                mean_precision: mean(&p),
                mean_recall: mean(&r),
            }
        })
        .collect()
}

/// Per-depth aggregates for each subset present in `records`.
pub fn aggregate_by_subset(
    records: &[EvalRecord],
    invalid: InvalidHandling,
) -> BTreeMap<Subset, Vec<DepthAggregate>> {
    let mut groups: BTreeMap<Subset, Vec<EvalRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.subset.clone()).or_default().push(r.clone());
    }
    groups
        .into_iter()
        .map(|(s, recs)| (s, aggregate_by_depth(&recs, invalid)))
        .collect()
}

fn z_value(level: f64) -> Result<f64, EvalError> {
    [(0.90, 1.645), (0.95, 1.96), (0.99, 2.576)]
        .into_iter()
        .find(|(l, _)| (l - level).abs() < 1e-12)
        .map(|(_, z)| z)
        .ok_or(EvalError::UnsupportedLevel(level))
}

/// `(mean, half-width)` of the normal-approximation interval `mean ± z·s/√n`, where `s` is the
/// sample standard deviation.
pub fn confidence_interval(values: &[f64], level: f64) -> Result<(f64, f64), EvalError> {
    let z = z_value(level)?;
    let n = values.len();
    if n < 2 {
        return Err(EvalError::UndefinedCi(n));
    }
    let m = mean(values).expect("non-empty");
    let mut sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    sq.sort_by(f64::total_cmp);
    let s = (sq.iter().sum::<f64>() / (n - 1) as f64).sqrt();
    Ok((m, z * s / (n as f64).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    F1,
    Precision,
    Recall,
    MeanErrorCount,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::F1, Metric::Precision, Metric::Recall, Metric::MeanErrorCount];

    pub fn name(&self) -> &'static str {
        match self {
            Self::F1 => "F1",
            Self::Precision => "Precision",
            Self::Recall => "Recall",
            Self::MeanErrorCount => "MeanErrorCount",
        }
    }

    /// File-name friendly form.
    pub fn slug(&self) -> &'static str {
        match self {
            Self::F1 => "f1",
            Self::Precision => "precision",
            Self::Recall => "recall",
            Self::MeanErrorCount => "error_count",
        }
    }

    /// The per-depth value this metric summarizes.
    pub fn of(&self, a: &DepthAggregate) -> Option<f64> {
        match self {
            Self::F1 => a.mean_f1,
            Self::Precision => a.mean_precision,
            Self::Recall => a.mean_recall,
            Self::MeanErrorCount => Some(a.error_count as f64),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub metric: Metric,
    pub mean: Option<f64>,
    /// 95% half-width; `None` when fewer than two values are available.
    pub ci_half_width: Option<f64>,
    /// Number of values the row is computed from.
    pub n: usize,
}

fn row(metric: Metric, values: &[f64]) -> SummaryRow {
    let ci = confidence_interval(values, 0.95).ok();
    SummaryRow {
        metric,
        mean: ci.map(|(m, _)| m).or_else(|| mean(values)),
        ci_half_width: ci.map(|(_, h)| h),
        n: values.len(),
    }
}

/// One row per metric, each the mean and CI across depth levels. Depths without a semantic
/// value (all generations invalid and excluded) are skipped for F1, precision and recall.
pub fn summarize(aggregates: &[DepthAggregate]) -> Vec<SummaryRow> {
    Metric::ALL
        .into_iter()
        .map(|m| {
            let values: Vec<f64> = aggregates.iter().filter_map(|a| m.of(a)).collect();
            row(m, &values)
        })
        .collect()
}

/// Like [`summarize`], but F1, precision and recall use the spread of individual records.
/// The error-count row is still taken across depth levels.
pub fn summarize_per_sentence(
    records: &[EvalRecord],
    aggregates: &[DepthAggregate],
    invalid: InvalidHandling,
) -> Vec<SummaryRow> {
    let (f, p, r) = semantic_values(records, invalid);
    let mut rows = vec![row(Metric::F1, &f), row(Metric::Precision, &p), row(Metric::Recall, &r)];
    rows.extend(summarize(aggregates).into_iter().filter(|r| r.metric == Metric::MeanErrorCount));
    rows
}

pub fn summary(
    records: &[EvalRecord],
    aggregates: &[DepthAggregate],
    mode: CiMode,
    invalid: InvalidHandling,
) -> Vec<SummaryRow> {
    match mode {
        CiMode::PerDepth => summarize(aggregates),
        CiMode::PerSentence => summarize_per_sentence(records, aggregates, invalid),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;
    use crate::smatch::VariableMapping;
    use proptest::prelude::*;

    fn entry(id: &str, amr: &str, depth: usize) -> CorpusEntry {
        CorpusEntry {
            id: id.into(),
            sentence: String::new(),
            amr_text: amr.into(),
            subset: Subset::Bolt,
            split: Split::Test,
            depth,
            metadata: IndexMap::new(),
        }
    }

    fn pred(id: &str, text: &str) -> (String, Prediction) {
        (id.into(), Prediction { id: id.into(), generation: text.into(), failed: false })
    }

    fn record(depth: usize, f1: Option<f64>) -> EvalRecord {
        EvalRecord {
            entry_id: String::new(),
            depth,
            subset: Subset::Bolt,
            structural: if f1.is_some() {
                StructuralReport::ok()
            } else {
                StructuralReport::from_errors(vec![StructuralError {
                    kind: StructuralErrorKind::UnbalancedParens,
                    offset: 0,
                    message: String::new(),
                }])
            },
            score: f1.map(|f| MappingResult {
                mapping: VariableMapping::new(),
                matched: 0,
                gold_triples: 0,
                pred_triples: 0,
                precision: f,
                recall: f,
                f1: f,
                restarts_used: 1,
            }),
            raw_length: 0,
        }
    }

    #[test]
    fn identity_and_truncated_predictions() {
        let entries = [entry("a", "(w / want-01 :arg0 (b / boy))", 1), entry("b", "(g / girl)", 0)];
        let preds: IndexMap<_, _> = [pred("a", "(w / want-01 :arg0 (b / boy))"), pred("b", "(b / boy")].into();
        let recs = evaluate(&entries, &preds, &EvalOptions::default()).unwrap();
        assert_eq!(recs[0].score.as_ref().unwrap().f1, 1.0);
        assert_eq!(recs[1].structural.kinds(), [StructuralErrorKind::UnbalancedParens]);
        assert!(recs[1].score.is_none());
    }

    #[test]
    fn missing_predictions_are_listed() {
        let entries = [entry("a", "(b / boy)", 0), entry("z", "(b / boy)", 0)];
        let err = evaluate(&entries, &IndexMap::new(), &EvalOptions::default()).unwrap_err();
        assert_eq!(err.to_string(), "no prediction for 2 entries: a, z");
    }

    #[test]
    fn failed_generations_are_invalid() {
        let entries = [entry("a", "(b / boy)", 0)];
        let mut p: IndexMap<_, _> = [pred("a", "(b / boy)")].into();
        p["a"].failed = true;
        let r = evaluate(&entries, &p, &EvalOptions::default()).unwrap();
        assert!(!r[0].is_valid());
    }

    #[test]
    fn predictions_file_format() {
        let text = "{\"id\":\"a\",\"generation\":\"(b / boy)\"}\n\n{\"id\":\"b\",\"generation\":\"\",\"failed\":true}\n";
        let p = read_predictions(text.as_bytes()).unwrap();
        assert!(!p["a"].failed && p["b"].failed);
        let dup = "{\"id\":\"a\",\"generation\":\"\"}\n{\"id\":\"a\",\"generation\":\"\"}";
        assert!(matches!(read_predictions(dup.as_bytes()), Err(EvalError::DuplicatePrediction { line: 2, .. })));
        assert!(matches!(read_predictions("nope".as_bytes()), Err(EvalError::BadPrediction { line: 1, .. })));
    }

    #[test]
    fn depth_twelve_error_accounting() {
        let recs: Vec<EvalRecord> = (0..500).map(|i| record(12, (i < 466).then_some(0.5))).collect();
        let a = aggregate_by_depth(&recs, InvalidHandling::Exclude);
        assert_eq!((a.len(), a[0].n, a[0].error_count), (1, 500, 34));
        assert_eq!(a[0].mean_f1, Some(0.5));
        let z = aggregate_by_depth(&recs, InvalidHandling::ScoreAsZero);
        assert!((z[0].mean_f1.unwrap() - 0.5 * 466.0 / 500.0).abs() < 1e-12);
    }

    #[test]
    fn all_invalid_depth_has_no_mean() {
        let a = aggregate_by_depth(&[record(3, None)], InvalidHandling::Exclude);
        assert_eq!((a[0].mean_f1, a[0].error_count), (None, 1));
    }

    #[test]
    fn interval_examples() {
        assert_eq!(confidence_interval(&[0.8, 0.8, 0.8], 0.95).unwrap(), (0.8, 0.0));
        let (m, h) = confidence_interval(&[0.7, 0.9], 0.95).unwrap();
        assert!((m - 0.8).abs() < 1e-12 && (h - 0.196).abs() < 1e-12);
        assert!(matches!(confidence_interval(&[0.5], 0.95), Err(EvalError::UndefinedCi(1))));
        assert!(confidence_interval(&[0.5, 0.6], 0.8).is_err());
    }

    #[test]
    fn mean_error_count_profile() {
        let aggs: Vec<DepthAggregate> = [0, 0, 1, 0, 0, 0, 1, 0, 0, 1]
            .iter()
            .enumerate()
            .map(|(d, &e)| DepthAggregate {
                depth: d + 1,
                n: 30,
                error_count: e,
                mean_f1: Some(0.7),
                mean_precision: Some(0.7),
                mean_recall: Some(0.7),
            })
            .collect();
        let rows = summarize(&aggs);
        let mec = rows.iter().find(|r| r.metric == Metric::MeanErrorCount).unwrap();
        assert!((mec.mean.unwrap() - 0.3).abs() < 1e-12);
        let f1 = rows.iter().find(|r| r.metric == Metric::F1).unwrap();
        assert_eq!(f1.ci_half_width, Some(0.0));
    }

    #[test]
    fn per_sentence_rows_use_records() {
        let recs = vec![record(1, Some(0.7)), record(1, Some(0.9)), record(2, Some(0.8))];
        let aggs = aggregate_by_depth(&recs, InvalidHandling::Exclude);
        let rows = summary(&recs, &aggs, CiMode::PerSentence, InvalidHandling::Exclude);
        assert_eq!(rows[0].n, 3);
        assert_eq!(summary(&recs, &aggs, CiMode::PerDepth, InvalidHandling::Exclude)[0].n, 2);
        assert_eq!(rows.len(), 4);
    }

    #[test]
    fn modes_parse() {
        assert_eq!("score-as-zero".parse::<InvalidHandling>().unwrap(), InvalidHandling::ScoreAsZero);
        assert_eq!("per-sentence".parse::<CiMode>().unwrap(), CiMode::PerSentence);
        assert!("x".parse::<CiMode>().is_err());
    }

    proptest! {
        #[test]
        fn ci_matches_formula(values in prop::collection::vec(0.0f64..1.0, 2..40)) {
            let n = values.len() as f64;
            let m = values.iter().sum::<f64>() / n;
            let s = (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            let (cm, h) = confidence_interval(&values, 0.95).unwrap();
            prop_assert!((cm - m).abs() < 1e-12);
            prop_assert!((h - 1.96 * s / n.sqrt()).abs() < 1e-12);
            prop_assert!(h >= 0.0);
        }

        #[test]
        fn aggregates_ignore_record_order(
            spec in prop::collection::vec((1usize..6, prop::option::of(0.0f64..1.0)), 1..60),
            rot in 0usize..60,
        ) {
            let recs: Vec<EvalRecord> = spec.iter().map(|(d, f)| record(*d, *f)).collect();
            let mut shuffled = recs.clone();
            shuffled.reverse();
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            for mode in [InvalidHandling::Exclude, InvalidHandling::ScoreAsZero] {
                let a = aggregate_by_depth(&recs, mode);
                prop_assert_eq!(&a, &aggregate_by_depth(&shuffled, mode));
                prop_assert_eq!(summarize(&a), summarize(&aggregate_by_depth(&shuffled, mode)));
                let invalid = recs.iter().filter(|r| !r.is_valid()).count();
                prop_assert_eq!(a.iter().map(|x| x.error_count).sum::<usize>(), invalid);
                prop_assert!(a.iter().all(|x| x.n >= x.error_count));
            }
        }
    }
}
