//! SMATCH: precision, recall and F1 over triples under the best variable alignment.
//!
//! The alignment is searched by hill climbing with restarts ([`hill_climb`]). For small
//! graphs [`brute_force_score`] enumerates every injective partial mapping and returns the
//! exact optimum; it scores candidates with [`match_count`] and shares no code with the
//! incremental scorer the hill climber uses.
//!
//! Triples compare case-insensitively, and surrounding double quotes are dropped from
//! constants before comparison.

mod exact;
mod hill_climb;

pub use exact::{brute_force_score, DEFAULT_MAX_VARIABLES};
pub use hill_climb::hill_climb;

use crate::analysis::{extract_triples, TripleKind, TripleSet};
use crate::penman::{parse, AmrGraph, StructuralReport, VariableId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmatchError {
    #[error("gold AMR for entry {id} does not parse: {report}")]
    GoldIntegrity { id: String, report: StructuralReport },
    #[error("exact scoring is limited to {max} variables on the smaller side (gold has {gold}, prediction has {pred})")]
    TooLarge { gold: usize, pred: usize, max: usize },
    #[error("hill climbing needs at least one restart")]
    NoRestarts,
    #[error("mapping is not injective: {0} is the image of more than one variable")]
    NotInjective(VariableId),
}

/// Partial injective map from predicted variables to gold variables.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableMapping {
    pairs: BTreeMap<VariableId, VariableId>,
}

impl VariableMapping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (VariableId, VariableId)>,
    ) -> Result<Self, SmatchError> {
        let mut mapping = Self::new();
        let mut images = HashSet::new();
        for (pred, gold) in pairs {
            if !images.insert(gold.clone()) {
                return Err(SmatchError::NotInjective(gold));
            }
            if let Some(old) = mapping.pairs.insert(pred, gold) {
                images.remove(&old);
            }
        }
        Ok(mapping)
    }

    /// Maps every variable of `pred` that also names a variable of `gold` to itself.
    pub fn identity(gold: &TripleSet, pred: &TripleSet) -> Self {
        let gold_vars: HashSet<&VariableId> = gold.variables().collect();
        Self {
            pairs: pred
                .variables()
                .filter(|v| gold_vars.contains(v))
                .map(|v| (v.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn get(&self, pred: &VariableId) -> Option<&VariableId> {
        self.pairs.get(pred)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&VariableId, &VariableId)> {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Best alignment found and the scores it yields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingResult {
    pub mapping: VariableMapping,
    pub matched: usize,
    pub gold_triples: usize,
    pub pred_triples: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub restarts_used: usize,
}

impl MappingResult {
    pub(crate) fn new(
        mapping: VariableMapping,
        matched: usize,
        gold_triples: usize,
        pred_triples: usize,
        restarts_used: usize,
    ) -> Self {
        let (precision, recall, f1) = prf(matched, pred_triples, gold_triples);
        Self {
            mapping,
            matched,
            gold_triples,
            pred_triples,
            precision,
            recall,
            f1,
            restarts_used,
        }
    }
}

/// Precision, recall and F1 from a matched count; zero denominators give zero.
pub fn prf(matched: usize, pred_total: usize, gold_total: usize) -> (f64, f64, f64) {
    let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let p = ratio(matched, pred_total);
    let r = ratio(matched, gold_total);
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f1)
}

/// Lowercases and strips one pair of surrounding double quotes.
pub(crate) fn normalize_value(s: &str) -> String {
    let s = if s.len() >= 2 && s.starts_with('"') && s.ends_with('"') {
        &s[1..s.len() - 1]
    } else {
        s
    };
    s.to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum MatchKey {
    Instance(VariableId, String),
    Relation(String, VariableId, VariableId),
    Attribute(String, VariableId, String),
}

fn gold_keys(gold: &TripleSet) -> HashMap<MatchKey, usize> {
    let mut keys = HashMap::new();
    for t in gold.triples() {
        let key = match t.kind {
            TripleKind::Instance => MatchKey::Instance(t.source.clone(), normalize_value(&t.target)),
            TripleKind::Relation => match VariableId::new(t.target.clone()) {
                Ok(target) => MatchKey::Relation(t.relation.to_lowercase(), t.source.clone(), target),
                Err(_) => continue,
            },
            TripleKind::Attribute => MatchKey::Attribute(
                t.relation.to_lowercase(),
                t.source.clone(),
                normalize_value(&t.target),
            ),
        };
        *keys.entry(key).or_insert(0) += 1;
    }
    keys
}

/// Number of predicted triples that, renamed through `mapping`, equal a distinct gold triple.
///
/// Triples mentioning an unmapped predicted variable never match. Each gold triple is
/// consumed at most once.
pub fn match_count(mapping: &VariableMapping, gold: &TripleSet, pred: &TripleSet) -> usize {
    let mut remaining = gold_keys(gold);
    let mut matched = 0;
    for t in pred.triples() {
        let Some(source) = mapping.get(&t.source) else {
            continue;
        };
        let key = match t.kind {
            TripleKind::Instance => MatchKey::Instance(source.clone(), normalize_value(&t.target)),
            TripleKind::Relation => {
                let Some(target) = VariableId::new(t.target.clone())
                    .ok()
                    .and_then(|v| mapping.get(&v).cloned())
                else {
                    continue;
                };
                MatchKey::Relation(t.relation.to_lowercase(), source.clone(), target)
            }
            TripleKind::Attribute => MatchKey::Attribute(
                t.relation.to_lowercase(),
                source.clone(),
                normalize_value(&t.target),
            ),
        };
        if let Some(n) = remaining.get_mut(&key) {
            if *n > 0 {
                *n -= 1;
                matched += 1;
            }
        }
    }
    matched
}

/// Scoring parameters shared by every pair in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Pairs where both graphs have at most this many variables are scored exactly.
    pub exact_threshold: usize,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            restarts: 4,
            seed: 0,
            exact_threshold: 5,
        }
    }
}

/// Scores two triple sets, exactly when both are small enough and by hill climbing otherwise.
pub fn score_triples(
    gold: &TripleSet,
    pred: &TripleSet,
    config: &ScoreConfig,
) -> Result<MappingResult, SmatchError> {
    let exact = gold.variable_count() <= config.exact_threshold
        && pred.variable_count() <= config.exact_threshold;
    if exact {
        brute_force_score(gold, pred, config.exact_threshold)
    } else {
        hill_climb(gold, pred, config.restarts, config.seed)
    }
}

pub fn score_graphs(
    gold: &AmrGraph,
    pred: &AmrGraph,
    config: &ScoreConfig,
) -> Result<MappingResult, SmatchError> {
    score_triples(&extract_triples(gold), &extract_triples(pred), config)
}

/// Result of scoring one prediction: a score, or the reason it could not be scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairOutcome {
    Scored(MappingResult),
    Invalid(StructuralReport),
}

/// Parses and scores one gold/predicted pair. A gold side that does not parse is an error;
/// a predicted side that does not parse yields its structural report.
pub fn score_pair(
    gold_text: &str,
    pred_text: &str,
    config: &ScoreConfig,
) -> Result<PairOutcome, SmatchError> {
    let gold = parse(gold_text).map_err(|report| SmatchError::GoldIntegrity {
        id: crate::corpus::header_id(gold_text).unwrap_or_else(|| "<unnamed>".into()),
        report,
    })?;
    match parse(pred_text) {
        Ok(pred) => Ok(PairOutcome::Scored(score_graphs(&gold, &pred, config)?)),
        Err(report) => Ok(PairOutcome::Invalid(report)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triples(text: &str) -> TripleSet {
        extract_triples(&parse(text).unwrap())
    }

    fn var(s: &str) -> VariableId {
        VariableId::new(s).unwrap()
    }

    const WANT: &str = "(w / want-01 :arg0 (b / boy) :arg1 (g / go-01 :arg0 b))";

    #[test]
    fn identity_on_identical_graphs() {
        let g = triples(WANT);
        assert_eq!(match_count(&VariableMapping::identity(&g, &g), &g, &g), 6);
    }

    #[test]
    fn empty_mapping_matches_nothing() {
        assert_eq!(
            match_count(&VariableMapping::new(), &triples("(b / boy)"), &triples("(g / girl)")),
            0
        );
    }

    #[test]
    fn partial_prediction() {
        let gold = triples(WANT);
        let pred = triples("(w / want-01 :arg0 (b / boy))");
        let m = VariableMapping::from_pairs([(var("w"), var("w")), (var("b"), var("b"))]).unwrap();
        assert_eq!(match_count(&m, &gold, &pred), 3);
    }

    #[test]
    fn comparison_ignores_case_and_quotes() {
        let gold = triples("(n / Name :op1 \"Africa\" :ARG0 (c / City))");
        let pred = triples("(n / name :op1 africa :arg0 (c / city))");
        let m = VariableMapping::identity(&gold, &pred);
        assert_eq!(match_count(&m, &gold, &pred), 4);
    }

    #[test]
    fn gold_triples_are_consumed_once() {
        let gold = triples("(a / and :op1 \"x\")");
        let pred = triples("(a / and :op1 \"x\" :op1 \"x\")");
        let m = VariableMapping::identity(&gold, &pred);
        assert_eq!(match_count(&m, &gold, &pred), 2);
    }

    #[test]
    fn mapping_rejects_shared_images() {
        let err = VariableMapping::from_pairs([(var("a"), var("x")), (var("b"), var("x"))]).unwrap_err();
        assert_eq!(err, SmatchError::NotInjective(var("x")));
    }

    #[test]
    fn prf_handles_empty_sides() {
        assert_eq!(prf(0, 0, 5), (0.0, 0.0, 0.0));
        let (p, r, f) = prf(4, 5, 5);
        assert!((p - 0.8).abs() < 1e-15 && (r - 0.8).abs() < 1e-15 && (f - 0.8).abs() < 1e-15);
    }

    #[test]
    fn invalid_prediction_returns_report() {
        let out = score_pair(WANT, "(b / boy", &ScoreConfig::default()).unwrap();
        match out {
            PairOutcome::Invalid(r) => assert_eq!(r.kinds(), [crate::StructuralErrorKind::UnbalancedParens]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_gold_names_the_entry() {
        let err = score_pair("# ::id bad.7\n(b / boy", WANT, &ScoreConfig::default()).unwrap_err();
        assert!(matches!(err, SmatchError::GoldIntegrity { ref id, .. } if id == "bad.7"));
    }
}
