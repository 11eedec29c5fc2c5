use super::{normalize_value, MappingResult, SmatchError, VariableMapping};
use crate::analysis::{TripleKind, TripleSet};
use crate::penman::VariableId;
use std::collections::{HashMap, HashSet};

pub const DEFAULT_MAX_VARIABLES: usize = 8;

/// Exact SMATCH by exhaustive search over injective partial mappings.
///
/// The variables of the smaller graph are assigned, one at a time, to a distinct variable of
/// the larger graph or left unmapped. Assignments between variables that share no triple
/// signature (kind, relation and slot, plus the value for instances and attributes) are
/// skipped: every triple through such a pair is unmatchable, so leaving the variable
/// unmapped scores the same. Each complete mapping is scored by renaming the predicted
/// triples and matching them against the gold multiset.
///
/// Refuses when the smaller side has more than `max_variables` variables.
pub fn brute_force_score(
    gold: &TripleSet,
    pred: &TripleSet,
    max_variables: usize,
) -> Result<MappingResult, SmatchError> {
    let smaller = gold.variable_count().min(pred.variable_count());
    if smaller > max_variables {
        return Err(SmatchError::TooLarge {
            gold: gold.variable_count(),
            pred: pred.variable_count(),
            max: max_variables,
        });
    }
    let evaluator = Evaluator::new(gold, pred);
    let pred_vars: Vec<VariableId> = pred.variables().cloned().collect();
    let gold_vars: Vec<VariableId> = gold.variables().cloned().collect();
    let pred_sig = signatures(pred, &pred_vars);
    let gold_sig = signatures(gold, &gold_vars);

    // Enumerate from the smaller side so the search tree stays shallow.
    let pred_is_small = pred_vars.len() <= gold_vars.len();
    let (small_sig, large_sig) = if pred_is_small {
        (&pred_sig, &gold_sig)
    } else {
        (&gold_sig, &pred_sig)
    };
    let candidates: Vec<Vec<usize>> = small_sig
        .iter()
        .map(|s| {
            (0..large_sig.len())
                .filter(|&l| !s.is_disjoint(&large_sig[l]))
                .collect()
        })
        .collect();

    let mut search = Search {
        candidates: &candidates,
        assignment: vec![None; candidates.len()],
        used: vec![false; large_sig.len()],
        best: None,
        visit: &mut |assignment: &[Option<usize>]| {
            let mut pred_to_gold = vec![None; pred_vars.len()];
            for (s, l) in assignment.iter().enumerate() {
                if let Some(l) = *l {
                    if pred_is_small {
                        pred_to_gold[s] = Some(l);
                    } else {
                        pred_to_gold[l] = Some(s);
                    }
                }
            }
            (evaluator.matched(&pred_to_gold), pred_to_gold)
        },
    };
    search.run(0);
    let (matched, pred_to_gold) = search.best.expect("the empty mapping is always visited");
    let mapping = VariableMapping::from_pairs(
        pred_to_gold
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (pred_vars[i].clone(), gold_vars[j].clone()))),
    )
    .expect("enumeration only builds injective mappings");
    Ok(MappingResult::new(mapping, matched, gold.len(), pred.len(), 1))
}

type Visit<'a> = dyn FnMut(&[Option<usize>]) -> (usize, Vec<Option<usize>>) + 'a;

struct Search<'a, 'v> {
    candidates: &'a [Vec<usize>],
    assignment: Vec<Option<usize>>,
    used: Vec<bool>,
    best: Option<(usize, Vec<Option<usize>>)>,
    visit: &'v mut Visit<'a>,
}

impl Search<'_, '_> {
    fn run(&mut self, depth: usize) {
        if depth == self.candidates.len() {
            let (score, mapping) = (self.visit)(&self.assignment);
            if self.best.as_ref().is_none_or(|(b, _)| score > *b) {
                self.best = Some((score, mapping));
            }
            return;
        }
        self.assignment[depth] = None;
        self.run(depth + 1);
        for &l in &self.candidates[depth] {
            if self.used[l] {
                continue;
            }
            self.used[l] = true;
            self.assignment[depth] = Some(l);
            self.run(depth + 1);
            self.used[l] = false;
        }
        self.assignment[depth] = None;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Slot {
    Instance(String),
    Attribute(String, String),
    RelationSource(String),
    RelationTarget(String),
}

fn signatures(triples: &TripleSet, vars: &[VariableId]) -> Vec<HashSet<Slot>> {
    let index: HashMap<&VariableId, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut sig = vec![HashSet::new(); vars.len()];
    for t in triples.triples() {
        let Some(&s) = index.get(&t.source) else {
            continue;
        };
        let rel = t.relation.to_lowercase();
        match t.kind {
            TripleKind::Instance => {
                sig[s].insert(Slot::Instance(normalize_value(&t.target)));
            }
            TripleKind::Attribute => {
                sig[s].insert(Slot::Attribute(rel, normalize_value(&t.target)));
            }
            TripleKind::Relation => {
                sig[s].insert(Slot::RelationSource(rel.clone()));
                if let Some(&o) = VariableId::new(t.target.clone()).ok().as_ref().and_then(|v| index.get(v)) {
                    sig[o].insert(Slot::RelationTarget(rel));
                }
            }
        }
    }
    sig
}

/// Scores a mapping by renaming predicted triples into gold-variable indices and consuming
/// matching gold triples from a multiset.
struct Evaluator {
    gold_counts: Vec<u32>,
    gold_ids: HashMap<Renamed, usize>,
    pred: Vec<PredTriple>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Renamed {
    Instance(usize, String),
    Relation(String, usize, usize),
    Attribute(String, usize, String),
}

enum PredTriple {
    Instance(usize, String),
    Relation(String, usize, Option<usize>),
    Attribute(String, usize, String),
}

impl Evaluator {
    fn new(gold: &TripleSet, pred: &TripleSet) -> Self {
        let gold_index: HashMap<&VariableId, usize> = gold.variables().enumerate().map(|(i, v)| (v, i)).collect();
        let mut gold_ids = HashMap::new();
        let mut gold_counts = Vec::new();
        for t in gold.triples() {
            let Some(&s) = gold_index.get(&t.source) else {
                continue;
            };
            let key = match t.kind {
                TripleKind::Instance => Renamed::Instance(s, normalize_value(&t.target)),
                TripleKind::Attribute => Renamed::Attribute(t.relation.to_lowercase(), s, normalize_value(&t.target)),
                TripleKind::Relation => {
                    let target = VariableId::new(t.target.clone()).ok();
                    match target.as_ref().and_then(|v| gold_index.get(v)) {
                        Some(&o) => Renamed::Relation(t.relation.to_lowercase(), s, o),
                        None => continue,
                    }
                }
            };
            let next = gold_ids.len();
            let id = *gold_ids.entry(key).or_insert(next);
            if id == gold_counts.len() {
                gold_counts.push(0);
            }
            gold_counts[id] += 1;
        }

        let pred_index: HashMap<&VariableId, usize> = pred.variables().enumerate().map(|(i, v)| (v, i)).collect();
        let pred = pred
            .triples()
            .iter()
            .filter_map(|t| {
                let s = *pred_index.get(&t.source)?;
                Some(match t.kind {
                    TripleKind::Instance => PredTriple::Instance(s, normalize_value(&t.target)),
                    TripleKind::Attribute => PredTriple::Attribute(t.relation.to_lowercase(), s, normalize_value(&t.target)),
                    TripleKind::Relation => {
                        let target = VariableId::new(t.target.clone()).ok();
                        let o = target.as_ref().and_then(|v| pred_index.get(v)).copied();
                        PredTriple::Relation(t.relation.to_lowercase(), s, o)
                    }
                })
            })
            .collect();
        Self {
            gold_counts,
            gold_ids,
            pred,
        }
    }

    fn matched(&self, pred_to_gold: &[Option<usize>]) -> usize {
        let mut remaining = self.gold_counts.clone();
        let mut matched = 0;
        for t in &self.pred {
            let key = match t {
                PredTriple::Instance(s, c) => pred_to_gold[*s].map(|g| Renamed::Instance(g, c.clone())),
                PredTriple::Attribute(r, s, v) => pred_to_gold[*s].map(|g| Renamed::Attribute(r.clone(), g, v.clone())),
                PredTriple::Relation(r, s, o) => match (pred_to_gold[*s], o.and_then(|o| pred_to_gold[o])) {
                    (Some(gs), Some(go)) => Some(Renamed::Relation(r.clone(), gs, go)),
                    _ => None,
                },
            };
            if let Some(&id) = key.as_ref().and_then(|k| self.gold_ids.get(k)) {
                if remaining[id] > 0 {
                    remaining[id] -= 1;
                    matched += 1;
                }
            }
        }
        matched
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::extract_triples;
    use crate::penman::parse;
    use crate::smatch::match_count;

    fn triples(text: &str) -> TripleSet {
        extract_triples(&parse(text).unwrap())
    }

    const WANT: &str = "(w / want-01 :arg0 (b / boy) :arg1 (g / go-01 :arg0 b))";

    #[test]
    fn identical_three_variable_graphs() {
        let g = triples(WANT);
        let r = brute_force_score(&g, &g, 8).unwrap();
        assert_eq!((r.matched, r.f1), (6, 1.0));
    }

    #[test]
    fn empty_prediction_side() {
        // A valid graph always has an instance triple; an empty set stands in for "nothing predicted".
        let gold = triples(WANT);
        let empty = TripleSet::default();
        let r = brute_force_score(&gold, &empty, 8).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn refuses_large_inputs_naming_both_sizes() {
        let big = triples(WANT);
        let err = brute_force_score(&big, &big, 2).unwrap_err();
        assert_eq!(err, SmatchError::TooLarge { gold: 3, pred: 3, max: 2 });
        assert!(err.to_string().contains("gold has 3") && err.to_string().contains("prediction has 3"));
    }

    #[test]
    fn prediction_larger_than_gold() {
        let gold = triples("(b / boy)");
        let pred = triples(WANT);
        let r = brute_force_score(&gold, &pred, 8).unwrap();
        assert_eq!(r.matched, 1);
        assert_eq!(r.matched, match_count(&r.mapping, &gold, &pred));
    }

    #[test]
    fn evaluator_agrees_with_match_count() {
        let gold = triples(WANT);
        let pred = triples("(g / want-01 :arg0 (w / boy) :arg1 (b / go-01 :arg0 w :polarity -))");
        let r = brute_force_score(&gold, &pred, 8).unwrap();
        assert_eq!(r.matched, match_count(&r.mapping, &gold, &pred));
        assert_eq!(r.matched, 6);
    }
}
