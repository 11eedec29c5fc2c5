use super::{normalize_value, MappingResult, SmatchError, VariableMapping};
use crate::analysis::{TripleKind, TripleSet};
use crate::penman::VariableId;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Up to two (pred variable, new gold image) reassignments applied together.
type Move = [(usize, Option<usize>); 2];

/// Alignment problem in index form, with the match count split into per-variable and
/// per-variable-pair gains.
///
/// Instance, attribute and self-loop triples depend on a single predicted variable, so their
/// contribution for every (predicted, gold) pair is precomputed in `unary`. Relation triples
/// between two distinct variables depend on a pair and are looked up in `gold_edges`.
struct Problem {
    pred_vars: Vec<VariableId>,
    gold_vars: Vec<VariableId>,
    /// `unary[i * gold_len + j]`: triples gained by mapping predicted `i` to gold `j`.
    unary: Vec<u32>,
    pred_edges: Vec<PairTriple>,
    /// Indices into `pred_edges` touching each predicted variable.
    adjacency: Vec<Vec<usize>>,
    gold_edges: HashMap<(u32, usize, usize), u32>,
    pred_concepts: Vec<Option<String>>,
    gold_concepts: Vec<Option<String>>,
}

struct PairTriple {
    label: u32,
    source: usize,
    target: usize,
    count: u32,
}

#[derive(Default)]
struct Interner(HashMap<String, u32>);

impl Interner {
    fn id(&mut self, s: &str) -> u32 {
        let next = self.0.len() as u32;
        *self.0.entry(s.to_lowercase()).or_insert(next)
    }
}

/// Single-variable signature of a triple: what must agree for it to match.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum UnaryKey {
    Instance(String),
    Attribute(u32, String),
    SelfLoop(u32),
}

struct Side {
    vars: Vec<VariableId>,
    unary: Vec<HashMap<UnaryKey, u32>>,
    pairs: HashMap<(u32, usize, usize), u32>,
    concepts: Vec<Option<String>>,
}

fn index_side(triples: &TripleSet, labels: &mut Interner) -> Side {
    let vars: Vec<VariableId> = triples.variables().cloned().collect();
    let index: HashMap<&VariableId, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut unary = vec![HashMap::new(); vars.len()];
    let mut pairs = HashMap::new();
    let mut concepts = vec![None; vars.len()];
    for t in triples.triples() {
        let Some(&s) = index.get(&t.source) else {
            continue;
        };
        let key = match t.kind {
            TripleKind::Instance => {
                let c = normalize_value(&t.target);
                concepts[s].get_or_insert_with(|| c.clone());
                UnaryKey::Instance(c)
            }
            TripleKind::Attribute => UnaryKey::Attribute(labels.id(&t.relation), normalize_value(&t.target)),
            TripleKind::Relation => {
                let target = VariableId::new(t.target.clone()).ok();
                let Some(&o) = target.as_ref().and_then(|v| index.get(v)) else {
                    continue;
                };
                if o == s {
                    UnaryKey::SelfLoop(labels.id(&t.relation))
                } else {
                    *pairs.entry((labels.id(&t.relation), s, o)).or_insert(0) += 1;
                    continue;
                }
            }
        };
        *unary[s].entry(key).or_insert(0) += 1;
    }
    Side {
        vars,
        unary,
        pairs,
        concepts,
    }
}

impl Problem {
    fn new(gold: &TripleSet, pred: &TripleSet) -> Problem {
        let mut labels = Interner::default();
        let g = index_side(gold, &mut labels);
        let p = index_side(pred, &mut labels);
        let gold_len = g.vars.len();
        let mut unary = vec![0u32; p.vars.len() * gold_len];
        for (i, pu) in p.unary.iter().enumerate() {
            for (j, gu) in g.unary.iter().enumerate() {
                unary[i * gold_len + j] = pu
                    .iter()
                    .map(|(k, &c)| gu.get(k).map_or(0, |&gc| c.min(gc)))
                    .sum();
            }
        }
        let mut pred_edges: Vec<PairTriple> = p
            .pairs
            .iter()
            .map(|(&(label, source, target), &count)| PairTriple {
                label,
                source,
                target,
                count,
            })
            .collect();
        pred_edges.sort_by_key(|e| (e.source, e.target, e.label));
        let mut adjacency = vec![Vec::new(); p.vars.len()];
        for (n, e) in pred_edges.iter().enumerate() {
            adjacency[e.source].push(n);
            adjacency[e.target].push(n);
        }
        Problem {
            pred_vars: p.vars,
            gold_vars: g.vars,
            unary,
            pred_edges,
            adjacency,
            gold_edges: g.pairs,
            pred_concepts: p.concepts,
            gold_concepts: g.concepts,
        }
    }

    fn unary_gain(&self, i: usize, j: Option<usize>) -> u32 {
        j.map_or(0, |j| self.unary[i * self.gold_vars.len() + j])
    }

    fn edge_gain(&self, e: &PairTriple, source: Option<usize>, target: Option<usize>) -> u32 {
        match (source, target) {
            (Some(s), Some(t)) => self
                .gold_edges
                .get(&(e.label, s, t))
                .map_or(0, |&gc| e.count.min(gc)),
            _ => 0,
        }
    }

    fn score(&self, map: &[Option<usize>]) -> u32 {
        let unary: u32 = map.iter().enumerate().map(|(i, &j)| self.unary_gain(i, j)).sum();
        let pairs: u32 = self
            .pred_edges
            .iter()
            .map(|e| self.edge_gain(e, map[e.source], map[e.target]))
            .sum();
        unary + pairs
    }

    /// Change in score when the variables in `changes` take new images.
    fn delta(&self, map: &[Option<usize>], changes: &[(usize, Option<usize>)]) -> i64 {
        let image = |v: usize| {
            changes
                .iter()
                .find(|(c, _)| *c == v)
                .map_or(map[v], |&(_, j)| j)
        };
        let mut delta = 0i64;
        for &(i, j) in changes {
            delta += self.unary_gain(i, j) as i64 - self.unary_gain(i, map[i]) as i64;
        }
        for (n, &(i, _)) in changes.iter().enumerate() {
            for &k in &self.adjacency[i] {
                let e = &self.pred_edges[k];
                let other = if e.source == i { e.target } else { e.source };
                // An edge between two changed variables is visited from the first of them only.
                if changes[..n].iter().any(|(c, _)| *c == other) {
                    continue;
                }
                let new = self.edge_gain(e, image(e.source), image(e.target));
                let old = self.edge_gain(e, map[e.source], map[e.target]);
                delta += new as i64 - old as i64;
            }
        }
        delta
    }

    /// Each predicted variable, in name order, takes the first unused gold variable (by name)
    /// with the same concept.
    fn greedy_start(&self) -> Vec<Option<usize>> {
        let mut map = vec![None; self.pred_vars.len()];
        let mut used = vec![false; self.gold_vars.len()];
        let mut pred_order: Vec<usize> = (0..self.pred_vars.len()).collect();
        pred_order.sort_by(|&a, &b| self.pred_vars[a].cmp(&self.pred_vars[b]));
        let mut gold_order: Vec<usize> = (0..self.gold_vars.len()).collect();
        gold_order.sort_by(|&a, &b| self.gold_vars[a].cmp(&self.gold_vars[b]));
        for i in pred_order {
            let Some(concept) = &self.pred_concepts[i] else {
                continue;
            };
            if let Some(&j) = gold_order
                .iter()
                .find(|&&j| !used[j] && self.gold_concepts[j].as_ref() == Some(concept))
            {
                used[j] = true;
                map[i] = Some(j);
            }
        }
        map
    }

    /// Uniformly random injective mapping of maximal size.
    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<Option<usize>> {
        let p = self.pred_vars.len();
        let mut slots: Vec<Option<usize>> = (0..self.gold_vars.len()).map(Some).collect();
        slots.extend(std::iter::repeat_n(None, p.saturating_sub(slots.len())));
        slots.shuffle(rng);
        slots.truncate(p);
        slots
    }

    /// Applies the best improving move until none is left. Returns the final score.
    fn climb(&self, map: &mut [Option<usize>]) -> u32 {
        let p = self.pred_vars.len();
        let g = self.gold_vars.len();
        let mut taken = vec![false; g];
        for j in map.iter().flatten() {
            taken[*j] = true;
        }
        loop {
            let mut best: Option<(i64, Move, usize)> = None;
            let mut consider = |delta: i64, changes: Move, len: usize| {
                if delta > 0 && best.is_none_or(|(d, _, _)| delta > d) {
                    best = Some((delta, changes, len));
                }
            };
            for i in 0..p {
                for j in (0..g).filter(|&j| !taken[j]) {
                    let c = [(i, Some(j)), (i, Some(j))];
                    consider(self.delta(map, &c[..1]), c, 1);
                }
                if map[i].is_some() {
                    let c = [(i, None), (i, None)];
                    consider(self.delta(map, &c[..1]), c, 1);
                }
            }
            for i in 0..p {
                for k in i + 1..p {
                    if map[i] == map[k] {
                        continue;
                    }
                    let c = [(i, map[k]), (k, map[i])];
                    consider(self.delta(map, &c), c, 2);
                }
            }
            let Some((_, changes, len)) = best else {
                break;
            };
            for &(i, _) in &changes[..len] {
                if let Some(j) = map[i] {
                    taken[j] = false;
                }
            }
            for &(i, j) in &changes[..len] {
                map[i] = j;
            }
            for &(i, _) in &changes[..len] {
                if let Some(j) = map[i] {
                    taken[j] = true;
                }
            }
        }
        self.score(map)
    }

    fn to_mapping(&self, map: &[Option<usize>]) -> VariableMapping {
        VariableMapping::from_pairs(
            map.iter()
                .enumerate()
                .filter_map(|(i, j)| j.map(|j| (self.pred_vars[i].clone(), self.gold_vars[j].clone()))),
        )
        .expect("climbing keeps mappings injective")
    }
}

/// Hill-climbing SMATCH alignment.
///
/// Restart 0 starts from the greedy concept-matching mapping; every later restart starts from
/// a uniformly random injective mapping drawn from a generator seeded with `seed`. Each climb
/// repeatedly applies the best single move (remap one predicted variable to a free gold
/// variable, unmap it, or swap the images of two predicted variables) until no move improves
/// the match count. The best result over all restarts is returned. Search stops early once a
/// climb reaches the trivial upper bound `min(|gold|, |pred|)`.
pub fn hill_climb(
    gold: &TripleSet,
    pred: &TripleSet,
    restarts: usize,
    seed: u64,
) -> Result<MappingResult, SmatchError> {
    if restarts == 0 {
        return Err(SmatchError::NoRestarts);
    }
    let problem = Problem::new(gold, pred);
    let ceiling = gold.len().min(pred.len()) as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(u32, Vec<Option<usize>>)> = None;
    let mut used = 0;
    for restart in 0..restarts {
        let mut map = if restart == 0 {
            problem.greedy_start()
        } else {
            problem.random_start(&mut rng)
        };
        let score = problem.climb(&mut map);
        used += 1;
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, map));
        }
        if score >= ceiling {
            break;
        }
    }
    let (matched, map) = best.expect("at least one restart ran");
    Ok(MappingResult::new(
        problem.to_mapping(&map),
        matched as usize,
        gold.len(),
        pred.len(),
        used,
    ))
}
