#![allow(dead_code)]

use amr_bench::corpus::{load_path, CorpusEntry, LoadOptions};
use amr_bench::penman::{EdgeTarget, GraphBuilder};
use amr_bench::AmrGraph;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::HashMap;
use std::path::PathBuf;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn figure(name: &str) -> String {
    std::fs::read_to_string(fixtures().join("figures").join(name)).unwrap()
}

pub fn fixture_corpus() -> Vec<CorpusEntry> {
    load_path(&fixtures().join("corpus"), &LoadOptions::default())
        .expect("fixture corpus loads")
        .entries
}

/// id → depth the generator built the graph to.
pub fn expected_depths() -> HashMap<String, usize> {
    std::fs::read_to_string(fixtures().join("expected_depths.tsv"))
        .unwrap()
        .lines()
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            (cols[0].to_string(), cols[2].parse().unwrap())
        })
        .collect()
}

// A small vocabulary makes many alignments tie, which is where hill climbing struggles.
const CONCEPTS: [&str; 4] = ["a", "b", "c", "d"];
const RELATIONS: [&str; 3] = [":arg0", ":arg1", ":mod"];
const CONSTANTS: [&str; 3] = ["-", "\"x\"", "7"];

/// A connected random graph with `1..=max_vars` variables, some reentrancies and attributes.
pub fn random_graph(rng: &mut impl Rng, max_vars: usize) -> AmrGraph {
    let n = rng.gen_range(1..=max_vars);
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let concept = |rng: &mut dyn rand::RngCore| CONCEPTS[rng.gen_range(0..CONCEPTS.len())].to_string();
    let mut b = GraphBuilder::new(names[0].clone(), concept(rng));
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        let rel = RELATIONS[rng.gen_range(0..RELATIONS.len())];
        b = b.child(names[parent].clone(), rel, names[i].clone(), concept(rng));
    }
    for _ in 0..rng.gen_range(0..=n) {
        let s = rng.gen_range(0..n);
        let rel = RELATIONS[rng.gen_range(0..RELATIONS.len())];
        if rng.gen_bool(0.5) {
            let t = rng.gen_range(0..n);
            b = b.edge(names[s].clone(), rel, EdgeTarget::variable(&names[t]).unwrap());
        } else {
            let c = CONSTANTS[rng.gen_range(0..CONSTANTS.len())];
            b = b.edge(names[s].clone(), rel, EdgeTarget::constant(c).unwrap());
        }
    }
    b.build().expect("generated graph is valid")
}

/// Renames every variable of `g` with a random permutation and perturbs some concepts,
/// relations and edges, so the best alignment is neither the identity nor always perfect.
pub fn perturbed_copy(rng: &mut impl Rng, g: &AmrGraph) -> AmrGraph {
    let mut renamed: Vec<String> = (0..g.variable_count()).map(|i| format!("p{i}")).collect();
    renamed.shuffle(rng);
    let map: HashMap<String, String> = g
        .instances()
        .keys()
        .map(|v| v.as_str().to_string())
        .zip(renamed)
        .collect();
    // Dropped edges can disconnect the graph; fall back to the plain renaming.
    copy(g, &map, Some(rng)).unwrap_or_else(|| copy(g, &map, None::<&mut rand::rngs::ThreadRng>).unwrap())
}

fn copy(g: &AmrGraph, map: &HashMap<String, String>, mut rng: Option<&mut impl Rng>) -> Option<AmrGraph> {
    let mut chance = |p: f64| rng.as_mut().is_some_and(|r| r.gen_bool(p));
    let pick = |i: usize, pool: &[&str]| pool[i % pool.len()].to_string();
    let mut concept = |c: &str, i: usize| if chance(0.2) { pick(i, &CONCEPTS) } else { c.to_string() };
    let root = g.root();
    let mut b = GraphBuilder::new(map[root.as_str()].clone(), concept(g.concept(root)?.as_str(), 0));
    for (i, (v, c)) in g.instances().iter().enumerate() {
        if v != root {
            b = b.instance(map[v.as_str()].clone(), concept(c.as_str(), i));
        }
    }
    for (i, e) in g.edges().iter().enumerate() {
        if chance(0.15) {
            continue;
        }
        let target = match &e.target {
            EdgeTarget::Variable(t) => EdgeTarget::variable(&map[t.as_str()]).ok()?,
            c => c.clone(),
        };
        let rel = if chance(0.1) { pick(i, &RELATIONS) } else { e.relation.as_str().to_string() };
        b = b.edge(map[e.source.as_str()].clone(), rel, target);
    }
    b.build().ok()
}

/// A pair for alignment tests: either two independent graphs or a graph and a perturbed,
/// renamed copy.
pub fn random_pair(rng: &mut impl Rng, max_vars: usize) -> (AmrGraph, AmrGraph) {
    let gold = random_graph(rng, max_vars);
    let pred = if rng.gen_bool(0.5) {
        perturbed_copy(rng, &gold)
    } else {
        random_graph(rng, max_vars)
    };
    (gold, pred)
}
