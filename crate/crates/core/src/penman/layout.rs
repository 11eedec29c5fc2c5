//! The tree a Penman rendering of a graph follows.
//!
//! Parsed graphs keep the nesting of their source text. Graphs whose nesting flags do not
//! describe a spanning tree (built programmatically, or after inverse normalization) get one
//! from a depth-first walk from the root in edge order, writing edges against their
//! direction (as `-of` relations) where needed.

use super::graph::{AmrGraph, EdgeTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Placement {
    pub edge: usize,
    /// The edge is written under its target, so its label is shown toggled.
    pub inverted: bool,
    /// The far endpoint is written inline as a child node rather than as a leaf.
    pub nested: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    /// Placements under each instance, by instance index, in writing order.
    pub children: Vec<Vec<Placement>>,
    /// Distance of each instance from the root along the tree.
    pub node_depth: Vec<usize>,
}

impl Layout {
    pub fn of(graph: &AmrGraph) -> Layout {
        from_nesting(graph).unwrap_or_else(|| from_walk(graph))
    }

    /// Longest root-to-leaf distance; a leaf written under node `v` sits one edge below `v`.
    pub fn depth(&self) -> usize {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(v, placements)| {
                placements
                    .iter()
                    .map(move |p| if p.nested { 0 } else { self.node_depth[v] + 1 })
            })
            .chain(self.node_depth.iter().copied())
            .max()
            .unwrap_or(0)
    }
}

fn endpoint_indices(graph: &AmrGraph, edge: usize) -> (usize, Option<usize>) {
    let e = &graph.edges()[edge];
    let s = graph
        .instance_index(&e.source)
        .expect("edge source is an instance");
    let t = match &e.target {
        EdgeTarget::Variable(v) => graph.instance_index(v),
        EdgeTarget::Constant(_) => None,
    };
    (s, t)
}

fn from_nesting(graph: &AmrGraph) -> Option<Layout> {
    let n = graph.variable_count();
    let root = graph.instance_index(graph.root())?;
    let mut parent_edge = vec![None; n];
    let mut children = vec![Vec::new(); n];
    for (i, e) in graph.edges().iter().enumerate() {
        let (s, t) = endpoint_indices(graph, i);
        if e.nested {
            let t = t?;
            if t == root || parent_edge[t].is_some() {
                return None;
            }
            parent_edge[t] = Some(s);
        }
        children[s].push(Placement {
            edge: i,
            inverted: false,
            nested: e.nested,
        });
    }
    let mut node_depth = vec![usize::MAX; n];
    node_depth[root] = 0;
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        for p in &children[v] {
            if p.nested {
                let (_, t) = endpoint_indices(graph, p.edge);
                let t = t.expect("nested edges target variables");
                node_depth[t] = node_depth[v] + 1;
                stack.push(t);
            }
        }
    }
    if node_depth.contains(&usize::MAX) {
        return None;
    }
    Some(Layout {
        children,
        node_depth,
    })
}

fn from_walk(graph: &AmrGraph) -> Layout {
    let n = graph.variable_count();
    let mut incident = vec![Vec::new(); n];
    for i in 0..graph.edges().len() {
        let (s, t) = endpoint_indices(graph, i);
        incident[s].push(i);
        if let Some(t) = t {
            if t != s {
                incident[t].push(i);
            }
        }
    }
    let mut layout = Layout {
        children: vec![Vec::new(); n],
        node_depth: vec![usize::MAX; n],
    };
    let mut placed = vec![false; graph.edges().len()];
    let root = graph
        .instance_index(graph.root())
        .expect("root is an instance");
    layout.node_depth[root] = 0;
    visit(graph, root, &incident, &mut placed, &mut layout);
    layout
}

fn visit(
    graph: &AmrGraph,
    v: usize,
    incident: &[Vec<usize>],
    placed: &mut [bool],
    layout: &mut Layout,
) {
    for &edge in &incident[v] {
        if placed[edge] {
            continue;
        }
        let (s, t) = endpoint_indices(graph, edge);
        let (far, inverted) = if s == v { (t, false) } else { (Some(s), true) };
        let fresh = far.filter(|&u| layout.node_depth[u] == usize::MAX);
        if inverted && fresh.is_none() {
            // Written later as a leaf under its source.
            continue;
        }
        placed[edge] = true;
        layout.children[v].push(Placement {
            edge,
            inverted,
            nested: fresh.is_some(),
        });
        if let Some(u) = fresh {
            layout.node_depth[u] = layout.node_depth[v] + 1;
            visit(graph, u, incident, placed, layout);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penman::{parse, EdgeTarget, GraphBuilder};

    #[test]
    fn nesting_layout_of_parsed_graph() {
        let g = parse("(w / want-01 :arg0 (b / boy) :arg1 (g / go-01 :arg0 b))").unwrap();
        let l = Layout::of(&g);
        assert_eq!(l.node_depth, [0, 1, 1]);
        assert_eq!(l.depth(), 2);
    }

    #[test]
    fn walk_inverts_edges_into_the_root() {
        // s -> b where b is the root: written as b :arg0-of (s ...)
        let g = GraphBuilder::new("b", "boy")
            .instance("s", "sing-01")
            .edge("s", ":arg0", EdgeTarget::variable("b").unwrap())
            .build()
            .unwrap();
        let l = Layout::of(&g);
        assert_eq!(
            l.children[0],
            [Placement {
                edge: 0,
                inverted: true,
                nested: true
            }]
        );
        assert_eq!(l.depth(), 1);
    }
}
