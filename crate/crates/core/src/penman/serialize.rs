use super::graph::{AmrGraph, EdgeTarget};
use super::layout::Layout;
use std::fmt::Write;

const INDENT: &str = "    ";

/// Renders a graph in Penman notation, indenting four spaces per nesting level.
///
/// The first mention of a variable carries its concept; later mentions are bare.
/// Metadata is not written; see [`serialize_with_metadata`].
pub fn serialize(graph: &AmrGraph) -> String {
    let layout = Layout::of(graph);
    let root = graph
        .instance_index(graph.root())
        .expect("root is an instance");
    let mut out = String::new();
    write_node(graph, &layout, root, 0, &mut out);
    out
}

/// [`serialize`] preceded by one `# ::key value` line per metadata entry.
pub fn serialize_with_metadata(graph: &AmrGraph) -> String {
    let mut out = String::new();
    for (k, v) in graph.metadata() {
        if v.is_empty() {
            let _ = writeln!(out, "# ::{k}");
        } else {
            let _ = writeln!(out, "# ::{k} {v}");
        }
    }
    out.push_str(&serialize(graph));
    out
}

fn write_node(graph: &AmrGraph, layout: &Layout, v: usize, level: usize, out: &mut String) {
    let (var, concept) = graph.instances().get_index(v).expect("instance index");
    let _ = write!(out, "({var} / {concept}");
    for p in &layout.children[v] {
        let e = &graph.edges()[p.edge];
        let label = if p.inverted {
            e.relation.toggled()
        } else {
            e.relation.clone()
        };
        out.push('\n');
        for _ in 0..=level {
            out.push_str(INDENT);
        }
        let _ = write!(out, "{label} ");
        let far = if p.inverted {
            EdgeTarget::Variable(e.source.clone())
        } else {
            e.target.clone()
        };
        match (&far, p.nested) {
            (EdgeTarget::Variable(u), true) => {
                let u = graph.instance_index(u).expect("nested target is an instance");
                write_node(graph, layout, u, level + 1, out);
            }
            _ => out.push_str(far.lexeme()),
        }
    }
    out.push(')');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penman::{parse, GraphBuilder};

    #[test]
    fn single_node() {
        let g = GraphBuilder::new("b", "boy").build().unwrap();
        assert_eq!(serialize(&g), "(b / boy)");
    }

    #[test]
    fn indentation_and_bare_references() {
        let g = parse("(w / want-01 :arg0 (b / boy) :arg1 (g / go-01 :arg0 b))").unwrap();
        assert_eq!(
            serialize(&g),
            "(w / want-01\n    :arg0 (b / boy)\n    :arg1 (g / go-01\n        :arg0 b))"
        );
    }

    #[test]
    fn metadata_header() {
        let g = parse("# ::id x.1 ::preferred\n# ::snt Hi .\n(h / hi)").unwrap();
        assert_eq!(
            serialize_with_metadata(&g),
            "# ::id x.1\n# ::preferred\n# ::snt Hi .\n(h / hi)"
        );
        assert_eq!(parse(&serialize_with_metadata(&g)).unwrap(), g);
    }
}
