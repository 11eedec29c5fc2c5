use super::graph::{is_well_formed_relation, AmrGraph, Concept, Edge, EdgeTarget, RelationLabel, VariableId};
use super::lexer::{tokenize, Token, TokenKind};
use super::{StructuralError, StructuralErrorKind, StructuralReport};
use indexmap::IndexMap;
use std::collections::HashSet;

/// Parses one Penman graph, optionally preceded by `# ::key value` header lines.
///
/// All structural defects are collected; the parse is not fail-fast. A lexing failure or a
/// body that does not start with `(` is reported as `Unparseable`, and nothing after that
/// point is reported.
pub fn parse(text: &str) -> Result<AmrGraph, StructuralReport> {
    let (metadata, body_offset) = split_header(text);
    let body: String = text.chars().skip(body_offset).collect();
    let mut tokens = tokenize(&body);
    for t in &mut tokens {
        t.offset += body_offset;
    }

    let mut errors = Vec::new();
    let lex_failure = tokens
        .iter()
        .position(|t| matches!(t.kind, TokenKind::Error(_)));
    if let Some(pos) = lex_failure {
        errors.push(StructuralError {
            kind: StructuralErrorKind::Unparseable,
            offset: tokens[pos].offset,
            message: "unterminated string literal".into(),
        });
        tokens.truncate(pos);
    }

    let Some(first) = tokens.first() else {
        if errors.is_empty() {
            errors.push(StructuralError {
                kind: StructuralErrorKind::Unparseable,
                offset: body_offset.min(text.chars().count()),
                message: "no graph found".into(),
            });
        }
        return Err(StructuralReport::from_errors(errors));
    };
    if first.kind != TokenKind::LParen {
        // Everything after this point would be a cascade, including a later lexing failure.
        errors.clear();
        errors.push(StructuralError {
            kind: StructuralErrorKind::Unparseable,
            offset: first.offset,
            message: format!("graph must start with '(' but found {}", first.kind),
        });
        return Err(StructuralReport::from_errors(errors));
    }

    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        truncated: lex_failure.is_some(),
        errors,
        instances: IndexMap::new(),
        edges: Vec::new(),
        pending: Vec::new(),
        declared: HashSet::new(),
        nested_targets: HashSet::new(),
        eof_reported: false,
    };
    let root = parser.node();
    parser.trailing();
    parser.resolve_references();

    let Parser {
        mut errors,
        instances,
        edges,
        ..
    } = parser;
    let edges: Vec<Edge> = edges.into_iter().flatten().collect();
    match root {
        Some(root) if errors.is_empty() => Ok(AmrGraph::from_parts(root, instances, edges, metadata)),
        _ => {
            if errors.is_empty() {
                errors.push(StructuralError {
                    kind: StructuralErrorKind::MissingRoot,
                    offset: tokens[0].offset,
                    message: "top node has no variable".into(),
                });
            }
            Err(StructuralReport::from_errors(errors))
        }
    }
}

/// Structural validation; `valid` is true exactly when [`parse`] succeeds.
pub fn validate(text: &str) -> StructuralReport {
    match parse(text) {
        Ok(_) => StructuralReport::ok(),
        Err(report) => report,
    }
}

/// Reads leading comment lines. Returns the metadata and the character offset of the graph body.
fn split_header(text: &str) -> (IndexMap<String, String>, usize) {
    let mut metadata = IndexMap::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            if trimmed.starts_with('#') {
                parse_metadata_line(trimmed, &mut metadata);
            }
            offset += line.chars().count();
        } else {
            break;
        }
    }
    (metadata, offset)
}

/// Adds the `::key value` groups of one `#` comment line to `metadata`.
///
/// A key only starts at `::` at the beginning of the comment or after whitespace, so
/// values such as timestamps may contain colons. Keys without a value map to `""`.
/// Lines without any `::` group are ignored.
pub fn parse_metadata_line(line: &str, metadata: &mut IndexMap<String, String>) {
    let body = line.trim_start().trim_start_matches('#').trim();
    let mut starts = Vec::new();
    let bytes = body.as_bytes();
    let mut i = 0;
    while i + 1 < bytes.len() {
        if bytes[i] == b':' && bytes[i + 1] == b':' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            starts.push(i);
            i += 2;
        } else {
            i += 1;
        }
    }
    for (n, &start) in starts.iter().enumerate() {
        let end = starts.get(n + 1).copied().unwrap_or(body.len());
        let group = body[start + 2..end].trim();
        if group.is_empty() {
            continue;
        }
        let (key, value) = match group.split_once(char::is_whitespace) {
            Some((k, v)) => (k, v.trim()),
            None => (group, ""),
        };
        metadata.insert(key.to_string(), value.to_string());
    }
}

/// A bare symbol that has not been resolved to a variable or a constant yet.
struct PendingReference {
    edge: usize,
    offset: usize,
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    /// The token stream was cut at a lexing failure; EOF errors would only cascade from it.
    truncated: bool,
    errors: Vec<StructuralError>,
    instances: IndexMap<VariableId, Concept>,
    /// Edge slots in preorder; a slot stays empty when its nested target fails to parse.
    edges: Vec<Option<Edge>>,
    pending: Vec<PendingReference>,
    /// Variables that head a node, including ones whose concept is missing.
    declared: HashSet<VariableId>,
    nested_targets: HashSet<VariableId>,
    eof_reported: bool,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn error(&mut self, kind: StructuralErrorKind, offset: usize, message: impl Into<String>) {
        self.errors.push(StructuralError {
            kind,
            offset,
            message: message.into(),
        });
    }

    fn unexpected_eof(&mut self, open_offset: usize) {
        if self.truncated || self.eof_reported {
            return;
        }
        self.eof_reported = true;
        let depth = self.unclosed_depth();
        self.error(
            StructuralErrorKind::UnbalancedParens,
            open_offset,
            format!("input ends with {depth} unclosed parenthesis(es)"),
        );
    }

    fn unclosed_depth(&self) -> usize {
        let mut depth: isize = 0;
        for t in self.tokens {
            match t.kind {
                TokenKind::LParen => depth += 1,
                TokenKind::RParen => depth -= 1,
                _ => {}
            }
        }
        depth.max(1) as usize
    }

    /// Parses `( var / concept (relation target)* )`; the cursor is on the `(`.
    /// Returns the node's variable when it has a usable one.
    fn node(&mut self) -> Option<VariableId> {
        let open = self.bump().expect("caller checked for '('");
        let open_offset = open.offset;

        let var = match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Symbol(name)) => {
                let t = self.bump().unwrap();
                match VariableId::new(name.clone()) {
                    Ok(v) => Some((v, t.offset)),
                    Err(_) => {
                        self.error(
                            StructuralErrorKind::MissingRoot,
                            t.offset,
                            format!("{name:?} is not a valid variable name"),
                        );
                        None
                    }
                }
            }
            Some(TokenKind::QuotedString(_)) => {
                let t = self.bump().unwrap();
                self.error(StructuralErrorKind::MissingRoot, t.offset, "node variable cannot be a string");
                None
            }
            Some(_) => {
                let offset = self.peek().unwrap().offset;
                self.error(StructuralErrorKind::MissingRoot, offset, "node has no variable");
                None
            }
            None => {
                self.unexpected_eof(open_offset);
                return None;
            }
        };

        let concept = match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Slash) => {
                let slash = self.bump().unwrap();
                match self.peek().map(|t| &t.kind) {
                    Some(TokenKind::Symbol(label)) => {
                        self.bump();
                        Concept::new(label.clone()).ok()
                    }
                    Some(TokenKind::QuotedString(label)) => {
                        // Quoted concepts occur in some releases, e.g. (x / "foo").
                        self.bump();
                        Concept::new(format!("\"{label}\"")).ok()
                    }
                    _ => {
                        self.error(StructuralErrorKind::EmptyConcept, slash.offset, "'/' is not followed by a concept");
                        None
                    }
                }
            }
            None => {
                self.unexpected_eof(open_offset);
                return var.map(|(v, _)| v);
            }
            _ => {
                if let Some((v, offset)) = &var {
                    self.error(
                        StructuralErrorKind::EmptyConcept,
                        *offset,
                        format!("variable {v} has no concept"),
                    );
                }
                None
            }
        };

        // The first definition wins; a repeated one is reported and its edges are kept on
        // the first instance so that as much structure as possible survives.
        let var = match var {
            Some((v, offset)) => {
                if !self.declared.insert(v.clone()) {
                    self.error(
                        StructuralErrorKind::DuplicateVariable,
                        offset,
                        format!("variable {v} is defined more than once"),
                    );
                } else if let Some(c) = concept {
                    self.instances.insert(v.clone(), c);
                }
                Some(v)
            }
            None => None,
        };

        loop {
            let Some(t) = self.peek() else {
                self.unexpected_eof(open_offset);
                return var;
            };
            match &t.kind {
                TokenKind::RParen => {
                    self.bump();
                    return var;
                }
                TokenKind::Relation(label) => {
                    self.bump();
                    self.relation(var.as_ref(), label, t.offset);
                }
                TokenKind::LParen => {
                    self.error(StructuralErrorKind::MalformedRelation, t.offset, "nested node without a relation");
                    self.node();
                }
                other => {
                    let message = format!("{other} without a relation");
                    self.error(StructuralErrorKind::MalformedRelation, t.offset, message);
                    self.bump();
                }
            }
        }
    }

    fn relation(&mut self, source: Option<&VariableId>, label: &str, offset: usize) {
        let relation = if is_well_formed_relation(label) {
            RelationLabel::new(label).ok()
        } else {
            self.error(
                StructuralErrorKind::MalformedRelation,
                offset,
                format!("malformed relation label {label:?}"),
            );
            None
        };

        let Some(t) = self.peek() else {
            // EOF is reported by the enclosing node.
            return;
        };
        let slot = self.edges.len();
        self.edges.push(None);
        let (target, nested) = match &t.kind {
            TokenKind::LParen => match self.node() {
                Some(child) => (EdgeTarget::Variable(child), true),
                None => return,
            },
            TokenKind::Symbol(s) => {
                self.bump();
                self.pending.push(PendingReference {
                    edge: slot,
                    offset: t.offset,
                });
                (EdgeTarget::Constant(s.clone()), false)
            }
            TokenKind::QuotedString(s) => {
                self.bump();
                (EdgeTarget::Constant(format!("\"{s}\"")), false)
            }
            TokenKind::Slash => {
                self.bump();
                self.error(StructuralErrorKind::MalformedRelation, t.offset, format!("relation {label} is followed by '/'"));
                return;
            }
            TokenKind::Relation(_) | TokenKind::RParen | TokenKind::Error(_) => {
                self.error(StructuralErrorKind::MalformedRelation, offset, format!("relation {label} has no target"));
                return;
            }
        };

        if let (Some(source), Some(relation)) = (source, relation) {
            // A nested node that repeats an existing variable is reported as a duplicate;
            // the edge still points at the first definition.
            let nested = nested
                && match &target {
                    EdgeTarget::Variable(v) => v != source && self.nested_targets.insert(v.clone()),
                    EdgeTarget::Constant(_) => false,
                };
            self.edges[slot] = Some(Edge {
                source: source.clone(),
                relation,
                target,
                nested,
            });
        }
    }

    fn trailing(&mut self) {
        while let Some(t) = self.bump() {
            match t.kind {
                TokenKind::RParen => self.error(StructuralErrorKind::UnbalancedParens, t.offset, "unmatched ')'"),
                _ => {
                    self.error(
                        StructuralErrorKind::TrailingGarbage,
                        t.offset,
                        format!("unexpected {} after the graph", t.kind),
                    );
                    return;
                }
            }
        }
    }

    /// Turns bare symbols into variable references or constants now that every instance is known.
    fn resolve_references(&mut self) {
        let pending = std::mem::take(&mut self.pending);
        for p in pending {
            let Some(edge) = &self.edges[p.edge] else {
                continue;
            };
            let lexeme = match &edge.target {
                EdgeTarget::Constant(c) => c.clone(),
                EdgeTarget::Variable(_) => continue,
            };
            if let Some(var) = VariableId::new(lexeme.clone()).ok().filter(|v| self.declared.contains(v)) {
                if let Some(edge) = &mut self.edges[p.edge] {
                    edge.target = EdgeTarget::Variable(var);
                }
            } else if looks_like_variable(&lexeme) {
                self.error(
                    StructuralErrorKind::UndefinedVariable,
                    p.offset,
                    format!("variable {lexeme} is never defined"),
                );
            }
        }
    }
}

/// Variable-shaped symbol: one letter optionally followed by digits (`b`, `a2`).
/// Any other bare symbol that is not a defined variable is a constant.
fn looks_like_variable(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase()) && chars.all(|c| c.is_ascii_digit())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penman::StructuralErrorKind::*;

    const WANT: &str = "(w / want-01\n    :arg0 (b / boy)\n    :arg1 (g / go-01\n        :arg0 b))";

    fn kinds(text: &str) -> Vec<StructuralErrorKind> {
        validate(text).kinds()
    }

    #[test]
    fn parses_reentrant_graph() {
        let g = parse(WANT).unwrap();
        assert_eq!(g.root().as_str(), "w");
        let inst: Vec<_> = g.instances().iter().map(|(v, c)| (v.as_str(), c.as_str())).collect();
        assert_eq!(inst, [("w", "want-01"), ("b", "boy"), ("g", "go-01")]);
        let edges: Vec<_> = g
            .edges()
            .iter()
            .map(|e| (e.source.as_str(), e.relation.as_str(), e.target.lexeme(), e.nested))
            .collect();
        assert_eq!(
            edges,
            [
                ("w", ":arg0", "b", true),
                ("w", ":arg1", "g", true),
                ("g", ":arg0", "b", false)
            ]
        );
        assert!(matches!(g.edges()[2].target, EdgeTarget::Variable(_)));
    }

    #[test]
    fn header_metadata_is_captured() {
        let text = "# ::id sdl_0002.2 ::date 2013-07-04T02:23:45 ::annotator SDL-AMR-09 ::preferred\n\
                    # ::snt This will ultimately accelerate .\n\
                    # plain comment\n\
                    (t / this)";
        let g = parse(text).unwrap();
        let md = g.metadata();
        assert_eq!(md["id"], "sdl_0002.2");
        assert_eq!(md["date"], "2013-07-04T02:23:45");
        assert_eq!(md["annotator"], "SDL-AMR-09");
        assert_eq!(md["preferred"], "");
        assert_eq!(md["snt"], "This will ultimately accelerate .");
        assert_eq!(md.len(), 5);
    }

    #[test]
    fn constants_and_uppercase_relations() {
        let g = parse("(n / name :OP1 \"Sub-Saharan\" :polarity - :quant 3 :mode imperative)").unwrap();
        let targets: Vec<_> = g.edges().iter().map(|e| (e.relation.as_str(), e.target.clone())).collect();
        assert_eq!(targets[0], (":op1", EdgeTarget::Constant("\"Sub-Saharan\"".into())));
        assert_eq!(targets[1], (":polarity", EdgeTarget::Constant("-".into())));
        assert_eq!(targets[2], (":quant", EdgeTarget::Constant("3".into())));
        assert_eq!(targets[3], (":mode", EdgeTarget::Constant("imperative".into())));
    }

    #[test]
    fn reference_before_definition() {
        let g = parse("(w / want-01 :arg0 b :arg1 (b / boy))").unwrap();
        assert!(matches!(g.edges()[0].target, EdgeTarget::Variable(_)));
        assert!(g.edges()[1].nested);
    }

    #[test]
    fn taxonomy_examples() {
        assert_eq!(kinds("(b / boy"), [UnbalancedParens]);
        assert_eq!(kinds("(x / a :arg0 y)"), [UndefinedVariable]);
        assert_eq!(kinds(""), [Unparseable]);
        assert_eq!(kinds("   \n"), [Unparseable]);
        assert_eq!(kinds("(a / x :argZ (a / y))"), [DuplicateVariable]);
        assert_eq!(kinds("(b / )"), [EmptyConcept]);
        assert_eq!(kinds("(b :arg0 (c / cat))"), [EmptyConcept]);
        assert_eq!(kinds("( / boy)"), [MissingRoot]);
        assert_eq!(kinds("(b / boy : (c / cat))"), [MalformedRelation]);
        assert_eq!(kinds("(b / boy :arg0)"), [MalformedRelation]);
        assert_eq!(kinds("(b / boy girl)"), [MalformedRelation]);
        assert_eq!(kinds("(b / boy) (g / girl)"), [TrailingGarbage]);
        assert_eq!(kinds("(b / boy))"), [UnbalancedParens]);
        assert_eq!(kinds("b / boy"), [Unparseable]);
        assert_eq!(kinds("(n / name :op1 \"Afr"), [Unparseable]);
    }

    #[test]
    fn errors_are_not_fail_fast() {
        let report = validate("(a / x :arg0 (a / y) :arg1 q :arg2 (c / ) :ARG3");
        assert_eq!(
            report.kinds(),
            [UnbalancedParens, DuplicateVariable, UndefinedVariable, EmptyConcept]
        );
        assert_eq!(report.errors[0].offset, 0);
    }

    #[test]
    fn unterminated_string_suppresses_cascade() {
        let report = validate("(a / x :arg0 y :op1 \"abc (b / c");
        // The undefined `y` precedes the lexing failure and is kept.
        assert_eq!(report.kinds(), [UndefinedVariable, Unparseable]);
    }

    #[test]
    fn offsets_stay_in_bounds() {
        for text in ["(b / boy", "", "(", "(x", "((", "# ::id a\n", "(a / b :c"] {
            let n = text.chars().count();
            for e in validate(text).errors {
                assert!(e.offset <= n, "{text:?} -> {e}");
            }
        }
    }

    #[test]
    fn cycles_through_inverse_edges_are_accepted() {
        let g = parse("(a / a1 :arg0-of (b / b1 :arg1-of a))").unwrap();
        assert_eq!(g.edges().len(), 2);
    }
}
