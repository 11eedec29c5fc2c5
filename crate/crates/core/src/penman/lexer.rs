use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    LParen,
    RParen,
    Slash,
    /// Relation label as written, colon included.
    Relation(String),
    Symbol(String),
    /// Contents of a double-quoted string, without the quotes. Escapes are kept verbatim.
    QuotedString(String),
    /// A lexing failure (currently only an unterminated quote). Consumes the rest of the input.
    Error(String),
}

/// A token with the character offset of its first character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub offset: usize,
}

impl Token {
    /// Source text of the token.
    pub fn lexeme(&self) -> String {
        match &self.kind {
            TokenKind::LParen => "(".into(),
            TokenKind::RParen => ")".into(),
            TokenKind::Slash => "/".into(),
            TokenKind::Relation(s) | TokenKind::Symbol(s) => s.clone(),
            TokenKind::QuotedString(s) => format!("\"{s}\""),
            TokenKind::Error(s) => s.clone(),
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::LParen => f.write_str("'('"),
            TokenKind::RParen => f.write_str("')'"),
            TokenKind::Slash => f.write_str("'/'"),
            TokenKind::Relation(s) => write!(f, "relation {s}"),
            TokenKind::Symbol(s) => write!(f, "symbol {s}"),
            TokenKind::QuotedString(s) => write!(f, "string \"{s}\""),
            TokenKind::Error(_) => f.write_str("unterminated string"),
        }
    }
}

fn ends_bare_token(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '"' | '/')
}

/// Splits Penman text into tokens. Never fails: lexing problems become [`TokenKind::Error`].
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let kind = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => {
                i += 1;
                TokenKind::LParen
            }
            ')' => {
                i += 1;
                TokenKind::RParen
            }
            '/' => {
                i += 1;
                TokenKind::Slash
            }
            '"' => {
                i += 1;
                let mut closed = false;
                while i < chars.len() {
                    match chars[i] {
                        '\\' => i += 2,
                        '"' => {
                            closed = true;
                            break;
                        }
                        _ => i += 1,
                    }
                }
                let end = i.min(chars.len());
                if closed {
                    i += 1;
                    TokenKind::QuotedString(chars[start + 1..end].iter().collect())
                } else {
                    i = chars.len();
                    TokenKind::Error(chars[start..].iter().collect())
                }
            }
            _ => {
                i += 1;
                while i < chars.len() && !ends_bare_token(chars[i]) {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                if c == ':' {
                    TokenKind::Relation(s)
                } else {
                    TokenKind::Symbol(s)
                }
            }
        };
        tokens.push(Token {
            kind,
            offset: start,
        });
    }
    tokens
}
