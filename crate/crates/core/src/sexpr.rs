//! Lexer and s-expression reader for SMT-LIB 2.6 text.
//!
//! Everything here works on byte offsets. Use [`line_col`] to turn a
//! [`Span`] into something a human can find in an editor.

use std::fmt;

use thiserror::Error;

/// Half-open byte range `[start, end)` into the source text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

/// 1-based line and column (in characters) of a byte offset.
pub fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(source.len());
    let before = &source[..floor_char_boundary(source, offset)];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let col = before[line_start..].chars().count() + 1;
    (line, col)
}

fn floor_char_boundary(s: &str, mut i: usize) -> usize {
    while !s.is_char_boundary(i) {
        i -= 1;
    }
    i
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("unterminated {what} starting here")]
    UnterminatedString { what: &'static str, offset: usize },
    #[error("illegal character {ch:?}")]
    IllegalCharacter { ch: char, offset: usize },
    #[error("unbalanced parenthesis")]
    UnbalancedParens { offset: usize },
    #[error("unexpected end of input")]
    UnexpectedEof { offset: usize },
}

impl SyntaxError {
    pub fn offset(&self) -> usize {
        match *self {
            SyntaxError::UnterminatedString { offset, .. }
            | SyntaxError::IllegalCharacter { offset, .. }
            | SyntaxError::UnbalancedParens { offset }
            | SyntaxError::UnexpectedEof { offset } => offset,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    LParen,
    RParen,
    /// Symbols (simple or `|quoted|`), numerals, decimals, keywords. The
    /// text is kept verbatim, including the bars of a quoted symbol.
    Atom(String),
    /// A string literal, verbatim including the surrounding quotes.
    Str(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

impl Token {
    pub fn text(&self) -> &str {
        match &self.kind {
            TokenKind::LParen => "(",
            TokenKind::RParen => ")",
            TokenKind::Atom(s) | TokenKind::Str(s) => s,
        }
    }
}

/// Characters allowed in a simple (unquoted) SMT-LIB symbol, plus `:` for
/// keywords and `#` so that `#b0101` style literals lex and can be rejected
/// later with a better message.
fn is_atom_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/:#".contains(c)
}

pub fn lex(source: &str) -> Result<Vec<Token>, SyntaxError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut chars = source.char_indices().peekable();

    while let Some(&(start, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            ';' => {
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' | ')' => {
                chars.next();
                let kind = if c == '(' { TokenKind::LParen } else { TokenKind::RParen };
                tokens.push(Token { kind, span: Span::new(start, start + 1) });
            }
            '"' => {
                chars.next();
                let end = loop {
                    match chars.next() {
                        None => {
                            return Err(SyntaxError::UnterminatedString {
                                what: "string literal",
                                offset: start,
                            })
                        }
                        // `""` is an escaped quote inside a string literal.
                        Some((i, '"')) if bytes.get(i + 1) == Some(&b'"') => {
                            chars.next();
                        }
                        Some((i, '"')) => break i + 1,
                        Some(_) => {}
                    }
                };
                tokens.push(Token {
                    kind: TokenKind::Str(source[start..end].to_string()),
                    span: Span::new(start, end),
                });
            }
            '|' => {
                chars.next();
                let end = loop {
                    match chars.next() {
                        None => {
                            return Err(SyntaxError::UnterminatedString {
                                what: "quoted symbol",
                                offset: start,
                            })
                        }
                        Some((i, '|')) => break i + 1,
                        Some((i, '\\')) => return Err(SyntaxError::IllegalCharacter { ch: '\\', offset: i }),
                        Some(_) => {}
                    }
                };
                tokens.push(Token {
                    kind: TokenKind::Atom(source[start..end].to_string()),
                    span: Span::new(start, end),
                });
            }
            c if is_atom_char(c) => {
                let mut end = start;
                while let Some(&(i, c)) = chars.peek() {
                    if !is_atom_char(c) {
                        break;
                    }
                    end = i + c.len_utf8();
                    chars.next();
                }
                tokens.push(Token {
                    kind: TokenKind::Atom(source[start..end].to_string()),
                    span: Span::new(start, end),
                });
            }
            c => return Err(SyntaxError::IllegalCharacter { ch: c, offset: start }),
        }
    }
    Ok(tokens)
}

#[derive(Clone, Debug)]
pub enum SExprKind {
    Atom(String),
    List(Vec<SExpr>),
}

/// A node of the s-expression forest. Equality ignores spans.
#[derive(Clone, Debug)]
pub struct SExpr {
    pub kind: SExprKind,
    pub span: Span,
}

impl PartialEq for SExpr {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (SExprKind::Atom(a), SExprKind::Atom(b)) => a == b,
            (SExprKind::List(a), SExprKind::List(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for SExpr {}

impl SExpr {
    pub fn atom(&self) -> Option<&str> {
        match &self.kind {
            SExprKind::Atom(s) => Some(s),
            SExprKind::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match &self.kind {
            SExprKind::List(items) => Some(items),
            SExprKind::Atom(_) => None,
        }
    }

    /// Symbol name with any `|...|` quoting removed.
    pub fn symbol(&self) -> Option<&str> {
        self.atom().map(unquote_symbol)
    }

    /// `Some(rest)` if this is a list whose first element is the atom `head`.
    pub fn app(&self, head: &str) -> Option<&[SExpr]> {
        let items = self.list()?;
        match items.first()?.atom() {
            Some(h) if h == head => Some(&items[1..]),
            _ => None,
        }
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SExprKind::Atom(s) => f.write_str(s),
            SExprKind::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

pub fn unquote_symbol(s: &str) -> &str {
    if s.len() >= 2 && s.starts_with('|') && s.ends_with('|') {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

pub fn parse_sexprs(tokens: &[Token]) -> Result<Vec<SExpr>, SyntaxError> {
    // Stack of open lists: (start offset, children so far).
    let mut stack: Vec<(usize, Vec<SExpr>)> = Vec::new();
    let mut top = Vec::new();

    for tok in tokens {
        match &tok.kind {
            TokenKind::LParen => stack.push((tok.span.start, Vec::new())),
            TokenKind::RParen => {
                let (start, children) =
                    stack.pop().ok_or(SyntaxError::UnbalancedParens { offset: tok.span.start })?;
                let node = SExpr { kind: SExprKind::List(children), span: Span::new(start, tok.span.end) };
                match stack.last_mut() {
                    Some((_, siblings)) => siblings.push(node),
                    None => top.push(node),
                }
            }
            TokenKind::Atom(s) | TokenKind::Str(s) => {
                let node = SExpr { kind: SExprKind::Atom(s.clone()), span: tok.span };
                match stack.last_mut() {
                    Some((_, siblings)) => siblings.push(node),
                    None => top.push(node),
                }
            }
        }
    }
    if let Some((start, _)) = stack.last() {
        return Err(SyntaxError::UnbalancedParens { offset: *start });
    }
    Ok(top)
}

/// Lex and parse a whole source text.
pub fn parse_str(source: &str) -> Result<Vec<SExpr>, SyntaxError> {
    parse_sexprs(&lex(source)?)
}

/// Parse exactly one s-expression.
pub fn parse_one(source: &str) -> Result<SExpr, SyntaxError> {
    let mut forest = parse_str(source)?;
    match forest.len() {
        0 => Err(SyntaxError::UnexpectedEof { offset: source.len() }),
        1 => Ok(forest.pop().unwrap()),
        _ => Err(SyntaxError::UnbalancedParens { offset: forest[1].span.start }),
    }
}
