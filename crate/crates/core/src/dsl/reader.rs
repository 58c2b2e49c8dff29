//! S-expression reader with line/column positions.

use super::{Diagnostic, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Symbol(String),
    Str(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SexpKind {
    Atom(Atom),
    List(Vec<Sexp>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sexp {
    pub kind: SexpKind,
    pub span: Span,
}

impl Sexp {
    pub fn symbol(&self) -> Option<&str> {
        match &self.kind {
            SexpKind::Atom(Atom::Symbol(s)) => Some(s),
            _ => None,
        }
    }

    /// Symbol or string contents.
    pub fn text(&self) -> Option<&str> {
        match &self.kind {
            SexpKind::Atom(Atom::Symbol(s)) | SexpKind::Atom(Atom::Str(s)) => Some(s),
            SexpKind::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match &self.kind {
            SexpKind::List(items) => Some(items),
            SexpKind::Atom(_) => None,
        }
    }

    pub fn is_string(&self) -> bool {
        matches!(self.kind, SexpKind::Atom(Atom::Str(_)))
    }
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|(_, c)| *c)
    }

    fn span(&mut self, len: usize) -> Span {
        let offset = self.chars.peek().map_or(len, |(i, _)| *i);
        Span {
            line: self.line,
            column: self.column,
            offset,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';')
}

/// Reads every top-level expression. Never panics; malformed input yields
/// diagnostics alongside whatever could be read.
pub fn read(text: &str) -> (Vec<Sexp>, Vec<Diagnostic>) {
    let mut cur = Cursor {
        chars: text.char_indices().peekable(),
        line: 1,
        column: 1,
    };
    let len = text.len();
    let mut diags = Vec::new();
    // Open lists: (start span, items).
    let mut stack: Vec<(Span, Vec<Sexp>)> = Vec::new();
    let mut top = Vec::new();

    let push = |stack: &mut Vec<(Span, Vec<Sexp>)>, top: &mut Vec<Sexp>, s: Sexp| match stack.last_mut() {
        Some((_, items)) => items.push(s),
        None => top.push(s),
    };

    while let Some(c) = cur.peek() {
        let span = cur.span(len);
        match c {
            _ if c.is_whitespace() => {
                cur.bump();
            }
            ';' => {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            }
            '(' => {
                cur.bump();
                stack.push((span, Vec::new()));
            }
            ')' => {
                cur.bump();
                match stack.pop() {
                    Some((start, items)) => push(
                        &mut stack,
                        &mut top,
                        Sexp {
                            kind: SexpKind::List(items),
                            span: start,
                        },
                    ),
                    None => diags.push(Diagnostic::error(
                        "unbalanced parenthesis: unexpected `)`",
                        span,
                    )),
                }
            }
            '"' => {
                cur.bump();
                let mut s = String::new();
                let mut closed = false;
                while let Some(c) = cur.bump() {
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match cur.bump() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(other) => s.push(other),
                            None => break,
                        },
                        _ => s.push(c),
                    }
                }
                if !closed {
                    diags.push(Diagnostic::error("unterminated string", span));
                }
                push(
                    &mut stack,
                    &mut top,
                    Sexp {
                        kind: SexpKind::Atom(Atom::Str(s)),
                        span,
                    },
                );
            }
            _ => {
                let mut s = String::new();
                while let Some(c) = cur.peek().filter(|c| !is_delimiter(*c)) {
                    s.push(c);
                    cur.bump();
                }
                push(
                    &mut stack,
                    &mut top,
                    Sexp {
                        kind: SexpKind::Atom(Atom::Symbol(s)),
                        span,
                    },
                );
            }
        }
    }
    for (start, _) in stack.drain(..) {
        diags.push(Diagnostic::error(
            "unbalanced parenthesis: `(` is never closed",
            start,
        ));
    }
    (top, diags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_with_positions() {
        let (forms, diags) = read("(a (b \"c d\"))\n  (e)");
        assert!(diags.is_empty());
        assert_eq!(forms.len(), 2);
        assert_eq!((forms[1].span.line, forms[1].span.column), (2, 3));
        let inner = forms[0].list().unwrap()[1].list().unwrap();
        assert_eq!(inner[1].text(), Some("c d"));
        assert!(inner[1].is_string());
    }

    #[test]
    fn unclosed_paren_points_at_opener() {
        let (_, diags) = read("(isa A B");
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("unbalanced"));
        assert_eq!((diags[0].line, diags[0].column), (1, 1));
    }

    #[test]
    fn stray_close_and_comments() {
        let (forms, diags) = read("; note\n(a) )");
        assert_eq!(forms.len(), 1);
        assert_eq!((diags[0].line, diags[0].column), (2, 5));
    }

    #[test]
    fn escapes_in_strings() {
        let (forms, _) = read(r#""a\"b\\c""#);
        assert_eq!(forms[0].text(), Some("a\"b\\c"));
    }
}
