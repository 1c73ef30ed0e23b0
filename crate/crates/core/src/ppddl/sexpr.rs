use std::fmt;

/// Line/column position in a source text, both 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sexpr {
    Atom(String, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Atom(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(s, _) => Some(s),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Atom(..) => None,
        }
    }

    /// Head keyword of a list, lowercased.
    pub fn head(&self) -> Option<String> {
        self.as_list()
            .and_then(|items| items.first())
            .and_then(Sexpr::as_atom)
            .map(str::to_ascii_lowercase)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntaxError {
    pub pos: Pos,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: expected {}, found {}", self.pos, self.expected, self.found)
    }
}

impl std::error::Error for SyntaxError {}

/// Reads a single top-level s-expression. `;` starts a line comment.
/// Symbols are kept verbatim; keyword matching is case-insensitive at the
/// call sites.
pub fn parse(text: &str) -> Result<Sexpr, SyntaxError> {
    let mut reader = Reader::new(text);
    reader.skip_ws();
    let expr = reader.read()?;
    reader.skip_ws();
    if let Some(c) = reader.peek() {
        return Err(SyntaxError {
            pos: reader.pos(),
            expected: "end of input".into(),
            found: format!("'{c}'"),
        });
    }
    Ok(expr)
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self { chars: text.chars().peekable(), line: 1, col: 1 }
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sexpr, SyntaxError> {
        let start = self.pos();
        match self.peek() {
            None => Err(SyntaxError {
                pos: start,
                expected: "'(' or symbol".into(),
                found: "end of input".into(),
            }),
            Some(')') => Err(SyntaxError {
                pos: start,
                expected: "'(' or symbol".into(),
                found: "')'".into(),
            }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => {
                            return Err(SyntaxError {
                                pos: self.pos(),
                                expected: format!("')' closing list opened at {start}"),
                                found: "end of input".into(),
                            })
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Sexpr::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(_) => {
                let mut sym = String::new();
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    sym.push(c);
                    self.bump();
                }
                Ok(Sexpr::Atom(sym, start))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_lists_with_positions() {
        let e = parse("(a (b c)\n  ; note\n  d)").unwrap();
        let items = e.as_list().unwrap();
        assert_eq!(items.len(), 3);
        assert_eq!(items[1].as_list().unwrap()[1].as_atom(), Some("c"));
        assert_eq!(items[2].pos(), Pos { line: 3, col: 3 });
    }

    #[test]
    fn unbalanced_reports_position() {
        let err = parse("(a (b c)").unwrap_err();
        assert_eq!(err.found, "end of input");
        assert_eq!(err.pos.line, 1);
        let err = parse("(a) b").unwrap_err();
        assert_eq!(err.expected, "end of input");
        assert_eq!(err.pos, Pos { line: 1, col: 5 });
    }
}
