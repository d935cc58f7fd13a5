//! Line-oriented text formats.
//!
//! Four formats share one tokenizer: `.tm` static models, `.ev` event sets,
//! `.grp` super-event groupings, and `.sc` validation scenarios, plus a
//! simple injection list format for feeding the simulator. Every format is
//! UTF-8, one declaration per line, with `#` starting a comment. Model,
//! event, and grouping files round-trip: parsing what the serializer wrote
//! reproduces the value exactly.

mod events_text;
mod model_text;
mod scenario_text;

pub use events_text::{parse_events, parse_groups, serialize_events, serialize_groups};
pub use model_text::{parse_model, serialize_model};
pub use scenario_text::{parse_injections, parse_scenario};

use std::fmt;

/// A syntax or reference error, anchored to a line and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based line.
    pub line: usize,
    /// 1-based byte column; 1 when the error spans the whole line.
    pub col: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, col: usize, message: impl Into<String>) -> ParseError {
        ParseError { line, col, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Punct(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Str(_) => write!(f, "a string"),
            Tok::Punct(p) => write!(f, "`{p}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub col: usize,
}

const TWO_CHAR: [&str; 6] = ["->", ":=", "!=", "<=", ">=", ".."];
const ONE_CHAR: [char; 14] = [':', '=', '<', '>', ',', '.', '(', ')', '+', '-', '{', '}', '$', ';'];

pub(crate) fn tokenize_line(line: &str, lineno: usize) -> Result<Vec<Token>, ParseError> {
    let bytes = line.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let col = i + 1;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == '#' {
            break;
        } else if c == '"' {
            let mut s = String::new();
            let mut j = i + 1;
            loop {
                if j >= bytes.len() {
                    return Err(ParseError::new(lineno, col, "unterminated string"));
                }
                match bytes[j] {
                    b'"' => break,
                    b'\\' => {
                        let esc = bytes.get(j + 1).copied().ok_or_else(|| {
                            ParseError::new(lineno, col, "unterminated string")
                        })?;
                        match esc {
                            b'"' => s.push('"'),
                            b'\\' => s.push('\\'),
                            b'n' => s.push('\n'),
                            other => {
                                return Err(ParseError::new(
                                    lineno,
                                    j + 1,
                                    format!("unknown escape `\\{}`", other as char),
                                ));
                            }
                        }
                        j += 2;
                    }
                    _ => {
                        // Consume one full UTF-8 character.
                        let rest = &line[j..];
                        let ch = rest.chars().next().expect("in bounds");
                        s.push(ch);
                        j += ch.len_utf8();
                    }
                }
            }
            toks.push(Token { tok: Tok::Str(s), col });
            i = j + 1;
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            let text = &line[i..j];
            let n: i64 = text
                .parse()
                .map_err(|_| ParseError::new(lineno, col, format!("integer `{text}` out of range")))?;
            toks.push(Token { tok: Tok::Int(n), col });
            i = j;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            toks.push(Token { tok: Tok::Ident(line[i..j].to_string()), col });
            i = j;
        } else if let Some(p) = TWO_CHAR.iter().find(|p| line[i..].starts_with(**p)) {
            toks.push(Token { tok: Tok::Punct(p), col });
            i += 2;
        } else if let Some(p) = ONE_CHAR.iter().find(|p| **p == c) {
            // Map the char back to a static str.
            let s = match *p {
                ':' => ":",
                '=' => "=",
                '<' => "<",
                '>' => ">",
                ',' => ",",
                '.' => ".",
                '(' => "(",
                ')' => ")",
                '+' => "+",
                '-' => "-",
                '{' => "{",
                '}' => "}",
                '$' => "$",
                _ => ";",
            };
            toks.push(Token { tok: Tok::Punct(s), col });
            i += 1;
        } else {
            return Err(ParseError::new(lineno, col, format!("unexpected character `{c}`")));
        }
    }
    Ok(toks)
}

/// A cursor over one line's tokens.
pub(crate) struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Token], line: usize) -> Cursor<'a> {
        Cursor { toks, pos: 0, line }
    }

    pub fn err(&self, message: impl Into<String>) -> ParseError {
        let col = self.toks.get(self.pos).map_or_else(
            || self.toks.last().map_or(1, |t| t.col + 1),
            |t| t.col,
        );
        ParseError::new(self.line, col, message)
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn finish(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err(format!("unexpected {}", self.toks[self.pos].tok)))
        }
    }

    /// Consume the given punctuation token.
    pub fn punct(&mut self, p: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Punct(q)) if *q == p => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.err(format!("expected `{p}`, found {t}"))),
            None => Err(self.err(format!("expected `{p}`"))),
        }
    }

    /// True (and consumed) when the next token is this punctuation.
    pub fn eat_punct(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Consume an identifier.
    pub fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(t) => Err(self.err(format!("expected {what}, found {t}"))),
            None => Err(self.err(format!("expected {what}"))),
        }
    }

    /// Consume the exact keyword `kw`.
    pub fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.err(format!("expected `{kw}`, found {t}"))),
            None => Err(self.err(format!("expected `{kw}`"))),
        }
    }

    /// True (and consumed) when the next token is the keyword `kw`.
    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn int(&mut self) -> Result<i64, ParseError> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            Some(t) => Err(self.err(format!("expected an integer, found {t}"))),
            None => Err(self.err("expected an integer")),
        }
    }

    pub fn string(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(t) => Err(self.err(format!("expected a string, found {t}"))),
            None => Err(self.err("expected a string")),
        }
    }

    /// Literal value: integer (optionally negated) or string.
    pub fn literal(&mut self) -> Result<crate::model::Value, ParseError> {
        if self.eat_punct("-") {
            let n = self.int()?;
            return Ok(crate::model::Value::Int(-n));
        }
        match self.peek() {
            Some(Tok::Int(_)) => Ok(crate::model::Value::Int(self.int()?)),
            Some(Tok::Str(_)) => Ok(crate::model::Value::Text(self.string()?)),
            Some(t) => Err(self.err(format!("expected a literal, found {t}"))),
            None => Err(self.err("expected a literal")),
        }
    }
}

/// Quote and escape a string literal the way the tokenizer reads it.
pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

pub(crate) fn write_value(v: &crate::model::Value) -> String {
    match v {
        crate::model::Value::Int(n) => n.to_string(),
        crate::model::Value::Text(s) => quote(s),
    }
}
