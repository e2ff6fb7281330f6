//! Line-oriented reader for the construction language.
//!
//! ```text
//! % problem GEO0001
//! point A 10 10
//! point B 50 10
//! midpoint M A B
//! prove { midpoint M A B }
//! ```
//!
//! One command per line, `%` starts a comment. A `% problem GEOnnnn` comment
//! before the first command names the problem. The `prove { ... }` block may
//! span lines and must be the last thing in the file.

use super::model::{
    Conjecture, Construction, Coord, FreePoint, GeoProblem, Name, ObjectKind, Pos, Predicate,
    ProblemId, Scope, Step, StepOp,
};
use super::GeoError;

/// Id given to problems whose text carries no `% problem` header.
pub const DEFAULT_PROBLEM_ID: &str = "GEO0000";

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    LBrace,
    RBrace,
    Newline,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexed {
    toks: Vec<(Tok, Pos)>,
    header_id: Option<(String, Pos)>,
}

fn lex(text: &str) -> Result<Lexed, GeoError> {
    let mut toks = Vec::new();
    let mut header_id = None;
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (off, c) = chars[i];
            let pos = Pos { line: line_no, column: i + 1 };
            if c.is_whitespace() {
                i += 1;
            } else if c == '%' {
                let comment = line[off + 1..].trim();
                if toks.is_empty() && header_id.is_none() {
                    if let Some(rest) = comment.strip_prefix("problem") {
                        let id = rest.trim();
                        if !id.is_empty() {
                            header_id = Some((id.to_string(), pos));
                        }
                    }
                }
                break;
            } else if c == '{' {
                toks.push((Tok::LBrace, pos));
                i += 1;
            } else if c == '}' {
                toks.push((Tok::RBrace, pos));
                i += 1;
            } else if c.is_ascii_alphabetic() {
                let start = off;
                while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || matches!(chars[i].1, '\'' | '_')) {
                    i += 1;
                }
                let end = chars.get(i).map_or(line.len(), |&(o, _)| o);
                toks.push((Tok::Ident(line[start..end].to_string()), pos));
            } else if c.is_ascii_digit() || c == '-' {
                let start = off;
                i += 1;
                while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                    i += 1;
                }
                let end = chars.get(i).map_or(line.len(), |&(o, _)| o);
                let s = &line[start..end];
                if !super::model::is_decimal(s) {
                    return Err(GeoError::Lex { pos, found: s.to_string() });
                }
                toks.push((Tok::Number(s.to_string()), pos));
            } else {
                return Err(GeoError::Lex { pos, found: c.to_string() });
            }
        }
        toks.push((Tok::Newline, Pos { line: line_no, column: chars.len() + 1 }));
    }
    let eof_line = text.lines().count().max(1);
    toks.push((Tok::Eof, Pos { line: eof_line + 1, column: 1 }));
    Ok(Lexed { toks, header_id })
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, Pos) {
        &self.toks[self.at]
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> GeoError {
        let (tok, pos) = self.peek();
        GeoError::Syntax { pos: *pos, expected: expected.to_string(), found: tok.describe() }
    }

    fn skip_newlines(&mut self) {
        while self.peek().0 == Tok::Newline {
            self.bump();
        }
    }

    /// Remaining tokens of the current line, consuming the newline.
    fn line_rest(&mut self) -> Vec<(Tok, Pos)> {
        let mut out = Vec::new();
        loop {
            match self.peek().0 {
                Tok::Newline => {
                    self.bump();
                    break;
                }
                Tok::Eof => break,
                _ => out.push(self.bump()),
            }
        }
        out
    }
}

fn name_arg((tok, pos): &(Tok, Pos)) -> Result<Name, GeoError> {
    match tok {
        Tok::Ident(s) => Name::new(s.clone()),
        other => Err(GeoError::Syntax {
            pos: *pos,
            expected: "a name".into(),
            found: other.describe(),
        }),
    }
}

fn number_arg((tok, pos): &(Tok, Pos)) -> Result<Coord, GeoError> {
    match tok {
        Tok::Number(s) => Coord::new(s.clone()),
        other => Err(GeoError::Syntax {
            pos: *pos,
            expected: "a coordinate".into(),
            found: other.describe(),
        }),
    }
}

/// Parses a problem; the id comes from the `% problem` header or
/// [`DEFAULT_PROBLEM_ID`].
pub fn parse_gclc(text: &str) -> Result<GeoProblem, GeoError> {
    parse_gclc_with_id(text, DEFAULT_PROBLEM_ID)
}

/// Parses raw bytes, reporting invalid UTF-8 as a lexical error.
pub fn parse_gclc_bytes(bytes: &[u8]) -> Result<GeoProblem, GeoError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_gclc(text),
        Err(e) => {
            let valid = &bytes[..e.valid_up_to()];
            let line = valid.iter().filter(|&&b| b == b'\n').count() + 1;
            let line_start = valid.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
            // valid prefix is UTF-8 by construction
            let column = std::str::from_utf8(&valid[line_start..]).map_or(1, |s| s.chars().count() + 1);
            Err(GeoError::Lex { pos: Pos { line, column }, found: "invalid UTF-8".into() })
        }
    }
}

/// Like [`parse_gclc`], with the id used when the text has no header.
pub fn parse_gclc_with_id(text: &str, fallback_id: &str) -> Result<GeoProblem, GeoError> {
    let Lexed { toks, header_id } = lex(text)?;
    let id = match header_id {
        Some((s, _)) => ProblemId::new(s)?,
        None => ProblemId::new(fallback_id)?,
    };
    let mut p = Parser { toks, at: 0 };
    let mut scope = Scope::default();
    let mut free_points = Vec::new();
    let mut steps = Vec::new();

    let conjecture = loop {
        p.skip_newlines();
        let (tok, pos) = p.bump();
        let keyword = match tok {
            Tok::Eof => return Err(GeoError::MissingConjecture),
            Tok::Ident(k) => k,
            other => {
                return Err(GeoError::Syntax {
                    pos,
                    expected: "a command".into(),
                    found: other.describe(),
                })
            }
        };
        if keyword == "prove" {
            break parse_prove(&mut p, &scope)?;
        }
        let args = p.line_rest();
        if keyword == "point" {
            if args.len() != 3 {
                return Err(GeoError::Arity {
                    what: "point".into(),
                    expected: 3,
                    found: args.len(),
                    pos: Some(pos),
                });
            }
            let name = name_arg(&args[0])?;
            let x = number_arg(&args[1])?;
            let y = number_arg(&args[2])?;
            scope.define(&name, ObjectKind::Point, Some(args[0].1))?;
            free_points.push(FreePoint { name, x, y });
            continue;
        }
        let Some(op) = StepOp::from_keyword(&keyword) else {
            return Err(GeoError::Syntax {
                pos,
                expected: "a command".into(),
                found: format!("`{keyword}`"),
            });
        };
        // out name plus operands
        if args.len() != op.signature().len() + 1 {
            return Err(GeoError::Arity {
                what: keyword,
                expected: op.signature().len() + 1,
                found: args.len(),
                pos: Some(pos),
            });
        }
        let out = name_arg(&args[0])?;
        let operands = args[1..].iter().map(name_arg).collect::<Result<Vec<_>, _>>()?;
        for ((arg, &kind), (_, apos)) in operands.iter().zip(op.signature()).zip(&args[1..]) {
            scope.resolve(arg, kind, Some(*apos))?;
        }
        scope.define(&out, op.result_kind(), Some(args[0].1))?;
        steps.push(Step { op, args: operands, out });
    };

    p.skip_newlines();
    if p.peek().0 != Tok::Eof {
        return Err(p.unexpected("end of input after the conjecture"));
    }
    if free_points.is_empty() {
        return Err(GeoError::NoFreePoints);
    }
    Ok(GeoProblem { id, construction: Construction { free_points, steps }, conjecture })
}

fn parse_prove(p: &mut Parser, scope: &Scope) -> Result<Conjecture, GeoError> {
    p.skip_newlines();
    if p.peek().0 != Tok::LBrace {
        return Err(p.unexpected("`{`"));
    }
    p.bump();
    p.skip_newlines();
    let (tok, pos) = p.bump();
    let predicate = match &tok {
        Tok::Ident(s) => Predicate::from_name(s).ok_or_else(|| GeoError::Syntax {
            pos,
            expected: "a predicate".into(),
            found: tok.describe(),
        })?,
        _ => {
            return Err(GeoError::Syntax { pos, expected: "a predicate".into(), found: tok.describe() })
        }
    };
    let mut args = Vec::new();
    loop {
        p.skip_newlines();
        match p.peek().0 {
            Tok::RBrace => {
                p.bump();
                break;
            }
            Tok::Ident(_) => {
                let t = p.bump();
                args.push((name_arg(&t)?, t.1));
            }
            _ => return Err(p.unexpected("a point name or `}`")),
        }
    }
    let conj = Conjecture { predicate, args: args.iter().map(|(n, _)| n.clone()).collect() };
    if conj.args.len() != predicate.arity() {
        return Err(GeoError::Arity {
            what: predicate.name().into(),
            expected: predicate.arity(),
            found: conj.args.len(),
            pos: Some(pos),
        });
    }
    for (n, apos) in &args {
        scope.resolve(n, ObjectKind::Point, Some(*apos))?;
    }
    Ok(conj)
}
