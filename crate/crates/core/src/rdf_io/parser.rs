//! Turtle-subset parser.
//!
//! Accepted: `@prefix` directives, prefixed names, full IRIs, `a`, string,
//! decimal, integer and boolean literals with optional `^^` datatype, object
//! lists, predicate lists and `#` comments. Blank nodes, collections and
//! language tags are rejected.

use std::collections::BTreeMap;

use crate::error::ParseError;
use crate::term::{
    is_valid_local_name, well_known_iri, well_known_prefix, Decimal, Literal, Node, Term, Unit,
    XSD,
};

/// One parsed triple with the line of its subject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedTriple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Node,
    pub line: usize,
}

/// A parsed Turtle document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    /// Declared prefix label to IRI, as written in the source.
    pub prefixes: BTreeMap<String, String>,
    pub triples: Vec<ParsedTriple>,
    pub source_name: String,
}

impl Document {
    pub fn triple_set(&self) -> std::collections::BTreeSet<(Term, Term, Node)> {
        self.triples
            .iter()
            .map(|t| (t.subject.clone(), t.predicate.clone(), t.object.clone()))
            .collect()
    }
}

pub fn parse_turtle(text: &str) -> Result<Document, ParseError> {
    parse_turtle_named(text, "<input>")
}

pub fn parse_turtle_named(text: &str, source_name: &str) -> Result<Document, ParseError> {
    let tokens = Lexer::new(text).run()?;
    let mut p = Parser {
        tokens,
        pos: 0,
        doc: Document { source_name: source_name.to_string(), ..Document::default() },
        labels: BTreeMap::new(),
        eof: end_position(text),
    };
    p.document()?;
    Ok(p.doc)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Prefix,
    Iri(String),
    PName(String, String),
    A,
    Str(String),
    Number(String),
    Bool(bool),
    Caret,
    Dot,
    Semi,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
    text: String,
}

fn end_position(text: &str) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for c in text.chars() {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { chars: text.chars().peekable(), line: 1, column: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(line: usize, column: usize, message: impl Into<String>, snippet: &str) -> ParseError {
        ParseError { line, column, message: message.into(), snippet: snippet.chars().take(24).collect() }
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            let (line, column) = (self.line, self.column);
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            if c == '#' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            let (tok, text) = match c {
                '.' => {
                    self.bump();
                    (Tok::Dot, ".".to_string())
                }
                ';' => {
                    self.bump();
                    (Tok::Semi, ";".to_string())
                }
                ',' => {
                    self.bump();
                    (Tok::Comma, ",".to_string())
                }
                '^' => {
                    self.bump();
                    if self.chars.peek() != Some(&'^') {
                        return Err(Self::error(line, column, "expected `^^`", "^"));
                    }
                    self.bump();
                    (Tok::Caret, "^^".to_string())
                }
                '<' => self.iri(line, column)?,
                '"' => self.string(line, column)?,
                '@' => {
                    self.bump();
                    let word = self.word();
                    if word != "prefix" {
                        return Err(Self::error(
                            line,
                            column,
                            format!("unsupported directive `@{word}`"),
                            &format!("@{word}"),
                        ));
                    }
                    (Tok::Prefix, "@prefix".to_string())
                }
                '+' | '-' | '0'..='9' => self.number(line, column)?,
                c if c.is_ascii_alphabetic() => self.name(line, column)?,
                '_' | '[' | '(' => {
                    return Err(Self::error(line, column, "blank nodes and collections are not supported", &c.to_string()))
                }
                other => {
                    return Err(Self::error(line, column, format!("unexpected character `{other}`"), &other.to_string()))
                }
            };
            out.push(Token { tok, line, column, text });
        }
        Ok(out)
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn iri(&mut self, line: usize, column: usize) -> Result<(Tok, String), ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some(c) if c.is_whitespace() || c == '<' || c == '"' => {
                    return Err(Self::error(line, column, "malformed IRI", &format!("<{s}")))
                }
                Some(c) => s.push(c),
                None => return Err(Self::error(line, column, "unterminated IRI", &format!("<{s}"))),
            }
        }
        let text = format!("<{s}>");
        Ok((Tok::Iri(s), text))
    }

    fn string(&mut self, line: usize, column: usize) -> Result<(Tok, String), ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            let (l, c) = (self.line, self.column);
            match self.bump() {
                Some('"') => break,
                Some('\\') => {
                    let esc = match self.bump() {
                        Some('n') => '\n',
                        Some('t') => '\t',
                        Some('r') => '\r',
                        Some('"') => '"',
                        Some('\\') => '\\',
                        Some(other) => {
                            return Err(Self::error(l, c, format!("unknown escape `\\{other}`"), &format!("\\{other}")))
                        }
                        None => return Err(Self::error(line, column, "unterminated string", &format!("\"{s}"))),
                    };
                    s.push(esc);
                }
                Some('\n') => return Err(Self::error(line, column, "newline in string literal", &format!("\"{s}"))),
                Some(ch) => s.push(ch),
                None => return Err(Self::error(line, column, "unterminated string", &format!("\"{s}"))),
            }
        }
        let text = format!("\"{s}\"");
        Ok((Tok::Str(s), text))
    }

    fn number(&mut self, line: usize, column: usize) -> Result<(Tok, String), ParseError> {
        let mut s = String::new();
        if let Some(&c) = self.chars.peek() {
            if c == '+' || c == '-' {
                s.push(c);
                self.bump();
            }
        }
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_digit() {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        // A `.` is part of the number only when a digit follows it.
        if self.chars.peek() == Some(&'.') {
            let mut ahead = self.chars.clone();
            ahead.next();
            if matches!(ahead.peek(), Some(d) if d.is_ascii_digit()) {
                s.push('.');
                self.bump();
                while let Some(&c) = self.chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
        }
        if !s.chars().any(|c| c.is_ascii_digit()) {
            return Err(Self::error(line, column, "malformed number", &s));
        }
        if matches!(self.chars.peek(), Some(c) if c.is_ascii_alphabetic()) {
            return Err(Self::error(line, column, "exponents and suffixes are not supported", &s));
        }
        Ok((Tok::Number(s.clone()), s))
    }

    fn name(&mut self, line: usize, column: usize) -> Result<(Tok, String), ParseError> {
        let prefix = self.word();
        if self.chars.peek() != Some(&':') {
            return match prefix.as_str() {
                "a" => Ok((Tok::A, prefix)),
                "true" => Ok((Tok::Bool(true), prefix)),
                "false" => Ok((Tok::Bool(false), prefix)),
                _ => Err(Self::error(line, column, format!("expected a prefixed name, found `{prefix}`"), &prefix)),
            };
        }
        self.bump();
        let mut local = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                local.push(c);
                self.bump();
            } else {
                break;
            }
        }
        let text = format!("{prefix}:{local}");
        Ok((Tok::PName(prefix, local), text))
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    doc: Document,
    /// Declared label to canonical namespace tag.
    labels: BTreeMap<String, String>,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn err_at(tok: &Token, message: impl Into<String>) -> ParseError {
        ParseError { line: tok.line, column: tok.column, message: message.into(), snippet: tok.text.clone() }
    }

    fn err_eof(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.eof.0, column: self.eof.1, message: message.into(), snippet: String::new() }
    }

    fn expect_next(&mut self, what: &str) -> Result<Token, ParseError> {
        match self.next() {
            Some(t) => Ok(t),
            None => Err(self.err_eof(format!("unexpected end of input, expected {what}"))),
        }
    }

    fn document(&mut self) -> Result<(), ParseError> {
        while let Some(tok) = self.peek() {
            if tok.tok == Tok::Prefix {
                self.prefix_directive()?;
            } else {
                self.statement()?;
            }
        }
        Ok(())
    }

    fn prefix_directive(&mut self) -> Result<(), ParseError> {
        let directive = self.next().expect("peeked");
        let name = self.expect_next("a prefix label")?;
        let label = match &name.tok {
            Tok::PName(p, l) if l.is_empty() => p.clone(),
            _ => return Err(Self::err_at(&name, "expected a prefix label like `geofault:`")),
        };
        let iri_tok = self.expect_next("a namespace IRI")?;
        let iri = match &iri_tok.tok {
            Tok::Iri(i) => i.clone(),
            _ => return Err(Self::err_at(&iri_tok, "expected a namespace IRI in angle brackets")),
        };
        let dot = self.expect_next("`.`")?;
        if dot.tok != Tok::Dot {
            return Err(Self::err_at(&dot, "expected `.` after prefix declaration"));
        }
        if let Some(previous) = self.doc.prefixes.get(&label) {
            if *previous != iri {
                return Err(Self::err_at(&name, format!("prefix `{label}` redeclared with a different IRI")));
            }
            return Ok(());
        }
        let canonical = match well_known_prefix(&iri) {
            Some(tag) => tag.to_string(),
            None => {
                if well_known_iri(&label).is_some() {
                    return Err(Self::err_at(&name, format!("prefix `{label}` is reserved for <{}>", well_known_iri(&label).unwrap())));
                }
                if Term::new(&label, "x").is_err() {
                    return Err(Self::err_at(&name, format!("invalid prefix label `{label}`")));
                }
                label.clone()
            }
        };
        let _ = directive;
        self.doc.prefixes.insert(label.clone(), iri);
        self.labels.insert(label, canonical);
        Ok(())
    }

    fn statement(&mut self) -> Result<(), ParseError> {
        let subj_tok = self.next().expect("peeked");
        let subject = match &subj_tok.tok {
            Tok::Iri(_) | Tok::PName(..) => self.term(&subj_tok)?,
            _ => return Err(Self::err_at(&subj_tok, "expected a subject term")),
        };
        loop {
            let pred_tok = self.expect_next("a predicate")?;
            let predicate = match &pred_tok.tok {
                Tok::A => Term::rdf_type(),
                Tok::Iri(_) | Tok::PName(..) => self.term(&pred_tok)?,
                _ => return Err(Self::err_at(&pred_tok, "expected a predicate")),
            };
            loop {
                let obj_tok = self.expect_next("an object")?;
                let object = self.object(&obj_tok)?;
                self.doc.triples.push(ParsedTriple {
                    subject: subject.clone(),
                    predicate: predicate.clone(),
                    object,
                    line: subj_tok.line,
                });
                match self.peek().map(|t| &t.tok) {
                    Some(Tok::Comma) => {
                        self.pos += 1;
                    }
                    _ => break,
                }
            }
            let sep = self.expect_next("`;` or `.`")?;
            match sep.tok {
                Tok::Dot => return Ok(()),
                Tok::Semi => {
                    // Trailing `;` before `.` is legal Turtle.
                    while matches!(self.peek().map(|t| &t.tok), Some(Tok::Semi)) {
                        self.pos += 1;
                    }
                    if matches!(self.peek().map(|t| &t.tok), Some(Tok::Dot)) {
                        self.pos += 1;
                        return Ok(());
                    }
                }
                _ => return Err(Self::err_at(&sep, "expected `;`, `,` or `.`")),
            }
        }
    }

    fn object(&mut self, tok: &Token) -> Result<Node, ParseError> {
        match &tok.tok {
            Tok::Iri(_) | Tok::PName(..) => Ok(Node::Term(self.term(tok)?)),
            Tok::Bool(b) => Ok(Node::Literal(Literal::Boolean(*b))),
            Tok::Number(n) => {
                let value: Decimal = n.parse().map_err(|_| Self::err_at(tok, "decimal out of range or too precise (max 6 fractional digits)"))?;
                Ok(Node::Literal(Literal::decimal(value)))
            }
            Tok::Str(s) => {
                if !matches!(self.peek().map(|t| &t.tok), Some(Tok::Caret)) {
                    return Ok(Node::Literal(Literal::String(s.clone())));
                }
                self.pos += 1;
                let dt_tok = self.expect_next("a datatype")?;
                let datatype = match &dt_tok.tok {
                    Tok::Iri(_) | Tok::PName(..) => self.term(&dt_tok)?,
                    _ => return Err(Self::err_at(&dt_tok, "expected a datatype term")),
                };
                typed_literal(s, &datatype).map(Node::Literal).map_err(|m| Self::err_at(tok, m))
            }
            Tok::Dot | Tok::Semi | Tok::Comma => Err(Self::err_at(tok, "expected an object")),
            _ => Err(Self::err_at(tok, "expected an object term or literal")),
        }
    }

    fn term(&self, tok: &Token) -> Result<Term, ParseError> {
        match &tok.tok {
            Tok::PName(prefix, local) => {
                let ns = self
                    .labels
                    .get(prefix)
                    .ok_or_else(|| Self::err_at(tok, format!("undeclared prefix `{prefix}`")))?;
                if !is_valid_local_name(local) {
                    return Err(Self::err_at(tok, format!("invalid local name `{local}`")));
                }
                Term::new(ns, local).map_err(|e| Self::err_at(tok, e.to_string()))
            }
            Tok::Iri(iri) => {
                let split = iri.rfind(['#', '/']).map(|i| i + 1).unwrap_or(0);
                let (ns_iri, local) = iri.split_at(split);
                let ns = well_known_prefix(ns_iri)
                    .map(str::to_string)
                    .or_else(|| {
                        self.doc
                            .prefixes
                            .iter()
                            .find(|(_, v)| v.as_str() == ns_iri)
                            .and_then(|(k, _)| self.labels.get(k).cloned())
                    })
                    .ok_or_else(|| Self::err_at(tok, format!("IRI <{iri}> is not under a declared namespace")))?;
                if !is_valid_local_name(local) {
                    return Err(Self::err_at(tok, format!("invalid local name `{local}`")));
                }
                Term::new(&ns, local).map_err(|e| Self::err_at(tok, e.to_string()))
            }
            _ => Err(Self::err_at(tok, "expected a term")),
        }
    }
}

fn typed_literal(lexical: &str, datatype: &Term) -> Result<Literal, String> {
    if let Some(unit) = Unit::from_datatype(datatype) {
        let v: Decimal = lexical.parse().map_err(|_| format!("invalid {unit} value `{lexical}`"))?;
        return Ok(Literal::measure(v, unit));
    }
    if datatype.namespace() == XSD {
        return match datatype.local_name() {
            "string" => Ok(Literal::String(lexical.to_string())),
            "decimal" | "integer" => {
                let v: Decimal = lexical.parse().map_err(|_| format!("invalid decimal `{lexical}`"))?;
                if datatype.local_name() == "integer" && v.micros() % 1_000_000 != 0 {
                    return Err(format!("invalid integer `{lexical}`"));
                }
                Ok(Literal::decimal(v))
            }
            "boolean" => match lexical {
                "true" => Ok(Literal::Boolean(true)),
                "false" => Ok(Literal::Boolean(false)),
                _ => Err(format!("invalid boolean `{lexical}`")),
            },
            other => Err(format!("unsupported datatype xsd:{other}")),
        };
    }
    Err(format!("unsupported datatype {datatype}"))
}
