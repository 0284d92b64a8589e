//! A closed subset of RDF 1.1 Turtle.
//!
//! Supported: `@prefix`/`PREFIX` directives, absolute IRIs, prefixed names,
//! blank node labels, `a`, short string literals with language tags or
//! datatypes, the `;` and `,` separators and `#` comments. Relative IRIs,
//! `@base`, collections, anonymous blank nodes, long strings and bare numeric
//! or boolean literals are rejected. Every document the serializer writes is
//! inside the subset.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct TurtleError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub lexical: String,
    /// Full datatype IRI; `rdf:langString` when `language` is set.
    pub datatype: String,
    pub language: Option<String>,
}

impl Literal {
    pub fn typed(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: datatype.into(),
            language: None,
        }
    }

    pub fn string(lexical: impl Into<String>) -> Self {
        Self::typed(lexical, XSD_STRING)
    }

    pub fn lang(lexical: impl Into<String>, language: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: RDF_LANG_STRING.into(),
            language: Some(language.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal(Literal),
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Term {
        Term::Iri(s.into())
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: String,
    pub object: Term,
}

/// Prefix declarations plus a set of triples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TurtleDocument {
    pub prefixes: BTreeMap<String, String>,
    pub triples: BTreeSet<Triple>,
}

impl TurtleDocument {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn prefix(&mut self, name: &str, namespace: &str) -> &mut Self {
        self.prefixes.insert(name.to_owned(), namespace.to_owned());
        self
    }

    pub fn insert(&mut self, subject: Term, predicate: impl Into<String>, object: Term) {
        self.triples.insert(Triple {
            subject,
            predicate: predicate.into(),
            object,
        });
    }

    pub fn objects(&self, subject: &Term, predicate: &str) -> Vec<&Term> {
        self.triples
            .iter()
            .filter(|t| &t.subject == subject && t.predicate == predicate)
            .map(|t| &t.object)
            .collect()
    }

    pub fn subjects_of_type(&self, class: &str) -> Vec<&Term> {
        self.triples
            .iter()
            .filter(|t| t.predicate == RDF_TYPE && t.object.as_iri() == Some(class))
            .map(|t| &t.subject)
            .collect()
    }

    pub fn subjects(&self) -> BTreeSet<&Term> {
        self.triples.iter().map(|t| &t.subject).collect()
    }

    /// Canonical text: prefixes sorted by name, subjects sorted, `rdf:type`
    /// first and remaining predicates sorted by IRI, objects sorted.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (name, ns) in &self.prefixes {
            out.push_str(&format!("@prefix {name}: <{ns}> .\n"));
        }
        let mut by_subject: BTreeMap<&Term, BTreeMap<(bool, &str), Vec<&Term>>> = BTreeMap::new();
        for t in &self.triples {
            by_subject
                .entry(&t.subject)
                .or_default()
                .entry((t.predicate != RDF_TYPE, t.predicate.as_str()))
                .or_default()
                .push(&t.object);
        }
        for (subject, predicates) in by_subject {
            out.push('\n');
            out.push_str(&self.render(subject));
            let count = predicates.len();
            for (i, ((_, predicate), objects)) in predicates.into_iter().enumerate() {
                out.push_str(if i == 0 { " " } else { "    " });
                if predicate == RDF_TYPE {
                    out.push('a');
                } else {
                    out.push_str(&self.render_iri(predicate));
                }
                out.push(' ');
                let rendered: Vec<String> = objects.iter().map(|o| self.render(o)).collect();
                out.push_str(&rendered.join(", "));
                out.push_str(if i + 1 == count { " .\n" } else { " ;\n" });
            }
        }
        out
    }

    fn render(&self, term: &Term) -> String {
        match term {
            Term::Iri(iri) => self.render_iri(iri),
            Term::Blank(label) => format!("_:{label}"),
            Term::Literal(l) => {
                let mut s = String::from('"');
                for c in l.lexical.chars() {
                    match c {
                        '"' => s.push_str("\\\""),
                        '\\' => s.push_str("\\\\"),
                        '\n' => s.push_str("\\n"),
                        '\r' => s.push_str("\\r"),
                        '\t' => s.push_str("\\t"),
                        c if c.is_control() => s.push_str(&format!("\\u{:04X}", c as u32)),
                        c => s.push(c),
                    }
                }
                s.push('"');
                if let Some(lang) = &l.language {
                    s.push('@');
                    s.push_str(lang);
                } else if l.datatype != XSD_STRING {
                    s.push_str("^^");
                    s.push_str(&self.render_iri(&l.datatype));
                }
                s
            }
        }
    }

    fn render_iri(&self, iri: &str) -> String {
        let best = self
            .prefixes
            .iter()
            .filter(|(_, ns)| iri.starts_with(ns.as_str()) && is_pn_local(&iri[ns.len()..]))
            .max_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| b.0.cmp(a.0)));
        match best {
            Some((name, ns)) => format!("{name}:{}", &iri[ns.len()..]),
            None => format!("<{iri}>"),
        }
    }

    pub fn parse(text: &str) -> Result<TurtleDocument, TurtleError> {
        Parser::new(text).document()
    }
}

impl fmt::Display for TurtleDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

fn is_pn_local(s: &str) -> bool {
    let b = s.as_bytes();
    if b.is_empty() {
        return false;
    }
    let body = |c: u8| c.is_ascii_alphanumeric() || c == b'_' || c == b'-' || c == b'.';
    (b[0].is_ascii_alphanumeric() || b[0] == b'_') && b.iter().all(|&c| body(c)) && b[b.len() - 1] != b'.'
}

fn is_absolute_iri(s: &str) -> bool {
    let Some((scheme, rest)) = s.split_once(':') else {
        return false;
    };
    !rest.is_empty()
        && scheme.as_bytes().first().is_some_and(u8::is_ascii_alphabetic)
        && scheme.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'+' || b == b'-' || b == b'.')
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    doc: TurtleDocument,
}

impl Parser {
    fn new(text: &str) -> Self {
        Parser {
            chars: text.chars().collect(),
            pos: 0,
            line: 1,
            doc: TurtleDocument::new(),
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, TurtleError> {
        Err(TurtleError {
            line: self.line,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, c: char) -> Result<(), TurtleError> {
        self.skip_ws();
        match self.peek() {
            Some(got) if got == c => {
                self.bump();
                Ok(())
            }
            Some(got) => self.err(format!("expected `{c}`, found `{got}`")),
            None => self.err(format!("expected `{c}`, found end of input")),
        }
    }

    fn starts_with_keyword(&self, kw: &str) -> bool {
        let n = kw.chars().count();
        let word: String = self.chars[self.pos..].iter().take(n).collect();
        word.eq_ignore_ascii_case(kw) && self.peek_at(n).is_none_or(|c| c.is_whitespace() || c == '<')
    }

    fn document(mut self) -> Result<TurtleDocument, TurtleError> {
        loop {
            self.skip_ws();
            if self.peek().is_none() {
                return Ok(self.doc);
            }
            if self.peek() == Some('@') {
                if self.starts_with_keyword("@prefix") {
                    self.pos += "@prefix".len();
                    self.prefix_directive()?;
                    self.expect('.')?;
                } else {
                    return self.err("unsupported directive");
                }
            } else if self.starts_with_keyword("PREFIX") {
                self.pos += "PREFIX".len();
                self.prefix_directive()?;
            } else if self.starts_with_keyword("BASE") {
                return self.err("BASE is not supported");
            } else {
                self.statement()?;
            }
        }
    }

    fn prefix_directive(&mut self) -> Result<(), TurtleError> {
        self.skip_ws();
        let mut name = String::new();
        while let Some(c) = self.peek() {
            if c == ':' {
                break;
            }
            if !(c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.') {
                return self.err(format!("invalid prefix name character `{c}`"));
            }
            name.push(c);
            self.bump();
        }
        if name.starts_with(|c: char| !c.is_ascii_alphabetic()) {
            return self.err(format!("invalid prefix name `{name}`"));
        }
        self.expect(':')?;
        self.skip_ws();
        let ns = self.iri_ref()?;
        self.doc.prefixes.insert(name, ns);
        Ok(())
    }

    fn statement(&mut self) -> Result<(), TurtleError> {
        let subject = match self.peek() {
            Some('"') => return self.err("a literal cannot be a subject"),
            _ => self.term()?,
        };
        if matches!(subject, Term::Literal(_)) {
            return self.err("a literal cannot be a subject");
        }
        loop {
            self.skip_ws();
            let predicate = self.verb()?;
            loop {
                self.skip_ws();
                let object = self.term()?;
                self.doc.insert(subject.clone(), predicate.clone(), object);
                self.skip_ws();
                if self.peek() == Some(',') {
                    self.bump();
                } else {
                    break;
                }
            }
            self.skip_ws();
            match self.peek() {
                Some(';') => {
                    while self.peek() == Some(';') {
                        self.bump();
                        self.skip_ws();
                    }
                    if self.peek() == Some('.') {
                        self.bump();
                        return Ok(());
                    }
                }
                Some('.') => {
                    self.bump();
                    return Ok(());
                }
                Some(c) => return self.err(format!("expected `;`, `,` or `.`, found `{c}`")),
                None => return self.err("unterminated statement"),
            }
        }
    }

    fn verb(&mut self) -> Result<String, TurtleError> {
        if self.peek() == Some('a') && self.peek_at(1).is_some_and(|c| c.is_whitespace() || c == '<' || c == '"') {
            self.bump();
            return Ok(RDF_TYPE.to_owned());
        }
        match self.term()? {
            Term::Iri(iri) => Ok(iri),
            _ => self.err("predicate must be an IRI"),
        }
    }

    fn term(&mut self) -> Result<Term, TurtleError> {
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iri_ref()?)),
            Some('"') => self.literal().map(Term::Literal),
            Some('_') if self.peek_at(1) == Some(':') => {
                self.pos += 2;
                let label = self.name_chars();
                if label.is_empty() {
                    return self.err("empty blank node label");
                }
                Ok(Term::Blank(label))
            }
            Some('\'') => self.err("single-quoted literals are not supported"),
            Some('[') | Some('(') => self.err("anonymous blank nodes and collections are not supported"),
            Some(c) if c.is_ascii_alphabetic() || c == ':' => self.prefixed_name().map(Term::Iri),
            Some(c) => self.err(format!("unexpected `{c}`")),
            None => self.err("unexpected end of input"),
        }
    }

    fn name_chars(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        // a trailing dot terminates the statement
        while s.ends_with('.') {
            s.pop();
            self.pos -= 1;
        }
        s
    }

    fn prefixed_name(&mut self) -> Result<String, TurtleError> {
        let mut prefix = String::new();
        while let Some(c) = self.peek() {
            if c == ':' {
                break;
            }
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.' {
                prefix.push(c);
                self.bump();
            } else {
                return self.err(format!("`{prefix}{c}` is neither a prefixed name nor a keyword"));
            }
        }
        if self.peek() != Some(':') {
            return self.err(format!("`{prefix}` is neither a prefixed name nor a keyword"));
        }
        self.bump();
        let local = self.name_chars();
        let Some(ns) = self.doc.prefixes.get(&prefix) else {
            return self.err(format!("undeclared prefix `{prefix}:`"));
        };
        Ok(format!("{ns}{local}"))
    }

    fn iri_ref(&mut self) -> Result<String, TurtleError> {
        if self.peek() != Some('<') {
            return self.err("expected `<`");
        }
        self.bump();
        let mut iri = String::new();
        loop {
            match self.peek() {
                Some('>') => {
                    self.bump();
                    break;
                }
                Some(c) if c.is_whitespace() || c.is_control() || "<\"{}|^`\\".contains(c) => {
                    return self.err(format!("malformed IRI: `{c}` in <{iri}"))
                }
                Some(c) => {
                    iri.push(c);
                    self.bump();
                }
                None => return self.err(format!("malformed IRI: unterminated <{iri}")),
            }
        }
        if !is_absolute_iri(&iri) {
            return self.err(format!("malformed IRI: <{iri}> is not absolute"));
        }
        Ok(iri)
    }

    fn literal(&mut self) -> Result<Literal, TurtleError> {
        self.bump();
        if self.peek() == Some('"') && self.peek_at(1) == Some('"') {
            return self.err("long string literals are not supported");
        }
        let mut lexical = String::new();
        loop {
            match self.peek() {
                None | Some('\n') | Some('\r') => return self.err("unterminated literal: missing closing quote"),
                Some('"') => {
                    self.bump();
                    break;
                }
                Some('\\') => {
                    self.bump();
                    let c = match self.bump() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some(u @ ('u' | 'U')) => {
                            let n = if u == 'u' { 4 } else { 8 };
                            let hex: String = (0..n).filter_map(|_| self.bump()).collect();
                            match u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                                Some(c) if hex.len() == n => c,
                                _ => return self.err(format!("bad unicode escape `\\{u}{hex}`")),
                            }
                        }
                        Some(c) => return self.err(format!("bad escape `\\{c}`")),
                        None => return self.err("unterminated literal: missing closing quote"),
                    };
                    lexical.push(c);
                }
                Some(c) => {
                    lexical.push(c);
                    self.bump();
                }
            }
        }
        match self.peek() {
            Some('@') => {
                self.bump();
                let mut tag = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        tag.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if tag.is_empty() || tag.starts_with('-') || tag.ends_with('-') {
                    return self.err(format!("bad language tag `@{tag}`"));
                }
                Ok(Literal::lang(lexical, tag))
            }
            Some('^') => {
                self.bump();
                if self.bump() != Some('^') {
                    return self.err("expected `^^`");
                }
                let datatype = match self.term()? {
                    Term::Iri(iri) => iri,
                    _ => return self.err("datatype must be an IRI"),
                };
                if datatype == RDF_LANG_STRING {
                    return self.err("rdf:langString needs a language tag");
                }
                Ok(Literal::typed(lexical, datatype))
            }
            _ => Ok(Literal::string(lexical)),
        }
    }
}
