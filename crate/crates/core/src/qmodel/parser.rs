//! Hand-written parser for the query syntax:
//!
//! ```text
//! % comment
//! @endogenous Director,Movie
//! q(x) :- R^n(x,y), S(y), y = 'a3'.
//! ```
//!
//! Bare identifiers are variables; constants are quoted strings or integers.
//! Equalities in the body are removed by substitution.

use std::collections::{BTreeMap, BTreeSet};

use super::{Annotation, Atom, Query, Schema, Term};
use crate::error::{Error, Result};
use crate::value::Const;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Turnstile,
    Eq,
    Caret,
    Directive(bool, Vec<String>),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    line_has_content: bool,
}

impl Lexer {
    fn new(src: &str) -> Self {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            line_has_content: false,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
            self.line_has_content = false;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn ident(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn skip_inline_space(&mut self) {
        while matches!(self.peek(), Some(c) if c == ' ' || c == '\t' || c == '\r') {
            self.bump();
        }
    }

    fn directive(&mut self, line: usize, col: usize) -> Result<Tok> {
        if self.line_has_content {
            return Err(Error::syntax(line, col, "directives must start their own line"));
        }
        self.bump();
        let word = self.ident();
        let endo = match word.as_str() {
            "endogenous" => true,
            "exogenous" => false,
            _ => return Err(Error::syntax(line, col, format!("unknown directive `@{word}`"))),
        };
        let mut rels = Vec::new();
        loop {
            self.skip_inline_space();
            match self.peek() {
                Some(ch) if ch.is_ascii_alphabetic() || ch == '_' => rels.push(self.ident()),
                _ => return Err(Error::syntax(self.line, self.col, "expected a relation name")),
            }
            self.skip_inline_space();
            match self.peek() {
                Some(',') => {
                    self.bump();
                }
                None | Some('\n') => break,
                Some('%') => {
                    while !matches!(self.peek(), None | Some('\n')) {
                        self.bump();
                    }
                    break;
                }
                Some(ch) => {
                    return Err(Error::syntax(
                        self.line,
                        self.col,
                        format!("unexpected `{ch}` in directive"),
                    ))
                }
            }
        }
        Ok(Tok::Directive(endo, rels))
    }

    fn quoted(&mut self, line: usize, col: usize) -> Result<Tok> {
        let q = self.bump().expect("quote");
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Err(Error::syntax(line, col, "unterminated string")),
                Some(c) if c == q => {
                    if self.peek() == Some(q) {
                        self.bump();
                        s.push(q);
                    } else {
                        break;
                    }
                }
                Some(c) => s.push(c),
            }
        }
        Ok(Tok::Str(s))
    }

    fn tokens(mut self) -> Result<(Vec<Spanned>, (usize, usize))> {
        let mut out = Vec::new();
        loop {
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else { break };
            let tok = match c {
                c if c.is_whitespace() => {
                    self.bump();
                    continue;
                }
                '%' => {
                    while !matches!(self.peek(), None | Some('\n')) {
                        self.bump();
                    }
                    continue;
                }
                '@' => self.directive(line, col)?,
                '(' => {
                    self.bump();
                    Tok::LParen
                }
                ')' => {
                    self.bump();
                    Tok::RParen
                }
                ',' => {
                    self.bump();
                    Tok::Comma
                }
                '.' => {
                    self.bump();
                    Tok::Dot
                }
                '=' => {
                    self.bump();
                    Tok::Eq
                }
                '^' => {
                    self.bump();
                    Tok::Caret
                }
                ':' => {
                    self.bump();
                    if self.peek() == Some('-') {
                        self.bump();
                        Tok::Turnstile
                    } else {
                        return Err(Error::syntax(line, col, "expected `:-`"));
                    }
                }
                '\'' | '"' => self.quoted(line, col)?,
                c if c == '-' || c.is_ascii_digit() => {
                    let mut s = String::new();
                    if c == '-' {
                        s.push('-');
                        self.bump();
                    }
                    while let Some(d) = self.peek() {
                        if d.is_ascii_digit() {
                            s.push(d);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    if s == "-" {
                        return Err(Error::syntax(line, col, "expected digits after `-`"));
                    }
                    if matches!(self.peek(), Some(d) if d.is_ascii_alphabetic() || d == '_') {
                        return Err(Error::syntax(line, col, "malformed number"));
                    }
                    Tok::Number(s)
                }
                c if c.is_ascii_alphabetic() || c == '_' => Tok::Ident(self.ident()),
                other => return Err(Error::syntax(line, col, format!("unexpected character `{other}`"))),
            };
            self.line_has_content = !matches!(tok, Tok::Directive(..));
            out.push(Spanned { tok, line, col });
        }
        Ok((out, (self.line, self.col)))
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map(|s| (s.line, s.col)).unwrap_or(self.eof)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        let (l, c) = self.here();
        Err(Error::syntax(l, c, message))
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn term(&mut self) -> Result<Term> {
        match self.peek().cloned() {
            Some(Tok::Ident(v)) => {
                self.pos += 1;
                Ok(Term::Var(v))
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(Term::Const(Const::parse(&s)))
            }
            Some(Tok::Number(n)) => {
                self.pos += 1;
                Ok(Term::Const(Const::parse(&n)))
            }
            _ => self.err("expected a term"),
        }
    }
}

enum Item {
    Atom(Atom),
    Equality(Term, Term, (usize, usize)),
}

/// Parses query text without a schema (relation arities are only checked
/// for consistency within the query).
pub fn parse_query(text: &str) -> Result<Query> {
    let (toks, eof) = Lexer::new(text).tokens()?;
    let mut directives: BTreeMap<String, bool> = BTreeMap::new();
    let mut rule_toks = Vec::new();
    for t in toks {
        match t.tok {
            Tok::Directive(endo, rels) => {
                for rel in rels {
                    if let Some(prev) = directives.insert(rel.clone(), endo) {
                        if prev != endo {
                            return Err(Error::ConflictingAnnotation(rel));
                        }
                    }
                }
            }
            _ => rule_toks.push(t),
        }
    }
    let mut p = Parser {
        toks: rule_toks,
        pos: 0,
        eof,
    };

    let name = match p.next() {
        Some(Tok::Ident(n)) => n,
        None => return p.err("expected a query rule"),
        _ => {
            p.pos -= 1;
            return p.err("expected the query name");
        }
    };
    let mut head = Vec::new();
    if p.peek() == Some(&Tok::LParen) {
        p.pos += 1;
        if p.peek() != Some(&Tok::RParen) {
            loop {
                match p.peek().cloned() {
                    Some(Tok::Ident(v)) => {
                        p.pos += 1;
                        if head.contains(&v) {
                            return Err(Error::DuplicateHeadVariable(v));
                        }
                        head.push(v);
                    }
                    _ => return p.err("expected a head variable"),
                }
                match p.peek() {
                    Some(Tok::Comma) => p.pos += 1,
                    _ => break,
                }
            }
        }
        p.expect(Tok::RParen, "`)` after head variables")?;
    }
    p.expect(Tok::Turnstile, "`:-`")?;

    let mut items = Vec::new();
    loop {
        let at = p.here();
        let is_atom = matches!(p.peek(), Some(Tok::Ident(_)))
            && matches!(
                p.toks.get(p.pos + 1).map(|s| &s.tok),
                Some(Tok::LParen) | Some(Tok::Caret)
            );
        if is_atom {
            let Some(Tok::Ident(rel)) = p.next() else {
                unreachable!()
            };
            let mut annotation = Annotation::Unspecified;
            if p.peek() == Some(&Tok::Caret) {
                p.pos += 1;
                annotation = match p.peek() {
                    Some(Tok::Ident(s)) if s == "n" => Annotation::Endogenous,
                    Some(Tok::Ident(s)) if s == "x" => Annotation::Exogenous,
                    _ => return p.err("expected `n` or `x` after `^`"),
                };
                p.pos += 1;
            }
            p.expect(Tok::LParen, "`(`")?;
            if p.peek() == Some(&Tok::RParen) {
                return p.err("an atom needs at least one term");
            }
            let mut terms = vec![p.term()?];
            while p.peek() == Some(&Tok::Comma) {
                p.pos += 1;
                terms.push(p.term()?);
            }
            p.expect(Tok::RParen, "`,` or `)`")?;
            items.push(Item::Atom(Atom {
                relation: rel,
                terms,
                annotation,
            }));
        } else {
            let lhs = p.term()?;
            p.expect(Tok::Eq, "`=` or an atom")?;
            let rhs = p.term()?;
            items.push(Item::Equality(lhs, rhs, at));
        }
        match p.next() {
            Some(Tok::Comma) => continue,
            Some(Tok::Dot) => break,
            _ => {
                p.pos -= 1;
                return p.err("expected `,` or `.`");
            }
        }
    }
    if p.pos < p.toks.len() {
        return p.err("unexpected input after the end of the query");
    }

    build_query(name, head, items, directives)
}

/// Parses and validates against `schema`.
pub fn parse_query_with_schema(text: &str, schema: &Schema) -> Result<Query> {
    let q = parse_query(text)?;
    q.validate(schema)?;
    Ok(q)
}

fn build_query(name: String, head: Vec<String>, items: Vec<Item>, directives: BTreeMap<String, bool>) -> Result<Query> {
    let mut atoms = Vec::new();
    let mut equalities = Vec::new();
    for item in items {
        match item {
            Item::Atom(a) => atoms.push(a),
            Item::Equality(l, r, at) => equalities.push((l, r, at)),
        }
    }
    if atoms.is_empty() {
        return Err(Error::syntax(1, 1, "the query body needs at least one atom"));
    }

    let subst = resolve_equalities(&head, &equalities)?;
    for atom in &mut atoms {
        for t in &mut atom.terms {
            if let Term::Var(v) = t {
                if let Some(rep) = subst.get(v.as_str()) {
                    *t = rep.clone();
                }
            }
        }
    }

    let mut arity: BTreeMap<&str, usize> = BTreeMap::new();
    let mut marker: BTreeMap<&str, Annotation> = BTreeMap::new();
    for atom in &atoms {
        let k = *arity.entry(&atom.relation).or_insert(atom.terms.len());
        if k != atom.terms.len() {
            return Err(Error::ArityMismatch {
                relation: atom.relation.clone(),
                expected: k,
                found: atom.terms.len(),
            });
        }
        if atom.annotation != Annotation::Unspecified {
            let m = *marker.entry(&atom.relation).or_insert(atom.annotation);
            if m != atom.annotation {
                return Err(Error::ConflictingAnnotation(atom.relation.clone()));
            }
        }
    }

    let body_vars: BTreeSet<&str> = atoms.iter().flat_map(|a| a.vars()).collect();
    for h in &head {
        if !body_vars.contains(h.as_str()) {
            return Err(Error::UnboundHeadVariable(h.clone()));
        }
    }

    Ok(Query {
        name,
        head,
        atoms,
        directives,
    })
}

/// Computes a substitution for the body variables from `a = b` items.
fn resolve_equalities(head: &[String], equalities: &[(Term, Term, (usize, usize))]) -> Result<BTreeMap<String, Term>> {
    // union-find over variable names; a class may carry one constant
    let mut parent: BTreeMap<String, String> = BTreeMap::new();
    let mut bound: BTreeMap<String, Const> = BTreeMap::new();

    fn find(parent: &mut BTreeMap<String, String>, v: &str) -> String {
        let p = parent.entry(v.to_string()).or_insert_with(|| v.to_string()).clone();
        if p == v {
            return p;
        }
        let root = find(parent, &p);
        parent.insert(v.to_string(), root.clone());
        root
    }

    for (l, r, (line, col)) in equalities {
        match (l, r) {
            (Term::Const(a), Term::Const(b)) => {
                if a != b {
                    return Err(Error::syntax(
                        *line,
                        *col,
                        format!("equality between distinct constants {a:?} and {b:?}"),
                    ));
                }
            }
            (Term::Var(v), Term::Const(c)) | (Term::Const(c), Term::Var(v)) => {
                let root = find(&mut parent, v);
                if let Some(prev) = bound.get(&root) {
                    if prev != c {
                        return Err(Error::syntax(
                            *line,
                            *col,
                            format!("`{v}` is equated with two different constants"),
                        ));
                    }
                }
                bound.insert(root, c.clone());
            }
            (Term::Var(a), Term::Var(b)) => {
                let ra = find(&mut parent, a);
                let rb = find(&mut parent, b);
                if ra == rb {
                    continue;
                }
                // prefer a head variable as the representative
                let (keep, drop) = if head.contains(&rb) && !head.contains(&ra) {
                    (rb, ra)
                } else {
                    (ra, rb)
                };
                if head.contains(&keep) && head.contains(&drop) {
                    return Err(Error::syntax(
                        *line,
                        *col,
                        format!("head variables `{keep}` and `{drop}` cannot be equated"),
                    ));
                }
                if let Some(c) = bound.remove(&drop) {
                    if let Some(prev) = bound.get(&keep) {
                        if *prev != c {
                            return Err(Error::syntax(
                                *line,
                                *col,
                                "variables bound to different constants are equated",
                            ));
                        }
                    }
                    bound.insert(keep.clone(), c);
                }
                parent.insert(drop, keep);
            }
        }
    }

    let names: Vec<String> = parent.keys().cloned().collect();
    let mut out = BTreeMap::new();
    for v in names {
        let root = find(&mut parent, &v);
        let rep = match bound.get(&root) {
            Some(c) => {
                if head.contains(&root) || head.contains(&v) {
                    return Err(Error::syntax(
                        1,
                        1,
                        format!("head variable `{v}` cannot be equated with a constant"),
                    ));
                }
                Term::Const(c.clone())
            }
            None => Term::Var(root.clone()),
        };
        if rep != Term::Var(v.clone()) {
            out.insert(v, rep);
        }
    }
    Ok(out)
}
