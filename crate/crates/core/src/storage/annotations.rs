//! Sidecar annotation files that flag tuples endogenous or exogenous.
//!
//! ```text
//! % later lines win
//! exo Movie *
//! endo Movie where year>2008
//! exo R where X='a4' and Y=a3
//! endo S rows 1,3
//! ```
//!
//! `rows` numbers are 1-based data rows of the relation's CSV file.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::qmodel::Schema;
use crate::value::Const;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub column: String,
    pub op: CmpOp,
    pub value: Const,
}

impl Predicate {
    /// Integers compare numerically, everything else by text.
    fn matches(&self, v: &Const) -> bool {
        let ord = match (v, &self.value) {
            (Const::Int(a), Const::Int(b)) => a.cmp(b),
            _ => v.text().cmp(&self.value.text()),
        };
        self.op.holds(ord)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    All,
    Rows(BTreeSet<usize>),
    Where(Vec<Predicate>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRule {
    pub endo: bool,
    pub relation: String,
    pub selector: Selector,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationSpec {
    pub rules: Vec<AnnotationRule>,
}

impl AnnotationSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = strip_comment(raw).trim();
            if content.is_empty() {
                continue;
            }
            rules.push(parse_rule(content, line)?);
        }
        Ok(AnnotationSpec { rules })
    }

    /// Rejects rules naming unknown relations or columns.
    pub fn check(&self, schema: &Schema) -> Result<()> {
        for rule in &self.rules {
            let rel = schema.get(&rule.relation).ok_or_else(|| Error::Annotation {
                line: rule.line,
                message: format!("unknown relation `{}`", rule.relation),
            })?;
            if let Selector::Where(preds) = &rule.selector {
                for p in preds {
                    if !rel.columns.contains(&p.column) {
                        return Err(Error::Annotation {
                            line: rule.line,
                            message: format!("relation `{}` has no column `{}`", rule.relation, p.column),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Flag for the `row`-th (1-based) data row of `relation`, if any rule
    /// matches; the last matching rule wins.
    pub fn flag_for(&self, schema: &Schema, relation: &str, row: usize, values: &[Const]) -> Option<bool> {
        let columns = schema.get(relation).map(|r| r.columns.as_slice())?;
        let mut flag = None;
        for rule in self.rules.iter().filter(|r| r.relation == relation) {
            let hit = match &rule.selector {
                Selector::All => true,
                Selector::Rows(rows) => rows.contains(&row),
                Selector::Where(preds) => preds.iter().all(|p| {
                    columns
                        .iter()
                        .position(|c| *c == p.column)
                        .and_then(|i| values.get(i))
                        .is_some_and(|v| p.matches(v))
                }),
            };
            if hit {
                flag = Some(rule.endo);
            }
        }
        flag
    }
}

fn strip_comment(line: &str) -> &str {
    // `%` inside quotes is data, not a comment
    let mut quote = None;
    for (i, c) in line.char_indices() {
        match (quote, c) {
            (None, '%') => return &line[..i],
            (None, '\'' | '"') => quote = Some(c),
            (Some(q), c) if c == q => quote = None,
            _ => {}
        }
    }
    line
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Annotation {
        line,
        message: message.into(),
    }
}

fn parse_rule(content: &str, line: usize) -> Result<AnnotationRule> {
    let (kw, rest) = split_word(content);
    let endo = match kw {
        "endo" | "endogenous" => true,
        "exo" | "exogenous" => false,
        other => return Err(err(line, format!("expected `endo` or `exo`, found `{other}`"))),
    };
    let (relation, rest) = split_word(rest);
    if relation.is_empty() || !relation.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(err(line, "expected a relation name"));
    }
    let (sel, rest) = split_word(rest);
    let selector = match sel {
        "*" => {
            if !rest.trim().is_empty() {
                return Err(err(line, "unexpected text after `*`"));
            }
            Selector::All
        }
        "rows" => {
            let mut rows = BTreeSet::new();
            for part in rest.split(',') {
                let n: usize = part
                    .trim()
                    .parse()
                    .map_err(|_| err(line, format!("bad row number `{}`", part.trim())))?;
                if n == 0 {
                    return Err(err(line, "row numbers start at 1"));
                }
                rows.insert(n);
            }
            Selector::Rows(rows)
        }
        "where" => Selector::Where(parse_predicates(rest, line)?),
        "" => return Err(err(line, "expected `*`, `rows` or `where`")),
        other => return Err(err(line, format!("unexpected `{other}`"))),
    };
    Ok(AnnotationRule {
        endo,
        relation: relation.to_string(),
        selector,
        line,
    })
}

fn split_word(s: &str) -> (&str, &str) {
    let s = s.trim_start();
    match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], &s[i..]),
        None => (s, ""),
    }
}

fn parse_predicates(text: &str, line: usize) -> Result<Vec<Predicate>> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    let skip_ws = |i: &mut usize| {
        while *i < chars.len() && chars[*i].is_whitespace() {
            *i += 1;
        }
    };
    loop {
        skip_ws(&mut i);
        let start = i;
        while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
            i += 1;
        }
        if start == i {
            return Err(err(line, "expected a column name"));
        }
        let column: String = chars[start..i].iter().collect();
        skip_ws(&mut i);
        let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let op = match two.as_str() {
            "<=" => CmpOp::Le,
            ">=" => CmpOp::Ge,
            "!=" | "<>" => CmpOp::Ne,
            _ => match chars.get(i) {
                Some('=') => CmpOp::Eq,
                Some('<') => CmpOp::Lt,
                Some('>') => CmpOp::Gt,
                _ => return Err(err(line, format!("expected a comparison after `{column}`"))),
            },
        };
        i += if matches!(op, CmpOp::Le | CmpOp::Ge | CmpOp::Ne) {
            2
        } else {
            1
        };
        skip_ws(&mut i);
        let value = match chars.get(i) {
            Some(&q) if q == '\'' || q == '"' => {
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(err(line, "unterminated quoted value")),
                        Some(&c) if c == q => {
                            if chars.get(i + 1) == Some(&q) {
                                s.push(q);
                                i += 2;
                            } else {
                                i += 1;
                                break;
                            }
                        }
                        Some(&c) => {
                            s.push(c);
                            i += 1;
                        }
                    }
                }
                s
            }
            Some(_) => {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() {
                    i += 1;
                }
                chars[start..i].iter().collect()
            }
            None => return Err(err(line, "expected a value")),
        };
        out.push(Predicate {
            column,
            op,
            value: Const::parse(&value),
        });
        skip_ws(&mut i);
        if i >= chars.len() {
            break;
        }
        let tail: String = chars[i..].iter().collect();
        let (word, _) = split_word(&tail);
        if word.eq_ignore_ascii_case("and") {
            i += 3;
        } else {
            return Err(err(line, format!("expected `and`, found `{word}`")));
        }
    }
    Ok(out)
}
