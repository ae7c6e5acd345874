//! Constants stored in relations and written in queries.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

/// An opaque constant. Integers written in canonical decimal form take a
/// fast path; everything else is kept as a string. Two constants are equal
/// iff their textual forms are equal.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Const {
    Int(i64),
    Str(Arc<str>),
}

impl Const {
    /// Builds a constant from its textual form.
    pub fn parse(text: &str) -> Const {
        match text.parse::<i64>() {
            Ok(n) if n.to_string() == text => Const::Int(n),
            _ => Const::Str(Arc::from(text)),
        }
    }

    pub fn text(&self) -> String {
        match self {
            Const::Int(n) => n.to_string(),
            Const::Str(s) => s.to_string(),
        }
    }

    /// Form used in tuple references such as `Movie(526338,'Sweeney Todd',2007)`:
    /// plain words print bare, anything else is single-quoted.
    pub fn display_ref(&self) -> String {
        match self {
            Const::Int(n) => n.to_string(),
            Const::Str(s) if is_plain_word(s) => s.to_string(),
            Const::Str(s) => quote(s),
        }
    }

    /// Form used inside query text, where bare words are variables.
    pub fn display_query(&self) -> String {
        match self {
            Const::Int(n) => n.to_string(),
            Const::Str(s) => quote(s),
        }
    }
}

fn is_plain_word(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') && s.parse::<i64>().is_err()
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

impl fmt::Display for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const::Int(n) => write!(f, "{n}"),
            Const::Str(s) => f.write_str(s),
        }
    }
}

impl fmt::Debug for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_query())
    }
}

impl From<&str> for Const {
    fn from(s: &str) -> Self {
        Const::parse(s)
    }
}

impl From<i64> for Const {
    fn from(n: i64) -> Self {
        Const::Int(n)
    }
}

impl Serialize for Const {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Const::Int(n) => serializer.serialize_i64(*n),
            Const::Str(s) => serializer.serialize_str(s),
        }
    }
}

/// Splits an answer literal such as `a4` or `'Sweeney Todd',2007` into
/// constants. Quotes are optional for plain values.
pub fn parse_answer(text: &str) -> Result<Vec<Const>, String> {
    let mut out = Vec::new();
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(out);
    }
    let chars: Vec<char> = trimmed.chars().collect();
    let mut i = 0;
    loop {
        while i < chars.len() && chars[i].is_whitespace() {
            i += 1;
        }
        if i >= chars.len() {
            return Err("expected a value after ','".into());
        }
        let value = if chars[i] == '\'' || chars[i] == '"' {
            let q = chars[i];
            i += 1;
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err("unterminated quoted value".into()),
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
        } else {
            let start = i;
            while i < chars.len() && chars[i] != ',' {
                if chars[i] == '\'' || chars[i] == '"' {
                    return Err(format!("unexpected quote at offset {i}"));
                }
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let s = s.trim().to_string();
            if s.is_empty() {
                return Err("empty value".into());
            }
            s
        };
        out.push(Const::parse(&value));
        while i < chars.len() && chars[i].is_whitespace() {
            i += 1;
        }
        match chars.get(i) {
            None => break,
            Some(',') => i += 1,
            Some(c) => return Err(format!("unexpected '{c}' after value")),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_take_the_fast_path_only_in_canonical_form() {
        assert_eq!(Const::parse("42"), Const::Int(42));
        assert_eq!(Const::parse("-7"), Const::Int(-7));
        assert!(matches!(Const::parse("007"), Const::Str(_)));
        assert!(matches!(Const::parse("+5"), Const::Str(_)));
        assert_ne!(Const::parse("007"), Const::parse("7"));
    }

    #[test]
    fn reference_form_quotes_only_when_needed() {
        assert_eq!(Const::parse("a4").display_ref(), "a4");
        assert_eq!(Const::parse("Sweeney Todd").display_ref(), "'Sweeney Todd'");
        assert_eq!(Const::parse("Let's go").display_ref(), "'Let''s go'");
        assert_eq!(Const::parse("2007").display_ref(), "2007");
        assert_eq!(Const::parse("a4").display_query(), "'a4'");
    }

    #[test]
    fn answer_literals() {
        assert_eq!(parse_answer("a4").unwrap(), vec![Const::parse("a4")]);
        assert_eq!(
            parse_answer("'Sweeney Todd', 2007").unwrap(),
            vec![Const::parse("Sweeney Todd"), Const::Int(2007)]
        );
        assert_eq!(parse_answer("").unwrap(), vec![]);
        assert_eq!(parse_answer("'it''s'").unwrap(), vec![Const::parse("it's")]);
        assert!(parse_answer("a,").is_err());
        assert!(parse_answer("'open").is_err());
        assert!(parse_answer("a'b").is_err());
    }
}
