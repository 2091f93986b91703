//! Line-delimited `key=value` records.
//!
//! A record is one line of space-separated fields. Values that are empty or
//! contain whitespace, quotes, `=` or backslashes are double-quoted with
//! backslash escapes, so every record survives a write/parse round trip.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KvError {
    #[error("column {0}: expected `key=value`")]
    MissingEquals(usize),
    #[error("column {0}: empty key")]
    EmptyKey(usize),
    #[error("column {0}: unterminated quoted value")]
    Unterminated(usize),
    #[error("column {0}: bad escape")]
    BadEscape(usize),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("field `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
}

/// An ordered list of fields.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Record {
    pub fields: Vec<(String, String)>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, KvError> {
        self.get(key).ok_or_else(|| KvError::MissingField(key.to_string()))
    }

    pub fn parse_field<T: std::str::FromStr>(&self, key: &str) -> Result<T, KvError> {
        let v = self.require(key)?;
        v.parse().map_err(|_| KvError::BadValue { key: key.to_string(), value: v.to_string() })
    }

    /// Renders the record without a trailing newline.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (i, (k, v)) in self.fields.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{}={}", k, quote(v));
        }
        s
    }

    pub fn parse(line: &str) -> Result<Record, KvError> {
        let chars: Vec<char> = line.trim_end_matches(['\n', '\r']).chars().collect();
        let mut fields = Vec::new();
        let mut i = 0;
        loop {
            while i < chars.len() && chars[i].is_whitespace() {
                i += 1;
            }
            if i == chars.len() {
                return Ok(Record { fields });
            }
            let start = i;
            while i < chars.len() && chars[i] != '=' && !chars[i].is_whitespace() {
                i += 1;
            }
            if i == chars.len() || chars[i] != '=' {
                return Err(KvError::MissingEquals(start + 1));
            }
            if i == start {
                return Err(KvError::EmptyKey(start + 1));
            }
            let key: String = chars[start..i].iter().collect();
            i += 1;
            let mut value = String::new();
            if i < chars.len() && chars[i] == '"' {
                let open = i;
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(KvError::Unterminated(open + 1)),
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some('n') => value.push('\n'),
                                Some('t') => value.push('\t'),
                                Some(c @ ('"' | '\\')) => value.push(*c),
                                _ => return Err(KvError::BadEscape(i + 1)),
                            }
                            i += 2;
                        }
                        Some(c) => {
                            value.push(*c);
                            i += 1;
                        }
                    }
                }
            } else {
                while i < chars.len() && !chars[i].is_whitespace() {
                    value.push(chars[i]);
                    i += 1;
                }
            }
            fields.push((key, value));
        }
    }
}

fn quote(v: &str) -> String {
    let plain = !v.is_empty() && !v.chars().any(|c| c.is_whitespace() || matches!(c, '"' | '\\' | '='));
    if plain {
        return v.to_string();
    }
    let mut s = String::with_capacity(v.len() + 2);
    s.push('"');
    for c in v.chars() {
        match c {
            '"' => s.push_str("\\\""),
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            '\t' => s.push_str("\\t"),
            c => s.push(c),
        }
    }
    s.push('"');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_awkward_values() {
        let mut r = Record::new();
        r.push("a", "plain").push("b", "").push("c", "x := y + 1").push("d", "q\"uote\\d=\n");
        let line = r.render();
        assert!(!line.contains('\n'));
        assert_eq!(Record::parse(&line).unwrap(), r);
    }

    #[test]
    fn malformed_lines() {
        assert_eq!(Record::parse("abc"), Err(KvError::MissingEquals(1)));
        assert_eq!(Record::parse("=1"), Err(KvError::EmptyKey(1)));
        assert_eq!(Record::parse("a=\"open"), Err(KvError::Unterminated(3)));
        assert!(Record::parse("").unwrap().fields.is_empty());
    }
}
