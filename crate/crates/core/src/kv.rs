//! Flat `key = value` text format shared by config files, manifests and
//! scenario bundles. `#` starts a comment; blank lines are ignored.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse(text: &str, origin: &Path) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::parse(origin, format!("line {}: expected `key = value`", i + 1)));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::parse(origin, format!("line {}: empty key", i + 1)));
        }
        out.push(Entry {
            line: i + 1,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

pub fn read(path: &Path) -> Result<Vec<Entry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, path)
}

pub fn value<T: std::str::FromStr>(entry: &Entry, origin: &Path) -> Result<T> {
    entry.value.parse().map_err(|_| {
        Error::parse(
            origin,
            format!("line {}: bad value `{}` for `{}`", entry.line, entry.value, entry.key),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let text = "# header\n\na = 1   # meters\n  b=two\n";
        let entries = parse(text, Path::new("x")).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].key, "a");
        assert_eq!(entries[0].value, "1");
        assert_eq!(entries[0].line, 3);
        assert_eq!(entries[1].value, "two");
    }

    #[test]
    fn rejects_missing_equals() {
        assert!(parse("oops\n", Path::new("x")).is_err());
        assert!(parse(" = 3\n", Path::new("x")).is_err());
    }
}
