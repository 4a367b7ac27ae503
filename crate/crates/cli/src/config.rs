//! Run settings: command-line flags layered over an optional `key=value` file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use channel_control::{Error, Result};

/// Parses a real number, also accepting fractions such as `1/20`.
pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            a / b
        }
        None => s.parse().map_err(|_| format!("not a number: {s:?}"))?,
    };
    if !v.is_finite() {
        return Err(format!("not a finite number: {s:?}"));
    }
    Ok(v)
}

pub type Parser<T> = fn(&str) -> std::result::Result<T, String>;

/// [`FromStr`] with the error rendered as text.
pub fn parse_from_str<T: FromStr>(s: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse().map_err(|e: T::Err| e.to_string())
}

/// Contents of a `key=value` settings file. Blank lines and lines
/// starting with `#` are ignored; keys are the long flag names.
#[derive(Clone, Debug, Default)]
pub struct FileSettings {
    entries: BTreeMap<String, String>,
}

impl FileSettings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("settings line {}: expected key=value", n + 1)))?;
            let key = k.trim().trim_start_matches("--").replace('_', "-");
            entries.insert(key, v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::parse(&std::fs::read_to_string(p)?),
            None => Ok(Self::default()),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Flag value if given, else the file value read with `parse`, else `default`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str, default: T, parse: Parser<T>) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.raw(key) {
            Some(s) => parse(s).map_err(|e| Error::Config(format!("{key}: {e}"))),
            None => Ok(default),
        }
    }

    /// Comma-separated list: flag values if any, else the file, else `default`.
    pub fn pick_list<T>(&self, flag: Vec<T>, key: &str, default: Vec<T>, parse: Parser<T>) -> Result<Vec<T>> {
        if !flag.is_empty() {
            return Ok(flag);
        }
        match self.raw(key) {
            Some(s) => s
                .split(',')
                .map(|x| parse(x.trim()).map_err(|e| Error::Config(format!("{key}: {e}"))))
                .collect(),
            None => Ok(default),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_parse() {
        assert_eq!(parse_real("1/20").unwrap(), 0.05);
        assert_eq!(parse_real(" 1e-3 ").unwrap(), 1e-3);
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("abc").is_err());
    }

    #[test]
    fn flags_override_file() {
        let f = FileSettings::parse("# comment\nlevel = 4\nbeta=1e-2\n").unwrap();
        assert_eq!(f.pick(None, "level", 3usize, parse_from_str).unwrap(), 4);
        assert_eq!(f.pick(Some(2usize), "level", 3, parse_from_str).unwrap(), 2);
        assert_eq!(f.pick(None, "alpha", 1e-3, parse_real).unwrap(), 1e-3);
        assert_eq!(f.pick(None, "beta", 1.0, parse_real).unwrap(), 1e-2);
        assert!(f.pick::<usize>(None, "beta", 1, parse_from_str).is_err());
    }

    #[test]
    fn lists_and_bad_lines() {
        let f = FileSettings::parse("level=2, 3\nnu=1/5,1/10").unwrap();
        let v: Vec<usize> = f.pick_list(vec![], "level", vec![], parse_from_str).unwrap();
        assert_eq!(v, vec![2, 3]);
        assert_eq!(f.pick_list(vec![], "nu", vec![], parse_real).unwrap(), vec![0.2, 0.1]);
        assert!(FileSettings::parse("level 3").is_err());
    }
}
