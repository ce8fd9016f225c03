//! Scenario files: TOML parsing, key-path overrides and emission.

use std::fmt;
use std::path::Path;

use nracc_core::scenario::{ScenarioConfig, ValidationError};
use toml::{Table, Value};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("key `{path}`: {message}")]
    Structure { path: String, message: String },
    #[error("{}", Invalid(.0))]
    Invalid(Vec<ValidationError>),
    #[error("override `{key}`: {message}")]
    Override { key: String, message: String },
    #[error("cannot emit scenario: {0}")]
    Emit(#[from] toml::ser::Error),
}

struct Invalid<'a>(&'a [ValidationError]);

impl fmt::Display for Invalid<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} validation error(s)", self.0.len())?;
        for e in self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

/// Parses scenario text into a raw TOML table.
pub fn parse_table(text: &str) -> Result<Table, ConfigError> {
    text.parse::<Table>().map_err(|e| ConfigError::Syntax(e.to_string()))
}

/// Converts a raw table into a validated, fully defaulted scenario.
pub fn from_table(table: Table) -> Result<ScenarioConfig, ConfigError> {
    let config: ScenarioConfig = serde_path_to_error::deserialize(Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Structure { path, message: e.into_inner().to_string() }
    })?;
    config.validate().map_err(ConfigError::Invalid)?;
    Ok(config)
}

pub fn parse_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
    from_table(parse_table(text)?)
}

pub fn read_table(path: &Path) -> Result<Table, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_table(&text)
}

/// Renders a scenario as TOML with every default spelled out.
pub fn emit(config: &ScenarioConfig) -> Result<String, ConfigError> {
    Ok(toml::to_string(config)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Key(String),
    Index(usize),
}

fn parse_key_path(key: &str) -> Option<Vec<Segment>> {
    let mut out = Vec::new();
    for part in key.split('.') {
        let (name, mut rest) = match part.find('[') {
            Some(i) => part.split_at(i),
            None => (part, ""),
        };
        if name.is_empty() {
            return None;
        }
        out.push(Segment::Key(name.to_string()));
        while !rest.is_empty() {
            let close = rest.find(']')?;
            out.push(Segment::Index(rest.get(1..close)?.parse().ok()?));
            rest = &rest[close + 1..];
            if !rest.is_empty() && !rest.starts_with('[') {
                return None;
            }
        }
    }
    (!out.is_empty()).then_some(out)
}

/// Sets `key` (e.g. `cells[0].uac.entries[0].barring_factor`) to `value`.
/// Missing table keys are created; array indices must exist.
pub fn set_key(table: &mut Table, key: &str, value: Value) -> Result<(), ConfigError> {
    let err = |message: String| ConfigError::Override { key: key.to_string(), message };
    let path = parse_key_path(key).ok_or_else(|| err("malformed key path".into()))?;
    let mut root = Value::Table(std::mem::take(table));
    let result = set_in(&mut root, &path, value);
    let Value::Table(t) = root else { unreachable!("root stays a table") };
    *table = t;
    result.map_err(err)
}

fn set_in(cur: &mut Value, path: &[Segment], value: Value) -> Result<(), String> {
    let (seg, rest) = path.split_first().expect("non-empty path");
    let slot = match (seg, cur) {
        (Segment::Key(k), Value::Table(t)) => {
            if rest.is_empty() {
                t.insert(k.clone(), value);
                return Ok(());
            }
            if !t.contains_key(k) {
                if matches!(rest[0], Segment::Index(_)) {
                    return Err(format!("`{k}` is not present"));
                }
                t.insert(k.clone(), Value::Table(Table::new()));
            }
            t.get_mut(k).expect("present")
        }
        (Segment::Index(n), Value::Array(a)) => {
            let len = a.len();
            let v = a.get_mut(*n).ok_or_else(|| format!("index {n} out of range (length {len})"))?;
            if rest.is_empty() {
                *v = value;
                return Ok(());
            }
            v
        }
        (Segment::Key(k), _) => return Err(format!("cannot descend into `{k}`: parent is not a table")),
        (Segment::Index(n), _) => return Err(format!("cannot index [{n}]: value is not an array")),
    };
    set_in(slot, rest, value)
}

/// Parses one override literal: any TOML value, or a bare string.
pub fn parse_literal(text: &str) -> Value {
    let doc = format!("v = {text}");
    match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(text.to_string())),
        Err(_) => Value::String(text.to_string()),
    }
}

/// `--sweep key=v1,v2,...`
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<(String, Value)>,
}

impl std::str::FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, values) = s.split_once('=').ok_or_else(|| format!("expected key=v1,v2,... in `{s}`"))?;
        let key = key.trim();
        if parse_key_path(key).is_none() {
            return Err(format!("malformed key path `{key}`"));
        }
        let values: Vec<(String, Value)> = split_values(values)
            .into_iter()
            .map(|v| (v.clone(), parse_literal(&v)))
            .collect();
        if values.is_empty() {
            return Err(format!("no values in `{s}`"));
        }
        Ok(Sweep { key: key.to_string(), values })
    }
}

/// Splits on commas that are not inside brackets or quotes.
fn split_values(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut quoted = false;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '"' => quoted = !quoted,
            '[' | '{' if !quoted => depth += 1,
            ']' | '}' if !quoted => depth -= 1,
            ',' if depth == 0 && !quoted => {
                out.push(std::mem::take(&mut cur).trim().to_string());
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}
