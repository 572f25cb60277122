//! Read access to a parsed JSON document that tracks the JSON pointer of
//! every value, so schema errors can name the offending location.

use num_rational::Rational64;
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Clone)]
pub struct Doc<'a> {
    file: &'a str,
    value: &'a Value,
    pointer: String,
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

impl<'a> Doc<'a> {
    pub fn root(file: &'a str, value: &'a Value) -> Self {
        Doc {
            file,
            value,
            pointer: String::new(),
        }
    }

    pub fn value(&self) -> &'a Value {
        self.value
    }

    pub fn pointer(&self) -> &str {
        if self.pointer.is_empty() {
            "/"
        } else {
            &self.pointer
        }
    }

    pub fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(CliError::Schema {
            file: self.file.to_string(),
            pointer: self.pointer().to_string(),
            message: message.into(),
        })
    }

    fn child(&self, value: &'a Value, step: &str) -> Doc<'a> {
        Doc {
            file: self.file,
            value,
            pointer: format!("{}/{}", self.pointer, escape(step)),
        }
    }

    /// The member `key` if present and not null.
    pub fn get(&self, key: &str) -> Result<Option<Doc<'a>>> {
        match self.value {
            Value::Object(map) => Ok(map
                .get(key)
                .filter(|v| !v.is_null())
                .map(|v| self.child(v, key))),
            _ => self.error("expected an object"),
        }
    }

    pub fn req(&self, key: &str) -> Result<Doc<'a>> {
        match self.get(key)? {
            Some(doc) => Ok(doc),
            None => self.error(format!("missing member {key:?}")),
        }
    }

    pub fn items(&self) -> Result<Vec<Doc<'a>>> {
        match self.value {
            Value::Array(items) => Ok(items
                .iter()
                .enumerate()
                .map(|(k, v)| self.child(v, &k.to_string()))
                .collect()),
            _ => self.error("expected an array"),
        }
    }

    pub fn str(&self) -> Result<&'a str> {
        self.value
            .as_str()
            .map_or_else(|| self.error("expected a string"), Ok)
    }

    pub fn usize(&self) -> Result<usize> {
        match self.value.as_u64() {
            Some(x) => Ok(x as usize),
            None => self.error("expected a non-negative integer"),
        }
    }

    pub fn strings(&self) -> Result<Vec<String>> {
        self.items()?
            .iter()
            .map(|a| a.str().map(String::from))
            .collect()
    }

    pub fn usizes(&self) -> Result<Vec<usize>> {
        self.items()?.iter().map(|a| a.usize()).collect()
    }

    /// An integer, or a string `"p"` or `"p/q"`.
    pub fn rational(&self) -> Result<Rational64> {
        if let Some(x) = self.value.as_i64() {
            return Ok(Rational64::from_integer(x));
        }
        if let Some(s) = self.value.as_str() {
            let parsed = match s.split_once('/') {
                Some((p, q)) => p
                    .trim()
                    .parse::<i64>()
                    .ok()
                    .zip(q.trim().parse::<i64>().ok()),
                None => s.trim().parse::<i64>().ok().map(|p| (p, 1)),
            };
            if let Some((p, q)) = parsed.filter(|&(_, q)| q != 0) {
                return Ok(Rational64::new(p, q));
            }
        }
        self.error("expected an integer or a rational string \"p/q\"")
    }

    /// Index of `label` in `alphabet`.
    pub fn lookup(&self, alphabet: &[String], what: &str) -> Result<usize> {
        let label = self.str()?;
        match alphabet.iter().position(|l| l == label) {
            Some(k) => Ok(k),
            None => self.error(format!("unknown {what} {label:?}")),
        }
    }
}

/// JSON encoding of a rational: an integer when possible.
pub fn rational_json(x: Rational64) -> Value {
    if x.is_integer() {
        Value::from(*x.numer())
    } else {
        Value::from(format!("{}/{}", x.numer(), x.denom()))
    }
}
