//! Whitespace-separated `key=value` records, the text form used for kernel
//! and filter specs in model files and on the command line.

use crate::error::{Error, Result};

pub(crate) struct Record {
    pairs: Vec<(String, String)>,
}

impl Record {
    pub(crate) fn parse(s: &str) -> Result<Self> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for tok in s.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::param(format!("expected key=value, found `{tok}`")))?;
            if k.is_empty() || v.is_empty() {
                return Err(Error::param(format!("malformed pair `{tok}`")));
            }
            if pairs.iter().any(|(seen, _)| seen == k) {
                return Err(Error::param(format!("duplicate key `{k}`")));
            }
            pairs.push((k.to_string(), v.to_string()));
        }
        Ok(Record { pairs })
    }

    pub(crate) fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub(crate) fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::param(format!("missing `{key}=`")))
    }

    pub(crate) fn require_f64(&self, key: &str) -> Result<f64> {
        parse_f64(self.require(key)?, key)
    }

    /// Fails if any key outside `allowed` is present.
    pub(crate) fn only(&self, allowed: &[&str]) -> Result<()> {
        for (k, _) in &self.pairs {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::param(format!("unexpected key `{k}`")));
            }
        }
        Ok(())
    }
}

pub(crate) fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::param(format!("`{what}`: `{s}` is not a number")))
}
