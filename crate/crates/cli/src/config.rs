//! Flat `key = value` configuration files. Keys mirror long flag names with
//! `_` or `-`; command-line flags take precedence over file values.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`, got `{raw}`", i + 1))?;
            let key = key.trim().replace('-', "_");
            if key.is_empty() {
                bail!("line {}: empty key", i + 1);
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                bail!("line {}: duplicate key `{key}`", i + 1);
            }
        }
        Ok(Self { values })
    }

    /// Fails on keys not in `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        let unknown: Vec<&str> = self
            .values
            .keys()
            .map(String::as_str)
            .filter(|k| !allowed.contains(k))
            .collect();
        if !unknown.is_empty() {
            bail!(
                "unknown config key(s): {}; accepted: {}",
                unknown.join(", "),
                allowed.join(", ")
            );
        }
        Ok(())
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key `{key}`: cannot parse `{v}`: {e}")))
            .transpose()
    }

    /// Comma-separated list value.
    pub fn get_list<T>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.values
            .get(key)
            .map(|v| parse_list(v).with_context(|| format!("config key `{key}`")))
            .transpose()
    }

    /// `flag`, else the file value, else `default`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    pub fn pick_opt<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn pick_list<T>(&self, flag: Option<Vec<T>>, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get_list(key),
        }
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.get::<bool>(key)?.unwrap_or(false))
    }
}

pub fn parse_list<T>(text: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| anyhow!("cannot parse `{s}`: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_dashes() {
        let c = ConfigFile::parse("# run\nbatch-size = 16\nlr=0.01 # fast\n\nmodels = dlinear, fpn-fusion\n").unwrap();
        assert_eq!(c.get::<usize>("batch_size").unwrap(), Some(16));
        assert_eq!(c.get::<f64>("lr").unwrap(), Some(0.01));
        assert_eq!(
            c.get_list::<String>("models").unwrap(),
            Some(vec!["dlinear".to_string(), "fpn-fusion".to_string()])
        );
    }

    #[test]
    fn flags_override_file_values() {
        let c = ConfigFile::parse("seed = 3").unwrap();
        assert_eq!(c.pick(Some(9u64), "seed", 0).unwrap(), 9);
        assert_eq!(c.pick(None, "seed", 0u64).unwrap(), 3);
        assert_eq!(c.pick(None, "epochs", 30usize).unwrap(), 30);
    }

    #[test]
    fn rejects_malformed_lines_duplicates_and_unknown_keys() {
        assert!(ConfigFile::parse("seed 3").is_err());
        assert!(ConfigFile::parse("seed=1\nseed=2").is_err());
        let c = ConfigFile::parse("sed = 1").unwrap();
        let msg = c.check_keys(&["seed"]).unwrap_err().to_string();
        assert!(msg.contains("sed"));
        assert!(c.get::<u64>("sed").is_ok());
        assert!(ConfigFile::parse("seed = x").unwrap().get::<u64>("seed").is_err());
    }
}
