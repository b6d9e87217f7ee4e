//! Plain-text configuration: `key = value` lines grouped under `[section]`
//! headers. `#` starts a comment. Keys before any header belong to `[run]`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{usage, CliResult};

/// Parsed file contents, section by section.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<ConfigFile> {
        let mut file = ConfigFile::default();
        let mut section = "run".to_string();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| usage(format!("config line {}: unterminated section header", i + 1)))?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected key = value", i + 1)))?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(usage(format!("config line {}: empty key", i + 1)));
            }
            let entries = file.sections.entry(section.clone()).or_default();
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(usage(format!("config line {}: duplicate key `{key}` in [{section}]", i + 1)));
            }
        }
        Ok(file)
    }

    pub fn section(&self, name: &str) -> Option<&BTreeMap<String, String>> {
        self.sections.get(name)
    }
}

/// One subcommand's resolved settings: defaults, overlaid by the config
/// file, overlaid by flags. Only keys from the subcommand's table exist.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    command: &'static str,
    values: BTreeMap<&'static str, String>,
}

impl Settings {
    pub fn new(command: &'static str, table: &[(&'static str, &'static str)]) -> Settings {
        Settings {
            command,
            values: table.iter().map(|&(k, v)| (k, v.to_string())).collect(),
        }
    }

    pub fn command(&self) -> &'static str {
        self.command
    }

    fn slot(&mut self, key: &str) -> CliResult<&mut String> {
        let command = self.command;
        self.values
            .iter_mut()
            .find(|(k, _)| **k == key)
            .map(|(_, v)| v)
            .ok_or_else(|| usage(format!("unknown key `{key}` for `{command}`")))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> CliResult<()> {
        *self.slot(key)? = value.into();
        Ok(())
    }

    /// Applies a config section; every key must be known.
    pub fn apply(&mut self, section: &BTreeMap<String, String>) -> CliResult<()> {
        for (k, v) in section {
            self.set(k, v.clone())?;
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .iter()
            .find(|(k, _)| **k == key)
            .map(|(_, v)| v.as_str())
            .unwrap_or_else(|| panic!("key `{key}` missing from the `{}` table", self.command))
    }

    pub fn is_set(&self, key: &str) -> bool {
        !self.raw(key).is_empty()
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key);
        if raw.is_empty() {
            return Err(usage(format!("`{key}` is required for `{}`", self.command)));
        }
        raw.parse::<T>()
            .map_err(|e| usage(format!("bad value `{raw}` for `{key}`: {e}")))
    }

    pub fn real(&self, key: &str) -> CliResult<f64> {
        self.get::<f64>(key)
    }

    /// Integers also accept exact real notation such as `1e6`.
    pub fn int(&self, key: &str) -> CliResult<u64> {
        parse_int(self.raw(key)).map_err(|e| usage(format!("`{key}`: {e}")))
    }

    pub fn int_list(&self, key: &str) -> CliResult<Vec<u64>> {
        let raw = self.raw(key);
        if raw.trim().is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| parse_int(s.trim()).map_err(|e| usage(format!("`{key}`: {e}"))))
            .collect()
    }

    /// Renders as a config section.
    pub fn render(&self, out: &mut String) {
        let _ = writeln!(out, "[{}]", self.command);
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v}");
        }
    }
}

pub fn parse_int(s: &str) -> Result<u64, String> {
    if s.is_empty() {
        return Err("missing integer".into());
    }
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not an integer"))?;
    if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(63) {
        Ok(x as u64)
    } else {
        Err(format!("`{s}` is not a nonnegative integer"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let f = ConfigFile::parse("seed = 4\n# note\n[sweep]\nd = 2 # dim\nn_grid=100,1000\n").unwrap();
        assert_eq!(f.section("run").unwrap()["seed"], "4");
        assert_eq!(f.section("sweep").unwrap()["n_grid"], "100,1000");
        assert!(ConfigFile::parse("[x\n").is_err());
        assert!(ConfigFile::parse("novalue\n").is_err());
        assert!(ConfigFile::parse("a=1\na=2\n").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut s = Settings::new("sweep", &[("d", "2")]);
        assert!(s.set("dd", "3").is_err());
        s.set("d", "3").unwrap();
        assert_eq!(s.int("d").unwrap(), 3);
    }

    #[test]
    fn integers() {
        assert_eq!(parse_int("1e6").unwrap(), 1_000_000);
        assert!(parse_int("1.5").is_err());
        assert!(parse_int("-2").is_err());
    }
}
