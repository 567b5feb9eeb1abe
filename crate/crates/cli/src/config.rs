//! Run configuration merged from argv and a key=value config file.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

pub const CONFIG_ENV: &str = "SENTIGRAPH_CONFIG";

/// Settings resolved for one invocation. Values given on the command line
/// override those read from the config file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunConfig {
    pub command: String,
    pub source: Option<PathBuf>,
    values: BTreeMap<String, String>,
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Parse `key=value` lines; blank lines and lines starting with `#` are
/// skipped.
pub fn parse_config(text: &str, path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut values = BTreeMap::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "{}:{}: expected key=value, found '{}'",
                path.display(),
                number + 1,
                line
            ))
        })?;
        let key = normalize_key(key);
        if key.is_empty() {
            return Err(CliError::Usage(format!("{}:{}: empty key", path.display(), number + 1)));
        }
        values.insert(key, value.trim().to_owned());
    }
    Ok(values)
}

impl RunConfig {
    /// Merge the config file (explicit path, else the environment variable)
    /// with command-line values.
    pub fn resolve(
        command: &str,
        explicit: Option<&Path>,
        env_path: Option<PathBuf>,
        argv: BTreeMap<String, String>,
    ) -> Result<Self, CliError> {
        let source = explicit.map(Path::to_path_buf).or(env_path);
        let mut values = match &source {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read config file {}: {}", path.display(), e)))?;
                parse_config(&text, path)?
            }
            None => BTreeMap::new(),
        };
        values.extend(argv.into_iter().map(|(k, v)| (normalize_key(&k), v)));
        Ok(RunConfig {
            command: command.to_owned(),
            source,
            values,
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn set_default(&mut self, key: &str, value: impl Into<String>) {
        self.values.entry(key.to_owned()).or_insert_with(|| value.into());
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Usage(format!("invalid value '{}' for {}", v, key)))
            })
            .transpose()
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(other) => Err(CliError::Usage(format!("invalid boolean '{}' for {}", other, key))),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    /// Entries whose keys are not in `known`.
    pub fn extra<'a>(&'a self, known: &'a [&str]) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.values
            .iter()
            .filter(move |(k, _)| !known.contains(&k.as_str()))
            .map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "command={}", self.command)?;
        if let Some(source) = &self.source {
            write!(f, " config_file={}", source.display())?;
        }
        for (key, value) in &self.values {
            write!(f, " {}={}", key, value)?;
        }
        Ok(())
    }
}
