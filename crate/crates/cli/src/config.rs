//! `key = value` config files mirroring the command-line flags.
//!
//! The file is folded into the argument list: every key becomes `--key value`
//! (or a bare `--key` for `true`, nothing for `false`) unless the same flag was
//! already given on the command line.

use std::path::Path;

#[derive(Debug, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn parse(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("config line {}: expected key=value", i + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(ConfigError(format!("config line {}: empty key", i + 1)));
        }
        entries.push((key, value.trim().to_string()));
    }
    Ok(entries)
}

/// Removes `--config PATH` / `--config=PATH` from `args`, returning the path.
pub fn take_config_path(args: &mut Vec<String>) -> Result<Option<String>, ConfigError> {
    let Some(pos) = args
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="))
    else {
        return Ok(None);
    };
    let flag = args.remove(pos);
    if let Some(path) = flag.strip_prefix("--config=") {
        return Ok(Some(path.to_string()));
    }
    if pos < args.len() {
        Ok(Some(args.remove(pos)))
    } else {
        Err(ConfigError("--config needs a path".into()))
    }
}

fn given(args: &[String], key: &str) -> bool {
    let long = format!("--{key}");
    let eq = format!("--{key}=");
    args.iter().any(|a| *a == long || a.starts_with(&eq))
}

/// Appends config entries whose flag is absent from `args`.
pub fn merge(args: &mut Vec<String>, entries: &[(String, String)]) {
    for (key, value) in entries {
        if given(args, key) {
            continue;
        }
        match value.as_str() {
            "true" => args.push(format!("--{key}")),
            "false" => {}
            _ => {
                args.push(format!("--{key}"));
                args.push(value.clone());
            }
        }
    }
}

pub fn apply(args: &mut Vec<String>) -> Result<(), ConfigError> {
    if let Some(path) = take_config_path(args)? {
        let text = std::fs::read_to_string(Path::new(&path))
            .map_err(|e| ConfigError(format!("cannot read config {path}: {e}")))?;
        merge(args, &parse(&text)?);
    }
    Ok(())
}
