//! `--config FILE` support.
//!
//! The file holds one `key=value` per line (`#` starts a comment). Each entry
//! becomes `--key value` inserted right after the subcommand, so flags given
//! on the command line come later and win, and unknown keys are rejected by
//! the argument parser like any unknown flag.

use std::ffi::OsString;
use std::fs;

use crate::error::{CliError, CliResult};

pub fn expand_config_args(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        match arg.to_str() {
            Some("--config") => {
                let value = iter
                    .next()
                    .ok_or_else(|| CliError::Usage("--config needs a file path".into()))?;
                path = Some(value);
            }
            Some(s) if s.starts_with("--config=") => path = Some(OsString::from(&s["--config=".len()..])),
            _ => rest.push(arg),
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let tokens = parse_config(&text)?;
    // program name, then the subcommand, then the file entries
    let split = rest.len().min(2);
    let mut out: Vec<OsString> = rest[..split].to_vec();
    out.extend(tokens.into_iter().map(OsString::from));
    out.extend(rest[split..].iter().cloned());
    Ok(out)
}

fn parse_config(text: &str) -> CliResult<Vec<String>> {
    let mut tokens = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", n + 1)))?;
        let key = key.trim();
        if key.is_empty() || key == "config" {
            return Err(CliError::Usage(format!("config line {}: invalid key {key:?}", n + 1)));
        }
        tokens.push(format!("--{key}"));
        tokens.push(value.trim().to_string());
    }
    Ok(tokens)
}
