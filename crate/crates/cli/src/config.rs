//! Flat `key=value` config files, expanded into command-line flags.

use std::ffi::OsString;
use std::path::Path;

use qrfuse::{Error, Result};

const SUBCOMMANDS: [&str; 4] = ["fit", "cv", "simulate", "forecast"];

/// Turns each `key = value` line into `--key value`. `true` becomes a bare
/// flag and `false` drops it. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Row {
            row: i + 1,
            message: format!("expected key=value, found `{line}`"),
        })?;
        let key = format!("--{}", k.trim().replace('_', "-"));
        match v.trim() {
            "true" => out.push(key.into()),
            "false" => {}
            v => {
                out.push(key.into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<(usize, usize, OsString)> {
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return args.get(i + 1).map(|p| (i, 2, p.clone()));
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some((i, 1, p.into()));
        }
    }
    None
}

/// Splices the flags of a `--config FILE` into `args` right after the
/// subcommand, so later command-line flags override them.
pub fn expand(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some((at, width, path)) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| {
        Error::Config(format!(
            "cannot read config {}: {e}",
            path.to_string_lossy()
        ))
    })?;
    let extra = parse_config(&text).map_err(|e| Error::Config(e.to_string()))?;
    args.drain(at..at + width);
    let sub = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .ok_or_else(|| Error::Config("--config needs a subcommand".into()))?;
    args.splice(sub + 1..sub + 1, extra);
    Ok(args)
}
