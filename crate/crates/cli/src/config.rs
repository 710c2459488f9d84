//! `--config` support: JSON flag defaults spliced in ahead of the user's own
//! flags, so the command line wins under `args_override_self`.
//!
//! Top-level scalar keys apply to any subcommand that has a flag of that name;
//! a top-level object keyed by subcommand name applies only there and must
//! not contain unknown keys.

use clap::CommandFactory;
use serde_json::{Map, Value};

use crate::cli::Cli;

pub fn expand(args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("config {path}: {e}"))?;
    let root: Value =
        serde_json::from_str(&text).map_err(|e| format!("config {path}: {e}"))?;
    let Value::Object(root) = root else {
        return Err(format!("config {path}: expected a JSON object"));
    };

    let cmd = Cli::command();
    let Some((pos, sub)) = args
        .iter()
        .enumerate()
        .skip(1)
        .find_map(|(i, a)| cmd.find_subcommand(a).map(|s| (i, s)))
    else {
        return Ok(args);
    };
    let accepts = |key: &str| {
        sub.get_arguments()
            .any(|a| a.get_long() == Some(key) && !a.is_global_set())
    };

    let mut injected = Vec::new();
    let mut global = Vec::new();
    for (key, value) in &root {
        if value.is_object() {
            continue;
        }
        if key == "no-timestamp" {
            push_flag(&mut global, key, value)?;
        } else if accepts(key) {
            push_flag(&mut injected, key, value)?;
        }
    }
    if let Some(section) = root.get(sub.get_name()) {
        let section: &Map<String, Value> = section
            .as_object()
            .ok_or_else(|| format!("config {path}: '{}' must be an object", sub.get_name()))?;
        for (key, value) in section {
            if !accepts(key) {
                return Err(format!(
                    "config {path}: '{key}' is not a flag of '{}'",
                    sub.get_name()
                ));
            }
            push_flag(&mut injected, key, value)?;
        }
    }

    let mut out = Vec::with_capacity(args.len() + injected.len() + global.len());
    out.extend_from_slice(&args[..=pos]);
    out.extend(global);
    out.extend(injected);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn push_flag(out: &mut Vec<String>, key: &str, value: &Value) -> Result<(), String> {
    let flag = format!("--{key}");
    match value {
        Value::Bool(true) => out.push(flag),
        Value::Bool(false) | Value::Null => {}
        Value::Number(n) => out.extend([flag, n.to_string()]),
        Value::String(s) => out.extend([flag, s.clone()]),
        Value::Array(items) => {
            let joined: Vec<String> = items
                .iter()
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            out.extend([flag, joined.join(",")]);
        }
        Value::Object(_) => return Err(format!("config key '{key}' cannot be an object")),
    }
    Ok(())
}
