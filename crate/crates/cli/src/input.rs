//! Configuration loading with dotted-path overrides.

use anyhow::{bail, Context, Result};
use serde_json::Value;
use std::path::Path;

use doublephase::{load_config, preset, ScenarioConfig};

/// Reads a JSON document, applies `key.path=value` overrides, and resolves it.
/// Overriding any `layers.*` key first materializes a named preset into an
/// explicit layer array so individual layers can be edited.
pub fn load_with_overrides(path: &Path, overrides: &[String]) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let mut value: Value =
        serde_json::from_str(&text).with_context(|| format!("bad JSON in {}", path.display()))?;

    if !overrides.is_empty() {
        if overrides.iter().any(|o| o.starts_with("layers")) {
            materialize_preset(&mut value)?;
        }
        for spec in overrides {
            apply_override(&mut value, spec)
                .with_context(|| format!("cannot apply override `{spec}`"))?;
        }
    }

    let cfg = load_config(&value.to_string())?;
    Ok(cfg)
}

fn materialize_preset(value: &mut Value) -> Result<()> {
    let Some(obj) = value.as_object_mut() else {
        bail!("config root must be an object");
    };
    let Some(name) = obj.get("preset").and_then(|v| v.as_str()).map(String::from) else {
        return Ok(());
    };
    let stack = preset(&name).with_context(|| format!("unknown preset `{name}`"))?;
    obj.remove("preset");
    if !obj.contains_key("layers") {
        obj.insert("layers".into(), serde_json::to_value(&stack.layers)?);
    }
    if !obj.contains_key("delta") {
        obj.insert("delta".into(), stack.delta.into());
    }
    Ok(())
}

fn apply_override(value: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .context("override must look like key.path=value")?;
    let new: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = path.split('.').collect();
    let mut cur = value;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if let Ok(idx) = part.parse::<usize>() {
            let arr = cur
                .as_array_mut()
                .with_context(|| format!("`{}` is not an array", parts[..i].join(".")))?;
            let slot = arr
                .get_mut(idx)
                .with_context(|| format!("index {idx} out of bounds"))?;
            if last {
                *slot = new;
                return Ok(());
            }
            cur = slot;
        } else {
            let obj = cur
                .as_object_mut()
                .with_context(|| format!("`{}` is not an object", parts[..i].join(".")))?;
            if last {
                obj.insert(part.to_string(), new);
                return Ok(());
            }
            cur = obj
                .entry(part.to_string())
                .or_insert_with(|| Value::Object(Default::default()));
        }
    }
    Ok(())
}
