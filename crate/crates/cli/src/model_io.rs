use anchortalk::model::ModelSpec;
use anyhow::{Context, Result};
use serde_json::Value;
use std::path::Path;

/// Bad input from the command line: exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Parses `key.path=value`. Values are read as JSON when they parse,
/// otherwise as strings.
fn parse_override(s: &str) -> Result<(Vec<String>, Value)> {
    let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("override `{s}` is not key=value")))?;
    let path: Vec<String> = k.split('.').map(str::to_string).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(usage(format!("override `{s}` has an empty key segment")));
    }
    let val = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((path, val))
}

/// Replaces an existing leaf; unknown keys are rejected rather than added.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<()> {
    let (path, val) = parse_override(spec)?;
    let mut cur = doc;
    for (i, key) in path.iter().enumerate() {
        let next = match cur {
            Value::Object(map) => map.get_mut(key),
            Value::Array(items) => key.parse::<usize>().ok().and_then(|j| items.get_mut(j)),
            _ => None,
        };
        cur = next.ok_or_else(|| usage(format!("override `{spec}`: unknown key `{}`", path[..=i].join("."))))?;
    }
    *cur = val;
    Ok(())
}

/// Model file with `--set` overrides applied on top; flags win over the file.
pub fn load_model(path: &Path, overrides: &[String]) -> Result<(ModelSpec, Value)> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut doc: Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: not valid JSON: {e}", path.display())))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let m = ModelSpec::from_json_str(&doc.to_string()).with_context(|| format!("model {}", path.display()))?;
    let canonical = m.to_json_value()?;
    Ok((m, canonical))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn override_replaces_known_leaf_only() {
        let mut doc = json!({"cost": {"c": 1.0}, "list": [1, 2]});
        apply_override(&mut doc, "cost.c=0.5").unwrap();
        apply_override(&mut doc, "list.1=7").unwrap();
        assert_eq!(doc, json!({"cost": {"c": 0.5}, "list": [1, 7]}));
        assert!(apply_override(&mut doc, "cost.k=2").is_err());
        assert!(apply_override(&mut doc, "cost").is_err());
    }
}
