//! Structured-output schema linting.
//!
//! Constrained generation engines walk the schema's declared property
//! order, while a finetuned model emits keys in whatever order its training
//! data used; a mismatch between the two collapses accuracy. All-optional
//! schemas route regex-based engines through a degenerate state machine,
//! and optional-heavy schemas force models to spell out null-valued keys
//! token by token. The linter flags all three shapes, and
//! [`apply_dummy_key_workaround`] rewrites an all-optional schema by adding
//! one required null-typed key that is stripped from outputs afterwards.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// Reserved property name added by the dummy-key workaround.
pub const DUMMY_KEY: &str = "__rasg_dummy";

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("malformed schema: {0}")]
    MalformedSchema(String),
    #[error("malformed sample {index}: {message}")]
    MalformedSample { index: usize, message: String },
    #[error("schema already contains reserved key {0:?}")]
    NameCollision(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LintCode {
    KeyOrderMismatch,
    AllKeysOptional,
    OptionalKeyBloat,
}

/// One linter finding, anchored to a schema location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaLintFinding {
    pub code: LintCode,
    pub path: String,
    pub message: String,
}

/// Linter knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LintOptions {
    /// `OPTIONAL_KEY_BLOAT` fires when optional keys outnumber required
    /// keys by more than this ratio. Default 3.0.
    pub optional_ratio: f64,
}

impl Default for LintOptions {
    fn default() -> Self {
        LintOptions { optional_ratio: 3.0 }
    }
}

/// Lints a schema document, optionally against sample outputs, with
/// default options. See [`lint_schema_with`].
pub fn lint_schema(
    schema: &Value,
    samples: &[Value],
) -> Result<Vec<SchemaLintFinding>, SchemaError> {
    lint_schema_with(schema, samples, &LintOptions::default())
}

/// Lints a schema document against optional sample outputs.
///
/// Emitted findings:
/// - `KEY_ORDER_MISMATCH`: a sample presents schema-declared keys in an
///   order different from the schema's declared property order.
/// - `ALL_KEYS_OPTIONAL`: an object node declares properties but requires
///   none of them.
/// - `OPTIONAL_KEY_BLOAT`: optional keys outnumber required keys beyond
///   `optional_ratio`.
///
/// Object nodes are visited recursively through `properties` and `items`;
/// each finding is reported once per (code, path).
pub fn lint_schema_with(
    schema: &Value,
    samples: &[Value],
    options: &LintOptions,
) -> Result<Vec<SchemaLintFinding>, SchemaError> {
    let root = schema
        .as_object()
        .ok_or_else(|| SchemaError::MalformedSchema("root must be a JSON object".into()))?;
    let mut findings = Vec::new();
    let sample_refs: Vec<&Value> = samples.iter().collect();
    lint_node(root, "$", &sample_refs, options, &mut findings)?;
    Ok(findings)
}

/// Parses and lints raw bytes: a JSON schema document plus JSON-lines
/// sample outputs (one JSON value per non-empty line).
pub fn lint_schema_bytes(
    schema_bytes: &[u8],
    samples_jsonl: Option<&[u8]>,
) -> Result<Vec<SchemaLintFinding>, SchemaError> {
    let schema: Value = serde_json::from_slice(schema_bytes)
        .map_err(|e| SchemaError::MalformedSchema(e.to_string()))?;
    let samples = match samples_jsonl {
        Some(bytes) => parse_samples_jsonl(bytes)?,
        None => Vec::new(),
    };
    lint_schema(&schema, &samples)
}

/// Parses JSON-lines sample outputs; blank lines are skipped.
pub fn parse_samples_jsonl(bytes: &[u8]) -> Result<Vec<Value>, SchemaError> {
    let text = std::str::from_utf8(bytes).map_err(|e| SchemaError::MalformedSample {
        index: 0,
        message: e.to_string(),
    })?;
    let mut samples = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|e| SchemaError::MalformedSample {
            index,
            message: e.to_string(),
        })?;
        samples.push(value);
    }
    Ok(samples)
}

fn lint_node(
    node: &Map<String, Value>,
    path: &str,
    samples: &[&Value],
    options: &LintOptions,
    findings: &mut Vec<SchemaLintFinding>,
) -> Result<(), SchemaError> {
    if let Some(props_value) = node.get("properties") {
        let props = props_value.as_object().ok_or_else(|| {
            SchemaError::MalformedSchema(format!("{path}.properties must be an object"))
        })?;
        let required = required_keys(node, path)?;
        let required_in_props = props
            .keys()
            .filter(|k| required.contains(&k.as_str()))
            .count();
        let optional = props.len() - required_in_props;

        if !props.is_empty() && required_in_props == 0 {
            findings.push(SchemaLintFinding {
                code: LintCode::AllKeysOptional,
                path: path.to_string(),
                message: format!(
                    "all {} keys at {path} are optional; add a required dummy key of type null \
                     and strip it in postprocessing",
                    props.len()
                ),
            });
        } else if optional as f64 > options.optional_ratio * required_in_props as f64 {
            findings.push(SchemaLintFinding {
                code: LintCode::OptionalKeyBloat,
                path: path.to_string(),
                message: format!(
                    "{optional} optional vs {required_in_props} required keys at {path} exceeds \
                     the {}:1 ratio; optional keys are still generated as null-valued tokens",
                    options.optional_ratio
                ),
            });
        }

        // Key order: schema-declared keys must appear in samples in the
        // declared relative order.
        let declared: Vec<&str> = props.keys().map(String::as_str).collect();
        'samples: for sample in samples {
            if let Some(obj) = sample.as_object() {
                let positions: Vec<usize> = obj
                    .keys()
                    .filter_map(|k| declared.iter().position(|d| d == k))
                    .collect();
                if positions.windows(2).any(|w| w[0] >= w[1]) {
                    findings.push(SchemaLintFinding {
                        code: LintCode::KeyOrderMismatch,
                        path: path.to_string(),
                        message: format!(
                            "sample output orders keys differently than the schema declares at \
                             {path}; align the generation order with the schema or use a \
                             grammar-based decoder that does not impose key order"
                        ),
                    });
                    break 'samples;
                }
            }
        }

        for (key, prop_schema) in props {
            if let Some(prop_obj) = prop_schema.as_object() {
                let child_path = format!("{path}.properties.{key}");
                let child_samples: Vec<&Value> = samples
                    .iter()
                    .filter_map(|s| s.as_object().and_then(|o| o.get(key)))
                    .collect();
                lint_node(prop_obj, &child_path, &child_samples, options, findings)?;
            }
        }
    }

    if let Some(items) = node.get("items").and_then(Value::as_object) {
        let child_path = format!("{path}.items");
        let child_samples: Vec<&Value> = samples
            .iter()
            .filter_map(|s| s.as_array())
            .flatten()
            .collect();
        lint_node(items, &child_path, &child_samples, options, findings)?;
    }

    Ok(())
}

fn required_keys<'a>(
    node: &'a Map<String, Value>,
    path: &str,
) -> Result<Vec<&'a str>, SchemaError> {
    match node.get("required") {
        None => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_str().ok_or_else(|| {
                    SchemaError::MalformedSchema(format!(
                        "{path}.required entries must be strings"
                    ))
                })
            })
            .collect(),
        Some(_) => Err(SchemaError::MalformedSchema(format!(
            "{path}.required must be an array"
        ))),
    }
}

/// Adds a required dummy key of type null as the first declared property,
/// giving regex-based decoders a stable required anchor. Fails with
/// `NameCollision` when the reserved name is already declared.
pub fn apply_dummy_key_workaround(schema: &Value) -> Result<Value, SchemaError> {
    let root = schema
        .as_object()
        .ok_or_else(|| SchemaError::MalformedSchema("root must be a JSON object".into()))?;
    let mut out = root.clone();

    let props = match out.get("properties") {
        Some(v) => v
            .as_object()
            .ok_or_else(|| {
                SchemaError::MalformedSchema("$.properties must be an object".into())
            })?
            .clone(),
        None => Map::new(),
    };
    if props.contains_key(DUMMY_KEY) {
        return Err(SchemaError::NameCollision(DUMMY_KEY.to_string()));
    }
    let mut new_props = Map::new();
    new_props.insert(DUMMY_KEY.to_string(), serde_json::json!({ "type": "null" }));
    for (k, v) in props {
        new_props.insert(k, v);
    }
    out.insert("properties".to_string(), Value::Object(new_props));

    let mut required = vec![Value::String(DUMMY_KEY.to_string())];
    if let Some(Value::Array(existing)) = out.get("required") {
        required.extend(existing.iter().cloned());
    }
    out.insert("required".to_string(), Value::Array(required));
    Ok(Value::Object(out))
}

/// Removes the dummy key from a generated output, leaving every other
/// field untouched. `strip_dummy_key(output)` after generating against
/// `apply_dummy_key_workaround(schema)` round-trips to the original shape.
pub fn strip_dummy_key(output: &Value) -> Value {
    match output {
        Value::Object(map) => {
            let mut out = map.clone();
            out.shift_remove(DUMMY_KEY);
            Value::Object(out)
        }
        other => other.clone(),
    }
}
