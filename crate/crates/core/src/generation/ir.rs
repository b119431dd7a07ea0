//! The structured intermediate representation produced by step one.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IrSection {
    #[serde(default)]
    pub heading: String,
    #[serde(default)]
    pub sentences: Vec<String>,
}

/// Title, authors, and the most important sentences of each section, in
/// document order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IntermediateRepresentation {
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub authors: Vec<String>,
    #[serde(default)]
    pub sections: Vec<IrSection>,
}

/// The JSON template inserted into the step-one prompt.
pub const IR_SCHEMA: &str = r#"{
  "title": "<document title>",
  "authors": ["<author name>"],
  "sections": [
    {
      "heading": "<section heading>",
      "sentences": ["<most important sentence>"]
    }
  ]
}"#;

/// Canonical serialization fed into step two.
pub fn serialize_ir(ir: &IntermediateRepresentation) -> String {
    serde_json::to_string_pretty(ir).expect("plain data always serializes")
}

/// Outcome of reading a step-one completion.
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedIr {
    /// Matched the schema.
    Structured(IntermediateRepresentation),
    /// Valid JSON in some other shape.
    OtherJson(serde_json::Value),
    /// No JSON block could be read.
    Unstructured(String),
}

/// Locate the structured block in a model answer: the first fenced code
/// block if any, else the outermost `{..}` span.
pub fn locate_json_block(output: &str) -> Option<&str> {
    if let Some(open) = output.find("```") {
        let after = &output[open + 3..];
        let body_start = after.find('\n').map_or(0, |i| i + 1);
        if let Some(close) = after[body_start..].find("```") {
            let inner = after[body_start..body_start + close].trim();
            if inner.starts_with('{') || inner.starts_with('[') {
                return Some(inner);
            }
        }
    }
    outermost_object(output)
}

/// The first balanced `{..}` span, skipping braces inside JSON strings.
fn outermost_object(s: &str) -> Option<&str> {
    let start = s.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in s[start..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&s[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

fn looks_like_ir(v: &serde_json::Value) -> bool {
    v.as_object().is_some_and(|o| {
        o.contains_key("title") || o.contains_key("sections") || o.contains_key("authors")
    })
}

/// Tolerant parse of a step-one completion.
pub fn parse_ir(output: &str) -> ParsedIr {
    let whole = serde_json::from_str::<serde_json::Value>(output.trim()).ok();
    let value = match whole
        .or_else(|| locate_json_block(output).and_then(|block| serde_json::from_str(block).ok()))
    {
        Some(v) => v,
        None => return ParsedIr::Unstructured(output.trim().to_string()),
    };
    if looks_like_ir(&value) {
        if let Ok(ir) = serde_json::from_value::<IntermediateRepresentation>(value.clone()) {
            return ParsedIr::Structured(ir);
        }
    }
    ParsedIr::OtherJson(value)
}

/// Plain lines: title, authors, then each section heading followed by its
/// sentences. Sections are separated by a blank line.
pub fn flatten_ir(ir: &IntermediateRepresentation) -> String {
    let mut blocks: Vec<String> = Vec::new();
    let mut head = Vec::new();
    if !ir.title.trim().is_empty() {
        head.push(ir.title.trim().to_string());
    }
    let authors: Vec<&str> = ir
        .authors
        .iter()
        .map(|a| a.trim())
        .filter(|a| !a.is_empty())
        .collect();
    if !authors.is_empty() {
        head.push(authors.join(", "));
    }
    if !head.is_empty() {
        blocks.push(head.join("\n"));
    }
    for s in &ir.sections {
        let mut lines = Vec::new();
        if !s.heading.trim().is_empty() {
            lines.push(s.heading.trim().to_string());
        }
        lines.extend(
            s.sentences
                .iter()
                .map(|x| x.trim())
                .filter(|x| !x.is_empty())
                .map(str::to_string),
        );
        if !lines.is_empty() {
            blocks.push(lines.join("\n"));
        }
    }
    blocks.join("\n\n")
}

/// Every string leaf of a JSON value, in document order, one per line.
pub fn flatten_json_value(v: &serde_json::Value) -> String {
    fn walk(v: &serde_json::Value, out: &mut Vec<String>) {
        match v {
            serde_json::Value::String(s) if !s.trim().is_empty() => out.push(s.trim().to_string()),
            serde_json::Value::Array(a) => a.iter().for_each(|x| walk(x, out)),
            serde_json::Value::Object(o) => o.values().for_each(|x| walk(x, out)),
            serde_json::Value::Number(n) => out.push(n.to_string()),
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(v, &mut out);
    out.join("\n")
}
