//! Locating the dialogue record inside free-form model output.

use serde_json::Value;

/// Finds the first JSON object in `text`.
///
/// Tries, in order: the whole text, the contents of each fenced code block,
/// then every balanced `{...}` span. A top-level array yields its first
/// object element.
pub fn extract_record(text: &str) -> Option<Value> {
    if let Some(v) = as_object(text) {
        return Some(v);
    }
    for block in fenced_blocks(text) {
        if let Some(v) = as_object(block) {
            return Some(v);
        }
    }
    let bytes = text.as_bytes();
    let mut start = 0;
    while let Some(offset) = text[start..].find('{') {
        let open = start + offset;
        if let Some(close) = balanced_end(bytes, open) {
            if let Some(v) = as_object(&text[open..=close]) {
                return Some(v);
            }
        }
        start = open + 1;
    }
    None
}

fn as_object(candidate: &str) -> Option<Value> {
    match serde_json::from_str::<Value>(candidate.trim()).ok()? {
        v @ Value::Object(_) => Some(v),
        Value::Array(items) => items.into_iter().find(Value::is_object),
        _ => None,
    }
}

fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        // Skip an info string such as `json`.
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        let body = &after[body_start..];
        match body.find("```") {
            Some(close) => {
                blocks.push(&body[..close]);
                rest = &body[close + 3..];
            }
            None => break,
        }
    }
    blocks
}

/// Index of the brace closing the one at `open`, skipping string literals.
fn balanced_end(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_fenced_and_embedded() {
        assert!(extract_record(r#"{"a":1}"#).is_some());
        let fenced = "Here you go:\n```json\n{\"scene\":\"x\"}\n```\nEnjoy.";
        assert_eq!(extract_record(fenced).unwrap()["scene"], "x");
        let embedded = r#"Sure! {"scene":"a } b","n":{"k":1}} trailing"#;
        assert_eq!(extract_record(embedded).unwrap()["scene"], "a } b");
        assert_eq!(extract_record(r#"[{"scene":"y"}]"#).unwrap()["scene"], "y");
    }

    #[test]
    fn nothing_to_find() {
        assert!(extract_record("no json here").is_none());
        assert!(extract_record("{ unbalanced").is_none());
        assert!(extract_record("{not json}").is_none());
    }
}
