use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("no JSON object found in response")]
    NoJsonFound,
    #[error("unexpected content after the JSON object: {0:?}")]
    TrailingGarbage(String),
}

const FENCE: &str = "```";

/// Isolates the single JSON object in a model reply.
///
/// Leading prose and a surrounding code fence are skipped. Anything other
/// than whitespace after the object (prose or a second object) is rejected.
pub fn extract_json(response: &str) -> Result<Map<String, Value>, ExtractError> {
    let (body, after) = match response.find(FENCE) {
        Some(open) => {
            let inner = &response[open + FENCE.len()..];
            // skip the info string ("json", "JSON", ...) on the fence line
            let inner = match inner.find('\n') {
                Some(nl) if !inner[..nl].contains('{') => &inner[nl + 1..],
                _ => inner,
            };
            match inner.find(FENCE) {
                Some(close) => (&inner[..close], &inner[close + FENCE.len()..]),
                None => (inner, ""),
            }
        }
        None => (response, ""),
    };

    for (start, _) in body.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&body[start..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(obj))) = stream.next() {
            let rest = &body[start + stream.byte_offset()..];
            let trailing = format!("{}{}", rest.trim(), after.trim());
            if !trailing.is_empty() {
                return Err(ExtractError::TrailingGarbage(snippet(&trailing)));
            }
            return Ok(obj);
        }
    }
    Err(ExtractError::NoJsonFound)
}

fn snippet(s: &str) -> String {
    s.chars().take(60).collect()
}
