use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// Upper bound on a document's canonical size (1 MiB). Attachments are
/// stored inline as base64, so this also bounds block size.
pub const MAX_DOCUMENT_BYTES: usize = 1024 * 1024;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DocumentError {
    #[error("document must be a JSON object")]
    NotAnObject,
    #[error("document is {size} bytes, limit is {MAX_DOCUMENT_BYTES}")]
    TooLarge { size: usize },
    #[error("invalid document JSON: {0}")]
    Json(String),
    #[error("document bytes are not in canonical form")]
    NonCanonical,
}

/// A world-state document: a JSON object.
///
/// The canonical form is UTF-8 JSON with lexicographically sorted keys at
/// every level and no insignificant whitespace.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Document(Map<String, Value>);

impl Document {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_map(map: Map<String, Value>) -> Self {
        Document(map)
    }

    pub fn from_value(value: Value) -> Result<Self, DocumentError> {
        match value {
            Value::Object(map) => Ok(Document(map)),
            _ => Err(DocumentError::NotAnObject),
        }
    }

    pub fn from_serializable<T: Serialize>(value: &T) -> Result<Self, DocumentError> {
        let value = serde_json::to_value(value).map_err(|e| DocumentError::Json(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn to_typed<T: DeserializeOwned>(&self) -> Result<T, DocumentError> {
        T::deserialize(Value::Object(self.0.clone())).map_err(|e| DocumentError::Json(e.to_string()))
    }

    pub fn as_map(&self) -> &Map<String, Value> {
        &self.0
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.0)
    }

    pub fn get(&self, field: &str) -> Option<&Value> {
        self.0.get(field)
    }

    pub fn insert(&mut self, field: impl Into<String>, value: Value) -> Option<Value> {
        self.0.insert(field.into(), value)
    }

    /// Looks up a dotted path such as `personal.firstName`.
    pub fn get_path(&self, path: &[String]) -> Option<&Value> {
        let (first, rest) = path.split_first()?;
        let mut current = self.0.get(first)?;
        for segment in rest {
            current = current.as_object()?.get(segment)?;
        }
        Some(current)
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        // serde_json's Map is a BTreeMap (no `preserve_order`), so keys are
        // emitted sorted at every nesting level.
        serde_json::to_vec(&self.0).expect("JSON map serializes")
    }

    pub fn canonical_string(&self) -> String {
        String::from_utf8(self.canonical_bytes()).expect("JSON is UTF-8")
    }

    /// Parses canonical bytes, rejecting anything that would not re-encode
    /// to the same bytes.
    pub fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, DocumentError> {
        let map: Map<String, Value> = serde_json::from_slice(bytes).map_err(|e| DocumentError::Json(e.to_string()))?;
        let doc = Document(map);
        if doc.canonical_bytes() != bytes {
            return Err(DocumentError::NonCanonical);
        }
        Ok(doc)
    }

    pub fn check_size(&self) -> Result<(), DocumentError> {
        let size = self.canonical_bytes().len();
        if size > MAX_DOCUMENT_BYTES {
            return Err(DocumentError::TooLarge { size });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn canonical_form_sorts_keys_without_whitespace() {
        let doc = Document::from_value(json!({"b": 1, "a": {"z": [1, 2], "y": null}})).unwrap();
        assert_eq!(doc.canonical_string(), r#"{"a":{"y":null,"z":[1,2]},"b":1}"#);
    }

    #[test]
    fn strict_parse_rejects_non_canonical() {
        assert!(Document::from_canonical_bytes(br#"{"a":1,"b":2}"#).is_ok());
        assert_eq!(
            Document::from_canonical_bytes(br#"{"b":2,"a":1}"#),
            Err(DocumentError::NonCanonical)
        );
        assert_eq!(
            Document::from_canonical_bytes(br#"{"a": 1}"#),
            Err(DocumentError::NonCanonical)
        );
        assert!(matches!(Document::from_canonical_bytes(b"[1]"), Err(DocumentError::Json(_))));
    }

    #[test]
    fn path_lookup() {
        let doc = Document::from_value(json!({"personal": {"firstName": "Ann"}})).unwrap();
        let path = vec!["personal".to_string(), "firstName".to_string()];
        assert_eq!(doc.get_path(&path), Some(&json!("Ann")));
        assert_eq!(doc.get_path(&["missing".to_string()]), None);
    }

    #[test]
    fn size_cap() {
        let mut doc = Document::new();
        doc.insert("blob", Value::String("x".repeat(MAX_DOCUMENT_BYTES)));
        assert!(matches!(doc.check_size(), Err(DocumentError::TooLarge { .. })));
    }
}
