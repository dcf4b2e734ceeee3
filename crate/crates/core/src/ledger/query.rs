//! Rich queries over world-state documents.
//!
//! A selector is a JSON object whose keys are dotted field paths. A plain
//! value means equality; an object of operators (`$eq`, `$gt`, `$gte`,
//! `$lt`, `$lte`, `$contains`) applies each operator. All conjuncts must
//! hold. Example:
//!
//! ```json
//! {"docType": "patient", "age": {"$gte": 30, "$lt": 40}}
//! ```

use std::cmp::Ordering;

use serde_json::{Map, Value};
use thiserror::Error;

use super::{Document, StateKey, WorldState};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelectorError {
    #[error("selector must be a JSON object")]
    NotAnObject,
    #[error("empty field path in selector")]
    EmptyPath,
    #[error("unknown operator {0}")]
    UnknownOperator(String),
    #[error("operator object for {0} is empty")]
    EmptyOperators(String),
    #[error("field {0} mixes operators and plain keys")]
    MixedOperators(String),
    #[error("range operator on {0} needs a number or string")]
    BadRangeOperand(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Condition {
    Eq(Value),
    Gt(Value),
    Gte(Value),
    Lt(Value),
    Lte(Value),
    /// The field is an array containing the value.
    Contains(Value),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Predicate {
    pub path: Vec<String>,
    pub condition: Condition,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Selector {
    pub conjuncts: Vec<Predicate>,
}

impl Selector {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn eq(mut self, path: &str, value: impl Into<Value>) -> Self {
        self.conjuncts.push(Predicate {
            path: split_path(path),
            condition: Condition::Eq(value.into()),
        });
        self
    }

    pub fn with(mut self, path: &str, condition: Condition) -> Self {
        self.conjuncts.push(Predicate {
            path: split_path(path),
            condition,
        });
        self
    }

    pub fn parse(value: &Value) -> Result<Self, SelectorError> {
        let obj = value.as_object().ok_or(SelectorError::NotAnObject)?;
        let mut conjuncts = Vec::new();
        for (field, spec) in obj {
            let path = split_path(field);
            if path.iter().any(String::is_empty) {
                return Err(SelectorError::EmptyPath);
            }
            match spec {
                Value::Object(ops) if ops.keys().any(|k| k.starts_with('$')) => {
                    for c in parse_operators(field, ops)? {
                        conjuncts.push(Predicate {
                            path: path.clone(),
                            condition: c,
                        });
                    }
                }
                Value::Object(ops) if ops.is_empty() => return Err(SelectorError::EmptyOperators(field.clone())),
                other => conjuncts.push(Predicate {
                    path,
                    condition: Condition::Eq(other.clone()),
                }),
            }
        }
        Ok(Selector { conjuncts })
    }

    pub fn matches(&self, doc: &Document) -> bool {
        self.conjuncts.iter().all(|p| match doc.get_path(&p.path) {
            Some(v) => p.condition.holds(v),
            None => false,
        })
    }
}

fn split_path(path: &str) -> Vec<String> {
    path.split('.').map(str::to_owned).collect()
}

fn parse_operators(field: &str, ops: &Map<String, Value>) -> Result<Vec<Condition>, SelectorError> {
    if ops.keys().any(|k| !k.starts_with('$')) {
        return Err(SelectorError::MixedOperators(field.to_owned()));
    }
    ops.iter()
        .map(|(op, operand)| {
            let range_ok = operand.is_number() || operand.is_string();
            let cond = match op.as_str() {
                "$eq" => return Ok(Condition::Eq(operand.clone())),
                "$contains" => return Ok(Condition::Contains(operand.clone())),
                "$gt" => Condition::Gt(operand.clone()),
                "$gte" => Condition::Gte(operand.clone()),
                "$lt" => Condition::Lt(operand.clone()),
                "$lte" => Condition::Lte(operand.clone()),
                other => return Err(SelectorError::UnknownOperator(other.to_owned())),
            };
            if !range_ok {
                return Err(SelectorError::BadRangeOperand(field.to_owned()));
            }
            Ok(cond)
        })
        .collect()
}

/// Orders two scalars of the same kind. Numbers compare numerically,
/// strings lexicographically; anything else is incomparable.
fn compare(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64()?.partial_cmp(&y.as_f64()?),
        (Value::String(x), Value::String(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

fn json_eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(_), Value::Number(_)) => compare(a, b) == Some(Ordering::Equal),
        _ => a == b,
    }
}

impl Condition {
    fn holds(&self, v: &Value) -> bool {
        match self {
            Condition::Eq(x) => json_eq(v, x),
            Condition::Gt(x) => compare(v, x) == Some(Ordering::Greater),
            Condition::Gte(x) => matches!(compare(v, x), Some(Ordering::Greater | Ordering::Equal)),
            Condition::Lt(x) => compare(v, x) == Some(Ordering::Less),
            Condition::Lte(x) => matches!(compare(v, x), Some(Ordering::Less | Ordering::Equal)),
            Condition::Contains(x) => v.as_array().is_some_and(|items| items.iter().any(|i| json_eq(i, x))),
        }
    }
}

/// Documents of `namespace` matching every conjunct of `selector`, in key
/// order.
pub fn rich_query(state: &WorldState, namespace: &str, selector: &Selector) -> Vec<(StateKey, Document)> {
    state
        .namespace(namespace)
        .filter(|(_, v)| selector.matches(&v.value))
        .map(|(k, v)| (k.clone(), v.value.clone()))
        .collect()
}
