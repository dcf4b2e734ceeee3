use serde_json::{json, Value};

use super::{arg, Chaincode, ChaincodeError, TxContext};
use crate::ledger::Document;

pub const NOOP_ID: &str = "noop";

/// Minimal test chaincode used for load and replay workloads.
///
/// - `noop()` touches nothing.
/// - `put(key, value)` blind-writes `{"value": value}`.
/// - `incr(key)` reads a counter and writes it back incremented.
/// - `del(key)` deletes a key.
pub struct NoopChaincode;

impl Chaincode for NoopChaincode {
    fn id(&self) -> &str {
        NOOP_ID
    }

    fn invoke(&self, ctx: &mut TxContext<'_>) -> Result<Value, ChaincodeError> {
        match ctx.function() {
            "noop" => Ok(Value::Null),
            "put" => {
                let key = arg(ctx, 0, "key")?.to_owned();
                let value = arg(ctx, 1, "value")?.to_owned();
                ctx.put_state(&key, Document::from_value(json!({ "value": value })).expect("object"))?;
                Ok(Value::Null)
            }
            "incr" => {
                let key = arg(ctx, 0, "key")?.to_owned();
                let current = ctx
                    .get_state(&key)
                    .and_then(|d| d.get("count").and_then(Value::as_u64))
                    .unwrap_or(0);
                ctx.put_state(&key, Document::from_value(json!({ "count": current + 1 })).expect("object"))?;
                Ok(json!(current + 1))
            }
            "del" => {
                let key = arg(ctx, 0, "key")?.to_owned();
                ctx.get_state(&key);
                ctx.del_state(&key);
                Ok(Value::Null)
            }
            other => Err(ChaincodeError::validation(format!("unknown function {other}"))),
        }
    }
}
