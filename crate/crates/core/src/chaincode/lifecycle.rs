use serde_json::{json, Value};

use super::{arg, Chaincode, ChaincodeError, TxContext};
use crate::identity::Role;
use crate::ledger::Document;

pub const LIFECYCLE_ID: &str = "_lifecycle";

/// System chaincode recording which chaincodes are deployed on a channel.
///
/// `deploy(name, version)` is restricted to admins and writes
/// `{name, version, deployedBy, deployedAt}` under the chaincode name.
pub struct Lifecycle;

impl Chaincode for Lifecycle {
    fn id(&self) -> &str {
        LIFECYCLE_ID
    }

    fn invoke(&self, ctx: &mut TxContext<'_>) -> Result<Value, ChaincodeError> {
        match ctx.function() {
            "deploy" => {
                if ctx.caller().role != Role::Admin {
                    return Err(ChaincodeError::access_denied("only admins deploy chaincode"));
                }
                let name = arg(ctx, 0, "name")?.to_owned();
                let version = arg(ctx, 1, "version")?.to_owned();
                if name.is_empty() || name == LIFECYCLE_ID {
                    return Err(ChaincodeError::validation("invalid chaincode name"));
                }
                if let Some(existing) = ctx.get_state(&name) {
                    if existing.get("version") == Some(&Value::String(version.clone())) {
                        return Err(ChaincodeError::already_exists(format!("{name} {version} is already deployed")));
                    }
                }
                let doc = json!({
                    "name": name,
                    "version": version,
                    "deployedBy": ctx.caller().subject_id,
                    "deployedAt": ctx.timestamp(),
                });
                ctx.put_state(&name, Document::from_value(doc).expect("object"))?;
                Ok(Value::Null)
            }
            "isDeployed" => {
                let name = arg(ctx, 0, "name")?.to_owned();
                Ok(Value::Bool(ctx.get_state(&name).is_some()))
            }
            other => Err(ChaincodeError::validation(format!("unknown lifecycle function {other}"))),
        }
    }
}
