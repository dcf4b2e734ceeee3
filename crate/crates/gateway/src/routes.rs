use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::routing::{delete, get, patch, post};
use axum::{Json, Router};
use ehr_core::chaincode::ehr::EHR_ID;
use ehr_core::explorer;
use ehr_core::netconfig::{Enrollment, NetError};
use ehr_core::txflow::{CommitReceipt, Invocation, Submitted};
use ehr_core::{Network, Role};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::auth::Auth;
use crate::error::ApiError;
use crate::AppState;

type Shared = State<Arc<AppState>>;
type ApiResult = Result<Json<Value>, ApiError>;

pub(crate) fn routes() -> Router<Arc<AppState>> {
    Router::new()
        .route("/health", get(health))
        .route("/auth/login", post(login))
        .route("/admin/patients", post(create_patient).get(list_patients))
        .route("/admin/patients/{id}", delete(delete_patient))
        .route("/patients/{id}", get(read_own))
        .route("/patients/{id}/personal", patch(update_personal))
        .route("/patients/{id}/password", patch(update_password))
        .route("/patients/{id}/grants", post(grant))
        .route("/patients/{id}/grants/{doctor_id}", delete(revoke))
        .route("/doctor/patients", get(granted_patients))
        .route("/doctor/patients/{id}", get(doctor_read))
        .route("/doctor/patients/{id}/medical", patch(update_medical))
        .route("/explorer/info", get(explorer_info))
        .route("/explorer/blocks/{n}", get(explorer_block))
        .route("/explorer/tx/{tx_id}", get(explorer_tx))
        .route("/explorer/patients/{id}/history", get(explorer_history))
}

/// Runs blocking network work (simulation, password hashing, waiting for
/// a commit) off the async executor.
async fn blocking<T, F>(state: &Arc<AppState>, f: F) -> Result<T, ApiError>
where
    F: FnOnce(&Network) -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    let net = Arc::clone(&state.network);
    tokio::task::spawn_blocking(move || f(&net))
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn ehr(function: &str) -> Invocation {
    Invocation::new(EHR_ID, function)
}

fn receipt_body(receipt: &CommitReceipt, result: Value) -> Value {
    json!({"receipt": receipt, "result": result})
}

/// Submits as the caller and insists on a valid commit.
fn submit(net: &Network, auth: &Auth, inv: Invocation) -> Result<Submitted, ApiError> {
    let signer = auth.signer(net)?;
    let submitted = net.ehr_channel()?.submit(&signer, inv)?;
    if !submitted.receipt.validity.is_valid() {
        return Err(ApiError::invalidated(&submitted.receipt.tx_id, submitted.receipt.validity));
    }
    Ok(submitted)
}

fn query(net: &Network, auth: &Auth, inv: Invocation) -> Result<Value, ApiError> {
    let signer = auth.signer(net)?;
    Ok(net.ehr_channel()?.query(&signer, inv)?)
}

async fn health(State(state): Shared) -> ApiResult {
    let height = blocking(&state, |net| Ok(net.ehr_channel()?.ledger().height())).await?;
    Ok(Json(json!({"status": "ok", "height": height})))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct LoginRequest {
    #[serde(alias = "principal_id", alias = "subjectId")]
    id: String,
    password: String,
}

/// Unknown principals and bad passwords get the same answer.
async fn login(State(state): Shared, body: Bytes) -> ApiResult {
    let req: LoginRequest = parse(&body)?;
    let denied = || ApiError::unauthorized("invalid credentials");
    let sub = req.id.clone();
    let (role, org) = blocking(&state, move |net| {
        if req.id == net.admin_id() {
            let org = net.admin().certificate().org.clone();
            return net.check_admin_secret(&req.password).then_some((Role::Admin, org)).ok_or_else(denied);
        }
        let signer = net.signer(&req.id).ok_or_else(denied)?;
        let role = signer.role();
        if !matches!(role, Role::Patient | Role::Doctor) {
            return Err(denied());
        }
        let org = signer.certificate().org.clone();
        let inv = ehr("verifyPassword").arg(&req.id).transient("password", req.password);
        match net.ehr_channel()?.query(&signer, inv) {
            Ok(Value::Bool(true)) => Ok((role, org)),
            _ => Err(denied()),
        }
    })
    .await?;
    let (token, claims) = state.tokens.issue(&sub, role, org, state.network.clock().now().as_secs());
    Ok(Json(json!({
        "token": token,
        "role": role,
        "subjectId": sub,
        "org": claims.org,
        "expiresAt": claims.exp,
    })))
}

// ---- admin ----

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CreatePatientRequest {
    patient_id: String,
    personal: Map<String, Value>,
    password: String,
}

async fn create_patient(State(state): Shared, auth: Auth, body: Bytes) -> ApiResult {
    auth.require(Role::Admin)?;
    let req: CreatePatientRequest = parse(&body)?;
    blocking(&state, move |net| {
        let enrolled = net
            .enroll_as_admin(Enrollment::Patient {
                id: req.patient_id.clone(),
                personal: Value::Object(req.personal),
                password: req.password,
            })
            .map_err(|e| match e {
                NetError::AlreadyExists(_) => ApiError::new(
                    axum::http::StatusCode::CONFLICT,
                    "already-exists",
                    format!("patient {} already exists", req.patient_id),
                ),
                other => other.into(),
            })?;
        let submitted = enrolled.submitted.expect("patients have a record transaction");
        Ok(Json(receipt_body(&submitted.receipt, submitted.payload)))
    })
    .await
}

async fn delete_patient(State(state): Shared, auth: Auth, Path(id): Path<String>) -> ApiResult {
    auth.require(Role::Admin)?;
    blocking(&state, move |net| {
        let submitted = submit(net, &auth, ehr("deletePatient").arg(&id))?;
        match net.revoke(&id) {
            Ok(_) | Err(NetError::UnknownSubject(_)) => {}
            Err(e) => return Err(e.into()),
        }
        Ok(Json(receipt_body(&submitted.receipt, submitted.payload)))
    })
    .await
}

async fn list_patients(State(state): Shared, auth: Auth) -> ApiResult {
    auth.require(Role::Admin)?;
    blocking(&state, move |net| Ok(Json(query(net, &auth, ehr("queryAllPatients"))?))).await
}

// ---- patient ----

async fn read_own(State(state): Shared, auth: Auth, Path(id): Path<String>) -> ApiResult {
    auth.require_self(&id)?;
    blocking(&state, move |net| Ok(Json(query(net, &auth, ehr("readPatient").arg(&id))?))).await
}

async fn update_personal(State(state): Shared, auth: Auth, Path(id): Path<String>, body: Bytes) -> ApiResult {
    auth.require_self(&id)?;
    let changes: Map<String, Value> = parse(&body)?;
    blocking(&state, move |net| {
        let inv = ehr("updatePersonalDetails").arg(&id).arg(Value::Object(changes).to_string());
        let s = submit(net, &auth, inv)?;
        Ok(Json(receipt_body(&s.receipt, s.payload)))
    })
    .await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct PasswordChange {
    old_password: String,
    new_password: String,
}

async fn update_password(State(state): Shared, auth: Auth, Path(id): Path<String>, body: Bytes) -> ApiResult {
    auth.require_self(&id)?;
    let req: PasswordChange = parse(&body)?;
    blocking(&state, move |net| {
        let inv = ehr("updatePassword")
            .arg(&id)
            .arg(net.new_salt())
            .transient("oldPassword", req.old_password)
            .transient("newPassword", req.new_password);
        let s = submit(net, &auth, inv)?;
        Ok(Json(receipt_body(&s.receipt, s.payload)))
    })
    .await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct GrantRequest {
    #[serde(alias = "doctor_id")]
    doctor_id: String,
}

async fn grant(State(state): Shared, auth: Auth, Path(id): Path<String>, body: Bytes) -> ApiResult {
    auth.require_self(&id)?;
    let req: GrantRequest = parse(&body)?;
    blocking(&state, move |net| {
        let s = submit(net, &auth, ehr("grantAccess").arg(&id).arg(req.doctor_id))?;
        Ok(Json(receipt_body(&s.receipt, s.payload)))
    })
    .await
}

async fn revoke(State(state): Shared, auth: Auth, Path((id, doctor_id)): Path<(String, String)>) -> ApiResult {
    auth.require_self(&id)?;
    blocking(&state, move |net| {
        let s = submit(net, &auth, ehr("revokeAccess").arg(&id).arg(doctor_id))?;
        Ok(Json(receipt_body(&s.receipt, s.payload)))
    })
    .await
}

// ---- doctor ----

async fn granted_patients(State(state): Shared, auth: Auth) -> ApiResult {
    auth.require(Role::Doctor)?;
    blocking(&state, move |net| Ok(Json(query(net, &auth, ehr("listGrantedPatients"))?))).await
}

async fn doctor_read(State(state): Shared, auth: Auth, Path(id): Path<String>) -> ApiResult {
    auth.require(Role::Doctor)?;
    blocking(&state, move |net| Ok(Json(query(net, &auth, ehr("readPatient").arg(&id))?))).await
}

async fn update_medical(State(state): Shared, auth: Auth, Path(id): Path<String>, body: Bytes) -> ApiResult {
    auth.require(Role::Doctor)?;
    let delta: Map<String, Value> = parse(&body)?;
    blocking(&state, move |net| {
        let inv = ehr("updateMedicalDetails").arg(&id).arg(Value::Object(delta).to_string());
        let s = submit(net, &auth, inv)?;
        Ok(Json(receipt_body(&s.receipt, s.payload)))
    })
    .await
}

// ---- explorer ----

fn to_json<T: serde::Serialize>(v: &T) -> Json<Value> {
    Json(serde_json::to_value(v).expect("explorer views serialize"))
}

async fn explorer_info(State(state): Shared, auth: Auth) -> ApiResult {
    blocking(&state, move |net| {
        auth.identity(net)?;
        let ch = net.ehr_channel()?;
        let ledger = ch.ledger();
        Ok(to_json(&explorer::chain_info(&ledger)))
    })
    .await
}

async fn explorer_block(State(state): Shared, auth: Auth, Path(n): Path<String>) -> ApiResult {
    let n: u64 = n
        .parse()
        .map_err(|_| ApiError::new(axum::http::StatusCode::NOT_FOUND, "not-found", format!("no block {n}")))?;
    blocking(&state, move |net| {
        let who = auth.identity(net)?;
        let ch = net.ehr_channel()?;
        let ledger = ch.ledger();
        Ok(to_json(&explorer::block(&ledger, n, &who)?))
    })
    .await
}

async fn explorer_tx(State(state): Shared, auth: Auth, Path(tx_id): Path<String>) -> ApiResult {
    blocking(&state, move |net| {
        let who = auth.identity(net)?;
        let ch = net.ehr_channel()?;
        let ledger = ch.ledger();
        Ok(to_json(&explorer::transaction(&ledger, &tx_id, &who)?))
    })
    .await
}

async fn explorer_history(State(state): Shared, auth: Auth, Path(id): Path<String>) -> ApiResult {
    blocking(&state, move |net| {
        let who = auth.identity(net)?;
        let ch = net.ehr_channel()?;
        let ledger = ch.ledger();
        Ok(to_json(&explorer::record_history(&ledger, &id, &who)?))
    })
    .await
}
