//! The EHR chaincode: `AdminContract`, `PatientContract` and
//! `DoctorContract` packaged as one chaincode with id `ehr`.
//!
//! # Invocation ABI
//!
//! Functions are addressed as `Contract:method`, or by bare method name, in
//! which case the contract is chosen from the caller's role. Every contract
//! method is exclusive to its role. Secrets travel in the transient map and
//! never reach the ledger.
//!
//! | function | args | transient |
//! |---|---|---|
//! | `AdminContract:createPatient` | patientId, personal JSON, salt hex | `password` |
//! | `AdminContract:deletePatient` | patientId | |
//! | `AdminContract:queryAllPatients` | | |
//! | `AdminContract:registerDoctor` | doctorId, displayName, department, salt hex | `password` |
//! | `*:readPatient` | patientId | |
//! | `PatientContract:updatePersonalDetails` | patientId, changes JSON | |
//! | `PatientContract:updatePassword` | patientId, new salt hex | `oldPassword`, `newPassword` |
//! | `PatientContract:grantAccess` | patientId, doctorId | |
//! | `PatientContract:revokeAccess` | patientId, doctorId | |
//! | `PatientContract:verifyPassword` | patientId | `password` |
//! | `DoctorContract:updateMedicalDetails` | patientId, medical delta JSON | |
//! | `DoctorContract:listGrantedPatients` | | |
//! | `DoctorContract:verifyPassword` | doctorId | `password` |
//!
//! Errors carry one of the codes in [`ErrorCode`](crate::chaincode::ErrorCode).

mod records;

use std::fmt;

use base64::Engine as _;
use serde_json::{Map, Value};

pub use records::*;

use super::{arg, Chaincode, ChaincodeError, TxContext};
use crate::crypto::{hash_password, verify_password};
use crate::identity::Role;
use crate::ledger::{Document, Selector};

pub const EHR_ID: &str = "ehr";

const MAX_ID_LEN: usize = 64;
const MIN_SALT_BYTES: usize = 8;
const MAX_SALT_BYTES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Contract {
    Admin,
    Patient,
    Doctor,
}

impl Contract {
    pub fn name(self) -> &'static str {
        match self {
            Contract::Admin => "AdminContract",
            Contract::Patient => "PatientContract",
            Contract::Doctor => "DoctorContract",
        }
    }

    pub fn role(self) -> Role {
        match self {
            Contract::Admin => Role::Admin,
            Contract::Patient => Role::Patient,
            Contract::Doctor => Role::Doctor,
        }
    }

    fn for_role(role: Role) -> Option<Contract> {
        match role {
            Role::Admin => Some(Contract::Admin),
            Role::Patient => Some(Contract::Patient),
            Role::Doctor => Some(Contract::Doctor),
            Role::Peer => None,
        }
    }

    fn from_name(name: &str) -> Option<Contract> {
        [Contract::Admin, Contract::Patient, Contract::Doctor]
            .into_iter()
            .find(|c| c.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    CreatePatient,
    DeletePatient,
    QueryAllPatients,
    ReadPatient,
    UpdatePersonalDetails,
    UpdatePassword,
    GrantAccess,
    RevokeAccess,
    UpdateMedicalDetails,
    RegisterDoctor,
    VerifyPassword,
    ListGrantedPatients,
}

impl Method {
    /// The nine record methods of the three contracts.
    pub const RECORD_METHODS: [Method; 9] = [
        Method::CreatePatient,
        Method::DeletePatient,
        Method::QueryAllPatients,
        Method::ReadPatient,
        Method::UpdatePersonalDetails,
        Method::UpdatePassword,
        Method::GrantAccess,
        Method::RevokeAccess,
        Method::UpdateMedicalDetails,
    ];

    const ALL: [Method; 12] = [
        Method::CreatePatient,
        Method::DeletePatient,
        Method::QueryAllPatients,
        Method::ReadPatient,
        Method::UpdatePersonalDetails,
        Method::UpdatePassword,
        Method::GrantAccess,
        Method::RevokeAccess,
        Method::UpdateMedicalDetails,
        Method::RegisterDoctor,
        Method::VerifyPassword,
        Method::ListGrantedPatients,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::CreatePatient => "createPatient",
            Method::DeletePatient => "deletePatient",
            Method::QueryAllPatients => "queryAllPatients",
            Method::ReadPatient => "readPatient",
            Method::UpdatePersonalDetails => "updatePersonalDetails",
            Method::UpdatePassword => "updatePassword",
            Method::GrantAccess => "grantAccess",
            Method::RevokeAccess => "revokeAccess",
            Method::UpdateMedicalDetails => "updateMedicalDetails",
            Method::RegisterDoctor => "registerDoctor",
            Method::VerifyPassword => "verifyPassword",
            Method::ListGrantedPatients => "listGrantedPatients",
        }
    }

    /// Contracts that define this method. The first is the canonical owner.
    pub fn contracts(self) -> &'static [Contract] {
        use Contract::*;
        match self {
            Method::CreatePatient | Method::DeletePatient | Method::QueryAllPatients | Method::RegisterDoctor => &[Admin],
            Method::ReadPatient => &[Admin, Patient, Doctor],
            Method::UpdatePersonalDetails | Method::UpdatePassword | Method::GrantAccess | Method::RevokeAccess => {
                &[Patient]
            }
            Method::UpdateMedicalDetails | Method::ListGrantedPatients => &[Doctor],
            Method::VerifyPassword => &[Patient, Doctor],
        }
    }

    /// True for methods that write state when they succeed.
    pub fn is_mutation(self) -> bool {
        !matches!(
            self,
            Method::QueryAllPatients | Method::ReadPatient | Method::VerifyPassword | Method::ListGrantedPatients
        )
    }

    fn from_name(name: &str) -> Option<Method> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Fully qualified function name for `contract`.
    pub fn qualified(self, contract: Contract) -> String {
        format!("{}:{}", contract.name(), self.name())
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Resolves a function name to a contract method and checks that the
/// caller's role owns that contract.
pub fn resolve(function: &str, caller_role: Role) -> Result<(Contract, Method), ChaincodeError> {
    let unknown = || ChaincodeError::validation(format!("unknown function {function}"));
    let (contract, method) = match function.split_once(':') {
        Some((c, m)) => {
            let contract = Contract::from_name(c).ok_or_else(unknown)?;
            let method = Method::from_name(m).ok_or_else(unknown)?;
            if !method.contracts().contains(&contract) {
                return Err(unknown());
            }
            (contract, method)
        }
        None => {
            let method = Method::from_name(function).ok_or_else(unknown)?;
            let contract = Contract::for_role(caller_role)
                .filter(|c| method.contracts().contains(c))
                .unwrap_or(method.contracts()[0]);
            (contract, method)
        }
    };
    if contract.role() != caller_role {
        return Err(ChaincodeError::access_denied(format!(
            "{} is reserved for the {} role",
            method.qualified(contract),
            contract.role()
        )));
    }
    Ok((contract, method))
}

/// Whether a doctor may see personal contact details is not settled;
/// [`DoctorView`] carries names and the medical section only.
#[derive(Debug, Default)]
pub struct EhrChaincode;

impl Chaincode for EhrChaincode {
    fn id(&self) -> &str {
        EHR_ID
    }

    fn invoke(&self, ctx: &mut TxContext<'_>) -> Result<Value, ChaincodeError> {
        let (_, method) = resolve(ctx.function(), ctx.caller().role)?;
        match method {
            Method::CreatePatient => create_patient(ctx),
            Method::DeletePatient => delete_patient(ctx),
            Method::QueryAllPatients => query_all_patients(ctx),
            Method::ReadPatient => read_patient(ctx),
            Method::UpdatePersonalDetails => update_personal_details(ctx),
            Method::UpdatePassword => update_password(ctx),
            Method::GrantAccess => grant_access(ctx),
            Method::RevokeAccess => revoke_access(ctx),
            Method::UpdateMedicalDetails => update_medical_details(ctx),
            Method::RegisterDoctor => register_doctor(ctx),
            Method::VerifyPassword => verify_credentials(ctx),
            Method::ListGrantedPatients => list_granted_patients(ctx),
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("views serialize")
}

fn validate_id(id: &str, what: &str) -> Result<(), ChaincodeError> {
    let ok = !id.is_empty()
        && id.len() <= MAX_ID_LEN
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(ChaincodeError::validation(format!("invalid {what} {id:?}")))
    }
}

fn parse_salt(hex_salt: &str) -> Result<Vec<u8>, ChaincodeError> {
    let salt = hex::decode(hex_salt).map_err(|_| ChaincodeError::validation("salt must be hex"))?;
    if !(MIN_SALT_BYTES..=MAX_SALT_BYTES).contains(&salt.len()) {
        return Err(ChaincodeError::validation(format!(
            "salt must be {MIN_SALT_BYTES}..={MAX_SALT_BYTES} bytes"
        )));
    }
    Ok(salt)
}

fn required_secret<'c>(ctx: &'c TxContext<'_>, name: &str) -> Result<&'c str, ChaincodeError> {
    match ctx.transient(name) {
        Some(s) if !s.is_empty() => Ok(s),
        _ => Err(ChaincodeError::validation(format!("transient field {name} is required"))),
    }
}

fn credentials(password: &str, salt_hex: &str) -> Result<Credentials, ChaincodeError> {
    let salt = parse_salt(salt_hex)?;
    Ok(Credentials {
        password_hash: hash_password(password, &salt),
        salt: hex::encode(salt),
    })
}

fn check_password(creds: &Credentials, password: &str) -> bool {
    hex::decode(&creds.salt).is_ok_and(|salt| verify_password(password, &salt, &creds.password_hash))
}

fn load_patient(ctx: &mut TxContext<'_>, patient_id: &str) -> Result<PatientRecord, ChaincodeError> {
    validate_id(patient_id, "patient id")?;
    let doc = ctx
        .get_state(patient_id)
        .ok_or_else(|| ChaincodeError::not_found(format!("patient {patient_id} does not exist")))?;
    doc.to_typed::<PatientRecord>()
        .ok()
        .filter(|r| r.doc_type == PATIENT_DOC_TYPE)
        .ok_or_else(|| ChaincodeError::not_found(format!("{patient_id} is not a patient record")))
}

fn store_patient(ctx: &mut TxContext<'_>, record: &PatientRecord) -> Result<(), ChaincodeError> {
    let doc = Document::from_serializable(record).expect("record is an object");
    ctx.put_state(&record.patient_id, doc)
}

fn load_doctor(ctx: &mut TxContext<'_>, doctor_id: &str) -> Result<DoctorEntry, ChaincodeError> {
    validate_id(doctor_id, "doctor id")?;
    ctx.get_state(&doctor_key(doctor_id))
        .and_then(|d| d.to_typed::<DoctorEntry>().ok())
        .ok_or_else(|| ChaincodeError::not_found(format!("doctor {doctor_id} is not enrolled")))
}

fn require_self(ctx: &TxContext<'_>, patient_id: &str) -> Result<(), ChaincodeError> {
    if ctx.caller().subject_id != patient_id {
        return Err(ChaincodeError::access_denied("patients may only act on their own record"));
    }
    Ok(())
}

fn require_granted(ctx: &TxContext<'_>, record: &PatientRecord) -> Result<(), ChaincodeError> {
    if !record.permission_granted.contains(&ctx.caller().subject_id) {
        return Err(ChaincodeError::access_denied(format!(
            "{} has not been granted access to {}",
            ctx.caller().subject_id,
            record.patient_id
        )));
    }
    Ok(())
}

fn parse_object(raw: &str, what: &str) -> Result<Map<String, Value>, ChaincodeError> {
    match serde_json::from_str::<Value>(raw) {
        Ok(Value::Object(map)) => Ok(map),
        _ => Err(ChaincodeError::validation(format!("{what} must be a JSON object"))),
    }
}

// ---- AdminContract ----

fn create_patient(ctx: &mut TxContext<'_>) -> Result<Value, ChaincodeError> {
    let patient_id = arg(ctx, 0, "patientId")?.to_owned();
    validate_id(&patient_id, "patient id")?;
    let personal: PersonalDetails = serde_json::from_str(arg(ctx, 1, "personal")?)
        .map_err(|e| ChaincodeError::validation(format!("personal details: {e}")))?;
    if personal.first_name.trim().is_empty() || personal.last_name.trim().is_empty() {
        return Err(ChaincodeError::validation("first and last name are required"));
    }
    let salt_hex = arg(ctx, 2, "salt")?.to_owned();
    let password = required_secret(ctx, "password")?.to_owned();
    if ctx.get_state(&patient_id).is_some() {
        return Err(ChaincodeError::already_exists(format!("patient {patient_id} already exists")));
    }
    let record = PatientRecord {
        patient_id: patient_id.clone(),
        doc_type: PATIENT_DOC_TYPE.into(),
        personal,
        credentials: credentials(&password, &salt_hex)?,
        medical: MedicalSection::default(),
        permission_granted: Vec::new(),
        created_by: ctx.caller().subject_id.clone(),
        created_at: ctx.timestamp(),
    };
    store_patient(ctx, &record)?;
    Ok(Value::String(patient_id))
}

fn delete_patient(ctx: &mut TxContext<'_>) -> Result<Value, ChaincodeError> {
    let patient_id = arg(ctx, 0, "patientId")?.to_owned();
    load_patient(ctx, &patient_id)?;
    ctx.del_state(&patient_id);
    Ok(Value::Null)
}

fn query_all_patients(ctx: &mut TxContext<'_>) -> Result<Value, ChaincodeError> {
    let views: Vec<AdminView> = ctx
        .query(&Selector::all().eq("docType", PATIENT_DOC_TYPE))
        .into_iter()
        .filter_map(|(_, doc)| doc.to_typed::<PatientRecord>().ok())
        .map(|r| r.admin_view())
        .collect();
    Ok(to_json(&views))
}

fn register_doctor(ctx: &mut TxContext<'_>) -> Result<Value, ChaincodeError> {
    let doctor_id = arg(ctx, 0, "doctorId")?.to_owned();
    validate_id(&doctor_id, "doctor id")?;
    let display_name = arg(ctx, 1, "displayName")?.trim().to_owned();
    let department = arg(ctx, 2, "department")?.trim().to_owned();
    let salt_hex = arg(ctx, 3, "salt")?.to_owned();
    let password = required_secret(ctx, "password")?.to_owned();
    if display_name.is_empty() {
        return Err(ChaincodeError::validation("display name is required"));
    }
    let key = doctor_key(&doctor_id);
    if ctx.get_state(&key).is_some() {
        return Err(ChaincodeError::already_exists(format!("doctor {doctor_id} already enrolled")));
    }
    let entry = DoctorEntry {
        doctor_id: doctor_id.clone(),
        doc_type: DOCTOR_DOC_TYPE.into(),
        display_name,
        department,
        credentials: credentials(&password, &salt_hex)?,
    };
    ctx.put_state(&key, Document::from_serializable(&entry).expect("object"))?;
    Ok(to_json(&entry.summary()))
}

// ---- shared ----

fn read_patient(ctx: &mut TxContext<'_>) -> Result<Value, ChaincodeError> {
    let patient_id = arg(ctx, 0, "patientId")?.to_owned();
    let view = match ctx.caller().role {
        Role::Admin => PatientView::Admin(load_patient(ctx, &patient_id)?.admin_view()),
        Role::Patient => {
            require_self(ctx, &patient_id)?;
            PatientView::Full(load_patient(ctx, &patient_id)?.full_view())
        }
        Role::Doctor => {
            let record = load_patient(ctx, &patient_id)?;
            require_granted(ctx, &record)?;
            PatientView::Doctor(record.doctor_view())
        }
        Role::Peer => return Err(ChaincodeError::access_denied("peers cannot read records")),
    };
    Ok(to_json(&view))
}

fn verify_credentials(ctx: &mut TxContext<'_>) -> Result<Value, ChaincodeError> {
    let subject = arg(ctx, 0, "subjectId")?.to_owned();
    if ctx.caller().subject_id != subject {
        return Err(ChaincodeError::access_denied("credentials can only be checked by their owner"));
    }
    let password = required_secret(ctx, "password")?.to_owned();
    let creds = match ctx.caller().role {
        Role::Patient => load_patient(ctx, &subject)?.credentials,
        Role::Doctor => load_doctor(ctx, &subject)?.credentials,
        _ => return Err(ChaincodeError::access_denied("no stored credentials for this role")),
    };
    if !check_password(&creds, &password) {
        return Err(ChaincodeError::auth_failed("invalid credentials"));
    }
    Ok(Value::Bool(true))
}

// ---- PatientContract ----

fn update_personal_details(ctx: &mut TxContext<'_>) -> Result<Value, ChaincodeError> {
    let patient_id = arg(ctx, 0, "patientId")?.to_owned();
    require_self(ctx, &patient_id)?;
    let changes = parse_object(arg(ctx, 1, "changes")?, "personal changes")?;
    if changes.is_empty() {
        return Err(ChaincodeError::validation("no personal details to update"));
    }
    let mut record = load_patient(ctx, &patient_id)?;
    for (field, value) in &changes {
        let slot = record
            .personal
            .field_mut(field)
            .ok_or_else(|| ChaincodeError::validation(format!("unknown personal field {field}")))?;
        let Value::String(s) = value else {
            return Err(ChaincodeError::validation(format!("{field} must be a string")));
        };
        *slot = s.clone();
    }
    if record.personal.first_name.trim().is_empty() || record.personal.last_name.trim().is_empty() {
        return Err(ChaincodeError::validation("first and last name are required"));
    }
    store_patient(ctx, &record)?;
    Ok(Value::Null)
}

/// Rotates the stored credential. A new password equal to the old one is
/// accepted.
fn update_password(ctx: &mut TxContext<'_>) -> Result<Value, ChaincodeError> {
    let patient_id = arg(ctx, 0, "patientId")?.to_owned();
    require_self(ctx, &patient_id)?;
    let salt_hex = arg(ctx, 1, "salt")?.to_owned();
    let old = required_secret(ctx, "oldPassword")?.to_owned();
    let new = required_secret(ctx, "newPassword")?.to_owned();
    let mut record = load_patient(ctx, &patient_id)?;
    if !check_password(&record.credentials, &old) {
        return Err(ChaincodeError::auth_failed("current password is incorrect"));
    }
    record.credentials = credentials(&new, &salt_hex)?;
    store_patient(ctx, &record)?;
    Ok(Value::Null)
}

fn grant_access(ctx: &mut TxContext<'_>) -> Result<Value, ChaincodeError> {
    let patient_id = arg(ctx, 0, "patientId")?.to_owned();
    let doctor_id = arg(ctx, 1, "doctorId")?.to_owned();
    require_self(ctx, &patient_id)?;
    let mut record = load_patient(ctx, &patient_id)?;
    load_doctor(ctx, &doctor_id)?;
    if !record.permission_granted.contains(&doctor_id) {
        record.permission_granted.push(doctor_id);
        store_patient(ctx, &record)?;
    }
    Ok(to_json(&record.permission_granted))
}

fn revoke_access(ctx: &mut TxContext<'_>) -> Result<Value, ChaincodeError> {
    let patient_id = arg(ctx, 0, "patientId")?.to_owned();
    let doctor_id = arg(ctx, 1, "doctorId")?.to_owned();
    require_self(ctx, &patient_id)?;
    let mut record = load_patient(ctx, &patient_id)?;
    let before = record.permission_granted.len();
    record.permission_granted.retain(|d| d != &doctor_id);
    if record.permission_granted.len() != before {
        store_patient(ctx, &record)?;
    }
    Ok(to_json(&record.permission_granted))
}

// ---- DoctorContract ----

/// Applies a medical delta. `bloodGroup` and `allergies` replace the stored
/// values; `diagnoses`, `medications` and `treatmentNotes` are lists of
/// texts appended as attributed entries; `attachments` is a list of
/// `{name, contentType, data}` with base64 data.
fn update_medical_details(ctx: &mut TxContext<'_>) -> Result<Value, ChaincodeError> {
    let patient_id = arg(ctx, 0, "patientId")?.to_owned();
    let delta = parse_object(arg(ctx, 1, "medical delta")?, "medical delta")?;
    if delta.is_empty() {
        return Err(ChaincodeError::validation("medical delta is empty"));
    }
    let mut record = load_patient(ctx, &patient_id)?;
    require_granted(ctx, &record)?;
    let doctor = ctx.caller().subject_id.clone();
    let at = ctx.timestamp();
    let entries = |field: &str, value: &Value| -> Result<Vec<DatedEntry>, ChaincodeError> {
        string_list(field, value).map(|texts| {
            texts
                .into_iter()
                .map(|text| DatedEntry {
                    text,
                    recorded_by: doctor.clone(),
                    recorded_at: at,
                })
                .collect()
        })
    };
    let medical = &mut record.medical;
    for (field, value) in &delta {
        match field.as_str() {
            "bloodGroup" => {
                medical.blood_group = value
                    .as_str()
                    .ok_or_else(|| ChaincodeError::validation("bloodGroup must be a string"))?
                    .to_owned();
            }
            "allergies" => medical.allergies = string_list(field, value)?,
            "diagnoses" => medical.diagnoses.extend(entries(field, value)?),
            "medications" => medical.medications.extend(entries(field, value)?),
            "treatmentNotes" => medical.treatment_notes.extend(entries(field, value)?),
            "attachments" => {
                let items = value
                    .as_array()
                    .ok_or_else(|| ChaincodeError::validation("attachments must be a list"))?;
                for item in items {
                    medical.attachments.push(parse_attachment(item, &doctor, at)?);
                }
            }
            other => return Err(ChaincodeError::validation(format!("unknown medical field {other}"))),
        }
    }
    store_patient(ctx, &record)?;
    Ok(Value::Null)
}

fn string_list(field: &str, value: &Value) -> Result<Vec<String>, ChaincodeError> {
    let err = || ChaincodeError::validation(format!("{field} must be a list of non-empty strings"));
    value
        .as_array()
        .ok_or_else(err)?
        .iter()
        .map(|v| match v.as_str() {
            Some(s) if !s.trim().is_empty() => Ok(s.to_owned()),
            _ => Err(err()),
        })
        .collect()
}

fn parse_attachment(item: &Value, doctor: &str, at: crate::time::Timestamp) -> Result<Attachment, ChaincodeError> {
    let field = |name: &str| {
        item.get(name)
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| ChaincodeError::validation(format!("attachment {name} is required")))
    };
    let data = field("data")?;
    base64::engine::general_purpose::STANDARD
        .decode(&data)
        .map_err(|_| ChaincodeError::validation("attachment data must be base64"))?;
    Ok(Attachment {
        name: field("name")?,
        content_type: field("contentType")?,
        data,
        added_by: doctor.to_owned(),
        added_at: at,
    })
}

/// Patients that have granted the calling doctor access, as name summaries.
fn list_granted_patients(ctx: &mut TxContext<'_>) -> Result<Value, ChaincodeError> {
    let me = ctx.caller().subject_id.clone();
    let selector = Selector::all()
        .eq("docType", PATIENT_DOC_TYPE)
        .with("permissionGranted", crate::ledger::query::Condition::Contains(Value::String(me)));
    let views: Vec<AdminView> = ctx
        .query(&selector)
        .into_iter()
        .filter_map(|(_, d)| d.to_typed::<PatientRecord>().ok())
        .map(|r| r.admin_view())
        .collect();
    Ok(to_json(&views))
}
