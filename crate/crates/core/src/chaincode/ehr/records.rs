use serde::{Deserialize, Serialize};

use crate::crypto::Digest;
use crate::time::Timestamp;

pub const PATIENT_DOC_TYPE: &str = "patient";
pub const DOCTOR_DOC_TYPE: &str = "doctor";

/// World-state key prefix for doctor directory entries.
pub const DOCTOR_KEY_PREFIX: &str = "doctor:";

pub fn doctor_key(doctor_id: &str) -> String {
    format!("{DOCTOR_KEY_PREFIX}{doctor_id}")
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PersonalDetails {
    pub first_name: String,
    pub last_name: String,
    #[serde(default)]
    pub date_of_birth: String,
    #[serde(default)]
    pub phone: String,
    #[serde(default)]
    pub address: String,
    #[serde(default)]
    pub emergency_contact: String,
}

impl PersonalDetails {
    pub const FIELDS: [&'static str; 6] = [
        "firstName",
        "lastName",
        "dateOfBirth",
        "phone",
        "address",
        "emergencyContact",
    ];

    pub(crate) fn field_mut(&mut self, name: &str) -> Option<&mut String> {
        Some(match name {
            "firstName" => &mut self.first_name,
            "lastName" => &mut self.last_name,
            "dateOfBirth" => &mut self.date_of_birth,
            "phone" => &mut self.phone,
            "address" => &mut self.address,
            "emergencyContact" => &mut self.emergency_contact,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Credentials {
    pub password_hash: Digest,
    /// Hex-encoded salt chosen by the client.
    pub salt: String,
}

/// A medical entry attributed to the doctor who recorded it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatedEntry {
    pub text: String,
    pub recorded_by: String,
    pub recorded_at: Timestamp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Attachment {
    pub name: String,
    pub content_type: String,
    /// Base64 (standard alphabet) file content.
    pub data: String,
    pub added_by: String,
    pub added_at: Timestamp,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MedicalSection {
    pub blood_group: String,
    pub allergies: Vec<String>,
    pub diagnoses: Vec<DatedEntry>,
    pub medications: Vec<DatedEntry>,
    pub treatment_notes: Vec<DatedEntry>,
    #[serde(default)]
    pub attachments: Vec<Attachment>,
}

/// The patient document stored under its patient id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PatientRecord {
    pub patient_id: String,
    pub doc_type: String,
    pub personal: PersonalDetails,
    pub credentials: Credentials,
    pub medical: MedicalSection,
    pub permission_granted: Vec<String>,
    pub created_by: String,
    pub created_at: Timestamp,
}

impl PatientRecord {
    pub fn admin_view(&self) -> AdminView {
        AdminView {
            patient_id: self.patient_id.clone(),
            first_name: self.personal.first_name.clone(),
            last_name: self.personal.last_name.clone(),
        }
    }

    pub fn doctor_view(&self) -> DoctorView {
        DoctorView {
            patient_id: self.patient_id.clone(),
            first_name: self.personal.first_name.clone(),
            last_name: self.personal.last_name.clone(),
            medical: self.medical.clone(),
        }
    }

    pub fn full_view(&self) -> PatientFullView {
        PatientFullView {
            patient_id: self.patient_id.clone(),
            doc_type: self.doc_type.clone(),
            personal: self.personal.clone(),
            medical: self.medical.clone(),
            permission_granted: self.permission_granted.clone(),
            created_by: self.created_by.clone(),
            created_at: self.created_at,
        }
    }
}

/// Directory entry for an enrolled doctor. Credentials never leave the
/// chaincode.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DoctorEntry {
    pub doctor_id: String,
    pub doc_type: String,
    pub display_name: String,
    pub department: String,
    pub credentials: Credentials,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DoctorSummary {
    pub doctor_id: String,
    pub display_name: String,
    pub department: String,
}

impl DoctorEntry {
    pub fn summary(&self) -> DoctorSummary {
        DoctorSummary {
            doctor_id: self.doctor_id.clone(),
            display_name: self.display_name.clone(),
            department: self.department.clone(),
        }
    }
}

/// Names only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AdminView {
    pub patient_id: String,
    pub first_name: String,
    pub last_name: String,
}

/// Names plus the medical section; no credentials, no permission list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DoctorView {
    pub patient_id: String,
    pub first_name: String,
    pub last_name: String,
    pub medical: MedicalSection,
}

/// The whole record except credentials.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PatientFullView {
    pub patient_id: String,
    pub doc_type: String,
    pub personal: PersonalDetails,
    pub medical: MedicalSection,
    pub permission_granted: Vec<String>,
    pub created_by: String,
    pub created_at: Timestamp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PatientView {
    Full(PatientFullView),
    Doctor(DoctorView),
    Admin(AdminView),
}
