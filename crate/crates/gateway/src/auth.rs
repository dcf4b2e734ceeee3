use std::sync::Arc;

use axum::extract::FromRequestParts;
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use ehr_core::{Identity, Network, OrgId, Role, SigningIdentity};
use jsonwebtoken::{Algorithm, DecodingKey, EncodingKey, Header, Validation};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::AppState;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claims {
    pub sub: String,
    pub role: Role,
    pub org: OrgId,
    pub iat: u64,
    pub exp: u64,
}

/// HMAC key for session tokens. Tokens do not survive a restart.
pub struct TokenKeys {
    encoding: EncodingKey,
    decoding: DecodingKey,
    lifetime_secs: u64,
}

impl TokenKeys {
    pub fn new(secret: &[u8], lifetime_secs: u64) -> Self {
        TokenKeys {
            encoding: EncodingKey::from_secret(secret),
            decoding: DecodingKey::from_secret(secret),
            lifetime_secs,
        }
    }

    pub fn lifetime_secs(&self) -> u64 {
        self.lifetime_secs
    }

    pub fn issue(&self, sub: &str, role: Role, org: OrgId, now_secs: u64) -> (String, Claims) {
        let claims = Claims {
            sub: sub.to_owned(),
            role,
            org,
            iat: now_secs,
            exp: now_secs + self.lifetime_secs,
        };
        let token = jsonwebtoken::encode(&Header::new(Algorithm::HS256), &claims, &self.encoding)
            .expect("HS256 encoding cannot fail");
        (token, claims)
    }

    /// Checks the signature, then expiry against the injected clock.
    pub fn verify(&self, token: &str, now_secs: u64) -> Result<Claims, ApiError> {
        let mut validation = Validation::new(Algorithm::HS256);
        validation.validate_exp = false;
        validation.required_spec_claims.clear();
        let data = jsonwebtoken::decode::<Claims>(token, &self.decoding, &validation)
            .map_err(|_| ApiError::unauthorized("invalid token"))?;
        if now_secs >= data.claims.exp {
            return Err(ApiError::unauthorized("token expired"));
        }
        Ok(data.claims)
    }
}

/// An authenticated caller.
#[derive(Clone, Debug)]
pub struct Auth {
    pub claims: Claims,
}

impl Auth {
    pub fn subject(&self) -> &str {
        &self.claims.sub
    }

    /// The route-level role gate, applied before any ledger access.
    pub fn require(&self, role: Role) -> Result<(), ApiError> {
        if self.claims.role == role {
            Ok(())
        } else {
            Err(ApiError::forbidden(format!("this route requires the {role} role")))
        }
    }

    /// A patient route on `patient_id` must be the patient's own.
    pub fn require_self(&self, patient_id: &str) -> Result<(), ApiError> {
        self.require(Role::Patient)?;
        if self.claims.sub == patient_id {
            Ok(())
        } else {
            Err(ApiError::forbidden("patients may only act on their own record"))
        }
    }

    /// The wallet identity behind the token. The token's role and org must
    /// still be those of the enrolled certificate.
    pub fn signer(&self, network: &Network) -> Result<SigningIdentity, ApiError> {
        let signer = network
            .signer(&self.claims.sub)
            .ok_or_else(|| ApiError::unauthorized("identity is no longer enrolled"))?;
        let cert = signer.certificate();
        if cert.role != self.claims.role || cert.org != self.claims.org {
            return Err(ApiError::unauthorized("token does not match the enrolled certificate"));
        }
        Ok(signer)
    }

    /// The caller's current membership identity.
    pub fn identity(&self, network: &Network) -> Result<Identity, ApiError> {
        let signer = self.signer(network)?;
        network
            .membership()
            .validate(signer.certificate(), network.clock().now())
            .map_err(|e| ApiError::unauthorized(e.to_string()))
    }
}

impl FromRequestParts<Arc<AppState>> for Auth {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Arc<AppState>) -> Result<Self, Self::Rejection> {
        let header = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .ok_or_else(|| ApiError::unauthorized("missing bearer token"))?;
        let token = header
            .strip_prefix("Bearer ")
            .ok_or_else(|| ApiError::unauthorized("missing bearer token"))?;
        let claims = state.tokens.verify(token.trim(), state.network.clock().now().as_secs())?;
        Ok(Auth { claims })
    }
}
