use std::fmt;

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

use super::registry::{RecordEntry, RegistrationRecord, Registry, RegistryError};
use super::{
    build_request, check_scheme, verify_as, Credential, FormatPolicy, LoginRequest, SchemeError,
    SchemeKind, ServerSecret, SystemParams, Verdict,
};

/// The server-private map `J -> SID`. `attempt` is bumped when a candidate
/// collides with an already issued SID.
pub trait ShadowIdentity: fmt::Debug {
    fn derive(&self, j: &str, attempt: u32, params: &SystemParams) -> u64;
}

/// SIDs are kept below `2^SHADOW_ID_BITS` so that products and small powers
/// of SIDs still fit the 64-bit identity field.
pub const SHADOW_ID_BITS: u32 = 21;

/// Give up after this many collisions in a row.
const MAX_SHADOW_ATTEMPTS: u32 = 4096;

/// `SID = 2 + (H(key || attempt || J) mod (bound - 2))` where `H` is the
/// first eight octets of SHA-256 and `bound = min(p - 1, 2^SHADOW_ID_BITS)`,
/// so the SID always lies in `[2, p - 2]`.
#[derive(Clone)]
pub struct KeyedShadow {
    key: [u8; 16],
}

impl KeyedShadow {
    pub fn new(key: [u8; 16]) -> Self {
        KeyedShadow { key }
    }
}

impl fmt::Debug for KeyedShadow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("KeyedShadow(<redacted>)")
    }
}

impl ShadowIdentity for KeyedShadow {
    fn derive(&self, j: &str, attempt: u32, params: &SystemParams) -> u64 {
        let mut h = Sha256::new();
        h.update(self.key);
        h.update(attempt.to_be_bytes());
        h.update(j.as_bytes());
        let digest = h.finalize();
        let raw = u64::from_be_bytes(digest[..8].try_into().expect("8 octets"));

        let cap = 1u64 << SHADOW_ID_BITS;
        let bound = u64::try_from(&params.order()).map_or(cap, |o| o.min(cap));
        2 + raw % (bound - 2)
    }
}

/// Registers the identity string `J`, issuing `(SID, PW = SID^xs mod p)`.
/// The `J -> SID` row is the shadow table kept only by the server.
pub fn slh_register(
    j: &str,
    secret: &ServerSecret,
    params: &SystemParams,
    registry: &Registry,
    shadow: &dyn ShadowIdentity,
    now: u64,
) -> Result<Credential, SchemeError> {
    if j.is_empty() {
        return Err(SchemeError::EmptyIdentity);
    }
    if registry.contains_slh_j(j) {
        return Err(RegistryError::AlreadyRegistered(format!("SLH identity {j:?}")).into());
    }
    let mut attempt = 0u32;
    let sid = loop {
        if attempt >= MAX_SHADOW_ATTEMPTS {
            return Err(SchemeError::ShadowSpaceExhausted);
        }
        let sid = shadow.derive(j, attempt, params);
        if params.is_degenerate(&BigUint::from(sid)) {
            attempt += 1;
            continue;
        }
        let record = RegistrationRecord {
            entry: RecordEntry::Slh { j: j.to_string(), sid },
            created_at: now,
        };
        match registry.insert(record) {
            Ok(()) => break sid,
            Err(RegistryError::ShadowCollision(_)) => attempt += 1,
            Err(e) => return Err(e.into()),
        }
    };
    Ok(Credential {
        scheme: SchemeKind::Slh,
        id: sid,
        mu: None,
        pw: BigUint::from(sid).modpow(secret.xs(), &params.p),
    })
}

pub fn slh_login(
    cred: &Credential,
    r: &BigUint,
    t_stamp: u64,
    params: &SystemParams,
) -> Result<LoginRequest, SchemeError> {
    check_scheme(SchemeKind::Slh, cred.scheme)?;
    Ok(build_request(cred, &BigUint::from(cred.id), r, t_stamp, params))
}

/// Same algebra as the HL check with SID in place of ID; the strict policy
/// looks the SID up in the shadow table.
pub fn slh_verify(
    req: &LoginRequest,
    secret: &ServerSecret,
    params: &SystemParams,
    t_now: u64,
    policy: FormatPolicy<'_>,
) -> Verdict {
    verify_as(SchemeKind::Slh, req, secret, params, t_now, policy)
}
