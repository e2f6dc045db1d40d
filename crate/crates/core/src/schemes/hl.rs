use num_bigint::BigUint;

use super::registry::{RecordEntry, RegistrationRecord, Registry};
use super::{
    build_request, check_scheme, verify_as, Credential, FormatPolicy, LoginRequest, SchemeError,
    SchemeKind, ServerSecret, SystemParams, Verdict,
};

/// Issues `PW = ID^xs mod p` over the trusted registration channel.
pub fn hl_register(
    id: u64,
    secret: &ServerSecret,
    params: &SystemParams,
    registry: &Registry,
    now: u64,
) -> Result<Credential, SchemeError> {
    let id_big = BigUint::from(id);
    if params.is_degenerate(&id_big) {
        return Err(SchemeError::DegenerateIdentity(id));
    }
    registry.insert(RegistrationRecord {
        entry: RecordEntry::Hl { id },
        created_at: now,
    })?;
    Ok(Credential {
        scheme: SchemeKind::Hl,
        id,
        mu: None,
        pw: id_big.modpow(secret.xs(), &params.p),
    })
}

/// `C1 = ID^r`, `C2 = ID^t * PW^r` with `t = f(T xor PW) mod (p - 1)`.
pub fn hl_login(
    cred: &Credential,
    r: &BigUint,
    t_stamp: u64,
    params: &SystemParams,
) -> Result<LoginRequest, SchemeError> {
    check_scheme(SchemeKind::Hl, cred.scheme)?;
    Ok(build_request(cred, &BigUint::from(cred.id), r, t_stamp, params))
}

/// Format, freshness, then `C2 * (C1^xs)^-1 == ID^f(T xor PW)` with `PW`
/// recomputed from the identity.
pub fn hl_verify(
    req: &LoginRequest,
    secret: &ServerSecret,
    params: &SystemParams,
    t_now: u64,
    policy: FormatPolicy<'_>,
) -> Verdict {
    verify_as(SchemeKind::Hl, req, secret, params, t_now, policy)
}
