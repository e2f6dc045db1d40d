use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::registry::{RecordEntry, RegistrationRecord, Registry, RegistryError};
use super::{
    build_request, check_scheme, verify_as, Credential, FormatPolicy, LoginRequest, SchemeError,
    SchemeKind, ServerSecret, SystemParams, Verdict,
};
use crate::encoding::xor_q;

/// `m = f(ID xor mu) mod p`, the base of both `PW` and `C1`.
pub(crate) fn hashed_identity(id: u64, mu: u64, params: &SystemParams) -> BigUint {
    let x = xor_q(&BigUint::from(id), &BigUint::from(mu));
    params.f.apply_mod(&x, &params.p)
}

/// Draws `mu` from `rng` until `m = f(ID xor mu) mod p` avoids 0, 1 and
/// `p - 1`, then issues `PW = m^xs mod p` for the identity `ID || mu`.
pub fn imp_register(
    id: u64,
    secret: &ServerSecret,
    params: &SystemParams,
    registry: &Registry,
    rng: &mut dyn RngCore,
    now: u64,
) -> Result<Credential, SchemeError> {
    if id == 0 {
        return Err(SchemeError::EmptyIdentity);
    }
    if registry.contains_imp_id(id) {
        return Err(RegistryError::AlreadyRegistered(format!("IMP identity {id:#x}")).into());
    }
    let order = params.order();
    let (mu, m) = loop {
        let mu = rng.next_u64();
        let m = hashed_identity(id, mu, params);
        if !(m.is_zero() || m.is_one() || m == order) {
            break (mu, m);
        }
    };
    registry.insert(RegistrationRecord {
        entry: RecordEntry::Imp { id, mu },
        created_at: now,
    })?;
    Ok(Credential {
        scheme: SchemeKind::Imp,
        id,
        mu: Some(mu),
        pw: m.modpow(secret.xs(), &params.p),
    })
}

/// [`imp_register`] with `mu` drawn from a ChaCha stream seeded by `seed`.
pub fn imp_register_seeded(
    id: u64,
    secret: &ServerSecret,
    params: &SystemParams,
    registry: &Registry,
    seed: u64,
    now: u64,
) -> Result<Credential, SchemeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    imp_register(id, secret, params, registry, &mut rng, now)
}

/// `C1 = f(ID xor mu)^r`; `M = ID^t` uses the bare `ID`, not `ID || mu`.
pub fn imp_login(
    cred: &Credential,
    r: &BigUint,
    t_stamp: u64,
    params: &SystemParams,
) -> Result<LoginRequest, SchemeError> {
    check_scheme(SchemeKind::Imp, cred.scheme)?;
    let base = hashed_identity(cred.id, cred.mu.unwrap_or(0), params);
    Ok(build_request(cred, &base, r, t_stamp, params))
}

/// Format of `ID || mu`, freshness, then `C2 == C1^xs * ID^f(T xor PW)` with
/// `PW = f(ID xor mu)^xs` recomputed from the request.
pub fn imp_verify(
    req: &LoginRequest,
    secret: &ServerSecret,
    params: &SystemParams,
    t_now: u64,
    policy: FormatPolicy<'_>,
) -> Verdict {
    verify_as(SchemeKind::Imp, req, secret, params, t_now, policy)
}
