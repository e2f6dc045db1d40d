//! The three smart-card login schemes behind one set of types.
//!
//! * **HL** (Hwang-Li): `PW = ID^xs mod p`.
//! * **SLH** (Shen-Lin-Hwang): the server hands out a shadow identity
//!   `SID = Red(J)` and `PW = SID^xs mod p`.
//! * **IMP** (improved): the server draws `mu` and issues
//!   `PW = f(ID xor mu)^xs mod p` for the two-part identity `ID || mu`.
//!
//! All three share the card-side login
//! `C1 = base^r`, `t = f(T xor PW) mod (p - 1)`, `C2 = ID^t * PW^r`
//! and a server check of the form `C2 = C1^xs * ID^t`; they differ only in
//! the base of `C1` and in how the server recomputes `PW`.

mod clock;
mod deployment;
mod hl;
mod imp;
pub mod registry;
mod slh;

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::encoding::{xor_q, OneWayFunction};
use crate::modmath::{is_probable_prime, mod_inv, DEFAULT_MR_ROUNDS, DEFAULT_MR_SEED};

pub use clock::{Clock, ManualClock, SystemClock};
pub use deployment::Deployment;
pub use hl::{hl_login, hl_register, hl_verify};
pub use imp::{imp_login, imp_register, imp_register_seeded, imp_verify};
pub use registry::{registry_load, registry_save, RecordEntry, RegistrationRecord, Registry, RegistryError};
pub use slh::{slh_login, slh_register, slh_verify, KeyedShadow, ShadowIdentity, SHADOW_ID_BITS};

/// Freshness window used when none is configured.
pub const DEFAULT_DELTA_T: u64 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    Hl,
    Slh,
    Imp,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::Hl, SchemeKind::Slh, SchemeKind::Imp];

    pub fn wire_code(self) -> u8 {
        match self {
            SchemeKind::Hl => 1,
            SchemeKind::Slh => 2,
            SchemeKind::Imp => 3,
        }
    }

    pub fn from_wire_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(SchemeKind::Hl),
            2 => Some(SchemeKind::Slh),
            3 => Some(SchemeKind::Imp),
            _ => None,
        }
    }

    pub fn has_mu(self) -> bool {
        self == SchemeKind::Imp
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::Hl => "HL",
            SchemeKind::Slh => "SLH",
            SchemeKind::Imp => "IMP",
        })
    }
}

impl FromStr for SchemeKind {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hl" | "hwang-li" => Ok(SchemeKind::Hl),
            "slh" | "shen-lin-hwang" => Ok(SchemeKind::Slh),
            "imp" | "improved" => Ok(SchemeKind::Imp),
            _ => Err(SchemeError::UnknownScheme(s.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("unknown scheme {0:?}")]
    UnknownScheme(String),
    #[error("p = {0} is not a prime of at least 5")]
    BadPrime(BigUint),
    #[error("freshness window must be positive")]
    ZeroWindow,
    #[error("server secret must lie in [2, p - 2]")]
    SecretOutOfRange,
    #[error("identity {0} is degenerate modulo p (0, 1 or p - 1)")]
    DegenerateIdentity(u64),
    #[error("no free shadow identity left")]
    ShadowSpaceExhausted,
    #[error("identity must not be empty or zero")]
    EmptyIdentity,
    #[error("expected a {expected} credential or request, got {got}")]
    WrongScheme { expected: SchemeKind, got: SchemeKind },
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

/// Public parameters stored on every card plus the server's freshness window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemParams {
    pub p: BigUint,
    pub f: OneWayFunction,
    pub delta_t: u64,
}

impl SystemParams {
    pub fn new(p: BigUint, f: OneWayFunction, delta_t: u64) -> Result<Self, SchemeError> {
        if p < BigUint::from(5u32) || !is_probable_prime(&p, DEFAULT_MR_ROUNDS, DEFAULT_MR_SEED) {
            return Err(SchemeError::BadPrime(p));
        }
        if delta_t == 0 {
            return Err(SchemeError::ZeroWindow);
        }
        Ok(SystemParams { p, f, delta_t })
    }

    /// `p = 23`, identity stub for `f`, 60 s window: small enough to check by hand.
    pub fn desk() -> Self {
        SystemParams {
            p: BigUint::from(23u32),
            f: OneWayFunction::StubIdentity,
            delta_t: DEFAULT_DELTA_T,
        }
    }

    pub fn order(&self) -> BigUint {
        &self.p - 1u32
    }

    /// Residues 0, 1 and p - 1 collapse the exponentiation.
    pub fn is_degenerate(&self, x: &BigUint) -> bool {
        let r = x % &self.p;
        r.is_zero() || r.is_one() || r == self.order()
    }

    /// A fresh login nonce in `[1, p - 2]`.
    pub fn draw_r<R: RngCore + ?Sized>(&self, rng: &mut R) -> BigUint {
        rng.gen_biguint_range(&BigUint::one(), &(&self.p - 1u32))
    }
}

/// The server's long-term secrets: the exponent `xs` and the key behind the
/// shadow-identity map.
#[derive(Clone, PartialEq, Eq)]
pub struct ServerSecret {
    xs: BigUint,
    shadow_key: [u8; 16],
}

impl ServerSecret {
    pub fn new(xs: BigUint, shadow_key: [u8; 16], params: &SystemParams) -> Result<Self, SchemeError> {
        if xs < BigUint::from(2u32) || xs > &params.p - 2u32 {
            return Err(SchemeError::SecretOutOfRange);
        }
        Ok(ServerSecret { xs, shadow_key })
    }

    pub fn generate(params: &SystemParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = rng.gen_biguint_range(&BigUint::from(2u32), &(&params.p - 1u32));
        let mut shadow_key = [0u8; 16];
        rng.fill_bytes(&mut shadow_key);
        ServerSecret { xs, shadow_key }
    }

    pub fn xs(&self) -> &BigUint {
        &self.xs
    }

    pub fn shadow_key(&self) -> &[u8; 16] {
        &self.shadow_key
    }

    pub fn shadow(&self) -> KeyedShadow {
        KeyedShadow::new(self.shadow_key)
    }
}

impl fmt::Debug for ServerSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ServerSecret(<redacted>)")
    }
}

/// What a card holds for one user.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Credential {
    pub scheme: SchemeKind,
    /// ID for HL and IMP, SID for SLH.
    pub id: u64,
    /// Present only for IMP.
    pub mu: Option<u64>,
    pub pw: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LoginRequest {
    pub scheme: SchemeKind,
    pub id: u64,
    pub mu: Option<u64>,
    pub c1: BigUint,
    pub c2: BigUint,
    pub t_stamp: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reason {
    Ok,
    BadFormat,
    StaleTimestamp,
    BadProof,
}

impl Reason {
    pub fn code(self) -> u8 {
        match self {
            Reason::Ok => 0,
            Reason::BadFormat => 1,
            Reason::StaleTimestamp => 2,
            Reason::BadProof => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Reason::Ok),
            1 => Some(Reason::BadFormat),
            2 => Some(Reason::StaleTimestamp),
            3 => Some(Reason::BadProof),
            _ => None,
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reason::Ok => "OK",
            Reason::BadFormat => "BAD_FORMAT",
            Reason::StaleTimestamp => "STALE_TIMESTAMP",
            Reason::BadProof => "BAD_PROOF",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Verdict {
    pub accepted: bool,
    pub reason: Reason,
}

impl Verdict {
    pub const OK: Verdict = Verdict { accepted: true, reason: Reason::Ok };

    pub fn reject(reason: Reason) -> Self {
        Verdict { accepted: reason == Reason::Ok, reason }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let word = if self.accepted { "accepted" } else { "rejected" };
        write!(f, "{word} ({})", self.reason)
    }
}

/// The identity-format check run first on every request.
#[derive(Debug, Clone, Copy)]
pub enum FormatPolicy<'a> {
    /// Only the request's shape is checked (scheme tag, presence of `mu`).
    Lax,
    /// The identity must belong to a registered user.
    Strict(&'a Registry),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Lax,
    Strict,
}

impl PolicyKind {
    pub fn with<'a>(self, registry: &'a Registry) -> FormatPolicy<'a> {
        match self {
            PolicyKind::Lax => FormatPolicy::Lax,
            PolicyKind::Strict => FormatPolicy::Strict(registry),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Lax => "lax",
            PolicyKind::Strict => "strict",
        })
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lax" => Ok(PolicyKind::Lax),
            "strict" => Ok(PolicyKind::Strict),
            _ => Err(format!("unknown format policy {s:?}")),
        }
    }
}

/// How the server treats the exponent `f(T xor PW)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentMode {
    /// Reduced mod `p - 1`, matching the card.
    Reduced,
    /// Used as-is.
    Full,
}

/// `f(T xor PW)`, optionally reduced into the exponent group.
pub fn login_exponent(t_stamp: u64, pw: &BigUint, params: &SystemParams, mode: ExponentMode) -> BigUint {
    let raw = params.f.apply(&xor_q(&BigUint::from(t_stamp), pw));
    match mode {
        ExponentMode::Reduced => raw % params.order(),
        ExponentMode::Full => raw,
    }
}

/// Card-side login shared by all schemes; only the base of `C1` differs.
pub(crate) fn build_request(
    cred: &Credential,
    c1_base: &BigUint,
    r: &BigUint,
    t_stamp: u64,
    params: &SystemParams,
) -> LoginRequest {
    let p = &params.p;
    let c1 = c1_base.modpow(r, p);
    let t = login_exponent(t_stamp, &cred.pw, params, ExponentMode::Reduced);
    let m = BigUint::from(cred.id).modpow(&t, p);
    let c2 = (m * cred.pw.modpow(r, p)) % p;
    LoginRequest {
        scheme: cred.scheme,
        id: cred.id,
        mu: cred.mu,
        c1,
        c2,
        t_stamp,
    }
}

/// The password the server derives from a request's public fields and `xs`.
pub fn server_password(req: &LoginRequest, secret: &ServerSecret, params: &SystemParams) -> BigUint {
    let p = &params.p;
    match req.scheme {
        SchemeKind::Hl | SchemeKind::Slh => BigUint::from(req.id).modpow(&secret.xs, p),
        SchemeKind::Imp => {
            let m = imp::hashed_identity(req.id, req.mu.unwrap_or(0), params);
            m.modpow(&secret.xs, p)
        }
    }
}

/// The final equation check, without the format or freshness steps.
///
/// HL and SLH divide: `C2 * (C1^xs)^-1 == ID^t`. IMP multiplies:
/// `C2 == C1^xs * ID^t`.
pub fn proof_holds(req: &LoginRequest, secret: &ServerSecret, params: &SystemParams, mode: ExponentMode) -> bool {
    let p = &params.p;
    if req.c1 >= *p || req.c2 >= *p {
        return false;
    }
    let pw_server = server_password(req, secret, params);
    let t = login_exponent(req.t_stamp, &pw_server, params, mode);
    let rhs = BigUint::from(req.id).modpow(&t, p);
    let c1_xs = req.c1.modpow(&secret.xs, p);
    match req.scheme {
        SchemeKind::Hl | SchemeKind::Slh => match mod_inv(&c1_xs, p) {
            Ok(inv) => (&req.c2 * inv.value()) % p == rhs,
            Err(_) => false,
        },
        SchemeKind::Imp => (c1_xs * rhs) % p == req.c2,
    }
}

/// `0 <= t_now - T <= delta_t`; requests from the future are stale too.
pub fn is_fresh(t_stamp: u64, t_now: u64, delta_t: u64) -> bool {
    t_now >= t_stamp && t_now - t_stamp <= delta_t
}

fn format_ok(req: &LoginRequest, expected: SchemeKind, policy: FormatPolicy<'_>) -> bool {
    if req.scheme != expected || req.mu.is_some() != expected.has_mu() {
        return false;
    }
    match policy {
        FormatPolicy::Lax => true,
        FormatPolicy::Strict(registry) => registry.knows(req.scheme, req.id, req.mu),
    }
}

pub(crate) fn verify_as(
    expected: SchemeKind,
    req: &LoginRequest,
    secret: &ServerSecret,
    params: &SystemParams,
    t_now: u64,
    policy: FormatPolicy<'_>,
) -> Verdict {
    if !format_ok(req, expected, policy) {
        return Verdict::reject(Reason::BadFormat);
    }
    if !is_fresh(req.t_stamp, t_now, params.delta_t) {
        return Verdict::reject(Reason::StaleTimestamp);
    }
    if !proof_holds(req, secret, params, ExponentMode::Reduced) {
        return Verdict::reject(Reason::BadProof);
    }
    Verdict::OK
}

/// Card-side login for whichever scheme issued `cred`.
pub fn login(cred: &Credential, r: &BigUint, t_stamp: u64, params: &SystemParams) -> LoginRequest {
    let base = match cred.scheme {
        SchemeKind::Hl | SchemeKind::Slh => BigUint::from(cred.id),
        SchemeKind::Imp => imp::hashed_identity(cred.id, cred.mu.unwrap_or(0), params),
    };
    build_request(cred, &base, r, t_stamp, params)
}

/// Server-side verification for the scheme named in the request.
pub fn verify(
    req: &LoginRequest,
    secret: &ServerSecret,
    params: &SystemParams,
    t_now: u64,
    policy: FormatPolicy<'_>,
) -> Verdict {
    verify_as(req.scheme, req, secret, params, t_now, policy)
}

fn check_scheme(expected: SchemeKind, got: SchemeKind) -> Result<(), SchemeError> {
    if expected != got {
        return Err(SchemeError::WrongScheme { expected, got });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_names() {
        assert_eq!("hwang-li".parse::<SchemeKind>().unwrap(), SchemeKind::Hl);
        assert_eq!("IMP".parse::<SchemeKind>().unwrap(), SchemeKind::Imp);
        assert_eq!("shen-lin-hwang".parse::<SchemeKind>().unwrap(), SchemeKind::Slh);
        assert!("rsa".parse::<SchemeKind>().is_err());
        for s in SchemeKind::ALL {
            assert_eq!(SchemeKind::from_wire_code(s.wire_code()), Some(s));
        }
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(BigUint::from(22u32), OneWayFunction::Std, 60).is_err());
        assert!(SystemParams::new(BigUint::from(23u32), OneWayFunction::Std, 0).is_err());
        assert_eq!(
            SystemParams::new(BigUint::from(23u32), OneWayFunction::StubIdentity, 60).unwrap(),
            SystemParams::desk()
        );
    }

    #[test]
    fn secret_range() {
        let params = SystemParams::desk();
        assert!(ServerSecret::new(BigUint::from(1u32), [0; 16], &params).is_err());
        assert!(ServerSecret::new(BigUint::from(22u32), [0; 16], &params).is_err());
        assert!(ServerSecret::new(BigUint::from(21u32), [0; 16], &params).is_ok());
        for seed in 0..200 {
            let s = ServerSecret::generate(&params, seed);
            assert!(*s.xs() >= BigUint::from(2u32) && *s.xs() <= BigUint::from(21u32));
        }
        assert_eq!(format!("{:?}", ServerSecret::generate(&params, 1)), "ServerSecret(<redacted>)");
    }

    #[test]
    fn freshness_window() {
        assert!(is_fresh(9, 9, 60));
        assert!(is_fresh(9, 69, 60));
        assert!(!is_fresh(9, 70, 60));
        assert!(!is_fresh(10, 9, 60));
    }

    #[test]
    fn draw_r_stays_in_range() {
        let params = SystemParams::desk();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let r = params.draw_r(&mut rng);
            assert!(r >= BigUint::one() && r <= BigUint::from(21u32));
        }
    }

    #[test]
    fn reason_codes() {
        for r in [Reason::Ok, Reason::BadFormat, Reason::StaleTimestamp, Reason::BadProof] {
            assert_eq!(Reason::from_code(r.code()), Some(r));
        }
        assert_eq!(Reason::from_code(255), None);
        assert!(Verdict::reject(Reason::Ok).accepted);
        assert!(!Verdict::reject(Reason::BadProof).accepted);
    }
}
