//! The published attacks on the Hwang-Li family, each runnable against any
//! of the three schemes.
//!
//! Credential forgeries (Chan-Cheng, Chang-Hwang I and II) exploit
//! `PW = ID^xs` being multiplicative in `ID`: products and powers of valid
//! `(ID, PW)` pairs are again valid pairs. The masquerade registers a
//! related identity `ID_A^k` and undoes the exponent with `k^-1 mod (p - 1)`.
//! Replay re-sends a captured request unchanged.
//!
//! Against IMP the same arithmetic runs, but the server's password is
//! `f(ID xor mu)^xs`, so the forged or recovered values do not match it.

mod matrix;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use thiserror::Error;

use crate::modmath::{mod_inv, MathError};
use crate::schemes::{
    login, Credential, LoginRequest, PolicyKind, SchemeError, SchemeKind, SystemParams, Verdict,
};

pub use matrix::{
    expected_success, run_attack_matrix, run_matrix_cell, AttackMatrix, HandFixture, MatrixCell, MatrixConfig, DEFAULT_K,
    MATRIX_EPOCH, VICTIM_IDS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttackName {
    ChanCheng,
    ChangHwangPower,
    ChangHwangGroup,
    Masquerade,
    Replay,
}

impl AttackName {
    pub const ALL: [AttackName; 5] = [
        AttackName::ChanCheng,
        AttackName::ChangHwangPower,
        AttackName::ChangHwangGroup,
        AttackName::Masquerade,
        AttackName::Replay,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackName::ChanCheng => "chan_cheng",
            AttackName::ChangHwangPower => "chang_hwang_power",
            AttackName::ChangHwangGroup => "chang_hwang_group",
            AttackName::Masquerade => "masquerade",
            AttackName::Replay => "replay",
        }
    }
}

impl fmt::Display for AttackName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackName {
    type Err = AttackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        AttackName::ALL
            .into_iter()
            .find(|a| a.as_str() == norm)
            .ok_or_else(|| AttackError::UnknownAttack(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("unknown attack {0:?}")]
    UnknownAttack(String),
    #[error("the exponent k must be at least 1")]
    ZeroExponent,
    #[error("k = {k} is not invertible mod p - 1 (gcd = {gcd})")]
    ExponentNotInvertible { k: BigUint, gcd: BigUint },
    #[error("a group forgery needs at least two credentials, got {0}")]
    GroupTooSmall(usize),
    #[error("credentials come from different schemes")]
    MixedSchemes,
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

/// A forged `(identity, password)` pair. `id` is a residue mod `p` and may
/// not fit the 64-bit identity field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForgedPair {
    pub scheme: SchemeKind,
    pub id: BigUint,
    /// Carried over from the attacker's own credential (IMP only).
    pub mu: Option<u64>,
    pub pw: BigUint,
    /// The forged identity is 0, 1 or p - 1 and would be refused at
    /// registration.
    pub degenerate: bool,
}

impl ForgedPair {
    fn new(template: &Credential, id: BigUint, pw: BigUint, params: &SystemParams) -> Self {
        ForgedPair {
            scheme: template.scheme,
            degenerate: params.is_degenerate(&id),
            id,
            mu: template.mu,
            pw,
        }
    }

    /// The forged pair as a card credential, if the identity fits 64 bits.
    pub fn credential(&self) -> Option<Credential> {
        let id = u64::try_from(&self.id).ok()?;
        Some(Credential {
            scheme: self.scheme,
            id,
            mu: self.mu,
            pw: self.pw.clone(),
        })
    }
}

/// Result of one attack against one deployment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackOutcome {
    pub attack: AttackName,
    pub scheme: SchemeKind,
    pub policy: Option<PolicyKind>,
    pub forged_credential: Option<Credential>,
    pub forged_request: Option<LoginRequest>,
    pub recovered_pw: Option<BigUint>,
    pub true_pw: Option<BigUint>,
    pub server_verdict: Option<Verdict>,
    pub succeeded: bool,
    pub note: Option<String>,
}

impl AttackOutcome {
    pub fn new(attack: AttackName, scheme: SchemeKind) -> Self {
        AttackOutcome {
            attack,
            scheme,
            policy: None,
            forged_credential: None,
            forged_request: None,
            recovered_pw: None,
            true_pw: None,
            server_verdict: None,
            succeeded: false,
            note: None,
        }
    }

    /// Password-recovery attacks succeed on an exact match with the victim's
    /// real password; every other attack succeeds when the server accepts.
    pub fn judge(mut self) -> Self {
        self.succeeded = match self.attack {
            AttackName::Masquerade => match (&self.recovered_pw, &self.true_pw) {
                (Some(r), Some(t)) => r == t,
                _ => false,
            },
            _ => self.server_verdict.is_some_and(|v| v.accepted),
        };
        self
    }

    /// Short code for reports: the verdict reason, or the password-recovery
    /// result for the masquerade.
    pub fn reason_code(&self) -> String {
        if self.attack == AttackName::Masquerade {
            return match (&self.recovered_pw, &self.true_pw) {
                (Some(r), Some(t)) if r == t => "PW_RECOVERED".into(),
                (Some(_), Some(_)) => "PW_MISMATCH".into(),
                _ => "NO_RECOVERY".into(),
            };
        }
        match (&self.server_verdict, &self.forged_request) {
            (Some(v), _) => v.reason.to_string(),
            (None, None) => "UNENCODABLE".into(),
            (None, Some(_)) => "NOT_SUBMITTED".into(),
        }
    }
}

/// Chan-Cheng: `(ID_A^2, PW_A^2)`.
pub fn attack_chan_cheng(cred_a: &Credential, params: &SystemParams) -> ForgedPair {
    let p = &params.p;
    let id = (BigUint::from(cred_a.id) * cred_a.id) % p;
    let pw = (&cred_a.pw * &cred_a.pw) % p;
    ForgedPair::new(cred_a, id, pw, params)
}

/// Chang-Hwang attack I: `(ID_A^k, PW_A^k)`. When `ID_A` is a primitive
/// root, `k = 1..p-1` reaches every identity.
pub fn attack_chang_hwang_power(
    cred_a: &Credential,
    k: &BigUint,
    params: &SystemParams,
) -> Result<ForgedPair, AttackError> {
    if k == &BigUint::from(0u32) {
        return Err(AttackError::ZeroExponent);
    }
    let p = &params.p;
    let id = BigUint::from(cred_a.id).modpow(k, p);
    let pw = cred_a.pw.modpow(k, p);
    Ok(ForgedPair::new(cred_a, id, pw, params))
}

/// Chang-Hwang attack II: colluding users multiply their pairs.
pub fn attack_chang_hwang_group(
    creds: &[Credential],
    params: &SystemParams,
) -> Result<ForgedPair, AttackError> {
    if creds.len() < 2 {
        return Err(AttackError::GroupTooSmall(creds.len()));
    }
    if creds.iter().any(|c| c.scheme != creds[0].scheme) {
        return Err(AttackError::MixedSchemes);
    }
    let p = &params.p;
    let (id, pw) = creds.iter().fold((BigUint::one(), BigUint::one()), |(id, pw), c| {
        ((id * c.id) % p, (pw * &c.pw) % p)
    });
    Ok(ForgedPair::new(&creds[0], id, pw, params))
}

/// Builds a login request from a forged pair, or `None` when the forged
/// identity does not fit the identity field.
pub fn forged_login(
    pair: &ForgedPair,
    r: &BigUint,
    t_stamp: u64,
    params: &SystemParams,
) -> Option<(Credential, LoginRequest)> {
    let cred = pair.credential()?;
    let req = login(&cred, r, t_stamp, params);
    Some((cred, req))
}

/// `k^-1 mod (p - 1)`.
pub fn exponent_inverse(k: &BigUint, params: &SystemParams) -> Result<BigUint, AttackError> {
    match mod_inv(k, &params.order()) {
        Ok(inv) => Ok(inv.into_value()),
        Err(MathError::NotInvertible { gcd, .. }) => Err(AttackError::ExponentNotInvertible {
            k: k.clone(),
            gcd,
        }),
        Err(e) => unreachable!("p - 1 >= 4 is a valid modulus: {e}"),
    }
}

/// Masquerade: register `ID_B = target^k mod p` through the genuine
/// registration path, then take `PW_B^(k^-1 mod (p - 1))` as the victim's
/// password. The outcome's `true_pw` is left empty; see
/// [`AttackOutcome::judge`].
pub fn attack_masquerade(
    scheme: SchemeKind,
    target_id: u64,
    k: &BigUint,
    register_oracle: &mut dyn FnMut(u64) -> Result<Credential, SchemeError>,
    params: &SystemParams,
) -> Result<AttackOutcome, AttackError> {
    let g = k.gcd(&params.order());
    if !g.is_one() {
        return Err(AttackError::ExponentNotInvertible { k: k.clone(), gcd: g });
    }
    let k_inv = exponent_inverse(k, params)?;
    let mut outcome = AttackOutcome::new(AttackName::Masquerade, scheme);

    let id_b = BigUint::from(target_id).modpow(k, &params.p);
    let Ok(id_b) = u64::try_from(&id_b) else {
        outcome.note = Some(format!("related identity {id_b:#x} does not fit the identity field"));
        return Ok(outcome);
    };
    let cred_b = match register_oracle(id_b) {
        Ok(c) => c,
        Err(e) => {
            outcome.note = Some(format!("registration of related identity refused: {e}"));
            return Ok(outcome);
        }
    };
    outcome.recovered_pw = Some(cred_b.pw.modpow(&k_inv, &params.p));
    outcome.forged_credential = Some(cred_b);
    Ok(outcome)
}

/// Re-submits `captured` unchanged at `T + replay_delay`.
pub fn attack_replay(
    captured: &LoginRequest,
    replay_delay: u64,
    verify_oracle: &dyn Fn(&LoginRequest, u64) -> Verdict,
) -> AttackOutcome {
    let mut outcome = AttackOutcome::new(AttackName::Replay, captured.scheme);
    let t_now = captured.t_stamp.saturating_add(replay_delay);
    outcome.server_verdict = Some(verify_oracle(captured, t_now));
    outcome.forged_request = Some(captured.clone());
    if replay_delay == 0 {
        outcome.note = Some("replay inside the freshness window is indistinguishable".into());
    }
    outcome.judge()
}

/// Replays `captured` with its timestamp moved forward by `shift` and the
/// proof left unchanged, verified at the new timestamp.
pub fn attack_replay_retimed(
    captured: &LoginRequest,
    shift: u64,
    verify_oracle: &dyn Fn(&LoginRequest, u64) -> Verdict,
) -> AttackOutcome {
    let mut retimed = captured.clone();
    retimed.t_stamp = captured.t_stamp.saturating_add(shift);
    let mut outcome = attack_replay(&retimed, 0, verify_oracle);
    outcome.note = Some(format!("timestamp advanced by {shift}s, proof unchanged"));
    outcome
}
