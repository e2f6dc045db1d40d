use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Num;

use super::CliError;
use crate::encoding::OneWayFunction;
use crate::modmath::gen_safe_prime;
use crate::schemes::{PolicyKind, SchemeKind, ServerSecret, SystemParams, DEFAULT_DELTA_T};

/// Where the modulus comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrimeSpec {
    Fixed(BigUint),
    /// A safe prime of this many bits, generated from the seed.
    Bits(u32),
}

/// Everything needed to rebuild a deployment bit-for-bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeploymentConfig {
    pub scheme: SchemeKind,
    pub prime: PrimeSpec,
    pub hash: OneWayFunction,
    pub delta_t: u64,
    pub policy: PolicyKind,
    pub seed: u64,
}

impl Default for DeploymentConfig {
    fn default() -> Self {
        DeploymentConfig {
            scheme: SchemeKind::Hl,
            prime: PrimeSpec::Bits(512),
            hash: OneWayFunction::Std,
            delta_t: DEFAULT_DELTA_T,
            policy: PolicyKind::Lax,
            seed: 0,
        }
    }
}

/// The hand-trace modulus. Deployments over it use the fixture secret.
pub const DESK_P: u64 = 23;
pub const DESK_XS: u64 = 7;

/// Parses decimal, or hexadecimal with a `0x` prefix.
pub fn parse_biguint(s: &str) -> Result<BigUint, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => BigUint::from_str_radix(hex, 16),
        None => BigUint::from_str(s),
    };
    parsed.map_err(|_| format!("not a number: {s:?}"))
}

impl DeploymentConfig {
    pub fn params(&self) -> Result<SystemParams, CliError> {
        let p = match &self.prime {
            PrimeSpec::Fixed(p) => p.clone(),
            PrimeSpec::Bits(bits) => {
                gen_safe_prime((*bits).into(), self.seed).map_err(|e| CliError::Config(e.to_string()))?
            }
        };
        SystemParams::new(p, self.hash, self.delta_t).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Replaces a bit count with the concrete prime it produces.
    pub fn resolved(&self) -> Result<(DeploymentConfig, SystemParams), CliError> {
        let params = self.params()?;
        let cfg = DeploymentConfig { prime: PrimeSpec::Fixed(params.p.clone()), ..self.clone() };
        Ok((cfg, params))
    }

    /// `xs = 7` over the hand-trace modulus, otherwise drawn from the seed.
    /// The shadow key always comes from the seed.
    pub fn secret(&self, params: &SystemParams) -> ServerSecret {
        let drawn = ServerSecret::generate(params, self.seed);
        if params.p == BigUint::from(DESK_P) {
            ServerSecret::new(BigUint::from(DESK_XS), *drawn.shadow_key(), params)
                .expect("7 lies in [2, p - 2]")
        } else {
            drawn
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scheme = {}", self.scheme);
        match &self.prime {
            PrimeSpec::Fixed(p) => {
                let _ = writeln!(out, "p = 0x{p:x}");
            }
            PrimeSpec::Bits(b) => {
                let _ = writeln!(out, "bits = {b}");
            }
        }
        let _ = writeln!(out, "hash = {}", self.hash);
        let _ = writeln!(out, "delta_t = {}", self.delta_t);
        let _ = writeln!(out, "policy = {}", self.policy);
        let _ = writeln!(out, "seed = {}", self.seed);
        out
    }

    /// Reads `key = value` lines; `#` starts a comment. Missing keys keep
    /// their defaults.
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut cfg = DeploymentConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| CliError::Config(format!("line {}: {msg}", n + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key = value, got {line:?}")))?;
            let value = value.trim();
            match key.trim() {
                "scheme" => cfg.scheme = value.parse().map_err(|e: crate::schemes::SchemeError| bad(e.to_string()))?,
                "p" => cfg.prime = PrimeSpec::Fixed(parse_biguint(value).map_err(bad)?),
                "bits" => cfg.prime = PrimeSpec::Bits(value.parse().map_err(|_| bad(format!("bad bits {value:?}")))?),
                "hash" => cfg.hash = value.parse().map_err(|e: crate::encoding::EncodingError| bad(e.to_string()))?,
                "delta_t" => cfg.delta_t = value.parse().map_err(|_| bad(format!("bad delta_t {value:?}")))?,
                "policy" => cfg.policy = value.parse().map_err(bad)?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad(format!("bad seed {value:?}")))?,
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        Ok(cfg)
    }
}

/// `xs` and the shadow key, stored apart from the public configuration.
pub fn secret_to_text(secret: &ServerSecret) -> String {
    format!("xs = 0x{:x}\nshadow_key = {}\n", secret.xs(), hex::encode(secret.shadow_key()))
}

pub fn secret_from_text(text: &str, params: &SystemParams) -> Result<ServerSecret, CliError> {
    let mut xs = None;
    let mut key = None;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        match line.split_once('=').map(|(k, v)| (k.trim(), v.trim())) {
            Some(("xs", v)) => xs = Some(parse_biguint(v).map_err(CliError::Config)?),
            Some(("shadow_key", v)) => {
                let bytes = hex::decode(v).map_err(|e| CliError::Config(format!("shadow_key: {e}")))?;
                key = Some(<[u8; 16]>::try_from(bytes).map_err(|_| CliError::Config("shadow_key must be 16 octets".into()))?);
            }
            _ => return Err(CliError::Config(format!("unexpected secret line {line:?}"))),
        }
    }
    match (xs, key) {
        (Some(xs), Some(key)) => ServerSecret::new(xs, key, params).map_err(|e| CliError::Config(e.to_string())),
        _ => Err(CliError::Config("secret file needs xs and shadow_key".into())),
    }
}
