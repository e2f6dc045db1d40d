//! Card file: one line `v1|<scheme>|<id-hex>|<mu-hex-or-empty>|<pw-hex>`.

use num_bigint::BigUint;
use num_traits::Num;

use super::CliError;
use crate::schemes::{Credential, SchemeKind};

pub fn card_to_text(cred: &Credential) -> String {
    let mu = cred.mu.map(|m| format!("{m:016x}")).unwrap_or_default();
    format!("v1|{}|{:016x}|{mu}|{:x}\n", cred.scheme, cred.id, cred.pw)
}

pub fn card_from_text(text: &str) -> Result<Credential, CliError> {
    let bad = |msg: &str| CliError::Config(format!("card: {msg}"));
    let fields: Vec<&str> = text.trim().split('|').collect();
    let [version, scheme, id, mu, pw] = fields[..] else {
        return Err(bad("expected five |-separated fields"));
    };
    if version != "v1" {
        return Err(bad("unsupported version"));
    }
    let scheme: SchemeKind = scheme.parse().map_err(|_| bad("unknown scheme"))?;
    let id = u64::from_str_radix(id, 16).map_err(|_| bad("id is not hex"))?;
    let mu = match mu {
        "" => None,
        m => Some(u64::from_str_radix(m, 16).map_err(|_| bad("mu is not hex"))?),
    };
    if mu.is_some() != scheme.has_mu() {
        return Err(bad("mu must be present exactly for IMP"));
    }
    let pw = BigUint::from_str_radix(pw, 16).map_err(|_| bad("pw is not hex"))?;
    Ok(Credential { scheme, id, mu, pw })
}
