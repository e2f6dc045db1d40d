//! Byte-stream transport for login requests and verdicts.
//!
//! Every frame starts with a 7-octet header: the magic `RUAS`, the version,
//! the kind (1 = LOGIN, 2 = VERDICT) and the scheme code. A LOGIN payload is
//! `id` (8 octets), `mu` (8 octets, IMP only), `c1` and `c2` (each a 4-octet
//! big-endian length followed by the minimal big-endian magnitude) and `T`
//! (8 octets). A VERDICT payload is one accepted octet and one reason octet.
//!
//! Connections carry exactly one exchange: the client writes a frame and
//! half-closes, the server answers with a VERDICT and closes.

mod client;
mod server;
mod tap;

use num_bigint::BigUint;
use thiserror::Error;

use crate::schemes::{LoginRequest, Reason, SchemeError, SchemeKind, Verdict};

pub use client::{client_login, send_frame, send_login};
pub use server::{serve, ServerHandle};
pub use tap::{tap, TapEntry, TapHandle, TapLog};

pub const MAGIC: [u8; 4] = *b"RUAS";
pub const VERSION: u8 = 1;
pub const KIND_LOGIN: u8 = 1;
pub const KIND_VERDICT: u8 = 2;
/// Largest frame either side will produce or accept.
pub const MAX_FRAME: usize = 4096;
/// Reason octet sent when the server could not decode the request.
pub const DECODE_FAILURE: u8 = 255;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("frame of {0} octets exceeds the {MAX_FRAME}-octet limit")]
    TooLong(usize),
    #[error("frame ends inside the {0} field")]
    Truncated(&'static str),
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown message kind {0}")]
    BadKind(u8),
    #[error("expected message kind {expected}, got {got}")]
    WrongKind { expected: u8, got: u8 },
    #[error("unknown scheme code {0}")]
    BadScheme(u8),
    #[error("{field} declares {len} octets, more than the frame can hold")]
    LengthOverflow { field: &'static str, len: u32 },
    #[error("{0} magnitude has a leading zero octet")]
    NonCanonical(&'static str),
    #[error("{0} trailing octets after the last field")]
    Trailing(usize),
    #[error("accepted flag must be 0 or 1, got {0}")]
    BadFlag(u8),
    #[error("unknown reason code {0}")]
    BadReason(u8),
    #[error("accepted flag {accepted} contradicts reason code {reason}")]
    InconsistentVerdict { accepted: u8, reason: u8 },
    #[error("{0} requests must carry mu exactly when the scheme is IMP")]
    MuMismatch(SchemeKind),
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("wire: {0}")]
    Wire(#[from] WireError),
    #[error("server could not decode the request")]
    ServerDecodeFailure,
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

/// What a VERDICT frame carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reply {
    Verdict(Verdict),
    DecodeFailure,
}

fn header(kind: u8, scheme_code: u8) -> Vec<u8> {
    let mut out = Vec::with_capacity(64);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&[VERSION, kind, scheme_code]);
    out
}

fn put_magnitude(out: &mut Vec<u8>, x: &BigUint) {
    let bytes = if x.bits() == 0 { Vec::new() } else { x.to_bytes_be() };
    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(&bytes);
}

pub fn encode_login(req: &LoginRequest) -> Result<Vec<u8>, WireError> {
    if req.mu.is_some() != req.scheme.has_mu() {
        return Err(WireError::MuMismatch(req.scheme));
    }
    let mut out = header(KIND_LOGIN, req.scheme.wire_code());
    out.extend_from_slice(&req.id.to_be_bytes());
    if let Some(mu) = req.mu {
        out.extend_from_slice(&mu.to_be_bytes());
    }
    put_magnitude(&mut out, &req.c1);
    put_magnitude(&mut out, &req.c2);
    out.extend_from_slice(&req.t_stamp.to_be_bytes());
    if out.len() > MAX_FRAME {
        return Err(WireError::TooLong(out.len()));
    }
    Ok(out)
}

/// Cursor over a frame body that reports which field ran short.
struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, field: &'static str) -> Result<&'a [u8], WireError> {
        if self.buf.len() < n {
            return Err(WireError::Truncated(field));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u8(&mut self, field: &'static str) -> Result<u8, WireError> {
        Ok(self.take(1, field)?[0])
    }

    fn u64(&mut self, field: &'static str) -> Result<u64, WireError> {
        let bytes = self.take(8, field)?;
        Ok(u64::from_be_bytes(bytes.try_into().expect("8 octets")))
    }

    fn magnitude(&mut self, field: &'static str) -> Result<BigUint, WireError> {
        let len_bytes = self.take(4, field)?;
        let len = u32::from_be_bytes(len_bytes.try_into().expect("4 octets"));
        if len as usize > MAX_FRAME {
            return Err(WireError::LengthOverflow { field, len });
        }
        let bytes = self.take(len as usize, field)?;
        if bytes.first() == Some(&0) {
            return Err(WireError::NonCanonical(field));
        }
        Ok(BigUint::from_bytes_be(bytes))
    }

    fn finish(self) -> Result<(), WireError> {
        match self.buf.len() {
            0 => Ok(()),
            n => Err(WireError::Trailing(n)),
        }
    }
}

/// Checks the header and returns the kind, the raw scheme octet and the body.
fn read_header(bytes: &[u8]) -> Result<(u8, u8, Reader<'_>), WireError> {
    if bytes.len() > MAX_FRAME {
        return Err(WireError::TooLong(bytes.len()));
    }
    let mut r = Reader { buf: bytes };
    let magic: [u8; 4] = r.take(4, "magic")?.try_into().expect("4 octets");
    if magic != MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    let version = r.u8("version")?;
    if version != VERSION {
        return Err(WireError::BadVersion(version));
    }
    let kind = r.u8("kind")?;
    if kind != KIND_LOGIN && kind != KIND_VERDICT {
        return Err(WireError::BadKind(kind));
    }
    let scheme = r.u8("scheme")?;
    Ok((kind, scheme, r))
}

pub fn decode_login(bytes: &[u8]) -> Result<LoginRequest, WireError> {
    let (kind, code, mut r) = read_header(bytes)?;
    if kind != KIND_LOGIN {
        return Err(WireError::WrongKind { expected: KIND_LOGIN, got: kind });
    }
    let scheme = SchemeKind::from_wire_code(code).ok_or(WireError::BadScheme(code))?;
    let id = r.u64("id")?;
    let mu = if scheme.has_mu() { Some(r.u64("mu")?) } else { None };
    let c1 = r.magnitude("c1")?;
    let c2 = r.magnitude("c2")?;
    let t_stamp = r.u64("timestamp")?;
    r.finish()?;
    Ok(LoginRequest { scheme, id, mu, c1, c2, t_stamp })
}

/// `scheme_code` echoes the request's scheme, or 0 when it was unreadable.
pub fn encode_reply(reply: Reply, scheme_code: u8) -> Vec<u8> {
    let mut out = header(KIND_VERDICT, scheme_code);
    match reply {
        Reply::Verdict(v) => out.extend_from_slice(&[u8::from(v.accepted), v.reason.code()]),
        Reply::DecodeFailure => out.extend_from_slice(&[0, DECODE_FAILURE]),
    }
    out
}

/// Returns the reply and the echoed scheme octet.
pub fn decode_reply(bytes: &[u8]) -> Result<(Reply, u8), WireError> {
    let (kind, code, mut r) = read_header(bytes)?;
    if kind != KIND_VERDICT {
        return Err(WireError::WrongKind { expected: KIND_VERDICT, got: kind });
    }
    if code != 0 && SchemeKind::from_wire_code(code).is_none() {
        return Err(WireError::BadScheme(code));
    }
    let accepted = r.u8("accepted")?;
    let reason = r.u8("reason")?;
    r.finish()?;
    if accepted > 1 {
        return Err(WireError::BadFlag(accepted));
    }
    if reason == DECODE_FAILURE {
        return match accepted {
            0 => Ok((Reply::DecodeFailure, code)),
            _ => Err(WireError::InconsistentVerdict { accepted, reason }),
        };
    }
    let parsed = Reason::from_code(reason).ok_or(WireError::BadReason(reason))?;
    if (accepted == 1) != (parsed == Reason::Ok) {
        return Err(WireError::InconsistentVerdict { accepted, reason });
    }
    Ok((Reply::Verdict(Verdict::reject(parsed)), code))
}
