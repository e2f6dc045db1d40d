use std::io::Write;
use std::net::{Shutdown, SocketAddr, TcpStream, ToSocketAddrs};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::server::{read_frame, IO_TIMEOUT};
use super::{decode_reply, encode_login, Reply, TransportError};
use crate::schemes::{login, Clock, Credential, LoginRequest, SystemParams, Verdict};

fn connect(endpoint: impl ToSocketAddrs) -> Result<TcpStream, TransportError> {
    let mut last = None;
    for addr in endpoint.to_socket_addrs()? {
        match TcpStream::connect_timeout(&addr, IO_TIMEOUT) {
            Ok(s) => return Ok(s),
            Err(e) => last = Some(e),
        }
    }
    Err(last
        .unwrap_or_else(|| std::io::Error::new(std::io::ErrorKind::NotFound, "no address resolved"))
        .into())
}

/// Sends raw octets as one exchange and returns the raw answer.
pub fn send_frame(endpoint: impl ToSocketAddrs, frame: &[u8]) -> Result<Vec<u8>, TransportError> {
    let mut stream = connect(endpoint)?;
    stream.set_read_timeout(Some(IO_TIMEOUT))?;
    stream.set_write_timeout(Some(IO_TIMEOUT))?;
    stream.write_all(frame)?;
    stream.shutdown(Shutdown::Write)?;
    Ok(read_frame(&mut stream)?)
}

/// Sends a prepared request. A server that could not decode it yields
/// [`TransportError::ServerDecodeFailure`], never a verdict.
pub fn send_login(endpoint: impl ToSocketAddrs, req: &LoginRequest) -> Result<Verdict, TransportError> {
    let frame = encode_login(req)?;
    let answer = send_frame(endpoint, &frame)?;
    match decode_reply(&answer)? {
        (Reply::Verdict(v), _) => Ok(v),
        (Reply::DecodeFailure, _) => Err(TransportError::ServerDecodeFailure),
    }
}

/// Plays the card: draws `r` from a ChaCha stream seeded with `r_seed`,
/// stamps the request with `clock.now()` and sends it.
pub fn client_login(
    endpoint: SocketAddr,
    cred: &Credential,
    r_seed: u64,
    clock: &dyn Clock,
    params: &SystemParams,
) -> Result<Verdict, TransportError> {
    let r = params.draw_r(&mut ChaCha8Rng::seed_from_u64(r_seed));
    let req = login(cred, &r, clock.now(), params);
    send_login(endpoint, &req)
}
