use std::io::{Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use super::{decode_login, encode_reply, Reply, TransportError, MAX_FRAME};
use crate::schemes::Deployment;

/// How long a connection may stay silent before it is dropped.
pub(crate) const IO_TIMEOUT: Duration = Duration::from_secs(5);

/// Surplus octets of an oversized frame read and discarded before answering.
const DRAIN_LIMIT: u64 = 1 << 20;

/// A running server. Dropping the handle stops it.
#[derive(Debug)]
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    served: Arc<AtomicU64>,
    acceptor: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Connections answered so far, malformed ones included.
    pub fn served(&self) -> u64 {
        self.served.load(Ordering::SeqCst)
    }

    /// Blocks until the server is stopped from elsewhere (used by `serve`).
    pub fn wait(mut self) {
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop_acceptor();
    }

    fn stop_acceptor(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.acceptor.is_some() {
            self.stop_acceptor();
        }
    }
}

/// Binds `endpoint` and answers each connection on its own thread with the
/// deployment's verdict, taking `t_now` from the deployment clock.
pub fn serve(
    endpoint: impl ToSocketAddrs,
    deployment: Arc<Deployment>,
) -> Result<ServerHandle, TransportError> {
    let listener = TcpListener::bind(endpoint)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let served = Arc::new(AtomicU64::new(0));

    let acceptor = {
        let stop = Arc::clone(&stop);
        let served = Arc::clone(&served);
        thread::spawn(move || {
            for conn in listener.incoming() {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = conn else { continue };
                let dep = Arc::clone(&deployment);
                let served = Arc::clone(&served);
                thread::spawn(move || {
                    // a peer that vanishes mid-exchange only loses its own answer
                    let _ = answer(stream, &dep);
                    served.fetch_add(1, Ordering::SeqCst);
                });
            }
        })
    };
    Ok(ServerHandle { addr, stop, served, acceptor: Some(acceptor) })
}

/// Reads one frame up to EOF, or until more than `MAX_FRAME` octets arrive.
pub(crate) fn read_frame(stream: &mut TcpStream) -> std::io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    stream.take(MAX_FRAME as u64 + 1).read_to_end(&mut buf)?;
    Ok(buf)
}

fn answer(mut stream: TcpStream, dep: &Deployment) -> std::io::Result<()> {
    stream.set_read_timeout(Some(IO_TIMEOUT))?;
    stream.set_write_timeout(Some(IO_TIMEOUT))?;
    let frame = read_frame(&mut stream)?;
    if frame.len() > MAX_FRAME {
        // closing with unread input would reset the connection and lose the reply
        std::io::copy(&mut (&mut stream).take(DRAIN_LIMIT), &mut std::io::sink())?;
    }
    let reply = match decode_login(&frame) {
        Ok(req) => encode_reply(Reply::Verdict(dep.verify(&req)), req.scheme.wire_code()),
        Err(_) => encode_reply(Reply::DecodeFailure, 0),
    };
    stream.write_all(&reply)?;
    stream.flush()?;
    let _ = stream.shutdown(Shutdown::Both);
    Ok(())
}
