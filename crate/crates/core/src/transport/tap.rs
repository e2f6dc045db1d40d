use std::io::Write;
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use super::server::{read_frame, IO_TIMEOUT};
use super::{decode_login, send_frame, TransportError};
use crate::schemes::{Clock, LoginRequest};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TapEntry {
    Login { request: LoginRequest, at: u64 },
    Opaque { bytes: Vec<u8>, at: u64 },
}

/// Append-only record of what crossed the wire towards the server.
#[derive(Debug, Default)]
pub struct TapLog {
    entries: Mutex<Vec<TapEntry>>,
}

impl TapLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, frame: &[u8], at: u64) {
        let entry = match decode_login(frame) {
            Ok(request) => TapEntry::Login { request, at },
            Err(_) => TapEntry::Opaque { bytes: frame.to_vec(), at },
        };
        self.entries.lock().expect("tap log lock poisoned").push(entry);
    }

    pub fn entries(&self) -> Vec<TapEntry> {
        self.entries.lock().expect("tap log lock poisoned").clone()
    }

    pub fn logins(&self) -> Vec<LoginRequest> {
        self.entries()
            .into_iter()
            .filter_map(|e| match e {
                TapEntry::Login { request, .. } => Some(request),
                TapEntry::Opaque { .. } => None,
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("tap log lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A running forwarding proxy. Dropping the handle stops it.
#[derive(Debug)]
pub struct TapHandle {
    addr: SocketAddr,
    log: Arc<TapLog>,
    stop: Arc<AtomicBool>,
    acceptor: Option<JoinHandle<()>>,
}

impl TapHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn log(&self) -> &Arc<TapLog> {
        &self.log
    }
}

impl Drop for TapHandle {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
    }
}

/// Listens on `endpoint`, records every client frame with `clock.now()` and
/// relays it unchanged to `upstream`, passing the answer back.
pub fn tap(
    endpoint: impl ToSocketAddrs,
    upstream: SocketAddr,
    clock: Arc<dyn Clock>,
) -> Result<TapHandle, TransportError> {
    let listener = TcpListener::bind(endpoint)?;
    let addr = listener.local_addr()?;
    let log = Arc::new(TapLog::new());
    let stop = Arc::new(AtomicBool::new(false));

    let acceptor = {
        let log = Arc::clone(&log);
        let stop = Arc::clone(&stop);
        thread::spawn(move || {
            // one connection at a time keeps the log in arrival order
            for conn in listener.incoming() {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = conn else { continue };
                let _ = relay(stream, upstream, &log, clock.as_ref());
            }
        })
    };
    Ok(TapHandle { addr, log, stop, acceptor: Some(acceptor) })
}

fn relay(mut client: TcpStream, upstream: SocketAddr, log: &TapLog, clock: &dyn Clock) -> Result<(), TransportError> {
    client.set_read_timeout(Some(IO_TIMEOUT))?;
    client.set_write_timeout(Some(IO_TIMEOUT))?;
    let frame = read_frame(&mut client)?;
    log.record(&frame, clock.now());
    let answer = send_frame(upstream, &frame)?;
    client.write_all(&answer)?;
    let _ = client.shutdown(Shutdown::Both);
    Ok(())
}
