//! Live guidance over WebSocket.
//!
//! Each client gets an independent [`ClientSession`]; the map is shared
//! read-only between them. One text frame carries one JSON document in
//! either direction. On connect the server sends `hello` then `map`, and
//! every client message is answered with at least one message.

mod protocol;

pub use protocol::{ClientMessage, ClientSession, ServerMessage, Thresholds, FRAME_RATE_HZ};

use crate::calibration::ScaleCalibration;
use crate::guidance::GuidanceConfig;
use crate::model::{validate_map, WorldMap};
use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use thiserror::Error;
use tungstenite::{Message, WebSocket};

pub const DEFAULT_PORT: u16 = 8474;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("map has no scale reference")]
    MissingCalibration,
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("invalid guidance config: {0}")]
    InvalidConfig(String),
    #[error("cannot bind: {0}")]
    BindFailure(#[source] io::Error),
}

/// A running server. Dropping the handle stops accepting new clients.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept_thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Blocks until the accept loop exits.
    pub fn wait(mut self) {
        if let Some(t) = self.accept_thread.take() {
            let _ = t.join();
        }
    }

    pub fn shutdown(&mut self) {
        if self.stop.swap(true, Ordering::SeqCst) {
            return;
        }
        // Wake the blocking accept.
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.accept_thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Binds `addr` and starts serving `map` on a background thread.
pub fn serve(map: WorldMap, cfg: GuidanceConfig, addr: impl ToSocketAddrs) -> Result<ServerHandle, ServiceError> {
    let violations = validate_map(&map);
    if let Some(v) = violations.first() {
        return Err(ServiceError::InvalidMap(v.to_string()));
    }
    ScaleCalibration::from_map(&map).map_err(|_| ServiceError::MissingCalibration)?;
    cfg.validate().map_err(|e| ServiceError::InvalidConfig(e.to_string()))?;

    let listener = TcpListener::bind(addr).map_err(ServiceError::BindFailure)?;
    let addr = listener.local_addr().map_err(ServiceError::BindFailure)?;
    let stop = Arc::new(AtomicBool::new(false));
    let map = Arc::new(map);

    let accept_stop = Arc::clone(&stop);
    let accept_thread = thread::spawn(move || {
        for stream in listener.incoming() {
            if accept_stop.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { continue };
            let map = Arc::clone(&map);
            thread::spawn(move || {
                if let Err(e) = run_client(stream, map, cfg) {
                    eprintln!("client closed: {e}");
                }
            });
        }
    });
    Ok(ServerHandle { addr, stop, accept_thread: Some(accept_thread) })
}

fn send_all(ws: &mut WebSocket<TcpStream>, msgs: &[ServerMessage]) -> tungstenite::Result<()> {
    for m in msgs {
        ws.send(Message::text(m.to_json()))?;
    }
    Ok(())
}

fn run_client(stream: TcpStream, map: Arc<WorldMap>, cfg: GuidanceConfig) -> Result<(), Box<dyn std::error::Error>> {
    stream.set_nodelay(true)?;
    let mut ws = tungstenite::accept(stream).map_err(|e| e.to_string())?;
    let mut client = ClientSession::new(map, cfg)?;
    send_all(&mut ws, &client.greeting())?;
    loop {
        let replies = match ws.read() {
            Ok(Message::Text(text)) => client.handle_text(text.as_str()),
            Ok(Message::Binary(_)) => vec![ServerMessage::error("bad_message", "binary frames are not supported")],
            Ok(Message::Close(_)) | Err(tungstenite::Error::ConnectionClosed) => return Ok(()),
            Ok(_) => continue,
            Err(e) => return Err(e.into()),
        };
        send_all(&mut ws, &replies)?;
    }
}
