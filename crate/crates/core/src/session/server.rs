//! Blocking socket transports for [`Connection`]: newline-delimited JSON
//! over plain TCP, or one JSON message per WebSocket text frame. Each
//! client gets its own thread and session.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use tungstenite::{Message, WebSocket};

use super::{Connection, ServerMessage};
use crate::ccl::IntentionLibrary;
use crate::config::Config;

/// How long to block on reads while no session is running.
const IDLE_POLL: Duration = Duration::from_millis(200);
/// Socket read timeouts are coarse; shorter waits poll and sleep instead.
const FINE_WAIT: Duration = Duration::from_millis(5);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transport {
    Tcp,
    WebSocket,
}

#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub transport: Transport,
    pub config: Config,
    pub library: Arc<IntentionLibrary>,
    /// Finished sessions are exported here.
    pub out_dir: Option<PathBuf>,
}

/// A message stream with a read timeout.
trait Channel {
    /// `Ok(None)` on timeout, `Err` once the peer is gone. A zero timeout
    /// polls without blocking.
    fn recv(&mut self, timeout: Duration) -> io::Result<Option<String>>;
    fn send(&mut self, line: &str) -> io::Result<()>;
}

fn set_wait(stream: &TcpStream, timeout: Duration) -> io::Result<()> {
    if timeout.is_zero() {
        stream.set_nonblocking(true)
    } else {
        stream.set_nonblocking(false)?;
        stream.set_read_timeout(Some(timeout))
    }
}

fn is_timeout(e: &io::Error) -> bool {
    matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut)
}

struct LineChannel {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    partial: Vec<u8>,
}

impl Channel for LineChannel {
    fn recv(&mut self, timeout: Duration) -> io::Result<Option<String>> {
        set_wait(self.reader.get_ref(), timeout)?;
        match self.reader.read_until(b'\n', &mut self.partial) {
            Ok(0) => Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(_) if self.partial.ends_with(b"\n") => {
                let line = String::from_utf8_lossy(&self.partial).into_owned();
                self.partial.clear();
                Ok(Some(line))
            }
            Ok(_) => Ok(None),
            Err(e) if is_timeout(&e) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn send(&mut self, line: &str) -> io::Result<()> {
        self.writer.set_nonblocking(false)?;
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()
    }
}

struct WsChannel {
    ws: WebSocket<TcpStream>,
}

fn ws_err(e: tungstenite::Error) -> io::Error {
    match e {
        tungstenite::Error::Io(e) => e,
        other => io::Error::other(other),
    }
}

impl Channel for WsChannel {
    fn recv(&mut self, timeout: Duration) -> io::Result<Option<String>> {
        set_wait(self.ws.get_ref(), timeout)?;
        match self.ws.read() {
            Ok(Message::Text(t)) => Ok(Some(t.to_string())),
            Ok(Message::Binary(b)) => Ok(Some(String::from_utf8_lossy(&b).into_owned())),
            Ok(Message::Close(_)) => Err(io::ErrorKind::ConnectionAborted.into()),
            Ok(_) => Ok(None),
            Err(e) => {
                let e = ws_err(e);
                if is_timeout(&e) {
                    Ok(None)
                } else {
                    Err(e)
                }
            }
        }
    }

    fn send(&mut self, line: &str) -> io::Result<()> {
        self.ws.get_ref().set_nonblocking(false)?;
        self.ws.send(Message::text(line)).map_err(ws_err)
    }
}

fn send_all(ch: &mut dyn Channel, msgs: &[ServerMessage]) -> io::Result<()> {
    for m in msgs {
        ch.send(&m.to_line())?;
    }
    Ok(())
}

/// Drives one connection until the peer disconnects. Running sessions are
/// stepped on a fixed clock; at most one input is consumed per step.
fn drive(ch: &mut dyn Channel, conn: &mut Connection) -> io::Result<()> {
    let mut next_tick: Option<Instant> = None;
    loop {
        if conn.is_running() {
            let now = Instant::now();
            let due = *next_tick.get_or_insert(now + conn.step_interval());
            if now >= due {
                send_all(ch, &conn.tick())?;
                let next = due + conn.step_interval();
                next_tick = Some(if next < now { now + conn.step_interval() } else { next });
            }
        } else {
            next_tick = None;
        }
        let wait = match next_tick {
            Some(t) => t.saturating_duration_since(Instant::now()),
            None => IDLE_POLL,
        };
        let fine = wait < FINE_WAIT;
        match ch.recv(if fine { Duration::ZERO } else { wait })? {
            Some(text) => {
                for line in text.lines() {
                    send_all(ch, &conn.handle_line(line))?;
                }
            }
            None if fine => thread::sleep(wait),
            None => {}
        }
    }
}

fn handle_client(stream: TcpStream, cfg: &ServerConfig) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let mut conn = Connection::new(cfg.config.clone(), cfg.library.clone(), cfg.out_dir.clone());
    let mut ch: Box<dyn Channel> = match cfg.transport {
        Transport::Tcp => Box::new(LineChannel {
            reader: BufReader::new(stream.try_clone()?),
            writer: stream,
            partial: Vec::new(),
        }),
        Transport::WebSocket => {
            let ws = tungstenite::accept(stream).map_err(|e| io::Error::other(e.to_string()))?;
            Box::new(WsChannel { ws })
        }
    };
    let result = drive(ch.as_mut(), &mut conn);
    if conn.is_running() {
        // Peer vanished mid-episode: keep what was played.
        conn.handle(super::ClientMessage::End);
    }
    match result {
        Err(e) if !matches!(e.kind(), io::ErrorKind::UnexpectedEof | io::ErrorKind::ConnectionAborted) => Err(e),
        _ => Ok(()),
    }
}

/// Accepts clients forever, one thread each.
pub fn serve(listener: TcpListener, cfg: ServerConfig) -> io::Result<()> {
    let cfg = Arc::new(cfg);
    for stream in listener.incoming() {
        let stream = stream?;
        let cfg = cfg.clone();
        thread::spawn(move || {
            if let Err(e) = handle_client(stream, &cfg) {
                eprintln!("session: connection error: {e}");
            }
        });
    }
    Ok(())
}

/// Binds `addr` and serves on a background thread. Returns the bound
/// address, useful with port 0.
pub fn spawn(addr: &str, cfg: ServerConfig) -> io::Result<std::net::SocketAddr> {
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    thread::spawn(move || serve(listener, cfg));
    Ok(local)
}
