use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use super::hub::{Closed, Hub};
use super::wire::{self, Command, Reply, MAX_HEADER};
use super::{BusClient, BusConfig, BusConnector, BusError, Envelope, ErrCode, Topic};

pub const DEFAULT_REPLY_TIMEOUT: Duration = Duration::from_secs(10);

/// Reads one `\n`-terminated header line. `Ok(None)` on clean EOF.
fn read_header<R: BufRead>(reader: &mut R) -> io::Result<Option<String>> {
    let mut buf = Vec::new();
    let n = reader.by_ref().take(MAX_HEADER).read_until(b'\n', &mut buf)?;
    if n == 0 {
        return Ok(None);
    }
    if buf.pop() != Some(b'\n') {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "header line too long or truncated"));
    }
    if buf.last() == Some(&b'\r') {
        buf.pop();
    }
    String::from_utf8(buf).map(Some).map_err(|_| io::Error::new(io::ErrorKind::InvalidData, "header is not UTF-8"))
}

/// Reads `len` payload bytes and the terminating newline.
fn read_payload<R: Read>(reader: &mut R, len: usize) -> io::Result<Vec<u8>> {
    let mut payload = vec![0u8; len + 1];
    reader.read_exact(&mut payload)?;
    if payload.pop() != Some(b'\n') {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "payload not followed by newline"));
    }
    Ok(payload)
}

/// TCP front end for the routing hub.
pub struct Broker {
    addr: SocketAddr,
    hub: Arc<Hub>,
    stop: Arc<AtomicBool>,
    streams: Arc<Mutex<Vec<TcpStream>>>,
    accept: Option<JoinHandle<()>>,
}

impl Broker {
    pub fn bind(addr: impl ToSocketAddrs, config: BusConfig) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let hub = Arc::new(Hub::new(config));
        let stop = Arc::new(AtomicBool::new(false));
        let streams = Arc::new(Mutex::new(Vec::new()));
        let accept = {
            let (hub, stop, streams) = (Arc::clone(&hub), Arc::clone(&stop), Arc::clone(&streams));
            thread::Builder::new().name("bus-accept".into()).spawn(move || accept_loop(listener, hub, stop, streams))?
        };
        log::info!("bus broker listening on {addr}");
        Ok(Self { addr, hub, stop, streams, accept: Some(accept) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn connector(&self) -> TcpConnector {
        TcpConnector::new(self.addr)
    }

    /// Blocks until the accept loop exits (it only does on shutdown).
    pub fn wait(mut self) {
        if let Some(handle) = self.accept.take() {
            let _ = handle.join();
        }
    }

    pub fn shutdown(&mut self) {
        if self.stop.swap(true, Ordering::SeqCst) {
            return;
        }
        // Wake the blocking accept.
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.accept.take() {
            let _ = handle.join();
        }
        self.hub.close_all();
        for stream in self.streams.lock().unwrap_or_else(|p| p.into_inner()).drain(..) {
            let _ = stream.shutdown(Shutdown::Both);
        }
    }
}

impl Drop for Broker {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn accept_loop(listener: TcpListener, hub: Arc<Hub>, stop: Arc<AtomicBool>, streams: Arc<Mutex<Vec<TcpStream>>>) {
    for stream in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                log::warn!("accept failed: {e}");
                continue;
            }
        };
        let _ = stream.set_nodelay(true);
        if let Ok(clone) = stream.try_clone() {
            let mut streams = streams.lock().unwrap_or_else(|p| p.into_inner());
            streams.retain(|s| s.peer_addr().is_ok());
            streams.push(clone);
        }
        let hub = Arc::clone(&hub);
        let spawned = thread::Builder::new().name("bus-conn".into()).spawn(move || {
            if let Err(e) = serve(stream, &hub) {
                log::debug!("bus connection ended: {e}");
            }
        });
        if let Err(e) = spawned {
            log::error!("cannot spawn connection thread: {e}");
        }
    }
}

type SharedWriter = Arc<Mutex<TcpStream>>;

fn send(writer: &SharedWriter, bytes: &[u8]) -> io::Result<()> {
    let mut w = writer.lock().unwrap_or_else(|p| p.into_inner());
    w.write_all(bytes)?;
    w.flush()
}

fn send_result(writer: &SharedWriter, result: Result<(), BusError>) -> io::Result<bool> {
    reply(&mut writer.lock().unwrap_or_else(|p| p.into_inner()), result)
}

fn reply(w: &mut TcpStream, result: Result<(), BusError>) -> io::Result<bool> {
    let line = match result {
        Ok(()) => "OK\n".to_string(),
        Err(BusError::Rejected(code)) => format!("ERR {code}\n"),
        // Cut off by the hub (overflow); the writer thread reports it.
        Err(_) => return Ok(false),
    };
    w.write_all(line.as_bytes())?;
    w.flush()?;
    Ok(true)
}

fn serve(stream: TcpStream, hub: &Hub) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let writer: SharedWriter = Arc::new(Mutex::new(stream));

    let id = match read_header(&mut reader)?.map(|l| wire::parse_command(&l)) {
        Some(Ok(Command::Hello(id))) => id,
        Some(_) => {
            send(&writer, b"ERR hello\n")?;
            return Ok(());
        }
        None => return Ok(()),
    };
    let mailbox = match hub.register(&id) {
        Ok(m) => m,
        Err(_) => {
            send(&writer, b"ERR id\n")?;
            let _ = writer.lock().map(|w| w.shutdown(Shutdown::Both));
            return Ok(());
        }
    };
    send(&writer, b"OK\n")?;

    let pump = {
        let writer = Arc::clone(&writer);
        let mailbox = Arc::clone(&mailbox);
        thread::Builder::new().name("bus-pump".into()).spawn(move || loop {
            match mailbox.pop(None) {
                Ok(Some(env)) => {
                    if send(&writer, &wire::msg_frame(&env)).is_err() {
                        break;
                    }
                }
                Ok(None) => {}
                Err(Closed::Overflow) => {
                    let _ = send(&writer, b"ERR overflow\n");
                    let _ = writer.lock().map(|w| w.shutdown(Shutdown::Both));
                    break;
                }
                Err(Closed::Disconnected) => break,
            }
        })?
    };

    let outcome = serve_commands(&id, hub, &mut reader, &writer);
    hub.unregister(&id);
    let _ = writer.lock().map(|w| w.shutdown(Shutdown::Both));
    let _ = pump.join();
    outcome
}

fn serve_commands(id: &str, hub: &Hub, reader: &mut BufReader<TcpStream>, writer: &SharedWriter) -> io::Result<()> {
    loop {
        let Some(line) = read_header(reader)? else {
            return Ok(());
        };
        let keep_going = match wire::parse_command(&line) {
            Ok(Command::Sub(topic)) => send_result(writer, hub.subscribe(id, &topic))?,
            Ok(Command::Unsub(topic)) => send_result(writer, hub.unsubscribe(id, &topic))?,
            Ok(Command::Pub { topic, len }) => {
                if len > hub.max_payload() {
                    let skipped = io::copy(&mut reader.by_ref().take(len as u64 + 1), &mut io::sink())?;
                    if skipped != len as u64 + 1 {
                        return Ok(());
                    }
                    send_result(writer, Err(BusError::Rejected(ErrCode::Size)))?
                } else {
                    let payload = match read_payload(reader, len) {
                        Ok(p) => p,
                        Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                            send(writer, b"ERR proto\n")?;
                            return Ok(());
                        }
                        Err(e) => return Err(e),
                    };
                    // Holding the writer keeps our own copy of the message
                    // behind the OK.
                    let mut w = writer.lock().unwrap_or_else(|p| p.into_inner());
                    reply(&mut w, hub.publish(id, &topic, &payload))?
                }
            }
            Ok(Command::Hello(_)) => send_result(writer, Err(BusError::Rejected(ErrCode::Proto)))?,
            Err(code) => {
                send(writer, format!("ERR {code}\n").as_bytes())?;
                // A bad PUB header leaves the stream unframed.
                !line.starts_with("PUB")
            }
        };
        if !keep_going {
            return Ok(());
        }
    }
}

/// Connects clients to a TCP broker.
#[derive(Debug, Clone, Copy)]
pub struct TcpConnector {
    pub addr: SocketAddr,
    pub reply_timeout: Duration,
}

impl TcpConnector {
    pub fn new(addr: SocketAddr) -> Self {
        Self { addr, reply_timeout: DEFAULT_REPLY_TIMEOUT }
    }
}

impl BusConnector for TcpConnector {
    fn connect(&self, client_id: &str) -> Result<Box<dyn BusClient>, BusError> {
        Ok(Box::new(TcpBusClient::connect(self.addr, client_id, self.reply_timeout)?))
    }
}

#[derive(Debug, Clone)]
enum Fault {
    Overflow,
    Protocol(String),
}

/// Client side of the TCP protocol. A background thread splits the server
/// stream into command replies and delivered envelopes.
pub struct TcpBusClient {
    id: String,
    stream: TcpStream,
    replies: Receiver<Result<(), ErrCode>>,
    messages: Receiver<Envelope>,
    fault: Arc<Mutex<Option<Fault>>>,
    reply_timeout: Duration,
    reader: Option<JoinHandle<()>>,
}

impl TcpBusClient {
    pub fn connect(addr: SocketAddr, id: &str, reply_timeout: Duration) -> Result<Self, BusError> {
        let mut stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        stream.write_all(format!("HELLO {id}\n").as_bytes())?;
        let mut reader = BufReader::new(stream.try_clone()?);
        match read_header(&mut reader)?.as_deref().map(wire::parse_reply) {
            Some(Ok(Reply::Ok)) => {}
            Some(Ok(Reply::Err(code))) => return Err(BusError::Rejected(code)),
            Some(other) => return Err(BusError::Protocol(format!("unexpected HELLO reply {other:?}"))),
            None => return Err(BusError::Disconnected),
        }

        let (reply_tx, replies) = mpsc::channel();
        let (msg_tx, messages) = mpsc::channel();
        let fault = Arc::new(Mutex::new(None));
        let reader = {
            let fault = Arc::clone(&fault);
            thread::Builder::new().name(format!("bus-client-{id}")).spawn(move || {
                if let Err(f) = pump_replies(reader, &reply_tx, &msg_tx) {
                    *fault.lock().unwrap_or_else(|p| p.into_inner()) = Some(f);
                }
            })?
        };
        Ok(Self { id: id.to_string(), stream, replies, messages, fault, reply_timeout, reader: Some(reader) })
    }

    fn lost(&self) -> BusError {
        match self.fault.lock().unwrap_or_else(|p| p.into_inner()).clone() {
            Some(Fault::Overflow) => BusError::Overflow,
            Some(Fault::Protocol(msg)) => BusError::Protocol(msg),
            None => BusError::Disconnected,
        }
    }

    fn command(&mut self, bytes: &[u8]) -> Result<(), BusError> {
        if self.stream.write_all(bytes).and_then(|_| self.stream.flush()).is_err() {
            return Err(self.lost());
        }
        match self.replies.recv_timeout(self.reply_timeout) {
            Ok(Ok(())) => Ok(()),
            Ok(Err(code)) => Err(BusError::Rejected(code)),
            Err(RecvTimeoutError::Timeout) => Err(BusError::ReplyTimeout(self.reply_timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(self.lost()),
        }
    }
}

fn pump_replies(
    mut reader: BufReader<TcpStream>,
    replies: &Sender<Result<(), ErrCode>>,
    messages: &Sender<Envelope>,
) -> Result<(), Fault> {
    let protocol = |e: io::Error| Fault::Protocol(e.to_string());
    loop {
        let line = match read_header(&mut reader) {
            Ok(Some(line)) => line,
            Ok(None) => return Ok(()),
            Err(e) if e.kind() == io::ErrorKind::InvalidData => return Err(protocol(e)),
            Err(_) => return Ok(()),
        };
        match wire::parse_reply(&line).map_err(Fault::Protocol)? {
            Reply::Ok => {
                let _ = replies.send(Ok(()));
            }
            Reply::Err(ErrCode::Overflow) => return Err(Fault::Overflow),
            Reply::Err(code) => {
                let _ = replies.send(Err(code));
            }
            Reply::Msg { topic, sender, seq, len } => {
                let payload = read_payload(&mut reader, len).map_err(protocol)?;
                let topic = Topic::new(&topic).map_err(|e| Fault::Protocol(e.to_string()))?;
                let _ = messages.send(Envelope { topic, sender, seq, payload });
            }
        }
    }
}

impl BusClient for TcpBusClient {
    fn id(&self) -> &str {
        &self.id
    }

    fn subscribe(&mut self, topic: &str) -> Result<(), BusError> {
        Topic::new(topic)?;
        self.command(format!("SUB {topic}\n").as_bytes())
    }

    fn unsubscribe(&mut self, topic: &str) -> Result<(), BusError> {
        Topic::new(topic)?;
        self.command(format!("UNSUB {topic}\n").as_bytes())
    }

    fn publish(&mut self, topic: &str, payload: &[u8]) -> Result<(), BusError> {
        Topic::new(topic)?;
        let mut frame = wire::pub_header(topic, payload.len()).into_bytes();
        frame.extend_from_slice(payload);
        frame.push(b'\n');
        self.command(&frame)
    }

    fn next_message(&mut self, timeout: Duration) -> Result<Option<Envelope>, BusError> {
        match self.messages.recv_timeout(timeout) {
            Ok(env) => Ok(Some(env)),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => Err(self.lost()),
        }
    }
}

impl Drop for TcpBusClient {
    fn drop(&mut self) {
        let _ = self.stream.shutdown(Shutdown::Both);
        if let Some(handle) = self.reader.take() {
            let _ = handle.join();
        }
    }
}
