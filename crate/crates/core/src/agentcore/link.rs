//! Line transport between agents and the simulator, and the messages it
//! carries.
//!
//! ```text
//! agent -> sim   HELLO <agent-id>
//!                ACT <step> <action>
//! sim -> agent   OK | ERR <reason>
//!                TEAM <team> <agent>:<role>,...
//!                PERCEPT <percept line>
//!                END <score-a> <score-b>
//! ```

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::time::Duration;

use super::{decode_percept, encode_percept, Action, Percept, Role, Roster, Teammate};
use crate::{AgentId, TeamId};

const MAX_LINE: usize = 1 << 20;

pub trait LineLink: Send {
    fn send_line(&mut self, line: &str) -> io::Result<()>;

    /// Next line without its terminator. `Ok(None)` when `timeout` passes
    /// first; `ErrorKind::UnexpectedEof` once the peer is gone. `None` as
    /// timeout blocks.
    fn recv_line(&mut self, timeout: Option<Duration>) -> io::Result<Option<String>>;

    /// An independent writer to the same peer, usable from another thread.
    fn sink(&self) -> io::Result<Box<dyn LineSink>>;
}

pub trait LineSink: Send {
    fn send_line(&mut self, line: &str) -> io::Result<()>;
}

/// In-process link over a pair of channels.
pub struct ChannelLink {
    tx: mpsc::Sender<String>,
    rx: mpsc::Receiver<String>,
}

pub fn channel_pair() -> (ChannelLink, ChannelLink) {
    let (a_tx, b_rx) = mpsc::channel();
    let (b_tx, a_rx) = mpsc::channel();
    (ChannelLink { tx: a_tx, rx: a_rx }, ChannelLink { tx: b_tx, rx: b_rx })
}

struct ChannelSink(mpsc::Sender<String>);

impl LineSink for ChannelSink {
    fn send_line(&mut self, line: &str) -> io::Result<()> {
        self.0.send(line.to_string()).map_err(|_| gone())
    }
}

fn gone() -> io::Error {
    io::Error::new(io::ErrorKind::UnexpectedEof, "peer closed the link")
}

impl LineLink for ChannelLink {
    fn send_line(&mut self, line: &str) -> io::Result<()> {
        self.tx.send(line.to_string()).map_err(|_| gone())
    }

    fn recv_line(&mut self, timeout: Option<Duration>) -> io::Result<Option<String>> {
        match timeout {
            None => self.rx.recv().map(Some).map_err(|_| gone()),
            Some(t) => match self.rx.recv_timeout(t) {
                Ok(line) => Ok(Some(line)),
                Err(RecvTimeoutError::Timeout) => Ok(None),
                Err(RecvTimeoutError::Disconnected) => Err(gone()),
            },
        }
    }

    fn sink(&self) -> io::Result<Box<dyn LineSink>> {
        Ok(Box::new(ChannelSink(self.tx.clone())))
    }
}

pub struct TcpLink {
    writer: TcpStream,
    reader: BufReader<TcpStream>,
    partial: Vec<u8>,
}

impl TcpLink {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        Self::from_stream(TcpStream::connect(addr)?)
    }

    pub fn from_stream(stream: TcpStream) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        Ok(Self { reader: BufReader::new(stream.try_clone()?), writer: stream, partial: Vec::new() })
    }

    pub fn shutdown(&self) {
        let _ = self.writer.shutdown(std::net::Shutdown::Both);
    }
}

fn write_line(mut stream: &TcpStream, line: &str) -> io::Result<()> {
    let mut buf = Vec::with_capacity(line.len() + 1);
    buf.extend_from_slice(line.as_bytes());
    buf.push(b'\n');
    stream.write_all(&buf)
}

struct TcpSink(TcpStream);

impl LineSink for TcpSink {
    fn send_line(&mut self, line: &str) -> io::Result<()> {
        write_line(&self.0, line)
    }
}

impl LineLink for TcpLink {
    fn send_line(&mut self, line: &str) -> io::Result<()> {
        write_line(&self.writer, line)
    }

    fn sink(&self) -> io::Result<Box<dyn LineSink>> {
        Ok(Box::new(TcpSink(self.writer.try_clone()?)))
    }

    fn recv_line(&mut self, timeout: Option<Duration>) -> io::Result<Option<String>> {
        if timeout == Some(Duration::ZERO) {
            return Ok(None);
        }
        self.reader.get_ref().set_read_timeout(timeout)?;
        match self.reader.read_until(b'\n', &mut self.partial) {
            Ok(0) => Err(gone()),
            Ok(_) if self.partial.last() != Some(&b'\n') => Err(gone()),
            Ok(_) => {
                let mut bytes = std::mem::take(&mut self.partial);
                bytes.pop();
                if bytes.last() == Some(&b'\r') {
                    bytes.pop();
                }
                String::from_utf8(bytes)
                    .map(Some)
                    .map_err(|_| io::Error::new(io::ErrorKind::InvalidData, "line is not UTF-8"))
            }
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
                if self.partial.len() > MAX_LINE {
                    return Err(io::Error::new(io::ErrorKind::InvalidData, "line too long"));
                }
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ServerMsg {
    Ok,
    Err(String),
    Team(Roster),
    Percept(Percept),
    End(u64, u64),
}

impl ServerMsg {
    pub fn encode(&self) -> String {
        match self {
            ServerMsg::Ok => "OK".to_string(),
            ServerMsg::Err(reason) => format!("ERR {reason}"),
            ServerMsg::Team(roster) => {
                let members: Vec<String> = roster.members.iter().map(|m| format!("{}:{}", m.id, m.role)).collect();
                format!("TEAM {} {}", roster.team, members.join(",")).trim_end().to_string()
            }
            ServerMsg::Percept(p) => format!("PERCEPT {}", encode_percept(p)),
            ServerMsg::End(a, b) => format!("END {a} {b}"),
        }
    }

    pub fn parse(line: &str) -> Result<Self, String> {
        let (verb, rest) = line.split_once(' ').unwrap_or((line, ""));
        match verb {
            "OK" if rest.is_empty() => Ok(ServerMsg::Ok),
            "ERR" => Ok(ServerMsg::Err(rest.to_string())),
            "TEAM" => {
                let (team, members) = rest.split_once(' ').unwrap_or((rest, ""));
                let team = TeamId::new(team).map_err(|e| e.to_string())?;
                let members = members
                    .split(',')
                    .filter(|m| !m.is_empty())
                    .map(|m| {
                        let (id, role) = m.split_once(':').ok_or_else(|| format!("bad roster entry {m:?}"))?;
                        Ok(Teammate { id: AgentId::new(id).map_err(|e| e.to_string())?, role: role.parse::<Role>()? })
                    })
                    .collect::<Result<_, String>>()?;
                Ok(ServerMsg::Team(Roster { team, members }))
            }
            "PERCEPT" => decode_percept(rest).map(ServerMsg::Percept).map_err(|e| e.to_string()),
            "END" => {
                let (a, b) = rest.split_once(' ').ok_or_else(|| format!("bad END line {line:?}"))?;
                let score = |s: &str| s.parse::<u64>().map_err(|_| format!("bad score {s:?}"));
                Ok(ServerMsg::End(score(a)?, score(b)?))
            }
            _ => Err(format!("unexpected line from simulator: {line:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClientMsg {
    Hello(AgentId),
    Act { step: u64, action: Action },
}

impl ClientMsg {
    pub fn encode(&self) -> String {
        match self {
            ClientMsg::Hello(id) => format!("HELLO {id}"),
            ClientMsg::Act { step, action } => format!("ACT {step} {action}"),
        }
    }

    pub fn parse(line: &str) -> Result<Self, String> {
        let (verb, rest) = line.split_once(' ').ok_or_else(|| format!("unexpected line {line:?}"))?;
        match verb {
            "HELLO" => AgentId::new(rest).map(ClientMsg::Hello).map_err(|e| e.to_string()),
            "ACT" => {
                let (step, action) = rest.split_once(' ').ok_or_else(|| format!("bad ACT line {line:?}"))?;
                Ok(ClientMsg::Act {
                    step: step.parse().map_err(|_| format!("bad step {step:?}"))?,
                    action: action.parse()?,
                })
            }
            _ => Err(format!("unexpected line {line:?}")),
        }
    }
}
