//! Line framing of the TCP bus protocol.
//!
//! ```text
//! client -> server   HELLO <client-id>
//!                    SUB <topic>
//!                    UNSUB <topic>
//!                    PUB <topic> <nbytes>\n<payload>\n
//! server -> client   OK
//!                    ERR <code>
//!                    MSG <topic> <sender> <seq> <nbytes>\n<payload>\n
//! ```

use super::{Envelope, ErrCode};

/// Longest accepted header line, newline included.
pub const MAX_HEADER: u64 = 512;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Hello(String),
    Sub(String),
    Unsub(String),
    /// Header only; the payload follows on the stream.
    Pub {
        topic: String,
        len: usize,
    },
}

/// Parses a client header line (without the trailing newline). Topic
/// validity is checked later so a bad topic on `PUB` can still have its
/// payload consumed.
pub fn parse_command(line: &str) -> Result<Command, ErrCode> {
    let (verb, rest) = line.split_once(' ').unwrap_or((line, ""));
    match verb {
        "HELLO" if !rest.is_empty() => Ok(Command::Hello(rest.to_string())),
        "SUB" => Ok(Command::Sub(rest.to_string())),
        "UNSUB" => Ok(Command::Unsub(rest.to_string())),
        "PUB" => {
            let (topic, len) = rest.rsplit_once(' ').ok_or(ErrCode::Proto)?;
            let len = len.parse().map_err(|_| ErrCode::Proto)?;
            Ok(Command::Pub { topic: topic.to_string(), len })
        }
        _ => Err(ErrCode::Proto),
    }
}

pub fn pub_header(topic: &str, len: usize) -> String {
    format!("PUB {topic} {len}\n")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    Ok,
    Err(ErrCode),
    Msg { topic: String, sender: String, seq: u64, len: usize },
}

pub fn parse_reply(line: &str) -> Result<Reply, String> {
    let mut fields = line.split(' ');
    match fields.next() {
        Some("OK") if line == "OK" => Ok(Reply::Ok),
        Some("ERR") => {
            let code = fields.next().unwrap_or("");
            ErrCode::parse(code).map(Reply::Err).ok_or_else(|| format!("unknown error code {code:?}"))
        }
        Some("MSG") => {
            let parts: Vec<&str> = fields.collect();
            let [topic, sender, seq, len] = parts[..] else {
                return Err(format!("malformed MSG header {line:?}"));
            };
            Ok(Reply::Msg {
                topic: topic.to_string(),
                sender: sender.to_string(),
                seq: seq.parse().map_err(|_| format!("bad seq {seq:?}"))?,
                len: len.parse().map_err(|_| format!("bad length {len:?}"))?,
            })
        }
        _ => Err(format!("unexpected line {line:?}")),
    }
}

pub fn msg_frame(env: &Envelope) -> Vec<u8> {
    let mut out = format!("MSG {} {} {} {}\n", env.topic, env.sender, env.seq, env.payload.len()).into_bytes();
    out.extend_from_slice(&env.payload);
    out.push(b'\n');
    out
}
