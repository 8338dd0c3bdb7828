//! Topic-based publish/subscribe bus.
//!
//! Two transports share one routing hub and therefore one set of semantics:
//!
//! - [`InProcBus`]: clients hold a direct reference to the shared hub.
//! - [`Broker`] / [`TcpBusClient`]: a line-oriented TCP text protocol so agents
//!   in other processes (or languages) can join.
//!
//! Delivery contract, for both: every publish reaches each client subscribed
//! at publish time exactly once, and envelopes from one sender on one topic
//! arrive in publish order with consecutive sequence numbers. There is no
//! ordering guarantee across senders.

pub mod conformance;
mod hub;
mod inproc;
mod tcp;
pub mod wire;

use std::fmt;
use std::io;
use std::time::Duration;

use thiserror::Error;

pub use inproc::{InProcBus, InProcClient};
pub use tcp::{Broker, TcpBusClient, TcpConnector};

use crate::AgentId;

pub const DEFAULT_QUEUE_CAPACITY: usize = 4096;
pub const MAX_PAYLOAD: usize = 64 * 1024;
const MAX_TOPIC_LEN: usize = 64;
const MAX_CLIENT_ID_LEN: usize = 64;

pub const PERCEPTS_TOPIC: &str = "team.percepts";
pub const AUCTION_TOPIC: &str = "team.auction";

/// Error codes carried by `ERR <code>` replies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrCode {
    Topic,
    Size,
    Id,
    Overflow,
    Hello,
    Proto,
}

impl ErrCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrCode::Topic => "topic",
            ErrCode::Size => "size",
            ErrCode::Id => "id",
            ErrCode::Overflow => "overflow",
            ErrCode::Hello => "hello",
            ErrCode::Proto => "proto",
        }
    }

    pub fn parse(code: &str) -> Option<Self> {
        Some(match code {
            "topic" => ErrCode::Topic,
            "size" => ErrCode::Size,
            "id" => ErrCode::Id,
            "overflow" => ErrCode::Overflow,
            "hello" => ErrCode::Hello,
            "proto" => ErrCode::Proto,
            _ => return None,
        })
    }
}

impl fmt::Display for ErrCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum BusError {
    #[error("ERR {0}")]
    Rejected(ErrCode),
    #[error("disconnected")]
    Disconnected,
    #[error("disconnected: receive queue overflowed")]
    Overflow,
    #[error("no reply from broker within {0:?}")]
    ReplyTimeout(Duration),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl BusError {
    pub fn code(&self) -> Option<ErrCode> {
        match self {
            BusError::Rejected(code) => Some(*code),
            _ => None,
        }
    }
}

/// Validated topic name: 1-64 chars of `[a-z0-9._-]`, matched exactly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Topic(String);

impl Topic {
    pub fn new(name: &str) -> Result<Self, BusError> {
        let ok = !name.is_empty()
            && name.len() <= MAX_TOPIC_LEN
            && name.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || matches!(b, b'.' | b'_' | b'-'));
        if ok {
            Ok(Self(name.to_string()))
        } else {
            Err(BusError::Rejected(ErrCode::Topic))
        }
    }

    /// One-to-one mail topic `agent.<id>`.
    pub fn mailbox(agent: &AgentId) -> Self {
        Self(format!("agent.{agent}"))
    }

    pub fn percepts() -> Self {
        Self(PERCEPTS_TOPIC.to_string())
    }

    pub fn auction() -> Self {
        Self(AUCTION_TOPIC.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Client ids are whitespace-free tokens of up to 64 bytes.
pub fn valid_client_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= MAX_CLIENT_ID_LEN && id.bytes().all(|b| b.is_ascii_graphic())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub topic: Topic,
    pub sender: String,
    /// Per-(sender, topic) counter starting at 1.
    pub seq: u64,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, Copy)]
pub struct BusConfig {
    /// Undelivered envelopes a client may accumulate before it is cut off.
    pub queue_capacity: usize,
    pub max_payload: usize,
}

impl Default for BusConfig {
    fn default() -> Self {
        Self { queue_capacity: DEFAULT_QUEUE_CAPACITY, max_payload: MAX_PAYLOAD }
    }
}

/// One connected participant. Topics are passed as raw strings so both
/// transports report malformed names the same way (`ERR topic`).
pub trait BusClient: Send {
    fn id(&self) -> &str;

    /// Idempotent.
    fn subscribe(&mut self, topic: &str) -> Result<(), BusError>;

    /// Unsubscribing from a topic that was never subscribed is a no-op.
    fn unsubscribe(&mut self, topic: &str) -> Result<(), BusError>;

    fn publish(&mut self, topic: &str, payload: &[u8]) -> Result<(), BusError>;

    /// Oldest undelivered envelope, or `Ok(None)` once `timeout` elapses.
    fn next_message(&mut self, timeout: Duration) -> Result<Option<Envelope>, BusError>;
}

/// Something that hands out connected clients: an in-process hub or the
/// address of a TCP broker.
pub trait BusConnector: Send + Sync {
    fn connect(&self, client_id: &str) -> Result<Box<dyn BusClient>, BusError>;
}
