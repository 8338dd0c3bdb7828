use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use super::GoalId;
use crate::AgentId;

/// The circulating auction state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuctionToken {
    pub auction_id: u64,
    /// Starts at 1.
    pub round: u32,
    /// Ring index of the agent that sent this token.
    pub hop: u32,
    /// Permanent assignments, goal to agent.
    pub fixed: BTreeMap<GoalId, AgentId>,
    /// Best bid seen this round per goal.
    pub bids: BTreeMap<GoalId, (i64, AgentId)>,
}

impl AuctionToken {
    pub fn new(auction_id: u64) -> Self {
        Self { auction_id, round: 1, hop: 0, fixed: BTreeMap::new(), bids: BTreeMap::new() }
    }

    pub fn is_assigned(&self, agent: &AgentId) -> bool {
        self.fixed.values().any(|a| a == agent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad token field {field}: {message}")]
pub struct TokenError {
    pub field: &'static str,
    pub message: String,
}

fn err(field: &'static str, message: impl Into<String>) -> TokenError {
    TokenError { field, message: message.into() }
}

/// `AUC <auction-id> <round> <hop> fixed=<g:a,...> bids=<g:score:a,...>`
pub fn encode_token(token: &AuctionToken) -> String {
    let mut out = format!("AUC {} {} {} fixed=", token.auction_id, token.round, token.hop);
    for (i, (g, a)) in token.fixed.iter().enumerate() {
        let sep = if i == 0 { "" } else { "," };
        let _ = write!(out, "{sep}{g}:{a}");
    }
    out.push_str(" bids=");
    for (i, (g, (score, a))) in token.bids.iter().enumerate() {
        let sep = if i == 0 { "" } else { "," };
        let _ = write!(out, "{sep}{g}:{score}:{a}");
    }
    out
}

fn number<T: std::str::FromStr>(field: &'static str, raw: &str) -> Result<T, TokenError> {
    raw.parse().map_err(|_| err(field, format!("not a number: {raw:?}")))
}

fn agent(field: &'static str, raw: &str) -> Result<AgentId, TokenError> {
    AgentId::new(raw).map_err(|e| err(field, e.to_string()))
}

fn entries<'a>(field: &'static str, raw: &'a str) -> Result<Vec<&'a str>, TokenError> {
    let prefix = format!("{field}=");
    let body =
        raw.strip_prefix(prefix.as_str()).ok_or_else(|| err(field, format!("expected {prefix}..., got {raw:?}")))?;
    Ok(if body.is_empty() { Vec::new() } else { body.split(',').collect() })
}

pub fn decode_token(payload: &str) -> Result<AuctionToken, TokenError> {
    let fields: Vec<&str> = payload.trim_end_matches('\n').split(' ').collect();
    let [tag, id, round, hop, fixed, bids] = fields[..] else {
        return Err(err("header", format!("expected 6 fields, got {}", fields.len())));
    };
    if tag != "AUC" {
        return Err(err("header", format!("expected AUC, got {tag:?}")));
    }
    let auction_id = number("auction-id", id)?;
    let round: u32 = number("round", round)?;
    if round == 0 {
        return Err(err("round", "rounds start at 1"));
    }
    let hop = number("hop", hop)?;

    let mut fixed_map = BTreeMap::new();
    let mut holders = BTreeSet::new();
    for entry in entries("fixed", fixed)? {
        let (g, a) = entry.split_once(':').ok_or_else(|| err("fixed", format!("bad entry {entry:?}")))?;
        let g: GoalId = number("fixed", g)?;
        let a = agent("fixed", a)?;
        if !holders.insert(a.clone()) {
            return Err(err("fixed", format!("agent {a} holds two goals")));
        }
        if fixed_map.insert(g, a).is_some() {
            return Err(err("fixed", format!("duplicate goal {g}")));
        }
    }

    let mut bid_map = BTreeMap::new();
    for entry in entries("bids", bids)? {
        let mut parts = entry.splitn(3, ':');
        let (Some(g), Some(score), Some(a)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err("bids", format!("bad entry {entry:?}")));
        };
        let g: GoalId = number("bids", g)?;
        let bid = (number("bids", score)?, agent("bids", a)?);
        if bid_map.insert(g, bid).is_some() {
            return Err(err("bids", format!("duplicate goal {g}")));
        }
    }

    Ok(AuctionToken { auction_id, round, hop, fixed: fixed_map, bids: bid_map })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a(s: &str) -> AgentId {
        AgentId::new(s).unwrap()
    }

    #[test]
    fn empty_token() {
        assert_eq!(encode_token(&AuctionToken::new(1)), "AUC 1 1 0 fixed= bids=");
        assert_eq!(decode_token("AUC 1 1 0 fixed= bids=").unwrap(), AuctionToken::new(1));
    }

    #[test]
    fn populated_token() {
        let mut t = AuctionToken::new(7);
        t.round = 2;
        t.hop = 1;
        t.fixed.insert(9, a("a2"));
        t.fixed.insert(3, a("a1"));
        t.bids.insert(4, (-3, a("a3")));
        t.bids.insert(1, (i64::MIN, a("a4")));
        let text = encode_token(&t);
        assert_eq!(text, format!("AUC 7 2 1 fixed=3:a1,9:a2 bids=1:{}:a4,4:-3:a3", i64::MIN));
        assert_eq!(decode_token(&text).unwrap(), t);
    }

    #[test]
    fn decode_errors_name_the_field() {
        let cases = [
            ("AUC 1 1 0 fixed=1:a1,1:a2 bids=", "fixed"),
            ("AUC 1 1 0 fixed=1:a1,2:a1 bids=", "fixed"),
            ("AUC 1 1 0 fixed= bids=1:2:a1,1:3:a2", "bids"),
            ("AUC 1 1 0 fixed= bids=1:x:a1", "bids"),
            ("AUC 1 0 0 fixed= bids=", "round"),
            ("AUC x 1 0 fixed= bids=", "auction-id"),
            ("AUC 1 1 -1 fixed= bids=", "hop"),
            ("AUC 1 1 0 fixed=1:A bids=", "fixed"),
            ("AUC 1 1 0 bids= fixed=", "fixed"),
            ("BID 1 1 0 fixed= bids=", "header"),
            ("AUC 1 1 0 fixed=", "header"),
        ];
        for (text, field) in cases {
            assert_eq!(decode_token(text).unwrap_err().field, field, "{text}");
        }
    }

    fn agent_name() -> impl Strategy<Value = AgentId> {
        "[a-z0-9_-]{1,8}".prop_map(|s| AgentId::new(s).unwrap())
    }

    prop_compose! {
        fn token()(
            auction_id in any::<u64>(),
            round in 1u32..20,
            hop in 0u32..20,
            fixed in proptest::collection::btree_map(any::<u32>(), agent_name(), 0..8),
            bids in proptest::collection::btree_map(any::<u32>(), (any::<i64>(), agent_name()), 0..8),
        ) -> AuctionToken {
            let mut seen = BTreeSet::new();
            let fixed = fixed.into_iter().filter(|(_, a)| seen.insert(a.clone())).collect();
            AuctionToken { auction_id, round, hop, fixed, bids }
        }
    }

    proptest! {
        #[test]
        fn round_trip(t in token()) {
            prop_assert_eq!(decode_token(&encode_token(&t)).unwrap(), t);
        }
    }
}
