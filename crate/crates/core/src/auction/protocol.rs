use std::collections::BTreeMap;

use super::{sort_table, AuctionError, AuctionToken, GoalId, RingTopology, ScoredGoal};
use crate::AgentId;

/// What a participant does with the token after handling it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Hand {
    /// Send `token` to `to`'s mailbox.
    Pass { to: AgentId, token: AuctionToken },
    /// Only the initiator finishes; `assignment` maps goal to agent.
    Finished { assignment: BTreeMap<GoalId, AgentId>, rounds: u32 },
}

/// One agent's side of a ring auction. Holds no mutable state: everything
/// that changes travels in the token.
#[derive(Debug, Clone)]
pub struct Participant {
    me: AgentId,
    index: usize,
    ring: RingTopology,
    table: Vec<ScoredGoal>,
}

impl Participant {
    /// `table` may rank more goals than the ring has agents; only the top
    /// `ring.len()` entries are bid on.
    pub fn new(me: AgentId, ring: RingTopology, table: &[ScoredGoal]) -> Result<Self, AuctionError> {
        let index = ring.position(&me).ok_or_else(|| AuctionError::NotInRing(me.clone()))?;
        let mut table = table.to_vec();
        sort_table(&mut table);
        table.truncate(ring.len());
        if table.len() < ring.len() {
            return Err(AuctionError::ShortTable { agent: me, len: table.len(), n: ring.len() });
        }
        Ok(Self { me, index, ring, table })
    }

    pub fn id(&self) -> &AgentId {
        &self.me
    }

    pub fn ring(&self) -> &RingTopology {
        &self.ring
    }

    pub fn is_initiator(&self) -> bool {
        self.index == 0
    }

    fn successor(&self) -> AgentId {
        self.ring.agents()[(self.index + 1) % self.ring.len()].clone()
    }

    fn bid(&self, token: &mut AuctionToken) {
        if token.is_assigned(&self.me) {
            return;
        }
        let Some(best) = self.table.iter().find(|e| !token.fixed.contains_key(&e.goal)) else {
            return;
        };
        let beats = match token.bids.get(&best.goal) {
            None => true,
            Some((score, holder)) => best.score > *score || (best.score == *score && self.me < *holder),
        };
        if beats {
            token.bids.insert(best.goal, (best.score, self.me.clone()));
        }
    }

    fn pass(&self, mut token: AuctionToken) -> Hand {
        self.bid(&mut token);
        token.hop = self.index as u32;
        Hand::Pass { to: self.successor(), token }
    }

    /// Initiator only: the first token of round 1.
    pub fn open(&self, auction_id: u64) -> Result<Hand, AuctionError> {
        if !self.is_initiator() {
            return Err(AuctionError::Unexpected(format!("{} is not the initiator", self.me)));
        }
        Ok(self.pass(AuctionToken::new(auction_id)))
    }

    pub fn receive(&self, mut token: AuctionToken) -> Result<Hand, AuctionError> {
        let n = self.ring.len();
        let expected_sender = (self.index + n - 1) % n;
        if token.hop as usize != expected_sender {
            return Err(AuctionError::Unexpected(format!(
                "{} got a token from ring index {}, expected {}",
                self.me, token.hop, expected_sender
            )));
        }
        if token.round as usize > n {
            return Err(AuctionError::Unexpected(format!("round {} exceeds ring size {n}", token.round)));
        }
        if !self.is_initiator() {
            return Ok(self.pass(token));
        }
        let winners = std::mem::take(&mut token.bids);
        for (goal, (_, agent)) in winners {
            token.fixed.insert(goal, agent);
        }
        if token.fixed.len() >= n {
            return Ok(Hand::Finished { assignment: token.fixed, rounds: token.round });
        }
        token.round += 1;
        Ok(self.pass(token))
    }
}

/// Runs the same ring protocol in a single thread by handing the token along
/// directly. Returns the assignment, rounds and token hops.
pub fn simulate(
    ring: &RingTopology,
    tables: &BTreeMap<AgentId, Vec<ScoredGoal>>,
) -> Result<(BTreeMap<GoalId, AgentId>, u32, usize), AuctionError> {
    let participants = ring
        .agents()
        .iter()
        .map(|a| {
            let table = tables.get(a).ok_or_else(|| AuctionError::MissingTable(a.clone()))?;
            Participant::new(a.clone(), ring.clone(), table)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut hand = participants[0].open(1)?;
    let mut messages = 0;
    loop {
        match hand {
            Hand::Finished { assignment, rounds } => return Ok((assignment, rounds, messages)),
            Hand::Pass { to, token } => {
                messages += 1;
                let next = ring.position(&to).expect("successor is in the ring");
                hand = participants[next].receive(token)?;
            }
        }
    }
}
