use std::collections::{BTreeMap, BTreeSet};
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};

use super::{
    decode_token, encode_token, Announcement, AuctionError, Goal, GoalId, Hand, Participant, RingTopology, ScoredGoal,
};
use crate::msgbus::{BusClient, BusConnector, Envelope, Topic, AUCTION_TOPIC};
use crate::AgentId;

/// Final assignment and the number of rounds it took.
type Settled = (BTreeMap<GoalId, AgentId>, u32);

#[derive(Debug, Clone, Copy)]
pub struct AuctionConfig {
    /// Initiator's wait for a round to come back before it aborts.
    pub round_deadline: Duration,
    /// Initiator's wait for `ALIVE` replies after an abort.
    pub roll_call: Duration,
    /// Longest silence a non-initiator tolerates before giving up.
    pub idle_deadline: Duration,
    pub max_restarts: u32,
}

impl Default for AuctionConfig {
    fn default() -> Self {
        Self {
            round_deadline: Duration::from_secs(2),
            roll_call: Duration::from_millis(300),
            idle_deadline: Duration::from_secs(5),
            max_restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuctionOutcome {
    /// Id of the run that completed; restarts use fresh ids.
    pub auction: u64,
    /// Ring of the completed run.
    pub ring: RingTopology,
    pub assignment: BTreeMap<AgentId, GoalId>,
    pub rounds: u32,
}

impl AuctionOutcome {
    /// Token messages of the completed run.
    pub fn messages(&self) -> usize {
        self.rounds as usize * self.ring.len()
    }

    fn new(auction: u64, ring: RingTopology, by_goal: BTreeMap<GoalId, AgentId>, rounds: u32) -> Self {
        let assignment = by_goal.into_iter().map(|(g, a)| (a, g)).collect();
        Self { auction, ring, assignment, rounds }
    }
}

struct Link<'a> {
    client: &'a mut dyn BusClient,
    me: &'a AgentId,
    mailbox: Topic,
}

impl Link<'_> {
    fn announce(&mut self, ann: &Announcement) -> Result<(), AuctionError> {
        debug!("{} announces {}", self.me, ann.encode());
        self.client.publish(AUCTION_TOPIC, ann.encode().as_bytes())?;
        Ok(())
    }

    fn send(&mut self, hand: Hand) -> Result<Option<Settled>, AuctionError> {
        match hand {
            Hand::Pass { to, token } => {
                self.client.publish(Topic::mailbox(&to).as_str(), encode_token(&token).as_bytes())?;
                Ok(None)
            }
            Hand::Finished { assignment, rounds } => Ok(Some((assignment, rounds))),
        }
    }
}

enum Incoming {
    Token(super::AuctionToken),
    Announcement(Announcement, Envelope),
    Other(Envelope),
}

fn classify(link: &Link<'_>, env: Envelope) -> Incoming {
    if env.topic == link.mailbox && env.payload.starts_with(b"AUC ") {
        match std::str::from_utf8(&env.payload)
            .map_err(|e| e.to_string())
            .and_then(|t| decode_token(t).map_err(|e| e.to_string()))
        {
            Ok(token) => return Incoming::Token(token),
            Err(e) => {
                warn!("{} dropped a malformed token: {e}", link.me);
                return Incoming::Other(env);
            }
        }
    }
    if env.topic.as_str() == AUCTION_TOPIC && env.sender != link.me.as_str() {
        if let Ok(ann) =
            std::str::from_utf8(&env.payload).map_err(drop).and_then(|t| Announcement::decode(t).map_err(drop))
        {
            return Incoming::Announcement(ann, env);
        }
    }
    Incoming::Other(env)
}

/// Takes part in auction `auction` over `client` until an assignment is
/// known, restarting with the surviving agents if the initiator times out.
///
/// The client must already be subscribed to `agent.<me>` and `team.auction`
/// when the initiator opens the auction. Envelopes unrelated to the auction
/// are passed to `stray`.
#[allow(clippy::too_many_arguments)]
pub fn participate(
    client: &mut dyn BusClient,
    me: &AgentId,
    ring: RingTopology,
    auction: u64,
    goals: &[Goal],
    table: &[ScoredGoal],
    cfg: &AuctionConfig,
    stray: &mut dyn FnMut(Envelope),
) -> Result<AuctionOutcome, AuctionError> {
    let mut link = Link { client, me, mailbox: Topic::mailbox(me) };
    let mut ring = ring;
    let mut auction = auction;
    let mut restarts = 0;
    'run: loop {
        let p = Participant::new(me.clone(), ring.clone(), table)?;
        let wait = if p.is_initiator() { cfg.round_deadline } else { cfg.idle_deadline };
        if p.is_initiator() {
            link.send(p.open(auction)?)?;
        }
        let mut deadline = Instant::now() + wait;
        let mut aborted = false;
        loop {
            let now = Instant::now();
            if now >= deadline {
                if !p.is_initiator() || restarts >= cfg.max_restarts {
                    return Err(AuctionError::Timeout(auction));
                }
                restarts += 1;
                warn!("{me}: auction {auction} stalled, aborting");
                link.announce(&Announcement::Abort { auction })?;
                let alive = roll_call(&mut link, auction, cfg.roll_call, stray)?;
                let survivors: Vec<AgentId> =
                    ring.agents().iter().filter(|a| *a == me || alive.contains(*a)).cloned().collect();
                ring = RingTopology::new(survivors)?;
                auction += 1;
                link.announce(&Announcement::Start { auction, ring: ring.agents().to_vec(), goals: goals.to_vec() })?;
                continue 'run;
            }
            let Some(env) = link.client.next_message(deadline - now)? else {
                continue;
            };
            match classify(&link, env) {
                Incoming::Token(token) if token.auction_id == auction => {
                    if let Some((by_goal, rounds)) = link.send(p.receive(token)?)? {
                        link.announce(&Announcement::Result { auction, rounds, assignment: by_goal.clone() })?;
                        return Ok(AuctionOutcome::new(auction, ring, by_goal, rounds));
                    }
                    deadline = Instant::now() + wait;
                }
                Incoming::Token(token) => {
                    debug!("{me} ignores token of auction {}", token.auction_id)
                }
                Incoming::Announcement(Announcement::Result { auction: id, rounds, assignment }, _)
                    if id == auction && !p.is_initiator() =>
                {
                    return Ok(AuctionOutcome::new(auction, ring, assignment, rounds));
                }
                Incoming::Announcement(Announcement::Abort { auction: id }, _)
                    if id == auction && !p.is_initiator() =>
                {
                    aborted = true;
                    link.announce(&Announcement::Alive { auction, agent: me.clone() })?;
                    deadline = Instant::now() + cfg.idle_deadline;
                }
                Incoming::Announcement(Announcement::Start { auction: id, ring: next, .. }, _)
                    if aborted && id > auction =>
                {
                    let next = RingTopology::new(next)?;
                    if !next.contains(me) {
                        return Err(AuctionError::Excluded { agent: me.clone(), auction: id });
                    }
                    ring = next;
                    auction = id;
                    continue 'run;
                }
                Incoming::Announcement(Announcement::Alive { .. }, _) => {}
                Incoming::Announcement(_, env) => stray(env),
                Incoming::Other(env) => stray(env),
            }
        }
    }
}

fn roll_call(
    link: &mut Link<'_>,
    auction: u64,
    window: Duration,
    stray: &mut dyn FnMut(Envelope),
) -> Result<BTreeSet<AgentId>, AuctionError> {
    let mut alive = BTreeSet::new();
    let end = Instant::now() + window;
    loop {
        let now = Instant::now();
        if now >= end {
            return Ok(alive);
        }
        let Some(env) = link.client.next_message(end - now)? else {
            continue;
        };
        match classify(link, env) {
            Incoming::Announcement(Announcement::Alive { auction: id, agent }, _) if id == auction => {
                alive.insert(agent);
            }
            Incoming::Announcement(Announcement::Done { .. }, env) => stray(env),
            Incoming::Token(_) | Incoming::Announcement(..) => {}
            Incoming::Other(env) => stray(env),
        }
    }
}

/// Runs a complete auction: one thread per ring member, each with its own
/// bus client named after the agent.
pub fn run_auction(
    connector: &dyn BusConnector,
    ring: &RingTopology,
    goals: &[Goal],
    tables: &BTreeMap<AgentId, Vec<ScoredGoal>>,
    cfg: &AuctionConfig,
) -> Result<AuctionOutcome, AuctionError> {
    let n = ring.len();
    if goals.len() < n {
        return Err(AuctionError::TooFewGoals { goals: goals.len(), agents: n });
    }
    let mut ids = BTreeSet::new();
    for g in goals {
        if !ids.insert(g.id) {
            return Err(AuctionError::DuplicateGoal(g.id));
        }
    }
    let mut seats = Vec::with_capacity(n);
    for agent in ring.agents() {
        let table = tables.get(agent).ok_or_else(|| AuctionError::MissingTable(agent.clone()))?;
        Participant::new(agent.clone(), ring.clone(), table)?;
        let mut client = connector.connect(agent.as_str())?;
        client.subscribe(Topic::mailbox(agent).as_str())?;
        client.subscribe(AUCTION_TOPIC)?;
        seats.push((agent, table, client));
    }
    let results: Vec<Result<AuctionOutcome, AuctionError>> = thread::scope(|scope| {
        let handles: Vec<_> = seats
            .into_iter()
            .map(|(agent, table, mut client)| {
                scope
                    .spawn(move || participate(client.as_mut(), agent, ring.clone(), 1, goals, table, cfg, &mut |_| {}))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("auction thread panicked")).collect()
    });
    let mut results = results.into_iter();
    let outcome = results.next().expect("ring is not empty")?;
    for other in results {
        let other = other?;
        if other != outcome {
            return Err(AuctionError::Unexpected(format!(
                "participants disagree: {:?} vs {:?}",
                outcome.assignment, other.assignment
            )));
        }
    }
    Ok(outcome)
}
