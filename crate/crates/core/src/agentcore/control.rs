//! The per-step loop that ties belief, bus and simulator together.

use std::collections::{BTreeMap, VecDeque};
use std::io;
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use thiserror::Error;

use super::link::{ClientMsg, LineLink, ServerMsg};
use super::{
    candidate_goals, decide, decode_percept, encode_percept, goal_done, hunt_goal, Belief, Percept, PolicyConfig, Role,
    Roster,
};
use crate::auction::{
    decode_token, participate, score_goals, Announcement, AuctionConfig, AuctionError, Goal, RingTopology,
};
use crate::msgbus::{BusClient, BusError, Envelope, Topic, AUCTION_TOPIC, PERCEPTS_TOPIC};
use crate::AgentId;

/// Auction ids available to one step; restarts consume the spare ones.
const IDS_PER_STEP: u64 = 8;

/// Called once per step after teammates' shares have been drained.
pub trait StepObserver: Send + Sync {
    /// `complete` is false when the deadline cut the drain short.
    fn after_drain(&self, belief: &Belief, complete: bool);
}

#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub id: AgentId,
    pub policy: PolicyConfig,
    /// Budget for draining shares and coordinating within one step.
    pub step_deadline: Duration,
    pub auction: AuctionConfig,
    /// How long to wait for the simulator's handshake replies.
    pub hello_timeout: Duration,
}

impl AgentConfig {
    pub fn new(id: AgentId, step_deadline: Duration) -> Self {
        Self {
            id,
            policy: PolicyConfig::default(),
            step_deadline,
            auction: AuctionConfig {
                round_deadline: step_deadline / 4,
                roll_call: step_deadline / 10,
                idle_deadline: step_deadline / 2,
                max_restarts: 2,
            },
            hello_timeout: Duration::from_secs(10),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AgentReport {
    pub steps: u64,
    /// Final scores as announced by the simulator; `None` if the link closed
    /// without an `END`.
    pub final_scores: Option<(u64, u64)>,
    pub auctions_won: u64,
    pub auction_failures: u64,
    /// Steps whose drain ended at the deadline.
    pub short_drains: u64,
    pub stale: u64,
    pub decode_errors: u64,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("simulator rejected {agent}: {reason}")]
    Rejected { agent: AgentId, reason: String },
    #[error("simulator protocol: {0}")]
    Protocol(String),
    #[error("simulator link: {0}")]
    Link(#[from] io::Error),
    #[error(transparent)]
    Bus(#[from] BusError),
}

/// Bus client that serves held-back envelopes before live ones.
struct Inbox<'a> {
    client: &'a mut dyn BusClient,
    held: VecDeque<Envelope>,
}

impl BusClient for Inbox<'_> {
    fn id(&self) -> &str {
        self.client.id()
    }

    fn subscribe(&mut self, topic: &str) -> Result<(), BusError> {
        self.client.subscribe(topic)
    }

    fn unsubscribe(&mut self, topic: &str) -> Result<(), BusError> {
        self.client.unsubscribe(topic)
    }

    fn publish(&mut self, topic: &str, payload: &[u8]) -> Result<(), BusError> {
        self.client.publish(topic, payload)
    }

    fn next_message(&mut self, timeout: Duration) -> Result<Option<Envelope>, BusError> {
        match self.held.pop_front() {
            Some(env) => Ok(Some(env)),
            None => self.client.next_message(timeout),
        }
    }
}

/// Auction id carried by a token or announcement, if any.
fn auction_of(env: &Envelope) -> Option<u64> {
    let text = std::str::from_utf8(&env.payload).ok()?;
    if env.topic.as_str() == AUCTION_TOPIC {
        Announcement::decode(text).ok().map(|a| a.auction())
    } else {
        decode_token(text).ok().map(|t| t.auction_id)
    }
}

struct Assignment {
    auction: u64,
    ring: Vec<AgentId>,
}

struct Agent<'o> {
    cfg: AgentConfig,
    belief: Belief,
    teammates: Vec<AgentId>,
    /// Non-saboteur roster members, sorted; the first one initiates.
    bidders: Vec<AgentId>,
    shared_at: BTreeMap<AgentId, u64>,
    /// Last auction this agent initiated, if it succeeded.
    current: Option<Assignment>,
    dirty: bool,
    goal_auction: Option<u64>,
    goal_held: u64,
    report: AgentReport,
    observer: Option<&'o dyn StepObserver>,
}

impl Agent<'_> {
    fn me(&self) -> &AgentId {
        &self.cfg.id
    }

    fn is_initiator(&self) -> bool {
        self.bidders.first() == Some(&self.cfg.id)
    }

    /// Consumes shares and goal reports; hands back anything else.
    fn absorb(&mut self, env: Envelope) -> Option<Envelope> {
        // Teams may share a broker; only teammates are heard.
        if !self.teammates.iter().any(|m| m.as_str() == env.sender) {
            return None;
        }
        if env.topic.as_str() == PERCEPTS_TOPIC {
            let decoded = std::str::from_utf8(&env.payload)
                .map_err(|e| e.to_string())
                .and_then(|t| decode_percept(t).map_err(|e| e.to_string()));
            match decoded {
                Ok(p) => {
                    let at = self.shared_at.entry(p.sender.clone()).or_default();
                    *at = (*at).max(p.step);
                    if let Err(e) = self.belief.integrate(&p) {
                        warn!("{}: share from {} rejected: {e}", self.cfg.id, p.sender);
                        self.belief.decode_errors += 1;
                    }
                }
                Err(e) => {
                    warn!("{}: undecodable share from {}: {e}", self.cfg.id, env.sender);
                    self.belief.decode_errors += 1;
                }
            }
            return None;
        }
        if env.topic.as_str() == AUCTION_TOPIC {
            let ann = std::str::from_utf8(&env.payload).ok().and_then(|t| Announcement::decode(t).ok());
            if let Some(Announcement::Done { auction, .. }) = ann {
                if self.current.as_ref().is_some_and(|c| c.auction == auction) {
                    self.dirty = true;
                }
                return None;
            }
        }
        Some(env)
    }

    fn hold(&mut self, inbox: &mut Inbox<'_>, env: Envelope) {
        if let Some(rest) = self.absorb(env) {
            inbox.held.push_back(rest);
        }
    }

    fn step(&mut self, inbox: &mut Inbox<'_>, sim: &mut dyn LineLink, percept: Percept) -> Result<(), AgentError> {
        let t = percept.step;
        let deadline = Instant::now() + self.cfg.step_deadline;
        self.belief.integrate(&percept).map_err(|e| AgentError::Protocol(format!("own percept of step {t}: {e}")))?;
        let base = t * IDS_PER_STEP;
        inbox.held.retain(|env| auction_of(env).is_none_or(|id| id >= base));

        self.review_goal(inbox)?;
        inbox.publish(PERCEPTS_TOPIC, encode_percept(&percept.shared()).as_bytes())?;

        let complete = self.drain(inbox, t, deadline)?;
        if !complete {
            self.report.short_drains += 1;
        }
        if let Some(observer) = self.observer {
            observer.after_drain(&self.belief, complete);
        }

        if self.belief.role() == Role::Saboteur {
            self.belief.goal = hunt_goal(&self.belief, &self.cfg.policy);
        } else if !self.bidders.is_empty() {
            self.coordinate(inbox, t, deadline)?;
        }

        let action = decide(&self.belief, &self.cfg.policy);
        debug!("{} step {t}: {action}", self.cfg.id);
        self.belief.last_action = Some(action.clone());
        sim.send_line(&ClientMsg::Act { step: t, action }.encode())?;
        self.report.steps += 1;
        Ok(())
    }

    fn review_goal(&mut self, inbox: &mut Inbox<'_>) -> Result<(), AgentError> {
        let Some(goal) = self.belief.goal else {
            return Ok(());
        };
        if self.belief.position() == Some(goal.target) {
            self.goal_held += 1;
        }
        if !goal_done(&self.belief, &goal, self.goal_held, &self.cfg.policy) {
            return Ok(());
        }
        if let Some(auction) = self.goal_auction.take() {
            let done = Announcement::Done { auction, agent: self.cfg.id.clone(), goal: goal.id };
            inbox.publish(AUCTION_TOPIC, done.encode().as_bytes())?;
            if self.current.as_ref().is_some_and(|c| c.auction == auction) {
                self.dirty = true;
            }
        }
        self.belief.goal = None;
        self.goal_held = 0;
        Ok(())
    }

    /// Reads until every teammate's share of step `t` is in or the deadline
    /// passes. Returns whether all shares arrived.
    fn drain(&mut self, inbox: &mut Inbox<'_>, t: u64, deadline: Instant) -> Result<bool, AgentError> {
        loop {
            let missing = self.teammates.iter().any(|m| self.shared_at.get(m).is_none_or(|&s| s < t));
            if !missing {
                return Ok(true);
            }
            let now = Instant::now();
            if now >= deadline {
                return Ok(false);
            }
            if let Some(env) = inbox.client.next_message(deadline - now)? {
                self.hold(inbox, env);
            }
        }
    }

    fn active_ring(&self, t: u64) -> Vec<AgentId> {
        self.bidders
            .iter()
            .filter(|b| *b == self.me() || self.shared_at.get(*b).is_some_and(|&s| s + 1 >= t))
            .cloned()
            .collect()
    }

    fn coordinate(&mut self, inbox: &mut Inbox<'_>, t: u64, deadline: Instant) -> Result<(), AgentError> {
        let base = t * IDS_PER_STEP;
        if self.is_initiator() {
            let ring = self.active_ring(t);
            let stale = match &self.current {
                None => true,
                Some(c) => self.dirty || c.ring != ring,
            };
            let goals = candidate_goals(self.belief.graph(), ring.len());
            if stale && goals.len() >= ring.len() {
                let start = Announcement::Start { auction: base, ring: ring.clone(), goals: goals.clone() };
                inbox.publish(AUCTION_TOPIC, start.encode().as_bytes())?;
                self.current = None;
                self.dirty = false;
                self.join(inbox, base, ring, goals)?;
            } else {
                inbox.publish(AUCTION_TOPIC, Announcement::Skip { auction: base }.encode().as_bytes())?;
            }
            return Ok(());
        }

        let mut deferred = Vec::new();
        let result = loop {
            let now = Instant::now();
            if now >= deadline {
                debug!("{}: no word from the initiator in step {t}", self.cfg.id);
                break Ok(());
            }
            let Some(env) = inbox.next_message(deadline - now)? else {
                continue;
            };
            let Some(env) = self.absorb(env) else {
                continue;
            };
            let Some(id) = auction_of(&env) else {
                continue;
            };
            if id < base {
                continue;
            }
            if env.topic.as_str() != AUCTION_TOPIC {
                deferred.push(env);
                continue;
            }
            let ann = std::str::from_utf8(&env.payload).ok().and_then(|t| Announcement::decode(t).ok());
            match ann {
                Some(Announcement::Start { auction, ring, goals }) if auction < base + IDS_PER_STEP => {
                    for env in deferred.drain(..).rev() {
                        inbox.held.push_front(env);
                    }
                    break self.join(inbox, auction, ring, goals);
                }
                Some(Announcement::Skip { auction }) if auction < base + IDS_PER_STEP => break Ok(()),
                _ => deferred.push(env),
            }
        };
        for env in deferred.into_iter().rev() {
            inbox.held.push_front(env);
        }
        result
    }

    fn join(
        &mut self,
        inbox: &mut Inbox<'_>,
        auction: u64,
        ring: Vec<AgentId>,
        goals: Vec<Goal>,
    ) -> Result<(), AgentError> {
        if !ring.contains(&self.cfg.id) {
            return Ok(());
        }
        let Some(pos) = self.belief.position() else {
            return Ok(());
        };
        let table = score_goals(self.belief.graph(), self.belief.index(), pos, &goals, goals.len());
        let me = self.cfg.id.clone();
        let auction_cfg = self.cfg.auction;
        let mut leftovers = Vec::new();
        let outcome = RingTopology::new(ring).and_then(|ring| {
            participate(inbox, &me, ring, auction, &goals, &table, &auction_cfg, &mut |env| leftovers.push(env))
        });
        for env in leftovers {
            self.hold(inbox, env);
        }
        match outcome {
            Ok(outcome) => {
                if self.is_initiator() {
                    self.current = Some(Assignment { auction: outcome.auction, ring: outcome.ring.agents().to_vec() });
                }
                let won = outcome.assignment.get(&me).and_then(|g| goals.iter().find(|goal| goal.id == *g));
                if let Some(goal) = won {
                    if self.belief.goal != Some(*goal) {
                        self.goal_held = 0;
                        self.belief.goal_since = self.belief.step();
                    }
                    self.belief.goal = Some(*goal);
                    self.goal_auction = Some(outcome.auction);
                    self.report.auctions_won += 1;
                }
                Ok(())
            }
            Err(AuctionError::Bus(e)) => Err(e.into()),
            Err(e) => {
                warn!("{me}: auction {auction} failed: {e}");
                self.report.auction_failures += 1;
                if self.is_initiator() {
                    self.dirty = true;
                }
                Ok(())
            }
        }
    }
}

fn expect_line(sim: &mut dyn LineLink, timeout: Duration, what: &str) -> Result<ServerMsg, AgentError> {
    let line =
        sim.recv_line(Some(timeout))?.ok_or_else(|| AgentError::Protocol(format!("timed out waiting for {what}")))?;
    ServerMsg::parse(&line).map_err(AgentError::Protocol)
}

/// Plays one match: handshake with the simulator, then one [`Agent::step`]
/// per percept until `END` or the simulator hangs up.
///
/// `bus` must be a fresh client named after the agent on the team's bus.
pub fn run_agent(
    cfg: &AgentConfig,
    bus: &mut dyn BusClient,
    sim: &mut dyn LineLink,
    observer: Option<&dyn StepObserver>,
) -> Result<AgentReport, AgentError> {
    let me = cfg.id.clone();
    // Subscribed before HELLO, so no teammate can share before we listen.
    bus.subscribe(PERCEPTS_TOPIC)?;
    bus.subscribe(AUCTION_TOPIC)?;
    bus.subscribe(Topic::mailbox(&me).as_str())?;
    sim.send_line(&ClientMsg::Hello(me.clone()).encode())?;
    match expect_line(sim, cfg.hello_timeout, "OK")? {
        ServerMsg::Ok => {}
        ServerMsg::Err(reason) => return Err(AgentError::Rejected { agent: me, reason }),
        other => return Err(AgentError::Protocol(format!("expected OK, got {}", other.encode()))),
    }
    let roster: Roster = match expect_line(sim, cfg.hello_timeout, "TEAM")? {
        ServerMsg::Team(roster) => roster,
        other => return Err(AgentError::Protocol(format!("expected TEAM, got {}", other.encode()))),
    };
    let role = roster
        .members
        .iter()
        .find(|m| m.id == me)
        .map(|m| m.role)
        .ok_or_else(|| AgentError::Protocol(format!("{me} missing from its own roster")))?;

    let mut bidders: Vec<AgentId> =
        roster.members.iter().filter(|m| m.role != Role::Saboteur).map(|m| m.id.clone()).collect();
    bidders.sort();
    let mut agent = Agent {
        cfg: cfg.clone(),
        belief: Belief::new(me.clone(), roster.team.clone(), role),
        teammates: roster.members.iter().map(|m| m.id.clone()).filter(|id| *id != me).collect(),
        bidders,
        shared_at: BTreeMap::new(),
        current: None,
        dirty: false,
        goal_auction: None,
        goal_held: 0,
        report: AgentReport::default(),
        observer,
    };
    info!("{me} joined {} as {role}", roster.team);

    let mut inbox = Inbox { client: bus, held: VecDeque::new() };
    loop {
        let line = match sim.recv_line(None) {
            Ok(Some(line)) => line,
            Ok(None) => continue,
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => {
                info!("{me}: simulator closed the link");
                break;
            }
            Err(e) => return Err(e.into()),
        };
        match ServerMsg::parse(&line).map_err(AgentError::Protocol)? {
            ServerMsg::Percept(p) if p.sender == me => agent.step(&mut inbox, sim, p)?,
            ServerMsg::Percept(p) => return Err(AgentError::Protocol(format!("percept addressed to {}", p.sender))),
            ServerMsg::End(a, b) => {
                agent.report.final_scores = Some((a, b));
                break;
            }
            other => return Err(AgentError::Protocol(format!("unexpected {}", other.encode()))),
        }
    }
    agent.report.stale = agent.belief.stale;
    agent.report.decode_errors = agent.belief.decode_errors;
    Ok(agent.report)
}
