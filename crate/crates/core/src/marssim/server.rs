use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::net::TcpListener;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use thiserror::Error;

use super::{Replay, Setup, StepRecord};
use crate::agentcore::link::{ClientMsg, LineLink, LineSink, ServerMsg, TcpLink};
use crate::agentcore::{Percept, Roster, Teammate};
use crate::AgentId;

const POLL: Duration = Duration::from_millis(50);

#[derive(Debug, Clone, Copy)]
pub struct ServeOptions {
    /// How long every expected agent has to say `HELLO`.
    pub hello_timeout: Duration,
    /// Keep every percept sent, grouped by step.
    pub record_percepts: bool,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self { hello_timeout: Duration::from_secs(10), record_percepts: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub scores: [u64; 2],
    /// Cumulative scores after each step.
    pub series: Vec<[u64; 2]>,
    pub replay: Replay,
    /// Percepts sent at each step, when recorded; index 0 is step 1.
    pub percepts: Vec<Vec<Percept>>,
    /// Actions that were missing at a step deadline.
    pub missed: u64,
}

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("agents never connected: {}", .0.iter().map(|a| a.as_str()).collect::<Vec<_>>().join(", "))]
    MissingAgents(Vec<AgentId>),
    #[error("simulator i/o: {0}")]
    Io(#[from] io::Error),
}

enum Event {
    Line(usize, String),
    Closed(usize),
}

/// Reader threads stop polling once dropped.
struct StopOnDrop(Arc<AtomicBool>);

impl Drop for StopOnDrop {
    fn drop(&mut self) {
        self.0.store(true, Ordering::SeqCst);
    }
}

/// Accepts `n` simulator connections on `listener` within `timeout`.
pub fn accept_agents(listener: &TcpListener, n: usize, timeout: Duration) -> io::Result<Vec<Box<dyn LineLink>>> {
    listener.set_nonblocking(true)?;
    let deadline = Instant::now() + timeout;
    let mut links: Vec<Box<dyn LineLink>> = Vec::new();
    while links.len() < n {
        match listener.accept() {
            Ok((stream, peer)) => {
                debug!("simulator connection from {peer}");
                stream.set_nonblocking(false)?;
                links.push(Box::new(TcpLink::from_stream(stream)?));
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    break;
                }
                thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(e),
        }
    }
    listener.set_nonblocking(false)?;
    Ok(links)
}

struct Seats {
    sinks: Vec<Option<Box<dyn LineSink>>>,
    agent_of: Vec<Option<AgentId>>,
    seat_of: BTreeMap<AgentId, usize>,
}

impl Seats {
    fn send(&mut self, seat: usize, msg: &ServerMsg) {
        if let Some(sink) = &mut self.sinks[seat] {
            if let Err(e) = sink.send_line(&msg.encode()) {
                warn!("dropping seat {seat}: {e}");
                self.close(seat);
            }
        }
    }

    fn close(&mut self, seat: usize) {
        self.sinks[seat] = None;
        if let Some(agent) = &self.agent_of[seat] {
            self.seat_of.remove(agent);
        }
    }
}

/// Runs a whole match over already-open simulator links. Agents that
/// disconnect or miss a step deadline play `noop` for that step.
pub fn run_match(setup: &Setup, links: Vec<Box<dyn LineLink>>, opts: &ServeOptions) -> Result<MatchResult, MatchError> {
    let stop = Arc::new(AtomicBool::new(false));
    let _stop = StopOnDrop(stop.clone());
    let (tx, events) = mpsc::channel();
    let mut seats = Seats { sinks: Vec::new(), agent_of: vec![None; links.len()], seat_of: BTreeMap::new() };
    for (i, link) in links.into_iter().enumerate() {
        seats.sinks.push(Some(link.sink()?));
        let tx = tx.clone();
        let stop = stop.clone();
        thread::spawn(move || {
            let mut link = link;
            while !stop.load(Ordering::SeqCst) {
                match link.recv_line(Some(POLL)) {
                    Ok(Some(line)) => {
                        if tx.send(Event::Line(i, line)).is_err() {
                            return;
                        }
                    }
                    Ok(None) => {}
                    Err(_) => {
                        let _ = tx.send(Event::Closed(i));
                        return;
                    }
                }
            }
        });
    }
    drop(tx);

    handshake(setup, &mut seats, &events, opts.hello_timeout)?;

    let mut state = setup.initial_state();
    let mut records = Vec::with_capacity(setup.steps as usize);
    let mut percepts = Vec::new();
    let mut missed = 0;
    for t in 1..=setup.steps {
        let mut sent = Vec::new();
        for id in &setup.active {
            let p = state.percept(id).expect("active agents are placed");
            if let Some(&seat) = seats.seat_of.get(id) {
                seats.send(seat, &ServerMsg::Percept(p.clone()));
            }
            if opts.record_percepts {
                sent.push(p);
            }
        }
        percepts.push(sent);

        let mut waiting: BTreeSet<AgentId> = seats.seat_of.keys().cloned().collect();
        let mut actions = BTreeMap::new();
        let deadline = Instant::now() + setup.step_duration;
        while !waiting.is_empty() {
            let left = deadline.saturating_duration_since(Instant::now());
            match events.recv_timeout(left) {
                Ok(Event::Line(seat, line)) => {
                    let Some(agent) = seats.agent_of[seat].clone() else {
                        continue;
                    };
                    match ClientMsg::parse(&line) {
                        Ok(ClientMsg::Act { step, action }) if step == t => {
                            if waiting.remove(&agent) {
                                actions.insert(agent, action);
                            }
                        }
                        Ok(ClientMsg::Act { step, .. }) => {
                            debug!("{agent}: late action for step {step}")
                        }
                        Ok(other) => warn!("{agent}: unexpected {}", other.encode()),
                        Err(e) => warn!("{agent}: {e}"),
                    }
                }
                Ok(Event::Closed(seat)) => {
                    if let Some(agent) = seats.agent_of[seat].clone() {
                        info!("{agent} disconnected at step {t}");
                        waiting.remove(&agent);
                    }
                    seats.close(seat);
                }
                Err(RecvTimeoutError::Timeout) => {
                    debug!("step {t}: no action from {waiting:?}");
                    missed += waiting.len() as u64;
                    break;
                }
                Err(RecvTimeoutError::Disconnected) => break,
            }
        }
        let (applied, _) = state.step(&actions);
        records.push(StepRecord { step: t, actions: applied, scores: state.scores() });
    }

    let scores = state.scores();
    let seated: Vec<usize> = seats.seat_of.values().copied().collect();
    for seat in seated {
        seats.send(seat, &ServerMsg::End(scores[0], scores[1]));
    }
    info!("match over: {} {} vs {} {}", setup.teams[0], scores[0], setup.teams[1], scores[1]);
    let series = records.iter().map(|r| r.scores).collect();
    Ok(MatchResult { scores, series, replay: Replay::new(setup, records), percepts, missed })
}

fn handshake(
    setup: &Setup,
    seats: &mut Seats,
    events: &mpsc::Receiver<Event>,
    timeout: Duration,
) -> Result<(), MatchError> {
    let deadline = Instant::now() + timeout;
    while seats.seat_of.len() < setup.active.len() {
        let left = deadline.saturating_duration_since(Instant::now());
        let event = match events.recv_timeout(left) {
            Ok(event) => event,
            Err(_) => {
                let missing = setup.active.iter().filter(|a| !seats.seat_of.contains_key(*a)).cloned().collect();
                return Err(MatchError::MissingAgents(missing));
            }
        };
        match event {
            Event::Line(seat, line) => {
                let reply = match ClientMsg::parse(&line) {
                    _ if seats.agent_of[seat].is_some() => Err("already registered".to_string()),
                    Ok(ClientMsg::Hello(id)) if !setup.active.contains(&id) => Err(format!("unknown agent {id}")),
                    Ok(ClientMsg::Hello(id)) if seats.seat_of.contains_key(&id) => {
                        Err(format!("{id} is already connected"))
                    }
                    Ok(ClientMsg::Hello(id)) => Ok(id),
                    Ok(other) => Err(format!("expected HELLO, got {}", other.encode())),
                    Err(e) => Err(e),
                };
                match reply {
                    Ok(id) => {
                        let placement = setup.placements.iter().find(|p| p.id == id).expect("active agents are placed");
                        let members =
                            setup.roster(placement.team).into_iter().map(|(id, role)| Teammate { id, role }).collect();
                        let roster = Roster { team: setup.teams[placement.team].clone(), members };
                        seats.agent_of[seat] = Some(id.clone());
                        seats.seat_of.insert(id.clone(), seat);
                        seats.send(seat, &ServerMsg::Ok);
                        seats.send(seat, &ServerMsg::Team(roster));
                        debug!("{id} registered");
                    }
                    Err(reason) => {
                        warn!("refusing seat {seat}: {reason}");
                        seats.send(seat, &ServerMsg::Err(reason));
                    }
                }
            }
            Event::Closed(seat) => seats.close(seat),
        }
    }
    Ok(())
}
