use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use super::{valid_client_id, BusConfig, BusError, Envelope, ErrCode, Topic};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Closed {
    Disconnected,
    Overflow,
}

impl From<Closed> for BusError {
    fn from(c: Closed) -> Self {
        match c {
            Closed::Disconnected => BusError::Disconnected,
            Closed::Overflow => BusError::Overflow,
        }
    }
}

struct Queue {
    items: VecDeque<Envelope>,
    closed: Option<Closed>,
}

/// Bounded per-client FIFO.
pub(crate) struct Mailbox {
    queue: Mutex<Queue>,
    ready: Condvar,
    capacity: usize,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl Mailbox {
    fn new(capacity: usize) -> Self {
        Self { queue: Mutex::new(Queue { items: VecDeque::new(), closed: None }), ready: Condvar::new(), capacity }
    }

    /// Returns false when the queue is full.
    fn push(&self, env: Envelope) -> bool {
        let mut q = lock(&self.queue);
        if q.closed.is_some() {
            return true;
        }
        if q.items.len() >= self.capacity {
            return false;
        }
        q.items.push_back(env);
        self.ready.notify_one();
        true
    }

    pub(crate) fn close(&self, reason: Closed) {
        let mut q = lock(&self.queue);
        if q.closed.is_none() {
            q.closed = Some(reason);
            q.items.clear();
        }
        self.ready.notify_all();
    }

    /// Waits up to `timeout` (forever if `None`).
    pub(crate) fn pop(&self, timeout: Option<Duration>) -> Result<Option<Envelope>, Closed> {
        let deadline = timeout.map(|t| Instant::now() + t);
        let mut q = lock(&self.queue);
        loop {
            if let Some(reason) = q.closed {
                return Err(reason);
            }
            if let Some(env) = q.items.pop_front() {
                return Ok(Some(env));
            }
            q = match deadline {
                None => self.ready.wait(q).unwrap_or_else(|p| p.into_inner()),
                Some(deadline) => {
                    let now = Instant::now();
                    if now >= deadline {
                        return Ok(None);
                    }
                    self.ready.wait_timeout(q, deadline - now).unwrap_or_else(|p| p.into_inner()).0
                }
            };
        }
    }
}

#[derive(Default)]
struct Routes {
    clients: HashMap<String, Arc<Mailbox>>,
    subscribers: HashMap<Topic, BTreeSet<String>>,
    seqs: HashMap<(String, Topic), u64>,
}

/// Routing state shared by every transport. Fan-out happens under one lock,
/// so a publish is never observed half-delivered.
pub(crate) struct Hub {
    config: BusConfig,
    routes: Mutex<Routes>,
}

impl Hub {
    pub(crate) fn new(config: BusConfig) -> Self {
        Self { config, routes: Mutex::new(Routes::default()) }
    }

    pub(crate) fn register(&self, id: &str) -> Result<Arc<Mailbox>, BusError> {
        if !valid_client_id(id) {
            return Err(BusError::Rejected(ErrCode::Id));
        }
        let mut routes = lock(&self.routes);
        if routes.clients.contains_key(id) {
            return Err(BusError::Rejected(ErrCode::Id));
        }
        let mailbox = Arc::new(Mailbox::new(self.config.queue_capacity));
        routes.clients.insert(id.to_string(), Arc::clone(&mailbox));
        Ok(mailbox)
    }

    pub(crate) fn unregister(&self, id: &str) {
        let mut routes = lock(&self.routes);
        Self::drop_client(&mut routes, id, Closed::Disconnected);
    }

    fn drop_client(routes: &mut Routes, id: &str, reason: Closed) {
        if let Some(mailbox) = routes.clients.remove(id) {
            mailbox.close(reason);
        }
        routes.subscribers.retain(|_, subs| {
            subs.remove(id);
            !subs.is_empty()
        });
        if reason == Closed::Overflow {
            log::warn!("bus client {id} disconnected: queue overflow");
        }
    }

    fn connected<'a>(routes: &'a Routes, id: &str) -> Result<&'a Arc<Mailbox>, BusError> {
        routes.clients.get(id).ok_or(BusError::Disconnected)
    }

    pub(crate) fn subscribe(&self, id: &str, topic: &str) -> Result<(), BusError> {
        let topic = Topic::new(topic)?;
        let mut routes = lock(&self.routes);
        Self::connected(&routes, id)?;
        routes.subscribers.entry(topic).or_default().insert(id.to_string());
        Ok(())
    }

    pub(crate) fn unsubscribe(&self, id: &str, topic: &str) -> Result<(), BusError> {
        let topic = Topic::new(topic)?;
        let mut routes = lock(&self.routes);
        Self::connected(&routes, id)?;
        if let Some(subs) = routes.subscribers.get_mut(&topic) {
            subs.remove(id);
            if subs.is_empty() {
                routes.subscribers.remove(&topic);
            }
        }
        Ok(())
    }

    pub(crate) fn publish(&self, id: &str, topic: &str, payload: &[u8]) -> Result<(), BusError> {
        let topic = Topic::new(topic)?;
        if payload.len() > self.config.max_payload {
            return Err(BusError::Rejected(ErrCode::Size));
        }
        let mut routes = lock(&self.routes);
        Self::connected(&routes, id)?;
        let seq = routes.seqs.entry((id.to_string(), topic.clone())).or_insert(0);
        *seq += 1;
        let env = Envelope { topic: topic.clone(), sender: id.to_string(), seq: *seq, payload: payload.to_vec() };
        let Some(subs) = routes.subscribers.get(&topic) else {
            return Ok(());
        };
        let mut overflowed = Vec::new();
        for sub in subs {
            if !routes.clients[sub].push(env.clone()) {
                overflowed.push(sub.clone());
            }
        }
        for sub in overflowed {
            Self::drop_client(&mut routes, &sub, Closed::Overflow);
        }
        Ok(())
    }

    pub(crate) fn max_payload(&self) -> usize {
        self.config.max_payload
    }

    pub(crate) fn close_all(&self) {
        let mut routes = lock(&self.routes);
        for (_, mailbox) in routes.clients.drain() {
            mailbox.close(Closed::Disconnected);
        }
        routes.subscribers.clear();
    }
}
