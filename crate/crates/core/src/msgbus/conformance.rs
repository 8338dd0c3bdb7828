//! Scripted conformance runs: replay one subscribe/publish/unsubscribe script
//! against any [`BusConnector`] and compare the per-client delivery
//! transcripts with a single-threaded reference model of the delivery
//! contract.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BusConnector, BusError, Envelope, Topic};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptOp {
    Subscribe { client: usize, topic: usize },
    Unsubscribe { client: usize, topic: usize },
    Publish { client: usize, topic: usize, payload: Vec<u8> },
}

#[derive(Debug, Clone)]
pub struct Script {
    pub clients: Vec<String>,
    pub topics: Vec<String>,
    pub ops: Vec<ScriptOp>,
}

/// Deliveries per client, in arrival order.
pub type Transcript = BTreeMap<String, Vec<Envelope>>;

impl Script {
    /// Uniform mix of the three operations. Payloads are short random byte
    /// strings, newlines included.
    pub fn random(seed: u64, clients: usize, topics: usize, len: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops = (0..len)
            .map(|_| {
                let client = rng.gen_range(0..clients);
                let topic = rng.gen_range(0..topics);
                match rng.gen_range(0..3) {
                    0 => ScriptOp::Subscribe { client, topic },
                    1 => ScriptOp::Unsubscribe { client, topic },
                    _ => {
                        let n = rng.gen_range(0..24);
                        let payload = (0..n).map(|_| rng.gen()).collect();
                        ScriptOp::Publish { client, topic, payload }
                    }
                }
            })
            .collect();
        Self {
            clients: (0..clients).map(|i| format!("c{i}")).collect(),
            topics: (0..topics).map(|i| format!("topic.{i}")).collect(),
            ops,
        }
    }
}

/// Runs the script op by op, then drains every client until it has been
/// idle for `settle`.
pub fn run_script(connector: &dyn BusConnector, script: &Script, settle: Duration) -> Result<Transcript, BusError> {
    let mut clients = script.clients.iter().map(|id| connector.connect(id)).collect::<Result<Vec<_>, _>>()?;
    for op in &script.ops {
        match op {
            ScriptOp::Subscribe { client, topic } => clients[*client].subscribe(&script.topics[*topic])?,
            ScriptOp::Unsubscribe { client, topic } => clients[*client].unsubscribe(&script.topics[*topic])?,
            ScriptOp::Publish { client, topic, payload } => {
                clients[*client].publish(&script.topics[*topic], payload)?
            }
        }
    }
    let mut transcript = Transcript::new();
    for client in &mut clients {
        let mut got = Vec::new();
        while let Some(env) = client.next_message(settle)? {
            got.push(env);
        }
        transcript.insert(client.id().to_string(), got);
    }
    Ok(transcript)
}

/// What the delivery contract says each client must receive.
pub fn model_transcript(script: &Script) -> Transcript {
    let mut subs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut seqs: HashMap<(usize, usize), u64> = HashMap::new();
    let mut out: Transcript = script.clients.iter().map(|c| (c.clone(), Vec::new())).collect();
    for op in &script.ops {
        match op {
            ScriptOp::Subscribe { client, topic } => {
                subs.insert((*client, *topic));
            }
            ScriptOp::Unsubscribe { client, topic } => {
                subs.remove(&(*client, *topic));
            }
            ScriptOp::Publish { client, topic, payload } => {
                let seq = seqs.entry((*client, *topic)).or_insert(0);
                *seq += 1;
                let env = Envelope {
                    topic: Topic::new(&script.topics[*topic]).expect("script topics are valid"),
                    sender: script.clients[*client].clone(),
                    seq: *seq,
                    payload: payload.clone(),
                };
                for (sub, _) in subs.iter().filter(|(_, t)| t == topic) {
                    out.get_mut(&script.clients[*sub]).expect("known client").push(env.clone());
                }
            }
        }
    }
    out
}

/// Envelopes whose sequence number does not increase per (sender, topic).
pub fn fifo_violations(transcript: &Transcript) -> Vec<String> {
    let mut problems = Vec::new();
    for (client, envs) in transcript {
        let mut last: HashMap<(&str, &str), u64> = HashMap::new();
        for env in envs {
            let key = (env.sender.as_str(), env.topic.as_str());
            if let Some(&prev) = last.get(&key) {
                if env.seq <= prev {
                    problems.push(format!("{client}: {}@{} seq {} after {}", env.sender, env.topic, env.seq, prev));
                }
            }
            last.insert(key, env.seq);
        }
    }
    problems
}
