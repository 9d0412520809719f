//! Deterministic discrete-event network simulator.
//!
//! Virtual time is integral; events are totally ordered by `(time,
//! sequence)` with the sequence counter assigned at scheduling. Every send
//! runs the fault pipeline of its directed channel: scripted drop, drop
//! draw, delay (link override, fixed bound, or draw), duplicate draw. Each
//! channel owns an independent random stream derived from the master seed,
//! so adding agents leaves other channels' draws untouched.
//!
//! Crash and recover directives fire between events, keyed by trace
//! position. A crashed agent absorbs deliveries without processing them;
//! a crash firing directly after a record suppresses that record's sends
//! while keeping its durable write, the crash-between-write-and-send case.

pub mod fault;
pub mod rng;
pub mod trace;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use thiserror::Error;

use crate::protocol::{AgentNode, DurableSnapshot, Message, StepOutput};
use crate::types::AgentId;

pub use fault::{Directive, FaultPlan, FaultPlanError, LinkDelay};
pub use rng::{channel_seed, fnv1a64, DetRng};
pub use trace::{Trace, TraceEvent, TraceRecord, TRACE_FORMAT_VERSION};

/// Hard cap on trace length; hitting it flags the trace truncated.
pub const EVENT_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("duplicate agent id {id}")]
    DuplicateAgent { id: AgentId },
    #[error("{context} references unknown agent {id}")]
    UnknownAgent { id: AgentId, context: &'static str },
    #[error("{context} targets {id}, which is not a coordinator")]
    NotACoordinator { id: AgentId, context: &'static str },
    #[error(transparent)]
    Fault(#[from] FaultPlanError),
}

/// When the simulation stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCondition {
    /// Run until no events remain.
    Quiescence,
    /// Discard events past this virtual time; a non-empty queue at the
    /// bound flags the trace truncated.
    AtTime(u64),
}

/// A scripted stimulus at an absolute virtual time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptEvent {
    /// Materialize `message` at its recipient with no transit delay.
    Inject { time: u64, message: Message },
    /// Deliver a start-round timeout to a coordinator.
    StartRound {
        time: u64,
        coordinator: AgentId,
        round: Option<u64>,
    },
}

impl ScriptEvent {
    fn time(&self) -> u64 {
        match self {
            ScriptEvent::Inject { time, .. } | ScriptEvent::StartRound { time, .. } => *time,
        }
    }
}

/// Everything a run needs: agents, script, faults, stop condition.
#[derive(Debug, Clone)]
pub struct SimSetup {
    pub name: String,
    pub nodes: Vec<AgentNode>,
    pub script: Vec<ScriptEvent>,
    pub plan: FaultPlan,
    pub stop: StopCondition,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum QueuedKind {
    Deliver(Message),
    Inject(Message),
    Timeout {
        agent: AgentId,
        start_round: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Queued {
    time: u64,
    seq: u64,
    kind: QueuedKind,
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Runs the scenario under `seed`, which keys every channel stream. The
/// same setup and seed always produce byte-identical traces.
pub fn run(setup: &SimSetup, seed: u64) -> Result<Trace, SimError> {
    setup.plan.validate()?;
    let mut engine = Engine::new(setup, seed)?;
    engine.run(setup.stop);
    Ok(Trace {
        scenario: setup.name.clone(),
        seed,
        records: engine.records,
        truncated: engine.truncated,
    })
}

struct Engine {
    nodes: BTreeMap<AgentId, AgentNode>,
    crashed: BTreeSet<AgentId>,
    store: BTreeMap<AgentId, DurableSnapshot>,
    heap: BinaryHeap<Reverse<Queued>>,
    seq: u64,
    clock: u64,
    seed: u64,
    plan: FaultPlan,
    channels: BTreeMap<(AgentId, AgentId), DetRng>,
    directive_fired: Vec<bool>,
    records: Vec<TraceRecord>,
    truncated: bool,
}

impl Engine {
    fn new(setup: &SimSetup, seed: u64) -> Result<Self, SimError> {
        let mut nodes = BTreeMap::new();
        for node in &setup.nodes {
            if nodes.insert(node.id().clone(), node.clone()).is_some() {
                return Err(SimError::DuplicateAgent {
                    id: node.id().clone(),
                });
            }
        }
        for event in &setup.script {
            match event {
                ScriptEvent::Inject { message, .. } => {
                    if !nodes.contains_key(&message.to) {
                        return Err(SimError::UnknownAgent {
                            id: message.to.clone(),
                            context: "script injection",
                        });
                    }
                }
                ScriptEvent::StartRound { coordinator, .. } => match nodes.get(coordinator) {
                    None => {
                        return Err(SimError::UnknownAgent {
                            id: coordinator.clone(),
                            context: "script start_round",
                        })
                    }
                    Some(AgentNode::Coordinator(_)) => {}
                    Some(_) => {
                        return Err(SimError::NotACoordinator {
                            id: coordinator.clone(),
                            context: "script start_round",
                        })
                    }
                },
            }
        }
        for directive in &setup.plan.directives {
            let (id, context) = match directive {
                Directive::Crash { agent, .. } => (agent, "crash directive"),
                Directive::Recover { agent, .. } => (agent, "recover directive"),
                Directive::DropNext { from, .. } => (from, "drop directive"),
            };
            if !nodes.contains_key(id) {
                return Err(SimError::UnknownAgent {
                    id: id.clone(),
                    context,
                });
            }
        }
        let store = nodes
            .iter()
            .filter_map(|(id, node)| node.durable_snapshot().map(|s| (id.clone(), s)))
            .collect();
        let mut engine = Engine {
            nodes,
            crashed: BTreeSet::new(),
            store,
            heap: BinaryHeap::new(),
            seq: 0,
            clock: 0,
            seed,
            plan: setup.plan.clone(),
            channels: BTreeMap::new(),
            directive_fired: vec![false; setup.plan.directives.len()],
            records: Vec::new(),
            truncated: false,
        };
        for event in &setup.script {
            let kind = match event {
                ScriptEvent::Inject { message, .. } => QueuedKind::Inject(message.clone()),
                ScriptEvent::StartRound {
                    coordinator, round, ..
                } => QueuedKind::Timeout {
                    agent: coordinator.clone(),
                    start_round: *round,
                },
            };
            engine.schedule(event.time(), kind);
        }
        Ok(engine)
    }

    fn schedule(&mut self, time: u64, kind: QueuedKind) {
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(Reverse(Queued { time, seq, kind }));
    }

    fn run(&mut self, stop: StopCondition) {
        self.fire_directives();
        while let Some(Reverse(next)) = self.heap.pop() {
            if let StopCondition::AtTime(bound) = stop {
                if next.time > bound {
                    self.truncated = true;
                    return;
                }
            }
            if self.records.len() >= EVENT_CAP {
                self.truncated = true;
                return;
            }
            debug_assert!(next.time >= self.clock);
            self.clock = next.time;
            match next.kind {
                QueuedKind::Deliver(message) => {
                    let event = TraceEvent::Deliver {
                        message: message.clone(),
                    };
                    self.process_message(message, event);
                }
                QueuedKind::Inject(message) => {
                    let event = TraceEvent::Inject {
                        message: message.clone(),
                    };
                    self.process_message(message, event);
                }
                QueuedKind::Timeout { agent, start_round } => {
                    if self.crashed.contains(&agent) {
                        self.push_absorbed(agent, TraceEvent::Timeout { start_round });
                        continue;
                    }
                    let output = match self.nodes.get_mut(&agent) {
                        Some(AgentNode::Coordinator(c)) => c.on_start_round_timeout(start_round),
                        _ => StepOutput::none(),
                    };
                    self.finish_step(agent, TraceEvent::Timeout { start_round }, output);
                }
            }
        }
    }

    fn process_message(&mut self, message: Message, event: TraceEvent) {
        let target = message.to.clone();
        if self.crashed.contains(&target) {
            self.push_absorbed(target, event);
            return;
        }
        let output = match self.nodes.get_mut(&target) {
            Some(node) => node.on_message(&message),
            // Unroutable recipients are rejected at setup; stay silent if
            // one slips through.
            None => StepOutput::none(),
        };
        self.finish_step(target, event, output);
    }

    fn finish_step(&mut self, agent: AgentId, event: TraceEvent, output: StepOutput) {
        if let Some(snapshot) = &output.durable {
            self.store.insert(agent.clone(), snapshot.clone());
        }
        let position = self.push_record(TraceRecord {
            position: self.records.len() as u64,
            time: self.clock,
            agent: agent.clone(),
            event,
            state_digest: self.digest(&agent),
            absorbed: false,
            sends_suppressed: false,
            durable: output.durable,
            learned: output.learned,
            outbound: output.outbound.clone(),
        });
        // Directives fired on append may have crashed the sender; its
        // unsent messages die with it, after the durable write.
        if self.crashed.contains(&agent) {
            self.records[position].sends_suppressed = !output.outbound.is_empty();
            return;
        }
        for message in output.outbound {
            self.send(message);
        }
    }

    fn push_absorbed(&mut self, agent: AgentId, event: TraceEvent) {
        self.push_record(TraceRecord {
            position: self.records.len() as u64,
            time: self.clock,
            agent: agent.clone(),
            event,
            state_digest: self.digest(&agent),
            absorbed: true,
            sends_suppressed: false,
            durable: None,
            learned: None,
            outbound: Vec::new(),
        });
    }

    fn push_record(&mut self, record: TraceRecord) -> usize {
        let position = self.records.len();
        self.records.push(record);
        self.fire_directives();
        position
    }

    /// Fires every crash/recover directive whose position equals the
    /// current trace length; each fired directive appends a record, which
    /// may arm the next one.
    fn fire_directives(&mut self) {
        loop {
            let len = self.records.len() as u64;
            let next = self.plan.directives.iter().enumerate().position(|(i, d)| {
                !self.directive_fired[i]
                    && match d {
                        Directive::Crash { position, .. }
                        | Directive::Recover { position, .. } => *position == len,
                        Directive::DropNext { .. } => false,
                    }
            });
            let Some(index) = next else {
                return;
            };
            self.directive_fired[index] = true;
            match self.plan.directives[index].clone() {
                Directive::Crash { agent, .. } => {
                    self.crashed.insert(agent.clone());
                    let record = TraceRecord {
                        position: self.records.len() as u64,
                        time: self.clock,
                        agent: agent.clone(),
                        event: TraceEvent::Crash,
                        state_digest: self.digest(&agent),
                        absorbed: false,
                        sends_suppressed: false,
                        durable: None,
                        learned: None,
                        outbound: Vec::new(),
                    };
                    self.records.push(record);
                }
                Directive::Recover { agent, .. } => {
                    self.crashed.remove(&agent);
                    if let Some(node) = self.nodes.get_mut(&agent) {
                        node.restore(self.store.get(&agent));
                    }
                    let record = TraceRecord {
                        position: self.records.len() as u64,
                        time: self.clock,
                        agent: agent.clone(),
                        event: TraceEvent::Recover,
                        state_digest: self.digest(&agent),
                        absorbed: false,
                        sends_suppressed: false,
                        durable: None,
                        learned: None,
                        outbound: Vec::new(),
                    };
                    self.records.push(record);
                }
                Directive::DropNext { .. } => unreachable!("filtered above"),
            }
        }
    }

    /// The fault pipeline for one send.
    fn send(&mut self, message: Message) {
        if self.take_scripted_drop(&message) {
            return;
        }
        let channel = (message.from.clone(), message.to.clone());
        let rng = self.channels.entry(channel).or_insert_with(|| {
            DetRng::new(channel_seed(
                self.seed,
                message.from.as_str(),
                message.to.as_str(),
            ))
        });
        if rng.next_unit() < self.plan.drop_probability {
            return;
        }
        let delay = match self.plan.link_delay(&message.from, &message.to) {
            Some(fixed) => fixed,
            None if self.plan.delay_min == self.plan.delay_max => self.plan.delay_min,
            None => rng.next_range(self.plan.delay_min, self.plan.delay_max),
        };
        let duplicate = rng.next_unit() < self.plan.duplicate_probability;
        let duplicate_delay = if duplicate {
            match self.plan.link_delay(&message.from, &message.to) {
                Some(fixed) => Some(fixed),
                None if self.plan.delay_min == self.plan.delay_max => Some(self.plan.delay_min),
                None => Some(rng.next_range(self.plan.delay_min, self.plan.delay_max)),
            }
        } else {
            None
        };
        let deliver_at = self.clock + delay;
        self.schedule(deliver_at, QueuedKind::Deliver(message.clone()));
        if let Some(extra) = duplicate_delay {
            self.schedule(self.clock + extra, QueuedKind::Deliver(message));
        }
    }

    /// Consumes a matching scripted drop, bypassing all random draws.
    fn take_scripted_drop(&mut self, message: &Message) -> bool {
        let len = self.records.len() as u64;
        for (i, directive) in self.plan.directives.iter().enumerate() {
            if self.directive_fired[i] {
                continue;
            }
            if let Directive::DropNext { position, from, to } = directive {
                if *position <= len && from == &message.from && to == &message.to {
                    self.directive_fired[i] = true;
                    return true;
                }
            }
        }
        false
    }

    fn digest(&self, agent: &AgentId) -> String {
        let rendered = match self.nodes.get(agent) {
            Some(node) => format!("{node:?}"),
            None => String::new(),
        };
        format!("{:016x}", fnv1a64(rendered.as_bytes()))
    }
}
