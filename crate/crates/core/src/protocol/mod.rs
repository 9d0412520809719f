//! Role state machines for the two-phase round structure.
//!
//! A round is identified by a positive integer; the active [`RoundScheme`]
//! maps each number to its type (fast or classic) and its coordinator.
//! Round 0 never exists on the wire except as the acceptors' never-voted
//! sentinel.
//!
//! Each agent is a sequential state machine `(state, event) -> (state,
//! outbound messages)`. Agents never share mutable state; the simulator
//! owns delivery, timing, and stable storage. A state change that must
//! survive a crash is surfaced in [`StepOutput::durable`], and the harness
//! persists it before any outbound message of the same step is scheduled.

pub mod acceptor;
pub mod coordinator;
pub mod learner;
pub mod proposer;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::quorum::RoundType;
use crate::types::{AgentId, Value};

pub use acceptor::Acceptor;
pub use coordinator::{Coordinator, CoordinatorPhase};
pub use learner::Learner;
pub use proposer::Proposer;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("round numbers start at 1")]
    RoundZero,
    #[error("round {number} is coordinated by {owner}, not {id}")]
    RoundNotOwned {
        number: u64,
        owner: AgentId,
        id: AgentId,
    },
    #[error("round {number} does not exceed the current round {current}")]
    StaleRound { number: u64, current: u64 },
    #[error("a round scheme needs at least one coordinator")]
    NoCoordinators,
}

/// A fully resolved round: its number plus the type and coordinator the
/// scheme assigns to that number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundId {
    pub number: u64,
    pub round_type: RoundType,
    pub coordinator: AgentId,
}

/// Total deterministic mapping from round numbers to round type and
/// coordinator.
///
/// Default: odd rounds are fast, even rounds classic; round `r` is
/// coordinated by the sorted coordinator list at index `r mod C`. Scenarios
/// may override either mapping per round number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundScheme {
    coordinators: Vec<AgentId>,
    type_overrides: BTreeMap<u64, RoundType>,
    coordinator_overrides: BTreeMap<u64, AgentId>,
}

impl RoundScheme {
    pub fn new(mut coordinators: Vec<AgentId>) -> Result<Self, ProtocolError> {
        if coordinators.is_empty() {
            return Err(ProtocolError::NoCoordinators);
        }
        coordinators.sort();
        coordinators.dedup();
        Ok(Self {
            coordinators,
            type_overrides: BTreeMap::new(),
            coordinator_overrides: BTreeMap::new(),
        })
    }

    pub fn with_type_overrides(mut self, overrides: BTreeMap<u64, RoundType>) -> Self {
        self.type_overrides = overrides;
        self
    }

    pub fn with_coordinator_overrides(mut self, overrides: BTreeMap<u64, AgentId>) -> Self {
        self.coordinator_overrides = overrides;
        self
    }

    pub fn coordinators(&self) -> &[AgentId] {
        &self.coordinators
    }

    pub fn round_type(&self, number: u64) -> RoundType {
        if let Some(&t) = self.type_overrides.get(&number) {
            return t;
        }
        if number % 2 == 1 {
            RoundType::Fast
        } else {
            RoundType::Classic
        }
    }

    pub fn coordinator_of(&self, number: u64) -> &AgentId {
        if let Some(id) = self.coordinator_overrides.get(&number) {
            return id;
        }
        let index = (number % self.coordinators.len() as u64) as usize;
        &self.coordinators[index]
    }

    pub fn round(&self, number: u64) -> Result<RoundId, ProtocolError> {
        if number == 0 {
            return Err(ProtocolError::RoundZero);
        }
        Ok(RoundId {
            number,
            round_type: self.round_type(number),
            coordinator: self.coordinator_of(number).clone(),
        })
    }

    /// Smallest classic round above `current` owned by `id`, scanning a
    /// bounded window. `None` means the scheme never hands `id` a classic
    /// round in that window (possible under adversarial overrides).
    pub fn next_classic_owned_after(&self, current: u64, id: &AgentId) -> Option<RoundId> {
        (current + 1..=current.saturating_add(1024))
            .find(|&n| self.round_type(n) == RoundType::Classic && self.coordinator_of(n) == id)
            .map(|n| RoundId {
                number: n,
                round_type: RoundType::Classic,
                coordinator: id.clone(),
            })
    }
}

/// One simulated message. The body is flattened next to the envelope in
/// serialized traces, keyed by a `kind` tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub from: AgentId,
    pub to: AgentId,
    #[serde(flatten)]
    pub body: MessageBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MessageBody {
    /// A client proposal. Scripted; delivered to one proposer and every
    /// coordinator.
    Propose { value: Value },
    Phase1a {
        round: u64,
    },
    Phase1b {
        round: u64,
        voted_round: u64,
        voted_value: Option<Value>,
    },
    /// Also the vote request a proposer sends after an `Any`.
    Phase2a {
        round: u64,
        value: Value,
    },
    Any {
        round: u64,
    },
    Phase2b {
        round: u64,
        value: Value,
    },
}

/// What an agent did in one step: messages to schedule, at most one stable
/// write (persisted before the sends), and at most one learn event.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepOutput {
    pub outbound: Vec<Message>,
    pub durable: Option<DurableSnapshot>,
    pub learned: Option<Value>,
}

impl StepOutput {
    pub fn none() -> Self {
        Self::default()
    }
}

/// The stable-storage image of an agent. Proposers and learners keep no
/// durable state; recovery resets them to their initial configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum DurableSnapshot {
    Acceptor {
        promised_round: u64,
        voted_round: u64,
        voted_value: Option<Value>,
    },
    Coordinator {
        current_round: u64,
    },
}

/// A protocol agent of any role, dispatching simulator events to the role
/// handlers. Unroutable (role, message) pairs are dropped silently.
#[derive(Debug, Clone)]
pub enum AgentNode {
    Acceptor(Acceptor),
    Coordinator(Coordinator),
    Proposer(Proposer),
    Learner(Learner),
}

impl AgentNode {
    pub fn id(&self) -> &AgentId {
        match self {
            AgentNode::Acceptor(a) => a.id(),
            AgentNode::Coordinator(c) => c.id(),
            AgentNode::Proposer(p) => p.id(),
            AgentNode::Learner(l) => l.id(),
        }
    }

    pub fn on_message(&mut self, message: &Message) -> StepOutput {
        match (self, &message.body) {
            (AgentNode::Acceptor(a), MessageBody::Phase1a { round }) => {
                a.on_phase1a(&message.from, *round)
            }
            (AgentNode::Acceptor(a), MessageBody::Phase2a { round, value }) => {
                a.on_vote_request(*round, value)
            }
            (AgentNode::Coordinator(c), MessageBody::Phase1b {
                round,
                voted_round,
                voted_value,
            }) => c.on_phase1b(&message.from, *round, *voted_round, voted_value.clone()),
            (AgentNode::Coordinator(c), MessageBody::Propose { value }) => {
                c.on_propose(value.clone())
            }
            (AgentNode::Proposer(p), MessageBody::Propose { value }) => {
                p.on_propose(value.clone())
            }
            (AgentNode::Proposer(p), MessageBody::Any { round }) => p.on_any(*round),
            (AgentNode::Learner(l), MessageBody::Phase2b { round, value }) => {
                l.on_phase2b(&message.from, *round, value)
            }
            _ => StepOutput::none(),
        }
    }

    /// The agent's current stable image, if its role has one.
    pub fn durable_snapshot(&self) -> Option<DurableSnapshot> {
        match self {
            AgentNode::Acceptor(a) => Some(a.durable_snapshot()),
            AgentNode::Coordinator(c) => Some(c.durable_snapshot()),
            AgentNode::Proposer(_) | AgentNode::Learner(_) => None,
        }
    }

    /// Rebuild in-memory state after a crash: durable fields from the
    /// snapshot, volatile collections reset.
    pub fn restore(&mut self, snapshot: Option<&DurableSnapshot>) {
        match (self, snapshot) {
            (
                AgentNode::Acceptor(a),
                Some(DurableSnapshot::Acceptor {
                    promised_round,
                    voted_round,
                    voted_value,
                }),
            ) => a.restore(*promised_round, *voted_round, voted_value.clone()),
            (AgentNode::Coordinator(c), Some(DurableSnapshot::Coordinator { current_round })) => {
                c.restore(*current_round)
            }
            (AgentNode::Proposer(p), _) => p.restore(),
            (AgentNode::Learner(l), _) => l.restore(),
            // A missing or mismatched snapshot restores initial state.
            (AgentNode::Acceptor(a), _) => a.restore(0, 0, None),
            (AgentNode::Coordinator(c), _) => c.restore(0),
        }
    }
}
