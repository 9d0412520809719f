//! Acceptor: promises on Phase 1a, votes on Phase 2a or proposer requests.

use crate::types::{AgentId, Value};

use super::{DurableSnapshot, Message, MessageBody, StepOutput};

/// Acceptor state. `promised_round`, `voted_round`, and `voted_value` are
/// durable; both round fields are non-decreasing across every event,
/// crash-recovery included, and `voted_round <= promised_round` always.
#[derive(Debug, Clone)]
pub struct Acceptor {
    id: AgentId,
    learners: Vec<AgentId>,
    promised_round: u64,
    voted_round: u64,
    voted_value: Option<Value>,
}

impl Acceptor {
    pub fn new(id: AgentId, mut learners: Vec<AgentId>) -> Self {
        learners.sort();
        Self {
            id,
            learners,
            promised_round: 0,
            voted_round: 0,
            voted_value: None,
        }
    }

    /// Pre-executed Phase 1: start already promised to `round`, as if the
    /// coordinator's invitation had been accepted before time zero.
    pub fn with_promise(mut self, round: u64) -> Self {
        self.promised_round = round;
        self
    }

    pub fn id(&self) -> &AgentId {
        &self.id
    }

    pub fn promised_round(&self) -> u64 {
        self.promised_round
    }

    pub fn voted_round(&self) -> u64 {
        self.voted_round
    }

    pub fn voted_value(&self) -> Option<&Value> {
        self.voted_value.as_ref()
    }

    /// Accepts an invitation to a round beyond every prior promise by
    /// promising it (durably) and reporting the last vote; declines older
    /// invitations by ignoring them.
    pub fn on_phase1a(&mut self, from: &AgentId, round: u64) -> StepOutput {
        if round <= self.promised_round {
            return StepOutput::none();
        }
        self.promised_round = round;
        StepOutput {
            outbound: vec![Message {
                from: self.id.clone(),
                to: from.clone(),
                body: MessageBody::Phase1b {
                    round,
                    voted_round: self.voted_round,
                    voted_value: self.voted_value.clone(),
                },
            }],
            durable: Some(self.durable_snapshot()),
            learned: None,
        }
    }

    /// Casts a vote for `value` in `round` unless a promise to a later
    /// round or a vote in this or a later round forbids it. Votes go to
    /// every learner.
    pub fn on_vote_request(&mut self, round: u64, value: &Value) -> StepOutput {
        if round < self.promised_round || self.voted_round >= round {
            return StepOutput::none();
        }
        self.voted_round = round;
        self.voted_value = Some(value.clone());
        self.promised_round = self.promised_round.max(round);
        StepOutput {
            outbound: self
                .learners
                .iter()
                .map(|learner| Message {
                    from: self.id.clone(),
                    to: learner.clone(),
                    body: MessageBody::Phase2b {
                        round,
                        value: value.clone(),
                    },
                })
                .collect(),
            durable: Some(self.durable_snapshot()),
            learned: None,
        }
    }

    pub fn durable_snapshot(&self) -> DurableSnapshot {
        DurableSnapshot::Acceptor {
            promised_round: self.promised_round,
            voted_round: self.voted_round,
            voted_value: self.voted_value.clone(),
        }
    }

    pub(super) fn restore(&mut self, promised: u64, voted_round: u64, voted_value: Option<Value>) {
        self.promised_round = promised;
        self.voted_round = voted_round;
        self.voted_value = voted_value;
    }
}
