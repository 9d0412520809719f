//! Proposer: requests votes for its value in rounds opened by an `Any`.

use std::collections::BTreeSet;

use crate::types::{AgentId, Value};

use super::{Message, MessageBody, StepOutput};

/// Proposer state, all volatile. It keeps the first value proposed to it
/// and requests votes for it in every opened round, once per round, in
/// whichever order the value and the `Any` messages arrive.
#[derive(Debug, Clone)]
pub struct Proposer {
    id: AgentId,
    acceptors: Vec<AgentId>,
    value: Option<Value>,
    open_rounds: BTreeSet<u64>,
    requested_rounds: BTreeSet<u64>,
}

impl Proposer {
    pub fn new(id: AgentId, mut acceptors: Vec<AgentId>) -> Self {
        acceptors.sort();
        Self {
            id,
            acceptors,
            value: None,
            open_rounds: BTreeSet::new(),
            requested_rounds: BTreeSet::new(),
        }
    }

    /// Pre-executed Phase 2a: round already opened by an `Any` delivered
    /// before time zero.
    pub fn with_open_round(mut self, round: u64) -> Self {
        self.open_rounds.insert(round);
        self
    }

    pub fn id(&self) -> &AgentId {
        &self.id
    }

    pub fn value(&self) -> Option<&Value> {
        self.value.as_ref()
    }

    pub fn on_propose(&mut self, value: Value) -> StepOutput {
        if self.value.is_none() {
            self.value = Some(value);
        }
        self.flush()
    }

    pub fn on_any(&mut self, round: u64) -> StepOutput {
        self.open_rounds.insert(round);
        self.flush()
    }

    fn flush(&mut self) -> StepOutput {
        let Some(value) = self.value.clone() else {
            return StepOutput::none();
        };
        let mut outbound = Vec::new();
        let pending: Vec<u64> = self
            .open_rounds
            .difference(&self.requested_rounds)
            .copied()
            .collect();
        for round in pending {
            self.requested_rounds.insert(round);
            for acceptor in &self.acceptors {
                outbound.push(Message {
                    from: self.id.clone(),
                    to: acceptor.clone(),
                    body: MessageBody::Phase2a {
                        round,
                        value: value.clone(),
                    },
                });
            }
        }
        StepOutput {
            outbound,
            durable: None,
            learned: None,
        }
    }

    pub(super) fn restore(&mut self) {
        self.value = None;
        self.open_rounds.clear();
        self.requested_rounds.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn proposer() -> Proposer {
        Proposer::new(
            AgentId::from("p1"),
            vec![AgentId::from("a2"), AgentId::from("a1")],
        )
    }

    #[test]
    fn any_before_value_waits() {
        let mut p = proposer();
        assert_eq!(p.on_any(1), StepOutput::none());
        let out = p.on_propose(Value::from("x"));
        let to: Vec<&str> = out.outbound.iter().map(|m| m.to.as_str()).collect();
        assert_eq!(to, vec!["a1", "a2"]);
        assert!(out
            .outbound
            .iter()
            .all(|m| m.body == MessageBody::Phase2a { round: 1, value: Value::from("x") }));
    }

    #[test]
    fn value_before_any_waits() {
        let mut p = proposer();
        assert_eq!(p.on_propose(Value::from("x")), StepOutput::none());
        let out = p.on_any(3);
        assert_eq!(out.outbound.len(), 2);
    }

    #[test]
    fn duplicate_any_sends_once() {
        let mut p = proposer();
        p.on_propose(Value::from("x"));
        assert_eq!(p.on_any(1).outbound.len(), 2);
        assert_eq!(p.on_any(1), StepOutput::none());
    }

    #[test]
    fn first_value_wins() {
        let mut p = proposer();
        p.on_propose(Value::from("x"));
        p.on_propose(Value::from("y"));
        assert_eq!(p.value(), Some(&Value::from("x")));
        let out = p.on_any(1);
        assert!(out
            .outbound
            .iter()
            .all(|m| m.body == MessageBody::Phase2a { round: 1, value: Value::from("x") }));
    }
}
