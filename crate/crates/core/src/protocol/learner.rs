//! Learner: detects chosen values from Phase 2b quorums.

use std::collections::{BTreeMap, BTreeSet};

use crate::quorum::QuorumConfig;
use crate::types::{AgentId, Value};

use super::{RoundScheme, StepOutput};

/// Learner state, all volatile. `learned` is write-once per execution;
/// a second distinct value reaching a quorum is still surfaced as a learn
/// event so traces expose the violation to the checker.
#[derive(Debug, Clone)]
pub struct Learner {
    id: AgentId,
    config: QuorumConfig,
    scheme: RoundScheme,
    tallies: BTreeMap<u64, BTreeMap<Value, BTreeSet<AgentId>>>,
    learned: Option<Value>,
}

impl Learner {
    pub fn new(id: AgentId, config: QuorumConfig, scheme: RoundScheme) -> Self {
        Self {
            id,
            config,
            scheme,
            tallies: BTreeMap::new(),
            learned: None,
        }
    }

    pub fn id(&self) -> &AgentId {
        &self.id
    }

    pub fn learned(&self) -> Option<&Value> {
        self.learned.as_ref()
    }

    /// Adds the vote to the `(round, value)` tally with set semantics. The
    /// step reports a learn event exactly when the tally crosses the
    /// quorum size for the round's type.
    pub fn on_phase2b(&mut self, from: &AgentId, round: u64, value: &Value) -> StepOutput {
        let tally = self
            .tallies
            .entry(round)
            .or_default()
            .entry(value.clone())
            .or_default();
        if !tally.insert(from.clone()) {
            return StepOutput::none();
        }
        let quorum = self.config.quorum_size(self.scheme.round_type(round)) as usize;
        if tally.len() != quorum {
            return StepOutput::none();
        }
        match &self.learned {
            None => {
                self.learned = Some(value.clone());
                StepOutput {
                    learned: Some(value.clone()),
                    ..StepOutput::none()
                }
            }
            Some(previous) if previous == value => StepOutput::none(),
            // Conflicting quorum: keep the first learned value but emit
            // the event; the agreement checker flags it.
            Some(_) => StepOutput {
                learned: Some(value.clone()),
                ..StepOutput::none()
            },
        }
    }

    pub(super) fn restore(&mut self) {
        self.tallies.clear();
        self.learned = None;
    }
}
