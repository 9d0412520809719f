//! Coordinator: starts rounds, collects Phase 1b reports, applies the
//! configured value-selection rule.

use std::collections::VecDeque;

use crate::quorum::{QuorumConfig, RoundType};
use crate::rules::{Phase1bReport, ReportSet, RuleKind};
use crate::types::{AgentId, Value};

use super::{DurableSnapshot, Message, MessageBody, ProtocolError, RoundId, RoundScheme, StepOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordinatorPhase {
    Idle,
    CollectingPhase1b,
    Phase2aSent,
}

/// Coordinator state. Only `current_round` is durable; report buffer and
/// proposal pool are volatile and reset on recovery.
#[derive(Debug, Clone)]
pub struct Coordinator {
    id: AgentId,
    config: QuorumConfig,
    scheme: RoundScheme,
    rule: RuleKind,
    acceptors: Vec<AgentId>,
    proposers: Vec<AgentId>,
    current_round: u64,
    phase: CoordinatorPhase,
    reports: Vec<Phase1bReport>,
    proposal_pool: VecDeque<Value>,
}

impl Coordinator {
    pub fn new(
        id: AgentId,
        config: QuorumConfig,
        scheme: RoundScheme,
        rule: RuleKind,
        mut acceptors: Vec<AgentId>,
        mut proposers: Vec<AgentId>,
    ) -> Self {
        acceptors.sort();
        proposers.sort();
        Self {
            id,
            config,
            scheme,
            rule,
            acceptors,
            proposers,
            current_round: 0,
            phase: CoordinatorPhase::Idle,
            reports: Vec::new(),
            proposal_pool: VecDeque::new(),
        }
    }

    /// Pre-executed Phase 1/2a: the coordinator already ran `round` up to
    /// its `Any`, before time zero.
    pub fn with_preexecuted_round(mut self, round: u64) -> Self {
        self.current_round = round;
        self.phase = CoordinatorPhase::Phase2aSent;
        self
    }

    pub fn id(&self) -> &AgentId {
        &self.id
    }

    pub fn current_round(&self) -> u64 {
        self.current_round
    }

    pub fn phase(&self) -> CoordinatorPhase {
        self.phase
    }

    pub fn proposal_pool(&self) -> &VecDeque<Value> {
        &self.proposal_pool
    }

    /// Starts `round`: durably advance `current_round`, clear the report
    /// buffer, and invite every acceptor. Rounds at or below the current
    /// one, and rounds owned by another coordinator, are rejected.
    pub fn start_round(&mut self, round: &RoundId) -> Result<StepOutput, ProtocolError> {
        if round.coordinator != self.id {
            return Err(ProtocolError::RoundNotOwned {
                number: round.number,
                owner: round.coordinator.clone(),
                id: self.id.clone(),
            });
        }
        if round.number <= self.current_round {
            return Err(ProtocolError::StaleRound {
                number: round.number,
                current: self.current_round,
            });
        }
        self.current_round = round.number;
        self.phase = CoordinatorPhase::CollectingPhase1b;
        self.reports.clear();
        Ok(StepOutput {
            outbound: self
                .acceptors
                .iter()
                .map(|acceptor| Message {
                    from: self.id.clone(),
                    to: acceptor.clone(),
                    body: MessageBody::Phase1a {
                        round: round.number,
                    },
                })
                .collect(),
            durable: Some(self.durable_snapshot()),
            learned: None,
        })
    }

    /// Recovery timeout: start the next classic round this coordinator
    /// owns. No-op if the scheme never grants one.
    pub fn start_next_classic(&mut self) -> StepOutput {
        match self.scheme.next_classic_owned_after(self.current_round, &self.id) {
            Some(round) => self
                .start_round(&round)
                .expect("next owned classic round is fresh by construction"),
            None => StepOutput::none(),
        }
    }

    /// Scripted timeout entry point: an explicit round number, or `None`
    /// for the next owned classic round. Stale or foreign explicit rounds
    /// are ignored.
    pub fn on_start_round_timeout(&mut self, round: Option<u64>) -> StepOutput {
        match round {
            None => self.start_next_classic(),
            Some(number) => match self.scheme.round(number) {
                Ok(round) => self.start_round(&round).unwrap_or_default(),
                Err(_) => StepOutput::none(),
            },
        }
    }

    /// Buffers a report for the current round. The rule runs once, on
    /// exactly the first classic-quorum-size reports; duplicates, foreign
    /// rounds, and reports after the cut are dropped.
    pub fn on_phase1b(
        &mut self,
        from: &AgentId,
        round: u64,
        voted_round: u64,
        voted_value: Option<Value>,
    ) -> StepOutput {
        if self.phase != CoordinatorPhase::CollectingPhase1b
            || round != self.current_round
            || self.reports.len() >= self.cut()
            || self.reports.iter().any(|r| r.acceptor_id() == from)
        {
            return StepOutput::none();
        }
        let Ok(report) = Phase1bReport::new(from.clone(), voted_round, voted_value) else {
            return StepOutput::none();
        };
        self.reports.push(report);
        if self.reports.len() == self.cut() {
            self.evaluate_cut()
        } else {
            StepOutput::none()
        }
    }

    /// Pools a proposal. If the rule already came up Free in a classic
    /// round that found no proposal, this first one completes Phase 2a.
    pub fn on_propose(&mut self, value: Value) -> StepOutput {
        self.proposal_pool.push_back(value);
        if self.phase == CoordinatorPhase::CollectingPhase1b && self.reports.len() == self.cut() {
            return self.resolve_free();
        }
        StepOutput::none()
    }

    pub fn durable_snapshot(&self) -> DurableSnapshot {
        DurableSnapshot::Coordinator {
            current_round: self.current_round,
        }
    }

    pub(super) fn restore(&mut self, current_round: u64) {
        self.current_round = current_round;
        self.phase = CoordinatorPhase::Idle;
        self.reports.clear();
        self.proposal_pool.clear();
    }

    fn cut(&self) -> usize {
        self.config.classic_quorum_size() as usize
    }

    fn evaluate_cut(&mut self) -> StepOutput {
        let set = ReportSet::new(self.reports.clone())
            .expect("collected reports are non-empty and deduplicated");
        let round_type = self.scheme.round_type(self.current_round);
        let choice = self
            .rule
            .evaluate(&set, &self.config, round_type)
            .expect("report cut matches the classic quorum size");
        match choice {
            crate::rules::CoordinatorChoice::Mandated(value) => self.send_phase2a(value),
            crate::rules::CoordinatorChoice::Free => self.resolve_free(),
        }
    }

    fn resolve_free(&mut self) -> StepOutput {
        if let Some(value) = self.proposal_pool.front().cloned() {
            return self.send_phase2a(value);
        }
        if self.scheme.round_type(self.current_round) == RoundType::Fast {
            self.phase = CoordinatorPhase::Phase2aSent;
            return StepOutput {
                outbound: self
                    .proposers
                    .iter()
                    .map(|proposer| Message {
                        from: self.id.clone(),
                        to: proposer.clone(),
                        body: MessageBody::Any {
                            round: self.current_round,
                        },
                    })
                    .collect(),
                durable: None,
                learned: None,
            };
        }
        // Classic round, no proposal yet: wait in CollectingPhase1b; the
        // next pooled proposal completes the phase.
        StepOutput::none()
    }

    fn send_phase2a(&mut self, value: Value) -> StepOutput {
        self.phase = CoordinatorPhase::Phase2aSent;
        StepOutput {
            outbound: self
                .acceptors
                .iter()
                .map(|acceptor| Message {
                    from: self.id.clone(),
                    to: acceptor.clone(),
                    body: MessageBody::Phase2a {
                        round: self.current_round,
                        value: value.clone(),
                    },
                })
                .collect(),
            durable: None,
            learned: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(names: &[&str]) -> Vec<AgentId> {
        names.iter().map(|n| AgentId::from(*n)).collect()
    }

    fn coordinator(rule: RuleKind) -> Coordinator {
        let config = QuorumConfig::new(3, 0, 0).unwrap();
        let scheme = RoundScheme::new(ids(&["c1"])).unwrap();
        Coordinator::new(
            AgentId::from("c1"),
            config,
            scheme,
            rule,
            ids(&["a1", "a2", "a3"]),
            ids(&["p1", "p2"]),
        )
    }

    fn start(c: &mut Coordinator, number: u64) {
        let round = c.scheme.round(number).unwrap();
        c.start_round(&round).unwrap();
    }

    fn feed_reports(c: &mut Coordinator, reports: &[(&str, u64, Option<&str>)]) -> StepOutput {
        let mut last = StepOutput::none();
        for (from, vr, vv) in reports {
            last = c.on_phase1b(
                &AgentId::from(*from),
                c.current_round(),
                *vr,
                vv.map(Value::from),
            );
        }
        last
    }

    #[test]
    fn start_round_invites_every_acceptor() {
        let mut c = coordinator(RuleKind::Simplified);
        let round = c.scheme.round(2).unwrap();
        let out = c.start_round(&round).unwrap();
        assert_eq!(c.phase(), CoordinatorPhase::CollectingPhase1b);
        assert_eq!(out.outbound.len(), 3);
        assert!(out.outbound.iter().all(|m| m.body == MessageBody::Phase1a { round: 2 }));
        assert_eq!(
            out.durable,
            Some(DurableSnapshot::Coordinator { current_round: 2 })
        );
    }

    #[test]
    fn stale_and_foreign_rounds_are_rejected() {
        let mut c = coordinator(RuleKind::Simplified);
        start(&mut c, 4);
        let stale = c.scheme.round(4).unwrap();
        assert!(matches!(
            c.start_round(&stale),
            Err(ProtocolError::StaleRound { .. })
        ));
        let foreign = RoundId {
            number: 6,
            round_type: RoundType::Classic,
            coordinator: AgentId::from("c9"),
        };
        assert!(matches!(
            c.start_round(&foreign),
            Err(ProtocolError::RoundNotOwned { .. })
        ));
    }

    #[test]
    fn all_null_cut_takes_pool_head() {
        let mut c = coordinator(RuleKind::Simplified);
        c.on_propose(Value::from("p"));
        start(&mut c, 2);
        let out = feed_reports(&mut c, &[("a1", 0, None), ("a2", 0, None), ("a3", 0, None)]);
        assert_eq!(c.phase(), CoordinatorPhase::Phase2aSent);
        assert_eq!(out.outbound.len(), 3);
        assert!(out
            .outbound
            .iter()
            .all(|m| m.body == MessageBody::Phase2a { round: 2, value: Value::from("p") }));
    }

    #[test]
    fn mandated_value_goes_to_phase2a() {
        let mut c = coordinator(RuleKind::Simplified);
        start(&mut c, 2);
        let out = feed_reports(
            &mut c,
            &[("a1", 1, Some("x")), ("a2", 1, Some("x")), ("a3", 0, None)],
        );
        assert!(out
            .outbound
            .iter()
            .all(|m| m.body == MessageBody::Phase2a { round: 2, value: Value::from("x") }));
    }

    #[test]
    fn fast_round_free_with_empty_pool_sends_any() {
        let mut c = coordinator(RuleKind::Simplified);
        start(&mut c, 3);
        let out = feed_reports(&mut c, &[("a1", 0, None), ("a2", 0, None), ("a3", 0, None)]);
        assert_eq!(c.phase(), CoordinatorPhase::Phase2aSent);
        let to: Vec<&str> = out.outbound.iter().map(|m| m.to.as_str()).collect();
        assert_eq!(to, vec!["p1", "p2"]);
        assert!(out.outbound.iter().all(|m| m.body == MessageBody::Any { round: 3 }));
    }

    #[test]
    fn classic_round_free_waits_for_a_proposal() {
        let mut c = coordinator(RuleKind::Simplified);
        start(&mut c, 2);
        let out = feed_reports(&mut c, &[("a1", 0, None), ("a2", 0, None), ("a3", 0, None)]);
        assert_eq!(out, StepOutput::none());
        assert_eq!(c.phase(), CoordinatorPhase::CollectingPhase1b);
        let out = c.on_propose(Value::from("late"));
        assert_eq!(c.phase(), CoordinatorPhase::Phase2aSent);
        assert!(out
            .outbound
            .iter()
            .all(|m| m.body == MessageBody::Phase2a { round: 2, value: Value::from("late") }));
    }

    #[test]
    fn duplicate_and_late_reports_are_dropped() {
        let mut c = coordinator(RuleKind::Simplified);
        start(&mut c, 2);
        c.on_phase1b(&AgentId::from("a1"), 2, 0, None);
        let dup = c.on_phase1b(&AgentId::from("a1"), 2, 0, None);
        assert_eq!(dup, StepOutput::none());
        feed_reports(&mut c, &[("a2", 0, None), ("a3", 1, Some("x"))]);
        assert_eq!(c.phase(), CoordinatorPhase::Phase2aSent);
        let late = c.on_phase1b(&AgentId::from("a2"), 2, 0, None);
        assert_eq!(late, StepOutput::none());
    }

    #[test]
    fn wrong_round_reports_are_dropped() {
        let mut c = coordinator(RuleKind::Simplified);
        start(&mut c, 2);
        let out = c.on_phase1b(&AgentId::from("a1"), 1, 0, None);
        assert_eq!(out, StepOutput::none());
    }

    #[test]
    fn recovery_resets_volatile_state_only() {
        let mut c = coordinator(RuleKind::Simplified);
        c.on_propose(Value::from("p"));
        start(&mut c, 2);
        c.on_phase1b(&AgentId::from("a1"), 2, 0, None);
        c.restore(2);
        assert_eq!(c.current_round(), 2);
        assert_eq!(c.phase(), CoordinatorPhase::Idle);
        assert!(c.proposal_pool().is_empty());
        // The next owned classic round is 4.
        let out = c.start_next_classic();
        assert_eq!(c.current_round(), 4);
        assert_eq!(out.outbound.len(), 3);
    }
}
