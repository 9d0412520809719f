//! Scenario files: a JSON description of a roster, quorum policy, round
//! scheme, scripted stimuli, and fault plan, compiled into a runnable
//! simulation setup.
//!
//! Rosters are generated from counts; acceptors are `a1..aN`, coordinators
//! `c1..cM`, proposers `p1..pK`, learners `l1..lL`. Scripted proposals are
//! injected from the pseudo-sender `client`, which is never a roster name.
//! With `factorized_start`, round 1 (which must be fast) is assumed already
//! opened before time zero: acceptors hold its promise, its coordinator has
//! sent the `Any`, and proposers treat it as open.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{
    Acceptor, AgentNode, Coordinator, Learner, Message, MessageBody, Proposer, RoundScheme,
};
use crate::quorum::{derive_config, QuorumConfig, QuorumError, QuorumPolicy, RoundType};
use crate::rules::RuleKind;
use crate::simnet::{FaultPlan, FaultPlanError, ScriptEvent, SimSetup, StopCondition};
use crate::types::{AgentId, Value};

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

pub const MAX_ACCEPTORS: u32 = 64;
pub const MAX_PER_AUX_ROLE: u32 = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("unreadable scenario: {0}")]
    Parse(String),
    #[error("unsupported format_version {found}, this build reads {supported}")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("scenario name is empty")]
    EmptyName,
    #[error("{role} count {count} outside 1..={max}")]
    RoleCountOutOfRange {
        role: &'static str,
        count: u32,
        max: u32,
    },
    #[error("proposer count {count} exceeds {max}")]
    TooManyProposers { count: u32, max: u32 },
    #[error(transparent)]
    Quorum(#[from] QuorumError),
    #[error(transparent)]
    Fault(#[from] FaultPlanError),
    #[error("coordinator override for round {round} names {id}, not in the roster")]
    UnknownOverrideCoordinator { round: u64, id: AgentId },
    #[error("round 0 is the never-voted sentinel and cannot be scheduled")]
    RoundZeroScripted,
    #[error("factorized start requires round 1 to be fast")]
    FactorizedNeedsFastRoundOne,
    #[error("script step {index} targets {id}, which is not a {expected}")]
    BadScriptTarget {
        index: usize,
        id: AgentId,
        expected: &'static str,
    },
}

/// One scripted stimulus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScriptStep {
    /// Hand `value` to a proposer (fast path) or a coordinator (classic
    /// proposal pool) at `time`.
    Propose {
        time: u64,
        target: AgentId,
        value: Value,
    },
    /// Fire a coordinator's start-round timeout. `round` picks the round
    /// explicitly; omitted, the coordinator falls back to its next owned
    /// classic round.
    StartRound {
        time: u64,
        coordinator: AgentId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        round: Option<u64>,
    },
}

/// Stop condition wire form: the string `"quiescence"` or `{"time": T}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopSpec {
    #[default]
    Quiescence,
    Time(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format_version: u32,
    pub name: String,
    pub acceptors: u32,
    #[serde(default = "default_role_count")]
    pub coordinators: u32,
    #[serde(default = "default_role_count")]
    pub proposers: u32,
    #[serde(default = "default_role_count")]
    pub learners: u32,
    pub policy: QuorumPolicy,
    #[serde(default)]
    pub rule: RuleKind,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub round_type_overrides: BTreeMap<u64, RoundType>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub coordinator_overrides: BTreeMap<u64, AgentId>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub factorized_start: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub script: Vec<ScriptStep>,
    #[serde(default)]
    pub fault_plan: FaultPlan,
    #[serde(default)]
    pub stop: StopSpec,
    /// Whether a learner is expected to learn. `None` leaves the run
    /// unjudged on that axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_decision: Option<bool>,
}

fn default_role_count() -> u32 {
    1
}

fn role_ids(prefix: &str, count: u32) -> Vec<AgentId> {
    (1..=count)
        .map(|i| AgentId::from(format!("{prefix}{i}").as_str()))
        .collect()
}

impl Scenario {
    /// Parses and validates one JSON document.
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("scenario serializes");
        out.push('\n');
        out
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.format_version != SCENARIO_FORMAT_VERSION {
            return Err(ScenarioError::UnsupportedVersion {
                found: self.format_version,
                supported: SCENARIO_FORMAT_VERSION,
            });
        }
        if self.name.is_empty() {
            return Err(ScenarioError::EmptyName);
        }
        for (role, count, max) in [
            ("acceptor", self.acceptors, MAX_ACCEPTORS),
            ("coordinator", self.coordinators, MAX_PER_AUX_ROLE),
            ("learner", self.learners, MAX_PER_AUX_ROLE),
        ] {
            if count == 0 || count > max {
                return Err(ScenarioError::RoleCountOutOfRange { role, count, max });
            }
        }
        // Zero proposers is legal: purely classic scenarios feed values
        // straight to coordinators.
        if self.proposers > MAX_PER_AUX_ROLE {
            return Err(ScenarioError::TooManyProposers {
                count: self.proposers,
                max: MAX_PER_AUX_ROLE,
            });
        }
        derive_config(self.acceptors, self.policy)?;
        self.fault_plan.validate()?;

        let coordinator_ids = role_ids("c", self.coordinators);
        let proposer_ids = role_ids("p", self.proposers);
        for (&round, id) in &self.coordinator_overrides {
            if round == 0 {
                return Err(ScenarioError::RoundZeroScripted);
            }
            if !coordinator_ids.contains(id) {
                return Err(ScenarioError::UnknownOverrideCoordinator {
                    round,
                    id: id.clone(),
                });
            }
        }
        if self.round_type_overrides.contains_key(&0) {
            return Err(ScenarioError::RoundZeroScripted);
        }
        if self.factorized_start && self.scheme()?.round_type(1) != RoundType::Fast {
            return Err(ScenarioError::FactorizedNeedsFastRoundOne);
        }
        for (index, step) in self.script.iter().enumerate() {
            match step {
                ScriptStep::Propose { target, .. } => {
                    if !proposer_ids.contains(target) && !coordinator_ids.contains(target) {
                        return Err(ScenarioError::BadScriptTarget {
                            index,
                            id: target.clone(),
                            expected: "proposer or coordinator",
                        });
                    }
                }
                ScriptStep::StartRound {
                    coordinator, round, ..
                } => {
                    if *round == Some(0) {
                        return Err(ScenarioError::RoundZeroScripted);
                    }
                    if !coordinator_ids.contains(coordinator) {
                        return Err(ScenarioError::BadScriptTarget {
                            index,
                            id: coordinator.clone(),
                            expected: "coordinator",
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn config(&self) -> Result<QuorumConfig, ScenarioError> {
        Ok(derive_config(self.acceptors, self.policy)?)
    }

    fn scheme(&self) -> Result<RoundScheme, ScenarioError> {
        Ok(RoundScheme::new(role_ids("c", self.coordinators))
            .map_err(|_| ScenarioError::RoleCountOutOfRange {
                role: "coordinator",
                count: 0,
                max: MAX_PER_AUX_ROLE,
            })?
            .with_type_overrides(self.round_type_overrides.clone())
            .with_coordinator_overrides(self.coordinator_overrides.clone()))
    }

    /// Compiles the scenario into a runnable setup. Call after `validate`
    /// (or via `from_json`, which validates).
    pub fn build(&self) -> Result<SimSetup, ScenarioError> {
        self.validate()?;
        let config = self.config()?;
        let scheme = self.scheme()?;
        let acceptor_ids = role_ids("a", self.acceptors);
        let coordinator_ids = role_ids("c", self.coordinators);
        let proposer_ids = role_ids("p", self.proposers);
        let learner_ids = role_ids("l", self.learners);
        let round_one_owner = scheme.coordinator_of(1).clone();

        let mut nodes = Vec::new();
        for id in &acceptor_ids {
            let acceptor = Acceptor::new(id.clone(), learner_ids.clone());
            nodes.push(AgentNode::Acceptor(if self.factorized_start {
                acceptor.with_promise(1)
            } else {
                acceptor
            }));
        }
        for id in &coordinator_ids {
            let coordinator = Coordinator::new(
                id.clone(),
                config,
                scheme.clone(),
                self.rule,
                acceptor_ids.clone(),
                proposer_ids.clone(),
            );
            nodes.push(AgentNode::Coordinator(
                if self.factorized_start && *id == round_one_owner {
                    coordinator.with_preexecuted_round(1)
                } else {
                    coordinator
                },
            ));
        }
        for id in &proposer_ids {
            let proposer = Proposer::new(id.clone(), acceptor_ids.clone());
            nodes.push(AgentNode::Proposer(if self.factorized_start {
                proposer.with_open_round(1)
            } else {
                proposer
            }));
        }
        for id in &learner_ids {
            nodes.push(AgentNode::Learner(Learner::new(
                id.clone(),
                config,
                scheme.clone(),
            )));
        }

        let script = self
            .script
            .iter()
            .map(|step| match step {
                ScriptStep::Propose {
                    time,
                    target,
                    value,
                } => ScriptEvent::Inject {
                    time: *time,
                    message: Message {
                        from: AgentId::from("client"),
                        to: target.clone(),
                        body: MessageBody::Propose {
                            value: value.clone(),
                        },
                    },
                },
                ScriptStep::StartRound {
                    time,
                    coordinator,
                    round,
                } => ScriptEvent::StartRound {
                    time: *time,
                    coordinator: coordinator.clone(),
                    round: *round,
                },
            })
            .collect();

        Ok(SimSetup {
            name: self.name.clone(),
            nodes,
            script,
            plan: self.fault_plan.clone(),
            stop: match self.stop {
                StopSpec::Quiescence => StopCondition::Quiescence,
                StopSpec::Time(t) => StopCondition::AtTime(t),
            },
        })
    }
}

/// Scenarios compiled into the binary, selectable by bare name.
pub mod bundled {
    pub const FAST_HAPPY: &str = include_str!("../scenarios/fast_happy.scn");
    pub const CLASSIC_HAPPY: &str = include_str!("../scenarios/classic_happy.scn");
    pub const COLLISION: &str = include_str!("../scenarios/collision.scn");
    pub const DROP_ALL: &str = include_str!("../scenarios/drop_all.scn");

    pub const ALL: [(&str, &str); 4] = [
        ("fast_happy", FAST_HAPPY),
        ("classic_happy", CLASSIC_HAPPY),
        ("collision", COLLISION),
        ("drop_all", DROP_ALL),
    ];

    pub fn by_name(name: &str) -> Option<&'static str> {
        ALL.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
    }
}
