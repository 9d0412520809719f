//! Fault injection plans: probabilistic loss, duplication, delay jitter,
//! and scripted crash/recover/drop directives keyed by trace position.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::AgentId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FaultPlanError {
    #[error("{field} must lie in [0, 1], got {value}")]
    ProbabilityOutOfRange { field: &'static str, value: f64 },
    #[error("delay_min {min} exceeds delay_max {max}")]
    DelayBoundsInverted { min: u64, max: u64 },
}

/// Fixed delay override for one directed channel, replacing the sampled
/// delay (probabilistic drop and duplication still apply).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkDelay {
    pub from: AgentId,
    pub to: AgentId,
    pub delay: u64,
}

/// A scripted fault, fired when the trace reaches `position` records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Directive {
    /// Absorb all events for `agent` until a matching `Recover`. Firing
    /// right after a record suppresses that record's unsent messages, which
    /// models a crash between the durable write and the send.
    Crash { position: u64, agent: AgentId },
    Recover { position: u64, agent: AgentId },
    /// Force-drop the next send on the `from -> to` channel at or after
    /// `position`, without consuming random draws.
    DropNext {
        position: u64,
        from: AgentId,
        to: AgentId,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultPlan {
    pub drop_probability: f64,
    pub duplicate_probability: f64,
    pub delay_min: u64,
    pub delay_max: u64,
    pub link_delays: Vec<LinkDelay>,
    pub directives: Vec<Directive>,
    pub seed: u64,
}

impl Default for FaultPlan {
    fn default() -> Self {
        Self {
            drop_probability: 0.0,
            duplicate_probability: 0.0,
            delay_min: 1,
            delay_max: 1,
            link_delays: Vec::new(),
            directives: Vec::new(),
            seed: 0,
        }
    }
}

impl FaultPlan {
    pub fn validate(&self) -> Result<(), FaultPlanError> {
        for (field, value) in [
            ("drop_probability", self.drop_probability),
            ("duplicate_probability", self.duplicate_probability),
        ] {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(FaultPlanError::ProbabilityOutOfRange { field, value });
            }
        }
        if self.delay_min > self.delay_max {
            return Err(FaultPlanError::DelayBoundsInverted {
                min: self.delay_min,
                max: self.delay_max,
            });
        }
        Ok(())
    }

    pub fn link_delay(&self, from: &AgentId, to: &AgentId) -> Option<u64> {
        self.link_delays
            .iter()
            .find(|l| &l.from == from && &l.to == to)
            .map(|l| l.delay)
    }
}
