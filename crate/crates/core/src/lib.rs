//! A laboratory for Fast Paxos: quorum arithmetic, interchangeable
//! coordinator value-selection rules, role state machines, a deterministic
//! fault-injecting network simulator, and checkers that compare the rules
//! against each other and against safety properties on simulated runs.

pub mod protocol;
pub mod quorum;
pub mod rules;
pub mod scenario;
pub mod simnet;
pub mod types;
