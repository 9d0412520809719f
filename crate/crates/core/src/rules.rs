//! Coordinator value-selection rules and the O4 certification oracle.
//!
//! A coordinator starting round `i` collects last-vote reports `(vr, vv)`
//! from a quorum `Q` of acceptors. With `k` the largest reported round and
//! `V` the values voted at `k`, the original rule mandates the unique value
//! `w` for which some `k`-quorum `R` exists with every member of `Q ∩ R`
//! reporting `(k, w)` (condition `O4(w)`). Counting votes for `w` inside
//! `Q` evaluates `O4` without enumerating quorums: `O4(w)` holds iff the
//! count reaches
//!
//! ```text
//! N - E - F   when round i is classic
//! N - 2E      when round i is fast
//! ```
//!
//! both of which exceed half of `|Q|`. The simplified rule keeps only the
//! consequence: mandate the unique most-often-voted value, else stay free.
//! It mandates everything the original rule mandates and sometimes more,
//! never less.
//!
//! Rules return [`CoordinatorChoice::Free`] instead of picking a proposal;
//! the coordinator agent resolves `Free` against its own proposal pool.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quorum::{QuorumConfig, RoundType};
use crate::types::{AgentId, Value};

/// Largest universe the subset-enumerating oracle accepts. Past this the
/// counting form is the only evaluator; a `2^N` scan is a test oracle, not
/// a production path.
pub const ORACLE_MAX_ACCEPTORS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("report set is empty")]
    EmptyReports,
    #[error("duplicate report from acceptor {id}")]
    DuplicateAcceptor { id: AgentId },
    #[error("report from {id} breaks the round-0-iff-no-value sentinel (round {voted_round}, has_value {has_value})")]
    MalformedReport {
        id: AgentId,
        voted_round: u64,
        has_value: bool,
    },
    #[error("universe has {actual} acceptors, config expects {expected}")]
    UniverseSizeMismatch { expected: u32, actual: usize },
    #[error("oracle universe of {n} acceptors exceeds the enumeration cap of {ORACLE_MAX_ACCEPTORS}")]
    UniverseTooLarge { n: usize },
    #[error("report from {id} names an acceptor outside the universe")]
    UnknownAcceptor { id: AgentId },
    #[error("{reports} reports exceed the {n}-acceptor universe")]
    TooManyReports { n: u32, reports: usize },
    #[error("{got} reports are fewer than the classic quorum size {required}")]
    BelowClassicQuorum { required: u32, got: usize },
    #[error("candidate value was not voted in the tally's highest round")]
    CandidateNotInTally,
}

/// One acceptor's last-vote report: `vr(a)` and `vv(a)`.
///
/// Round 0 is the reserved never-voted sentinel; real rounds start at 1,
/// so `voted_round = 0` holds exactly when `voted_value` is absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPhase1bReport")]
pub struct Phase1bReport {
    #[serde(rename = "acceptor")]
    acceptor_id: AgentId,
    voted_round: u64,
    voted_value: Option<Value>,
}

#[derive(Deserialize)]
struct RawPhase1bReport {
    acceptor: AgentId,
    voted_round: u64,
    #[serde(default)]
    voted_value: Option<Value>,
}

impl TryFrom<RawPhase1bReport> for Phase1bReport {
    type Error = RuleError;

    fn try_from(raw: RawPhase1bReport) -> Result<Self, RuleError> {
        Phase1bReport::new(raw.acceptor, raw.voted_round, raw.voted_value)
    }
}

impl Phase1bReport {
    pub fn new(
        acceptor_id: AgentId,
        voted_round: u64,
        voted_value: Option<Value>,
    ) -> Result<Self, RuleError> {
        if (voted_round == 0) != voted_value.is_none() {
            return Err(RuleError::MalformedReport {
                id: acceptor_id,
                voted_round,
                has_value: voted_value.is_some(),
            });
        }
        Ok(Self {
            acceptor_id,
            voted_round,
            voted_value,
        })
    }

    pub fn never_voted(acceptor_id: AgentId) -> Self {
        Self {
            acceptor_id,
            voted_round: 0,
            voted_value: None,
        }
    }

    pub fn acceptor_id(&self) -> &AgentId {
        &self.acceptor_id
    }

    pub fn voted_round(&self) -> u64 {
        self.voted_round
    }

    pub fn voted_value(&self) -> Option<&Value> {
        self.voted_value.as_ref()
    }
}

/// The quorum `Q` of collected reports: non-empty, one report per acceptor,
/// held sorted by acceptor id so downstream iteration is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(try_from = "Vec<Phase1bReport>")]
pub struct ReportSet {
    reports: Vec<Phase1bReport>,
}

impl Serialize for ReportSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.reports.serialize(serializer)
    }
}

impl TryFrom<Vec<Phase1bReport>> for ReportSet {
    type Error = RuleError;

    fn try_from(reports: Vec<Phase1bReport>) -> Result<Self, RuleError> {
        ReportSet::new(reports)
    }
}

impl ReportSet {
    pub fn new(mut reports: Vec<Phase1bReport>) -> Result<Self, RuleError> {
        if reports.is_empty() {
            return Err(RuleError::EmptyReports);
        }
        reports.sort_by(|a, b| a.acceptor_id.cmp(&b.acceptor_id));
        for pair in reports.windows(2) {
            if pair[0].acceptor_id == pair[1].acceptor_id {
                return Err(RuleError::DuplicateAcceptor {
                    id: pair[0].acceptor_id.clone(),
                });
            }
        }
        Ok(Self { reports })
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = &Phase1bReport> {
        self.reports.iter()
    }

    pub fn as_slice(&self) -> &[Phase1bReport] {
        &self.reports
    }
}

/// `k` and the vote counts at `k`: the key set is `V`, each count is `T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VoteTally {
    max_round: u64,
    value_counts: BTreeMap<Value, u32>,
}

impl VoteTally {
    /// `k`, the largest `vr(a)` over `Q`; 0 when nobody voted.
    pub fn max_round(&self) -> u64 {
        self.max_round
    }

    pub fn value_counts(&self) -> &BTreeMap<Value, u32> {
        &self.value_counts
    }

    /// `T` for one value; 0 for values outside `V`.
    pub fn count(&self, value: &Value) -> u32 {
        self.value_counts.get(value).copied().unwrap_or(0)
    }

    /// The single most-often-voted value, or `None` on an empty tally or a
    /// tie for the top count. A single-entry tally is a unique maximum.
    pub fn unique_max(&self) -> Option<&Value> {
        let mut best: Option<(&Value, u32)> = None;
        let mut tied = false;
        for (value, &count) in &self.value_counts {
            match best {
                Some((_, top)) if count > top => {
                    best = Some((value, count));
                    tied = false;
                }
                Some((_, top)) if count == top => tied = true,
                None => best = Some((value, count)),
                _ => {}
            }
        }
        match (best, tied) {
            (Some((value, _)), false) => Some(value),
            _ => None,
        }
    }
}

/// Computes `k` and `V` with vote counts from `Q`. Reports that never voted
/// contribute nothing; an all-null set tallies as `k = 0`, counts empty.
pub fn tally_votes(reports: &ReportSet) -> VoteTally {
    let max_round = reports.iter().map(|r| r.voted_round).max().unwrap_or(0);
    let mut value_counts = BTreeMap::new();
    if max_round > 0 {
        for report in reports.iter() {
            if report.voted_round == max_round {
                if let Some(value) = &report.voted_value {
                    *value_counts.entry(value.clone()).or_insert(0u32) += 1;
                }
            }
        }
    }
    VoteTally {
        max_round,
        value_counts,
    }
}

/// Minimum vote count `T` that certifies `O4` by counting alone, keyed by
/// the type of the round the coordinator is starting.
pub fn o4_threshold(config: &QuorumConfig, current_round_type: RoundType) -> u32 {
    let n = config.n_acceptors();
    let e = config.max_faults_fast();
    let f = config.max_faults_classic();
    match current_round_type {
        RoundType::Classic => n - e - f,
        RoundType::Fast => n - 2 * e,
    }
}

/// Brute-force `O4(candidate)`: scans every subset `R` of the universe with
/// `|R| = quorum_size(k_round_type)` for one whose overlap with `Q` reports
/// `(k, candidate)` unanimously. Supersets of a passing `R` also pass, so
/// minimum-size subsets decide the question.
pub fn o4_holds_oracle(
    reports: &ReportSet,
    universe: &BTreeSet<AgentId>,
    config: &QuorumConfig,
    k_round_type: RoundType,
    candidate: &Value,
) -> Result<bool, RuleError> {
    let n = config.n_acceptors() as usize;
    if universe.len() != n {
        return Err(RuleError::UniverseSizeMismatch {
            expected: config.n_acceptors(),
            actual: universe.len(),
        });
    }
    if n > ORACLE_MAX_ACCEPTORS {
        return Err(RuleError::UniverseTooLarge { n });
    }
    let ids: Vec<&AgentId> = universe.iter().collect();
    let tally = tally_votes(reports);
    if tally.count(candidate) == 0 {
        return Err(RuleError::CandidateNotInTally);
    }
    let k = tally.max_round();
    // A universe member blocks R if it sits in Q with anything other than
    // (k, candidate); members outside Q are unconstrained.
    let mut blockers: u32 = 0;
    for report in reports.iter() {
        let position = ids
            .binary_search(&&report.acceptor_id)
            .map_err(|_| RuleError::UnknownAcceptor {
                id: report.acceptor_id.clone(),
            })?;
        let supports = report.voted_round == k && report.voted_value.as_ref() == Some(candidate);
        if !supports {
            blockers |= 1 << position;
        }
    }
    let quorum = config.quorum_size(k_round_type);
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() == quorum && mask & blockers == 0 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Closed-form `O4(candidate)`: a blocker-free `R` of quorum size exists
/// iff the non-supporting part of `Q` leaves enough of the universe free,
/// `N - (|Q| - T) >= quorum_size(k_round_type)`.
pub fn o4_holds_counting(
    reports: &ReportSet,
    config: &QuorumConfig,
    k_round_type: RoundType,
    candidate: &Value,
) -> Result<bool, RuleError> {
    let n = config.n_acceptors();
    if reports.len() > n as usize {
        return Err(RuleError::TooManyReports {
            n,
            reports: reports.len(),
        });
    }
    let tally = tally_votes(reports);
    let t = tally.count(candidate);
    if t == 0 {
        return Err(RuleError::CandidateNotInTally);
    }
    let blockers = reports.len() as u32 - t;
    Ok(n - blockers >= config.quorum_size(k_round_type))
}

/// Outcome of a value-selection rule. `Free` means any proposed value may
/// be chosen; resolution against actual proposals is the coordinator's job.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "choice", content = "value", rename_all = "lowercase")]
pub enum CoordinatorChoice {
    Mandated(Value),
    Free,
}

impl fmt::Display for CoordinatorChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoordinatorChoice::Mandated(value) => write!(f, "Mandated({value})"),
            CoordinatorChoice::Free => f.write_str("Free"),
        }
    }
}

/// How `pick_value_original` decides `O4(w)`.
#[derive(Debug, Clone, Copy)]
pub enum O4Evaluator<'a> {
    /// Vote count against [`o4_threshold`]; the production path.
    Cardinality,
    /// Subset enumeration over the full acceptor universe.
    Oracle { universe: &'a BTreeSet<AgentId> },
}

fn ensure_classic_quorum(reports: &ReportSet, config: &QuorumConfig) -> Result<(), RuleError> {
    let required = config.classic_quorum_size();
    if (reports.len() as u64) < u64::from(required) {
        return Err(RuleError::BelowClassicQuorum {
            required,
            got: reports.len(),
        });
    }
    Ok(())
}

/// The original rule: free when nobody voted, the sole element of `V` when
/// it is a singleton, the unique `w` satisfying `O4(w)` when one exists,
/// free otherwise.
pub fn pick_value_original(
    reports: &ReportSet,
    config: &QuorumConfig,
    current_round_type: RoundType,
    evaluator: O4Evaluator<'_>,
) -> Result<CoordinatorChoice, RuleError> {
    ensure_classic_quorum(reports, config)?;
    let tally = tally_votes(reports);
    if tally.max_round() == 0 {
        return Ok(CoordinatorChoice::Free);
    }
    if tally.value_counts().len() == 1 {
        let only = tally.value_counts().keys().next().unwrap();
        return Ok(CoordinatorChoice::Mandated(only.clone()));
    }
    for (w, &t) in tally.value_counts() {
        let holds = match evaluator {
            O4Evaluator::Cardinality => t >= o4_threshold(config, current_round_type),
            // More than one value at round k only arises when k was fast,
            // so R here is a fast quorum.
            O4Evaluator::Oracle { universe } => {
                o4_holds_oracle(reports, universe, config, RoundType::Fast, w)?
            }
        };
        if holds {
            return Ok(CoordinatorChoice::Mandated(w.clone()));
        }
    }
    Ok(CoordinatorChoice::Free)
}

/// The first rewriting of the original rule: locate the unique most-often
/// voted `w`, then gate on `O4(w)` by threshold. Kept so tests can replay
/// the derivation chain between the original and simplified forms.
pub fn pick_value_intermediate(
    reports: &ReportSet,
    config: &QuorumConfig,
    current_round_type: RoundType,
) -> Result<CoordinatorChoice, RuleError> {
    ensure_classic_quorum(reports, config)?;
    let tally = tally_votes(reports);
    if tally.max_round() == 0 {
        return Ok(CoordinatorChoice::Free);
    }
    if tally.value_counts().len() == 1 {
        let only = tally.value_counts().keys().next().unwrap();
        return Ok(CoordinatorChoice::Mandated(only.clone()));
    }
    match tally.unique_max() {
        Some(w) if tally.count(w) >= o4_threshold(config, current_round_type) => {
            Ok(CoordinatorChoice::Mandated(w.clone()))
        }
        _ => Ok(CoordinatorChoice::Free),
    }
}

/// The simplified rule: mandate the unique most-often voted value, free on
/// an empty tally or a tie. Needs no quorum configuration and no round
/// type.
pub fn pick_value_simplified(reports: &ReportSet) -> CoordinatorChoice {
    match tally_votes(reports).unique_max() {
        Some(w) => CoordinatorChoice::Mandated(w.clone()),
        None => CoordinatorChoice::Free,
    }
}

/// Which rule a coordinator runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Original,
    Intermediate,
    #[default]
    Simplified,
}

impl RuleKind {
    /// Runs the rule with its production evaluator. The simplified rule
    /// ignores the configuration and round type.
    pub fn evaluate(
        self,
        reports: &ReportSet,
        config: &QuorumConfig,
        current_round_type: RoundType,
    ) -> Result<CoordinatorChoice, RuleError> {
        match self {
            RuleKind::Original => {
                pick_value_original(reports, config, current_round_type, O4Evaluator::Cardinality)
            }
            RuleKind::Intermediate => {
                pick_value_intermediate(reports, config, current_round_type)
            }
            RuleKind::Simplified => Ok(pick_value_simplified(reports)),
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleKind::Original => "original",
            RuleKind::Intermediate => "intermediate",
            RuleKind::Simplified => "simplified",
        })
    }
}

impl std::str::FromStr for RuleKind {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        match text {
            "original" => Ok(RuleKind::Original),
            "intermediate" => Ok(RuleKind::Intermediate),
            "simplified" => Ok(RuleKind::Simplified),
            other => Err(format!(
                "unknown rule {other:?}; expected original, intermediate, or simplified"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quorum::QuorumPolicy;

    fn rpt(id: &str, round: u64, value: Option<&str>) -> Phase1bReport {
        Phase1bReport::new(AgentId::from(id), round, value.map(Value::from)).unwrap()
    }

    fn set(reports: Vec<Phase1bReport>) -> ReportSet {
        ReportSet::new(reports).unwrap()
    }

    fn universe(n: u32) -> BTreeSet<AgentId> {
        (1..=n).map(|i| AgentId::new(format!("a{i}"))).collect()
    }

    #[test]
    fn report_sentinel_invariant() {
        assert!(Phase1bReport::new(AgentId::from("a1"), 0, Some(Value::from("x"))).is_err());
        assert!(Phase1bReport::new(AgentId::from("a1"), 3, None).is_err());
        assert!(Phase1bReport::new(AgentId::from("a1"), 3, Some(Value::from("x"))).is_ok());
    }

    #[test]
    fn report_set_rejects_duplicates_and_empty() {
        assert_eq!(ReportSet::new(vec![]), Err(RuleError::EmptyReports));
        let dup = ReportSet::new(vec![rpt("a1", 0, None), rpt("a1", 1, Some("x"))]);
        assert!(matches!(dup, Err(RuleError::DuplicateAcceptor { .. })));
    }

    #[test]
    fn tally_nobody_voted() {
        let t = tally_votes(&set(vec![
            rpt("a1", 0, None),
            rpt("a2", 0, None),
            rpt("a3", 0, None),
        ]));
        assert_eq!(t.max_round(), 0);
        assert!(t.value_counts().is_empty());
    }

    #[test]
    fn tally_counts_only_highest_round() {
        let t = tally_votes(&set(vec![
            rpt("a1", 2, Some("x")),
            rpt("a2", 2, Some("x")),
            rpt("a3", 1, Some("y")),
        ]));
        assert_eq!(t.max_round(), 2);
        assert_eq!(t.count(&Value::from("x")), 2);
        assert_eq!(t.count(&Value::from("y")), 0);
    }

    #[test]
    fn tally_split_round() {
        let t = tally_votes(&set(vec![
            rpt("a1", 4, Some("x")),
            rpt("a2", 4, Some("y")),
            rpt("a3", 4, Some("x")),
        ]));
        assert_eq!(t.max_round(), 4);
        assert_eq!(t.count(&Value::from("x")), 2);
        assert_eq!(t.count(&Value::from("y")), 1);
    }

    #[test]
    fn threshold_values() {
        let c512 = QuorumConfig::new(5, 1, 2).unwrap();
        assert_eq!(o4_threshold(&c512, RoundType::Classic), 2);
        assert_eq!(o4_threshold(&c512, RoundType::Fast), 3);
        let c411 = QuorumConfig::new(4, 1, 1).unwrap();
        assert_eq!(o4_threshold(&c411, RoundType::Classic), 2);
    }

    #[test]
    fn threshold_is_a_quorum_majority() {
        for n in 1..=16 {
            for policy in [QuorumPolicy::MaximizeE, QuorumPolicy::MaximizeF] {
                let config = crate::quorum::derive_config(n, policy).unwrap();
                for rt in [RoundType::Classic, RoundType::Fast] {
                    assert!(
                        o4_threshold(&config, rt) >= config.quorum_size(rt) / 2 + 1,
                        "n={n} {rt:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn oracle_split_fast_round() {
        let config = QuorumConfig::new(5, 1, 2).unwrap();
        let q = set(vec![
            rpt("a1", 1, Some("x")),
            rpt("a2", 1, Some("x")),
            rpt("a3", 1, Some("y")),
        ]);
        let u = universe(5);
        // R = {a1, a2, a4, a5} reaches the fast quorum size 4 for x.
        assert_eq!(
            o4_holds_oracle(&q, &u, &config, RoundType::Fast, &Value::from("x")),
            Ok(true)
        );
        // Any R avoiding a1 and a2 tops out at 3 members.
        assert_eq!(
            o4_holds_oracle(&q, &u, &config, RoundType::Fast, &Value::from("y")),
            Ok(false)
        );
    }

    #[test]
    fn oracle_unanimous_reports() {
        let config = QuorumConfig::new(5, 1, 2).unwrap();
        let q = set(vec![
            rpt("a1", 2, Some("x")),
            rpt("a2", 2, Some("x")),
            rpt("a3", 2, Some("x")),
            rpt("a4", 2, Some("x")),
        ]);
        assert_eq!(
            o4_holds_oracle(&q, &universe(5), &config, RoundType::Fast, &Value::from("x")),
            Ok(true)
        );
    }

    #[test]
    fn oracle_agrees_with_counting() {
        let config = QuorumConfig::new(5, 1, 2).unwrap();
        let u = universe(5);
        let q = set(vec![
            rpt("a1", 1, Some("x")),
            rpt("a2", 1, Some("x")),
            rpt("a3", 1, Some("y")),
        ]);
        for rt in [RoundType::Classic, RoundType::Fast] {
            for v in ["x", "y"] {
                let v = Value::from(v);
                assert_eq!(
                    o4_holds_oracle(&q, &u, &config, rt, &v),
                    o4_holds_counting(&q, &config, rt, &v),
                    "{rt:?} {v}"
                );
            }
        }
    }

    #[test]
    fn oracle_input_validation() {
        let config = QuorumConfig::new(5, 1, 2).unwrap();
        let q = set(vec![rpt("a1", 1, Some("x")), rpt("a2", 0, None), rpt("a3", 0, None)]);
        let x = Value::from("x");
        assert!(matches!(
            o4_holds_oracle(&q, &universe(4), &config, RoundType::Fast, &x),
            Err(RuleError::UniverseSizeMismatch { .. })
        ));
        let big = QuorumConfig::new(21, 0, 0).unwrap();
        assert!(matches!(
            o4_holds_oracle(&q, &universe(21), &big, RoundType::Fast, &x),
            Err(RuleError::UniverseTooLarge { .. })
        ));
        let stranger = set(vec![rpt("z9", 1, Some("x")), rpt("a2", 0, None), rpt("a3", 0, None)]);
        assert!(matches!(
            o4_holds_oracle(&stranger, &universe(5), &config, RoundType::Fast, &x),
            Err(RuleError::UnknownAcceptor { .. })
        ));
        assert_eq!(
            o4_holds_oracle(&q, &universe(5), &config, RoundType::Fast, &Value::from("q")),
            Err(RuleError::CandidateNotInTally)
        );
    }

    #[test]
    fn original_rule_nobody_voted_is_free() {
        let config = QuorumConfig::new(5, 1, 2).unwrap();
        let q = set(vec![rpt("a1", 0, None), rpt("a2", 0, None), rpt("a3", 0, None)]);
        for rt in [RoundType::Classic, RoundType::Fast] {
            assert_eq!(
                pick_value_original(&q, &config, rt, O4Evaluator::Cardinality),
                Ok(CoordinatorChoice::Free)
            );
        }
    }

    #[test]
    fn original_rule_singleton_v_is_mandated() {
        let config = QuorumConfig::new(5, 1, 2).unwrap();
        let q = set(vec![
            rpt("a1", 2, Some("x")),
            rpt("a2", 1, Some("y")),
            rpt("a3", 0, None),
        ]);
        assert_eq!(
            pick_value_original(&q, &config, RoundType::Classic, O4Evaluator::Cardinality),
            Ok(CoordinatorChoice::Mandated(Value::from("x")))
        );
    }

    #[test]
    fn original_rule_split_v_mandates_the_o4_value() {
        let config = QuorumConfig::new(5, 1, 2).unwrap();
        let q = set(vec![
            rpt("a1", 1, Some("x")),
            rpt("a2", 1, Some("x")),
            rpt("a3", 1, Some("y")),
        ]);
        let u = universe(5);
        let want = Ok(CoordinatorChoice::Mandated(Value::from("x")));
        assert_eq!(
            pick_value_original(&q, &config, RoundType::Classic, O4Evaluator::Cardinality),
            want
        );
        assert_eq!(
            pick_value_original(&q, &config, RoundType::Classic, O4Evaluator::Oracle {
                universe: &u
            }),
            want
        );
    }

    #[test]
    fn original_rule_rejects_short_report_sets() {
        let config = QuorumConfig::new(5, 1, 2).unwrap();
        let q = set(vec![rpt("a1", 0, None), rpt("a2", 0, None)]);
        assert!(matches!(
            pick_value_original(&q, &config, RoundType::Classic, O4Evaluator::Cardinality),
            Err(RuleError::BelowClassicQuorum { .. })
        ));
    }

    #[test]
    fn simplified_rule_examples() {
        let q = set(vec![
            rpt("a1", 3, Some("x")),
            rpt("a2", 3, Some("x")),
            rpt("a3", 3, Some("x")),
            rpt("a4", 3, Some("y")),
        ]);
        assert_eq!(
            pick_value_simplified(&q),
            CoordinatorChoice::Mandated(Value::from("x"))
        );
        let tie = set(vec![
            rpt("a1", 3, Some("x")),
            rpt("a2", 3, Some("x")),
            rpt("a3", 3, Some("y")),
            rpt("a4", 3, Some("y")),
        ]);
        assert_eq!(pick_value_simplified(&tie), CoordinatorChoice::Free);
        let idle = set(vec![rpt("a1", 0, None), rpt("a2", 0, None), rpt("a3", 0, None)]);
        assert_eq!(pick_value_simplified(&idle), CoordinatorChoice::Free);
    }

    #[test]
    fn intermediate_rule_matches_original_on_split() {
        let config = QuorumConfig::new(5, 1, 2).unwrap();
        let q = set(vec![
            rpt("a1", 1, Some("x")),
            rpt("a2", 1, Some("x")),
            rpt("a3", 1, Some("y")),
        ]);
        assert_eq!(
            pick_value_intermediate(&q, &config, RoundType::Classic),
            Ok(CoordinatorChoice::Mandated(Value::from("x")))
        );
        let tie = set(vec![
            rpt("a1", 1, Some("x")),
            rpt("a2", 1, Some("x")),
            rpt("a3", 1, Some("y")),
            rpt("a4", 1, Some("y")),
        ]);
        assert_eq!(
            pick_value_intermediate(&tie, &config, RoundType::Classic),
            Ok(CoordinatorChoice::Free)
        );
    }

    #[test]
    fn intermediate_rule_free_below_threshold() {
        // N=7 MaximizeF gives F=3, E=1: classic threshold 7-1-3 = 3 > 2.
        let config = crate::quorum::derive_config(7, QuorumPolicy::MaximizeF).unwrap();
        assert_eq!(config.max_faults_classic(), 3);
        assert_eq!(config.max_faults_fast(), 1);
        let q = set(vec![
            rpt("a1", 1, Some("x")),
            rpt("a2", 1, Some("x")),
            rpt("a3", 1, Some("y")),
            rpt("a4", 0, None),
        ]);
        assert_eq!(
            pick_value_intermediate(&q, &config, RoundType::Classic),
            Ok(CoordinatorChoice::Free)
        );
        // The simplified rule mandates here: the restriction witness shape.
        assert_eq!(
            pick_value_simplified(&q),
            CoordinatorChoice::Mandated(Value::from("x"))
        );
    }

    #[test]
    fn rule_kind_round_trips() {
        for kind in [RuleKind::Original, RuleKind::Intermediate, RuleKind::Simplified] {
            let text = kind.to_string();
            assert_eq!(text.parse::<RuleKind>().unwrap(), kind);
        }
        assert!("both".parse::<RuleKind>().is_err());
        assert_eq!(
            serde_json::to_string(&RuleKind::Simplified).unwrap(),
            "\"simplified\""
        );
    }

    #[test]
    fn choice_serialization() {
        let mandated = CoordinatorChoice::Mandated(Value::from("x"));
        assert_eq!(
            serde_json::to_string(&mandated).unwrap(),
            "{\"choice\":\"mandated\",\"value\":\"x\"}"
        );
        assert_eq!(
            serde_json::to_string(&CoordinatorChoice::Free).unwrap(),
            "{\"choice\":\"free\"}"
        );
        assert_eq!(mandated.to_string(), "Mandated(x)");
    }

    #[test]
    fn report_set_deserializes_with_validation() {
        let json = r#"[
            {"acceptor": "a2", "voted_round": 1, "voted_value": "x"},
            {"acceptor": "a1", "voted_round": 0, "voted_value": null},
            {"acceptor": "a3", "voted_round": 0}
        ]"#;
        let parsed: ReportSet = serde_json::from_str(json).unwrap();
        assert_eq!(parsed.len(), 3);
        assert_eq!(parsed.as_slice()[0].acceptor_id().as_str(), "a1");
        let bad = r#"[{"acceptor": "a1", "voted_round": 2, "voted_value": null}]"#;
        assert!(serde_json::from_str::<ReportSet>(bad).is_err());
    }
}
