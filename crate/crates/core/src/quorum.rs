//! Cardinality-based quorum sizing.
//!
//! With `N` acceptors, of which at most `F` may fail during classic rounds
//! and at most `E` during fast rounds, the two conditions
//!
//! ```text
//! N > 2F          N > 2E + F
//! ```
//!
//! make every pair of quorums intersect and make any quorum intersect any
//! two fast quorums. A classic quorum is then any `N - F` acceptors and a
//! fast quorum any `N - E`. Fast rounds demand the stricter bound, so
//! `E <= F` always holds here.
//!
//! For a fixed `N` there is a spectrum of admissible `(E, F)` pairs; the two
//! built-in policies sit at its ends. Maximizing `E` forces `E = F` and
//! `N > 3F`, giving both quorums at least `floor(2N/3) + 1` members.
//! Maximizing `F` gives `F = ceil(N/2) - 1` with `E <= floor(N/4)`, i.e.
//! majority classic quorums and fast quorums of at least `ceil(3N/4)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Whether a round runs the fast path (proposers send vote requests
/// directly) or the classic coordinated path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundType {
    Classic,
    Fast,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuorumError {
    #[error("acceptor count must be at least 1")]
    NoAcceptors,
    #[error("n={n}, e={e}, f={f} violates the quorum conditions (n > 2f, n > 2e + f, e <= f)")]
    InvalidParameters { n: u32, e: u32, f: u32 },
}

/// How to pick the fault bounds `E` and `F` for a given acceptor count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PolicyRepr", into = "PolicyRepr")]
pub enum QuorumPolicy {
    /// `E = F`, maximizing fast-round fault tolerance; requires `N > 3F`.
    MaximizeE,
    /// Largest `F` allowed by `N > 2F`, then the largest `E` that still
    /// satisfies `N > 2E + F`.
    MaximizeF,
    /// Caller-supplied bounds, checked against the quorum conditions.
    Explicit { e: u32, f: u32 },
}

/// Wire form: `"max-e"`, `"max-f"`, or an explicit `{"e": .., "f": ..}`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PolicyRepr {
    Named(String),
    Explicit { e: u32, f: u32 },
}

impl From<QuorumPolicy> for PolicyRepr {
    fn from(policy: QuorumPolicy) -> Self {
        match policy {
            QuorumPolicy::MaximizeE => PolicyRepr::Named("max-e".into()),
            QuorumPolicy::MaximizeF => PolicyRepr::Named("max-f".into()),
            QuorumPolicy::Explicit { e, f } => PolicyRepr::Explicit { e, f },
        }
    }
}

impl TryFrom<PolicyRepr> for QuorumPolicy {
    type Error = String;

    fn try_from(repr: PolicyRepr) -> Result<Self, Self::Error> {
        match repr {
            PolicyRepr::Named(name) => name.parse(),
            PolicyRepr::Explicit { e, f } => Ok(QuorumPolicy::Explicit { e, f }),
        }
    }
}

impl std::str::FromStr for QuorumPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max-e" => Ok(QuorumPolicy::MaximizeE),
            "max-f" => Ok(QuorumPolicy::MaximizeF),
            other => Err(format!(
                "unknown policy {other:?}, expected \"max-e\" or \"max-f\""
            )),
        }
    }
}

/// A validated quorum configuration: acceptor count, fault bounds, and the
/// derived minimum quorum cardinalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuorumConfig {
    n_acceptors: u32,
    max_faults_classic: u32,
    max_faults_fast: u32,
    classic_quorum_size: u32,
    fast_quorum_size: u32,
}

/// True iff `(n, e, f)` satisfies both quorum conditions and `e <= f`.
///
/// Total over all inputs; `n = 0` simply fails `n > 2f`.
pub fn validate_config(n: u32, e: u32, f: u32) -> bool {
    let (n, e, f) = (u64::from(n), u64::from(e), u64::from(f));
    n > 2 * f && n > 2 * e + f && e <= f
}

/// Derive a validated configuration for `n` acceptors under `policy`.
pub fn derive_config(n: u32, policy: QuorumPolicy) -> Result<QuorumConfig, QuorumError> {
    if n == 0 {
        return Err(QuorumError::NoAcceptors);
    }
    let (e, f) = match policy {
        // N > 3F gives F <= ceil(N/3) - 1, floored at 0 for tiny systems.
        QuorumPolicy::MaximizeE => {
            let f = n.div_ceil(3).saturating_sub(1);
            (f, f)
        }
        // N > 2F gives F <= ceil(N/2) - 1; then N > 2E + F gives
        // E <= floor(N/4). The min keeps E <= F locally evident.
        QuorumPolicy::MaximizeF => {
            let f = n.div_ceil(2).saturating_sub(1);
            let e = (n / 4).min(f);
            (e, f)
        }
        QuorumPolicy::Explicit { e, f } => (e, f),
    };
    QuorumConfig::new(n, e, f)
}

impl QuorumConfig {
    /// Build a configuration from explicit bounds, rejecting any triple that
    /// fails [`validate_config`].
    pub fn new(n: u32, e: u32, f: u32) -> Result<Self, QuorumError> {
        if n == 0 {
            return Err(QuorumError::NoAcceptors);
        }
        if !validate_config(n, e, f) {
            return Err(QuorumError::InvalidParameters { n, e, f });
        }
        Ok(Self {
            n_acceptors: n,
            max_faults_classic: f,
            max_faults_fast: e,
            classic_quorum_size: n - f,
            fast_quorum_size: n - e,
        })
    }

    pub fn n_acceptors(&self) -> u32 {
        self.n_acceptors
    }

    /// `F`: tolerated failures in classic rounds.
    pub fn max_faults_classic(&self) -> u32 {
        self.max_faults_classic
    }

    /// `E`: tolerated failures in fast rounds.
    pub fn max_faults_fast(&self) -> u32 {
        self.max_faults_fast
    }

    /// Minimum classic quorum cardinality, `N - F`.
    pub fn classic_quorum_size(&self) -> u32 {
        self.classic_quorum_size
    }

    /// Minimum fast quorum cardinality, `N - E`.
    pub fn fast_quorum_size(&self) -> u32 {
        self.fast_quorum_size
    }

    /// Minimum quorum cardinality for a round of the given type. Any
    /// superset of a minimum quorum is also a quorum.
    pub fn quorum_size(&self, round_type: RoundType) -> u32 {
        match round_type {
            RoundType::Classic => self.classic_quorum_size,
            RoundType::Fast => self.fast_quorum_size,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_examples() {
        assert!(validate_config(5, 1, 2));
        assert!(validate_config(1, 0, 0));
        // 3 > 2*1 + 1 fails.
        assert!(!validate_config(3, 1, 1));
        // e > f is rejected even when both conditions hold numerically.
        assert!(!validate_config(9, 3, 2));
        assert!(!validate_config(0, 0, 0));
    }

    #[test]
    fn derive_maximize_e() {
        let c = derive_config(4, QuorumPolicy::MaximizeE).unwrap();
        assert_eq!(c.max_faults_classic(), 1);
        assert_eq!(c.max_faults_fast(), 1);
        assert_eq!(c.classic_quorum_size(), 3);
        assert_eq!(c.fast_quorum_size(), 3);
    }

    #[test]
    fn derive_maximize_f() {
        let c = derive_config(5, QuorumPolicy::MaximizeF).unwrap();
        assert_eq!(c.max_faults_classic(), 2);
        assert_eq!(c.max_faults_fast(), 1);
        assert_eq!(c.classic_quorum_size(), 3);
        assert_eq!(c.fast_quorum_size(), 4);
    }

    #[test]
    fn derive_degenerate_single_acceptor() {
        let c = derive_config(1, QuorumPolicy::MaximizeF).unwrap();
        assert_eq!(c.max_faults_classic(), 0);
        assert_eq!(c.max_faults_fast(), 0);
        assert_eq!(c.classic_quorum_size(), 1);
        assert_eq!(c.fast_quorum_size(), 1);
    }

    #[test]
    fn derive_rejects_bad_explicit() {
        assert!(derive_config(3, QuorumPolicy::Explicit { e: 1, f: 1 }).is_err());
        assert!(derive_config(0, QuorumPolicy::MaximizeE).is_err());
    }

    #[test]
    fn quorum_size_by_round_type() {
        let c = QuorumConfig::new(5, 1, 2).unwrap();
        assert_eq!(c.quorum_size(RoundType::Classic), 3);
        assert_eq!(c.quorum_size(RoundType::Fast), 4);
        let one = QuorumConfig::new(1, 0, 0).unwrap();
        assert_eq!(one.quorum_size(RoundType::Fast), 1);
    }

    #[test]
    fn policies_match_closed_forms_up_to_64() {
        for n in 1..=64u32 {
            let e_cfg = derive_config(n, QuorumPolicy::MaximizeE).unwrap();
            let f_cfg = derive_config(n, QuorumPolicy::MaximizeF).unwrap();
            assert!(validate_config(n, e_cfg.max_faults_fast(), e_cfg.max_faults_classic()));
            assert!(validate_config(n, f_cfg.max_faults_fast(), f_cfg.max_faults_classic()));
            // MaximizeF never tolerates fewer classic faults than MaximizeE.
            assert!(f_cfg.max_faults_classic() >= e_cfg.max_faults_classic());
            if n >= 3 {
                assert!(e_cfg.classic_quorum_size() >= 2 * n / 3 + 1, "n={n}");
                assert!(e_cfg.fast_quorum_size() >= 2 * n / 3 + 1, "n={n}");
            }
            if n >= 2 {
                assert!(f_cfg.classic_quorum_size() >= n / 2 + 1, "n={n}");
                assert!(f_cfg.fast_quorum_size() >= (3 * n).div_ceil(4), "n={n}");
            }
            assert!(e_cfg.fast_quorum_size() >= e_cfg.classic_quorum_size());
            assert!(f_cfg.fast_quorum_size() >= f_cfg.classic_quorum_size());
        }
    }

    // Small-scope subset enumeration of the two intersection requirements.
    // The acceptance suite repeats this independently for n <= 7.
    #[test]
    fn intersections_nonempty_for_small_n() {
        for n in 1..=5u32 {
            for policy in [QuorumPolicy::MaximizeE, QuorumPolicy::MaximizeF] {
                let cfg = derive_config(n, policy).unwrap();
                let qc = cfg.classic_quorum_size();
                let qf = cfg.fast_quorum_size();
                let subsets: Vec<u32> = (0..(1u32 << n)).collect();
                for &a in &subsets {
                    if a.count_ones() < qc {
                        continue;
                    }
                    for &b in &subsets {
                        if b.count_ones() >= qc {
                            assert!(a & b != 0, "n={n} a={a:b} b={b:b}");
                        }
                        if b.count_ones() < qf {
                            continue;
                        }
                        for &c in &subsets {
                            if c.count_ones() >= qf {
                                assert!(a & b & c != 0, "n={n}");
                            }
                        }
                    }
                }
            }
        }
    }
}
