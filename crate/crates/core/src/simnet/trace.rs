//! Trace capture: every processed event with the acting agent's state
//! digest, durable write, learn event, and outbound messages.
//!
//! Serialized as one JSON document per line: a header, one line per
//! record, and a footer. Byte-identical trace files are the determinism
//! contract, so rendering must stay canonical (sorted keys come from the
//! struct field order; no floats appear in records).

use serde::{Deserialize, Serialize};

use crate::protocol::{DurableSnapshot, Message};
use crate::types::{AgentId, Value};

pub const TRACE_FORMAT_VERSION: u32 = 1;

/// What landed on the agent at this trace position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceEvent {
    /// A message moved by the network.
    Deliver { message: Message },
    /// A scripted message materializing at its target, no transit.
    Inject { message: Message },
    /// Scripted timeout telling a coordinator to start a round; `None`
    /// resolves to the next classic round it owns.
    Timeout { start_round: Option<u64> },
    Crash,
    Recover,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub position: u64,
    pub time: u64,
    pub agent: AgentId,
    #[serde(flatten)]
    pub event: TraceEvent,
    /// FNV-1a over the agent's post-event debug state.
    pub state_digest: String,
    /// True when a crashed agent absorbed the event without processing it.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub absorbed: bool,
    /// True when the record's outbound messages died with a crash firing
    /// at the next position, after the durable write.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub sends_suppressed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub durable: Option<DurableSnapshot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learned: Option<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outbound: Vec<Message>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub scenario: String,
    pub seed: u64,
    pub records: Vec<TraceRecord>,
    pub truncated: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceHeader<'a> {
    line: &'a str,
    format_version: u32,
    scenario: &'a str,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceFooter<'a> {
    line: &'a str,
    records: u64,
    truncated: bool,
}

impl Trace {
    /// Canonical line-delimited rendering; the byte-identity contract is
    /// over exactly these bytes.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let header = TraceHeader {
            line: "header",
            format_version: TRACE_FORMAT_VERSION,
            scenario: &self.scenario,
            seed: self.seed,
        };
        out.push_str(&serde_json::to_string(&header).expect("trace header serializes"));
        out.push('\n');
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("trace record serializes"));
            out.push('\n');
        }
        let footer = TraceFooter {
            line: "footer",
            records: self.records.len() as u64,
            truncated: self.truncated,
        };
        out.push_str(&serde_json::to_string(&footer).expect("trace footer serializes"));
        out.push('\n');
        out
    }

    /// First learn event, as (position, time, learner, value).
    pub fn first_learn(&self) -> Option<(u64, u64, &AgentId, &Value)> {
        self.records.iter().find_map(|r| {
            r.learned
                .as_ref()
                .map(|v| (r.position, r.time, &r.agent, v))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::MessageBody;

    fn record() -> TraceRecord {
        TraceRecord {
            position: 0,
            time: 0,
            agent: AgentId::from("a1"),
            event: TraceEvent::Deliver {
                message: Message {
                    from: AgentId::from("c1"),
                    to: AgentId::from("a1"),
                    body: MessageBody::Phase1a { round: 2 },
                },
            },
            state_digest: "00ff".into(),
            absorbed: false,
            sends_suppressed: false,
            durable: None,
            learned: None,
            outbound: vec![],
        }
    }

    #[test]
    fn record_serialization_elides_empty_fields() {
        let json = serde_json::to_string(&record()).unwrap();
        assert!(json.contains("\"kind\":\"deliver\""));
        assert!(!json.contains("absorbed"));
        assert!(!json.contains("outbound"));
        assert!(!json.contains("durable"));
        let back: TraceRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, record());
    }

    #[test]
    fn jsonl_has_header_records_footer() {
        let trace = Trace {
            scenario: "t".into(),
            seed: 7,
            records: vec![record()],
            truncated: false,
        };
        let text = trace.to_jsonl();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("{\"line\":\"header\""));
        assert!(lines[2].contains("\"truncated\":false"));
    }
}
