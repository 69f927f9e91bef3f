//! Driver agents: the decision space, the rule-based baselines, the external
//! agent wire protocol and the decision memory.

mod baseline;
mod decision;
mod memory;
mod protocol;
mod transport;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baseline::{baseline_agent, BaselineParams, RuleAgent};
pub use decision::{parse_decision, Decision, ParseDecisionError};
pub use memory::{fingerprint, MemoryCandidate, DEFAULT_GOOD_THRESHOLD, MemoryEntry, MemoryError, MemoryStatus, MemoryStore};
pub use protocol::{
    request_decision, serve_lines, ExternalAgent, FnTransport, Transport, WireRequest, WireResponse,
    FALLBACK_DECISION, FALLBACK_RATIONALE,
};
pub use transport::StreamTransport;

use crate::perception::{LidarSummary, Observation};
use crate::prompt::ScenePrompt;

/// Most history entries carried by a request.
pub const MAX_HISTORY: usize = 8;

/// One past decision and how it turned out, fed forward to the agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub frame: u64,
    pub decision: Decision,
    pub score: f64,
    /// Present for decisions that scored poorly.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRequest {
    pub frame: u64,
    pub prompt: ScenePrompt,
    pub lidar: Option<LidarSummary>,
    pub history: Vec<HistoryEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackReason {
    Timeout,
    MalformedRecord,
    NoDecision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentResponse {
    pub decision: Decision,
    pub rationale: String,
    pub latency_ms: f64,
    /// Set when the agent's reply was unusable and the fail-safe decision
    /// was substituted.
    pub fallback: Option<FallbackReason>,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("agent transport failed: {0}")]
    Transport(#[from] std::io::Error),
    #[error("bad agent target `{0}`")]
    BadTarget(String),
}

/// Anything that can drive the ego.
pub trait DriverAgent: Send {
    fn decide(&mut self, req: &AgentRequest, obs: &Observation) -> Result<AgentResponse, AgentError>;
}
