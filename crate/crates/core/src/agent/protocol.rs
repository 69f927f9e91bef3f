//! Line-delimited JSON protocol to external agents.
//!
//! One `decision_request` record out, one `decision` record back, in order.
//! Anything the agent sends that cannot be turned into a decision, including
//! silence past the timeout, becomes the fail-safe `decelerate`.

use std::io::{self, BufRead, Write};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::{
    parse_decision, AgentError, AgentRequest, AgentResponse, Decision, DriverAgent, FallbackReason,
    HistoryEntry,
};
use crate::perception::{LidarSummary, Observation};

pub const FALLBACK_DECISION: Decision = Decision::Decelerate;
pub const FALLBACK_RATIONALE: &str = "fallback";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    #[serde(rename = "type")]
    pub kind: String,
    pub frame: u64,
    pub system: String,
    pub scene: String,
    pub task: String,
    pub lidar: Option<LidarSummary>,
    pub history: Vec<HistoryEntry>,
}

impl WireRequest {
    pub const KIND: &'static str = "decision_request";

    pub fn from_request(req: &AgentRequest) -> Self {
        Self {
            kind: Self::KIND.to_string(),
            frame: req.frame,
            system: req.prompt.system_text.clone(),
            scene: req.prompt.scene_text.clone(),
            task: req.prompt.task_text.clone(),
            lidar: req.lidar.clone(),
            history: req.history.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    #[serde(rename = "type")]
    pub kind: String,
    pub text: String,
}

impl WireResponse {
    pub const KIND: &'static str = "decision";

    pub fn new(text: impl Into<String>) -> Self {
        Self {
            kind: Self::KIND.to_string(),
            text: text.into(),
        }
    }
}

/// A bidirectional line channel to an agent.
pub trait Transport: Send {
    fn send_line(&mut self, line: &str) -> io::Result<()>;
    /// Next line from the agent; `Ok(None)` on timeout.
    fn recv_line(&mut self, timeout: Duration) -> io::Result<Option<String>>;
    /// Drop replies that arrived after an earlier request timed out.
    fn discard_pending(&mut self) {}
    /// Re-establish the channel after a transport failure.
    fn reconnect(&mut self) -> io::Result<()> {
        Err(io::Error::new(io::ErrorKind::Unsupported, "transport cannot reconnect"))
    }
}

fn fallback(reason: FallbackReason, started: Instant, detail: &str) -> AgentResponse {
    warn!(?reason, detail, "agent reply unusable, falling back to {}", FALLBACK_DECISION);
    AgentResponse {
        decision: FALLBACK_DECISION,
        rationale: FALLBACK_RATIONALE.to_string(),
        latency_ms: started.elapsed().as_secs_f64() * 1e3,
        fallback: Some(reason),
    }
}

/// Send one request and wait for one reply.
///
/// Only transport failures are errors; timeouts and unusable replies yield
/// the fallback response.
pub fn request_decision(
    endpoint: &mut dyn Transport,
    req: &AgentRequest,
    timeout: Duration,
) -> Result<AgentResponse, AgentError> {
    endpoint.discard_pending();
    let line = serde_json::to_string(&WireRequest::from_request(req))
        .expect("request records always serialize");
    let started = Instant::now();
    endpoint.send_line(&line)?;
    let Some(reply) = endpoint.recv_line(timeout)? else {
        return Ok(fallback(FallbackReason::Timeout, started, "no reply before timeout"));
    };
    let record = match serde_json::from_str::<WireResponse>(reply.trim()) {
        Ok(r) if r.kind == WireResponse::KIND => r,
        Ok(r) => {
            return Ok(fallback(FallbackReason::MalformedRecord, started, &format!("record type `{}`", r.kind)))
        }
        Err(e) => return Ok(fallback(FallbackReason::MalformedRecord, started, &e.to_string())),
    };
    match parse_decision(&record.text) {
        Ok(decision) => Ok(AgentResponse {
            decision,
            rationale: record.text,
            latency_ms: started.elapsed().as_secs_f64() * 1e3,
            fallback: None,
        }),
        Err(e) => Ok(fallback(FallbackReason::NoDecision, started, &e.to_string())),
    }
}

/// Driver agent behind a [`Transport`], retrying transport failures by
/// reconnecting up to `retries` times per request.
pub struct ExternalAgent {
    transport: Box<dyn Transport>,
    timeout: Duration,
    retries: u32,
}

impl ExternalAgent {
    pub fn new(transport: Box<dyn Transport>, timeout: Duration, retries: u32) -> Self {
        Self {
            transport,
            timeout,
            retries,
        }
    }
}

impl DriverAgent for ExternalAgent {
    fn decide(&mut self, req: &AgentRequest, _obs: &Observation) -> Result<AgentResponse, AgentError> {
        let mut attempt = 0;
        loop {
            match request_decision(self.transport.as_mut(), req, self.timeout) {
                Err(AgentError::Transport(e)) if attempt < self.retries => {
                    attempt += 1;
                    warn!(error = %e, attempt, "agent transport failed, reconnecting");
                    if let Err(e) = self.transport.reconnect() {
                        warn!(error = %e, "reconnect failed");
                    }
                }
                other => return other,
            }
        }
    }
}

/// In-process transport whose replies come from a closure, mostly for tests
/// and fuzzing. Returning `None` simulates a reply that never arrives.
pub struct FnTransport<F> {
    reply: F,
    pending: Option<Option<String>>,
}

impl<F> FnTransport<F>
where
    F: FnMut(&str) -> Option<String> + Send,
{
    pub fn new(reply: F) -> Self {
        Self { reply, pending: None }
    }
}

impl<F> Transport for FnTransport<F>
where
    F: FnMut(&str) -> Option<String> + Send,
{
    fn send_line(&mut self, line: &str) -> io::Result<()> {
        self.pending = Some((self.reply)(line));
        Ok(())
    }

    fn recv_line(&mut self, _timeout: Duration) -> io::Result<Option<String>> {
        Ok(self.pending.take().flatten())
    }
}

/// Serve the agent side of the protocol: read requests from `input`, answer
/// each with `reply(request)`. Lines that are not requests get no answer.
/// Returns the number of requests served once `input` is exhausted.
pub fn serve_lines<R, W, F>(input: R, mut output: W, mut reply: F) -> io::Result<u64>
where
    R: BufRead,
    W: Write,
    F: FnMut(&WireRequest) -> String,
{
    let mut served = 0;
    for line in input.lines() {
        let line = line?;
        let Ok(req) = serde_json::from_str::<WireRequest>(&line) else {
            continue;
        };
        if req.kind != WireRequest::KIND {
            continue;
        }
        let resp = WireResponse::new(reply(&req));
        writeln!(output, "{}", serde_json::to_string(&resp).expect("response serializes"))?;
        output.flush()?;
        served += 1;
    }
    Ok(served)
}
