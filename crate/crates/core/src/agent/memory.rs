//! Decision memory with reflection.
//!
//! Every scored decision is kept. Decisions scoring at or above the
//! threshold are accepted as they are; the rest are accepted only with a
//! reflection note describing what went wrong, and that note travels with the
//! entry into later requests' history.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{Decision, HistoryEntry};

pub const DEFAULT_GOOD_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryStatus {
    AcceptedImmediately,
    AcceptedAfterReflection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub frame: u64,
    pub scene_fingerprint: String,
    pub decision: Decision,
    pub frame_score: f64,
    pub status: MemoryStatus,
    pub reflection_note: Option<String>,
}

/// A scored decision waiting to be stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryCandidate {
    pub frame: u64,
    pub scene_fingerprint: String,
    pub decision: Decision,
    pub frame_score: f64,
    /// Human-readable account of the outcome, used as the reflection note.
    pub outcome: String,
}

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("memory log line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("memory log line {line}: status disagrees with score {score}")]
    Inconsistent { line: usize, score: f64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Short stable hash of a scene description.
pub fn fingerprint(scene_text: &str) -> String {
    let digest = Sha256::digest(scene_text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryStore {
    threshold: f64,
    entries: Vec<MemoryEntry>,
}

impl Default for MemoryStore {
    fn default() -> Self {
        Self::new(DEFAULT_GOOD_THRESHOLD)
    }
}

impl MemoryStore {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            entries: Vec::new(),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Append a scored decision.
    pub fn update(&mut self, candidate: MemoryCandidate) -> &MemoryEntry {
        let good = candidate.frame_score >= self.threshold;
        self.entries.push(MemoryEntry {
            frame: candidate.frame,
            scene_fingerprint: candidate.scene_fingerprint,
            decision: candidate.decision,
            frame_score: candidate.frame_score,
            status: if good {
                MemoryStatus::AcceptedImmediately
            } else {
                MemoryStatus::AcceptedAfterReflection
            },
            reflection_note: (!good).then_some(candidate.outcome),
        });
        self.entries.last().expect("just pushed")
    }

    /// The last `k` entries, oldest first, as request history.
    pub fn history(&self, k: usize) -> Vec<HistoryEntry> {
        let start = self.entries.len().saturating_sub(k);
        self.entries[start..]
            .iter()
            .map(|e| HistoryEntry {
                frame: e.frame,
                decision: e.decision,
                score: e.frame_score,
                note: e.reflection_note.clone(),
            })
            .collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Rebuild a store from its JSONL log.
    pub fn replay<R: BufRead>(input: R, threshold: f64) -> Result<Self, MemoryError> {
        let mut store = Self::new(threshold);
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: MemoryEntry =
                serde_json::from_str(&line).map_err(|source| MemoryError::Parse { line: i + 1, source })?;
            let good = entry.frame_score >= threshold;
            if good != (entry.status == MemoryStatus::AcceptedImmediately) {
                return Err(MemoryError::Inconsistent {
                    line: i + 1,
                    score: entry.frame_score,
                });
            }
            store.entries.push(entry);
        }
        Ok(store)
    }
}
