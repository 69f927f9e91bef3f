use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The closed five-value action space offered to every driver agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Idle,
    Accelerate,
    Decelerate,
    TurnLeft,
    TurnRight,
}

impl Decision {
    pub const ALL: [Decision; 5] = [
        Decision::Idle,
        Decision::Accelerate,
        Decision::Decelerate,
        Decision::TurnLeft,
        Decision::TurnRight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Idle => "idle",
            Decision::Accelerate => "accelerate",
            Decision::Decelerate => "decelerate",
            Decision::TurnLeft => "turn_left",
            Decision::TurnRight => "turn_right",
        }
    }

    /// Canonical reply line understood by [`parse_decision`].
    pub fn render(self) -> String {
        format!("DECISION: {}", self.as_str())
    }

    pub fn is_lane_change(self) -> bool {
        matches!(self, Decision::TurnLeft | Decision::TurnRight)
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decision {
    type Err = ParseDecisionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = normalize(s.trim());
        Decision::ALL
            .into_iter()
            .find(|d| d.as_str() == norm)
            .ok_or(ParseDecisionError::NoKeyword)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseDecisionError {
    #[error("no decision keyword found")]
    NoKeyword,
    #[error("ambiguous reply, several decisions named: {0:?}")]
    Ambiguous(Vec<Decision>),
}

const MARKER: &str = "decision:";

/// Extract a decision from free-form agent output.
///
/// A `DECISION: <value>` line (any case) wins. Without a usable marker line
/// the whole text must name exactly one distinct decision keyword.
pub fn parse_decision(text: &str) -> Result<Decision, ParseDecisionError> {
    let mut marked = Vec::new();
    for line in text.lines() {
        let lower = line.to_lowercase();
        if let Some(pos) = lower.find(MARKER) {
            let rest = &lower[pos + MARKER.len()..];
            if let Some(d) = first_keyword(rest) {
                marked.push(d);
            }
        }
    }
    marked.sort();
    marked.dedup();
    match marked.len() {
        1 => return Ok(marked[0]),
        n if n > 1 => return Err(ParseDecisionError::Ambiguous(marked)),
        _ => {}
    }

    let mut found = keywords_in(&normalize(&text.to_lowercase()));
    found.sort();
    found.dedup();
    match found.len() {
        0 => Err(ParseDecisionError::NoKeyword),
        1 => Ok(found[0]),
        _ => Err(ParseDecisionError::Ambiguous(found)),
    }
}

/// Fold the spaced and hyphenated spellings of the lane-change keywords.
fn normalize(s: &str) -> String {
    s.to_lowercase()
        .replace("turn left", "turn_left")
        .replace("turn-left", "turn_left")
        .replace("turn right", "turn_right")
        .replace("turn-right", "turn_right")
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn words(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| !is_word_char(c)).filter(|w| !w.is_empty())
}

fn first_keyword(rest: &str) -> Option<Decision> {
    let norm = normalize(rest);
    let word = words(&norm).next()?.to_string();
    Decision::ALL.into_iter().find(|d| d.as_str() == word)
}

fn keywords_in(text: &str) -> Vec<Decision> {
    words(text)
        .filter_map(|w| Decision::ALL.into_iter().find(|d| d.as_str() == w))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn marker_line() {
        assert_eq!(
            parse_decision("I will slow down. DECISION: decelerate"),
            Ok(Decision::Decelerate)
        );
        assert_eq!(parse_decision("DECISION: turn_left"), Ok(Decision::TurnLeft));
    }

    #[test]
    fn marker_is_case_insensitive() {
        assert_eq!(parse_decision("Decision: IDLE"), Ok(Decision::Idle));
        assert_eq!(parse_decision("decision:   Turn Right"), Ok(Decision::TurnRight));
        assert_eq!(parse_decision("**Decision:** `accelerate`"), Ok(Decision::Accelerate));
    }

    #[test]
    fn marker_overrides_prose_keywords() {
        let text = "Accelerating would be unsafe, turn_left is blocked.\nDECISION: decelerate";
        assert_eq!(parse_decision(text), Ok(Decision::Decelerate));
    }

    #[test]
    fn ambiguous_without_marker() {
        assert!(matches!(
            parse_decision("accelerate then turn_left"),
            Err(ParseDecisionError::Ambiguous(_))
        ));
    }

    #[test]
    fn conflicting_markers_are_ambiguous() {
        assert!(matches!(
            parse_decision("DECISION: idle\nDECISION: accelerate"),
            Err(ParseDecisionError::Ambiguous(_))
        ));
    }

    #[test]
    fn single_keyword_without_marker() {
        assert_eq!(parse_decision("I'd rather decelerate here."), Ok(Decision::Decelerate));
        assert_eq!(parse_decision("idle, idle, idle"), Ok(Decision::Idle));
    }

    #[test]
    fn absence_is_an_error() {
        assert_eq!(parse_decision(""), Err(ParseDecisionError::NoKeyword));
        assert_eq!(parse_decision("DECISION: fly"), Err(ParseDecisionError::NoKeyword));
        assert_eq!(parse_decision("idleness"), Err(ParseDecisionError::NoKeyword));
    }

    #[test]
    fn render_round_trips() {
        for d in Decision::ALL {
            assert_eq!(parse_decision(&d.render()), Ok(d));
            assert_eq!(d.as_str().parse::<Decision>(), Ok(d));
        }
    }

    proptest! {
        #[test]
        fn never_panics(text in any::<String>()) {
            let _ = parse_decision(&text);
        }

        #[test]
        fn marker_after_prose_is_lossless(idx in 0usize..5, prose in "[a-z ,.]{0,40}") {
            let d = Decision::ALL[idx];
            let text = format!("{prose}\n{}", d.render());
            prop_assert_eq!(parse_decision(&text), Ok(d));
        }
    }
}
