//! Closed-loop evaluation of driving agents on a multilane highway under
//! configurable weather, with camera and LiDAR perception degraded by fog,
//! rain and darkness.
//!
//! The pipeline per decision: [`traffic`] advances the world, [`perception`]
//! turns it into an [`perception::Observation`], [`prompt`] renders that as
//! text, an [`agent::DriverAgent`] picks a [`agent::Decision`], and
//! [`scoring`] grades the resulting trajectory. [`harness`] wires the loop,
//! writes logs and reports, and runs batches.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod harness;
pub mod parallel;
pub mod perception;
pub mod prompt;
pub mod rng;
pub mod road;
pub mod scoring;
pub mod traffic;
pub mod weather;
