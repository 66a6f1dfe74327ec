//! Voxel drilling guidance: exact signed distance fields over segmented
//! anatomy, red/yellow/green resection zones, a deterministic fixed-step
//! drilling engine and the session metrics computed from its removal log.
//!
//! The pipeline runs in three stages:
//!
//! 1. [`volume`] and [`field`] turn a label volume into signed distance
//!    fields to each protected structure.
//! 2. [`plan`] thresholds those fields into a [`plan::ZonePlan`].
//! 3. [`engine`] replays drill poses against the plan, and [`events`] /
//!    [`report`] score the resulting removal log.

pub mod case;
pub mod engine;
mod error;
pub mod events;
pub mod field;
pub mod formats;
pub mod plan;
pub mod report;
pub mod stats;
pub mod synthetic;
pub mod volume;

pub use error::{Error, Result};
