//! Deterministic simulator and analysis toolkit for hierarchical private
//! aggregation: clients reach a federator only through base stations, pad
//! their gradients with one-time keys, and distribute packed secret shares
//! so that neither colluding stations nor the federator learn anything
//! beyond the global sum.
//!
//! The crate covers the full loop: exact prime-field arithmetic, packed
//! (ramp) secret sharing, a message-level round simulator with per-link
//! symbol accounting, closed-form communication-cost bounds, an exhaustive
//! mutual-information privacy auditor for tiny instances, and a fixed-point
//! gradient-descent harness that trains through the private round.

pub mod cost;
pub mod field;
pub mod learning;
pub mod privacy;
pub mod protocol;
pub mod sharing;
pub mod topology;
