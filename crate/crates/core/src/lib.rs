//! Statistical tests of the claim that a late-count ballot turnaround was
//! fair because remote voters, who favoured the winner, were counted last.
//!
//! The crate is organised along the data flow of an analysis:
//!
//! * [`geodata`] loads settlements, places major voting centers and builds
//!   the population-weighted law of voter-to-center distance.
//! * [`ballots`] loads tally rows and summarises half-time and final counts.
//! * [`model`] holds the distance-dependent preference and counting models
//!   together with the closed-form moment conditions.
//! * [`fair_win`] evaluates the well-mixed fair-win probability in log space.
//! * [`inference`] holds the resampling engines, share-vs-distance fits and
//!   the probability estimators built on them.
//! * [`analysis`] orchestrates complete runs and writes reports.

// `!(x > 0.0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod ballots;
mod csvio;
mod error;
pub mod fair_win;
pub mod geodata;
pub mod inference;
pub mod model;
mod numeric;

pub use error::{Error, ErrorClass, Result};
