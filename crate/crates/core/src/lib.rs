// SPDX-License-Identifier: Apache-2.0

//! Proof-of-work mining as a mean-field game against a rational double-spend
//! adversary.

pub mod attack;
pub mod config;
pub mod error;
pub mod montecarlo;
pub mod output;
pub mod rewards;
pub mod run;
pub mod scenarios;
pub mod solver;

pub use error::{Error, Result};
