// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

//! Frictionless multi-device authentication.
//!
//! A user's devices jointly answer a service provider's challenge with a
//! threshold Schnorr signature. Key usage is gated by a fused behavioural
//! score, and dumb devices without secure storage regenerate their key share
//! on demand from a noisy sensor template through a code-offset fuzzy
//! commitment.
//!
//! The [`simulator`] drives the whole protocol deterministically for genuine
//! and adversarial scenarios.

pub mod algebra;
pub mod authscore;
pub mod encoding;
pub mod error;
pub mod exec;
pub mod fuzzy_extractor;
pub mod kat;
pub mod protocol;
pub mod sharing;
pub mod simulator;
pub mod thresholdsig;

pub use error::{Error, Result};
