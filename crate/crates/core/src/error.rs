// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("value is not invertible modulo the given modulus")]
    NonInvertible,
    #[error("session error: {0}")]
    Session(String),
    #[error("insufficient shares: have {have}, need {need}")]
    InsufficientShares { have: usize, need: usize },
    #[error("combined signature does not verify; a partial signature is invalid")]
    InvalidPartial,
    #[error("reproduced key share is out of range")]
    CorruptedShare,
    #[error("registration error: {0}")]
    Registration(String),
    #[error("policy error: {0}")]
    Policy(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("nondeterminism detected: {0}")]
    Nondeterminism(String),
    #[error("encoding error: {0}")]
    Encoding(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
