// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument is outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration field violates its constraint.
    #[error("invalid `{field}`: {constraint}")]
    Validation { field: String, constraint: String },

    /// The configuration document could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// The backward induction produced a NaN or infinite objective.
    #[error("non-finite objective at t={t}, wealth={wealth}")]
    NonFinite { t: usize, wealth: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            constraint: constraint.into(),
        }
    }
}
