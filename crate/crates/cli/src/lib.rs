//! Experiment runner behind the `anrat` binary.
//!
//! Each verb writes its artifacts atomically into one output directory and
//! maps failures onto a fixed set of exit codes (see [`Failure`]).

pub mod config;
pub mod fetch;
pub mod run;
pub mod suites;

use std::fmt;

/// Why a command failed; each class has its own exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    /// A verification suite ran and an assertion failed (exit 1).
    Verify(String),
    /// Unreadable or invalid configuration, manifest or flags (exit 2).
    Config(String),
    /// Missing or malformed dataset, or an I/O failure (exit 3).
    Data(String),
    /// Training produced non-finite values (exit 4).
    Divergence(String),
    /// A downloaded file failed its length or digest check (exit 5).
    Digest(String),
    /// A download could not be completed (exit 6).
    Network(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Divergence(_) => 4,
            Failure::Digest(_) => 5,
            Failure::Network(_) => 6,
        }
    }

    /// Classifies an error raised while reading a dataset: anything but a
    /// configuration error is a data error.
    pub fn data(e: anrat::Error) -> Self {
        match e {
            anrat::Error::Config(_) => e.into(),
            e => Failure::Data(e.to_string()),
        }
    }
}

impl From<anrat::Error> for Failure {
    fn from(e: anrat::Error) -> Self {
        use anrat::Error as E;
        let msg = e.to_string();
        match e {
            E::Config(_) | E::Dimension(_) => Failure::Config(msg),
            E::Diverged { .. } | E::AllCellsDiverged { .. } | E::NonFinite(_) | E::SingularGradient { .. } => {
                Failure::Divergence(msg)
            }
            E::Digest { .. } => Failure::Digest(msg),
            E::OracleRange(_) => Failure::Verify(msg),
            _ => Failure::Data(msg),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (class, msg) = match self {
            Failure::Verify(m) => ("verification failed", m),
            Failure::Config(m) => ("configuration error", m),
            Failure::Data(m) => ("data error", m),
            Failure::Divergence(m) => ("divergence", m),
            Failure::Digest(m) => ("digest mismatch", m),
            Failure::Network(m) => ("network error", m),
        };
        write!(f, "{class}: {msg}")
    }
}

impl std::error::Error for Failure {}

pub type Outcome<T = ()> = std::result::Result<T, Failure>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_partition_error_classes() {
        let cases = [
            (anrat::Error::Config("x".into()), 2),
            (anrat::Error::Format("x".into()), 3),
            (anrat::Error::AllCellsDiverged { cells: 9 }, 4),
            (anrat::Error::Digest { file: "f".into(), detail: "d".into() }, 5),
        ];
        for (e, code) in cases {
            assert_eq!(Failure::from(e).exit_code(), code);
        }
        assert_eq!(Failure::data(anrat::Error::Dimension("x".into())).exit_code(), 3);
        assert_eq!(Failure::Network("x".into()).exit_code(), 6);
        assert_eq!(Failure::Verify("x".into()).exit_code(), 1);
    }
}
