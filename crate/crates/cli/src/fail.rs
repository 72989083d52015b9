//! Exit-code classification: 1 for computation errors, 2 for usage and I/O.

use std::fmt;

#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Compute(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Compute(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(e) | Failure::Compute(e) => write!(f, "{e:#}"),
        }
    }
}

pub fn usage(msg: impl fmt::Display) -> Failure {
    Failure::Usage(anyhow::anyhow!("{msg}"))
}

impl From<randep::Error> for Failure {
    fn from(e: randep::Error) -> Self {
        use randep::Error as E;
        match e {
            E::Io(_) | E::InvalidArgument(_) | E::Serde(_) => Failure::Usage(e.into()),
            other => Failure::Compute(other.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Compute(e.into())
    }
}

pub type CmdResult = Result<String, Failure>;
