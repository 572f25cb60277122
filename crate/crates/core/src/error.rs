use thiserror::Error;

use crate::protocol::NodeId;
use crate::space::ProfileIndex;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("protocol does not implement rule: leaf {leaf} holds profiles {first} and {second} with different outcomes")]
    NotImplemented {
        leaf: NodeId,
        first: ProfileIndex,
        second: ProfileIndex,
    },

    #[error("profiles are not separated: both reach leaf {0}")]
    NotSeparated(NodeId),

    #[error("unsupported protocol: {0}")]
    Unsupported(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
