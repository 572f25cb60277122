//! Verification and synthesis of contextually private query protocols for
//! choice rules over finite type spaces.
//!
//! A choice rule maps every type profile to an outcome. A protocol is a tree
//! of queries whose node labels are the profile sets still consistent with
//! the answers so far. A protocol is contextually private for a rule when it
//! never separates two profiles that differ in one agent's type and yield the
//! same outcome.

pub mod error;
pub mod mechanisms;
pub mod privacy;
pub mod protocol;
pub mod random;
pub mod rule;
pub mod search;
pub mod space;
pub mod tatonnement;

mod disjoint;

pub use error::{Error, Result};
pub use protocol::{NodeId, Protocol, Query, TreeSpec};
pub use rule::{ChoiceRule, OutcomeId};
pub use space::{ProductSet, ProfileIndex, ProfileSet, TypeSpace};
