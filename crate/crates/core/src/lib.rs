//! Actor-based verification of distributed switch pipeline programs.

pub mod checker;
pub mod intent;
pub mod parallel;
pub mod pir;
pub mod pruner;
pub mod semantics;
pub mod syntax;
pub mod workflow;
