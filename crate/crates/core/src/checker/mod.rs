//! Explicit-state exploration of the composed system.

pub mod ltl;
pub mod explore;
pub mod model;
pub mod promela;
pub mod trace;

pub use model::{BuildError, EmittedEvent, GlobalState, Label, Property, Step, SystemModel};
pub use explore::{classify_fault, enumerate_runs, explore, Config, Ordering, Outcome, ResourceKind, Stats, Verdict};
pub use trace::{check_trace, replay, state_digest, valuations, RegisterChange, ReplayError, ReplayInfo, Trace, TraceEvent, TraceStep};
pub use promela::{export_promela, structural_check, ExportSummary};
