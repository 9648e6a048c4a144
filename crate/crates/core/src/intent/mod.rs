//! The intent language: imports, topology, local assertions, global LTL rules and hosts.

pub mod ast;
pub mod parser;
pub mod resolve;
pub mod seeds;

pub use ast::*;
pub use parser::{parse_spec, SpecError};
pub use resolve::{resolve_spec, HostInstr, HostProgram, LoadedImport, LocalAssert, ResolveError, ResolvedSpec};
pub use seeds::extract_seeds;
