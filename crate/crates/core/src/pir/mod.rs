//! The device mini-IR: AST, parser, validation, printing, table entries and CFGs.

pub mod ast;
pub mod cfg;
pub mod entries;
pub mod parser;
pub mod printer;
pub mod validate;

pub use ast::*;
pub use cfg::{build_cfg, Cfg, CfgNode, NodeKind, Section};
pub use entries::{load_table_entries, EntriesError, Entry, EntrySet};
pub use printer::{print_program, stmt_line};
pub use validate::{parse_device_program, validate, PirError};
