//! Property-directed backward slicing of device programs.

pub mod defuse;
pub mod graphs;
pub mod rd;
pub mod slice;
pub mod system;

pub use defuse::{node_info, NodeInfo, Sym, SymbolClasses};
pub use graphs::{backward_prune, build_cdg, build_ddg, Cdg, Ddg, DdgEdge, EdgeTag};
pub use rd::{reaching_defs, RdState};
pub use slice::{apply_slice, filter_entries, synchronize_fields, Sliced};
pub use system::{slice_system, CrossEdge, DeviceReport, SliceOptions, SliceReport, SystemSlice};
