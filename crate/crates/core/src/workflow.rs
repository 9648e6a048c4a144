//! End-to-end pipeline: load a specification and its programs from disk, slice, build,
//! explore.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::checker::{explore, BuildError, Config, SystemModel, Trace, Verdict};
use crate::intent::{parse_spec, resolve_spec, LoadedImport, ResolveError, ResolvedSpec, SpecError};
use crate::pir::{load_table_entries, parse_device_program, DeviceProgram, EntriesError, EntrySet, PirError};
use crate::pruner::{slice_system, SliceOptions, SliceReport};
use crate::semantics::{Bounds, LayoutError};

#[derive(Debug, thiserror::Error)]
pub enum WorkflowError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Spec { path: PathBuf, source: SpecError },
    #[error("{}: {source}", path.display())]
    Program { path: PathBuf, source: PirError },
    #[error("{}: {source}", path.display())]
    Entries { path: PathBuf, source: EntriesError },
    #[error("{0}")]
    Resolve(#[from] ResolveError),
    #[error("{0}")]
    Layout(#[from] LayoutError),
    #[error("{0}")]
    Build(#[from] BuildError),
}

fn read(path: &Path) -> Result<String, WorkflowError> {
    std::fs::read_to_string(path).map_err(|source| WorkflowError::Io { path: path.to_path_buf(), source })
}

/// Parse a specification and every program and entries file it imports. Relative import
/// paths are taken from the specification's directory.
pub fn load_system(spec_path: &Path) -> Result<ResolvedSpec, WorkflowError> {
    let text = read(spec_path)?;
    let spec = parse_spec(&text).map_err(|source| WorkflowError::Spec { path: spec_path.to_path_buf(), source })?;
    let base = spec_path.parent().unwrap_or(Path::new("."));
    let mut programs: HashMap<PathBuf, DeviceProgram> = HashMap::new();
    let mut loaded = Vec::new();
    for imp in &spec.imports {
        let ppath = base.join(&imp.program);
        let program = match programs.get(&ppath) {
            Some(p) => p.clone(),
            None => {
                let p = parse_device_program(&read(&ppath)?).map_err(|source| WorkflowError::Program { path: ppath.clone(), source })?;
                programs.insert(ppath.clone(), p.clone());
                p
            }
        };
        let entries = match &imp.entries {
            Some(e) => {
                let epath = base.join(e);
                load_table_entries(&read(&epath)?, &program).map_err(|source| WorkflowError::Entries { path: epath, source })?
            }
            None => EntrySet::default(),
        };
        loaded.push(LoadedImport { alias: imp.alias.clone(), program, entries });
    }
    Ok(resolve_spec(&spec, loaded)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub slice: bool,
    pub slicing: SliceOptions,
    pub bounds: Bounds,
    pub explore: Config,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { slice: true, slicing: SliceOptions::default(), bounds: Bounds::default(), explore: Config::default() }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyResult {
    pub verdict: Verdict,
    pub trace: Trace,
    pub report: Option<SliceReport>,
    pub model: SystemModel,
}

/// The system that will be explored: sliced unless disabled.
pub fn prepare(rs: &ResolvedSpec, opts: &VerifyOptions) -> Result<(SystemModel, Option<SliceReport>), WorkflowError> {
    let (rs, report) = if opts.slice {
        let s = slice_system(rs, opts.slicing)?;
        (s.spec, Some(s.report))
    } else {
        (rs.clone(), None)
    };
    Ok((SystemModel::build(&rs, opts.bounds)?, report))
}

pub fn verify(rs: &ResolvedSpec, opts: &VerifyOptions) -> Result<VerifyResult, WorkflowError> {
    let (mut model, report) = prepare(rs, opts)?;
    let verdict = explore(&mut model, opts.explore);
    let trace = Trace::from_verdict(&model, &verdict);
    Ok(VerifyResult { verdict, trace, report, model })
}

pub fn verify_file(spec_path: &Path, opts: &VerifyOptions) -> Result<VerifyResult, WorkflowError> {
    verify(&load_system(spec_path)?, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn scratch(tag: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("pipecheck-workflow-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    }

    const PROG: &str = "device d { header h { v: bit<8>; } register seen[1]: bit<8>;
        table t { key = hdr.h.v; action store(x: bit<8>) { seen.write(0, x); } action none() { } default = none(); }
        parser { start: extract(h); accept; } deparser { emit(h); } ingress { t.apply(); } }";

    #[test]
    fn loads_relative_imports_and_entries() {
        let d = scratch("ok");
        write(&d, "d.pir", PROG);
        write(&d, "d.entries", "t : 1 -> store(9)\n");
        let spec = write(
            &d,
            "s.spec",
            "import a from \"d.pir\" entries \"d.entries\"; host h { send a { h.v = 1 }; } global { ltl p { [] { a.seen[0] != 9 } }; }",
        );
        let r = verify_file(&spec, &VerifyOptions::default()).unwrap();
        assert_eq!(r.verdict.outcome.subject(), Some("p"));
        assert!(r.report.is_some());
        let r = verify_file(&spec, &VerifyOptions { slice: false, ..Default::default() }).unwrap();
        assert_eq!(r.verdict.outcome.subject(), Some("p"));
        assert!(r.report.is_none());
    }

    #[test]
    fn missing_files_name_their_path() {
        let d = scratch("missing");
        write(&d, "d.pir", PROG);
        let spec = write(&d, "s.spec", "import a from \"d.pir\" entries \"nope.entries\";");
        let e = load_system(&spec).unwrap_err();
        assert!(e.to_string().contains("nope.entries"), "{e}");
        let e = load_system(&d.join("absent.spec")).unwrap_err();
        assert!(e.to_string().contains("absent.spec"));
    }

    #[test]
    fn parse_errors_are_located() {
        let d = scratch("bad");
        let spec = write(&d, "s.spec", "import a from;");
        let e = load_system(&spec).unwrap_err().to_string();
        assert!(e.contains("s.spec") && e.contains("1:"), "{e}");
    }
}
