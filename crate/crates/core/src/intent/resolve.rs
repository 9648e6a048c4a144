//! Binding a parsed specification to the imported device programs.

use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use crate::pir::validate::resolve_var;
use crate::pir::{DeviceProgram, EntrySet, Stmt};
use crate::semantics::Link;
use crate::syntax::{Expr, RawPath, VarRef};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResolveError {
    #[error("unknown alias `{0}`")]
    UnknownAlias(String),
    #[error("`{alias}` has no `{symbol}`")]
    Unresolved { alias: String, symbol: String },
    #[error("register index {index} out of bounds for `{alias}.{reg}` of size {size}")]
    IndexOutOfBounds { alias: String, reg: String, index: u64, size: u64 },
    #[error("{0}")]
    Invalid(String),
}

type R<T> = Result<T, ResolveError>;

/// A device program together with its alias and entries, as loaded from disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedImport {
    pub alias: String,
    pub program: DeviceProgram,
    pub entries: EntrySet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalAssert {
    pub device: usize,
    pub id: usize,
    /// Resolved in the device's own scope.
    pub cond: Expr,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HostInstr {
    Send { target: usize, fields: Vec<FieldInit> },
    Choice(Vec<usize>),
    Jump(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostProgram {
    pub name: String,
    pub code: Vec<HostInstr>,
}

impl HostProgram {
    /// Follow jumps; the result is a send, a choice, or the end.
    pub fn normalize(&self, mut pc: usize) -> usize {
        while let Some(HostInstr::Jump(t)) = self.code.get(pc) {
            pc = *t;
        }
        pc
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedSpec {
    pub aliases: Vec<String>,
    /// Programs with local assertions injected.
    pub programs: Vec<DeviceProgram>,
    pub entries: Vec<EntrySet>,
    pub links: Vec<Link>,
    /// Atoms use `VarRef::At` with `Reg`, `Field`, `Meta` or `EgressPort` inside.
    pub globals: Vec<GlobalRule>,
    pub asserts: Vec<LocalAssert>,
    pub hosts: Vec<HostProgram>,
}

impl ResolvedSpec {
    pub fn alias_index(&self, a: &str) -> Option<usize> {
        self.aliases.iter().position(|x| x == a)
    }

    /// Device-local state symbols mentioned by properties, per device.
    pub fn property_refs(&self) -> Vec<BTreeSet<VarRef>> {
        let mut out = vec![BTreeSet::new(); self.aliases.len()];
        for g in &self.globals {
            for a in g.formula.atoms() {
                for v in a.vars() {
                    if let VarRef::At { actor, var } = v {
                        let i = self.alias_index(actor).expect("resolved alias");
                        out[i].insert((**var).clone());
                    }
                }
            }
        }
        for a in &self.asserts {
            for v in a.cond.vars() {
                out[a.device].insert(v.clone());
            }
        }
        out
    }

    pub fn property_names(&self) -> Vec<String> {
        self.globals.iter().map(|g| g.name.clone()).chain(self.asserts.iter().map(|a| a.name.clone())).collect()
    }
}

fn device_var(prog: &DeviceProgram, alias: &str, v: &VarRef) -> R<VarRef> {
    let VarRef::Raw(RawPath { segs, index, call }) = v else { return Ok(v.clone()) };
    let unresolved = || ResolveError::Unresolved { alias: alias.into(), symbol: v.to_string() };
    if segs.len() == 1 && !call {
        if let Some(r) = prog.register(&segs[0]) {
            let idx = match index {
                Some(e) => e.as_const().ok_or_else(|| ResolveError::Invalid(format!("register index in `{alias}.{v}` must be a constant")))?,
                None if r.size == 1 => 0,
                None => return Err(ResolveError::Invalid(format!("`{alias}.{}` needs an index", r.name))),
            };
            if idx >= r.size {
                return Err(ResolveError::IndexOutOfBounds { alias: alias.into(), reg: r.name.clone(), index: idx, size: r.size });
            }
            return Ok(VarRef::Reg { name: r.name.clone(), index: idx });
        }
    }
    resolve_var(prog, &[], v).map_err(|_| unresolved())
}

/// Resolve an expression in device scope, inlining earlier lets.
fn local_expr(prog: &DeviceProgram, alias: &str, lets: &HashMap<String, Expr>, e: &Expr) -> R<Expr> {
    e.try_map_vars(&mut |v| {
        if let VarRef::Raw(RawPath { segs, index: None, call: false }) = v {
            if segs.len() == 1 {
                if let Some(l) = lets.get(&segs[0]) {
                    return Ok(l.clone());
                }
            }
        }
        device_var(prog, alias, v).map(Expr::Var)
    })
}

fn scoped(alias: &str, e: &Expr) -> Expr {
    e.try_map_vars::<()>(&mut |v| Ok(Expr::Var(VarRef::At { actor: alias.into(), var: Box::new(v.clone()) }))).unwrap()
}

fn compile_host(steps: &[HostStep], aliases: &[String], code: &mut Vec<HostInstr>) -> R<()> {
    for s in steps {
        match s {
            HostStep::Send { target, fields } => {
                let t = aliases.iter().position(|a| a == target).ok_or_else(|| ResolveError::UnknownAlias(target.clone()))?;
                code.push(HostInstr::Send { target: t, fields: fields.clone() });
            }
            HostStep::Repeat(n, body) => {
                if *n > 1024 {
                    return Err(ResolveError::Invalid(format!("repeat count {n} exceeds 1024")));
                }
                for _ in 0..*n {
                    compile_host(body, aliases, code)?;
                }
            }
            HostStep::Choice(alts) => {
                let at = code.len();
                code.push(HostInstr::Choice(vec![]));
                let mut starts = Vec::new();
                let mut jumps = Vec::new();
                for alt in alts {
                    starts.push(code.len());
                    compile_host(alt, aliases, code)?;
                    jumps.push(code.len());
                    code.push(HostInstr::Jump(0));
                }
                let end = code.len();
                for j in jumps {
                    code[j] = HostInstr::Jump(end);
                }
                code[at] = HostInstr::Choice(starts);
            }
        }
    }
    Ok(())
}

pub fn resolve_spec(spec: &Spec, loaded: Vec<LoadedImport>) -> R<ResolvedSpec> {
    let aliases: Vec<String> = spec.imports.iter().map(|i| i.alias.clone()).collect();
    let mut by_alias: HashMap<String, LoadedImport> = loaded.into_iter().map(|l| (l.alias.clone(), l)).collect();
    let mut programs = Vec::new();
    let mut entries = Vec::new();
    for a in &aliases {
        let l = by_alias.remove(a).ok_or_else(|| ResolveError::Invalid(format!("no program loaded for `{a}`")))?;
        programs.push(l.program);
        entries.push(l.entries);
    }
    let index = |a: &str| aliases.iter().position(|x| x == a).ok_or_else(|| ResolveError::UnknownAlias(a.into()));

    let mut links = Vec::new();
    for l in &spec.links {
        let link = Link { from: index(&l.from)?, port: l.port, to: index(&l.to)?, loss: l.loss };
        if links.iter().any(|x: &Link| x.from == link.from && x.port == link.port) {
            let port = l.port.map(|p| p.to_string()).unwrap_or_else(|| "ALL".into());
            return Err(ResolveError::Invalid(format!("two links leave `{}` on port {port}", l.from)));
        }
        links.push(link);
    }

    let mut lets: Vec<HashMap<String, Expr>> = vec![HashMap::new(); aliases.len()];
    let mut asserts = Vec::new();
    for b in &spec.locals {
        let d = index(&b.device)?;
        for (id, e) in &b.lets {
            if lets[d].contains_key(id) {
                return Err(ResolveError::Invalid(format!("duplicate let `{id}` for `{}`", b.device)));
            }
            let r = local_expr(&programs[d], &b.device, &lets[d], e)?;
            lets[d].insert(id.clone(), r);
        }
        for e in &b.asserts {
            let cond = local_expr(&programs[d], &b.device, &lets[d], e)?;
            let id = asserts.iter().filter(|a: &&LocalAssert| a.device == d).count();
            asserts.push(LocalAssert { device: d, id, cond, name: format!("local:{}:{id}", b.device) });
        }
    }
    for a in &asserts {
        programs[a.device].egress.push(Stmt::AssertLocal { id: a.id, cond: a.cond.clone() });
    }

    let mut globals = Vec::new();
    for g in &spec.globals {
        if globals.iter().any(|x: &GlobalRule| x.name == g.name) {
            return Err(ResolveError::Invalid(format!("duplicate rule `{}`", g.name)));
        }
        let formula = g.formula.try_map_atoms(&mut |e| {
            e.try_map_vars(&mut |v| {
                let VarRef::Raw(RawPath { segs, index: idx, call }) = v else { return Ok(Expr::Var(v.clone())) };
                let alias = &segs[0];
                let d = aliases.iter().position(|x| x == alias).ok_or_else(|| {
                    if segs.len() == 1 {
                        ResolveError::Invalid(format!("`{alias}` must be qualified with a device alias"))
                    } else {
                        ResolveError::UnknownAlias(alias.clone())
                    }
                })?;
                let rest = RawPath { segs: segs[1..].to_vec(), index: idx.clone(), call: *call };
                if rest.segs.is_empty() {
                    return Err(ResolveError::Unresolved { alias: alias.clone(), symbol: String::new() });
                }
                if rest.segs.len() == 1 && rest.index.is_none() && !rest.call {
                    if let Some(l) = lets[d].get(&rest.segs[0]) {
                        return Ok(scoped(alias, l));
                    }
                }
                let inner = device_var(&programs[d], alias, &VarRef::Raw(rest))?;
                if matches!(inner, VarRef::Valid(_)) {
                    return Err(ResolveError::Invalid(format!("`{v}`: header validity is not observable in global rules")));
                }
                Ok(Expr::Var(VarRef::At { actor: alias.clone(), var: Box::new(inner) }))
            })
        })?;
        globals.push(GlobalRule { name: g.name.clone(), formula });
    }

    let mut hosts = Vec::new();
    for h in &spec.hosts {
        if hosts.iter().any(|x: &HostProgram| x.name == h.name) || aliases.contains(&h.name) {
            return Err(ResolveError::Invalid(format!("duplicate name `{}` for host", h.name)));
        }
        check_literals(&h.steps, &programs)?;
        let mut code = Vec::new();
        compile_host(&h.steps, &aliases, &mut code)?;
        hosts.push(HostProgram { name: h.name.clone(), code });
    }

    Ok(ResolvedSpec { aliases, programs, entries, links, globals, asserts, hosts })
}

fn check_literals(steps: &[HostStep], programs: &[DeviceProgram]) -> R<()> {
    for s in steps {
        match s {
            HostStep::Send { fields, .. } => {
                for f in fields {
                    let w = programs
                        .iter()
                        .find_map(|p| p.field_width(&f.header, &f.field))
                        .ok_or_else(|| ResolveError::Invalid(format!("packet literal field `{}.{}` is not declared by any device", f.header, f.field)))?;
                    if w < 64 && f.value >> w != 0 {
                        return Err(ResolveError::Invalid(format!("value {} does not fit `{}.{}` of bit<{w}>", f.value, f.header, f.field)));
                    }
                }
            }
            HostStep::Choice(alts) => {
                for a in alts {
                    check_literals(a, programs)?;
                }
            }
            HostStep::Repeat(_, b) => check_literals(b, programs)?,
        }
    }
    Ok(())
}
