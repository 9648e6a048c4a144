//! Rewriting a device program down to its kept statements.

use std::collections::BTreeSet;

use super::defuse::Sym;
use crate::pir::{Cfg, DeviceProgram, Emit, EntrySet, FieldDecl, HeaderDecl, Root, Stmt, StmtPath};
use crate::semantics::{Layout, LayoutError};
use crate::syntax::{Expr, VarRef};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sliced {
    pub program: DeviceProgram,
    pub removed_statements: usize,
    pub removed_registers: Vec<String>,
    pub removed_metadata: Vec<String>,
    pub removed_fields: Vec<String>,
}

fn filter_block(block: &[Stmt], root: Root, prefix: &[usize], kept: &BTreeSet<StmtPath>) -> Vec<Stmt> {
    let mut out = Vec::new();
    for (i, s) in block.iter().enumerate() {
        let mut steps = prefix.to_vec();
        steps.push(i);
        let here = StmtPath { root, steps: steps.clone() };
        match s {
            Stmt::If(c, a, b) => {
                let mut t = steps.clone();
                t.push(0);
                let a = filter_block(a, root, &t, kept);
                let mut e = steps;
                e.push(1);
                let b = filter_block(b, root, &e, kept);
                if kept.contains(&here) {
                    out.push(Stmt::If(c.clone(), a, b));
                } else {
                    out.extend(a);
                    out.extend(b);
                }
            }
            _ if kept.contains(&here) => out.push(s.clone()),
            _ => {}
        }
    }
    out
}

pub(crate) fn program_syms(p: &DeviceProgram) -> BTreeSet<Sym> {
    let mut out = BTreeSet::new();
    let var = |v: &VarRef, out: &mut BTreeSet<Sym>| {
        if let Some(s) = Sym::of_var(v, None) {
            out.insert(s);
        }
    };
    let expr = |e: &Expr, out: &mut BTreeSet<Sym>| e.for_each_var(&mut |v| var(v, out));
    let mut stmts: Vec<&Stmt> = Vec::new();
    Stmt::walk(&p.ingress, &mut |s| stmts.push(s));
    Stmt::walk(&p.egress, &mut |s| stmts.push(s));
    for t in &p.tables {
        expr(&t.key, &mut out);
        for a in &t.actions {
            Stmt::walk(&a.body, &mut |s| stmts.push(s));
        }
    }
    for s in stmts {
        match s {
            Stmt::Assign(lv, e) => {
                expr(&Expr::Var(lv.clone()), &mut out);
                expr(e, &mut out);
            }
            Stmt::If(c, ..) => expr(c, &mut out),
            Stmt::RegRead { dest, reg, index } => {
                expr(&Expr::Var(dest.clone()), &mut out);
                out.insert(Sym::Register(reg.clone()));
                expr(index, &mut out);
            }
            Stmt::RegWrite { reg, index, value } => {
                out.insert(Sym::Register(reg.clone()));
                expr(index, &mut out);
                expr(value, &mut out);
            }
            Stmt::SetEgressPort(e) | Stmt::AssertLocal { cond: e, .. } => expr(e, &mut out),
            Stmt::Apply(_) | Stmt::MarkDrop | Stmt::Clone(_) | Stmt::Recirculate => {}
        }
    }
    let parsers = [Some(&p.parser), p.egress_parser.as_ref()];
    for m in parsers.into_iter().flatten() {
        for v in m.select_vars() {
            var(v, &mut out);
        }
        for st in &m.states {
            for h in &st.extracts {
                out.insert(Sym::Valid(h.clone()));
            }
        }
    }
    fn emits(es: &[Emit], out: &mut BTreeSet<Sym>) {
        for e in es {
            match e {
                Emit::Emit(h) => {
                    out.insert(Sym::Valid(h.clone()));
                }
                Emit::If(c, body) => {
                    c.for_each_var(&mut |v| out.extend(Sym::of_var(v, None)));
                    emits(body, out);
                }
            }
        }
    }
    for d in [Some(&p.deparser), p.egress_deparser.as_ref()].into_iter().flatten() {
        emits(&d.emits, &mut out);
    }
    out
}

fn applied_tables(p: &DeviceProgram) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for b in [&p.ingress, &p.egress] {
        Stmt::walk(b, &mut |s| {
            if let Stmt::Apply(t) = s {
                out.insert(t.clone());
            }
        });
    }
    out
}

/// Delete statements whose CFG nodes are outside `keep`, then drop declarations that
/// nothing references any more. `pinned` symbols keep their declarations.
pub fn apply_slice(prog: &DeviceProgram, cfg: &Cfg, keep: &BTreeSet<usize>, pinned: &BTreeSet<Sym>) -> Sliced {
    let kept: BTreeSet<StmtPath> = keep.iter().filter_map(|&n| cfg.nodes[n].origin.clone()).collect();
    let mut p = prog.clone();
    p.ingress = filter_block(&prog.ingress, Root::Ingress, &[], &kept);
    p.egress = filter_block(&prog.egress, Root::Egress, &[], &kept);
    let applied = applied_tables(&p);
    let mut tables = Vec::new();
    for (ti, t) in prog.tables.iter().enumerate() {
        if !applied.contains(&t.name) {
            continue;
        }
        let mut t = t.clone();
        for (ai, a) in t.actions.iter_mut().enumerate() {
            a.body = filter_block(&a.body, Root::Action { table: ti, action: ai }, &[], &kept);
        }
        tables.push(t);
    }
    p.tables = tables;

    let count = |q: &DeviceProgram| {
        Stmt::count(&q.ingress) + Stmt::count(&q.egress) + q.tables.iter().flat_map(|t| &t.actions).map(|a| Stmt::count(&a.body)).sum::<usize>()
    };
    let removed_statements = count(prog) - count(&p);

    // Only declarations whose last reference was sliced away disappear.
    let before = program_syms(prog);
    let used: BTreeSet<Sym> = program_syms(&p).into_iter().chain(pinned.iter().cloned()).collect();
    let live = |s: Sym| used.contains(&s) || !before.contains(&s);
    let (regs, gone): (Vec<_>, Vec<_>) = p.registers.into_iter().partition(|r| live(Sym::Register(r.name.clone())));
    p.registers = regs;
    let removed_registers = gone.into_iter().map(|r| r.name).collect();
    let (meta, gone): (Vec<_>, Vec<_>) = p.metadata.into_iter().partition(|m| live(Sym::Meta(m.name.clone())));
    p.metadata = meta;
    let removed_metadata = gone.into_iter().map(|m| m.name).collect();
    let mut removed_fields = Vec::new();
    let mut headers = Vec::new();
    for h in p.headers {
        let fields: Vec<FieldDecl> = h
            .fields
            .iter()
            .filter(|f| {
                let keep = live(Sym::Field(h.name.clone(), f.name.clone()));
                if !keep {
                    removed_fields.push(format!("{}.{}", h.name, f.name));
                }
                keep
            })
            .cloned()
            .collect();
        let touched = before.iter().any(|s| matches!(s, Sym::Field(x, _) | Sym::Valid(x) if *x == h.name));
        if !fields.is_empty() || used.contains(&Sym::Valid(h.name.clone())) || !touched {
            headers.push(HeaderDecl { name: h.name, fields });
        }
    }
    p.headers = headers;
    Sliced { program: p, removed_statements, removed_registers, removed_metadata, removed_fields }
}

/// Remove declarations of the given fields, returning their `header.field` names.
pub(crate) fn drop_fields(p: &mut DeviceProgram, dead: &BTreeSet<Sym>) -> Vec<String> {
    let mut gone = Vec::new();
    for h in &mut p.headers {
        h.fields.retain(|f| {
            let keep = !dead.contains(&Sym::Field(h.name.clone(), f.name.clone()));
            if !keep {
                gone.push(format!("{}.{}", h.name, f.name));
            }
            keep
        });
    }
    gone
}

/// Entries for the tables that survived slicing.
pub fn filter_entries(entries: &EntrySet, prog: &DeviceProgram) -> EntrySet {
    let mut out = entries.clone();
    out.tables.retain(|t, _| prog.table(t).is_some());
    out
}

/// One packet layout over all sliced devices.
pub fn synchronize_fields<'a>(programs: impl IntoIterator<Item = &'a DeviceProgram>) -> Result<Layout, LayoutError> {
    Layout::unify(programs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pir::{build_cfg, parse_device_program, print_program, validate, Section};

    const SRC: &str = "device d { header h { a: bit<8>; b: bit<8>; } metadata { x: bit<8>; cnt: bit<8>; } register c[1]: bit<8>;
        parser { start: extract(h); accept; } deparser { emit(h); }
        ingress { c.read(meta.cnt, 0); c.write(0, meta.cnt + 1); if (hdr.h.a == 1) { set_egress_port(2); } else { meta.x = 3; } } }";

    #[test]
    fn keeping_everything_is_identity() {
        let p = parse_device_program(SRC).unwrap();
        let cfg = build_cfg(&p, Section::Pipeline);
        let all: BTreeSet<usize> = (0..cfg.len()).collect();
        let s = apply_slice(&p, &cfg, &all, &BTreeSet::new());
        assert_eq!(s.program, p);
        assert_eq!(s.removed_statements, 0);
    }

    #[test]
    fn unused_counter_is_removed() {
        let p = parse_device_program(SRC).unwrap();
        let cfg = build_cfg(&p, Section::Pipeline);
        // 0 entry, 1 read, 2 write, 3 if, 4 set port, 5 meta.x, 6 boundary, 7 exit
        let s = apply_slice(&p, &cfg, &BTreeSet::from([0, 3, 4, 6, 7]), &BTreeSet::new());
        assert_eq!(s.removed_statements, 3);
        assert_eq!(s.removed_registers, vec!["c".to_string()]);
        assert_eq!(s.removed_metadata, vec!["x".to_string(), "cnt".to_string()]);
        assert!(s.removed_fields.is_empty());
        assert!(matches!(&s.program.ingress[..], [Stmt::If(_, a, b)] if a.len() == 1 && b.is_empty()));
        let text = print_program(&s.program);
        assert_eq!(parse_device_program(&text).unwrap(), s.program);
        assert_eq!(validate(&s.program).unwrap(), s.program);
    }

    #[test]
    fn pinned_register_survives() {
        let p = parse_device_program(SRC).unwrap();
        let cfg = build_cfg(&p, Section::Pipeline);
        let s = apply_slice(&p, &cfg, &BTreeSet::new(), &BTreeSet::from([Sym::Register("c".into())]));
        assert_eq!(s.program.registers.len(), 1);
        assert!(s.program.ingress.is_empty());
    }

    #[test]
    fn layout_synchronization() {
        let a = parse_device_program("device a { header h { seq: bit<8>; } }").unwrap();
        let b = parse_device_program("device b { header h { seq: bit<8>; op: bit<4>; } }").unwrap();
        let l = synchronize_fields([&a, &b]).unwrap();
        assert_eq!(l.field_names(), vec!["h.seq".to_string(), "h.op".to_string()]);
        assert_eq!(synchronize_fields([&a, &a]).unwrap(), Layout::unify([&a]).unwrap());
        let c = parse_device_program("device c { header h { seq: bit<16>; } }").unwrap();
        assert!(synchronize_fields([&a, &c]).is_err());
    }
}
