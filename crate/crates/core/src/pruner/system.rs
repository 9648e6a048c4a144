//! Slicing every device of a resolved system, with seeds crossing link boundaries.

use std::collections::BTreeSet;

use super::defuse::{node_info, NodeInfo, Sym, SymbolClasses};
use super::graphs::{backward_prune, build_cdg, build_ddg, Cdg, EdgeTag};
use super::slice::{apply_slice, drop_fields, filter_entries, program_syms, synchronize_fields};
use crate::intent::seeds::{mentioned_symbols, observed_symbols, seeds_for};
use crate::intent::ResolvedSpec;
use crate::pir::{build_cfg, Cfg, NodeKind, Section};
use crate::semantics::LayoutError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SliceOptions {
    /// Run the second, back-edge phase of dependency construction.
    pub phase2: bool,
}

impl Default for SliceOptions {
    fn default() -> Self {
        SliceOptions { phase2: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct CrossEdge {
    pub from: String,
    pub to: String,
    pub symbol: String,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct DeviceReport {
    pub alias: String,
    pub nodes: usize,
    pub kept_nodes: usize,
    pub statements_before: usize,
    pub statements_after: usize,
    pub removed_statements: usize,
    pub loop_edge: bool,
    pub cross_edges: Vec<CrossEdge>,
    pub removed_registers: Vec<String>,
    pub removed_metadata: Vec<String>,
    pub removed_fields: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct SliceReport {
    pub devices: Vec<DeviceReport>,
    /// Predicates reached through control dependence are followed through data edges too.
    pub closure: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SystemSlice {
    pub spec: ResolvedSpec,
    pub report: SliceReport,
    pub cfgs: Vec<Cfg>,
    pub keep: Vec<BTreeSet<usize>>,
}

struct DeviceGraphs {
    cfg: Cfg,
    info: Vec<NodeInfo>,
    classes: SymbolClasses,
    cdg: Cdg,
    boundary: usize,
    loop_edge: bool,
}

pub fn slice_system(rs: &ResolvedSpec, opts: SliceOptions) -> Result<SystemSlice, LayoutError> {
    let n = rs.programs.len();
    let devs: Vec<DeviceGraphs> = rs
        .programs
        .iter()
        .map(|p| {
            let cfg = build_cfg(p, Section::Pipeline);
            let info = node_info(p, &cfg);
            let cdg = build_cdg(&cfg);
            let boundary = cfg.nodes.iter().position(|x| x.kind == NodeKind::Boundary).expect("pipeline boundary");
            DeviceGraphs { classes: SymbolClasses::of(p), loop_edge: p.needs_loop_edge() && opts.phase2, cfg, info, cdg, boundary }
        })
        .collect();
    let mentioned = mentioned_symbols(rs);
    let observed = observed_symbols(rs);
    let seeds: Vec<BTreeSet<usize>> = devs.iter().zip(&mentioned).map(|(d, m)| seeds_for(&d.cfg, &d.info, m)).collect();
    let has_out: Vec<bool> = (0..n).map(|d| rs.links.iter().any(|l| l.from == d)).collect();
    let mut select_fields = BTreeSet::new();
    for p in &rs.programs {
        for v in p.parser.select_vars().into_iter().chain(p.egress_parser().select_vars()) {
            select_fields.extend(Sym::of_var(v, None));
        }
    }

    // Fields read by kept nodes anywhere must arrive intact from upstream devices.
    let mut carried: BTreeSet<Sym> = BTreeSet::new();
    let mut keep: Vec<BTreeSet<usize>>;
    let mut infos: Vec<Vec<NodeInfo>>;
    loop {
        keep = Vec::with_capacity(n);
        infos = Vec::with_capacity(n);
        for (d, g) in devs.iter().enumerate() {
            let mut info = g.info.clone();
            let exit = g.cfg.exit;
            let seeded = has_out[d] || !observed[d].is_empty();
            if seeded {
                let uses = &mut info[exit].uses;
                uses.extend(observed[d].iter().cloned());
                if has_out[d] {
                    uses.extend([Sym::Drop, Sym::Recirc, Sym::Clone, Sym::EgressPort]);
                    uses.extend(carried.iter().cloned());
                    uses.extend(select_fields.iter().cloned());
                    for v in rs.programs[d].egress_deparser().condition_vars() {
                        uses.extend(Sym::of_var(v, None));
                    }
                }
            }
            let ddg = build_ddg(&g.cfg, &info, &g.classes, g.loop_edge);
            let mut s = seeds[d].clone();
            if seeded {
                s.insert(exit);
            }
            if !s.is_empty() {
                s.insert(g.cfg.entry);
                s.insert(g.boundary);
            }
            keep.push(backward_prune(&ddg, &g.cdg, &s));
            infos.push(info);
        }
        let next: BTreeSet<Sym> = keep
            .iter()
            .zip(&infos)
            .flat_map(|(k, info)| k.iter().flat_map(move |&u| info[u].uses.iter().filter(|s| s.is_field()).cloned()))
            .collect();
        if next.is_subset(&carried) {
            break;
        }
        carried.extend(next);
    }

    let mut out = rs.clone();
    let mut devices = Vec::new();
    let mut sliced_all = Vec::with_capacity(n);
    for (d, g) in devs.iter().enumerate() {
        sliced_all.push(apply_slice(&rs.programs[d], &g.cfg, &keep[d], &mentioned[d]));
    }
    // A field another device still declares stays in the shared layout unless dropped everywhere.
    let referenced: BTreeSet<Sym> = rs.programs.iter().flat_map(program_syms).filter(|s| s.is_field()).collect();
    let still: BTreeSet<Sym> =
        sliced_all.iter().flat_map(|s| program_syms(&s.program)).chain(mentioned.iter().flatten().cloned()).filter(|s| s.is_field()).collect();
    let dead: BTreeSet<Sym> = referenced.difference(&still).cloned().collect();
    for (d, (g, mut sliced)) in devs.iter().zip(sliced_all).enumerate() {
        for f in drop_fields(&mut sliced.program, &dead) {
            if !sliced.removed_fields.contains(&f) {
                sliced.removed_fields.push(f);
            }
        }
        let ddg = build_ddg(&g.cfg, &infos[d], &g.classes, g.loop_edge);
        let mut cross: Vec<CrossEdge> = ddg
            .edges
            .iter()
            .filter(|e| e.tag == EdgeTag::Cross && keep[d].contains(&e.to))
            .map(|e| CrossEdge { from: g.cfg.label(e.from), to: g.cfg.label(e.to), symbol: e.sym.to_string() })
            .collect();
        cross.dedup();
        let before = crate::pir::Stmt::count(&rs.programs[d].ingress) + crate::pir::Stmt::count(&rs.programs[d].egress);
        let after = crate::pir::Stmt::count(&sliced.program.ingress) + crate::pir::Stmt::count(&sliced.program.egress);
        devices.push(DeviceReport {
            alias: rs.aliases[d].clone(),
            nodes: g.cfg.len(),
            kept_nodes: keep[d].len(),
            statements_before: before,
            statements_after: after,
            removed_statements: sliced.removed_statements,
            loop_edge: g.loop_edge,
            cross_edges: cross,
            removed_registers: sliced.removed_registers,
            removed_metadata: sliced.removed_metadata,
            removed_fields: sliced.removed_fields,
        });
        out.entries[d] = filter_entries(&rs.entries[d], &sliced.program);
        out.programs[d] = sliced.program;
    }
    synchronize_fields(&out.programs)?;
    let mut warnings = Vec::new();
    if rs.globals.is_empty() && rs.asserts.is_empty() {
        warnings.push("no properties: only forwarding behaviour is kept".to_string());
    }
    if !opts.phase2 && rs.programs.iter().any(|p| p.needs_loop_edge()) {
        warnings.push("cross-pass dependencies disabled: the slice may drop statements that matter".to_string());
    }
    let cfgs = devs.into_iter().map(|g| g.cfg).collect();
    Ok(SystemSlice { spec: out, report: SliceReport { devices, closure: "full".into(), warnings }, cfgs, keep })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intent::{parse_spec, resolve_spec, LoadedImport};
    use crate::pir::{parse_device_program, print_program};

    const FIG5: &str = "device f { header ipv4 { dst_ip: bit<8>; } parser { start: extract(ipv4); accept; } deparser { emit(ipv4); }
        ingress { if (hdr.ipv4.dst_ip == 1) { set_egress_port(32); } else { hdr.ipv4.dst_ip = 1; recirculate(); } } }";

    fn system(spec: &str, progs: &[(&str, &str)]) -> ResolvedSpec {
        let loaded = progs
            .iter()
            .map(|(a, src)| LoadedImport { alias: a.to_string(), program: parse_device_program(src).unwrap(), entries: Default::default() })
            .collect();
        resolve_spec(&parse_spec(spec).unwrap(), loaded).unwrap()
    }

    #[test]
    fn back_edge_keeps_the_rewrite() {
        let rs = system("import s0 from \"f\"; global { ltl p { <> { s0.meta.egress_port == 32 } }; }", &[("s0", FIG5)]);
        let on = slice_system(&rs, SliceOptions::default()).unwrap();
        assert_eq!(on.spec.programs, rs.programs);
        assert!(on.report.devices[0].cross_edges.iter().any(|e| e.symbol.contains("dst_ip")));
        let off = slice_system(&rs, SliceOptions { phase2: false }).unwrap();
        let text = print_program(&off.spec.programs[0]);
        assert!(!text.contains("recirculate") && !text.contains("else"), "{text}");
        assert_eq!(off.report.warnings.len(), 1);
    }

    #[test]
    fn dead_fields_leave_every_device() {
        let a = "device a { header h { x: bit<2>; y: bit<2>; } register r[1]: bit<2>; parser { start: extract(h); accept; } deparser { emit(h); }
            ingress { hdr.h.x = hdr.h.y; r.write(0, 1); set_egress_port(1); } }";
        let b = "device b { header h { x: bit<2>; y: bit<2>; } parser { start: extract(h); accept; } deparser { emit(h); } }";
        let rs = system(
            "import a from \"a\"; import b from \"b\"; link a -> b ALL; global { ltl p { [] { a.r[0] != 2 } }; }",
            &[("a", a), ("b", b)],
        );
        let s = slice_system(&rs, SliceOptions::default()).unwrap();
        for (p, rep) in s.spec.programs.iter().zip(&s.report.devices) {
            assert!(p.headers[0].fields.is_empty(), "{}", print_program(p));
            assert_eq!(rep.removed_fields, vec!["h.x".to_string(), "h.y".to_string()]);
        }
    }

    #[test]
    fn never_referenced_fields_stay() {
        let b = "device b { header h { x: bit<2>; } register r[1]: bit<2>; parser { start: extract(h); accept; } deparser { emit(h); }
            ingress { r.write(0, 1); } }";
        let rs = system("import b from \"b\"; global { ltl p { [] { b.r[0] != 2 } }; }", &[("b", b)]);
        let s = slice_system(&rs, SliceOptions::default()).unwrap();
        assert_eq!(s.spec.programs, rs.programs);
    }

    #[test]
    fn no_properties_warns() {
        let rs = system("import s0 from \"f\";", &[("s0", FIG5)]);
        let s = slice_system(&rs, SliceOptions::default()).unwrap();
        assert!(s.report.warnings[0].contains("no properties"));
        assert_eq!(s.report.closure, "full");
    }
}
