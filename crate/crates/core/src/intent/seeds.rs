//! Seed statements for property-directed slicing.

use std::collections::BTreeSet;

use super::ResolvedSpec;
use crate::pir::{build_cfg, Cfg, NodeKind, Section, Stmt};
use crate::pruner::{node_info, NodeInfo, Sym};
use crate::syntax::VarRef;

/// State symbols of one device mentioned by any property.
pub fn mentioned_symbols(rs: &ResolvedSpec) -> Vec<BTreeSet<Sym>> {
    rs.property_refs().into_iter().map(|refs| refs.iter().filter_map(|v| Sym::of_var(v, None)).collect()).collect()
}

/// Packet symbols of each device read by global rules, observed at final dispatch.
pub fn observed_symbols(rs: &ResolvedSpec) -> Vec<BTreeSet<Sym>> {
    let mut out = vec![BTreeSet::new(); rs.aliases.len()];
    for g in &rs.globals {
        for a in g.formula.atoms() {
            for v in a.vars() {
                if let VarRef::At { actor, var } = v {
                    if !matches!(**var, VarRef::Reg { .. }) {
                        let d = rs.alias_index(actor).expect("resolved alias");
                        out[d].extend(Sym::of_var(var, None));
                    }
                }
            }
        }
    }
    out
}

/// Writers of `mentioned` plus injected assertions, as node ids of the pipeline CFG.
pub fn seeds_for(cfg: &Cfg, info: &[NodeInfo], mentioned: &BTreeSet<Sym>) -> BTreeSet<usize> {
    cfg.nodes
        .iter()
        .enumerate()
        .filter(|(n, node)| match &node.kind {
            NodeKind::Stmt(Stmt::AssertLocal { .. }) => true,
            NodeKind::Stmt(_) => info[*n].defs.iter().any(|(s, _)| mentioned.contains(s)),
            _ => false,
        })
        .map(|(n, _)| n)
        .collect()
}

/// Per device, the pipeline CFG nodes that seed the slice.
pub fn extract_seeds(rs: &ResolvedSpec) -> Vec<BTreeSet<usize>> {
    let mentioned = mentioned_symbols(rs);
    rs.programs
        .iter()
        .zip(&mentioned)
        .map(|(p, m)| {
            let cfg = build_cfg(p, Section::Pipeline);
            let info = node_info(p, &cfg);
            seeds_for(&cfg, &info, m)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intent::{parse_spec, resolve_spec, LoadedImport};
    use crate::pir::{parse_device_program, EntrySet};

    fn resolve(spec: &str, prog: &str, aliases: &[&str]) -> ResolvedSpec {
        let p = parse_device_program(prog).unwrap();
        let loaded = aliases.iter().map(|a| LoadedImport { alias: a.to_string(), program: p.clone(), entries: EntrySet::default() }).collect();
        resolve_spec(&parse_spec(spec).unwrap(), loaded).unwrap()
    }

    #[test]
    fn writers_of_sequence_register() {
        let prog = "device nc { header nc { seq: bit<2>; } metadata { s: bit<2>; } register seq[1]: bit<2>;
            parser { start: extract(nc); accept; }
            ingress { seq.read(meta.s, 0); if (meta.s == 0) { seq.write(0, 1); } else { seq.write(0, meta.s + 1); } hdr.nc.seq = meta.s; } }";
        let rs = resolve(
            "import s0 from \"a\"; import s1 from \"a\"; global { ltl m { [] { s0.seq[0] >= s1.seq[0] } }; }",
            prog,
            &["s0", "s1"],
        );
        let seeds = extract_seeds(&rs);
        // writes sit at nodes 3 and 4 of both devices
        assert_eq!(seeds, vec![BTreeSet::from([3, 4]), BTreeSet::from([3, 4])]);
    }

    #[test]
    fn no_properties_no_seeds() {
        let rs = resolve("import s0 from \"a\";", "device d { metadata { x: bit<8>; } ingress { meta.x = 1; } }", &["s0"]);
        assert!(extract_seeds(&rs)[0].is_empty());
    }

    #[test]
    fn egress_port_seed_and_asserts() {
        let prog = "device s0 { header ipv4 { dst_ip: bit<32>; } parser { start: extract(ipv4); accept; }
            ingress { if (hdr.ipv4.dst_ip == 1) { set_egress_port(32); } else { hdr.ipv4.dst_ip = 1; recirculate(); } } }";
        let rs = resolve("import s0 from \"a\"; global { ltl p { <> { s0.meta.egress_port == 32 } }; }", prog, &["s0"]);
        assert_eq!(extract_seeds(&rs), vec![BTreeSet::from([2])]);
        assert_eq!(observed_symbols(&rs)[0], BTreeSet::from([Sym::EgressPort]));

        let rs = resolve("import s0 from \"a\"; local s0 { assert hdr.ipv4.dst_ip != 0; }", prog, &["s0"]);
        let seeds = extract_seeds(&rs);
        let cfg = build_cfg(&rs.programs[0], Section::Pipeline);
        let assert_node = cfg.nodes.iter().position(|n| matches!(n.kind, NodeKind::Stmt(Stmt::AssertLocal { .. }))).unwrap();
        assert_eq!(seeds[0], BTreeSet::from([3, assert_node]));
    }
}
