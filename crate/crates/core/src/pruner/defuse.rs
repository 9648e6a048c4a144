//! Definitions and uses of each CFG node.

use std::collections::BTreeSet;
use std::fmt;

use crate::pir::{Cfg, CloneSpec, DeviceProgram, NodeKind, Root, Stmt};
use crate::syntax::{Expr, VarRef};

/// A piece of state a statement can read or write.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum Sym {
    Field(String, String),
    Valid(String),
    Meta(String),
    EgressPort,
    Drop,
    Recirc,
    Clone,
    Register(String),
    Param { table: usize, action: usize, name: String },
    /// Whether the current pass was started by a recirculation or clone.
    PassOrigin,
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::Field(h, x) => write!(f, "hdr.{h}.{x}"),
            Sym::Valid(h) => write!(f, "hdr.{h}.isValid()"),
            Sym::Meta(m) => write!(f, "meta.{m}"),
            Sym::EgressPort => write!(f, "meta.egress_port"),
            Sym::Drop => write!(f, "<drop>"),
            Sym::Recirc => write!(f, "<recirculate>"),
            Sym::Clone => write!(f, "<clone>"),
            Sym::Register(r) => write!(f, "{r}"),
            Sym::Param { table, action, name } => write!(f, "<param {table}.{action}.{name}>"),
            Sym::PassOrigin => write!(f, "<pass origin>"),
        }
    }
}

impl Sym {
    /// Symbol for a resolved variable read inside `root`.
    pub fn of_var(v: &VarRef, root: Option<Root>) -> Option<Sym> {
        Some(match v {
            VarRef::Field { header, field } => Sym::Field(header.clone(), field.clone()),
            VarRef::Valid(h) => Sym::Valid(h.clone()),
            VarRef::Meta(m) => Sym::Meta(m.clone()),
            VarRef::EgressPort => Sym::EgressPort,
            VarRef::Reg { name, .. } => Sym::Register(name.clone()),
            VarRef::Param(n) => match root {
                Some(Root::Action { table, action }) => Sym::Param { table, action, name: n.clone() },
                _ => return None,
            },
            VarRef::Raw(_) | VarRef::At { .. } => return None,
        })
    }

    pub fn is_field(&self) -> bool {
        matches!(self, Sym::Field(..))
    }
}

/// Which symbols may carry a dependency from one pass into the next.
#[derive(Debug, Clone)]
pub struct SymbolClasses {
    transient: BTreeSet<String>,
}

impl SymbolClasses {
    pub fn of(prog: &DeviceProgram) -> SymbolClasses {
        SymbolClasses { transient: prog.metadata.iter().filter(|m| m.transient).map(|m| m.name.clone()).collect() }
    }

    pub fn is_register(&self, s: &Sym) -> bool {
        matches!(s, Sym::Register(_))
    }

    /// Header fields, the egress port and metadata that survive recirculation.
    pub fn is_packet_carried(&self, s: &Sym) -> bool {
        match s {
            Sym::Field(..) | Sym::EgressPort | Sym::PassOrigin => true,
            Sym::Meta(m) => !self.transient.contains(m),
            _ => false,
        }
    }

    pub fn cross_ok(&self, s: &Sym) -> bool {
        self.is_register(s) || self.is_packet_carried(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodeInfo {
    /// (symbol, strong); weak definitions do not kill.
    pub defs: Vec<(Sym, bool)>,
    pub uses: BTreeSet<Sym>,
}

impl NodeInfo {
    pub fn defines(&self, s: &Sym) -> bool {
        self.defs.iter().any(|(d, _)| d == s)
    }
}

fn expr_uses(e: &Expr, root: Option<Root>, out: &mut BTreeSet<Sym>) {
    e.for_each_var(&mut |v| out.extend(Sym::of_var(v, root)));
}

fn lvalue(v: &VarRef) -> Sym {
    Sym::of_var(v, None).expect("validated lvalue")
}

/// Definitions and uses for every node. The exit node starts with no uses.
pub fn node_info(prog: &DeviceProgram, cfg: &Cfg) -> Vec<NodeInfo> {
    let all_valid = || prog.headers.iter().map(|h| (Sym::Valid(h.name.clone()), true));
    cfg.nodes
        .iter()
        .map(|n| {
            let root = n.origin.as_ref().map(|o| o.root);
            let mut i = NodeInfo::default();
            match &n.kind {
                NodeKind::Entry => {
                    i.defs.extend(all_valid());
                    i.defs.extend([(Sym::Drop, true), (Sym::Recirc, true), (Sym::Clone, true)]);
                    i.uses.insert(Sym::PassOrigin);
                    for v in prog.parser.select_vars().into_iter().chain(prog.egress_deparser().condition_vars()) {
                        i.uses.extend(Sym::of_var(v, None));
                    }
                }
                NodeKind::Boundary => {
                    i.defs.extend(all_valid());
                    i.defs.extend([(Sym::Drop, true), (Sym::Clone, true)]);
                    i.uses.extend([Sym::Drop, Sym::Clone]);
                    for v in prog.egress_parser().select_vars() {
                        i.uses.extend(Sym::of_var(v, None));
                    }
                }
                NodeKind::Exit => {}
                NodeKind::Branch(c) => expr_uses(c, root, &mut i.uses),
                NodeKind::Stmt(s) => match s {
                    Stmt::Assign(lv, e) => {
                        i.defs.push((lvalue(lv), true));
                        expr_uses(e, root, &mut i.uses);
                    }
                    Stmt::RegRead { dest, reg, index } => {
                        i.defs.push((lvalue(dest), true));
                        i.uses.insert(Sym::Register(reg.clone()));
                        expr_uses(index, root, &mut i.uses);
                    }
                    Stmt::RegWrite { reg, index, value } => {
                        i.defs.push((Sym::Register(reg.clone()), false));
                        expr_uses(index, root, &mut i.uses);
                        expr_uses(value, root, &mut i.uses);
                    }
                    Stmt::Apply(t) => {
                        let ti = prog.table_index(t).expect("validated table");
                        for (ai, a) in prog.tables[ti].actions.iter().enumerate() {
                            for p in &a.params {
                                i.defs.push((Sym::Param { table: ti, action: ai, name: p.name.clone() }, true));
                            }
                        }
                        expr_uses(&prog.tables[ti].key, root, &mut i.uses);
                    }
                    Stmt::MarkDrop => i.defs.push((Sym::Drop, true)),
                    Stmt::Clone(c) => {
                        i.defs.push((Sym::Clone, true));
                        if matches!(c, CloneSpec::I2I | CloneSpec::E2E) {
                            i.defs.push((Sym::PassOrigin, false));
                        }
                    }
                    Stmt::Recirculate => {
                        i.defs.push((Sym::Recirc, true));
                        i.defs.push((Sym::PassOrigin, false));
                    }
                    Stmt::SetEgressPort(e) => {
                        i.defs.push((Sym::EgressPort, true));
                        expr_uses(e, root, &mut i.uses);
                    }
                    Stmt::AssertLocal { cond, .. } => expr_uses(cond, root, &mut i.uses),
                    Stmt::If(..) => unreachable!("if statements become branch nodes"),
                },
            }
            i
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pir::{build_cfg, parse_device_program, Section};

    #[test]
    fn statement_defs_and_uses() {
        let p = parse_device_program(
            "device d { header h { a: bit<8>; } metadata { m: bit<8>; transient t: bit<8>; } register r[4]: bit<8>;
             table tb { key = hdr.h.a; action set(x: bit<8>) { meta.m = x; } default = set(1); }
             ingress { r.read(meta.m, hdr.h.a); tb.apply(); r.write(0, meta.t); recirculate(); } }",
        )
        .unwrap();
        let cfg = build_cfg(&p, Section::Pipeline);
        let info = node_info(&p, &cfg);
        // entry, read, apply, set-body, write, recirc, boundary, exit
        assert_eq!(cfg.len(), 8);
        assert_eq!(info[1].defs, vec![(Sym::Meta("m".into()), true)]);
        assert!(info[1].uses.contains(&Sym::Register("r".into())));
        assert!(info[2].defines(&Sym::Param { table: 0, action: 0, name: "x".into() }));
        assert!(info[3].uses.contains(&Sym::Param { table: 0, action: 0, name: "x".into() }));
        assert_eq!(info[4].defs, vec![(Sym::Register("r".into()), false)]);
        assert!(info[5].defines(&Sym::PassOrigin));
        let c = SymbolClasses::of(&p);
        assert!(c.cross_ok(&Sym::Meta("m".into())));
        assert!(!c.cross_ok(&Sym::Meta("t".into())));
        assert!(!c.cross_ok(&Sym::Drop));
    }
}
