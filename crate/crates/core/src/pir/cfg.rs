//! Statement-level control-flow graphs.

use super::ast::*;
use crate::syntax::Expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Section {
    Ingress,
    Egress,
    /// Ingress followed by egress, ending at final dispatch.
    Pipeline,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Entry,
    Exit,
    /// Traffic manager and egress parser, between ingress and egress.
    Boundary,
    /// Condition of an `if`.
    Branch(Expr),
    Stmt(Stmt),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfgNode {
    pub id: usize,
    pub kind: NodeKind,
    pub origin: Option<StmtPath>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    pub nodes: Vec<CfgNode>,
    pub succs: Vec<Vec<usize>>,
    pub preds: Vec<Vec<usize>>,
    pub entry: usize,
    pub exit: usize,
}

impl Cfg {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, ss) in self.succs.iter().enumerate() {
            for &b in ss {
                out.push((a, b));
            }
        }
        out
    }

    pub fn label(&self, n: usize) -> String {
        match &self.nodes[n].kind {
            NodeKind::Entry => "entry".into(),
            NodeKind::Exit => "exit".into(),
            NodeKind::Boundary => "boundary".into(),
            NodeKind::Branch(c) => format!("if ({c})"),
            NodeKind::Stmt(s) => super::printer::stmt_line(s),
        }
    }
}

struct Builder<'a> {
    prog: &'a DeviceProgram,
    nodes: Vec<CfgNode>,
    edges: Vec<(usize, usize)>,
}

impl Builder<'_> {
    fn node(&mut self, kind: NodeKind, origin: Option<StmtPath>, preds: &[usize]) -> usize {
        let id = self.nodes.len();
        self.nodes.push(CfgNode { id, kind, origin });
        for &p in preds {
            self.edges.push((p, id));
        }
        id
    }

    /// Lay out `block`; returns the nodes that fall through to whatever follows.
    fn block(&mut self, block: &[Stmt], root: Root, prefix: &[usize], preds: Vec<usize>) -> Vec<usize> {
        let mut cur = preds;
        for (i, s) in block.iter().enumerate() {
            let mut steps = prefix.to_vec();
            steps.push(i);
            let origin = Some(StmtPath { root, steps: steps.clone() });
            cur = match s {
                Stmt::If(c, then, els) => {
                    let n = self.node(NodeKind::Branch(c.clone()), origin, &cur);
                    let mut t = steps.clone();
                    t.push(0);
                    let mut outs = self.block(then, root, &t, vec![n]);
                    let mut e = steps.clone();
                    e.push(1);
                    outs.extend(self.block(els, root, &e, vec![n]));
                    outs.sort_unstable();
                    outs.dedup();
                    outs
                }
                Stmt::Apply(t) => {
                    let n = self.node(NodeKind::Stmt(s.clone()), origin, &cur);
                    let ti = self.prog.table_index(t).expect("validated table");
                    let mut outs = Vec::new();
                    for (ai, a) in self.prog.tables[ti].actions.iter().enumerate() {
                        outs.extend(self.block(&a.body, Root::Action { table: ti, action: ai }, &[], vec![n]));
                    }
                    if outs.is_empty() {
                        outs.push(n);
                    }
                    outs.sort_unstable();
                    outs.dedup();
                    outs
                }
                _ => vec![self.node(NodeKind::Stmt(s.clone()), origin, &cur)],
            };
        }
        cur
    }
}

/// Build the CFG of one pipeline section. Node ids follow program order; entry is 0
/// and exit is the last node. `Pipeline` places a boundary node between the halves.
pub fn build_cfg(prog: &DeviceProgram, section: Section) -> Cfg {
    let mut b = Builder { prog, nodes: Vec::new(), edges: Vec::new() };
    let entry = b.node(NodeKind::Entry, None, &[]);
    let mut cur = vec![entry];
    if matches!(section, Section::Ingress | Section::Pipeline) {
        cur = b.block(&prog.ingress, Root::Ingress, &[], cur);
    }
    if section == Section::Pipeline {
        cur = vec![b.node(NodeKind::Boundary, None, &cur)];
    }
    if matches!(section, Section::Egress | Section::Pipeline) {
        cur = b.block(&prog.egress, Root::Egress, &[], cur);
    }
    let exit = b.node(NodeKind::Exit, None, &cur);
    let n = b.nodes.len();
    let mut succs = vec![Vec::new(); n];
    let mut preds = vec![Vec::new(); n];
    for (a, c) in b.edges {
        if !succs[a].contains(&c) {
            succs[a].push(c);
            preds[c].push(a);
        }
    }
    Cfg { nodes: b.nodes, succs, preds, entry, exit }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pir::parse_device_program;

    fn reach(cfg: &Cfg, from: usize, adj: &[Vec<usize>]) -> Vec<bool> {
        let mut seen = vec![false; cfg.len()];
        let mut st = vec![from];
        while let Some(n) = st.pop() {
            if !std::mem::replace(&mut seen[n], true) {
                st.extend(&adj[n]);
            }
        }
        seen
    }

    #[test]
    fn straight_line_is_a_chain() {
        let p = parse_device_program("device d { metadata { a: bit<8>; } ingress { meta.a = 1; meta.a = 2; mark_drop(); } }").unwrap();
        let cfg = build_cfg(&p, Section::Ingress);
        assert_eq!(cfg.len(), 5);
        assert_eq!(cfg.edges(), vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
    }

    #[test]
    fn fig5_is_a_diamond() {
        let p = parse_device_program(
            "device s0 { header ipv4 { dst_ip: bit<32>; } ingress { if (hdr.ipv4.dst_ip == 1) { set_egress_port(32); } else { hdr.ipv4.dst_ip = 1; recirculate(); } } }",
        )
        .unwrap();
        let cfg = build_cfg(&p, Section::Ingress);
        // entry, if, then, else-assign, else-recirc, exit
        assert_eq!(cfg.len(), 6);
        assert!(matches!(cfg.nodes[1].kind, NodeKind::Branch(_)));
        assert_eq!(cfg.succs[1], vec![2, 3]);
        assert_eq!(cfg.succs[3], vec![4]);
        assert_eq!(cfg.preds[5], vec![2, 4]);
    }

    #[test]
    fn node_count_and_reachability() {
        let p = parse_device_program(
            "device d { metadata { a: bit<8>; } ingress { if (meta.a == 1) { if (meta.a == 2) { meta.a = 3; } meta.a = 4; } else { mark_drop(); } } egress { meta.a = 5; } }",
        )
        .unwrap();
        let cfg = build_cfg(&p, Section::Pipeline);
        let stmts = Stmt::count(&p.ingress) + Stmt::count(&p.egress);
        assert_eq!(cfg.len(), stmts + 3);
        assert!(reach(&cfg, cfg.entry, &cfg.succs).iter().all(|&b| b));
        assert!(reach(&cfg, cfg.exit, &cfg.preds).iter().all(|&b| b));
        for (a, b) in cfg.edges() {
            assert!(a < b, "edges follow program order");
        }
    }

    #[test]
    fn apply_branches_into_each_action() {
        let p = parse_device_program(
            "device d { header h { k: bit<8>; } metadata { a: bit<8>; }
             table t { key = hdr.h.k; action x() { meta.a = 1; } action y() { } default = y(); }
             ingress { t.apply(); meta.a = 2; } }",
        )
        .unwrap();
        let cfg = build_cfg(&p, Section::Ingress);
        assert_eq!(cfg.succs[1], vec![2, 3]);
        assert_eq!(cfg.nodes[2].origin.as_ref().unwrap().root, Root::Action { table: 0, action: 0 });
    }
}
