//! Data- and control-dependency graphs.

use std::collections::BTreeSet;

use super::defuse::{NodeInfo, Sym, SymbolClasses};
use super::rd::reaching_defs;
use crate::pir::{Cfg, NodeKind, Root, Stmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeTag {
    /// Within one pass.
    Intra,
    /// Carried across passes by the back edge.
    Cross,
    /// Register contents persisting between reactions.
    State,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DdgEdge {
    pub from: usize,
    pub to: usize,
    pub sym: Sym,
    pub tag: EdgeTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ddg {
    pub edges: Vec<DdgEdge>,
}

impl Ddg {
    pub fn has(&self, from: usize, to: usize) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    pub fn cross(&self) -> impl Iterator<Item = &DdgEdge> {
        self.edges.iter().filter(|e| e.tag == EdgeTag::Cross)
    }
}

/// `loop_edge` enables the second phase over the CFG with its exit to entry edge.
pub fn build_ddg(cfg: &Cfg, info: &[NodeInfo], classes: &SymbolClasses, loop_edge: bool) -> Ddg {
    let mut seen: BTreeSet<(usize, usize, Sym)> = BTreeSet::new();
    let mut g = Ddg::default();
    let rd1 = reaching_defs(cfg, info, false);
    for (u, i) in info.iter().enumerate() {
        for x in &i.uses {
            for d in rd1.reaching(u, x) {
                seen.insert((d, u, x.clone()));
                g.edges.push(DdgEdge { from: d, to: u, sym: x.clone(), tag: EdgeTag::Intra });
            }
        }
    }
    if loop_edge {
        let rd2 = reaching_defs(cfg, info, true);
        for (u, i) in info.iter().enumerate() {
            for x in &i.uses {
                if !classes.cross_ok(x) {
                    continue;
                }
                for d in rd2.reaching(u, x) {
                    if seen.insert((d, u, x.clone())) {
                        g.edges.push(DdgEdge { from: d, to: u, sym: x.clone(), tag: EdgeTag::Cross });
                    }
                }
            }
        }
    }
    for (d, di) in info.iter().enumerate() {
        for (x, _) in &di.defs {
            if !classes.is_register(x) {
                continue;
            }
            for (u, ui) in info.iter().enumerate() {
                if ui.uses.contains(x) && seen.insert((d, u, x.clone())) {
                    g.edges.push(DdgEdge { from: d, to: u, sym: x.clone(), tag: EdgeTag::State });
                }
            }
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cdg {
    /// (controlling node, dependent node)
    pub edges: BTreeSet<(usize, usize)>,
}

fn post_dominators(cfg: &Cfg) -> Vec<BTreeSet<usize>> {
    let n = cfg.len();
    let all: BTreeSet<usize> = (0..n).collect();
    let mut pd = vec![all; n];
    pd[cfg.exit] = BTreeSet::from([cfg.exit]);
    let mut changed = true;
    while changed {
        changed = false;
        for u in (0..n).rev() {
            if u == cfg.exit {
                continue;
            }
            let mut s = cfg.succs[u]
                .iter()
                .map(|&v| pd[v].clone())
                .reduce(|a, b| a.intersection(&b).copied().collect())
                .unwrap_or_default();
            s.insert(u);
            if s != pd[u] {
                pd[u] = s;
                changed = true;
            }
        }
    }
    pd
}

/// Control dependence from post-dominance, plus each table apply controlling the
/// action bodies inlined after it.
pub fn build_cdg(cfg: &Cfg) -> Cdg {
    let pd = post_dominators(cfg);
    let mut g = Cdg::default();
    for (a, b) in cfg.edges() {
        if pd[a].contains(&b) && b != a {
            continue;
        }
        for &n in &pd[b] {
            if n == a || !pd[a].contains(&n) {
                g.edges.insert((a, n));
            }
        }
    }
    for (a, node) in cfg.nodes.iter().enumerate() {
        if let NodeKind::Stmt(Stmt::Apply(_)) = node.kind {
            let mut b = a + 1;
            while b < cfg.len() && matches!(cfg.nodes[b].origin.as_ref().map(|o| o.root), Some(Root::Action { .. })) {
                g.edges.insert((a, b));
                b += 1;
            }
        }
    }
    g
}

/// Backward worklist closure over both graphs.
pub fn backward_prune(ddg: &Ddg, cdg: &Cdg, seeds: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut preds: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    for e in &ddg.edges {
        preds.entry(e.to).or_default().push(e.from);
    }
    for &(c, u) in &cdg.edges {
        preds.entry(u).or_default().push(c);
    }
    let mut keep = BTreeSet::new();
    let mut work: Vec<usize> = seeds.iter().copied().collect();
    while let Some(u) = work.pop() {
        if !keep.insert(u) {
            continue;
        }
        if let Some(ps) = preds.get(&u) {
            work.extend(ps);
        }
    }
    keep
}
