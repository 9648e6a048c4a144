//! Reaching definitions.

use std::collections::BTreeSet;

use super::defuse::{NodeInfo, Sym};
use crate::pir::Cfg;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RdState {
    /// Every definition site as (node, symbol); sets below index into this.
    pub defs: Vec<(usize, Sym)>,
    pub rd_in: Vec<BTreeSet<usize>>,
    pub rd_out: Vec<BTreeSet<usize>>,
    pub iterations: usize,
}

impl RdState {
    /// Definition nodes of `s` reaching the start of `n`.
    pub fn reaching(&self, n: usize, s: &Sym) -> BTreeSet<usize> {
        self.rd_in[n].iter().map(|&d| &self.defs[d]).filter(|(_, x)| x == s).map(|(d, _)| *d).collect()
    }
}

pub fn reaching_defs(cfg: &Cfg, info: &[NodeInfo], with_back_edge: bool) -> RdState {
    reaching_defs_observed(cfg, info, with_back_edge, &mut |_| {})
}

/// Round-robin fixpoint; `observe` sees `rd_out` after every sweep.
pub fn reaching_defs_observed(
    cfg: &Cfg,
    info: &[NodeInfo],
    with_back_edge: bool,
    observe: &mut dyn FnMut(&[BTreeSet<usize>]),
) -> RdState {
    let n = cfg.len();
    let mut defs = Vec::new();
    let mut gen = vec![BTreeSet::new(); n];
    for (u, i) in info.iter().enumerate() {
        for (s, _) in &i.defs {
            gen[u].insert(defs.len());
            defs.push((u, s.clone()));
        }
    }
    let kill: Vec<BTreeSet<usize>> = info
        .iter()
        .enumerate()
        .map(|(u, i)| {
            let strong: BTreeSet<&Sym> = i.defs.iter().filter(|(_, st)| *st).map(|(s, _)| s).collect();
            (0..defs.len()).filter(|&d| defs[d].0 != u && strong.contains(&defs[d].1)).collect()
        })
        .collect();
    let mut preds = cfg.preds.clone();
    if with_back_edge {
        preds[cfg.entry].push(cfg.exit);
    }
    let mut rd_in = vec![BTreeSet::new(); n];
    let mut rd_out: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut changed = false;
        for u in 0..n {
            let inn: BTreeSet<usize> = preds[u].iter().flat_map(|&p| rd_out[p].iter().copied()).collect();
            let out: BTreeSet<usize> = gen[u].iter().copied().chain(inn.difference(&kill[u]).copied()).collect();
            rd_in[u] = inn;
            if out != rd_out[u] {
                rd_out[u] = out;
                changed = true;
            }
        }
        observe(&rd_out);
        if !changed {
            break;
        }
    }
    RdState { defs, rd_in, rd_out, iterations }
}
