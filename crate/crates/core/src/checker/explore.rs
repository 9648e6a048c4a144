//! Depth-first exploration of the product of the system with its properties.

use std::collections::{HashMap, HashSet};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use super::ltl::{FormulaId, FALSE};
use super::model::{GlobalState, Step, SystemModel};
use crate::semantics::Fault;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    Default,
    Reversed,
    Shuffled(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Config {
    /// Skip product states seen before.
    pub dedup: bool,
    pub ordering: Ordering,
    /// Compute successors on the worker pool.
    pub parallel: bool,
    /// Maximum number of distinct global states.
    pub budget: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config { dedup: true, ordering: Ordering::Default, parallel: false, budget: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResourceKind {
    ChannelCapacity,
    RecircBound,
    StateBudget,
}

impl ResourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ResourceKind::ChannelCapacity => "channel-capacity",
            ResourceKind::RecircBound => "recirc-bound",
            ResourceKind::StateBudget => "state-budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail { property: String, reason: String },
    Resource { kind: ResourceKind, reason: String },
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Fail { .. } => "FAIL",
            Outcome::Resource { .. } => "RESOURCE",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail { .. } => 1,
            Outcome::Resource { .. } => 2,
        }
    }

    /// Property name or resource kind.
    pub fn subject(&self) -> Option<&str> {
        match self {
            Outcome::Pass => None,
            Outcome::Fail { property, .. } => Some(property),
            Outcome::Resource { kind, .. } => Some(kind.as_str()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Stats {
    /// Distinct global states reached.
    pub states: usize,
    pub transitions: usize,
    /// Longest path from the initial state.
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub outcome: Outcome,
    pub stats: Stats,
    pub initial: GlobalState,
    /// Steps from the initial state to the violation; empty for PASS.
    pub path: Vec<Step>,
}

/// Classification of a reaction fault.
pub fn classify_fault(model: &SystemModel, f: &Fault) -> Outcome {
    match f {
        Fault::AssertFailed { device, id, .. } => {
            let d = model.aliases.iter().position(|a| a == device).unwrap_or(usize::MAX);
            let property = model.assert_names.get(&(d, *id)).cloned().unwrap_or_else(|| format!("local:{device}:{id}"));
            Outcome::Fail { property, reason: f.to_string() }
        }
        Fault::InvalidRead { .. } => Outcome::Fail { property: "invalid-header-read".into(), reason: f.to_string() },
        Fault::RegisterOob { .. } => Outcome::Fail { property: "register-bounds".into(), reason: f.to_string() },
        Fault::EgressOverflow { .. } | Fault::IngressOverflow { .. } => {
            Outcome::Resource { kind: ResourceKind::ChannelCapacity, reason: f.to_string() }
        }
        Fault::RecircBound { .. } | Fault::DrainBound { .. } => Outcome::Resource { kind: ResourceKind::RecircBound, reason: f.to_string() },
    }
}

/// Worst fault of a step: a failure beats a resource limit.
fn step_fault(model: &SystemModel, faults: &[Fault]) -> Option<Outcome> {
    let all: Vec<Outcome> = faults.iter().map(|f| classify_fault(model, f)).collect();
    all.iter().find(|o| matches!(o, Outcome::Fail { .. })).or_else(|| all.first()).cloned()
}

struct Frame {
    id: u32,
    residuals: Vec<FormulaId>,
    pending: Vec<Step>,
}

struct Explorer<'a> {
    model: &'a mut SystemModel,
    cfg: Config,
    rng: StdRng,
    index: HashMap<Vec<u8>, u32>,
    visited: HashSet<(u32, Vec<FormulaId>)>,
    stats: Stats,
    resource: Option<(Outcome, Vec<Step>)>,
}

impl Explorer<'_> {
    fn state_id(&mut self, s: &GlobalState) -> u32 {
        let key = s.canonical();
        let next = self.index.len() as u32;
        *self.index.entry(key).or_insert(next)
    }

    fn progress(&mut self, residuals: &[FormulaId], s: &GlobalState) -> Vec<FormulaId> {
        let v = self.model.atom_values(s);
        residuals.iter().map(|&r| self.model.arena.progress(r, &v)).collect()
    }

    fn violated(&self, residuals: &[FormulaId]) -> Option<String> {
        residuals.iter().position(|&r| r == FALSE).map(|i| self.model.properties[i].name.clone())
    }

    fn unmet_at_end(&self, residuals: &[FormulaId]) -> Option<String> {
        residuals.iter().position(|&r| !self.model.arena.accepts_end(r)).map(|i| self.model.properties[i].name.clone())
    }

    fn order(&mut self, mut steps: Vec<Step>) -> Vec<Step> {
        match self.cfg.ordering {
            Ordering::Default => {}
            Ordering::Reversed => steps.reverse(),
            Ordering::Shuffled(_) => steps.shuffle(&mut self.rng),
        }
        // popped from the back
        steps.reverse();
        steps
    }

    fn run(&mut self) -> Verdict {
        let initial = self.model.initial_state();
        let fail = |property: String, reason: &str| Outcome::Fail { property, reason: reason.to_string() };
        let roots: Vec<FormulaId> = self.model.properties.iter().map(|p| p.formula).collect();
        let r0 = self.progress(&roots, &initial);
        let id0 = self.state_id(&initial);
        self.stats.states = 1;
        if let Some(p) = self.violated(&r0) {
            return self.finish(fail(p, "violated in the initial state"), initial, vec![]);
        }
        let succ = self.model.successors_with(&initial, self.cfg.parallel);
        let pending = self.order(succ);
        self.visited.insert((id0, r0.clone()));
        let mut stack = vec![Frame { id: id0, residuals: r0, pending }];
        let mut path: Vec<Step> = Vec::new();
        let mut on_stack: HashMap<(u32, Vec<FormulaId>), usize> = HashMap::new();
        on_stack.insert((id0, stack[0].residuals.clone()), 1);
        if stack[0].pending.is_empty() {
            if let Some(p) = self.unmet_at_end(&stack[0].residuals) {
                return self.finish(fail(p, "obligation unmet when the run ends"), initial, vec![]);
            }
        }
        while let Some(top) = stack.last_mut() {
            let Some(step) = top.pending.pop() else {
                let f = stack.pop().expect("non-empty");
                let key = (f.id, f.residuals);
                if let Some(c) = on_stack.get_mut(&key) {
                    *c -= 1;
                    if *c == 0 {
                        on_stack.remove(&key);
                    }
                }
                path.pop();
                continue;
            };
            let parent_res = top.residuals.clone();
            self.stats.transitions += 1;
            let id = self.state_id(&step.state);
            self.stats.states = self.index.len();
            path.push(step);
            let step = path.last().expect("just pushed");
            self.stats.depth = self.stats.depth.max(path.len());
            let fault = step_fault(self.model, &step.faults);
            if let Some(o @ Outcome::Fail { .. }) = fault {
                return self.finish(o, initial, path);
            }
            let state = step.state.clone();
            let res = self.progress(&parent_res, &state);
            if let Some(p) = self.violated(&res) {
                return self.finish(fail(p, "safety violation"), initial, path);
            }
            if let Some(o) = fault {
                if self.resource.is_none() {
                    self.resource = Some((o, path.clone()));
                }
                path.pop();
                continue;
            }
            let key = (id, res.clone());
            if on_stack.contains_key(&key) {
                // A cycle: the run ends here as far as finite-trace obligations go.
                if let Some(p) = self.unmet_at_end(&parent_res) {
                    path.pop();
                    return self.finish(fail(p, "obligation unmet on a cyclic run"), initial, path);
                }
                path.pop();
                continue;
            }
            if self.cfg.dedup && !self.visited.insert(key.clone()) {
                path.pop();
                continue;
            }
            if self.index.len() > self.cfg.budget {
                let o = Outcome::Resource { kind: ResourceKind::StateBudget, reason: format!("more than {} states", self.cfg.budget) };
                self.stats.states = self.cfg.budget;
                return self.finish(o, initial, path);
            }
            let succ = self.model.successors_with(&state, self.cfg.parallel);
            if succ.is_empty() {
                if let Some(p) = self.unmet_at_end(&res) {
                    return self.finish(fail(p, "obligation unmet when the run ends"), initial, path);
                }
            }
            let pending = self.order(succ);
            *on_stack.entry(key).or_insert(0) += 1;
            stack.push(Frame { id, residuals: res, pending });
        }
        match self.resource.take() {
            Some((o, p)) => self.finish(o, initial, p),
            None => self.finish(Outcome::Pass, initial, vec![]),
        }
    }

    fn finish(&self, outcome: Outcome, initial: GlobalState, path: Vec<Step>) -> Verdict {
        Verdict { outcome, stats: self.stats, initial, path }
    }
}

/// Explore every interleaving, stopping at the first violation.
pub fn explore(model: &mut SystemModel, cfg: Config) -> Verdict {
    let seed = match cfg.ordering {
        Ordering::Shuffled(s) => s,
        _ => 0,
    };
    Explorer {
        model,
        cfg,
        rng: StdRng::seed_from_u64(seed),
        index: HashMap::new(),
        visited: HashSet::new(),
        stats: Stats::default(),
        resource: None,
    }
    .run()
}

/// Every maximal run from the initial state, as label sequences. For small systems only.
pub fn enumerate_runs(model: &SystemModel, limit: usize) -> Vec<Vec<super::Label>> {
    let mut out = Vec::new();
    let mut stack = vec![(model.initial_state(), Vec::new())];
    while let Some((s, labels)) = stack.pop() {
        let succ = model.successors(&s);
        if succ.is_empty() {
            out.push(labels);
            if out.len() >= limit {
                break;
            }
            continue;
        }
        for st in succ.into_iter().rev() {
            let mut l = labels.clone();
            l.push(st.label);
            stack.push((st.state, l));
        }
    }
    out
}
