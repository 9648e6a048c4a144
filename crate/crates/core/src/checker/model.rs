//! The composed system: actors, links, hosts and property atoms over a global state.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::ltl::{Arena, FormulaId};
use crate::intent::{GlobalRule, HostInstr, HostProgram, ResolvedSpec};
use crate::parallel::par_map;
use crate::pir::EGRESS_PORT_WIDTH;
use crate::semantics::{actor_react, ActorState, Bounds, DeviceCtx, Fault, Layout, LayoutError, Links, Packet};
use crate::syntax::{eval, Env, EvalError, Expr, VarRef};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlobalState {
    pub actors: Vec<ActorState>,
    /// Last dispatched value of each observed packet variable.
    pub observations: Vec<u64>,
    /// Normalized program counter per host.
    pub hosts: Vec<usize>,
    /// Remaining loss budget per link.
    pub loss: Vec<u32>,
}

impl GlobalState {
    /// Injective byte encoding.
    pub fn canonical(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend((self.actors.len() as u32).to_le_bytes());
        for a in &self.actors {
            a.write_canonical(&mut out);
        }
        for list in [&self.observations] {
            out.extend((list.len() as u32).to_le_bytes());
            for v in list {
                out.extend(v.to_le_bytes());
            }
        }
        out.extend((self.hosts.len() as u32).to_le_bytes());
        for &h in &self.hosts {
            out.extend((h as u64).to_le_bytes());
        }
        out.extend((self.loss.len() as u32).to_le_bytes());
        for &l in &self.loss {
            out.extend(l.to_le_bytes());
        }
        out
    }
}

/// What one transition does.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Label {
    /// An atomic reaction; `lost` lists the indices of emitted events dropped by lossy links.
    React { actor: usize, lost: Vec<usize> },
    HostSend { host: usize },
    HostChoose { host: usize, alt: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedEvent {
    pub target: usize,
    pub packet: Packet,
    pub link: Option<usize>,
    pub lost: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub label: Label,
    pub state: GlobalState,
    pub faults: Vec<Fault>,
    pub notes: Vec<String>,
    /// Consumed packet of a reaction, or the packet a host sent.
    pub packet: Option<Packet>,
    pub events: Vec<EmittedEvent>,
}

#[derive(Debug, Clone)]
pub struct Property {
    pub name: String,
    pub formula: FormulaId,
    /// Indices into [`SystemModel::atoms`], in order of appearance.
    pub atoms: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SystemModel {
    pub aliases: Vec<String>,
    pub ctxs: Vec<DeviceCtx>,
    pub layout: Arc<Layout>,
    pub links: Links,
    pub hosts: Vec<HostProgram>,
    pub bounds: Bounds,
    pub arena: Arena,
    pub properties: Vec<Property>,
    /// Atom expressions over `At` references.
    pub atoms: Vec<Expr>,
    /// Global rules as written, for export.
    pub globals: Vec<GlobalRule>,
    /// Observed packet variables as (actor, variable).
    pub observed: Vec<(usize, VarRef)>,
    /// Names of local assertions by (device, id).
    pub assert_names: BTreeMap<(usize, usize), String>,
}

struct StateEnv<'a> {
    m: &'a SystemModel,
    s: &'a GlobalState,
}

impl Env for StateEnv<'_> {
    fn read(&self, v: &VarRef) -> Result<(u64, u32), EvalError> {
        let VarRef::At { actor, var } = v else { return Err(EvalError::Unbound(v.to_string())) };
        let a = self.m.aliases.iter().position(|x| x == actor).ok_or_else(|| EvalError::Unbound(v.to_string()))?;
        let ctx = &self.m.ctxs[a];
        match &**var {
            VarRef::Reg { name, index } => {
                let ri = ctx.reg_index(name).ok_or_else(|| EvalError::Unbound(v.to_string()))?;
                Ok((self.s.actors[a].registers[ri][*index as usize], ctx.prog.registers[ri].width))
            }
            inner => {
                let i = self.m.observed.iter().position(|(b, x)| *b == a && x == inner).ok_or_else(|| EvalError::Unbound(v.to_string()))?;
                Ok((self.s.observations[i], self.m.observed_width(i)))
            }
        }
    }
}

impl SystemModel {
    pub fn build(rs: &ResolvedSpec, bounds: Bounds) -> Result<SystemModel, BuildError> {
        if bounds.q_in == 0 || bounds.q_eg == 0 || bounds.recirc == 0 {
            return Err(BuildError::Invalid("bounds must be at least 1".into()));
        }
        let layout = Arc::new(Layout::unify(&rs.programs)?);
        let ctxs: Vec<DeviceCtx> = rs
            .aliases
            .iter()
            .zip(&rs.programs)
            .zip(&rs.entries)
            .map(|((a, p), e)| DeviceCtx::new(a, p.clone(), e.clone(), layout.clone()))
            .collect();
        for h in &rs.hosts {
            for ins in &h.code {
                if let HostInstr::Send { target, .. } = ins {
                    if *target >= ctxs.len() {
                        return Err(BuildError::Invalid(format!("host `{}` sends to an unknown device", h.name)));
                    }
                }
            }
        }
        let mut arena = Arena::new();
        let mut atoms: Vec<Expr> = Vec::new();
        let mut observed = Vec::new();
        let mut properties = Vec::new();
        for g in &rs.globals {
            for a in g.formula.atoms() {
                for v in a.vars() {
                    if let VarRef::At { actor, var } = v {
                        if !matches!(**var, VarRef::Reg { .. }) {
                            let d = rs.alias_index(actor).expect("resolved alias");
                            if !observed.contains(&(d, (**var).clone())) {
                                observed.push((d, (**var).clone()));
                            }
                        }
                    }
                }
            }
            let mut mine = Vec::new();
            let formula = arena.from_ltl(&g.formula, &mut |e| {
                let i = match atoms.iter().position(|x| x == e) {
                    Some(i) => i,
                    None => {
                        atoms.push(e.clone());
                        atoms.len() - 1
                    }
                };
                if !mine.contains(&i) {
                    mine.push(i);
                }
                i
            });
            properties.push(Property { name: g.name.clone(), formula, atoms: mine });
        }
        let assert_names = rs.asserts.iter().map(|a| ((a.device, a.id), a.name.clone())).collect();
        Ok(SystemModel {
            aliases: rs.aliases.clone(),
            ctxs,
            layout,
            links: Links { links: rs.links.clone() },
            hosts: rs.hosts.clone(),
            bounds,
            arena,
            properties,
            atoms,
            globals: rs.globals.clone(),
            observed,
            assert_names,
        })
    }

    fn observed_width(&self, i: usize) -> u32 {
        let (a, v) = &self.observed[i];
        match v {
            VarRef::Field { header, field } => self.layout.field_slot(header, field).map(|s| s.1).unwrap_or(64),
            VarRef::EgressPort => EGRESS_PORT_WIDTH,
            other => self.ctxs[*a].prog.var_width(other, &[]).unwrap_or(64),
        }
    }

    fn observe(&self, a: usize, p: &Packet, out: &mut [u64]) {
        for (i, (b, v)) in self.observed.iter().enumerate() {
            if *b != a {
                continue;
            }
            let ctx = &self.ctxs[a];
            out[i] = match v {
                VarRef::Field { header, field } => ctx.field(header, field).map(|(slot, ..)| p.fields[slot]).unwrap_or(0),
                VarRef::Meta(m) => ctx.meta_slot(m).and_then(|(i, _)| p.meta.get(i).copied()).unwrap_or(0),
                VarRef::EgressPort => p.egress_port,
                _ => 0,
            };
        }
    }

    pub fn initial_state(&self) -> GlobalState {
        GlobalState {
            actors: self.ctxs.iter().map(|c| ActorState { registers: c.initial_registers(), ingress: Default::default() }).collect(),
            observations: vec![0; self.observed.len()],
            hosts: self.hosts.iter().map(|h| h.normalize(0)).collect(),
            loss: self.links.links.iter().map(|l| l.loss).collect(),
        }
    }

    /// Atom values at a state.
    pub fn atom_values(&self, s: &GlobalState) -> Vec<bool> {
        let env = StateEnv { m: self, s };
        self.atoms.iter().map(|a| eval(a, &env).map(|v| v.v != 0).unwrap_or(false)).collect()
    }

    pub fn atom_value(&self, s: &GlobalState, e: &Expr) -> Result<u64, EvalError> {
        eval(e, &StateEnv { m: self, s }).map(|v| v.v)
    }

    pub fn host_packet(&self, fields: &[crate::intent::FieldInit]) -> Packet {
        let mut p = Packet::new(&self.layout, 0);
        for f in fields {
            if let Some((slot, w, hi)) = self.layout.field_slot(&f.header, &f.field) {
                p.fields[slot] = crate::syntax::mask(f.value, w);
                p.valid[hi] = true;
            }
        }
        p
    }

    /// Every transition enabled at `s`, in canonical order.
    pub fn successors(&self, s: &GlobalState) -> Vec<Step> {
        self.successors_with(s, false)
    }

    /// Like [`SystemModel::successors`], computing each entity's moves on the worker pool.
    pub fn successors_with(&self, s: &GlobalState, parallel: bool) -> Vec<Step> {
        let n = self.ctxs.len();
        let entities: Vec<usize> = (0..n + self.hosts.len()).collect();
        let parallel = parallel && entities.iter().filter(|&&e| e >= n || !s.actors[e].ingress.is_empty()).count() > 1;
        par_map(&entities, parallel, |&e| if e < n { self.react(s, e, None) } else { self.host_steps(s, e - n, None) })
            .into_iter()
            .flatten()
            .collect()
    }

    /// Apply one labelled transition, if enabled.
    pub fn apply(&self, s: &GlobalState, label: &Label) -> Option<Step> {
        match label {
            Label::React { actor, lost } => self.react(s, *actor, Some(lost)).into_iter().next(),
            Label::HostSend { host } | Label::HostChoose { host, .. } => {
                self.host_steps(s, *host, Some(label)).into_iter().find(|st| &st.label == label)
            }
        }
    }

    fn react(&self, s: &GlobalState, a: usize, only: Option<&Vec<usize>>) -> Vec<Step> {
        if a >= self.ctxs.len() {
            return vec![];
        }
        let Some(r) = actor_react(&self.ctxs[a], &s.actors[a], a, &self.links, &self.bounds) else { return vec![] };
        let mut base = s.clone();
        base.actors[a] = r.state.clone();
        if let Some(p) = &r.last_dispatched {
            self.observe(a, p, &mut base.observations);
        }
        // Events other devices receive, possibly lost on lossy links.
        let lossy: Vec<usize> = r
            .events
            .iter()
            .enumerate()
            .filter(|(_, e)| e.target() != a && e.link().is_some_and(|l| self.links.links[l].loss > 0))
            .map(|(i, _)| i)
            .collect();
        let mut choices: Vec<Vec<usize>> = Vec::new();
        let mut subset = |mask: u64| -> Option<Vec<usize>> {
            let lost: Vec<usize> = lossy.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &i)| i).collect();
            let mut need = vec![0u32; self.links.links.len()];
            for &i in &lost {
                need[r.events[i].link().expect("lossy link")] += 1;
            }
            need.iter().zip(&base.loss).all(|(n, b)| n <= b).then_some(lost)
        };
        match only {
            Some(l) => {
                if l.iter().all(|i| lossy.contains(i)) {
                    let mask = l.iter().map(|i| 1u64 << lossy.iter().position(|x| x == i).unwrap()).sum();
                    choices.extend(subset(mask));
                }
            }
            None => {
                let n = lossy.len().min(16);
                let mut masks: Vec<u64> = (0..1u64 << n).collect();
                masks.sort_by_key(|m| (m.count_ones(), *m));
                choices.extend(masks.into_iter().filter_map(&mut subset));
            }
        }
        choices
            .into_iter()
            .map(|lost| {
                let mut st = base.clone();
                let mut faults = r.faults.clone();
                let mut events = Vec::new();
                for (i, e) in r.events.iter().enumerate() {
                    let is_lost = lost.contains(&i);
                    if is_lost {
                        st.loss[e.link().expect("lossy link")] -= 1;
                    } else if e.target() != a {
                        let q = &mut st.actors[e.target()].ingress;
                        if q.len() >= self.bounds.q_in {
                            faults.push(Fault::IngressOverflow { target: self.aliases[e.target()].clone(), cap: self.bounds.q_in });
                        } else {
                            q.push_back(e.packet().clone());
                        }
                    }
                    events.push(EmittedEvent { target: e.target(), packet: e.packet().clone(), link: e.link(), lost: is_lost });
                }
                Step { label: Label::React { actor: a, lost }, state: st, faults, notes: r.notes.clone(), packet: Some(r.consumed.clone()), events }
            })
            .collect()
    }

    fn host_steps(&self, s: &GlobalState, h: usize, only: Option<&Label>) -> Vec<Step> {
        let Some(host) = self.hosts.get(h) else { return vec![] };
        let pc = s.hosts[h];
        match host.code.get(pc) {
            None => vec![],
            Some(HostInstr::Send { target, fields }) => {
                if only.is_some_and(|l| !matches!(l, Label::HostSend { .. })) || s.actors[*target].ingress.len() >= self.bounds.q_in {
                    return vec![];
                }
                let p = self.host_packet(fields);
                let mut st = s.clone();
                st.actors[*target].ingress.push_back(p.clone());
                st.hosts[h] = host.normalize(pc + 1);
                let ev = EmittedEvent { target: *target, packet: p.clone(), link: None, lost: false };
                vec![Step { label: Label::HostSend { host: h }, state: st, faults: vec![], notes: vec![], packet: Some(p), events: vec![ev] }]
            }
            Some(HostInstr::Choice(alts)) => alts
                .iter()
                .enumerate()
                .map(|(i, &start)| {
                    let mut st = s.clone();
                    st.hosts[h] = host.normalize(start);
                    Step { label: Label::HostChoose { host: h, alt: i }, state: st, faults: vec![], notes: vec![], packet: None, events: vec![] }
                })
                .collect(),
            Some(HostInstr::Jump(_)) => unreachable!("host pcs are normalized"),
        }
    }

    pub fn entity(&self, l: &Label) -> String {
        match l {
            Label::React { actor, .. } => self.aliases[*actor].clone(),
            Label::HostSend { host } | Label::HostChoose { host, .. } => self.hosts[*host].name.clone(),
        }
    }

    /// All layout fields of a packet by name.
    pub fn packet_fields(&self, p: &Packet) -> BTreeMap<String, u64> {
        let mut out = BTreeMap::new();
        for h in &self.layout.headers {
            for (fi, f) in h.fields.iter().enumerate() {
                out.insert(format!("{}.{}", h.name, f.name), p.fields[h.offset + fi]);
            }
        }
        out
    }
}
