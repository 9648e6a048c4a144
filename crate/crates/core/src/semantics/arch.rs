//! Architectural stages: parser, deparser, traffic manager, final dispatch, drain
//! and the atomic actor reaction.

use std::collections::VecDeque;

use super::device::{DeviceCtx, Exec, PacketEnv};
use super::packet::Packet;
use super::{ActorState, Bounds, Fault};
use crate::pir::{CloneSpec, Deparser, Emit, ParserMachine, Transition};
use crate::syntax::{eval, EvalError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub from: usize,
    /// `None` is the `ALL` fallback.
    pub port: Option<u64>,
    pub to: usize,
    /// How many messages the link may lose.
    pub loss: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Links {
    pub links: Vec<Link>,
}

impl Links {
    /// Index of the link carrying packets from `from` out of `port`.
    pub fn route(&self, from: usize, port: u64) -> Option<usize> {
        self.links
            .iter()
            .position(|l| l.from == from && l.port == Some(port))
            .or_else(|| self.links.iter().position(|l| l.from == from && l.port.is_none()))
    }
}

/// Which dispatch rule produced an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum FdRule {
    Recirculate,
    I2IClone,
    E2ESend,
    Forward,
}

/// An enqueue into some actor's ingress channel. Only [`final_dispatch`] creates these.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    target: usize,
    packet: Packet,
    rule: FdRule,
    link: Option<usize>,
}

impl Event {
    pub fn target(&self) -> usize {
        self.target
    }

    pub fn packet(&self) -> &Packet {
        &self.packet
    }

    pub fn into_packet(self) -> Packet {
        self.packet
    }

    pub fn rule(&self) -> FdRule {
        self.rule
    }

    /// Link used, `None` for events to the sender itself.
    pub fn link(&self) -> Option<usize> {
        self.link
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseOutcome {
    pub accepted: bool,
    pub note: Option<String>,
}

/// Walk the parser state machine, setting `.valid` for each extracted header.
pub fn parse_packet(ctx: &DeviceCtx, p: &mut Packet, machine: &ParserMachine) -> ParseOutcome {
    p.valid.iter_mut().for_each(|v| *v = false);
    let mut state = "start".to_string();
    loop {
        let st = machine.state(&state).expect("validated parser");
        for h in &st.extracts {
            let hi = ctx.layout.header_index(h).expect("header in layout");
            p.valid[hi] = true;
        }
        let next = match &st.transition {
            Transition::Accept => return ParseOutcome { accepted: true, note: None },
            Transition::Reject => "reject".to_string(),
            Transition::Goto(t) => t.clone(),
            Transition::Select { on, cases, default } => {
                let env = PacketEnv { ctx, p, params: &[], check_valid: true, regs: None };
                match eval(on, &env) {
                    Ok(v) => cases.iter().find(|(c, _)| *c == v.v).map(|(_, t)| t.clone()).unwrap_or_else(|| default.clone()),
                    Err(EvalError::InvalidHeader { header, field }) => {
                        p.drop = true;
                        return ParseOutcome {
                            accepted: false,
                            note: Some(format!("parser rejected: select on `{header}.{field}` before `{header}` was extracted")),
                        };
                    }
                    Err(e) => panic!("{e} in validated parser"),
                }
            }
        };
        match next.as_str() {
            "accept" => return ParseOutcome { accepted: true, note: None },
            "reject" => {
                p.drop = true;
                return ParseOutcome { accepted: false, note: Some(format!("parser rejected in state `{state}`")) };
            }
            _ => state = next,
        }
    }
}

/// Headers emitted on the executed path of the deparser, in layout order.
pub fn emit_set(ctx: &DeviceCtx, p: &Packet, dp: &Deparser) -> Vec<usize> {
    fn walk(ctx: &DeviceCtx, p: &Packet, es: &[Emit], out: &mut Vec<usize>) {
        for e in es {
            match e {
                Emit::Emit(h) => out.push(ctx.layout.header_index(h).expect("header in layout")),
                Emit::If(c, body) => {
                    let env = PacketEnv { ctx, p, params: &[], check_valid: false, regs: None };
                    if eval(c, &env).map(|v| v.v != 0).unwrap_or(false) {
                        walk(ctx, p, body, out);
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(ctx, p, &dp.emits, &mut out);
    out.sort_unstable();
    out.dedup();
    out
}

/// Validity afterwards is exactly membership in the emit set.
pub fn deparse_packet(ctx: &DeviceCtx, p: &mut Packet, dp: &Deparser) {
    let emitted = emit_set(ctx, p, dp);
    for (hi, v) in p.valid.iter_mut().enumerate() {
        *v = emitted.binary_search(&hi).is_ok();
    }
}

/// Build the egress channel for a post-ingress packet.
pub fn traffic_manager(p: Packet, bounds: &Bounds) -> Result<VecDeque<Packet>, Fault> {
    let mut e = VecDeque::new();
    if p.drop {
        return Ok(e);
    }
    let spec = p.clone_spec;
    let copy = match spec {
        CloneSpec::I2E => Some(p.duplicate()),
        CloneSpec::I2I => {
            let mut c = p.duplicate();
            c.i2i = true;
            Some(c)
        }
        _ => None,
    };
    e.push_back(p);
    if let Some(c) = copy {
        e.push_back(c);
    }
    if e.len() > bounds.q_eg {
        return Err(Fault::EgressOverflow { len: e.len(), cap: bounds.q_eg });
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dispatch {
    pub events: Vec<Event>,
    pub reinject: Vec<Packet>,
    pub fault: Option<Fault>,
    pub note: Option<String>,
}

fn outgoing(ctx: &DeviceCtx, p: &Packet) -> Packet {
    let mut q = p.clone();
    q.wire_image(&ctx.layout);
    q.meta.clear();
    q.clone_spec = CloneSpec::None;
    q.drop = false;
    q.recirc = false;
    q.i2i = false;
    q.egress_port = 0;
    q.recirc_count = 0;
    q
}

/// Translate a fully processed packet into ingress events and egress re-injections.
pub fn final_dispatch(ctx: &DeviceCtx, p: &Packet, me: usize, links: &Links, bounds: &Bounds) -> Dispatch {
    if p.drop {
        return Dispatch::default();
    }
    if p.recirc || p.i2i {
        let rule = if p.recirc { FdRule::Recirculate } else { FdRule::I2IClone };
        if p.recirc_count + 1 > bounds.recirc {
            return Dispatch { fault: Some(Fault::RecircBound { device: ctx.alias.clone(), bound: bounds.recirc }), ..Default::default() };
        }
        let mut q = p.clone();
        q.wire_image(&ctx.layout);
        for (i, m) in ctx.prog.metadata.iter().enumerate() {
            if m.transient {
                q.meta[i] = 0;
            }
        }
        q.clone_spec = CloneSpec::None;
        q.drop = false;
        q.recirc = false;
        q.i2i = false;
        q.recirc_count += 1;
        return Dispatch {
            events: vec![Event { target: me, packet: q, rule, link: None }],
            note: Some("metadata kept across the pass, transient fields cleared".into()),
            ..Default::default()
        };
    }
    let send = |rule| {
        links.route(me, p.egress_port).map(|li| Event { target: links.links[li].to, packet: outgoing(ctx, p), rule, link: Some(li) })
    };
    if p.clone_spec == CloneSpec::E2E {
        return Dispatch { events: send(FdRule::E2ESend).into_iter().collect(), reinject: vec![p.duplicate()], ..Default::default() };
    }
    match send(FdRule::Forward) {
        Some(ev) => Dispatch { events: vec![ev], ..Default::default() },
        None => Dispatch { note: Some(format!("no link for port {}: dropped", p.egress_port)), ..Default::default() },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DrainResult {
    pub events: Vec<Event>,
    pub faults: Vec<Fault>,
    pub notes: Vec<String>,
    pub fd_calls: usize,
    pub reinjections: usize,
    /// Packet as seen by the last final-dispatch call.
    pub last_dispatched: Option<Packet>,
}

/// Process the egress channel until empty: egress parser, egress body, egress deparser,
/// final dispatch; re-injected clones go to the front.
pub fn drain(ctx: &DeviceCtx, regs: &mut Vec<Vec<u64>>, mut e: VecDeque<Packet>, me: usize, links: &Links, bounds: &Bounds) -> DrainResult {
    let mut out = DrainResult::default();
    while let Some(mut p) = e.pop_front() {
        p.clone_spec = CloneSpec::None;
        let parsed = parse_packet(ctx, &mut p, ctx.prog.egress_parser());
        if let Some(n) = parsed.note {
            out.notes.push(format!("egress {n}"));
        }
        if parsed.accepted {
            Exec { ctx, regs, faults: &mut out.faults }.block(&ctx.prog.egress, &mut p, &[]);
            deparse_packet(ctx, &mut p, ctx.prog.egress_deparser());
        }
        let d = final_dispatch(ctx, &p, me, links, bounds);
        out.fd_calls += 1;
        out.last_dispatched = Some(p);
        out.events.extend(d.events);
        out.notes.extend(d.note);
        if let Some(f) = d.fault {
            out.faults.push(f);
        }
        for r in d.reinject.into_iter().rev() {
            out.reinjections += 1;
            if out.reinjections > bounds.drain {
                out.faults.push(Fault::DrainBound { device: ctx.alias.clone(), bound: bounds.drain });
                return out;
            }
            e.push_front(r);
        }
        if e.len() > bounds.q_eg {
            out.faults.push(Fault::EgressOverflow { len: e.len(), cap: bounds.q_eg });
            e.truncate(bounds.q_eg);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reaction {
    pub state: ActorState,
    /// Every event, including those already appended to the actor's own ingress.
    pub events: Vec<Event>,
    pub faults: Vec<Fault>,
    pub notes: Vec<String>,
    pub consumed: Packet,
    pub fd_calls: usize,
    pub initial_egress: usize,
    pub reinjections: usize,
    pub last_dispatched: Option<Packet>,
}

/// One complete, atomic reaction: dequeue, ingress pipeline, traffic manager, drain.
pub fn actor_react(ctx: &DeviceCtx, a: &ActorState, me: usize, links: &Links, bounds: &Bounds) -> Option<Reaction> {
    let mut state = a.clone();
    let p_in = state.ingress.pop_front()?;
    let mut p = p_in.clone();
    p.meta.resize(ctx.meta_len(), 0);
    let mut faults = Vec::new();
    let mut notes = Vec::new();
    let parsed = parse_packet(ctx, &mut p, &ctx.prog.parser);
    notes.extend(parsed.note);
    if parsed.accepted {
        Exec { ctx, regs: &mut state.registers, faults: &mut faults }.block(&ctx.prog.ingress, &mut p, &[]);
        deparse_packet(ctx, &mut p, &ctx.prog.deparser);
    }
    let (egress, initial) = match traffic_manager(p, bounds) {
        Ok(e) => {
            let n = e.len();
            (e, n)
        }
        Err(f) => {
            faults.push(f);
            (VecDeque::new(), 0)
        }
    };
    let d = drain(ctx, &mut state.registers, egress, me, links, bounds);
    faults.extend(d.faults);
    notes.extend(d.notes);
    for ev in &d.events {
        if ev.target == me {
            if state.ingress.len() >= bounds.q_in {
                faults.push(Fault::IngressOverflow { target: ctx.alias.clone(), cap: bounds.q_in });
            } else {
                state.ingress.push_back(ev.packet.clone());
            }
        }
    }
    Some(Reaction {
        state,
        events: d.events,
        faults,
        notes,
        consumed: p_in,
        fd_calls: d.fd_calls,
        initial_egress: initial,
        reinjections: d.reinjections,
        last_dispatched: d.last_dispatched,
    })
}
